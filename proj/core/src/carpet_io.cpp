#include "carpetlab/carpet_io.hpp"

#include <fstream>
#include <sstream>

#include "carpetlab/errors.hpp"
#include "json.hpp"

namespace carpetlab {

namespace {

using Json = nlohmann::ordered_json;

std::pair<std::size_t, std::size_t> line_column(std::string_view text, std::size_t offset) {
  std::size_t line = 1, col = 1;
  for (std::size_t i = 0; i < offset && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return {line, col};
}

const Json& field(const Json& obj, const char* key, const std::string& where) {
  if (!obj.is_object() || !obj.contains(key)) {
    throw ParseError(where + ": missing field \"" + key + "\"");
  }
  return obj.at(key);
}

Rational rational(const Json& v, const std::string& where) {
  if (v.is_string()) {
    try {
      return Rational::parse(v.get<std::string>());
    } catch (const ParseError& e) {
      throw ParseError(where + ": " + e.what());
    }
  }
  if (v.is_number_integer()) return Rational(v.get<long>());
  throw ParseError(where + ": expected a rational string \"p/q\"");
}

std::size_t count(const Json& v, const std::string& where) {
  if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<long>() >= 0)) {
    throw ParseError(where + ": expected a non-negative integer");
  }
  return v.get<std::size_t>();
}

const Json& array(const Json& v, const std::string& where) {
  if (!v.is_array()) throw ParseError(where + ": expected an array");
  return v;
}

Carpet parse_gl(const Json& doc) {
  GLCarpet carpet;
  const Json& rows = array(field(doc, "rows", "carpet"), "rows");
  for (std::size_t i = 0; i < rows.size(); ++i) {
    std::string where = "rows[" + std::to_string(i) + "]";
    Row row{rational(field(rows[i], "b", where), where + ".b"),
            rational(field(rows[i], "d", where), where + ".d"),
            {}};
    const Json& cells = array(field(rows[i], "cells", where), where + ".cells");
    for (std::size_t j = 0; j < cells.size(); ++j) {
      std::string cw = where + ".cells[" + std::to_string(j) + "]";
      row.cells.push_back({rational(field(cells[j], "a", cw), cw + ".a"),
                           rational(field(cells[j], "c", cw), cw + ".c")});
    }
    carpet.rows.push_back(std::move(row));
  }
  return canonical(std::move(carpet));
}

Carpet parse_baranski(const Json& doc) {
  BaranskiCarpet carpet;
  const Json& a = array(field(doc, "col_widths", "carpet"), "col_widths");
  for (std::size_t i = 0; i < a.size(); ++i) {
    carpet.col_widths.push_back(rational(a[i], "col_widths[" + std::to_string(i) + "]"));
  }
  const Json& b = array(field(doc, "row_heights", "carpet"), "row_heights");
  for (std::size_t j = 0; j < b.size(); ++j) {
    carpet.row_heights.push_back(rational(b[j], "row_heights[" + std::to_string(j) + "]"));
  }
  const Json& digits = array(field(doc, "digits", "carpet"), "digits");
  for (std::size_t k = 0; k < digits.size(); ++k) {
    std::string where = "digits[" + std::to_string(k) + "]";
    const Json& d = array(digits[k], where);
    if (d.size() != 2) throw ParseError(where + ": expected [column, row]");
    std::size_t col = count(d[0], where), row = count(d[1], where);
    if (col == 0 || row == 0) throw ParseError(where + ": digit indices are 1-based");
    carpet.digits.push_back({col - 1, row - 1});
  }
  return canonical(std::move(carpet));
}

Carpet parse_uniform(const Json& doc) {
  UniformFibreCarpet carpet;
  carpet.a = rational(field(doc, "a", "carpet"), "a");
  carpet.b = rational(field(doc, "b", "carpet"), "b");
  carpet.m = count(field(doc, "m", "carpet"), "m");
  carpet.n = count(field(doc, "n", "carpet"), "n");
  const Json& rows = array(field(doc, "row_offsets", "carpet"), "row_offsets");
  for (std::size_t i = 0; i < rows.size(); ++i) {
    carpet.row_offsets.push_back(rational(rows[i], "row_offsets[" + std::to_string(i) + "]"));
  }
  const Json& cells = array(field(doc, "cell_offsets", "carpet"), "cell_offsets");
  for (std::size_t i = 0; i < cells.size(); ++i) {
    std::string where = "cell_offsets[" + std::to_string(i) + "]";
    std::vector<Rational> row;
    const Json& r = array(cells[i], where);
    for (std::size_t j = 0; j < r.size(); ++j) {
      row.push_back(rational(r[j], where + "[" + std::to_string(j) + "]"));
    }
    carpet.cell_offsets.push_back(std::move(row));
  }
  return canonical(std::move(carpet));
}

}  // namespace

Carpet parse_carpet(std::string_view json_text) {
  Json doc;
  try {
    doc = Json::parse(json_text.begin(), json_text.end());
  } catch (const nlohmann::json::parse_error& e) {
    auto [line, col] = line_column(json_text, e.byte > 0 ? e.byte - 1 : 0);
    throw ParseError("malformed JSON at line " + std::to_string(line) + ", column " +
                         std::to_string(col),
                     line, col);
  }
  const Json& type = field(doc, "type", "carpet");
  if (!type.is_string()) throw ParseError("carpet: \"type\" must be a string");
  const std::string t = type.get<std::string>();
  if (t == "gatzouras-lalley") return parse_gl(doc);
  if (t == "baranski") return parse_baranski(doc);
  if (t == "uniform") return parse_uniform(doc);
  throw ParseError("carpet: unknown type \"" + t + "\"");
}

std::string serialize_carpet(const Carpet& carpet) {
  Json doc;
  doc["type"] = type_name(carpet);
  if (const auto* gl = std::get_if<GLCarpet>(&carpet)) {
    Json rows = Json::array();
    for (const auto& row : gl->rows) {
      Json cells = Json::array();
      for (const auto& cell : row.cells) {
        cells.push_back({{"a", cell.a.to_string()}, {"c", cell.c.to_string()}});
      }
      rows.push_back({{"b", row.b.to_string()}, {"d", row.d.to_string()}, {"cells", cells}});
    }
    doc["rows"] = rows;
  } else if (const auto* bk = std::get_if<BaranskiCarpet>(&carpet)) {
    Json a = Json::array(), b = Json::array(), d = Json::array();
    for (const auto& x : bk->col_widths) a.push_back(x.to_string());
    for (const auto& y : bk->row_heights) b.push_back(y.to_string());
    for (const auto& g : bk->digits) d.push_back(Json::array({g.col + 1, g.row + 1}));
    doc["col_widths"] = a;
    doc["row_heights"] = b;
    doc["digits"] = d;
  } else {
    const auto& u = std::get<UniformFibreCarpet>(carpet);
    doc["a"] = u.a.to_string();
    doc["b"] = u.b.to_string();
    doc["m"] = u.m;
    doc["n"] = u.n;
    Json rows = Json::array(), cells = Json::array();
    for (const auto& d : u.row_offsets) rows.push_back(d.to_string());
    for (const auto& r : u.cell_offsets) {
      Json row = Json::array();
      for (const auto& c : r) row.push_back(c.to_string());
      cells.push_back(row);
    }
    doc["row_offsets"] = rows;
    doc["cell_offsets"] = cells;
  }
  return doc.dump(2) + "\n";
}

Carpet load_carpet(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open carpet file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_carpet(ss.str());
}

void save_carpet(const std::filesystem::path& path, const Carpet& carpet) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << serialize_carpet(carpet);
}

}  // namespace carpetlab
