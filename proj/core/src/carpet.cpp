#include "carpetlab/carpet.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <sstream>

#include "carpetlab/errors.hpp"

namespace carpetlab {

namespace {

struct Span {
  Rational lo, hi;
  std::size_t index;
};

std::string idx(std::size_t i) { return std::to_string(i + 1); }

// Checks [0,1] containment and pairwise disjoint interiors of spans.
void check_spans(std::vector<Span> spans, const std::string& what, const std::string& where,
                 std::vector<Violation>& out) {
  for (const auto& s : spans) {
    if (s.lo.sign() < 0 || s.hi > Rational(1)) {
      out.push_back({what + "_outside_unit",
                     where + what + " " + idx(s.index) + " interval [" + s.lo.to_string() + ", " +
                         s.hi.to_string() + "] not inside [0,1]"});
    }
  }
  std::sort(spans.begin(), spans.end(), [](const Span& x, const Span& y) {
    return x.lo < y.lo || (x.lo == y.lo && x.index < y.index);
  });
  for (std::size_t i = 1; i < spans.size(); ++i) {
    for (std::size_t j = i; j-- > 0;) {
      if (spans[j].hi > spans[i].lo) {
        out.push_back({what + "_overlap", where + what + " interiors overlap (" + what + "s " +
                                              idx(std::min(spans[i].index, spans[j].index)) + " and " +
                                              idx(std::max(spans[i].index, spans[j].index)) + ")"});
      }
    }
  }
}

bool in_open_unit(const Rational& x) { return x.sign() > 0 && x < Rational(1); }

}  // namespace

std::size_t GLCarpet::map_count() const {
  std::size_t total = 0;
  for (const auto& r : rows) total += r.cells.size();
  return total;
}

AffineMap AffineMap::compose(const AffineMap& inner) const {
  return {x_scale * inner.x_scale, x_scale * inner.x_offset + x_offset, y_scale * inner.y_scale,
          y_scale * inner.y_offset + y_offset};
}

AffineMap AffineMap::identity() { return {Rational(1), Rational(0), Rational(1), Rational(0)}; }

bool ValidationReport::has(const std::string& code) const {
  return std::any_of(violations.begin(), violations.end(),
                     [&](const Violation& v) { return v.code == code; });
}

std::string ValidationReport::summary() const {
  std::ostringstream os;
  for (std::size_t i = 0; i < violations.size(); ++i) {
    if (i) os << "; ";
    os << violations[i].message;
  }
  return os.str();
}

ValidationReport validate_gl(const GLCarpet& carpet) {
  ValidationReport report;
  auto& out = report.violations;
  if (carpet.rows.empty()) out.push_back({"no_rows", "carpet has no rows (m = 0)"});
  std::vector<Span> row_spans;
  for (std::size_t i = 0; i < carpet.rows.size(); ++i) {
    const Row& row = carpet.rows[i];
    const std::string where = "row " + idx(i) + ": ";
    if (!in_open_unit(row.b)) out.push_back({"b_range", where + "b_i not in (0,1)"});
    if (row.cells.empty()) out.push_back({"no_cells", where + "row has no cells (n_i = 0)"});
    std::vector<Span> cell_spans;
    for (std::size_t j = 0; j < row.cells.size(); ++j) {
      const Cell& cell = row.cells[j];
      if (cell.a.sign() <= 0) out.push_back({"a_range", where + "cell " + idx(j) + " a_ij <= 0"});
      if (!(cell.a < row.b)) {
        out.push_back({"a_lt_b", where + "cell " + idx(j) + " a_ij < b_i fails (a=" +
                                     cell.a.to_string() + ", b=" + row.b.to_string() + ")"});
      }
      cell_spans.push_back({cell.c, cell.c + cell.a, j});
    }
    check_spans(cell_spans, "cell", where, out);
    row_spans.push_back({row.d, row.d + row.b, i});
  }
  check_spans(row_spans, "row", "", out);
  return report;
}

ValidationReport validate_baranski(const BaranskiCarpet& carpet) {
  ValidationReport report;
  auto& out = report.violations;
  const std::size_t n = carpet.col_widths.size();
  const std::size_t m = carpet.row_heights.size();
  if (n == 0) out.push_back({"no_cols", "no column widths"});
  if (m == 0) out.push_back({"no_rows", "no row heights"});
  Rational sa(0), sb(0);
  for (std::size_t i = 0; i < n; ++i) {
    if (!in_open_unit(carpet.col_widths[i])) {
      out.push_back({"a_range", "column " + idx(i) + ": a_i not in (0,1)"});
    }
    sa += carpet.col_widths[i];
  }
  for (std::size_t j = 0; j < m; ++j) {
    if (!in_open_unit(carpet.row_heights[j])) {
      out.push_back({"b_range", "row " + idx(j) + ": b_j not in (0,1)"});
    }
    sb += carpet.row_heights[j];
  }
  if (n > 0 && sa != Rational(1)) out.push_back({"sum_a", "Σa_i ≠ 1 (Σa_i = " + sa.to_string() + ")"});
  if (m > 0 && sb != Rational(1)) out.push_back({"sum_b", "Σb_j ≠ 1 (Σb_j = " + sb.to_string() + ")"});
  if (carpet.digits.empty()) out.push_back({"no_digits", "digit set D is empty"});
  std::vector<Digit> seen;
  for (const Digit& d : carpet.digits) {
    if (d.col >= n || d.row >= m) {
      out.push_back({"index_range", "digit (" + idx(d.col) + "," + idx(d.row) + ") index out of range"});
    }
    if (std::find(seen.begin(), seen.end(), d) != seen.end()) {
      out.push_back({"duplicate_digit", "digit (" + idx(d.col) + "," + idx(d.row) + ") repeated"});
    }
    seen.push_back(d);
  }
  return report;
}

ValidationReport validate_uniform(const UniformFibreCarpet& carpet) {
  ValidationReport report;
  auto& out = report.violations;
  if (!(carpet.a.sign() > 0 && carpet.a < carpet.b && carpet.b < Rational(1))) {
    out.push_back({"a_lt_b", "0 < a < b < 1 fails (a=" + carpet.a.to_string() +
                                 ", b=" + carpet.b.to_string() + ")"});
  }
  if (carpet.m == 0 || carpet.n == 0) out.push_back({"empty", "m and n must be positive"});
  if (carpet.row_offsets.size() != carpet.m) {
    out.push_back({"row_count", "row_offsets has " + std::to_string(carpet.row_offsets.size()) +
                                    " entries, m = " + std::to_string(carpet.m)});
  }
  if (carpet.cell_offsets.size() != carpet.m) {
    out.push_back({"row_count", "cell_offsets has " + std::to_string(carpet.cell_offsets.size()) +
                                    " rows, m = " + std::to_string(carpet.m)});
  }
  for (std::size_t i = 0; i < carpet.cell_offsets.size(); ++i) {
    if (carpet.cell_offsets[i].size() != carpet.n) {
      out.push_back({"cell_count", "row " + idx(i) + ": " + std::to_string(carpet.cell_offsets[i].size()) +
                                       " cells, n = " + std::to_string(carpet.n)});
    }
  }
  if (!out.empty()) return report;
  return validate_gl(to_gl(carpet));
}

ValidationReport validate(const Carpet& carpet) {
  return std::visit(
      [](const auto& c) -> ValidationReport {
        using T = std::decay_t<decltype(c)>;
        if constexpr (std::is_same_v<T, GLCarpet>) return validate_gl(c);
        else if constexpr (std::is_same_v<T, BaranskiCarpet>) return validate_baranski(c);
        else return validate_uniform(c);
      },
      carpet);
}

GLCarpet to_gl(const UniformFibreCarpet& carpet) {
  GLCarpet gl;
  for (std::size_t i = 0; i < carpet.row_offsets.size(); ++i) {
    Row row{carpet.b, carpet.row_offsets[i], {}};
    if (i < carpet.cell_offsets.size()) {
      for (const auto& c : carpet.cell_offsets[i]) row.cells.push_back({carpet.a, c});
    }
    gl.rows.push_back(std::move(row));
  }
  return gl;
}

std::optional<GLCarpet> to_gl(const BaranskiCarpet& carpet) {
  auto maps = as_maps(carpet);
  return gl_from_maps(maps);
}

std::optional<GLCarpet> gl_from_maps(const std::vector<AffineMap>& maps) {
  std::map<std::pair<Rational, Rational>, Row> rows;
  for (const auto& f : maps) {
    auto key = std::make_pair(f.y_offset, f.y_scale);
    auto& row = rows[key];
    row.b = f.y_scale;
    row.d = f.y_offset;
    row.cells.push_back({f.x_scale, f.x_offset});
  }
  GLCarpet gl;
  for (auto& [key, row] : rows) gl.rows.push_back(std::move(row));
  gl = canonical(std::move(gl));
  if (!validate_gl(gl).ok()) return std::nullopt;
  return gl;
}

std::vector<AffineMap> as_maps(const GLCarpet& carpet) {
  auto report = validate_gl(carpet);
  if (!report.ok()) throw PreconditionError("invalid carpet: " + report.summary());
  std::vector<AffineMap> maps;
  for (const auto& row : carpet.rows) {
    for (const auto& cell : row.cells) maps.push_back({cell.a, cell.c, row.b, row.d});
  }
  return maps;
}

std::vector<AffineMap> as_maps(const BaranskiCarpet& carpet) {
  auto report = validate_baranski(carpet);
  if (!report.ok()) throw PreconditionError("invalid carpet: " + report.summary());
  std::vector<Rational> xo(carpet.col_widths.size()), yo(carpet.row_heights.size());
  for (std::size_t i = 1; i < xo.size(); ++i) xo[i] = xo[i - 1] + carpet.col_widths[i - 1];
  for (std::size_t j = 1; j < yo.size(); ++j) yo[j] = yo[j - 1] + carpet.row_heights[j - 1];
  std::vector<AffineMap> maps;
  for (const Digit& d : carpet.digits) {
    maps.push_back({carpet.col_widths[d.col], xo[d.col], carpet.row_heights[d.row], yo[d.row]});
  }
  return maps;
}

std::vector<AffineMap> as_maps(const UniformFibreCarpet& carpet) {
  auto report = validate_uniform(carpet);
  if (!report.ok()) throw PreconditionError("invalid carpet: " + report.summary());
  return as_maps(to_gl(carpet));
}

std::vector<AffineMap> as_maps(const Carpet& carpet) {
  return std::visit([](const auto& c) { return as_maps(c); }, carpet);
}

GLCarpet canonical(GLCarpet carpet) {
  for (auto& row : carpet.rows) {
    std::stable_sort(row.cells.begin(), row.cells.end(),
                     [](const Cell& x, const Cell& y) { return x.c < y.c; });
  }
  std::stable_sort(carpet.rows.begin(), carpet.rows.end(),
                   [](const Row& x, const Row& y) { return x.d < y.d; });
  return carpet;
}

BaranskiCarpet canonical(BaranskiCarpet carpet) {
  std::sort(carpet.digits.begin(), carpet.digits.end());
  return carpet;
}

UniformFibreCarpet canonical(UniformFibreCarpet carpet) {
  std::vector<std::size_t> order(carpet.row_offsets.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
    return carpet.row_offsets[x] < carpet.row_offsets[y];
  });
  UniformFibreCarpet out = carpet;
  for (std::size_t i = 0; i < order.size(); ++i) {
    out.row_offsets[i] = carpet.row_offsets[order[i]];
    if (order[i] < carpet.cell_offsets.size()) {
      out.cell_offsets[i] = carpet.cell_offsets[order[i]];
      std::sort(out.cell_offsets[i].begin(), out.cell_offsets[i].end());
    }
  }
  return out;
}

Carpet canonical(Carpet carpet) {
  return std::visit([](auto c) -> Carpet { return canonical(std::move(c)); }, std::move(carpet));
}

bool operator==(const GLCarpet& x, const GLCarpet& y) {
  if (x.rows.size() != y.rows.size()) return false;
  for (std::size_t i = 0; i < x.rows.size(); ++i) {
    const Row& r = x.rows[i];
    const Row& s = y.rows[i];
    if (r.b != s.b || r.d != s.d || r.cells.size() != s.cells.size()) return false;
    for (std::size_t j = 0; j < r.cells.size(); ++j) {
      if (r.cells[j].a != s.cells[j].a || r.cells[j].c != s.cells[j].c) return false;
    }
  }
  return true;
}

bool operator==(const BaranskiCarpet& x, const BaranskiCarpet& y) {
  return x.col_widths == y.col_widths && x.row_heights == y.row_heights && x.digits == y.digits;
}

bool operator==(const UniformFibreCarpet& x, const UniformFibreCarpet& y) {
  return x.a == y.a && x.b == y.b && x.m == y.m && x.n == y.n && x.row_offsets == y.row_offsets &&
         x.cell_offsets == y.cell_offsets;
}

bool interiors_disjoint(const AffineMap& f, const AffineMap& g) {
  bool x_apart = f.x_offset + f.x_scale <= g.x_offset || g.x_offset + g.x_scale <= f.x_offset;
  bool y_apart = f.y_offset + f.y_scale <= g.y_offset || g.y_offset + g.y_scale <= f.y_offset;
  return x_apart || y_apart;
}

const char* type_name(const Carpet& carpet) {
  switch (carpet.index()) {
    case 0: return "gatzouras-lalley";
    case 1: return "baranski";
    default: return "uniform";
  }
}

}  // namespace carpetlab
