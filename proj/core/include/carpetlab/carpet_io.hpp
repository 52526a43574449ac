#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "carpetlab/carpet.hpp"

namespace carpetlab {

// Carpet spec files are JSON with "type" in {"gatzouras-lalley", "baranski",
// "uniform"} and rationals written as "p/q" strings. Parsing canonicalizes
// row/cell order. Throws ParseError (with line/column when known).
Carpet parse_carpet(std::string_view json_text);
std::string serialize_carpet(const Carpet& carpet);

Carpet load_carpet(const std::filesystem::path& path);
void save_carpet(const std::filesystem::path& path, const Carpet& carpet);

}  // namespace carpetlab
