#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace carpetlab::cli {

// args excludes the program name. Exit codes: 0 success, 1 domain error (JSON on err),
// 2 usage error.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace carpetlab::cli
