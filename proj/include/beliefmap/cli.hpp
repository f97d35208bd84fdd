#pragma once

#include <string>
#include <vector>

namespace bm::cli {

// Exit codes: 0 ok, 2 usage, 3 I/O or format, 4 numerical, 1 anything else.
int run(int argc, const char* const* argv);
// args excludes the program name.
int run(const std::vector<std::string>& args);

}  // namespace bm::cli
