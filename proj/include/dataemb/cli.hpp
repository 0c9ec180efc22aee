#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace dataemb::cli {

// Exit codes.
inline constexpr int kOk = 0;
inline constexpr int kUsage = 1;
inline constexpr int kData = 2;
inline constexpr int kNumeric = 3;

// Runs one command. `args` excludes the program name. Status goes to `out`;
// failures print one line "error<TAB>usage|data|numeric<TAB>message" to `err`.
int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int dispatch(int argc, char** argv);

}  // namespace dataemb::cli
