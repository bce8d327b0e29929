#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace homsim::cli {

// Exit codes: 0 success, 2 configuration error, 3 data error,
// 4 non-convergence, 1 anything else.
inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitData = 3;
inline constexpr int kExitNonConvergence = 4;

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run(int argc, char** argv);

}  // namespace homsim::cli
