#pragma once

#include <string>
#include <vector>

#include "vsum/real.hpp"

VSUM_NS_BEGIN

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitData = 2;
inline constexpr int kExitNumeric = 3;

// Full command-line front end (train / summarize / evaluate / gradcheck /
// synth); args exclude the program name. Exit codes: 0 success, 1 usage,
// 2 data validation, 3 numeric failure.
int run_cli(const std::vector<std::string>& args);

VSUM_NS_END
