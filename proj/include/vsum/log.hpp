#pragma once

#include <string>

#include "vsum/real.hpp"

VSUM_NS_BEGIN

// Verbosity is read once from the VSUM_LOG environment variable:
// "quiet", "info" (default) or "debug".
enum class LogLevel { kQuiet = 0, kInfo = 1, kDebug = 2 };

LogLevel log_level();
void log_warn(const std::string& msg);
void log_info(const std::string& msg);
void log_debug(const std::string& msg);

VSUM_NS_END
