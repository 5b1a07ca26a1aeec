#include "vsum/log.hpp"

#include <cstdlib>
#include <iostream>

VSUM_NS_BEGIN

LogLevel log_level() {
    static const LogLevel level = [] {
        const char* env = std::getenv("VSUM_LOG");
        if (!env) return LogLevel::kInfo;
        const std::string s(env);
        if (s == "quiet") return LogLevel::kQuiet;
        if (s == "debug") return LogLevel::kDebug;
        return LogLevel::kInfo;
    }();
    return level;
}

void log_warn(const std::string& msg) {
    if (log_level() >= LogLevel::kInfo) {
        std::cerr << "warning: " << msg << "\n";
    }
}

void log_info(const std::string& msg) {
    if (log_level() >= LogLevel::kInfo) {
        std::cerr << msg << "\n";
    }
}

void log_debug(const std::string& msg) {
    if (log_level() >= LogLevel::kDebug) {
        std::cerr << "debug: " << msg << "\n";
    }
}

VSUM_NS_END
