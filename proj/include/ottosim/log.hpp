#pragma once

#include <cstdlib>
#include <iostream>
#include <mutex>
#include <string>
#include <string_view>

// Verbosity is controlled by OTTOSIM_LOG (error|warn|info|debug). Logging never
// influences results.
namespace ottosim::log {

enum class Level { error = 0, warn = 1, info = 2, debug = 3 };

inline Level threshold() {
    static const Level level = [] {
        const char* env = std::getenv("OTTOSIM_LOG");
        if (env == nullptr) return Level::warn;
        std::string_view v{env};
        if (v == "error") return Level::error;
        if (v == "info") return Level::info;
        if (v == "debug") return Level::debug;
        return Level::warn;
    }();
    return level;
}

inline void write(Level level, std::string_view msg) {
    if (static_cast<int>(level) > static_cast<int>(threshold())) return;
    static std::mutex mutex;
    static constexpr const char* names[] = {"error", "warn", "info", "debug"};
    std::lock_guard lock{mutex};
    std::cerr << "[ottosim:" << names[static_cast<int>(level)] << "] " << msg << '\n';
}

inline void warn(std::string_view msg) { write(Level::warn, msg); }
inline void info(std::string_view msg) { write(Level::info, msg); }
inline void debug(std::string_view msg) { write(Level::debug, msg); }

} // namespace ottosim::log
