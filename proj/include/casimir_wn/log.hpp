#pragma once

#include <cstdlib>
#include <iostream>
#include <mutex>
#include <sstream>
#include <string>

namespace casimir_wn {
namespace log {

enum class Level { error = 0, warn = 1, info = 2, debug = 3 };

/// Log level is taken from CASIMIR_WN_LOG (error|warn|info|debug), default warn.
inline Level threshold() {
  static const Level lvl = [] {
    const char* env = std::getenv("CASIMIR_WN_LOG");
    if (!env) return Level::warn;
    std::string s(env);
    if (s == "error") return Level::error;
    if (s == "warn") return Level::warn;
    if (s == "info") return Level::info;
    if (s == "debug") return Level::debug;
    std::cerr << "[warn] unknown CASIMIR_WN_LOG value '" << s
              << "', using warn\n";
    return Level::warn;
  }();
  return lvl;
}

inline std::mutex& sink_mutex() {
  static std::mutex m;
  return m;
}

inline const char* tag(Level l) {
  switch (l) {
    case Level::error: return "error";
    case Level::warn: return "warn";
    case Level::info: return "info";
    default: return "debug";
  }
}

template <typename... Parts>
void emit(Level l, const Parts&... parts) {
  if (l > threshold()) return;
  std::ostringstream os;
  (os << ... << parts);
  std::lock_guard<std::mutex> g(sink_mutex());
  std::cerr << "[" << tag(l) << "] " << os.str() << "\n";
}

template <typename... P> void error(const P&... p) { emit(Level::error, p...); }
template <typename... P> void warn(const P&... p) { emit(Level::warn, p...); }
template <typename... P> void info(const P&... p) { emit(Level::info, p...); }
template <typename... P> void debug(const P&... p) { emit(Level::debug, p...); }

}  // namespace log
}  // namespace casimir_wn
