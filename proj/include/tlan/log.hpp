#pragma once

#include <cstdio>
#include <cstdlib>
#include <cstring>

namespace tlan::log {

enum class Level { kError = 0, kWarn = 1, kInfo = 2, kDebug = 3 };

/// Log level from TLAN_LOG (error|warn|info|debug); defaults to warn.
inline Level level() {
  static Level lv = [] {
    const char* e = std::getenv("TLAN_LOG");
    if (!e) return Level::kWarn;
    if (std::strcmp(e, "error") == 0) return Level::kError;
    if (std::strcmp(e, "info") == 0) return Level::kInfo;
    if (std::strcmp(e, "debug") == 0) return Level::kDebug;
    return Level::kWarn;
  }();
  return lv;
}

template <typename... Args>
void emit(Level lv, const char* tag, const char* fmt, Args... args) {
  if (lv > level()) return;
  std::fprintf(stderr, "[%s] ", tag);
  std::fprintf(stderr, fmt, args...);
  std::fprintf(stderr, "\n");
}

template <typename... Args>
void error(const char* fmt, Args... args) {
  emit(Level::kError, "error", fmt, args...);
}
template <typename... Args>
void warn(const char* fmt, Args... args) {
  emit(Level::kWarn, "warn", fmt, args...);
}
template <typename... Args>
void info(const char* fmt, Args... args) {
  emit(Level::kInfo, "info", fmt, args...);
}
template <typename... Args>
void debug(const char* fmt, Args... args) {
  emit(Level::kDebug, "debug", fmt, args...);
}

}  // namespace tlan::log
