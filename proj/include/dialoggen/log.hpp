#ifndef DIALOGGEN_LOG_HPP
#define DIALOGGEN_LOG_HPP

#include <iostream>
#include <mutex>
#include <string>

namespace dialoggen::log {

enum class Level { debug = 0, info = 1, warn = 2, error = 3 };

inline Level& min_level() {
  static Level level = Level::info;
  return level;
}

inline std::mutex& mutex() {
  static std::mutex m;
  return m;
}

inline void emit(Level level, const std::string& msg) {
  if (level < min_level()) return;
  static const char* names[] = {"DEBUG", "INFO", "WARN", "ERROR"};
  std::lock_guard<std::mutex> lock(mutex());
  std::cerr << "[" << names[static_cast<int>(level)] << "] " << msg << "\n";
}

inline void debug(const std::string& msg) { emit(Level::debug, msg); }
inline void info(const std::string& msg) { emit(Level::info, msg); }
inline void warn(const std::string& msg) { emit(Level::warn, msg); }
inline void error(const std::string& msg) { emit(Level::error, msg); }

}  // namespace dialoggen::log

#endif  // DIALOGGEN_LOG_HPP
