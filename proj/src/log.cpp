#include "motionnet/log.hpp"

#include <atomic>
#include <iostream>
#include <mutex>

namespace motionnet::log {

namespace {
std::atomic<Level> g_level{Level::info};
std::atomic<std::size_t> g_warnings{0};
std::mutex g_mutex;

void emit(Level lvl, const char* tag, const std::string& message) {
  if (lvl < g_level.load()) return;
  std::lock_guard lock(g_mutex);
  std::cerr << '[' << tag << "] " << message << '\n';
}
}  // namespace

void set_level(Level level) { g_level = level; }
Level level() { return g_level; }

void info(const std::string& message) { emit(Level::info, "info", message); }

void warn(const std::string& message) {
  ++g_warnings;
  emit(Level::warn, "warn", message);
}

void error(const std::string& message) { emit(Level::error, "error", message); }

std::size_t warning_count() { return g_warnings; }
void reset_warning_count() { g_warnings = 0; }

}  // namespace motionnet::log
