#pragma once

#include <cstddef>
#include <string>

namespace motionnet::log {

enum class Level { debug, info, warn, error, quiet };

void set_level(Level level);
Level level();

void info(const std::string& message);
void warn(const std::string& message);
void error(const std::string& message);

/// Number of warnings emitted since start (or the last reset), including suppressed ones.
std::size_t warning_count();
void reset_warning_count();

}  // namespace motionnet::log
