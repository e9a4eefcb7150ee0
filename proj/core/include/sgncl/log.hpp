#pragma once

#include <string_view>

namespace sgncl::log {

enum class Level { debug, info, warn, error, off };

void set_level(Level level);
Level level();

void info(std::string_view message);
void warn(std::string_view message);

}  // namespace sgncl::log
