#pragma once

#include <string>

namespace sgncl {

// Shortest decimal form that parses back to the same double; '.' separator
// regardless of locale.
std::string format_double(double value);

}  // namespace sgncl
