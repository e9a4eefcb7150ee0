#include "sgncl/csv.hpp"

#include <array>
#include <charconv>

namespace sgncl {

std::string format_double(double value) {
  std::array<char, 64> buf{};
  auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value);
  return std::string(buf.data(), ptr);
}

}  // namespace sgncl
