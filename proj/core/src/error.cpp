#include "sgncl/error.hpp"

namespace sgncl {

GuardExceeded::GuardExceeded(std::size_t origin, int order, std::string quantity,
                             std::size_t count, std::size_t limit)
    : Error("augmentation too large: graph " + std::to_string(origin) + ", order " +
            std::to_string(order) + ", " + quantity + " = " + std::to_string(count) +
            " exceeds limit " + std::to_string(limit)),
      origin_(origin),
      order_(order),
      quantity_(std::move(quantity)),
      count_(count),
      limit_(limit) {}

}  // namespace sgncl
