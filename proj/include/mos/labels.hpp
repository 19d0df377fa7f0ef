#pragma once

#include <cstdint>

namespace mos {

/// Per-point motion state. Ignore marks points excluded from metrics
/// (unlabeled/outlier ground truth, or points with no pixel).
enum class MovingLabel : std::uint8_t {
  Static = 0,
  Moving = 1,
  Ignore = 2,
};

}  // namespace mos
