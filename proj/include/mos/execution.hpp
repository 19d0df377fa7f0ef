#pragma once

namespace mos {

/// Selects between the OpenMP path and the serial reference path.
/// Both produce bitwise-identical results; the serial path exists so tests
/// can pin down behavior and the benchmark can compare the two.
enum class Exec {
  Serial,
  Parallel,
};

}  // namespace mos
