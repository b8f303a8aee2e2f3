#pragma once

namespace qgf {

/// Uniform midrise quantizer on [-range, range] with 2^bits cells.
struct QuantizerConfig {
  double range = 1.0;
  int bits = 8;

  double step() const;
};

inline constexpr int max_quantizer_bits = 64;

/// Saturating: inputs outside [-range, range] land in the outermost cells.
double quantize(double v, const QuantizerConfig& cfg);

/// White-noise model: step^2 / 12 = range^2 / 3 * 2^(-2 bits).
double expected_sq_error(const QuantizerConfig& cfg);

}  // namespace qgf
