#include "qgf/quantizer.hpp"

#include <algorithm>
#include <cmath>

#include "qgf/error.hpp"

namespace qgf {
namespace {

void validate(const QuantizerConfig& cfg) {
  if (!(cfg.range > 0.0) || !std::isfinite(cfg.range)) {
    throw Error(ErrorKind::invalid_argument, "quantizer range must be positive and finite");
  }
  if (cfg.bits < 1 || cfg.bits > max_quantizer_bits) {
    throw Error(ErrorKind::invalid_argument, "quantizer bits must be in [1, 64]");
  }
}

}  // namespace

double QuantizerConfig::step() const {
  validate(*this);
  return std::ldexp(2.0 * range, -bits);
}

double quantize(double v, const QuantizerConfig& cfg) {
  const double delta = cfg.step();
  const double r = cfg.range;
  const double top_cell = std::ldexp(1.0, cfg.bits) - 1.0;
  const double clamped = std::clamp(v, -r, r);
  const double cell = std::clamp(std::floor((clamped + r) / delta), 0.0, top_cell);
  return std::min(-r + (cell + 0.5) * delta, r);
}

double expected_sq_error(const QuantizerConfig& cfg) {
  const double delta = cfg.step();
  return delta * delta / 12.0;
}

}  // namespace qgf
