#include "flowpat/trace.hpp"

#include <algorithm>
#include <string>

#include "flowpat/errors.hpp"

namespace flowpat {

double clamp_voltage(double v) {
  return std::clamp(v, kCalibrationFloorV, kCalibrationCeilV);
}

CapacitanceTrace::CapacitanceTrace(double sample_rate_hz,
                                   std::vector<double> values)
    : sample_rate_hz_(sample_rate_hz), values_(std::move(values)) {
  if (sample_rate_hz_ <= 0.0)
    throw ConfigError("sample rate must be positive, got " +
                      std::to_string(sample_rate_hz_));
  if (values_.empty()) throw ConfigError("trace must hold at least one sample");
}

std::span<const double> CapacitanceTrace::view(std::size_t start,
                                               std::size_t len) const {
  return std::span<const double>(values_).subspan(start, len);
}

CapacitanceTrace CapacitanceTrace::clamped() const {
  std::vector<double> out(values_.size());
  std::transform(values_.begin(), values_.end(), out.begin(), clamp_voltage);
  return CapacitanceTrace(sample_rate_hz_, std::move(out));
}

bool CapacitanceTrace::all_in_calibration_range() const {
  return std::all_of(values_.begin(), values_.end(), [](double v) {
    return v >= kCalibrationFloorV && v <= kCalibrationCeilV;
  });
}

}  // namespace flowpat
