#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace flowpat {

inline constexpr double kCalibrationFloorV = 0.0;
inline constexpr double kCalibrationCeilV = 5.0;

// Clamp a voltage to the transducer's calibrated output range. Idempotent.
double clamp_voltage(double v);

// A calibrated single-channel capacitance signal sampled at a fixed rate.
// Immutable after construction and safe to share across threads.
class CapacitanceTrace {
 public:
  // Throws ConfigError on empty values or non-positive sample rate.
  CapacitanceTrace(double sample_rate_hz, std::vector<double> values);

  double sample_rate_hz() const { return sample_rate_hz_; }
  const std::vector<double>& values() const { return values_; }
  std::size_t size() const { return values_.size(); }
  double duration_s() const {
    return static_cast<double>(values_.size()) / sample_rate_hz_;
  }

  // Contiguous view [start, start + len). Caller guarantees bounds.
  std::span<const double> view(std::size_t start, std::size_t len) const;

  // Copy with every sample clamped to [0, 5] V.
  CapacitanceTrace clamped() const;

  bool all_in_calibration_range() const;

 private:
  double sample_rate_hz_;
  std::vector<double> values_;
};

}  // namespace flowpat
