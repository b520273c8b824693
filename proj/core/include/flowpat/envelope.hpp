#pragma once

#include <span>
#include <vector>

#include "flowpat/flow_pattern.hpp"

namespace flowpat {

struct VelocityRange {
  double min_mps = 0.0;
  double max_mps = 0.0;

  bool contains(double v) const { return v >= min_mps && v <= max_mps; }
};

// Operating envelope for one (pattern, inclination) combination.
struct EnvelopeRow {
  FlowPattern pattern;
  double inclination_deg;
  VelocityRange u_gs;  // superficial gas velocity
  VelocityRange u_os;  // superficial liquid (oil) velocity
};

// The set of (pattern, inclination) -> velocity-range rows that defines which
// operating points are admissible for each flow pattern.
class PatternEnvelope {
 public:
  // Throws ConfigError on an inverted range or a duplicate
  // (pattern, inclination) key.
  explicit PatternEnvelope(std::vector<EnvelopeRow> rows);

  std::span<const EnvelopeRow> rows() const { return rows_; }

  // nullptr when no row exists for the combination.
  const EnvelopeRow* find(FlowPattern p, double inclination_deg) const;

  std::vector<EnvelopeRow> rows_for(FlowPattern p) const;

  // True when every one of the 7 patterns has at least one row.
  bool covers_all_patterns() const;

  // Envelope restricted to a subset of patterns (testing / partial corpora).
  PatternEnvelope restricted_to(std::span<const FlowPattern> patterns) const;

 private:
  std::vector<EnvelopeRow> rows_;
};

// The published velocity/inclination envelope used for dataset building:
// 18 rows over inclinations {0, 15, 30} degrees.
PatternEnvelope default_envelope();

}  // namespace flowpat
