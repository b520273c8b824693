#pragma once

#include <string>
#include <vector>

#include "flowpat/envelope.hpp"
#include "flowpat/flow_pattern.hpp"
#include "flowpat/trace.hpp"

namespace flowpat {

// One rig run: operating point, label, and the recorded signal.
struct Experiment {
  std::string id;
  double inclination_deg = 0.0;
  double u_gs_mps = 0.0;
  double u_os_mps = 0.0;
  FlowPattern label = FlowPattern::DispersedBubble;
  CapacitanceTrace trace;
};

struct ValidationResult {
  std::vector<std::string> violations;

  bool ok() const { return violations.empty(); }
  std::string joined() const;
};

// Checks the experiment against the envelope declared for its label and the
// minimum trace length needed to cut one window. Violations are returned,
// never thrown.
ValidationResult validate_experiment(const Experiment& e,
                                     const PatternEnvelope& env,
                                     std::size_t min_trace_len = 500);

}  // namespace flowpat
