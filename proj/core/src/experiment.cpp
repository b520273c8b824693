#include "flowpat/experiment.hpp"

#include <sstream>

namespace flowpat {

std::string ValidationResult::joined() const {
  std::ostringstream os;
  for (std::size_t i = 0; i < violations.size(); ++i) {
    if (i) os << "; ";
    os << violations[i];
  }
  return os.str();
}

namespace {
std::string fmt(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}
}  // namespace

ValidationResult validate_experiment(const Experiment& e,
                                     const PatternEnvelope& env,
                                     std::size_t min_trace_len) {
  ValidationResult r;
  const EnvelopeRow* row = env.find(e.label, e.inclination_deg);
  if (!row) {
    r.violations.push_back("no envelope row for inclination " +
                           fmt(e.inclination_deg) + " under pattern " +
                           std::string(to_string(e.label)));
  } else {
    if (e.u_gs_mps < row->u_gs.min_mps)
      r.violations.push_back("u_GS below " + fmt(row->u_gs.min_mps));
    if (e.u_gs_mps > row->u_gs.max_mps)
      r.violations.push_back("u_GS above " + fmt(row->u_gs.max_mps));
    if (e.u_os_mps < row->u_os.min_mps)
      r.violations.push_back("u_OS below " + fmt(row->u_os.min_mps));
    if (e.u_os_mps > row->u_os.max_mps)
      r.violations.push_back("u_OS above " + fmt(row->u_os.max_mps));
  }
  if (e.trace.size() < min_trace_len)
    r.violations.push_back("trace length " + std::to_string(e.trace.size()) +
                           " shorter than window length " +
                           std::to_string(min_trace_len));
  return r;
}

}  // namespace flowpat
