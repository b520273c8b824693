#include "flowpat/envelope.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "flowpat/errors.hpp"

namespace flowpat {

namespace {
bool same_inclination(double a, double b) {
  // Inclinations are exact table constants; tolerance only guards against
  // round-tripping through text formats.
  return std::abs(a - b) < 1e-9;
}
}  // namespace

PatternEnvelope::PatternEnvelope(std::vector<EnvelopeRow> rows)
    : rows_(std::move(rows)) {
  for (const auto& r : rows_) {
    if (r.u_gs.min_mps > r.u_gs.max_mps || r.u_os.min_mps > r.u_os.max_mps)
      throw ConfigError("envelope row for " + std::string(to_string(r.pattern)) +
                        " has an inverted velocity range");
  }
  for (std::size_t i = 0; i < rows_.size(); ++i)
    for (std::size_t j = i + 1; j < rows_.size(); ++j)
      if (rows_[i].pattern == rows_[j].pattern &&
          same_inclination(rows_[i].inclination_deg, rows_[j].inclination_deg))
        throw ConfigError("duplicate envelope row for " +
                          std::string(to_string(rows_[i].pattern)) + " at " +
                          std::to_string(rows_[i].inclination_deg) + " deg");
}

const EnvelopeRow* PatternEnvelope::find(FlowPattern p,
                                         double inclination_deg) const {
  for (const auto& r : rows_)
    if (r.pattern == p && same_inclination(r.inclination_deg, inclination_deg))
      return &r;
  return nullptr;
}

std::vector<EnvelopeRow> PatternEnvelope::rows_for(FlowPattern p) const {
  std::vector<EnvelopeRow> out;
  for (const auto& r : rows_)
    if (r.pattern == p) out.push_back(r);
  return out;
}

bool PatternEnvelope::covers_all_patterns() const {
  for (FlowPattern p : all_patterns())
    if (rows_for(p).empty()) return false;
  return true;
}

PatternEnvelope PatternEnvelope::restricted_to(
    std::span<const FlowPattern> patterns) const {
  std::vector<EnvelopeRow> out;
  for (const auto& r : rows_)
    if (std::find(patterns.begin(), patterns.end(), r.pattern) !=
        patterns.end())
      out.push_back(r);
  return PatternEnvelope(std::move(out));
}

PatternEnvelope default_envelope() {
  using P = FlowPattern;
  // u_GS and u_OS ranges in m/s per (pattern, inclination).
  std::vector<EnvelopeRow> rows = {
      {P::DispersedBubble, 0.0, {0.000, 0.100}, {0.675, 1.120}},
      {P::DispersedBubble, 15.0, {0.000, 0.080}, {0.224, 1.120}},
      {P::DispersedBubble, 30.0, {0.000, 0.100}, {0.400, 1.120}},

      {P::Plug, 15.0, {0.127, 0.500}, {0.530, 1.100}},
      {P::Plug, 30.0, {0.051, 0.314}, {0.210, 1.100}},

      {P::ElongatedBubble, 0.0, {0.150, 0.740}, {0.420, 1.100}},
      {P::ElongatedBubble, 15.0, {0.250, 0.750}, {0.320, 1.100}},
      {P::ElongatedBubble, 30.0, {0.055, 0.576}, {0.110, 1.100}},

      {P::Slug, 0.0, {0.370, 2.290}, {0.316, 1.100}},
      {P::Slug, 15.0, {0.700, 2.180}, {0.120, 1.100}},
      {P::Slug, 30.0, {0.470, 2.860}, {0.110, 0.950}},

      {P::SlugChurn, 0.0, {2.110, 3.740}, {0.425, 1.100}},
      {P::SlugChurn, 15.0, {2.900, 4.400}, {0.110, 1.100}},
      {P::SlugChurn, 30.0, {2.000, 4.290}, {0.100, 1.100}},

      {P::StratifiedWavy, 0.0, {1.240, 3.000}, {0.100, 0.320}},

      {P::Annular, 0.0, {4.480, 5.000}, {0.310, 1.100}},
      {P::Annular, 15.0, {4.750, 5.000}, {0.106, 1.100}},
      {P::Annular, 30.0, {4.000, 5.000}, {0.110, 1.100}},
  };
  return PatternEnvelope(std::move(rows));
}

}  // namespace flowpat
