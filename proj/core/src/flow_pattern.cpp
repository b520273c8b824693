#include "flowpat/flow_pattern.hpp"

#include <string>

#include "flowpat/errors.hpp"

namespace flowpat {

namespace {
constexpr std::array<std::string_view, kNumPatterns> kNames = {
    "DispersedBubble", "Plug",           "ElongatedBubble", "Slug",
    "SlugChurn",       "StratifiedWavy", "Annular"};
}

FlowPattern pattern_from_code(int code) {
  if (code < 0 || code >= kNumPatterns)
    throw ConfigError("flow pattern code out of range: " + std::to_string(code));
  return static_cast<FlowPattern>(code);
}

std::string_view to_string(FlowPattern p) {
  return kNames[static_cast<std::size_t>(pattern_code(p))];
}

std::optional<FlowPattern> try_parse_pattern(std::string_view name) {
  for (int i = 0; i < kNumPatterns; ++i)
    if (kNames[static_cast<std::size_t>(i)] == name)
      return static_cast<FlowPattern>(i);
  return std::nullopt;
}

FlowPattern parse_pattern(std::string_view name) {
  if (auto p = try_parse_pattern(name)) return *p;
  throw DataError("unknown flow pattern name: \"" + std::string(name) + "\"");
}

}  // namespace flowpat
