#pragma once

#include <array>
#include <optional>
#include <string_view>

namespace flowpat {

// The seven two-phase flow patterns. Codes 0..6 are stable and are the single
// source of truth for class indices everywhere (labels, confusion matrices,
// model output order).
enum class FlowPattern : int {
  DispersedBubble = 0,
  Plug = 1,
  ElongatedBubble = 2,
  Slug = 3,
  SlugChurn = 4,
  StratifiedWavy = 5,
  Annular = 6,
};

inline constexpr int kNumPatterns = 7;

constexpr std::array<FlowPattern, kNumPatterns> all_patterns() {
  return {FlowPattern::DispersedBubble, FlowPattern::Plug,
          FlowPattern::ElongatedBubble, FlowPattern::Slug,
          FlowPattern::SlugChurn,       FlowPattern::StratifiedWavy,
          FlowPattern::Annular};
}

constexpr int pattern_code(FlowPattern p) { return static_cast<int>(p); }

// Throws ConfigError if code is outside 0..6.
FlowPattern pattern_from_code(int code);

std::string_view to_string(FlowPattern p);

std::optional<FlowPattern> try_parse_pattern(std::string_view name);

// Throws DataError naming the offending string.
FlowPattern parse_pattern(std::string_view name);

}  // namespace flowpat
