#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "flowpat/experiment.hpp"
#include "flowpat/matrix.hpp"

namespace flowpat {

// 5 s at 100 Hz; the classifier input dimension.
inline constexpr std::size_t kWindowLength = 500;

struct WindowSample {
  std::vector<double> values;  // exactly window_len volts
  FlowPattern label = FlowPattern::DispersedBubble;
  std::string source_experiment;
  std::size_t start_index = 0;
};

enum class SplitProtocol { ExperimentBased, PatternBased };

std::string_view to_string(SplitProtocol p);
SplitProtocol parse_protocol(std::string_view name);

struct DatasetSplit {
  std::vector<WindowSample> train;
  std::vector<WindowSample> eval;
  SplitProtocol protocol = SplitProtocol::ExperimentBased;
  std::uint64_t seed = 0;
  std::size_t window_len = kWindowLength;
  std::size_t train_per_pattern = 0;
  std::size_t eval_per_pattern = 0;
  // Exact repeated window starts are allowed (quotas can exceed the number
  // of distinct starts); they are counted here so callers can report them.
  std::size_t duplicate_train_starts = 0;
  std::size_t duplicate_eval_starts = 0;
  // Experiment ids held out for evaluation (PatternBased only).
  std::vector<std::string> eval_experiments;
};

// Contiguous slice [start, start + window_len). Throws ConfigError when the
// slice overruns the trace.
std::span<const double> window_at(const CapacitanceTrace& trace,
                                  std::size_t start, std::size_t window_len);

// Builds a balanced split. ExperimentBased cuts each experiment's timeline at
// floor(0.8 * len): train windows live entirely before the cut, eval windows
// entirely after, so no window straddles the boundary. PatternBased holds out
// ceil(20%) of each pattern's experiments for evaluation. Window starts are
// uniform with replacement. Deterministic given seed.
// Throws DataError when some pattern has no experiments or a region is
// shorter than the window; ConfigError when PatternBased cannot hold an
// experiment out (only one experiment for a pattern).
DatasetSplit build_split(std::span<const Experiment> experiments,
                         SplitProtocol protocol, std::size_t train_per_pattern,
                         std::size_t eval_per_pattern,
                         std::size_t window_len = kWindowLength,
                         std::uint64_t seed = 0);

struct Standardization {
  std::vector<double> mean;
  std::vector<double> stddev;  // floored at 1e-8

  void apply(std::vector<WindowSample>& samples) const;
  void apply(Matrix& m) const;
};

// Per-dimension statistics computed on train only (population std), then
// applied to both partitions in place.
Standardization standardize(DatasetSplit& split);

Matrix to_matrix(std::span<const WindowSample> samples);
std::vector<int> to_labels(std::span<const WindowSample> samples);

// Partition CSV: header `label,source_experiment,start_index,v0..v<D-1>`.
void write_partition_csv(std::span<const WindowSample> samples,
                         std::size_t window_len,
                         const std::filesystem::path& path);
std::vector<WindowSample> read_partition_csv(const std::filesystem::path& path,
                                             std::size_t window_len);

}  // namespace flowpat
