#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "flowpat/dataset.hpp"
#include "flowpat/flow_pattern.hpp"
#include "flowpat/train.hpp"

namespace flowpat::eval {

struct ClassMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t support = 0;
};

struct EvalReport {
  // confusion[true][predicted]
  std::array<std::array<std::int64_t, kNumPatterns>, kNumPatterns> confusion{};
  double accuracy = 0.0;
  double macro_f1 = 0.0;
  double weighted_f1 = 0.0;
  std::array<ClassMetrics, kNumPatterns> per_class{};
  int seeds_averaged = 1;

  std::int64_t total() const;
};

// Counts the confusion matrix and derives all metrics. Zero-denominator
// precision/recall are defined as 0 (an entirely missed class yields an
// all-zero row of metrics rather than a fault).
EvalReport evaluate(std::span<const int> y_true, std::span<const int> y_pred);

EvalReport evaluate_predictions(std::span<const WindowSample> samples,
                                std::span<const int> y_pred);

// Scalar metrics averaged arithmetically; confusion matrices summed.
// Throws ConfigError when the reports cover different eval sizes.
EvalReport average_reports(std::span<const EvalReport> reports);

// Plot-ready exports.
void export_confusion_csv(const EvalReport& r, const std::filesystem::path& path,
                          bool row_normalized = false);
std::array<std::array<std::int64_t, kNumPatterns>, kNumPatterns>
import_confusion_csv(const std::filesystem::path& path);
void export_training_curve_csv(const models::TrainingLog& log,
                               const std::filesystem::path& path);
void export_pca_2d_csv(const Matrix& projected, std::span<const int> labels,
                       const std::filesystem::path& path);

// Headline accuracy/F1 reported for the original (unpublished) rig dataset;
// embedded in report JSON purely for side-by-side comparison.
struct ReferenceResult {
  const char* model_type;
  double experiment_based_accuracy;
  double experiment_based_f1;
  double pattern_based_accuracy;
  double pattern_based_f1;
  bool implemented;  // the transformer baseline is out of scope
};
std::span<const ReferenceResult> reference_results();
std::optional<ReferenceResult> reference_for(std::string_view model_type);

}  // namespace flowpat::eval
