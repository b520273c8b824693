#include "flowpat/eval.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "flowpat/errors.hpp"

namespace flowpat::eval {

std::int64_t EvalReport::total() const {
  std::int64_t t = 0;
  for (const auto& row : confusion)
    for (std::int64_t v : row) t += v;
  return t;
}

EvalReport evaluate(std::span<const int> y_true, std::span<const int> y_pred) {
  if (y_true.empty()) throw ConfigError("evaluate: empty prediction set");
  if (y_true.size() != y_pred.size())
    throw ConfigError("evaluate: label/prediction count mismatch");

  EvalReport r;
  for (std::size_t i = 0; i < y_true.size(); ++i) {
    const int t = y_true[i], p = y_pred[i];
    if (t < 0 || t >= kNumPatterns || p < 0 || p >= kNumPatterns)
      throw ConfigError("evaluate: class code outside 0..6");
    ++r.confusion[static_cast<std::size_t>(t)][static_cast<std::size_t>(p)];
  }

  std::int64_t diag = 0;
  double weighted_sum = 0.0;
  double macro_sum = 0.0;
  for (int c = 0; c < kNumPatterns; ++c) {
    const auto cu = static_cast<std::size_t>(c);
    std::int64_t tp = r.confusion[cu][cu];
    std::int64_t fn = 0, fp = 0;
    for (int o = 0; o < kNumPatterns; ++o) {
      if (o == c) continue;
      fn += r.confusion[cu][static_cast<std::size_t>(o)];
      fp += r.confusion[static_cast<std::size_t>(o)][cu];
    }
    diag += tp;
    ClassMetrics& m = r.per_class[cu];
    m.support = static_cast<std::size_t>(tp + fn);
    m.precision = tp + fp > 0 ? static_cast<double>(tp) /
                                    static_cast<double>(tp + fp)
                              : 0.0;
    m.recall = tp + fn > 0 ? static_cast<double>(tp) /
                                 static_cast<double>(tp + fn)
                           : 0.0;
    m.f1 = m.precision + m.recall > 0.0
               ? 2.0 * m.precision * m.recall / (m.precision + m.recall)
               : 0.0;
    macro_sum += m.f1;
    weighted_sum += m.f1 * static_cast<double>(m.support);
  }
  r.accuracy = static_cast<double>(diag) / static_cast<double>(y_true.size());
  r.macro_f1 = macro_sum / static_cast<double>(kNumPatterns);
  r.weighted_f1 = weighted_sum / static_cast<double>(y_true.size());
  return r;
}

EvalReport evaluate_predictions(std::span<const WindowSample> samples,
                                std::span<const int> y_pred) {
  std::vector<int> y_true(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i)
    y_true[i] = pattern_code(samples[i].label);
  return evaluate(y_true, y_pred);
}

EvalReport average_reports(std::span<const EvalReport> reports) {
  if (reports.empty()) throw ConfigError("average_reports: no reports");
  const std::int64_t total = reports.front().total();
  for (const auto& r : reports)
    if (r.total() != total)
      throw ConfigError("average_reports: eval sizes differ (" +
                        std::to_string(total) + " vs " +
                        std::to_string(r.total()) + ")");
  EvalReport out;
  const double inv = 1.0 / static_cast<double>(reports.size());
  for (const auto& r : reports) {
    out.accuracy += r.accuracy * inv;
    out.macro_f1 += r.macro_f1 * inv;
    out.weighted_f1 += r.weighted_f1 * inv;
    for (int c = 0; c < kNumPatterns; ++c) {
      const auto cu = static_cast<std::size_t>(c);
      out.per_class[cu].precision += r.per_class[cu].precision * inv;
      out.per_class[cu].recall += r.per_class[cu].recall * inv;
      out.per_class[cu].f1 += r.per_class[cu].f1 * inv;
      out.per_class[cu].support += r.per_class[cu].support;
      for (int p = 0; p < kNumPatterns; ++p)
        out.confusion[cu][static_cast<std::size_t>(p)] +=
            r.confusion[cu][static_cast<std::size_t>(p)];
    }
  }
  out.seeds_averaged = static_cast<int>(reports.size());
  return out;
}

void export_confusion_csv(const EvalReport& r,
                          const std::filesystem::path& path,
                          bool row_normalized) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << "true\\pred";
  for (FlowPattern p : all_patterns()) out << ',' << to_string(p);
  out << '\n';
  for (int t = 0; t < kNumPatterns; ++t) {
    out << to_string(pattern_from_code(t));
    const auto& row = r.confusion[static_cast<std::size_t>(t)];
    std::int64_t row_sum = 0;
    for (std::int64_t v : row) row_sum += v;
    for (std::int64_t v : row) {
      if (row_normalized) {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%.6f",
                      row_sum > 0 ? static_cast<double>(v) /
                                        static_cast<double>(row_sum)
                                  : 0.0);
        out << ',' << buf;
      } else {
        out << ',' << v;
      }
    }
    out << '\n';
  }
}

std::array<std::array<std::int64_t, kNumPatterns>, kNumPatterns>
import_confusion_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  std::array<std::array<std::int64_t, kNumPatterns>, kNumPatterns> m{};
  std::string line;
  std::getline(in, line);  // header
  for (int t = 0; t < kNumPatterns; ++t) {
    if (!std::getline(in, line))
      throw DataError(path.string() + ": truncated confusion matrix");
    std::stringstream ss(line);
    std::string tok;
    std::getline(ss, tok, ',');  // row label
    for (int p = 0; p < kNumPatterns; ++p) {
      if (!std::getline(ss, tok, ','))
        throw DataError(path.string() + ": short row");
      m[static_cast<std::size_t>(t)][static_cast<std::size_t>(p)] =
          std::stoll(tok);
    }
  }
  return m;
}

void export_training_curve_csv(const models::TrainingLog& log,
                               const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << "epoch,train_loss,eval_loss,eval_accuracy\n";
  for (const auto& e : log.epochs) {
    char buf[128];
    std::snprintf(buf, sizeof(buf), "%zu,%.9g,%.9g,%.9g\n", e.epoch,
                  e.train_loss, e.eval_loss, e.eval_accuracy);
    out << buf;
  }
}

void export_pca_2d_csv(const Matrix& projected, std::span<const int> labels,
                       const std::filesystem::path& path) {
  if (projected.cols < 2)
    throw ConfigError("export_pca_2d_csv: projection must have >= 2 columns");
  if (projected.rows != labels.size())
    throw ConfigError("export_pca_2d_csv: row/label count mismatch");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << "x,y,label\n";
  for (std::size_t i = 0; i < projected.rows; ++i) {
    char buf[96];
    std::snprintf(buf, sizeof(buf), "%.9g,%.9g,", projected.at(i, 0),
                  projected.at(i, 1));
    out << buf << to_string(pattern_from_code(labels[i])) << '\n';
  }
}

namespace {
constexpr ReferenceResult kReferenceResults[] = {
    {"random_forest", 0.788, 0.778, 0.473, 0.470, true},
    {"random_forest_pca", 0.769, 0.769, 0.461, 0.472, true},
    {"svm", 0.645, 0.612, 0.565, 0.535, true},
    {"svm_pca", 0.611, 0.570, 0.539, 0.507, true},
    {"mlp", 0.611, 0.578, 0.528, 0.482, true},
    {"mlp_pca", 0.629, 0.602, 0.502, 0.451, true},
    {"decision_tree", 0.638, 0.639, 0.412, 0.428, true},
    {"decision_tree_pca", 0.662, 0.670, 0.362, 0.370, true},
    {"cnn1d", 0.747, 0.720, 0.690, 0.660, true},
    {"transformer", 0.706, 0.680, 0.676, 0.660, false},
    {"senet1d", 0.850, 0.847, 0.712, 0.674, true},
};
}  // namespace

std::span<const ReferenceResult> reference_results() {
  return kReferenceResults;
}

std::optional<ReferenceResult> reference_for(std::string_view model_type) {
  for (const auto& r : kReferenceResults)
    if (model_type == r.model_type) return r;
  return std::nullopt;
}

}  // namespace flowpat::eval
