#include "flowpat/models/svm.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "flowpat/errors.hpp"
#include "flowpat/rng.hpp"

namespace flowpat::models {

void LinearSvm::fit(const Matrix& x, const std::vector<int>& y,
                    const SvmConfig& cfg, std::uint64_t seed) {
  if (x.rows == 0 || x.rows != y.size())
    throw ConfigError("svm fit: empty data or label count mismatch");
  if (cfg.c <= 0.0) throw ConfigError("svm fit: C must be positive");
  num_classes_ = *std::max_element(y.begin(), y.end()) + 1;
  const std::size_t d = x.cols;
  weights_ = Matrix(static_cast<std::size_t>(num_classes_), d);
  bias_.assign(static_cast<std::size_t>(num_classes_), 0.0);

  const double lambda = 1.0 / (cfg.c * static_cast<double>(x.rows));
  for (int cls = 0; cls < num_classes_; ++cls) {
    // The intercept rides along as a regularized constant feature at w[d];
    // an unregularized intercept blows up under the early eta = C*n steps.
    std::vector<double> w(d + 1, 0.0);
    // The last Pegasos iterate oscillates; predict with the final epoch's
    // iterate average.
    std::vector<double> w_avg(d + 1, 0.0);
    std::size_t n_avg = 0;
    Rng rng(derive_seed(seed, {0x57A, static_cast<std::uint64_t>(cls)}));
    std::vector<std::uint32_t> order(x.rows);
    std::iota(order.begin(), order.end(), 0u);
    std::size_t t = 0;
    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
      rng.shuffle(order);
      for (std::uint32_t i : order) {
        ++t;
        const double eta = 1.0 / (lambda * static_cast<double>(t));
        const double s = y[i] == cls ? 1.0 : -1.0;
        const double* xi = x.row(i);
        double margin = w[d];
        for (std::size_t j = 0; j < d; ++j) margin += w[j] * xi[j];
        const double shrink = 1.0 - eta * lambda;
        if (s * margin < 1.0) {
          for (std::size_t j = 0; j < d; ++j)
            w[j] = shrink * w[j] + eta * s * xi[j];
          w[d] = shrink * w[d] + eta * s;
        } else {
          for (double& wj : w) wj *= shrink;
        }
        if (epoch + 1 == cfg.epochs) {
          for (std::size_t j = 0; j <= d; ++j) w_avg[j] += w[j];
          ++n_avg;
        }
      }
    }
    double* out = weights_.row(static_cast<std::size_t>(cls));
    for (std::size_t j = 0; j < d; ++j)
      out[j] = w_avg[j] / static_cast<double>(n_avg);
    bias_[static_cast<std::size_t>(cls)] = w_avg[d] / static_cast<double>(n_avg);
  }
}

std::vector<double> LinearSvm::margins(std::span<const double> row) const {
  std::vector<double> m(static_cast<std::size_t>(num_classes_), 0.0);
  for (int cls = 0; cls < num_classes_; ++cls) {
    const double* w = weights_.row(static_cast<std::size_t>(cls));
    double s = bias_[static_cast<std::size_t>(cls)];
    for (std::size_t j = 0; j < row.size(); ++j) s += w[j] * row[j];
    m[static_cast<std::size_t>(cls)] = s;
  }
  return m;
}

int LinearSvm::predict(std::span<const double> row) const {
  if (num_classes_ == 0) throw ConfigError("svm predict: model not fitted");
  const auto m = margins(row);
  return static_cast<int>(std::max_element(m.begin(), m.end()) - m.begin());
}

std::vector<int> LinearSvm::predict(const Matrix& x) const {
  std::vector<int> out(x.rows);
  for (std::size_t i = 0; i < x.rows; ++i) out[i] = predict(x.row_span(i));
  return out;
}

nlohmann::json LinearSvm::to_json() const {
  return {{"num_classes", num_classes_},
          {"features", weights_.cols},
          {"weights", weights_.data},
          {"bias", bias_}};
}

LinearSvm LinearSvm::from_json(const nlohmann::json& j) {
  LinearSvm s;
  s.num_classes_ = j.at("num_classes").get<int>();
  s.weights_ = Matrix(static_cast<std::size_t>(s.num_classes_),
                      j.at("features").get<std::size_t>());
  s.weights_.data = j.at("weights").get<std::vector<double>>();
  s.bias_ = j.at("bias").get<std::vector<double>>();
  return s;
}

}  // namespace flowpat::models
