#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <json.hpp>

#include "flowpat/matrix.hpp"

namespace flowpat::models {

struct SvmConfig {
  double c = 1.0;           // soft-margin weight
  std::size_t epochs = 20;  // passes over the data
};

// One-vs-rest linear SVM trained by stochastic subgradient descent on the
// hinge loss with L2 regularization (lambda = 1/(C*n), step 1/(lambda*t)).
// Expects standardized inputs; prediction is argmax margin. Deterministic in
// the fit seed.
class LinearSvm {
 public:
  void fit(const Matrix& x, const std::vector<int>& y,
           const SvmConfig& cfg = {}, std::uint64_t seed = 0);

  int predict(std::span<const double> row) const;
  std::vector<int> predict(const Matrix& x) const;
  std::vector<double> margins(std::span<const double> row) const;

  nlohmann::json to_json() const;
  static LinearSvm from_json(const nlohmann::json& j);

 private:
  Matrix weights_;  // [classes, features]
  std::vector<double> bias_;
  int num_classes_ = 0;
};

}  // namespace flowpat::models
