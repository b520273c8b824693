#pragma once

#include <vector>

#include <json.hpp>

#include "flowpat/matrix.hpp"

namespace flowpat::models {

// Principal component analysis via a cyclic Jacobi eigendecomposition of the
// train covariance (population normalization). Components are orthonormal
// rows sorted by descending eigenvalue.
class Pca {
 public:
  // Throws ConfigError when n_components > min(n_samples, n_features).
  void fit(const Matrix& x, std::size_t n_components);

  Matrix transform(const Matrix& x) const;
  Matrix inverse_transform(const Matrix& z) const;

  std::size_t n_components() const { return components_.rows; }
  const Matrix& components() const { return components_; }
  const std::vector<double>& mean() const { return mean_; }
  // Fraction of total train variance captured by each kept component;
  // non-increasing, sums to <= 1.
  const std::vector<double>& explained_variance_ratio() const {
    return explained_variance_ratio_;
  }

  nlohmann::json to_json() const;
  static Pca from_json(const nlohmann::json& j);

 private:
  Matrix components_;  // [k, d]
  std::vector<double> mean_;
  std::vector<double> explained_variance_ratio_;
};

}  // namespace flowpat::models
