#include "flowpat/models/pca.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "flowpat/detail/gemm.hpp"
#include "flowpat/errors.hpp"

namespace flowpat::models {

namespace {

// Cyclic Jacobi for a symmetric matrix. Returns eigenvalues in `diag`;
// columns of `vecs` are the matching eigenvectors.
void jacobi_eigh(Matrix& a, std::vector<double>& diag, Matrix& vecs) {
  const std::size_t n = a.rows;
  vecs = Matrix(n, n);
  for (std::size_t i = 0; i < n; ++i) vecs.at(i, i) = 1.0;

  const int max_sweeps = 64;
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    double off = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) off += a.at(i, j) * a.at(i, j);
    if (off < 1e-22 * static_cast<double>(n * n)) break;

    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = a.at(p, q);
        if (std::abs(apq) < 1e-300) continue;
        const double app = a.at(p, p);
        const double aqq = a.at(q, q);
        const double tau = (aqq - app) / (2.0 * apq);
        const double t = (tau >= 0.0 ? 1.0 : -1.0) /
                         (std::abs(tau) + std::sqrt(1.0 + tau * tau));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a.at(k, p);
          const double akq = a.at(k, q);
          a.at(k, p) = c * akp - s * akq;
          a.at(k, q) = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a.at(p, k);
          const double aqk = a.at(q, k);
          a.at(p, k) = c * apk - s * aqk;
          a.at(q, k) = s * apk + c * aqk;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double vkp = vecs.at(k, p);
          const double vkq = vecs.at(k, q);
          vecs.at(k, p) = c * vkp - s * vkq;
          vecs.at(k, q) = s * vkp + c * vkq;
        }
      }
  }
  diag.resize(n);
  for (std::size_t i = 0; i < n; ++i) diag[i] = a.at(i, i);
}

}  // namespace

void Pca::fit(const Matrix& x, std::size_t n_components) {
  if (x.rows == 0 || x.cols == 0) throw ConfigError("pca fit: empty matrix");
  if (n_components == 0 || n_components > std::min(x.rows, x.cols))
    throw ConfigError("pca fit: n_components " + std::to_string(n_components) +
                      " outside [1, min(n_samples=" + std::to_string(x.rows) +
                      ", n_features=" + std::to_string(x.cols) + ")]");
  const std::size_t n = x.rows, d = x.cols;

  mean_.assign(d, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const double* r = x.row(i);
    for (std::size_t j = 0; j < d; ++j) mean_[j] += r[j];
  }
  for (double& m : mean_) m /= static_cast<double>(n);

  Matrix centered(n, d);
  for (std::size_t i = 0; i < n; ++i) {
    const double* r = x.row(i);
    double* o = centered.row(i);
    for (std::size_t j = 0; j < d; ++j) o[j] = r[j] - mean_[j];
  }

  // Covariance = X_c^T X_c / n.
  Matrix cov(d, d);
  nn::detail::gemm_accum(d, d, n, centered.data.data(), d, true,
                         centered.data.data(), d, false, cov.data.data(), d);
  for (double& v : cov.data) v /= static_cast<double>(n);
  const double total_variance =
      [&] {
        double t = 0.0;
        for (std::size_t j = 0; j < d; ++j) t += cov.at(j, j);
        return t;
      }();

  std::vector<double> eigvals;
  Matrix eigvecs;
  jacobi_eigh(cov, eigvals, eigvecs);

  std::vector<std::size_t> order(d);
  std::iota(order.begin(), order.end(), 0u);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return eigvals[a] > eigvals[b];
  });

  components_ = Matrix(n_components, d);
  explained_variance_ratio_.assign(n_components, 0.0);
  for (std::size_t k = 0; k < n_components; ++k) {
    const std::size_t src = order[k];
    for (std::size_t j = 0; j < d; ++j)
      components_.at(k, j) = eigvecs.at(j, src);
    explained_variance_ratio_[k] =
        total_variance > 0.0 ? std::max(0.0, eigvals[src]) / total_variance
                             : 0.0;
  }
}

Matrix Pca::transform(const Matrix& x) const {
  if (x.cols != mean_.size()) throw ConfigError("pca transform: dim mismatch");
  const std::size_t k = components_.rows;
  Matrix centered(x.rows, x.cols);
  for (std::size_t i = 0; i < x.rows; ++i)
    for (std::size_t j = 0; j < x.cols; ++j)
      centered.at(i, j) = x.at(i, j) - mean_[j];
  Matrix z(x.rows, k);
  // Z = X_c * V^T
  nn::detail::gemm_accum(x.rows, k, x.cols, centered.data.data(), x.cols,
                         false, components_.data.data(), x.cols, true,
                         z.data.data(), k);
  return z;
}

Matrix Pca::inverse_transform(const Matrix& z) const {
  if (z.cols != components_.rows)
    throw ConfigError("pca inverse_transform: dim mismatch");
  const std::size_t d = mean_.size();
  Matrix x(z.rows, d);
  nn::detail::gemm_accum(z.rows, d, z.cols, z.data.data(), z.cols, false,
                         components_.data.data(), d, false, x.data.data(), d);
  for (std::size_t i = 0; i < z.rows; ++i)
    for (std::size_t j = 0; j < d; ++j) x.at(i, j) += mean_[j];
  return x;
}

nlohmann::json Pca::to_json() const {
  return {{"components", components_.data},
          {"n_components", components_.rows},
          {"n_features", components_.cols},
          {"mean", mean_},
          {"explained_variance_ratio", explained_variance_ratio_}};
}

Pca Pca::from_json(const nlohmann::json& j) {
  Pca p;
  p.components_ = Matrix(j.at("n_components").get<std::size_t>(),
                         j.at("n_features").get<std::size_t>());
  p.components_.data = j.at("components").get<std::vector<double>>();
  p.mean_ = j.at("mean").get<std::vector<double>>();
  p.explained_variance_ratio_ =
      j.at("explained_variance_ratio").get<std::vector<double>>();
  return p;
}

}  // namespace flowpat::models
