#include <doctest.h>

#include <cmath>

#include "flowpat/errors.hpp"
#include "flowpat/ops.hpp"
#include "flowpat/rng.hpp"
#include "flowpat/tensor.hpp"
#include "gradcheck.hpp"

using namespace flowpat;
using nn::Tensor;

namespace {
Tensor random_tensor(nn::Shape shape, Rng& rng, bool requires_grad,
                     double lo = -1.0, double hi = 1.0) {
  std::vector<double> data(nn::shape_size(shape));
  for (auto& v : data) v = rng.uniform(lo, hi);
  return Tensor::from(std::move(shape), std::move(data), requires_grad);
}
}  // namespace

TEST_CASE("tensor basics") {
  auto t = Tensor::zeros({2, 3});
  CHECK(t.size() == 6);
  CHECK(t.dim(0) == 2);
  CHECK(t.dim(1) == 3);
  CHECK(!t.requires_grad());
  CHECK_THROWS_AS(t.grad(), ConfigError);
  CHECK_THROWS_AS(Tensor::from({2, 2}, {1.0, 2.0, 3.0}), ConfigError);
  CHECK_THROWS_AS(t.item(), ConfigError);
  CHECK(Tensor::full({1}, 4.5).item() == 4.5);
}

TEST_CASE("backward accumulates through a diamond graph") {
  auto x = Tensor::from({1}, {3.0}, true);
  // y = x + x; z = y + y = 4x -> dz/dx = 4
  auto y = nn::add(x, x);
  auto z = nn::add(y, y);
  z.backward();
  CHECK(x.grad()[0] == doctest::Approx(4.0));
  // A second backward adds on top unless cleared.
  x.zero_grad();
  auto z2 = nn::scale(x, 2.5);
  z2.backward();
  CHECK(x.grad()[0] == doctest::Approx(2.5));
}

TEST_CASE("backward requires a scalar") {
  auto x = Tensor::from({2}, {1.0, 2.0}, true);
  auto y = nn::add(x, x);
  CHECK_THROWS_AS(y.backward(), ConfigError);
}

TEST_CASE("NoGrad suspends graph recording") {
  auto x = Tensor::from({1}, {1.0}, true);
  {
    nn::NoGrad guard;
    auto y = nn::scale(x, 2.0);
    CHECK(!y.requires_grad());
  }
  auto y = nn::scale(x, 2.0);
  CHECK(y.requires_grad());
}

TEST_CASE("ops without tracked inputs record nothing") {
  auto x = Tensor::from({2}, {1.0, -1.0}, false);
  auto y = nn::relu(x);
  CHECK(!y.requires_grad());
}

TEST_CASE("relu gradient passes finite differences") {
  Rng rng(7001);
  for (int rep = 0; rep < 5; ++rep) {
    // Inputs away from the relu kink so the finite difference is clean.
    auto x = random_tensor({3, 4}, rng, true);
    for (auto& v : x.values())
      if (std::abs(v) < 1e-2) v = 0.05;

    auto run = [&] {
      auto y = nn::relu(x);
      double s = 0.0;
      for (double v : y.values()) s += v;
      return s;
    };
    x.zero_grad();
    auto y = nn::relu(x);
    nn::scale(nn::global_avg_pool1d(nn::reshape(y, {1, 1, 12})), 12.0)
        .backward();
    CHECK(finite_diff_rel_error(x, run, x.grad()) < 1e-4);
  }
}

TEST_CASE("sigmoid and swish gradients via sum loss") {
  Rng rng(7002);
  for (int rep = 0; rep < 5; ++rep) {
    auto x = random_tensor({2, 5}, rng, true, -2.0, 2.0);
    for (auto* op : {&nn::sigmoid, &nn::swish}) {
      auto run = [&] {
        auto y = (*op)(x);
        double s = 0.0;
        for (double v : y.values()) s += v;
        return s;
      };
      x.zero_grad();
      auto y = (*op)(x);
      // Sum via reshape + pooling * count keeps everything inside the graph.
      nn::scale(nn::global_avg_pool1d(nn::reshape(y, {1, 1, 10})), 10.0)
          .backward();
      CHECK(finite_diff_rel_error(x, run, x.grad()) < 1e-4);
    }
  }
}

TEST_CASE("swish closed-form values") {
  auto x = Tensor::from({1, 3}, {0.0, 20.0, -20.0});
  auto y = nn::swish(x);
  CHECK(y.values()[0] == 0.0);
  CHECK(y.values()[1] == doctest::Approx(20.0).epsilon(1e-6));
  CHECK(std::abs(y.values()[2]) < 1e-6);
}

TEST_CASE("sigmoid matches the closed form") {
  auto x = Tensor::from({1, 2}, {0.0, 1.0});
  auto y = nn::sigmoid(x);
  CHECK(y.values()[0] == doctest::Approx(0.5));
  CHECK(y.values()[1] == doctest::Approx(1.0 / (1.0 + std::exp(-1.0))));
}

TEST_CASE("softmax rows sum to one and stay in (0,1)") {
  Rng rng(7003);
  auto x = random_tensor({8, 7}, rng, false, -30.0, 30.0);
  auto y = nn::softmax(x);
  for (std::size_t i = 0; i < 8; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < 7; ++j) {
      const double p = y.values()[i * 7 + j];
      CHECK(p > 0.0);
      CHECK(p < 1.0);
      s += p;
    }
    CHECK(std::abs(s - 1.0) < 1e-10);
  }
}

TEST_CASE("softmax gradient passes finite differences") {
  Rng rng(7004);
  auto x = random_tensor({3, 5}, rng, true);
  auto weights = random_tensor({3, 5}, rng, false);
  auto run = [&] {
    auto y = nn::softmax(x);
    double s = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i)
      s += y.values()[i] * weights.values()[i];
    return s;
  };
  // Weighted sum as the scalar head, dy_i = w_i.
  auto y = nn::softmax(x);
  auto& yn = *y.node();
  yn.ensure_grad();
  for (std::size_t i = 0; i < yn.grad.size(); ++i)
    yn.grad[i] = weights.values()[i];
  yn.backward_fn(yn);
  CHECK(finite_diff_rel_error(x, run, x.grad()) < 1e-4);
}

TEST_CASE("reshape and flatten preserve data and route gradients") {
  auto x = Tensor::from({2, 1, 3}, {1, 2, 3, 4, 5, 6}, true);
  auto f = nn::flatten(x);
  CHECK(f.shape() == nn::Shape{2, 3});
  CHECK(f.values() == x.values());
  auto pooled = nn::global_avg_pool1d(nn::reshape(f, {1, 1, 6}));
  nn::scale(pooled, 6.0).backward();
  for (double g : x.grad()) CHECK(g == doctest::Approx(1.0));
  CHECK_THROWS_AS(nn::reshape(x, {4, 2}), ConfigError);
}
