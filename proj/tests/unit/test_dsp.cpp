#include <doctest.h>

#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

#include "flowpat/dsp.hpp"
#include "flowpat/errors.hpp"
#include "flowpat/rng.hpp"

using namespace flowpat;
using dsp::Spectrum;
using cvec = std::vector<std::complex<double>>;

namespace {

// O(n^2) discrete Fourier transform oracle.
cvec brute_dft(const cvec& x, bool inverse) {
  const std::size_t n = x.size();
  cvec out(n);
  const double sign = inverse ? 1.0 : -1.0;
  for (std::size_t k = 0; k < n; ++k) {
    std::complex<double> acc{0.0, 0.0};
    for (std::size_t j = 0; j < n; ++j)
      acc += x[j] * std::polar(1.0, sign * 2.0 * std::numbers::pi *
                                        static_cast<double>(k * j) /
                                        static_cast<double>(n));
    out[k] = inverse ? acc / static_cast<double>(n) : acc;
  }
  return out;
}

double max_abs_diff(const cvec& a, const cvec& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

cvec random_complex(std::size_t n, Rng& rng) {
  cvec x(n);
  for (auto& c : x) c = {rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)};
  return x;
}

}  // namespace

TEST_CASE("fft of an impulse is flat") {
  const auto out = dsp::fft({{1, 0}, {0, 0}, {0, 0}, {0, 0}});
  for (const auto& c : out) {
    CHECK(c.real() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(c.imag() == doctest::Approx(0.0).epsilon(1e-12));
  }
}

TEST_CASE("fft of a constant is DC only") {
  const auto out = dsp::fft({{1, 0}, {1, 0}, {1, 0}, {1, 0}});
  CHECK(std::abs(out[0] - std::complex<double>{4, 0}) < 1e-12);
  for (std::size_t k = 1; k < 4; ++k) CHECK(std::abs(out[k]) < 1e-12);
}

TEST_CASE("fft matches the brute-force DFT") {
  Rng rng(101);
  for (std::size_t n : {8u, 64u, 256u}) {
    const cvec x = random_complex(n, rng);
    CHECK(max_abs_diff(dsp::fft(x), brute_dft(x, false)) < 1e-9);
  }
}

TEST_CASE("inverse fft round trips") {
  Rng rng(102);
  const cvec x = random_complex(256, rng);
  CHECK(max_abs_diff(dsp::fft(dsp::fft(x), true), x) < 1e-9);
}

TEST_CASE("fft rejects non-power-of-two lengths") {
  cvec x(12, {1.0, 0.0});
  CHECK_THROWS_AS(dsp::fft_inplace(x), ConfigError);
}

TEST_CASE("fft linearity") {
  Rng rng(103);
  const cvec x = random_complex(128, rng), y = random_complex(128, rng);
  const std::complex<double> a{1.7, -0.3}, b{-0.4, 2.1};
  cvec combo(128);
  for (std::size_t i = 0; i < 128; ++i) combo[i] = a * x[i] + b * y[i];
  const cvec fx = dsp::fft(x), fy = dsp::fft(y), fc = dsp::fft(combo);
  for (std::size_t i = 0; i < 128; ++i)
    CHECK(std::abs(fc[i] - (a * fx[i] + b * fy[i])) < 1e-9);
}

TEST_CASE("fft Parseval identity") {
  Rng rng(104);
  const cvec x = random_complex(512, rng);
  const cvec fx = dsp::fft(x);
  double time_e = 0.0, freq_e = 0.0;
  for (const auto& c : x) time_e += std::norm(c);
  for (const auto& c : fx) freq_e += std::norm(c);
  freq_e /= 512.0;
  CHECK(std::abs(time_e - freq_e) / time_e < 1e-9);
}

TEST_CASE("welch defaults give exactly 31 segments") {
  CHECK(dsp::welch_segment_count(8192, 512, 256) == 31);
  CHECK_THROWS_AS(dsp::welch_segment_count(8192, 512, 512), ConfigError);
}

TEST_CASE("welch finds a pure sine within one bin") {
  const double fs = 100.0, f0 = 10.0;
  std::vector<double> v(8192);
  for (std::size_t i = 0; i < v.size(); ++i)
    v[i] = 2.5 + std::sin(2.0 * std::numbers::pi * f0 *
                          static_cast<double>(i) / fs);
  const auto s = dsp::welch_psd(CapacitanceTrace(fs, v));
  std::size_t peak = 0;
  for (std::size_t k = 1; k < s.power.size(); ++k)
    if (s.power[k] > s.power[peak]) peak = k;
  CHECK(std::abs(s.freqs_hz[peak] - f0) <= s.resolution_hz);
  // Sine power is amp^2/2 = 0.5.
  CHECK(s.total_power() * s.resolution_hz == doctest::Approx(0.5).epsilon(0.05));
}

TEST_CASE("welch white-noise total power matches the variance") {
  double total = 0.0;
  const int n_seeds = 50;
  for (int seed = 0; seed < n_seeds; ++seed) {
    Rng rng(static_cast<std::uint64_t>(seed) + 1000);
    std::vector<double> v(8192);
    for (auto& x : v) x = rng.normal(0.0, 1.0);
    const auto s = dsp::welch_psd(CapacitanceTrace(100.0, v));
    total += s.total_power() * s.resolution_hz;
  }
  CHECK(total / n_seeds == doctest::Approx(1.0).epsilon(0.1));
}

TEST_CASE("welch rejects short traces with a helpful message") {
  CapacitanceTrace t(100.0, std::vector<double>(4000, 1.0));
  try {
    dsp::welch_psd(t);
    FAIL("expected DataError");
  } catch (const DataError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("8192") != std::string::npos);
    CHECK(msg.find("4000") != std::string::npos);
  }
}

TEST_CASE("welch spectrum structure") {
  Rng rng(44);
  std::vector<double> v(8192);
  for (auto& x : v) x = 2.0 + rng.normal(0.0, 0.3);
  const auto s = dsp::welch_psd(CapacitanceTrace(100.0, v));
  REQUIRE(s.freqs_hz.size() == 257);  // 512/2 + 1 bins
  CHECK(s.freqs_hz.front() == 0.0);
  CHECK(s.freqs_hz.back() == doctest::Approx(50.0));
  CHECK(s.resolution_hz == doctest::Approx(100.0 / 512.0));
  for (std::size_t k = 0; k < s.power.size(); ++k) CHECK(s.power[k] >= 0.0);
  for (std::size_t k = 1; k < s.freqs_hz.size(); ++k)
    CHECK(s.freqs_hz[k] - s.freqs_hz[k - 1] ==
          doctest::Approx(s.resolution_hz).epsilon(1e-12));
}

TEST_CASE("welch total power is shift tolerant") {
  Rng rng(45);
  std::vector<double> v(9000);
  for (auto& x : v) x = 2.0 + rng.normal(0.0, 0.5);
  const auto base = dsp::welch_psd(CapacitanceTrace(100.0, v));
  std::vector<double> shifted(v.begin() + 500, v.end());
  shifted.insert(shifted.end(), v.begin(), v.begin() + 500);
  shifted.resize(9000);
  const auto moved = dsp::welch_psd(CapacitanceTrace(100.0, shifted));
  CHECK(std::abs(moved.total_power() - base.total_power()) /
            base.total_power() <
        0.01);
}

TEST_CASE("estimate_cutoff point mass and boundaries") {
  Spectrum s;
  s.resolution_hz = 1.0;
  for (int k = 0; k <= 50; ++k) {
    s.freqs_hz.push_back(static_cast<double>(k));
    s.power.push_back(k == 5 ? 3.14 : 0.0);
  }
  CHECK(dsp::estimate_cutoff(s, 0.99) == 5.0);
  CHECK(dsp::estimate_cutoff(s, 1.0) == 5.0);  // highest non-zero bin
}

TEST_CASE("estimate_cutoff on a uniform spectrum") {
  Spectrum s;
  const std::size_t bins = 257;
  s.resolution_hz = 50.0 / static_cast<double>(bins - 1);
  for (std::size_t k = 0; k < bins; ++k) {
    s.freqs_hz.push_back(static_cast<double>(k) * s.resolution_hz);
    s.power.push_back(1.0);
  }
  // Cumulative-sum oracle.
  const double target = 0.99 * static_cast<double>(bins);
  std::size_t k_expect = 0;
  double cum = 0.0;
  while (cum < target) cum += 1.0, ++k_expect;
  const double expected = static_cast<double>(k_expect - 1) * s.resolution_hz;
  CHECK(dsp::estimate_cutoff(s, 0.99) == doctest::Approx(expected));
  CHECK(std::abs(dsp::estimate_cutoff(s, 0.99) - 49.5) <= s.resolution_hz);
}

TEST_CASE("estimate_cutoff is monotone in the fraction") {
  Rng rng(46);
  Spectrum s;
  s.resolution_hz = 0.5;
  for (int k = 0; k < 100; ++k) {
    s.freqs_hz.push_back(0.5 * k);
    s.power.push_back(rng.uniform(0.0, 1.0));
  }
  double prev = 0.0;
  for (double f : {0.1, 0.3, 0.5, 0.7, 0.9, 0.99, 1.0}) {
    const double fc = dsp::estimate_cutoff(s, f);
    CHECK(fc >= prev);
    prev = fc;
  }
}

TEST_CASE("estimate_cutoff rejects degenerate input") {
  Spectrum s;
  s.freqs_hz = {0.0, 1.0};
  s.power = {0.0, 0.0};
  s.resolution_hz = 1.0;
  CHECK_THROWS_AS(dsp::estimate_cutoff(s, 0.99), DataError);
  s.power = {1.0, 1.0};
  CHECK_THROWS_AS(dsp::estimate_cutoff(s, 0.0), ConfigError);
  CHECK_THROWS_AS(dsp::estimate_cutoff(s, 1.5), ConfigError);
}

TEST_CASE("sampling plan applies f_s = K f_c") {
  const auto plan = dsp::sampling_plan(40.0, 2.5);
  CHECK(plan.f_s_hz == doctest::Approx(100.0));
  CHECK(plan.f_c_hz == 40.0);
  CHECK(plan.k == 2.5);
  CHECK(dsp::sampling_plan(10.0, 2.0).f_s_hz == doctest::Approx(20.0));
  CHECK_THROWS_AS(dsp::sampling_plan(10.0, 3.5), ConfigError);
  CHECK_THROWS_AS(dsp::sampling_plan(10.0, 1.9), ConfigError);
  CHECK_THROWS_AS(dsp::sampling_plan(0.0, 2.5), ConfigError);
}
