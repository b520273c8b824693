#include "flowpat/dsp.hpp"

#include <cmath>
#include <numbers>
#include <numeric>
#include <string>

#include "flowpat/errors.hpp"

namespace flowpat::dsp {

double Spectrum::total_power() const {
  return std::accumulate(power.begin(), power.end(), 0.0);
}

namespace {
bool is_pow2(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }
}  // namespace

void fft_inplace(std::vector<std::complex<double>>& x, bool inverse) {
  const std::size_t n = x.size();
  if (!is_pow2(n))
    throw ConfigError("fft length must be a power of two, got " +
                      std::to_string(n));
  // Bit-reversal permutation.
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(x[i], x[j]);
  }
  const double sign = inverse ? 1.0 : -1.0;
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const double ang = sign * 2.0 * std::numbers::pi / static_cast<double>(len);
    const std::size_t half = len / 2;
    for (std::size_t i = 0; i < n; i += len) {
      for (std::size_t j = 0; j < half; ++j) {
        // Twiddle from polar on every butterfly: slower than a recurrence but
        // keeps rounding error flat, which the 1e-9 round-trip bound needs.
        const std::complex<double> w = std::polar(1.0, ang * static_cast<double>(j));
        std::complex<double> u = x[i + j];
        std::complex<double> v = x[i + j + half] * w;
        x[i + j] = u + v;
        x[i + j + half] = u - v;
      }
    }
  }
  if (inverse) {
    const double inv_n = 1.0 / static_cast<double>(n);
    for (auto& c : x) c *= inv_n;
  }
}

std::vector<std::complex<double>> fft(std::vector<std::complex<double>> x,
                                      bool inverse) {
  fft_inplace(x, inverse);
  return x;
}

std::size_t welch_segment_count(std::size_t n_points, std::size_t segment_len,
                                std::size_t overlap) {
  if (segment_len == 0 || overlap >= segment_len)
    throw ConfigError("welch: overlap must be smaller than segment length");
  if (n_points < segment_len)
    throw ConfigError("welch: n_points smaller than segment length");
  return (n_points - segment_len) / (segment_len - overlap) + 1;
}

Spectrum welch_psd(const CapacitanceTrace& trace, std::size_t n_points,
                   std::size_t segment_len, std::size_t overlap, Taper window) {
  if (!is_pow2(segment_len))
    throw ConfigError("welch: segment length must be a power of two");
  if (trace.size() < n_points)
    throw DataError("welch: insufficient data: required " +
                    std::to_string(n_points) + " samples, got " +
                    std::to_string(trace.size()));
  const std::size_t n_segments =
      welch_segment_count(n_points, segment_len, overlap);
  const std::size_t step = segment_len - overlap;
  const double fs = trace.sample_rate_hz();

  // Periodic Hann taper; boxcar for diagnostics.
  std::vector<double> w(segment_len, 1.0);
  if (window == Taper::Hann)
    for (std::size_t i = 0; i < segment_len; ++i)
      w[i] = 0.5 * (1.0 - std::cos(2.0 * std::numbers::pi *
                                   static_cast<double>(i) /
                                   static_cast<double>(segment_len)));
  const double window_power =
      std::inner_product(w.begin(), w.end(), w.begin(), 0.0);

  // The calibrated signal carries a large DC offset; remove the mean of the
  // analysed block so it does not dominate the spectrum.
  const auto block = trace.view(0, n_points);
  const double mean =
      std::accumulate(block.begin(), block.end(), 0.0) /
      static_cast<double>(n_points);

  const std::size_t n_bins = segment_len / 2 + 1;
  std::vector<double> acc(n_bins, 0.0);
  std::vector<std::complex<double>> seg(segment_len);
  for (std::size_t s = 0; s < n_segments; ++s) {
    const std::size_t off = s * step;
    for (std::size_t i = 0; i < segment_len; ++i)
      seg[i] = {(block[off + i] - mean) * w[i], 0.0};
    fft_inplace(seg, false);
    for (std::size_t k = 0; k < n_bins; ++k) acc[k] += std::norm(seg[k]);
  }

  // One-sided density: interior bins doubled, DC and Nyquist kept single.
  Spectrum out;
  out.resolution_hz = fs / static_cast<double>(segment_len);
  out.freqs_hz.resize(n_bins);
  out.power.resize(n_bins);
  const double scale =
      1.0 / (fs * window_power * static_cast<double>(n_segments));
  for (std::size_t k = 0; k < n_bins; ++k) {
    out.freqs_hz[k] = static_cast<double>(k) * out.resolution_hz;
    double p = acc[k] * scale;
    if (k != 0 && k != n_bins - 1) p *= 2.0;
    out.power[k] = p;
  }
  return out;
}

double estimate_cutoff(const Spectrum& s, double cumulative_fraction) {
  if (cumulative_fraction <= 0.0 || cumulative_fraction > 1.0)
    throw ConfigError("cumulative_fraction must lie in (0, 1]");
  if (s.power.size() != s.freqs_hz.size())
    throw ConfigError("spectrum freq/power length mismatch");
  const double total = s.total_power();
  if (!(total > 0.0))
    throw DataError("estimate_cutoff: spectrum has no power");
  const double target = cumulative_fraction * total;
  double cum = 0.0;
  for (std::size_t k = 0; k < s.power.size(); ++k) {
    cum += s.power[k];
    if (cum >= target) return s.freqs_hz[k];
  }
  // Reached only through floating-point shortfall at fraction == 1.
  return s.freqs_hz.back();
}

SamplingPlan sampling_plan(double f_c_hz, double k) {
  if (!(f_c_hz > 0.0))
    throw ConfigError("sampling_plan: cutoff frequency must be positive");
  if (k < 2.0 || k > 3.0)
    throw ConfigError("sampling_plan: K must lie in [2, 3], got " +
                      std::to_string(k));
  return SamplingPlan{f_c_hz, k, k * f_c_hz};
}

}  // namespace flowpat::dsp
