#pragma once

#include <complex>
#include <cstddef>
#include <vector>

#include "flowpat/trace.hpp"

namespace flowpat::dsp {

// One-sided power spectral density estimate.
struct Spectrum {
  std::vector<double> freqs_hz;  // equally spaced, 0 .. f_s/2
  std::vector<double> power;     // same length, >= 0
  double resolution_hz = 0.0;

  double total_power() const;
};

// f_s = K * f_c with the anti-aliasing margin K in [2, 3].
struct SamplingPlan {
  double f_c_hz = 0.0;
  double k = 0.0;
  double f_s_hz = 0.0;
};

// In-place radix-2 FFT. Forward computes X[k] = sum_n x[n] e^{-i 2 pi k n / N};
// inverse applies the conjugate kernel and the 1/N factor. Length must be a
// power of two (callers zero-pad). Throws ConfigError otherwise.
void fft_inplace(std::vector<std::complex<double>>& x, bool inverse = false);

std::vector<std::complex<double>> fft(std::vector<std::complex<double>> x,
                                      bool inverse = false);

enum class Taper { Hann, Boxcar };

// Welch averaged periodogram over the first n_points samples of the trace.
// Defaults (8192 points, segment 512, overlap 256, Hann) give exactly 31
// segments. The segment mean of the whole analysis window is removed first,
// and the one-sided density is normalized so that
// sum(power) * resolution_hz ~= variance of the mean-removed input.
// Throws DataError when the trace is shorter than n_points (reporting
// required vs actual) and ConfigError on inconsistent segmenting.
Spectrum welch_psd(const CapacitanceTrace& trace, std::size_t n_points = 8192,
                   std::size_t segment_len = 512, std::size_t overlap = 256,
                   Taper window = Taper::Hann);

std::size_t welch_segment_count(std::size_t n_points, std::size_t segment_len,
                                std::size_t overlap);

// Smallest frequency at which the cumulative power reaches
// cumulative_fraction of the total. fraction must lie in (0, 1]; an all-zero
// spectrum raises DataError.
double estimate_cutoff(const Spectrum& s, double cumulative_fraction = 0.99);

// Throws ConfigError unless f_c > 0 and 2 <= k <= 3.
SamplingPlan sampling_plan(double f_c_hz, double k = 2.5);

}  // namespace flowpat::dsp
