#pragma once

#include <cstdint>
#include <vector>

#include "flowpat/envelope.hpp"
#include "flowpat/experiment.hpp"
#include "flowpat/rng.hpp"

namespace flowpat::synth {

// Per-pattern signal archetypes. The levels below are design constants tuned
// so that the seven classes are mutually distinguishable while staying
// qualitatively faithful to how each regime looks on a 0-5 V capacitance
// channel (5 V = all oil, 0 V = all gas).

// Flat liquid-dominant level with fine bubble noise.
struct LevelNoiseParams {
  double base_v = 4.5;
  double noise_sigma_v = 0.08;
};

// Base level interrupted by periodic gas-bubble dips.
struct PeriodicDipParams {
  double base_v = 4.2;
  double dip_v = 3.0;
  double duty_min = 0.15;  // fraction of the period spent in the dip
  double duty_max = 0.25;
  double period_scale_s = 0.25;  // period = period_scale / u_GS, clamped
  double period_min_s = 0.5;
  double period_max_s = 2.5;
  double noise_sigma_v = 0.05;
};

// Alternating liquid plateaus and gas troughs with per-cycle period jitter
// and small-bubble noise riding on the plateaus.
struct SlugParams {
  double plateau_v = 4.0;
  double trough_v = 1.2;
  double duty_min = 0.40;  // plateau (liquid) fraction of the cycle
  double duty_max = 0.60;
  double period_scale_s = 1.2;
  double period_min_s = 0.8;
  double period_max_s = 4.0;
  double period_jitter_frac = 0.20;
  double plateau_noise_sigma_v = 0.15;
  double trough_noise_sigma_v = 0.05;
};

// Slug skeleton destroyed by froth: broadband noise plus an oscillation.
struct ChurnParams {
  SlugParams skeleton{4.0, 1.2, 0.40, 0.60, 1.2, 0.3, 1.5, 0.20, 0.15, 0.05};
  double broadband_sigma_v = 0.5;
  double osc_freq_min_hz = 3.0;
  double osc_freq_max_hz = 8.0;
  double osc_amp_v = 0.4;
};

// Steady film/interface level with a travelling wave.
struct WaveParams {
  double base_v = 0.8;
  double wave_freq_min_hz = 10.0;
  double wave_freq_max_hz = 20.0;
  double wave_amp_v = 0.15;
  double noise_sigma_v = 0.05;
};

struct SynthConfig {
  std::uint64_t seed = 7071;
  double duration_s = 200.0;       // 20,000 samples at the default rate
  double sample_rate_hz = 100.0;

  // Velocity/inclination couplings shared by all archetypes: event periods
  // shrink as 1/u_GS, noise grows with the u_GS*u_OS product, inclination and
  // liquid velocity shift the level. These give within-class variation across
  // experiments, which is what makes held-out-experiment evaluation a real
  // distribution-shift test.
  double inclination_level_v_per_deg = 0.01;
  double velocity_noise_gain = 0.5;
  double u_os_level_v_per_mps = 0.4;

  LevelNoiseParams dispersed_bubble{4.5, 0.08};
  PeriodicDipParams plug{4.2, 3.0, 0.15, 0.25, 0.25, 0.5, 2.5, 0.05};
  PeriodicDipParams elongated_bubble{4.2, 2.2, 0.35, 0.55, 0.5, 1.0, 4.0, 0.05};
  SlugParams slug{4.0, 1.2, 0.40, 0.60, 1.2, 0.8, 4.0, 0.20, 0.15, 0.05};
  ChurnParams slug_churn{};
  WaveParams annular{0.8, 10.0, 20.0, 0.15, 0.05};
  WaveParams stratified_wavy{2.5, 0.5, 2.0, 0.4, 0.05};

  // Throws ConfigError on negative amplitudes, duty cycles outside [0, 1],
  // or a duration yielding fewer than 500 samples.
  void validate() const;
};

// Synthesizes one labelled experiment. Velocities are drawn uniformly from
// the envelope row; the trace is clamped to [0, 5] V. Deterministic in
// stream_seed. Throws ConfigError when env lacks a row for
// (pattern, inclination_deg).
Experiment generate_experiment(FlowPattern pattern, double inclination_deg,
                               std::uint64_t stream_seed,
                               const SynthConfig& cfg,
                               const PatternEnvelope& env);

// n experiments per envelope row. Each experiment's RNG stream is derived
// from (cfg.seed, pattern, inclination, index), so serial and parallel
// generation produce identical corpora.
std::vector<Experiment> generate_corpus(std::size_t n_per_row,
                                        const SynthConfig& cfg,
                                        const PatternEnvelope& env);

}  // namespace flowpat::synth
