#include "flowpat/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "flowpat/errors.hpp"

namespace flowpat::synth {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

void require(bool cond, const char* what) {
  if (!cond) throw ConfigError(std::string("synth config: ") + what);
}

double clamp_period(double raw, double lo, double hi) {
  return std::clamp(raw, lo, hi);
}

struct Draw {
  double u_gs;
  double u_os;
  double level_offset;  // inclination coupling
  double noise_scale;   // velocity coupling
};

std::vector<double> synthesize(FlowPattern pattern, const Draw& d,
                               const SynthConfig& cfg, Rng& rng,
                               std::size_t n) {
  const double dt = 1.0 / cfg.sample_rate_hz;
  std::vector<double> v(n);

  auto fill_periodic_dips = [&](const PeriodicDipParams& p) {
    const double period =
        clamp_period(p.period_scale_s / std::max(d.u_gs, 0.05), p.period_min_s,
                     p.period_max_s);
    const double duty = rng.uniform(p.duty_min, p.duty_max);
    const double phase = rng.uniform(0.0, period);
    const double sigma = p.noise_sigma_v * d.noise_scale;
    for (std::size_t i = 0; i < n; ++i) {
      const double t = static_cast<double>(i) * dt + phase;
      const double pos = t / period - std::floor(t / period);
      const double level = pos < duty ? p.dip_v : p.base_v;
      v[i] = level + d.level_offset + rng.normal(0.0, sigma);
    }
  };

  auto fill_slug = [&](const SlugParams& p, double extra_sigma,
                       double osc_freq, double osc_amp) {
    const double period =
        clamp_period(p.period_scale_s / std::max(d.u_gs, 0.05), p.period_min_s,
                     p.period_max_s);
    const double duty = rng.uniform(p.duty_min, p.duty_max);
    const double osc_phase = rng.uniform(0.0, kTwoPi);
    // Start mid-cycle so windows see every phase of the slug cycle.
    std::size_t skip = rng.uniform_below(
        std::max<std::uint64_t>(1, static_cast<std::uint64_t>(period / dt)));
    std::size_t i = 0;
    // Walk cycle by cycle; each cycle's length is jittered independently.
    while (i < n) {
      const double cycle_s =
          period * (1.0 + rng.uniform(-p.period_jitter_frac, p.period_jitter_frac));
      const auto cycle_len = std::max<std::size_t>(
          2, static_cast<std::size_t>(std::llround(cycle_s / dt)));
      const auto plateau_len =
          static_cast<std::size_t>(std::llround(duty * static_cast<double>(cycle_len)));
      for (std::size_t j = 0; j < cycle_len && i < n; ++j) {
        if (skip > 0) {
          --skip;
          continue;
        }
        const bool plateau = j < plateau_len;
        const double sigma =
            (plateau ? p.plateau_noise_sigma_v : p.trough_noise_sigma_v) *
            d.noise_scale;
        double sample = (plateau ? p.plateau_v : p.trough_v) + d.level_offset +
                        rng.normal(0.0, sigma);
        if (extra_sigma > 0.0) sample += rng.normal(0.0, extra_sigma);
        if (osc_amp > 0.0)
          sample += osc_amp * std::sin(kTwoPi * osc_freq *
                                           static_cast<double>(i) * dt +
                                       osc_phase);
        v[i++] = sample;
      }
    }
  };

  auto fill_wave = [&](const WaveParams& p) {
    const double freq = rng.uniform(p.wave_freq_min_hz, p.wave_freq_max_hz);
    const double phase = rng.uniform(0.0, kTwoPi);
    const double sigma = p.noise_sigma_v * d.noise_scale;
    for (std::size_t i = 0; i < n; ++i) {
      const double t = static_cast<double>(i) * dt;
      v[i] = p.base_v + d.level_offset +
             p.wave_amp_v * std::sin(kTwoPi * freq * t + phase) +
             rng.normal(0.0, sigma);
    }
  };

  switch (pattern) {
    case FlowPattern::DispersedBubble: {
      const auto& p = cfg.dispersed_bubble;
      const double sigma = p.noise_sigma_v * d.noise_scale;
      for (std::size_t i = 0; i < n; ++i)
        v[i] = p.base_v + d.level_offset + rng.normal(0.0, sigma);
      break;
    }
    case FlowPattern::Plug:
      fill_periodic_dips(cfg.plug);
      break;
    case FlowPattern::ElongatedBubble:
      fill_periodic_dips(cfg.elongated_bubble);
      break;
    case FlowPattern::Slug:
      fill_slug(cfg.slug, 0.0, 0.0, 0.0);
      break;
    case FlowPattern::SlugChurn: {
      const auto& p = cfg.slug_churn;
      const double osc_freq = rng.uniform(p.osc_freq_min_hz, p.osc_freq_max_hz);
      fill_slug(p.skeleton, p.broadband_sigma_v, osc_freq, p.osc_amp_v);
      break;
    }
    case FlowPattern::StratifiedWavy:
      fill_wave(cfg.stratified_wavy);
      break;
    case FlowPattern::Annular:
      fill_wave(cfg.annular);
      break;
  }

  for (double& x : v) x = clamp_voltage(x);
  return v;
}

}  // namespace

void SynthConfig::validate() const {
  require(duration_s > 0.0 && sample_rate_hz > 0.0,
          "duration and sample rate must be positive");
  require(duration_s * sample_rate_hz >= 500.0,
          "duration x sample rate must yield at least 500 samples");
  require(velocity_noise_gain >= 0.0, "velocity_noise_gain must be >= 0");
  auto check_dips = [](const PeriodicDipParams& p, const char* what) {
    require(p.noise_sigma_v >= 0.0, what);
    require(p.duty_min >= 0.0 && p.duty_max <= 1.0 && p.duty_min <= p.duty_max,
            what);
    require(p.period_min_s > 0.0 && p.period_min_s <= p.period_max_s, what);
  };
  auto check_slug = [](const SlugParams& p, const char* what) {
    require(p.plateau_noise_sigma_v >= 0.0 && p.trough_noise_sigma_v >= 0.0,
            what);
    require(p.duty_min >= 0.0 && p.duty_max <= 1.0 && p.duty_min <= p.duty_max,
            what);
    require(p.period_min_s > 0.0 && p.period_min_s <= p.period_max_s, what);
    require(p.period_jitter_frac >= 0.0 && p.period_jitter_frac < 1.0, what);
  };
  require(dispersed_bubble.noise_sigma_v >= 0.0, "dispersed_bubble noise");
  check_dips(plug, "plug parameters out of range");
  check_dips(elongated_bubble, "elongated_bubble parameters out of range");
  check_slug(slug, "slug parameters out of range");
  check_slug(slug_churn.skeleton, "slug_churn skeleton out of range");
  require(slug_churn.broadband_sigma_v >= 0.0 && slug_churn.osc_amp_v >= 0.0,
          "slug_churn amplitudes must be >= 0");
  require(slug_churn.osc_freq_min_hz > 0.0 &&
              slug_churn.osc_freq_min_hz <= slug_churn.osc_freq_max_hz,
          "slug_churn oscillation band invalid");
  auto check_wave = [](const WaveParams& p, const char* what) {
    require(p.wave_amp_v >= 0.0 && p.noise_sigma_v >= 0.0, what);
    require(p.wave_freq_min_hz > 0.0 && p.wave_freq_min_hz <= p.wave_freq_max_hz,
            what);
  };
  check_wave(annular, "annular parameters out of range");
  check_wave(stratified_wavy, "stratified_wavy parameters out of range");
}

Experiment generate_experiment(FlowPattern pattern, double inclination_deg,
                               std::uint64_t stream_seed,
                               const SynthConfig& cfg,
                               const PatternEnvelope& env) {
  cfg.validate();
  const EnvelopeRow* row = env.find(pattern, inclination_deg);
  if (!row)
    throw ConfigError("no envelope row for " +
                      std::string(to_string(pattern)) + " at " +
                      std::to_string(inclination_deg) + " deg");

  Rng rng(stream_seed);
  // Draw order is part of the format: u_GS, u_OS, then archetype internals.
  Draw d;
  d.u_gs = rng.uniform(row->u_gs.min_mps, row->u_gs.max_mps);
  d.u_os = rng.uniform(row->u_os.min_mps, row->u_os.max_mps);
  d.level_offset = cfg.inclination_level_v_per_deg * inclination_deg +
                   cfg.u_os_level_v_per_mps * d.u_os;
  d.noise_scale = 1.0 + cfg.velocity_noise_gain * d.u_gs * d.u_os;

  const auto n = static_cast<std::size_t>(
      std::llround(cfg.duration_s * cfg.sample_rate_hz));
  std::vector<double> values = synthesize(pattern, d, cfg, rng, n);

  return Experiment{std::string(),
                    inclination_deg,
                    d.u_gs,
                    d.u_os,
                    pattern,
                    CapacitanceTrace(cfg.sample_rate_hz, std::move(values))};
}

std::vector<Experiment> generate_corpus(std::size_t n_per_row,
                                        const SynthConfig& cfg,
                                        const PatternEnvelope& env) {
  if (n_per_row == 0) throw ConfigError("generate_corpus: n_per_row must be >= 1");
  cfg.validate();
  std::vector<Experiment> out;
  out.reserve(env.rows().size() * n_per_row);
  for (const auto& row : env.rows()) {
    for (std::size_t i = 0; i < n_per_row; ++i) {
      const auto incl_centideg =
          static_cast<std::uint64_t>(std::llround(row.inclination_deg * 100.0));
      const std::uint64_t stream = derive_seed(
          cfg.seed, {static_cast<std::uint64_t>(pattern_code(row.pattern)),
                     incl_centideg, i});
      Experiment e =
          generate_experiment(row.pattern, row.inclination_deg, stream, cfg, env);
      char buf[96];
      std::snprintf(buf, sizeof(buf), "%s_%02ddeg_%03zu",
                    std::string(to_string(row.pattern)).c_str(),
                    static_cast<int>(std::llround(row.inclination_deg)), i);
      e.id = buf;
      out.push_back(std::move(e));
    }
  }
  return out;
}

}  // namespace flowpat::synth
