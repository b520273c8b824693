#include <doctest.h>

#include <cmath>
#include <map>
#include <numeric>

#include "flowpat/dataset.hpp"
#include "flowpat/errors.hpp"
#include "flowpat/models/tree.hpp"
#include "flowpat/synth.hpp"

using namespace flowpat;
using synth::SynthConfig;

namespace {

double mean_of(const std::vector<double>& v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double variance_of(const std::vector<double>& v) {
  const double m = mean_of(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return s / static_cast<double>(v.size());
}

SynthConfig desk_config() {
  SynthConfig cfg;
  cfg.seed = 4242;
  cfg.duration_s = 40.0;  // 4,000 samples keeps the Monte-Carlo cheap
  return cfg;
}

}  // namespace

TEST_CASE("generate_experiment draws velocities from the envelope row") {
  const auto env = default_envelope();
  const auto cfg = desk_config();
  for (std::uint64_t seed = 7; seed < 27; ++seed) {
    const auto e = synth::generate_experiment(FlowPattern::DispersedBubble, 0.0,
                                              seed, cfg, env);
    CHECK(e.u_gs_mps >= 0.000);
    CHECK(e.u_gs_mps <= 0.100);
    CHECK(e.u_os_mps >= 0.675);
    CHECK(e.u_os_mps <= 1.120);
    CHECK(e.label == FlowPattern::DispersedBubble);
    CHECK(validate_experiment(e, env).ok());
  }
}

TEST_CASE("generate_experiment is deterministic in the stream seed") {
  const auto env = default_envelope();
  const auto cfg = desk_config();
  const auto a = synth::generate_experiment(FlowPattern::Slug, 15.0, 99, cfg, env);
  const auto b = synth::generate_experiment(FlowPattern::Slug, 15.0, 99, cfg, env);
  CHECK(a.u_gs_mps == b.u_gs_mps);
  CHECK(a.u_os_mps == b.u_os_mps);
  CHECK(a.trace.values() == b.trace.values());
  const auto c = synth::generate_experiment(FlowPattern::Slug, 15.0, 100, cfg, env);
  CHECK(a.trace.values() != c.trace.values());
}

TEST_CASE("generated samples stay inside the calibration range") {
  const auto env = default_envelope();
  const auto cfg = desk_config();
  for (FlowPattern p : all_patterns()) {
    const auto rows = env.rows_for(p);
    REQUIRE(!rows.empty());
    const auto e = synth::generate_experiment(p, rows[0].inclination_deg, 5,
                                              cfg, env);
    CHECK(e.trace.all_in_calibration_range());
  }
}

TEST_CASE("missing envelope row is a configuration error") {
  const auto env = default_envelope();
  CHECK_THROWS_AS(
      synth::generate_experiment(FlowPattern::Plug, 0.0, 1, desk_config(), env),
      ConfigError);
}

TEST_CASE("slug mean sits between annular and dispersed bubble") {
  const auto env = default_envelope();
  const auto cfg = desk_config();
  double slug = 0.0, annular = 0.0, bubble = 0.0;
  const int runs = 100;
  for (int i = 0; i < runs; ++i) {
    const auto s = static_cast<std::uint64_t>(i);
    slug += mean_of(
        synth::generate_experiment(FlowPattern::Slug, 0.0, s, cfg, env)
            .trace.values());
    annular += mean_of(
        synth::generate_experiment(FlowPattern::Annular, 0.0, s, cfg, env)
            .trace.values());
    bubble += mean_of(synth::generate_experiment(FlowPattern::DispersedBubble,
                                                 0.0, s, cfg, env)
                          .trace.values());
  }
  slug /= runs;
  annular /= runs;
  bubble /= runs;
  CHECK(slug > annular);
  CHECK(slug < bubble);
}

TEST_CASE("archetype mean and variance orderings hold over a window Monte-Carlo") {
  const auto env = default_envelope();
  const auto cfg = desk_config();
  // 1,000 windows per pattern: 50 experiments x 20 windows of 500 samples.
  auto window_stats = [&](FlowPattern p, double incl) {
    std::vector<double> means, vars;
    for (int i = 0; i < 50; ++i) {
      const auto e = synth::generate_experiment(
          p, incl, static_cast<std::uint64_t>(1000 + i), cfg, env);
      for (int w = 0; w < 20; ++w) {
        const std::size_t start = static_cast<std::size_t>(w) * 175;
        const auto win = window_at(e.trace, start, 500);
        std::vector<double> v(win.begin(), win.end());
        means.push_back(mean_of(v));
        vars.push_back(variance_of(v));
      }
    }
    return std::pair{mean_of(means), mean_of(vars)};
  };

  const auto bubble = window_stats(FlowPattern::DispersedBubble, 0.0);
  const auto plug = window_stats(FlowPattern::Plug, 15.0);
  const auto annular = window_stats(FlowPattern::Annular, 0.0);
  const auto slug = window_stats(FlowPattern::Slug, 0.0);
  const auto churn = window_stats(FlowPattern::SlugChurn, 0.0);

  CHECK(bubble.first > plug.first);
  CHECK(plug.first > annular.first);
  CHECK(churn.second > slug.second);
  CHECK(slug.second > bubble.second);
}

TEST_CASE("generate_corpus yields n experiments per envelope row") {
  const auto env = default_envelope();
  auto cfg = desk_config();
  const auto corpus = synth::generate_corpus(2, cfg, env);
  CHECK(corpus.size() == 2 * env.rows().size());
  CHECK(corpus.size() == 36);  // 18 rows

  std::map<std::string, int> ids;
  for (const auto& e : corpus) {
    ++ids[e.id];
    CHECK(validate_experiment(e, env).ok());
  }
  for (const auto& [id, count] : ids) CHECK(count == 1);
}

TEST_CASE("corpus restricted to one pattern") {
  const auto env = default_envelope();
  const FlowPattern only[] = {FlowPattern::StratifiedWavy};
  const auto restricted = env.restricted_to(only);
  const auto corpus = synth::generate_corpus(1, desk_config(), restricted);
  REQUIRE(corpus.size() == 1);
  CHECK(corpus[0].label == FlowPattern::StratifiedWavy);
  CHECK(corpus[0].inclination_deg == 0.0);
}

TEST_CASE("corpus regeneration is identical") {
  const auto env = default_envelope();
  const auto cfg = desk_config();
  const auto a = synth::generate_corpus(1, cfg, env);
  const auto b = synth::generate_corpus(1, cfg, env);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].id == b[i].id);
    CHECK(a[i].u_gs_mps == b[i].u_gs_mps);
    CHECK(a[i].trace.values() == b[i].trace.values());
  }
}

TEST_CASE("config validation rejects out-of-range archetypes") {
  auto cfg = desk_config();
  cfg.duration_s = 1.0;  // fewer than 500 samples
  CHECK_THROWS_AS(cfg.validate(), ConfigError);

  cfg = desk_config();
  cfg.plug.duty_min = 0.8;
  cfg.plug.duty_max = 0.3;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);

  cfg = desk_config();
  cfg.slug_churn.broadband_sigma_v = -0.1;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
}

TEST_CASE("generated corpus is separable by an unbounded decision tree") {
  const auto env = default_envelope();
  auto cfg = desk_config();
  const auto corpus = synth::generate_corpus(2, cfg, env);
  const auto split =
      build_split(corpus, SplitProtocol::ExperimentBased, 60, 15, 500, 11);
  const Matrix x = to_matrix(split.train);
  const auto y = to_labels(split.train);
  models::DecisionTree tree;
  tree.fit(x, y);
  CHECK(tree.training_accuracy(x, y) >= 0.95);
}
