#include <doctest.h>

#include <cmath>

#include "flowpat/errors.hpp"
#include "flowpat/eval.hpp"
#include "flowpat/models/pca.hpp"
#include "flowpat/models/senet.hpp"
#include "flowpat/rng.hpp"
#include "flowpat/synth.hpp"
#include "flowpat/train.hpp"
#include "test_helpers.hpp"

using namespace flowpat;
using eval::EvalReport;

namespace {

DatasetSplit small_split() {
  auto cfg = synth::SynthConfig{};
  cfg.seed = 808;
  cfg.duration_s = 30.0;
  const auto env = default_envelope();
  const auto corpus = synth::generate_corpus(2, cfg, env);
  return build_split(corpus, SplitProtocol::ExperimentBased, 24, 8, 500, 4);
}

models::SENetConfig tiny_senet() {
  models::SENetConfig cfg;
  cfg.block_stages = 2;
  cfg.width_ratio = 1;
  cfg.channels_per_width = 4;
  return cfg;
}

}  // namespace

TEST_CASE("training records one epoch per row and decreases the loss") {
  const auto split = small_split();
  auto net = models::build_senet(tiny_senet(), 17);
  models::TrainConfig tc;
  tc.epochs = 3;
  tc.batch_size = 32;
  tc.seed = 17;
  const auto result = models::train_deep_model(*net, split, tc);
  REQUIRE(result.log.epochs.size() == 3);
  for (std::size_t e = 0; e < 3; ++e)
    CHECK(result.log.epochs[e].epoch == e);
  CHECK(result.log.epochs.back().train_loss <
        result.log.epochs.front().train_loss);
  CHECK(result.best_eval_accuracy >= 0.0);
  CHECK(!result.best_parameters.empty());
}

TEST_CASE("training is deterministic in the seed") {
  const auto split = small_split();
  models::TrainConfig tc;
  tc.epochs = 2;
  tc.batch_size = 32;
  tc.seed = 33;
  auto a = models::build_senet(tiny_senet(), 33);
  auto b = models::build_senet(tiny_senet(), 33);
  const auto ra = models::train_deep_model(*a, split, tc);
  const auto rb = models::train_deep_model(*b, split, tc);
  REQUIRE(ra.log.epochs.size() == rb.log.epochs.size());
  for (std::size_t e = 0; e < ra.log.epochs.size(); ++e) {
    CHECK(ra.log.epochs[e].train_loss == rb.log.epochs[e].train_loss);
    CHECK(ra.log.epochs[e].eval_loss == rb.log.epochs[e].eval_loss);
    CHECK(ra.log.epochs[e].eval_accuracy == rb.log.epochs[e].eval_accuracy);
  }
  CHECK(models::flatten_parameters(*a) == models::flatten_parameters(*b));
}

TEST_CASE("flatten/load parameters round trip") {
  auto a = models::build_senet(tiny_senet(), 1);
  auto b = models::build_senet(tiny_senet(), 2);
  const auto flat = models::flatten_parameters(*a);
  models::load_flat_parameters(*b, flat);
  CHECK(models::flatten_parameters(*b) == flat);
  std::vector<double> wrong(flat.size() + 1, 0.0);
  CHECK_THROWS_AS(models::load_flat_parameters(*b, wrong), ConfigError);
}

TEST_CASE("perfect predictions give a diagonal confusion matrix") {
  std::vector<int> truth, pred;
  for (int c = 0; c < 7; ++c)
    for (int i = 0; i < 5; ++i) {
      truth.push_back(c);
      pred.push_back(c);
    }
  const auto r = eval::evaluate(truth, pred);
  CHECK(r.accuracy == 1.0);
  CHECK(r.macro_f1 == 1.0);
  CHECK(r.weighted_f1 == 1.0);
  for (int c = 0; c < 7; ++c) {
    CHECK(r.confusion[c][c] == 5);
    CHECK(r.per_class[c].f1 == 1.0);
    CHECK(r.per_class[c].support == 5);
  }
  CHECK(r.total() == 35);
}

TEST_CASE("constant predictor on balanced data hits 1/7 accuracy") {
  std::vector<int> truth, pred;
  for (int c = 0; c < 7; ++c)
    for (int i = 0; i < 10; ++i) {
      truth.push_back(c);
      pred.push_back(3);  // always Slug
    }
  const auto r = eval::evaluate(truth, pred);
  CHECK(r.accuracy == doctest::Approx(1.0 / 7.0));
  CHECK(r.per_class[3].recall == 1.0);
  CHECK(r.per_class[3].precision == doctest::Approx(1.0 / 7.0));
  // Classes never predicted: all-zero metric rows, no division faults.
  CHECK(r.per_class[0].precision == 0.0);
  CHECK(r.per_class[0].recall == 0.0);
  CHECK(r.per_class[0].f1 == 0.0);
}

TEST_CASE("metrics match a brute-force recount on random predictions") {
  Rng rng(909);
  for (int rep = 0; rep < 20; ++rep) {
    std::vector<int> truth(200), pred(200);
    for (auto& t : truth) t = static_cast<int>(rng.uniform_below(7));
    for (auto& p : pred) p = static_cast<int>(rng.uniform_below(7));
    const auto r = eval::evaluate(truth, pred);

    std::size_t correct = 0;
    for (int c = 0; c < 7; ++c) {
      std::size_t tp = 0, fp = 0, fn = 0;
      for (std::size_t i = 0; i < truth.size(); ++i) {
        if (truth[i] == c && pred[i] == c) ++tp;
        if (truth[i] != c && pred[i] == c) ++fp;
        if (truth[i] == c && pred[i] != c) ++fn;
      }
      correct += tp;
      const double precision =
          tp + fp ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0;
      const double recall =
          tp + fn ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 0.0;
      const double f1 = precision + recall > 0
                            ? 2 * precision * recall / (precision + recall)
                            : 0.0;
      CHECK(r.per_class[c].precision == precision);
      CHECK(r.per_class[c].recall == recall);
      CHECK(r.per_class[c].f1 == doctest::Approx(f1).epsilon(1e-15));
      CHECK(r.per_class[c].support == tp + fn);
    }
    CHECK(r.accuracy == doctest::Approx(static_cast<double>(correct) / 200.0));
  }
}

TEST_CASE("evaluate is invariant to sample order") {
  Rng rng(910);
  std::vector<int> truth(100), pred(100);
  for (auto& t : truth) t = static_cast<int>(rng.uniform_below(7));
  for (auto& p : pred) p = static_cast<int>(rng.uniform_below(7));
  const auto a = eval::evaluate(truth, pred);

  std::vector<std::size_t> perm(100);
  for (std::size_t i = 0; i < 100; ++i) perm[i] = i;
  rng.shuffle(perm);
  std::vector<int> truth2(100), pred2(100);
  for (std::size_t i = 0; i < 100; ++i) {
    truth2[i] = truth[perm[i]];
    pred2[i] = pred[perm[i]];
  }
  const auto b = eval::evaluate(truth2, pred2);
  CHECK(a.accuracy == b.accuracy);
  CHECK(a.macro_f1 == b.macro_f1);
  CHECK(a.confusion == b.confusion);
}

TEST_CASE("metric identities") {
  Rng rng(911);
  std::vector<int> truth(150), pred(150);
  for (auto& t : truth) t = static_cast<int>(rng.uniform_below(7));
  for (auto& p : pred) p = static_cast<int>(rng.uniform_below(7));
  const auto r = eval::evaluate(truth, pred);
  std::int64_t diag = 0, all = 0;
  for (int c = 0; c < 7; ++c) {
    std::int64_t row = 0;
    for (int p = 0; p < 7; ++p) {
      all += r.confusion[c][p];
      row += r.confusion[c][p];
      if (c == p) diag += r.confusion[c][p];
    }
    CHECK(static_cast<std::size_t>(row) == r.per_class[c].support);
  }
  CHECK(r.accuracy ==
        doctest::Approx(static_cast<double>(diag) / static_cast<double>(all)));
  CHECK(r.macro_f1 >= 0.0);
  CHECK(r.macro_f1 <= 1.0);
}

TEST_CASE("average_reports arithmetic and invariants") {
  Rng rng(912);
  auto random_report = [&](double bias) {
    std::vector<int> truth(70), pred(70);
    for (std::size_t i = 0; i < 70; ++i) {
      truth[i] = static_cast<int>(i % 7);
      pred[i] = rng.uniform() < bias ? truth[i]
                                     : static_cast<int>(rng.uniform_below(7));
    }
    return eval::evaluate(truth, pred);
  };

  const EvalReport r1 = random_report(0.9);
  const EvalReport r2 = random_report(0.3);
  const EvalReport avg = eval::average_reports(std::vector{r1, r2});
  CHECK(avg.accuracy == doctest::Approx((r1.accuracy + r2.accuracy) / 2));
  CHECK(avg.macro_f1 == doctest::Approx((r1.macro_f1 + r2.macro_f1) / 2));
  CHECK(avg.seeds_averaged == 2);
  CHECK(avg.total() == r1.total() + r2.total());

  // Permutation invariance.
  const EvalReport swapped = eval::average_reports(std::vector{r2, r1});
  CHECK(swapped.accuracy == doctest::Approx(avg.accuracy));
  CHECK(swapped.confusion == avg.confusion);

  // Five identical reports average to themselves.
  const EvalReport same =
      eval::average_reports(std::vector{r1, r1, r1, r1, r1});
  CHECK(same.accuracy == doctest::Approx(r1.accuracy));
  CHECK(same.macro_f1 == doctest::Approx(r1.macro_f1));
  CHECK(same.seeds_averaged == 5);
  CHECK(same.total() == 5 * r1.total());

  // Mismatched eval sizes are rejected.
  std::vector<int> small_truth{0, 1, 2}, small_pred{0, 1, 2};
  const EvalReport tiny = eval::evaluate(small_truth, small_pred);
  CHECK_THROWS_AS(eval::average_reports(std::vector{r1, tiny}), ConfigError);
}

TEST_CASE("confusion CSV round trips and training curve row count") {
  TempDir tmp("exports");
  Rng rng(913);
  std::vector<int> truth(70), pred(70);
  for (std::size_t i = 0; i < 70; ++i) {
    truth[i] = static_cast<int>(i % 7);
    pred[i] = static_cast<int>(rng.uniform_below(7));
  }
  const auto r = eval::evaluate(truth, pred);
  eval::export_confusion_csv(r, tmp / "confusion.csv");
  const auto back = eval::import_confusion_csv(tmp / "confusion.csv");
  CHECK(back == r.confusion);

  eval::export_confusion_csv(r, tmp / "confusion_norm.csv", true);
  const auto text = read_file(tmp / "confusion_norm.csv");
  CHECK(text.find("DispersedBubble") != std::string::npos);

  models::TrainingLog log;
  for (std::size_t e = 0; e < 5; ++e)
    log.epochs.push_back({e, 1.0 / (1.0 + static_cast<double>(e)), 0.5, 0.8});
  eval::export_training_curve_csv(log, tmp / "curve.csv");
  const auto curve = read_file(tmp / "curve.csv");
  std::size_t rows = 0;
  for (char ch : curve)
    if (ch == '\n') ++rows;
  CHECK(rows == 6);  // header + one row per epoch
}

TEST_CASE("pca_2d export has one row per sample") {
  TempDir tmp("pca2d");
  Rng rng(914);
  Matrix x(30, 6);
  for (auto& v : x.data) v = rng.uniform(0.0, 1.0);
  models::Pca pca;
  pca.fit(x, 2);
  std::vector<int> labels(30);
  for (auto& l : labels) l = static_cast<int>(rng.uniform_below(7));
  eval::export_pca_2d_csv(pca.transform(x), labels, tmp / "pca.csv");
  const auto text = read_file(tmp / "pca.csv");
  std::size_t rows = 0;
  for (char ch : text)
    if (ch == '\n') ++rows;
  CHECK(rows == 31);
}

TEST_CASE("reference results table is keyed by model type") {
  const auto senet = eval::reference_for("senet1d");
  REQUIRE(senet.has_value());
  CHECK(senet->experiment_based_accuracy == 0.850);
  CHECK(senet->pattern_based_accuracy == 0.712);
  CHECK(senet->implemented);
  const auto transformer = eval::reference_for("transformer");
  REQUIRE(transformer.has_value());
  CHECK(!transformer->implemented);
  CHECK(!eval::reference_for("nonesuch").has_value());
  CHECK(eval::reference_results().size() == 11);
}
