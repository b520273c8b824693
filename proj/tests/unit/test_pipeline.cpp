#include <doctest.h>

#include <fstream>

#include "flowpat/checkpoint.hpp"
#include "flowpat/errors.hpp"
#include "flowpat/models/senet.hpp"
#include "flowpat/pipeline.hpp"
#include "flowpat/trace_io.hpp"
#include "test_helpers.hpp"

using namespace flowpat;
using pipeline::RunConfig;

namespace {

// Desk-scale configuration that runs in seconds.
RunConfig tiny_config() {
  RunConfig cfg;
  cfg.seed = 123;
  cfg.synth.experiments_per_row = 1;
  cfg.synth.signal.seed = cfg.seed;
  cfg.synth.signal.duration_s = 30.0;
  cfg.split.train_per_pattern = 16;
  cfg.split.eval_per_pattern = 8;
  cfg.model.senet.block_stages = 1;
  cfg.model.senet.width_ratio = 1;
  cfg.model.senet.channels_per_width = 4;
  cfg.train.epochs = 1;
  cfg.train.batch_size = 16;
  return cfg;
}

}  // namespace

TEST_CASE("config JSON round trip preserves the hash") {
  const RunConfig cfg;
  const auto j = pipeline::to_json(cfg);
  const RunConfig back = pipeline::config_from_json(j);
  CHECK(pipeline::config_hash(cfg) == pipeline::config_hash(back));
}

TEST_CASE("config loader rejects unknown keys and wrong types") {
  TempDir tmp("cfg");
  write_file(tmp / "bad_key.json", R"({"trian": {"epochs": 3}})");
  const auto bad_key_path = tmp / "bad_key.json";
  CHECK_THROWS_AS(pipeline::load_config(&bad_key_path, {}), ConfigError);

  write_file(tmp / "bad_nested.json", R"({"train": {"epochz": 3}})");
  const auto bad_nested_path = tmp / "bad_nested.json";
  CHECK_THROWS_AS(pipeline::load_config(&bad_nested_path, {}), ConfigError);

  write_file(tmp / "bad_type.json", R"({"train": {"epochs": "three"}})");
  const auto bad_type_path = tmp / "bad_type.json";
  CHECK_THROWS_AS(pipeline::load_config(&bad_type_path, {}), ConfigError);

  write_file(tmp / "good.json", R"({"train": {"epochs": 5}, "seed": 9})");
  const auto good_path = tmp / "good.json";
  const auto cfg = pipeline::load_config(&good_path, {});
  CHECK(cfg.train.epochs == 5);
  CHECK(cfg.seed == 9);
}

TEST_CASE("dotted-path overrides") {
  const auto cfg = pipeline::load_config(
      nullptr, {{"train.epochs", "7"},
                {"model.senet.kernel_size", "3"},
                {"model.senet.use_dropout", "false"},
                {"split.protocol", "pattern_based"},
                {"train.lr", "0.005"}});
  CHECK(cfg.train.epochs == 7);
  CHECK(cfg.model.senet.kernel_size == 3);
  CHECK(!cfg.model.senet.use_dropout);
  CHECK(cfg.split.protocol == SplitProtocol::PatternBased);
  CHECK(cfg.train.optimizer.lr == 0.005);

  CHECK_THROWS_AS(pipeline::load_config(nullptr, {{"train.epochz", "7"}}),
                  ConfigError);
  CHECK_THROWS_AS(pipeline::load_config(nullptr, {{"train", "7"}}),
                  ConfigError);
  CHECK_THROWS_AS(pipeline::load_config(nullptr, {{"train.epochs", "x"}}),
                  ConfigError);
}

TEST_CASE("config validation failures surface as ConfigError") {
  CHECK_THROWS_AS(pipeline::load_config(nullptr, {{"model.type", "vit"}}),
                  ConfigError);
  CHECK_THROWS_AS(
      pipeline::load_config(nullptr, {{"psd.sampling_margin_k", "5.0"}}),
      ConfigError);
  CHECK_THROWS_AS(
      pipeline::load_config(nullptr, {{"model.senet.dropout_rate", "1.0"}}),
      ConfigError);
}

TEST_CASE("checkpoint save/load restores the exact model state") {
  TempDir tmp("ckpt");
  models::SENetConfig scfg;
  scfg.block_stages = 1;
  scfg.width_ratio = 1;
  scfg.channels_per_width = 2;
  auto net = models::build_senet(scfg, 42);
  // Nudge some running stats so buffers are exercised too.
  net->set_training(true);
  Rng rng(5);
  std::vector<double> data(2 * 500);
  for (auto& v : data) v = rng.uniform(0.0, 5.0);
  auto x = nn::Tensor::from({2, 1, 500}, data);
  (void)net->forward(x);

  nlohmann::json meta{{"note", "test"}};
  models::save_checkpoint(*net, "senet1d", models::senet_config_to_json(scfg),
                          meta, tmp / "m.fpck");
  CHECK(models::is_deep_checkpoint(tmp / "m.fpck"));

  auto loaded = models::load_checkpoint(tmp / "m.fpck");
  CHECK(loaded.model_type == "senet1d");
  CHECK(loaded.meta.at("note") == "test");

  net->set_training(false);
  loaded.module->set_training(false);
  auto y1 = net->forward(x);
  auto y2 = loaded.module->forward(x);
  CHECK(y1.values() == y2.values());
}

TEST_CASE("checkpoint rejects mismatched architectures") {
  TempDir tmp("ckpt2");
  models::SENetConfig scfg;
  scfg.block_stages = 1;
  scfg.width_ratio = 1;
  auto net = models::build_senet(scfg, 1);
  models::save_checkpoint(*net, "senet1d", models::senet_config_to_json(scfg),
                          {}, tmp / "m.fpck");
  // Corrupt the stored arch so shapes no longer line up.
  auto text = read_file(tmp / "m.fpck");
  const auto pos = text.find("\"width_ratio\":1");
  REQUIRE(pos != std::string::npos);
  text.replace(pos, 15, "\"width_ratio\":2");
  write_file(tmp / "bad.fpck", text);
  CHECK_THROWS_AS(models::load_checkpoint(tmp / "bad.fpck"), DataError);
}

TEST_CASE("synth -> split -> train -> eval round trip on disk") {
  TempDir tmp("e2e");
  const RunConfig cfg = tiny_config();

  pipeline::ArtifactScope scope;
  const auto index = pipeline::run_synth(cfg, tmp / "corpus");
  CHECK(std::filesystem::exists(index));
  const auto corpus = pipeline::load_corpus(tmp / "corpus");
  CHECK(corpus.size() == 18);

  const auto manifest = pipeline::run_split(cfg, tmp / "corpus", tmp / "split");
  CHECK(std::filesystem::exists(manifest));
  const auto loaded = pipeline::load_split(cfg, tmp / "split");
  CHECK(loaded.split.train.size() == 16 * 7);
  CHECK(loaded.split.eval.size() == 8 * 7);

  const auto ckpt = pipeline::run_train(cfg, tmp / "split", tmp / "run", cfg.seed);
  CHECK(std::filesystem::exists(ckpt));
  CHECK(std::filesystem::exists(tmp / "run" / "training_curve.csv"));

  const auto report_path =
      pipeline::run_eval(cfg, ckpt, tmp / "split", tmp / "run");
  CHECK(std::filesystem::exists(report_path));
  CHECK(std::filesystem::exists(tmp / "run" / "confusion.csv"));
  CHECK(std::filesystem::exists(tmp / "run" / "confusion_normalized.csv"));
  CHECK(std::filesystem::exists(tmp / "run" / "pca_2d.csv"));

  std::ifstream in(report_path);
  nlohmann::json report;
  in >> report;
  CHECK(report.at("model_type") == "senet1d");
  CHECK(report.at("checkpoint_hash") == pipeline::file_hash(ckpt));
  CHECK(report.at("config_hash") == pipeline::config_hash(cfg));
  CHECK(report.at("total_samples") == 8 * 7);
  CHECK(report.contains("reference_results"));
  scope.commit();
}

TEST_CASE("eval refuses a checkpoint trained against a different split") {
  TempDir tmp("prov");
  RunConfig cfg = tiny_config();

  pipeline::ArtifactScope scope;
  pipeline::run_synth(cfg, tmp / "corpus");
  pipeline::run_split(cfg, tmp / "corpus", tmp / "splitA");
  const auto ckpt =
      pipeline::run_train(cfg, tmp / "splitA", tmp / "run", cfg.seed);

  RunConfig other = cfg;
  other.seed = 321;  // different split bytes
  other.synth.signal.seed = 321;
  pipeline::run_split(other, tmp / "corpus", tmp / "splitB");

  CHECK_THROWS_AS(
      pipeline::run_eval(cfg, ckpt, tmp / "splitB", tmp / "runB", false),
      ConfigError);
  // Forced evaluation must proceed.
  CHECK_NOTHROW(
      pipeline::run_eval(cfg, ckpt, tmp / "splitB", tmp / "runB", true));
  scope.commit();
}

TEST_CASE("classical model training writes a typed JSON document") {
  TempDir tmp("classical");
  RunConfig cfg = tiny_config();
  cfg.model.type = "random_forest";
  cfg.model.forest.n_trees = 5;
  cfg.model.pca_components = 6;

  pipeline::ArtifactScope scope;
  pipeline::run_synth(cfg, tmp / "corpus");
  pipeline::run_split(cfg, tmp / "corpus", tmp / "split");
  const auto model_path =
      pipeline::run_train(cfg, tmp / "split", tmp / "run", cfg.seed);
  CHECK(model_path.filename() == "model.json");
  CHECK(!models::is_deep_checkpoint(model_path));

  std::ifstream in(model_path);
  nlohmann::json doc;
  in >> doc;
  CHECK(doc.at("model_type") == "random_forest");
  CHECK(doc.at("version") == 1);
  CHECK(doc.contains("pca"));
  CHECK(doc.at("meta").at("pca_components") == 6);

  const auto report_path =
      pipeline::run_eval(cfg, model_path, tmp / "split", tmp / "run");
  std::ifstream rin(report_path);
  nlohmann::json report;
  rin >> report;
  // PCA-fronted forest reports under the *_pca reference key.
  CHECK(report.at("model_type") == "random_forest_pca");
  scope.commit();
}

TEST_CASE("svm pipeline standardizes and round trips through disk") {
  TempDir tmp("svmpipe");
  RunConfig cfg = tiny_config();
  cfg.model.type = "svm";
  cfg.model.svm.epochs = 3;

  pipeline::ArtifactScope scope;
  pipeline::run_synth(cfg, tmp / "corpus");
  pipeline::run_split(cfg, tmp / "corpus", tmp / "split");
  const auto model_path =
      pipeline::run_train(cfg, tmp / "split", tmp / "run", cfg.seed);
  std::ifstream in(model_path);
  nlohmann::json doc;
  in >> doc;
  CHECK(doc.contains("standardization"));
  CHECK_NOTHROW(pipeline::run_eval(cfg, model_path, tmp / "split", tmp / "run"));
  scope.commit();
}

TEST_CASE("predict emits one row per stride window") {
  TempDir tmp("predict");
  RunConfig cfg = tiny_config();

  pipeline::ArtifactScope scope;
  pipeline::run_synth(cfg, tmp / "corpus");
  pipeline::run_split(cfg, tmp / "corpus", tmp / "split");
  const auto ckpt =
      pipeline::run_train(cfg, tmp / "split", tmp / "run", cfg.seed);

  // 1,000-sample trace at stride 500 -> exactly 2 windows.
  std::vector<double> v(1000, 2.0);
  write_trace_csv(CapacitanceTrace(100.0, v), tmp / "probe.csv");
  const auto out =
      pipeline::run_predict(cfg, ckpt, tmp / "probe.csv", tmp / "pred.csv");
  const auto text = read_file(out);
  std::size_t rows = 0;
  for (char ch : text)
    if (ch == '\n') ++rows;
  CHECK(rows == 3);  // header + 2 windows
  CHECK(text.find("start_index,predicted_label,confidence") == 0);
  CHECK(text.find("\n0,") != std::string::npos);
  CHECK(text.find("\n500,") != std::string::npos);
  scope.commit();
}

TEST_CASE("psd pipeline writes a spectrum and a sampling plan") {
  TempDir tmp("psdpipe");
  RunConfig cfg = tiny_config();
  std::vector<double> v(8192);
  for (std::size_t i = 0; i < v.size(); ++i)
    v[i] = 2.5 + std::sin(2.0 * 3.14159265358979 * 10.0 * i / 100.0);
  write_trace_csv(CapacitanceTrace(100.0, v), tmp / "sine.csv");

  pipeline::ArtifactScope scope;
  const auto outcome = pipeline::run_psd(cfg, tmp / "sine.csv", tmp / "spec.csv");
  CHECK(std::filesystem::exists(outcome.csv));
  CHECK(outcome.f_c_hz >= 9.0);
  CHECK(outcome.f_c_hz <= 11.0);
  CHECK(outcome.f_s_hz == doctest::Approx(outcome.f_c_hz * 2.5));
  const auto text = read_file(outcome.csv);
  CHECK(text.find("freq_hz,power") == 0);
  scope.commit();
}

TEST_CASE("uncommitted artifact scopes remove what was written") {
  TempDir tmp("rollback");
  const auto keep = tmp / "keep.txt";
  const auto drop = tmp / "drop.txt";
  {
    pipeline::ArtifactScope scope;
    write_file(keep, "kept");
    pipeline::note_artifact(keep);
    scope.commit();
  }
  CHECK(std::filesystem::exists(keep));
  {
    pipeline::ArtifactScope scope;
    write_file(drop, "partial");
    pipeline::note_artifact(drop);
    // no commit: scope exit stands in for an error unwinding the stack
  }
  CHECK(!std::filesystem::exists(drop));

  // A failing step under a scope leaves no partial split behind.
  RunConfig cfg = tiny_config();
  bool threw = false;
  try {
    pipeline::ArtifactScope scope;
    pipeline::run_split(cfg, tmp / "no_such_corpus", tmp / "split");
    scope.commit();
  } catch (const DataError&) {
    threw = true;
  }
  CHECK(threw);
  CHECK(!std::filesystem::exists(tmp / "split" / "train.csv"));
}
