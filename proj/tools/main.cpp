// flowpat: two-phase flow pattern classification toolkit.
//
// Subcommands: synth | ingest | split | train | eval | sweep | predict | psd.
// Exit codes: 0 success, 2 config error, 3 data error, 4 numeric/training
// error. Unrecognized --key value pairs are applied as dotted-path overrides
// into the run configuration (e.g. --train.epochs 30).

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "flowpat/errors.hpp"
#include "flowpat/pipeline.hpp"
#include "flowpat/trace_io.hpp"

namespace fs = std::filesystem;
using namespace flowpat;

namespace {

std::vector<std::pair<std::string, std::string>> collect_overrides(
    const std::vector<std::string>& extras) {
  std::vector<std::pair<std::string, std::string>> out;
  for (std::size_t i = 0; i < extras.size(); ++i) {
    const std::string& key = extras[i];
    if (key.rfind("--", 0) != 0)
      throw ConfigError("unexpected argument \"" + key + "\"");
    if (i + 1 >= extras.size())
      throw ConfigError("override \"" + key + "\" is missing a value");
    out.emplace_back(key.substr(2), extras[i + 1]);
    ++i;
  }
  return out;
}

void apply_thread_cap(const pipeline::RunConfig& cfg) {
  std::size_t cap = cfg.threads;
  if (const char* env = std::getenv("FLOWPAT_THREADS")) {
    char* end = nullptr;
    const unsigned long v = std::strtoul(env, &end, 10);
    if (end && *end == '\0' && v > 0) cap = cap == 0 ? v : std::min<std::size_t>(cap, v);
  }
#ifdef _OPENMP
  if (cap > 0) omp_set_num_threads(static_cast<int>(cap));
#else
  (void)cap;
#endif
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"two-phase flow pattern classification toolkit"};
  app.require_subcommand(1);
  app.allow_extras();

  std::optional<std::string> config_file;
  std::optional<std::uint64_t> seed_flag;
  std::string out_dir = ".";
  app.add_option("--config", config_file, "JSON run configuration");
  app.add_option("--seed", seed_flag, "master seed override");
  app.add_option("--out", out_dir, "output directory");

  auto* synth = app.add_subcommand("synth", "generate a synthetic corpus");
  synth->allow_extras();

  auto* ingest = app.add_subcommand("ingest", "validate and summarize a trace CSV");
  std::string ingest_trace;
  bool no_calibrate = false;
  ingest->add_option("--trace", ingest_trace, "trace CSV path")->required();
  ingest->add_flag("--no-calibrate", no_calibrate, "skip the 0-5 V clamp");
  ingest->allow_extras();

  auto* split = app.add_subcommand("split", "build a windowed dataset split");
  std::string split_corpus;
  split->add_option("--corpus", split_corpus, "corpus directory")->required();
  split->allow_extras();

  auto* train = app.add_subcommand("train", "train a classifier on a split");
  std::string train_split;
  train->add_option("--split", train_split, "split directory")->required();
  train->allow_extras();

  auto* evalc = app.add_subcommand("eval", "evaluate a trained model");
  std::string eval_model, eval_split;
  bool eval_force = false;
  evalc->add_option("--model", eval_model, "model checkpoint path")->required();
  evalc->add_option("--split", eval_split, "split directory")->required();
  evalc->add_flag("--force", eval_force, "ignore provenance hash mismatches");
  evalc->allow_extras();

  auto* sweep = app.add_subcommand("sweep", "run the hyperparameter grid");
  sweep->allow_extras();

  auto* predict = app.add_subcommand("predict", "sliding-window inference over a trace");
  std::string predict_model, predict_trace;
  predict->add_option("--model", predict_model, "model checkpoint path")->required();
  predict->add_option("--trace", predict_trace, "trace CSV path")->required();
  predict->allow_extras();

  auto* psd = app.add_subcommand("psd", "Welch power spectral density of a trace");
  std::string psd_trace;
  psd->add_option("--trace", psd_trace, "trace CSV path")->required();
  psd->allow_extras();

  for (CLI::App* sub : {synth, ingest, split, train, evalc, sweep, predict, psd})
    sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  try {
    std::vector<std::string> extras = app.remaining();
    for (CLI::App* sub :
         {synth, ingest, split, train, evalc, sweep, predict, psd})
      if (sub->parsed())
        for (const auto& x : sub->remaining()) extras.push_back(x);
    auto overrides = collect_overrides(extras);
    if (seed_flag) overrides.emplace_back("seed", std::to_string(*seed_flag));

    fs::path cfg_path;
    if (config_file) cfg_path = *config_file;
    pipeline::RunConfig cfg =
        pipeline::load_config(config_file ? &cfg_path : nullptr, overrides);
    apply_thread_cap(cfg);
    const fs::path out(out_dir);

    pipeline::ArtifactScope artifacts;
    if (synth->parsed()) {
      auto index = pipeline::run_synth(cfg, out);
      std::cout << "corpus written: " << index.string() << "\n";
    } else if (ingest->parsed()) {
      const auto trace = ingest_csv(ingest_trace, cfg.synth.signal.sample_rate_hz,
                                    !no_calibrate);
      double lo = trace.values()[0], hi = lo, sum = 0.0;
      for (double v : trace.values()) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
        sum += v;
      }
      std::cout << "samples: " << trace.size()
                << "\nduration_s: " << trace.duration_s()
                << "\nmin_v: " << lo << "\nmax_v: " << hi
                << "\nmean_v: " << sum / static_cast<double>(trace.size())
                << "\nin_calibration_range: "
                << (trace.all_in_calibration_range() ? "true" : "false")
                << "\n";
    } else if (split->parsed()) {
      auto manifest = pipeline::run_split(cfg, split_corpus, out);
      std::cout << "split written: " << manifest.string() << "\n";
    } else if (train->parsed()) {
      auto ckpt = pipeline::run_train(cfg, train_split, out, cfg.seed);
      std::cout << "model written: " << ckpt.string() << "\n";
    } else if (evalc->parsed()) {
      auto report =
          pipeline::run_eval(cfg, eval_model, eval_split, out, eval_force);
      std::cout << "report written: " << report.string() << "\n";
    } else if (sweep->parsed()) {
      auto reports = pipeline::run_sweep(cfg, out);
      for (const auto& r : reports) std::cout << r.string() << "\n";
    } else if (predict->parsed()) {
      auto csv = pipeline::run_predict(cfg, predict_model, predict_trace,
                                       out / "predictions.csv");
      std::cout << "predictions written: " << csv.string() << "\n";
    } else if (psd->parsed()) {
      auto outcome = pipeline::run_psd(cfg, psd_trace, out / "spectrum.csv");
      std::cout << "spectrum written: " << outcome.csv.string()
                << "\nf_c_hz: " << outcome.f_c_hz
                << "\nrecommended_f_s_hz: " << outcome.f_s_hz << "\n";
    }
    artifacts.commit();
    return 0;
  } catch (const ConfigError& e) {
    std::cerr << "error: config: " << e.what() << "\n";
    return 2;
  } catch (const DataError& e) {
    std::cerr << "error: data: " << e.what() << "\n";
    return 3;
  } catch (const NumericError& e) {
    std::cerr << "error: numeric: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
