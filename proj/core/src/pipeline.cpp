#include "flowpat/pipeline.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <numeric>

#include "flowpat/checkpoint.hpp"
#include "flowpat/dsp.hpp"
#include "flowpat/errors.hpp"
#include "flowpat/models/baselines.hpp"
#include "flowpat/models/pca.hpp"
#include "flowpat/models/senet.hpp"
#include "flowpat/models/svm.hpp"
#include "flowpat/models/tree.hpp"
#include "flowpat/trace_io.hpp"

namespace flowpat::pipeline {

namespace fs = std::filesystem;

// ---- artifact tracking ----

namespace {
thread_local std::vector<fs::path>* g_artifacts = nullptr;
thread_local std::vector<fs::path> g_artifact_storage;
}  // namespace

ArtifactScope::ArtifactScope() {
  if (!g_artifacts) {
    g_artifact_storage.clear();
    g_artifacts = &g_artifact_storage;
    owner_ = true;
  }
}

ArtifactScope::~ArtifactScope() {
  if (!owner_) return;
  if (!committed_) {
    for (const auto& p : g_artifact_storage) {
      std::error_code ec;
      fs::remove(p, ec);
    }
  }
  g_artifacts = nullptr;
}

const std::vector<fs::path>& ArtifactScope::written() const {
  return g_artifact_storage;
}

void note_artifact(const fs::path& p) {
  if (g_artifacts) g_artifacts->push_back(p);
}

namespace {

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << text;
  if (!out) throw DataError("short write to " + path.string());
  note_artifact(path);
}

void write_json(const fs::path& path, const nlohmann::json& j) {
  write_text(path, j.dump(2) + "\n");
}

nlohmann::json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& ex) {
    throw DataError("invalid JSON in " + path.string() + ": " + ex.what());
  }
  return j;
}

}  // namespace

// ---- synth ----

fs::path run_synth(const RunConfig& cfg, const fs::path& out_dir) {
  cfg.validate();
  const auto env = default_envelope();
  auto experiments =
      synth::generate_corpus(cfg.synth.experiments_per_row, cfg.synth.signal, env);

  fs::create_directories(out_dir / "traces");
  fs::create_directories(out_dir / "manifests");
  nlohmann::json index;
  index["config_hash"] = config_hash(cfg);
  index["seed"] = cfg.seed;
  index["experiments_per_row"] = cfg.synth.experiments_per_row;
  nlohmann::json list = nlohmann::json::array();
  for (const auto& e : experiments) {
    const std::string trace_rel = "../traces/" + e.id + ".csv";
    const fs::path trace_path = out_dir / "traces" / (e.id + ".csv");
    const fs::path manifest_path = out_dir / "manifests" / (e.id + ".json");
    write_trace_csv(e.trace, trace_path);
    note_artifact(trace_path);
    write_experiment_manifest(e, manifest_path, trace_rel);
    note_artifact(manifest_path);
    list.push_back("manifests/" + e.id + ".json");
  }
  index["manifests"] = list;
  write_json(out_dir / "corpus_index.json", index);
  return out_dir / "corpus_index.json";
}

std::vector<Experiment> load_corpus(const fs::path& corpus_dir) {
  const auto index = read_json(corpus_dir / "corpus_index.json");
  const auto env = default_envelope();
  std::vector<Experiment> out;
  for (const auto& rel : index.at("manifests"))
    out.push_back(load_experiment(corpus_dir / rel.get<std::string>(), env));
  if (out.empty()) throw DataError("corpus is empty: " + corpus_dir.string());
  return out;
}

// ---- split ----

fs::path run_split(const RunConfig& cfg, const fs::path& corpus_dir,
                   const fs::path& out_dir) {
  cfg.validate();
  const auto experiments = load_corpus(corpus_dir);
  DatasetSplit split =
      build_split(experiments, cfg.split.protocol, cfg.split.train_per_pattern,
                  cfg.split.eval_per_pattern, cfg.split.window_len, cfg.seed);

  fs::create_directories(out_dir);
  write_partition_csv(split.train, split.window_len, out_dir / "train.csv");
  note_artifact(out_dir / "train.csv");
  write_partition_csv(split.eval, split.window_len, out_dir / "eval.csv");
  note_artifact(out_dir / "eval.csv");

  nlohmann::json manifest;
  manifest["protocol"] = std::string(to_string(split.protocol));
  manifest["seed"] = split.seed;
  manifest["window_len"] = split.window_len;
  manifest["train_per_pattern"] = split.train_per_pattern;
  manifest["eval_per_pattern"] = split.eval_per_pattern;
  manifest["train_count"] = split.train.size();
  manifest["eval_count"] = split.eval.size();
  manifest["duplicate_train_starts"] = split.duplicate_train_starts;
  manifest["duplicate_eval_starts"] = split.duplicate_eval_starts;
  manifest["eval_experiments"] = split.eval_experiments;
  manifest["config_hash"] = config_hash(cfg);
  write_json(out_dir / "split_manifest.json", manifest);
  return out_dir / "split_manifest.json";
}

LoadedSplit load_split(const RunConfig& cfg, const fs::path& split_dir) {
  LoadedSplit ls;
  ls.manifest = read_json(split_dir / "split_manifest.json");
  ls.manifest_hash = file_hash(split_dir / "split_manifest.json");
  const auto window_len = ls.manifest.at("window_len").get<std::size_t>();
  if (window_len != cfg.split.window_len)
    throw ConfigError("split window_len " + std::to_string(window_len) +
                      " differs from configured " +
                      std::to_string(cfg.split.window_len));
  ls.split.protocol =
      parse_protocol(ls.manifest.at("protocol").get<std::string>());
  ls.split.seed = ls.manifest.at("seed").get<std::uint64_t>();
  ls.split.window_len = window_len;
  ls.split.train_per_pattern =
      ls.manifest.at("train_per_pattern").get<std::size_t>();
  ls.split.eval_per_pattern =
      ls.manifest.at("eval_per_pattern").get<std::size_t>();
  ls.split.train = read_partition_csv(split_dir / "train.csv", window_len);
  ls.split.eval = read_partition_csv(split_dir / "eval.csv", window_len);
  return ls;
}

// ---- train ----

namespace {

struct DeepSpec {
  std::string type;
  nlohmann::json arch;
};

std::unique_ptr<nn::Module> build_deep(const RunConfig& cfg,
                                       std::uint64_t seed, DeepSpec& spec) {
  if (cfg.model.type == "senet1d") {
    spec.type = "senet1d";
    spec.arch = models::senet_config_to_json(cfg.model.senet);
    return models::build_senet(cfg.model.senet, seed);
  }
  if (cfg.model.type == "cnn1d") {
    spec.type = "cnn1d";
    spec.arch = nlohmann::json::object();
    return models::build_cnn1d(seed);
  }
  if (cfg.model.type == "mlp") {
    spec.type = "mlp";
    spec.arch = nlohmann::json::object();
    return models::build_mlp(seed);
  }
  throw ConfigError("not a deep model type: " + cfg.model.type);
}

bool is_deep_type(const std::string& type) {
  return type == "senet1d" || type == "cnn1d" || type == "mlp";
}

nlohmann::json standardization_to_json(const Standardization& st) {
  return {{"mean", st.mean}, {"stddev", st.stddev}};
}

Standardization standardization_from_json(const nlohmann::json& j) {
  Standardization st;
  st.mean = j.at("mean").get<std::vector<double>>();
  st.stddev = j.at("stddev").get<std::vector<double>>();
  return st;
}

}  // namespace

fs::path run_train(const RunConfig& cfg, const fs::path& split_dir,
                   const fs::path& out_dir, std::uint64_t seed) {
  cfg.validate();
  LoadedSplit ls = load_split(cfg, split_dir);
  fs::create_directories(out_dir);

  nlohmann::json meta;
  meta["config_hash"] = config_hash(cfg);
  meta["split_manifest_hash"] = ls.manifest_hash;
  meta["seed"] = seed;
  meta["model_type"] = cfg.model.type;
  meta["pca_components"] = cfg.model.pca_components;

  if (is_deep_type(cfg.model.type)) {
    DeepSpec spec;
    auto model = build_deep(cfg, derive_seed(seed, {0x10DE1}), spec);
    models::TrainConfig tc;
    tc.epochs = cfg.train.epochs;
    tc.batch_size = cfg.train.batch_size;
    tc.optimizer = cfg.train.optimizer;
    tc.seed = seed;
    auto result = models::train_deep_model(*model, ls.split, tc);

    meta["best_epoch"] = result.best_epoch;
    meta["best_eval_accuracy"] = result.best_eval_accuracy;
    const fs::path ckpt = out_dir / "model.fpck";
    models::save_checkpoint(*model, spec.type, spec.arch, meta, ckpt);
    note_artifact(ckpt);
    eval::export_training_curve_csv(result.log, out_dir / "training_curve.csv");
    note_artifact(out_dir / "training_curve.csv");
    write_json(out_dir / "train_meta.json", meta);
    return ckpt;
  }

  // Classical models: optional standardization (SVM) and PCA front end.
  nlohmann::json doc;
  doc["version"] = 1;
  doc["model_type"] = cfg.model.type;

  Matrix x = to_matrix(ls.split.train);
  const std::vector<int> y = to_labels(ls.split.train);

  if (cfg.model.type == "svm") {
    DatasetSplit tmp = ls.split;  // standardize() consumes a split
    Standardization st = standardize(tmp);
    doc["standardization"] = standardization_to_json(st);
    x = to_matrix(tmp.train);
  }

  if (cfg.model.pca_components > 0) {
    models::Pca pca;
    pca.fit(x, cfg.model.pca_components);
    doc["pca"] = pca.to_json();
    x = pca.transform(x);
  }

  if (cfg.model.type == "decision_tree") {
    models::DecisionTree t;
    t.fit(x, y, cfg.model.tree, seed);
    doc["model"] = t.to_json();
  } else if (cfg.model.type == "random_forest") {
    models::RandomForest f;
    f.fit(x, y, cfg.model.forest, seed);
    doc["model"] = f.to_json();
  } else if (cfg.model.type == "svm") {
    models::LinearSvm s;
    s.fit(x, y, cfg.model.svm, seed);
    doc["model"] = s.to_json();
  } else {
    throw ConfigError("unknown model type: " + cfg.model.type);
  }

  doc["meta"] = meta;
  const fs::path model_path = out_dir / "model.json";
  write_json(model_path, doc);
  write_json(out_dir / "train_meta.json", meta);
  return model_path;
}

// ---- shared prediction ----

namespace {

struct AnyModel {
  std::string model_type;
  nlohmann::json meta;
  // deep
  std::unique_ptr<nn::Module> module;
  // classical
  std::unique_ptr<models::DecisionTree> tree;
  std::unique_ptr<models::RandomForest> forest;
  std::unique_ptr<models::LinearSvm> svm;
  std::unique_ptr<models::Pca> pca;
  std::unique_ptr<Standardization> standardization;
  std::size_t pca_components = 0;
};

AnyModel load_any_model(const fs::path& model_path) {
  AnyModel m;
  if (models::is_deep_checkpoint(model_path)) {
    auto lm = models::load_checkpoint(model_path);
    m.model_type = lm.model_type;
    m.meta = lm.meta;
    m.module = std::move(lm.module);
    return m;
  }
  const auto doc = read_json(model_path);
  m.model_type = doc.at("model_type").get<std::string>();
  m.meta = doc.value("meta", nlohmann::json::object());
  if (doc.contains("standardization"))
    m.standardization = std::make_unique<Standardization>(
        standardization_from_json(doc.at("standardization")));
  if (doc.contains("pca")) {
    m.pca = std::make_unique<models::Pca>(models::Pca::from_json(doc.at("pca")));
    m.pca_components = m.pca->n_components();
  }
  if (m.model_type == "decision_tree")
    m.tree = std::make_unique<models::DecisionTree>(
        models::DecisionTree::from_json(doc.at("model")));
  else if (m.model_type == "random_forest")
    m.forest = std::make_unique<models::RandomForest>(
        models::RandomForest::from_json(doc.at("model")));
  else if (m.model_type == "svm")
    m.svm = std::make_unique<models::LinearSvm>(
        models::LinearSvm::from_json(doc.at("model")));
  else
    throw DataError("unknown model type \"" + m.model_type + "\" in " +
                    model_path.string());
  return m;
}

std::vector<models::Prediction> predict_any(
    AnyModel& m, std::span<const WindowSample> windows) {
  if (m.module)
    return models::predict_deep_with_confidence(*m.module, windows);

  Matrix x = to_matrix(windows);
  if (m.standardization) m.standardization->apply(x);
  if (m.pca) x = m.pca->transform(x);

  std::vector<models::Prediction> out(x.rows);
  if (m.tree) {
    for (std::size_t i = 0; i < x.rows; ++i)
      out[i] = {m.tree->predict(x.row_span(i)), 1.0};
  } else if (m.forest) {
    for (std::size_t i = 0; i < x.rows; ++i) {
      const auto votes = m.forest->per_tree_predictions(x.row_span(i));
      std::array<std::size_t, kNumPatterns> counts{};
      for (int v : votes) ++counts[static_cast<std::size_t>(v)];
      std::size_t best = 0;
      for (std::size_t c = 1; c < counts.size(); ++c)
        if (counts[c] > counts[best]) best = c;
      out[i] = {static_cast<int>(best),
                static_cast<double>(counts[best]) /
                    static_cast<double>(votes.size())};
    }
  } else if (m.svm) {
    for (std::size_t i = 0; i < x.rows; ++i) {
      const auto margins = m.svm->margins(x.row_span(i));
      // softmax over margins as the confidence score
      double mx = *std::max_element(margins.begin(), margins.end());
      double sum = 0.0;
      for (double v : margins) sum += std::exp(v - mx);
      const auto arg = static_cast<std::size_t>(
          std::max_element(margins.begin(), margins.end()) - margins.begin());
      out[i] = {static_cast<int>(arg), std::exp(margins[arg] - mx) / sum};
    }
  } else {
    throw ConfigError("model not loaded");
  }
  return out;
}

std::string reference_key(const std::string& model_type,
                          std::size_t pca_components) {
  if (pca_components > 0 &&
      (model_type == "random_forest" || model_type == "svm" ||
       model_type == "mlp" || model_type == "decision_tree"))
    return model_type + "_pca";
  return model_type;
}

}  // namespace

std::vector<models::Prediction> predict_with_model(
    const RunConfig& /*cfg*/, const fs::path& model_path,
    std::span<const WindowSample> windows) {
  AnyModel m = load_any_model(model_path);
  return predict_any(m, windows);
}

// ---- eval ----

nlohmann::json report_to_json(const eval::EvalReport& r,
                              const std::string& model_type,
                              const std::string& dataset_protocol) {
  nlohmann::json j;
  j["model_type"] = model_type;
  j["protocol"] = dataset_protocol;
  j["accuracy"] = r.accuracy;
  j["macro_f1"] = r.macro_f1;
  j["weighted_f1"] = r.weighted_f1;
  j["seeds_averaged"] = r.seeds_averaged;
  j["total_samples"] = r.total();
  nlohmann::json per_class = nlohmann::json::object();
  for (int c = 0; c < kNumPatterns; ++c) {
    const auto& m = r.per_class[static_cast<std::size_t>(c)];
    per_class[std::string(to_string(pattern_from_code(c)))] = {
        {"precision", m.precision},
        {"recall", m.recall},
        {"f1", m.f1},
        {"support", m.support}};
  }
  j["per_class"] = per_class;
  nlohmann::json conf = nlohmann::json::array();
  for (const auto& row : r.confusion) conf.push_back(row);
  j["confusion"] = conf;
  if (auto ref = eval::reference_for(model_type)) {
    j["reference_results"] = {
        {"experiment_based",
         {{"accuracy", ref->experiment_based_accuracy},
          {"f1", ref->experiment_based_f1}}},
        {"pattern_based",
         {{"accuracy", ref->pattern_based_accuracy},
          {"f1", ref->pattern_based_f1}}},
        {"implemented", ref->implemented},
        {"note", "headline results on the original (unpublished) rig dataset; "
                 "not reproducible from synthetic data"}};
  }
  return j;
}

fs::path run_eval(const RunConfig& cfg, const fs::path& model_path,
                  const fs::path& split_dir, const fs::path& out_dir,
                  bool force) {
  cfg.validate();
  LoadedSplit ls = load_split(cfg, split_dir);
  AnyModel model = load_any_model(model_path);

  const std::string recorded =
      model.meta.value("split_manifest_hash", std::string());
  if (!recorded.empty() && recorded != ls.manifest_hash && !force)
    throw ConfigError(
        "checkpoint was trained against a different split (hash " + recorded +
        " vs " + ls.manifest_hash + "); pass --force to evaluate anyway");

  const auto preds = predict_any(model, ls.split.eval);
  std::vector<int> y_pred(preds.size());
  for (std::size_t i = 0; i < preds.size(); ++i) y_pred[i] = preds[i].label;
  eval::EvalReport report = eval::evaluate_predictions(ls.split.eval, y_pred);

  fs::create_directories(out_dir);
  nlohmann::json j = report_to_json(
      report,
      reference_key(model.model_type,
                    model.meta.value("pca_components", std::size_t{0})),
      ls.manifest.at("protocol").get<std::string>());
  j["config_hash"] = config_hash(cfg);
  j["checkpoint_hash"] = file_hash(model_path);
  j["split_manifest_hash"] = ls.manifest_hash;
  j["model_config_hash"] = model.meta.value("config_hash", std::string());
  j["train_seed"] = model.meta.value("seed", std::uint64_t{0});
  write_json(out_dir / "report.json", j);

  eval::export_confusion_csv(report, out_dir / "confusion.csv", false);
  note_artifact(out_dir / "confusion.csv");
  eval::export_confusion_csv(report, out_dir / "confusion_normalized.csv", true);
  note_artifact(out_dir / "confusion_normalized.csv");

  // 2-D projection of the eval windows for plotting.
  Matrix x = to_matrix(ls.split.eval);
  models::Pca pca2;
  pca2.fit(x, 2);
  eval::export_pca_2d_csv(pca2.transform(x), to_labels(ls.split.eval),
                          out_dir / "pca_2d.csv");
  note_artifact(out_dir / "pca_2d.csv");
  return out_dir / "report.json";
}

// ---- predict ----

fs::path run_predict(const RunConfig& cfg, const fs::path& model_path,
                     const fs::path& trace_csv, const fs::path& out_csv) {
  cfg.validate();
  const CapacitanceTrace trace =
      ingest_csv(trace_csv, cfg.synth.signal.sample_rate_hz, true);
  const std::size_t w = cfg.split.window_len;
  if (trace.size() < w)
    throw DataError("trace shorter than one window (" +
                    std::to_string(trace.size()) + " < " + std::to_string(w) +
                    ")");
  std::vector<WindowSample> windows;
  for (std::size_t start = 0; start + w <= trace.size();
       start += cfg.predict.stride) {
    WindowSample s;
    auto view = trace.view(start, w);
    s.values.assign(view.begin(), view.end());
    s.start_index = start;
    windows.push_back(std::move(s));
  }
  AnyModel model = load_any_model(model_path);
  const auto preds = predict_any(model, windows);

  std::ofstream out(out_csv, std::ios::binary);
  if (!out) throw DataError("cannot write " + out_csv.string());
  out << "start_index,predicted_label,confidence\n";
  for (std::size_t i = 0; i < windows.size(); ++i) {
    char buf[48];
    std::snprintf(buf, sizeof(buf), ",%.6f\n", preds[i].confidence);
    out << windows[i].start_index << ','
        << to_string(pattern_from_code(preds[i].label)) << buf;
  }
  note_artifact(out_csv);
  return out_csv;
}

// ---- psd ----

PsdOutcome run_psd(const RunConfig& cfg, const fs::path& trace_csv,
                   const fs::path& out_csv) {
  cfg.validate();
  const CapacitanceTrace trace =
      ingest_csv(trace_csv, cfg.synth.signal.sample_rate_hz, true);
  const auto spectrum = dsp::welch_psd(trace, cfg.psd.n_points,
                                       cfg.psd.segment_len, cfg.psd.overlap);
  std::ofstream out(out_csv, std::ios::binary);
  if (!out) throw DataError("cannot write " + out_csv.string());
  out << "freq_hz,power\n";
  for (std::size_t i = 0; i < spectrum.freqs_hz.size(); ++i) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.9g,%.9g\n", spectrum.freqs_hz[i],
                  spectrum.power[i]);
    out << buf;
  }
  note_artifact(out_csv);
  const double f_c = dsp::estimate_cutoff(spectrum, cfg.psd.cumulative_fraction);
  const auto plan = dsp::sampling_plan(
      f_c > 0.0 ? f_c : spectrum.resolution_hz, cfg.psd.sampling_margin_k);
  return {plan.f_c_hz, plan.f_s_hz, out_csv};
}

// ---- sweep ----

std::vector<fs::path> run_sweep(const RunConfig& cfg, const fs::path& out_dir) {
  cfg.validate();
  fs::create_directories(out_dir);
  const fs::path corpus_dir = out_dir / "corpus";
  const fs::path split_dir = out_dir / "split";
  run_synth(cfg, corpus_dir);
  run_split(cfg, corpus_dir, split_dir);

  struct GridPoint {
    std::string group;
    std::string tag;
    std::function<void(models::SENetConfig&)> apply;
  };
  std::vector<GridPoint> grid;
  for (std::size_t k : {16u, 8u, 5u, 3u})
    grid.push_back({"kernel_size", "k" + std::to_string(k),
                    [k](models::SENetConfig& c) { c.kernel_size = k; }});
  const std::pair<bool, bool> bn_do[] = {
      {false, true}, {true, false}, {false, false}, {true, true}};
  for (auto [bn, dropout] : bn_do)
    grid.push_back({"bn_dropout",
                    std::string("bn") + (bn ? "1" : "0") + "_do" +
                        (dropout ? "1" : "0"),
                    [bn, dropout](models::SENetConfig& c) {
                      c.use_batch_norm = bn;
                      c.use_dropout = dropout;
                    }});
  for (double r : {0.5, 0.4, 0.3, 0.2}) {
    char tag[16];
    std::snprintf(tag, sizeof(tag), "rate%.1f", r);
    grid.push_back({"dropout_rate", tag,
                    [r](models::SENetConfig& c) { c.dropout_rate = r; }});
  }
  for (std::size_t w : {1u, 2u, 4u, 8u})
    grid.push_back({"width_ratio", "w" + std::to_string(w),
                    [w](models::SENetConfig& c) { c.width_ratio = w; }});
  for (std::size_t s : {2u, 3u, 4u, 5u})
    grid.push_back({"block_stages", "s" + std::to_string(s),
                    [s](models::SENetConfig& c) { c.block_stages = s; }});

  std::vector<fs::path> reports;
  for (const auto& point : grid) {
    RunConfig variant = cfg;
    variant.model.type = "senet1d";
    point.apply(variant.model.senet);
    const fs::path run_dir = out_dir / ("run_" + point.group + "_" + point.tag);
    fs::create_directories(run_dir);
    const fs::path ckpt = run_train(variant, split_dir, run_dir, cfg.seed);
    run_eval(variant, ckpt, split_dir, run_dir);

    auto report = read_json(run_dir / "report.json");
    report["sweep_group"] = point.group;
    report["sweep_tag"] = point.tag;
    const fs::path report_path =
        out_dir / ("sweep_" + point.group + "_" + point.tag + ".json");
    write_json(report_path, report);
    reports.push_back(report_path);
  }
  return reports;
}

}  // namespace flowpat::pipeline
