#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "flowpat/config.hpp"
#include "flowpat/eval.hpp"

namespace flowpat::pipeline {

// Records every file a pipeline step writes so a failing CLI run can remove
// its partial outputs. Scopes nest; only the outermost owns the list.
class ArtifactScope {
 public:
  ArtifactScope();
  ~ArtifactScope();
  ArtifactScope(const ArtifactScope&) = delete;
  ArtifactScope& operator=(const ArtifactScope&) = delete;

  void commit() { committed_ = true; }
  const std::vector<std::filesystem::path>& written() const;

 private:
  bool owner_ = false;
  bool committed_ = false;
};

void note_artifact(const std::filesystem::path& p);

// synth: corpus on disk (traces/, manifests/, corpus_index.json).
std::filesystem::path run_synth(const RunConfig& cfg,
                                const std::filesystem::path& out_dir);

std::vector<Experiment> load_corpus(const std::filesystem::path& corpus_dir);

// split: train.csv, eval.csv, split_manifest.json.
std::filesystem::path run_split(const RunConfig& cfg,
                                const std::filesystem::path& corpus_dir,
                                const std::filesystem::path& out_dir);

struct LoadedSplit {
  DatasetSplit split;
  nlohmann::json manifest;
  std::string manifest_hash;
};
LoadedSplit load_split(const RunConfig& cfg,
                       const std::filesystem::path& split_dir);

// train: model checkpoint (model.fpck or model.json), training_curve.csv,
// train_meta.json. Returns the checkpoint path.
std::filesystem::path run_train(const RunConfig& cfg,
                                const std::filesystem::path& split_dir,
                                const std::filesystem::path& out_dir,
                                std::uint64_t seed);

// eval: report.json, confusion.csv, confusion_normalized.csv, pca_2d.csv.
// Refuses a checkpoint whose recorded split hash differs, unless force.
std::filesystem::path run_eval(const RunConfig& cfg,
                               const std::filesystem::path& model_path,
                               const std::filesystem::path& split_dir,
                               const std::filesystem::path& out_dir,
                               bool force = false);

// Computes predictions for an on-disk model over arbitrary window samples.
std::vector<models::Prediction> predict_with_model(
    const RunConfig& cfg, const std::filesystem::path& model_path,
    std::span<const WindowSample> windows);

// predict: start_index,predicted_label,confidence rows at the configured
// stride over a trace CSV.
std::filesystem::path run_predict(const RunConfig& cfg,
                                  const std::filesystem::path& model_path,
                                  const std::filesystem::path& trace_csv,
                                  const std::filesystem::path& out_csv);

// psd: freq_hz,power CSV; returns the estimated cutoff and sampling plan.
struct PsdOutcome {
  double f_c_hz;
  double f_s_hz;
  std::filesystem::path csv;
};
PsdOutcome run_psd(const RunConfig& cfg, const std::filesystem::path& trace_csv,
                   const std::filesystem::path& out_csv);

// sweep: the five hyperparameter groups of the tuning grid, one variation at
// a time against the base config; writes one report per grid point and
// returns their paths (20 files).
std::vector<std::filesystem::path> run_sweep(
    const RunConfig& cfg, const std::filesystem::path& out_dir);

// Full report JSON (metrics, confusion, provenance hashes, reference
// results) as written by run_eval.
nlohmann::json report_to_json(const eval::EvalReport& r,
                              const std::string& model_type,
                              const std::string& dataset_protocol);

}  // namespace flowpat::pipeline
