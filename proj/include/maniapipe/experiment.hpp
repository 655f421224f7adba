#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <vector>

#include "maniapipe/corpus.hpp"
#include "maniapipe/features.hpp"
#include "maniapipe/lld.hpp"
#include "maniapipe/metrics.hpp"
#include "maniapipe/nnet.hpp"
#include "maniapipe/selection.hpp"

namespace maniapipe::eval {

enum class EvalCondition { SameTasks, WholeRecording };

const char* to_string(EvalCondition condition);
EvalCondition eval_condition_from_string(const std::string& s);

/// Everything the pipeline stages need, bundled so one spec reproduces a run.
struct PipelineParams {
  lld::FrameConfig frame;
  lld::LldSet lld_set = lld::LldSet::all();
  functionals::FunctionalSet functional_set = functionals::FunctionalSet::all();
  int delta_window = 2;
  selection::RfeConfig rfe;  // target_k, step_frac, C, epochs
  nnet::CnnConfig cnn;       // input_dim is overwritten with the mask size
  nnet::TrainConfig train;
  // When set, the selection mask is fitted once on the train rows of all
  // seven tasks instead of per task condition.
  bool global_mask = false;
};

struct ExperimentSpec {
  std::vector<int> train_tasks;  // subset of 1..7
  EvalCondition eval_condition = EvalCondition::SameTasks;
  PipelineParams params;
  std::uint64_t seed = 0;
};

/// Per-task and whole-recording feature extraction with memoization, shared
/// across experiment rows so audio is only analyzed once.
class FeatureStore {
 public:
  FeatureStore(const corpus::CorpusManifest& manifest, const PipelineParams& params,
               int n_threads = 1);

  /// One row per (recording in split, task in tasks) with a segment.
  features::FeatureTable task_table(corpus::Split split, const std::vector<int>& tasks);

  /// One row per recording in split, extracted from the full file.
  features::FeatureTable whole_table(corpus::Split split);

  const corpus::CorpusManifest& manifest() const { return manifest_; }

 private:
  void ensure_extracted(const std::vector<const corpus::Recording*>& recordings,
                        const std::vector<int>& tasks, bool whole);

  corpus::CorpusManifest manifest_;
  PipelineParams params_;
  int n_threads_;
  // key: recording id, task index (0 = whole recording)
  std::map<std::pair<std::string, int>, functionals::FeatureVector> cache_;
};

struct ExperimentResult {
  double uar = 0.0;
  ConfusionMatrix confusion;
  nnet::TrainHistory history;
  selection::SelectionMask mask;
  features::NormParams norm;
};

/// Runs the full pipeline for one spec: cut -> LLD -> functionals -> z-norm
/// fit on train only -> RFE on train only -> mask everywhere -> CNN train with
/// dev early stopping -> dev evaluation. WholeRecording evaluation extracts
/// dev features from full recordings and pushes them through the train-task
/// NormParams and SelectionMask.
ExperimentResult run_experiment(const ExperimentSpec& spec, FeatureStore& store);
ExperimentResult run_experiment(const ExperimentSpec& spec,
                                const corpus::CorpusManifest& manifest);

/// The selection + training + evaluation tail of run_experiment, starting from
/// already-extracted tables. Early stopping always watches stop_dev_raw (the
/// same-task dev rows); eval_dev_raw is what the returned confusion/UAR are
/// computed on (the same table under SameTasks, the whole-recording table
/// otherwise).
ExperimentResult run_pipeline_tail(const features::FeatureTable& train_raw,
                                   const features::FeatureTable& stop_dev_raw,
                                   const features::FeatureTable& eval_dev_raw,
                                   const PipelineParams& params, std::uint64_t seed,
                                   const selection::SelectionMask* fixed_mask = nullptr);

struct ReportRow {
  std::vector<int> tasks;
  double uar_same = 0.0;
  double uar_whole = 0.0;
  ConfusionMatrix cm_same;
  ConfusionMatrix cm_whole;
  std::uint64_t seed = 0;
  int best_epoch_same = 0;
  int best_epoch_whole = 0;
};

/// One row per single task 1..7 plus the groups {1,2,3}, {4,5}, {6,7}, each
/// evaluated under both conditions.
std::vector<ReportRow> experiment_matrix(const corpus::CorpusManifest& manifest,
                                         const ExperimentSpec& base_spec,
                                         int n_threads = 1);

void save_rows(const std::vector<ReportRow>& rows, const std::filesystem::path& path);
std::vector<ReportRow> load_rows(const std::filesystem::path& path);

}  // namespace maniapipe::eval
