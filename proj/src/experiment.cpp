#include "maniapipe/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <fstream>
#include <mutex>
#include <set>
#include <thread>

#include <json.hpp>

#include "maniapipe/audio.hpp"

namespace maniapipe::eval {

namespace {

constexpr int kCanonicalRate = 16000;

template <typename F>
auto stage(const char* name, F&& fn) {
  try {
    return fn();
  } catch (const Error& e) {
    throw Error(e.code(), std::string("stage ") + name + ": " + e.what());
  }
}

void check_tasks(const std::vector<int>& tasks) {
  if (tasks.empty()) {
    throw Error(ErrorCode::InvalidConfig, "train_tasks must be non-empty");
  }
  for (int t : tasks) {
    if (t < 1 || t > corpus::kNumTasks) {
      throw Error(ErrorCode::InvalidConfig,
                  "task index " + std::to_string(t) + " outside 1..7");
    }
  }
}

std::vector<int> all_tasks() {
  std::vector<int> tasks(corpus::kNumTasks);
  for (int t = 1; t <= corpus::kNumTasks; ++t) tasks[t - 1] = t;
  return tasks;
}

}  // namespace

const char* to_string(EvalCondition condition) {
  return condition == EvalCondition::SameTasks ? "same" : "whole";
}

EvalCondition eval_condition_from_string(const std::string& s) {
  if (s == "same") return EvalCondition::SameTasks;
  if (s == "whole") return EvalCondition::WholeRecording;
  throw Error(ErrorCode::InvalidConfig, "eval condition must be same|whole, got " + s);
}

FeatureStore::FeatureStore(const corpus::CorpusManifest& manifest,
                           const PipelineParams& params, int n_threads)
    : manifest_(manifest), params_(params), n_threads_(std::max(1, n_threads)) {}

void FeatureStore::ensure_extracted(
    const std::vector<const corpus::Recording*>& recordings,
    const std::vector<int>& tasks, bool whole) {
  // Work items: recordings that still miss at least one requested key.
  std::vector<const corpus::Recording*> pending;
  for (const corpus::Recording* rec : recordings) {
    bool missing = whole && !cache_.count({rec->id, 0});
    for (int t : tasks) {
      if (!cache_.count({rec->id, t})) missing = true;
    }
    if (missing) pending.push_back(rec);
  }
  if (pending.empty()) return;

  std::mutex cache_mutex;
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= pending.size()) return;
      const corpus::Recording& rec = *pending[i];
      audio::AudioBuffer buf = audio::read_wav(manifest_.resolve_audio_path(rec));
      buf = audio::resample(buf, kCanonicalRate);

      std::vector<std::pair<int, functionals::FeatureVector>> produced;
      auto extract = [&](const audio::AudioBuffer& piece, int key) {
        lld::LldMatrix m = lld::extract_lld(piece, params_.lld_set, params_.frame);
        m = lld::append_deltas(m, params_.delta_window);
        functionals::FeatureVector fv =
            functionals::apply_functionals(m, params_.functional_set);
        fv.recording_id = rec.id;
        if (key > 0) fv.task_index = key;
        produced.emplace_back(key, std::move(fv));
      };

      const std::vector<corpus::TaskSegment> segs = manifest_.segments_of(rec.id);
      for (int t : tasks) {
        {
          std::lock_guard<std::mutex> lock(cache_mutex);
          if (cache_.count({rec.id, t})) continue;
        }
        for (const corpus::TaskSegment& seg : segs) {
          if (seg.task_index == t) {
            extract(audio::cut_segment(buf, seg), t);
          }
        }
      }
      if (whole) {
        bool have;
        {
          std::lock_guard<std::mutex> lock(cache_mutex);
          have = cache_.count({rec.id, 0}) != 0;
        }
        if (!have) extract(buf, 0);
      }

      std::lock_guard<std::mutex> lock(cache_mutex);
      for (auto& [key, fv] : produced) {
        cache_.emplace(std::make_pair(rec.id, key), std::move(fv));
      }
    }
  };

  const int n_workers =
      std::min<std::size_t>(n_threads_, pending.size());
  if (n_workers <= 1) {
    worker();
  } else {
    std::vector<std::thread> threads;
    for (int i = 0; i < n_workers; ++i) threads.emplace_back(worker);
    for (std::thread& t : threads) t.join();
  }
}

features::FeatureTable FeatureStore::task_table(corpus::Split split,
                                                const std::vector<int>& tasks) {
  check_tasks(tasks);
  std::vector<const corpus::Recording*> recs;
  for (const corpus::Recording& rec : manifest_.recordings) {
    if (rec.split == split) recs.push_back(&rec);
  }
  ensure_extracted(recs, tasks, /*whole=*/false);

  std::vector<int> ordered_tasks = tasks;
  std::sort(ordered_tasks.begin(), ordered_tasks.end());
  features::FeatureTable table;
  table.split_tag = corpus::to_string(split);
  for (const corpus::Recording* rec : recs) {
    for (int t : ordered_tasks) {
      auto it = cache_.find({rec->id, t});
      if (it != cache_.end()) table.add_row(it->second, rec->label);
    }
  }
  return table;
}

features::FeatureTable FeatureStore::whole_table(corpus::Split split) {
  std::vector<const corpus::Recording*> recs;
  for (const corpus::Recording& rec : manifest_.recordings) {
    if (rec.split == split) recs.push_back(&rec);
  }
  ensure_extracted(recs, {}, /*whole=*/true);

  features::FeatureTable table;
  table.split_tag = std::string(corpus::to_string(split)) + "_whole";
  for (const corpus::Recording* rec : recs) {
    auto it = cache_.find({rec->id, 0});
    if (it != cache_.end()) table.add_row(it->second, rec->label);
  }
  return table;
}

ExperimentResult run_pipeline_tail(const features::FeatureTable& train_raw,
                                   const features::FeatureTable& stop_dev_raw,
                                   const features::FeatureTable& eval_dev_raw,
                                   const PipelineParams& params, std::uint64_t seed,
                                   const selection::SelectionMask* fixed_mask) {
  ExperimentResult result;

  result.norm = stage("znorm", [&] { return features::znorm_fit(train_raw); });
  const features::FeatureTable train_n =
      stage("znorm", [&] { return features::znorm_apply(train_raw, result.norm); });
  const features::FeatureTable stop_dev_n =
      stage("znorm", [&] { return features::znorm_apply(stop_dev_raw, result.norm); });
  const features::FeatureTable eval_dev_n =
      stage("znorm", [&] { return features::znorm_apply(eval_dev_raw, result.norm); });

  if (fixed_mask != nullptr) {
    result.mask = *fixed_mask;
  } else {
    selection::RfeConfig rfe_cfg = params.rfe;
    rfe_cfg.svm.seed = mix_seed(seed, "rfe");
    result.mask = stage("rfe", [&] { return selection::rfe(train_n, rfe_cfg); });
  }
  const features::FeatureTable train_m =
      stage("mask", [&] { return selection::apply_mask(train_n, result.mask); });
  const features::FeatureTable stop_dev_m =
      stage("mask", [&] { return selection::apply_mask(stop_dev_n, result.mask); });
  const features::FeatureTable eval_dev_m =
      stage("mask", [&] { return selection::apply_mask(eval_dev_n, result.mask); });

  nnet::CnnConfig ccfg = params.cnn;
  ccfg.input_dim = static_cast<int>(result.mask.selected.size());
  nnet::TrainConfig tcfg = params.train;
  tcfg.seed = mix_seed(seed, "cnn");

  auto [model, history] =
      stage("train", [&] { return nnet::train(train_m, stop_dev_m, ccfg, tcfg); });
  result.history = std::move(history);

  const std::vector<corpus::Label> predictions =
      stage("eval", [&] { return nnet::predict(model, eval_dev_m); });
  result.confusion = ConfusionMatrix::from_pairs(eval_dev_m.labels, predictions);
  result.uar = uar(result.confusion);
  return result;
}

ExperimentResult run_experiment(const ExperimentSpec& spec, FeatureStore& store) {
  check_tasks(spec.train_tasks);

  const features::FeatureTable train_raw = stage("extract", [&] {
    return store.task_table(corpus::Split::Train, spec.train_tasks);
  });
  const features::FeatureTable stop_dev_raw = stage("extract", [&] {
    return store.task_table(corpus::Split::Dev, spec.train_tasks);
  });
  const features::FeatureTable eval_dev_raw =
      spec.eval_condition == EvalCondition::SameTasks
          ? stop_dev_raw
          : stage("extract", [&] { return store.whole_table(corpus::Split::Dev); });

  if (spec.params.global_mask) {
    // Fit the mask once on all-task train rows, then reuse it for this run.
    const features::FeatureTable all_train = stage("extract", [&] {
      return store.task_table(corpus::Split::Train, all_tasks());
    });
    const features::NormParams norm = features::znorm_fit(all_train);
    const features::FeatureTable all_n = features::znorm_apply(all_train, norm);
    selection::RfeConfig rfe_cfg = spec.params.rfe;
    rfe_cfg.svm.seed = mix_seed(spec.seed, "rfe_global");
    const selection::SelectionMask mask =
        stage("rfe", [&] { return selection::rfe(all_n, rfe_cfg); });
    return run_pipeline_tail(train_raw, stop_dev_raw, eval_dev_raw, spec.params,
                             spec.seed, &mask);
  }
  return run_pipeline_tail(train_raw, stop_dev_raw, eval_dev_raw, spec.params,
                           spec.seed);
}

ExperimentResult run_experiment(const ExperimentSpec& spec,
                                const corpus::CorpusManifest& manifest) {
  FeatureStore store(manifest, spec.params);
  return run_experiment(spec, store);
}

std::vector<ReportRow> experiment_matrix(const corpus::CorpusManifest& manifest,
                                         const ExperimentSpec& base_spec,
                                         int n_threads) {
  FeatureStore store(manifest, base_spec.params, n_threads);

  std::vector<std::vector<int>> conditions;
  for (int t = 1; t <= corpus::kNumTasks; ++t) conditions.push_back({t});
  conditions.push_back({1, 2, 3});
  conditions.push_back({4, 5});
  conditions.push_back({6, 7});

  std::vector<ReportRow> rows;
  for (const std::vector<int>& tasks : conditions) {
    ReportRow row;
    row.tasks = tasks;
    row.seed = base_spec.seed;

    ExperimentSpec spec = base_spec;
    spec.train_tasks = tasks;
    spec.eval_condition = EvalCondition::SameTasks;
    ExperimentResult same = run_experiment(spec, store);
    row.uar_same = same.uar;
    row.cm_same = same.confusion;
    row.best_epoch_same = same.history.best_epoch;

    spec.eval_condition = EvalCondition::WholeRecording;
    ExperimentResult whole = run_experiment(spec, store);
    row.uar_whole = whole.uar;
    row.cm_whole = whole.confusion;
    row.best_epoch_whole = whole.history.best_epoch;

    rows.push_back(std::move(row));
  }
  return rows;
}

namespace {

nlohmann::json cm_to_json(const ConfusionMatrix& cm) {
  nlohmann::json rows = nlohmann::json::array();
  for (int i = 0; i < corpus::kNumLabels; ++i) {
    rows.push_back(cm.counts[i]);
  }
  return rows;
}

ConfusionMatrix cm_from_json(const nlohmann::json& j) {
  ConfusionMatrix cm;
  for (int i = 0; i < corpus::kNumLabels; ++i) {
    for (int k = 0; k < corpus::kNumLabels; ++k) {
      cm.counts[i][k] = j.at(i).at(k).get<long>();
    }
  }
  return cm;
}

}  // namespace

void save_rows(const std::vector<ReportRow>& rows, const std::filesystem::path& path) {
  nlohmann::json doc = nlohmann::json::array();
  for (const ReportRow& row : rows) {
    nlohmann::json jr;
    jr["tasks"] = row.tasks;
    jr["uar_same"] = row.uar_same;
    jr["uar_whole"] = row.uar_whole;
    jr["cm_same"] = cm_to_json(row.cm_same);
    jr["cm_whole"] = cm_to_json(row.cm_whole);
    jr["seed"] = row.seed;
    jr["best_epoch_same"] = row.best_epoch_same;
    jr["best_epoch_whole"] = row.best_epoch_whole;
    doc.push_back(jr);
  }
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  out << doc.dump(2) << "\n";
}

std::vector<ReportRow> load_rows(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::MissingFile, "no such rows file: " + path.string());
  nlohmann::json doc;
  try {
    in >> doc;
    std::vector<ReportRow> rows;
    for (const auto& jr : doc) {
      ReportRow row;
      row.tasks = jr.at("tasks").get<std::vector<int>>();
      row.uar_same = jr.at("uar_same").get<double>();
      row.uar_whole = jr.at("uar_whole").get<double>();
      row.cm_same = cm_from_json(jr.at("cm_same"));
      row.cm_whole = cm_from_json(jr.at("cm_whole"));
      row.seed = jr.at("seed").get<std::uint64_t>();
      row.best_epoch_same = jr.at("best_epoch_same").get<int>();
      row.best_epoch_whole = jr.at("best_epoch_whole").get<int>();
      rows.push_back(std::move(row));
    }
    return rows;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::SchemaViolation, "bad rows " + path.string() + ": " + e.what());
  }
}

}  // namespace maniapipe::eval
