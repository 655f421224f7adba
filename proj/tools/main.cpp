// Command-line front end: synth -> segment -> extract -> select -> train ->
// eval, plus the all-in-one experiment/report pair. Every stage writes its
// artifacts under a stage-named subfolder of the run directory and never
// touches a prior stage's outputs.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "maniapipe/audio.hpp"
#include "maniapipe/corpus.hpp"
#include "maniapipe/experiment.hpp"
#include "maniapipe/features.hpp"
#include "maniapipe/nnet.hpp"
#include "maniapipe/report.hpp"
#include "maniapipe/selection.hpp"

namespace {

using namespace maniapipe;
using nlohmann::json;

constexpr int kExitUsage = 2;
constexpr int kExitData = 3;
constexpr int kExitNumeric = 4;

struct RunConfig {
  std::uint64_t seed = 1;
  corpus::SynthConfig synth = corpus::SynthConfig::defaults();
  eval::PipelineParams pipeline;
  std::vector<int> tasks = {6, 7};
  eval::EvalCondition eval_condition = eval::EvalCondition::SameTasks;
  double tone_min_dur_s = 0.12;
  double tone_threshold_db = -25.0;
};

template <typename T>
void maybe(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

void apply_config_file(RunConfig& cfg, const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::MissingFile, "no such config: " + path.string());
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::SchemaViolation,
                "config parse error " + path.string() + ": " + e.what());
  }

  maybe(doc, "seed", cfg.seed);
  if (doc.contains("synth")) {
    const json& js = doc["synth"];
    if (js.contains("n_per_class_per_split")) {
      cfg.synth.n_per_class_per_split.clear();
      for (const auto& [key, value] : js["n_per_class_per_split"].items()) {
        cfg.synth.n_per_class_per_split[corpus::split_from_string(key)] =
            value.get<int>();
      }
    }
    maybe(js, "sample_rate", cfg.synth.sample_rate);
    if (js.contains("task_durations_s")) {
      const auto durations = js["task_durations_s"].get<std::vector<double>>();
      if (durations.size() != corpus::kNumTasks) {
        throw Error(ErrorCode::InvalidConfig, "task_durations_s needs 7 entries");
      }
      std::copy(durations.begin(), durations.end(), cfg.synth.task_durations_s.begin());
    }
    maybe(js, "marker_tone_hz", cfg.synth.marker_tone_hz);
    maybe(js, "marker_tone_dur_s", cfg.synth.marker_tone_dur_s);
    if (js.contains("class_profiles")) {
      for (const auto& [key, value] : js["class_profiles"].items()) {
        corpus::ClassProfile& p =
            cfg.synth.class_profiles[corpus::label_from_string(key)];
        maybe(value, "base_pitch_hz", p.base_pitch_hz);
        maybe(value, "pitch_jitter_pct", p.pitch_jitter_pct);
        maybe(value, "speaking_rate_hz", p.speaking_rate_hz);
        maybe(value, "loudness_db", p.loudness_db);
        maybe(value, "spectral_tilt", p.spectral_tilt);
      }
    }
  }
  if (doc.contains("frame")) {
    const json& jf = doc["frame"];
    maybe(jf, "frame_len_s", cfg.pipeline.frame.frame_len_s);
    maybe(jf, "hop_s", cfg.pipeline.frame.hop_s);
    maybe(jf, "preemphasis", cfg.pipeline.frame.preemphasis);
    if (jf.contains("window")) {
      const std::string w = jf["window"].get<std::string>();
      if (w == "Hamming") {
        cfg.pipeline.frame.window = lld::Window::Hamming;
      } else if (w == "Hann") {
        cfg.pipeline.frame.window = lld::Window::Hann;
      } else {
        throw Error(ErrorCode::InvalidConfig, "window must be Hamming|Hann");
      }
    }
  }
  if (doc.contains("lld")) {
    const json& jl = doc["lld"];
    maybe(jl, "enabled", cfg.pipeline.lld_set.enabled);
    maybe(jl, "mel_filters", cfg.pipeline.lld_set.mel_filters);
    maybe(jl, "fft_size", cfg.pipeline.lld_set.fft_size);
  }
  if (doc.contains("functionals")) {
    maybe(doc["functionals"], "enabled", cfg.pipeline.functional_set.enabled);
  }
  maybe(doc, "delta_window", cfg.pipeline.delta_window);
  if (doc.contains("selection")) {
    const json& jr = doc["selection"];
    maybe(jr, "c_reg", cfg.pipeline.rfe.svm.c_reg);
    maybe(jr, "epochs", cfg.pipeline.rfe.svm.epochs);
    maybe(jr, "target_k", cfg.pipeline.rfe.target_k);
    maybe(jr, "step_frac", cfg.pipeline.rfe.step_frac);
    maybe(jr, "global_mask", cfg.pipeline.global_mask);
  }
  if (doc.contains("cnn")) {
    const json& jc = doc["cnn"];
    maybe(jc, "conv1_filters", cfg.pipeline.cnn.conv1.filters);
    maybe(jc, "conv1_kernel", cfg.pipeline.cnn.conv1.kernel);
    maybe(jc, "conv2_filters", cfg.pipeline.cnn.conv2.filters);
    maybe(jc, "conv2_kernel", cfg.pipeline.cnn.conv2.kernel);
    maybe(jc, "dropout_p", cfg.pipeline.cnn.dropout_p);
    if (jc.contains("pooling")) {
      const std::string p = jc["pooling"].get<std::string>();
      if (p == "global_average") {
        cfg.pipeline.cnn.pooling = nnet::Pooling::GlobalAverage;
      } else if (p == "flatten") {
        cfg.pipeline.cnn.pooling = nnet::Pooling::Flatten;
      } else {
        throw Error(ErrorCode::InvalidConfig, "pooling must be global_average|flatten");
      }
    }
  }
  if (doc.contains("train")) {
    const json& jt = doc["train"];
    maybe(jt, "max_epochs", cfg.pipeline.train.max_epochs);
    maybe(jt, "patience", cfg.pipeline.train.patience);
    maybe(jt, "consecutive_patience", cfg.pipeline.train.consecutive_patience);
    maybe(jt, "batch_size", cfg.pipeline.train.batch_size);
    maybe(jt, "lr", cfg.pipeline.train.adam.lr);
    maybe(jt, "beta1", cfg.pipeline.train.adam.beta1);
    maybe(jt, "beta2", cfg.pipeline.train.adam.beta2);
    maybe(jt, "epsilon", cfg.pipeline.train.adam.epsilon);
    maybe(jt, "class_weighting", cfg.pipeline.train.class_weighting);
  }
  if (doc.contains("tone_detect")) {
    maybe(doc["tone_detect"], "min_dur_s", cfg.tone_min_dur_s);
    maybe(doc["tone_detect"], "threshold_db", cfg.tone_threshold_db);
  }
  maybe(doc, "tasks", cfg.tasks);
  if (doc.contains("eval_condition")) {
    cfg.eval_condition =
        eval::eval_condition_from_string(doc["eval_condition"].get<std::string>());
  }
}

json config_to_json(const RunConfig& cfg) {
  json doc;
  doc["seed"] = cfg.seed;
  json splits;
  for (const auto& [split, n] : cfg.synth.n_per_class_per_split) {
    splits[corpus::to_string(split)] = n;
  }
  json profiles;
  for (const auto& [label, p] : cfg.synth.class_profiles) {
    profiles[corpus::to_string(label)] = {{"base_pitch_hz", p.base_pitch_hz},
                                          {"pitch_jitter_pct", p.pitch_jitter_pct},
                                          {"speaking_rate_hz", p.speaking_rate_hz},
                                          {"loudness_db", p.loudness_db},
                                          {"spectral_tilt", p.spectral_tilt}};
  }
  doc["synth"] = {
      {"n_per_class_per_split", splits},
      {"sample_rate", cfg.synth.sample_rate},
      {"task_durations_s", cfg.synth.task_durations_s},
      {"marker_tone_hz", cfg.synth.marker_tone_hz},
      {"marker_tone_dur_s", cfg.synth.marker_tone_dur_s},
      {"class_profiles", profiles},
  };
  doc["frame"] = {
      {"frame_len_s", cfg.pipeline.frame.frame_len_s},
      {"hop_s", cfg.pipeline.frame.hop_s},
      {"window", cfg.pipeline.frame.window == lld::Window::Hamming ? "Hamming" : "Hann"},
      {"preemphasis", cfg.pipeline.frame.preemphasis},
  };
  doc["lld"] = {{"enabled", cfg.pipeline.lld_set.enabled},
                {"mel_filters", cfg.pipeline.lld_set.mel_filters},
                {"fft_size", cfg.pipeline.lld_set.fft_size}};
  doc["functionals"] = {{"enabled", cfg.pipeline.functional_set.enabled}};
  doc["delta_window"] = cfg.pipeline.delta_window;
  doc["selection"] = {{"c_reg", cfg.pipeline.rfe.svm.c_reg},
                      {"epochs", cfg.pipeline.rfe.svm.epochs},
                      {"target_k", cfg.pipeline.rfe.target_k},
                      {"step_frac", cfg.pipeline.rfe.step_frac},
                      {"global_mask", cfg.pipeline.global_mask}};
  doc["cnn"] = {{"conv1_filters", cfg.pipeline.cnn.conv1.filters},
                {"conv1_kernel", cfg.pipeline.cnn.conv1.kernel},
                {"conv2_filters", cfg.pipeline.cnn.conv2.filters},
                {"conv2_kernel", cfg.pipeline.cnn.conv2.kernel},
                {"dropout_p", cfg.pipeline.cnn.dropout_p},
                {"pooling", cfg.pipeline.cnn.pooling == nnet::Pooling::GlobalAverage
                                ? "global_average"
                                : "flatten"}};
  doc["train"] = {{"max_epochs", cfg.pipeline.train.max_epochs},
                  {"patience", cfg.pipeline.train.patience},
                  {"consecutive_patience", cfg.pipeline.train.consecutive_patience},
                  {"batch_size", cfg.pipeline.train.batch_size},
                  {"lr", cfg.pipeline.train.adam.lr},
                  {"beta1", cfg.pipeline.train.adam.beta1},
                  {"beta2", cfg.pipeline.train.adam.beta2},
                  {"epsilon", cfg.pipeline.train.adam.epsilon},
                  {"class_weighting", cfg.pipeline.train.class_weighting}};
  doc["tone_detect"] = {{"min_dur_s", cfg.tone_min_dur_s},
                        {"threshold_db", cfg.tone_threshold_db}};
  doc["tasks"] = cfg.tasks;
  doc["eval_condition"] = eval::to_string(cfg.eval_condition);
  return doc;
}

int extraction_threads() {
  if (const char* env = std::getenv("MANIA_PIPE_THREADS")) {
    const int n = std::atoi(env);
    if (n >= 1) return n;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return static_cast<int>(std::min(4u, hw == 0 ? 1u : hw));
}

std::filesystem::path stage_dir(const std::filesystem::path& out, const char* name,
                                const RunConfig& cfg) {
  const std::filesystem::path dir = out / name;
  std::filesystem::create_directories(dir);
  const json echo = config_to_json(cfg);
  {
    std::ofstream f(dir / "config.echo.json");
    f << echo.dump(2) << "\n";
  }
  if (!std::filesystem::exists(out / "config.echo.json")) {
    std::ofstream f(out / "config.echo.json");
    f << echo.dump(2) << "\n";
  }
  return dir;
}

void require_stage(const char* stage, const std::filesystem::path& artifact) {
  if (!std::filesystem::exists(artifact)) {
    throw Error(ErrorCode::MissingFile,
                std::string("stage ") + stage + " has not produced " +
                    artifact.string() + " yet; run `maniapipe " + stage + "` first");
  }
}

features::FeatureTable filter_tasks(const features::FeatureTable& table,
                                    const std::vector<int>& tasks) {
  const std::set<int> wanted(tasks.begin(), tasks.end());
  features::FeatureTable out;
  out.names = table.names;
  out.split_tag = table.split_tag;
  out.values = Matrix(0, table.dims());
  for (std::size_t r = 0; r < table.size(); ++r) {
    if (!table.task_indices[r] || !wanted.count(*table.task_indices[r])) continue;
    out.values.data.insert(out.values.data.end(), table.values.row(r).begin(),
                           table.values.row(r).end());
    out.values.rows++;
    out.labels.push_back(table.labels[r]);
    out.recording_ids.push_back(table.recording_ids[r]);
    out.task_indices.push_back(table.task_indices[r]);
  }
  return out;
}

int cmd_synth(const RunConfig& cfg, const std::filesystem::path& out) {
  const std::filesystem::path dir = stage_dir(out, "corpus", cfg);
  corpus::SynthConfig synth = cfg.synth;
  synth.seed = cfg.seed;
  const corpus::CorpusManifest manifest = corpus::generate_synthetic_corpus(synth, dir);
  const corpus::SplitSummary summary = corpus::split_summary(manifest);
  std::cout << "synth: " << summary.total << " recordings ("
            << summary.per_split[0] << " train, " << summary.per_split[1] << " dev, "
            << summary.per_split[2] << " test) under " << dir << "\n";
  return 0;
}

int cmd_segment(const RunConfig& cfg, const std::filesystem::path& out) {
  require_stage("synth", out / "corpus" / "manifest.json");
  const corpus::CorpusManifest manifest =
      corpus::load_manifest(out / "corpus" / "manifest.json");
  const std::filesystem::path dir = stage_dir(out, "segment", cfg);

  std::ofstream proposals(dir / "proposals.jsonl");
  if (!proposals) {
    throw Error(ErrorCode::IoError, "cannot write " + (dir / "proposals.jsonl").string());
  }
  std::size_t n_events = 0;
  for (const corpus::Recording& rec : manifest.recordings) {
    audio::AudioBuffer buf = audio::read_wav(manifest.resolve_audio_path(rec));
    const std::vector<audio::ToneEvent> events = audio::detect_marker_tones(
        buf, cfg.synth.marker_tone_hz, cfg.tone_min_dur_s, cfg.tone_threshold_db);
    for (const audio::ToneEvent& ev : events) {
      json line = {{"recording_id", rec.id}, {"start_s", ev.start_s},
                   {"end_s", ev.end_s}};
      proposals << line.dump() << "\n";
      ++n_events;
    }
  }
  std::cout << "segment: " << n_events << " tone proposals -> "
            << (dir / "proposals.jsonl") << "\n";
  return 0;
}

int cmd_extract(const RunConfig& cfg, const std::filesystem::path& out) {
  require_stage("synth", out / "corpus" / "manifest.json");
  require_stage("segment", out / "segment" / "proposals.jsonl");
  const corpus::CorpusManifest manifest =
      corpus::load_manifest(out / "corpus" / "manifest.json");
  const std::filesystem::path dir = stage_dir(out, "extract", cfg);

  eval::FeatureStore store(manifest, cfg.pipeline, extraction_threads());
  std::vector<int> all_tasks;
  for (int t = 1; t <= corpus::kNumTasks; ++t) all_tasks.push_back(t);
  for (corpus::Split split :
       {corpus::Split::Train, corpus::Split::Dev, corpus::Split::Test}) {
    std::string tag = corpus::to_string(split);
    for (char& c : tag) c = static_cast<char>(std::tolower(c));
    const features::FeatureTable tasks = store.task_table(split, all_tasks);
    features::save_table(tasks, dir / ("tasks_" + tag + ".csv"));
    const features::FeatureTable whole = store.whole_table(split);
    features::save_table(whole, dir / ("whole_" + tag + ".csv"));
    std::cout << "extract: " << tag << " -> " << tasks.size() << " task rows, "
              << whole.size() << " whole rows (" << tasks.dims() << " dims)\n";
  }
  return 0;
}

int cmd_select(const RunConfig& cfg, const std::filesystem::path& out) {
  require_stage("extract", out / "extract" / "tasks_train.csv");
  const std::filesystem::path dir = stage_dir(out, "select", cfg);

  const features::FeatureTable all_train =
      features::load_table(out / "extract" / "tasks_train.csv");
  const features::FeatureTable train =
      cfg.pipeline.global_mask ? all_train : filter_tasks(all_train, cfg.tasks);
  if (train.size() == 0) {
    throw Error(ErrorCode::EmptyTable, "no train rows for the configured tasks");
  }

  const features::NormParams norm = features::znorm_fit(train);
  const features::FeatureTable train_n = features::znorm_apply(train, norm);
  selection::RfeConfig rfe_cfg = cfg.pipeline.rfe;
  rfe_cfg.svm.seed = mix_seed(cfg.seed, cfg.pipeline.global_mask ? "rfe_global" : "rfe");
  const selection::SelectionMask mask = selection::rfe(train_n, rfe_cfg);

  features::save_norm_params(norm, dir / "norm.json");
  selection::save_mask(mask, dir / "mask.json");
  std::cout << "select: kept " << mask.selected.size() << " of " << train.dims()
            << " features in " << mask.elimination_trace.size() << " rounds\n";
  return 0;
}

int cmd_train(const RunConfig& cfg, const std::filesystem::path& out) {
  require_stage("select", out / "select" / "mask.json");
  const std::filesystem::path dir = stage_dir(out, "train", cfg);

  const features::NormParams norm =
      features::load_norm_params(out / "select" / "norm.json");
  const selection::SelectionMask mask = selection::load_mask(out / "select" / "mask.json");

  auto prepared = [&](const char* file) {
    const features::FeatureTable raw = features::load_table(out / "extract" / file);
    return selection::apply_mask(
        features::znorm_apply(filter_tasks(raw, cfg.tasks), norm), mask);
  };
  const features::FeatureTable train_m = prepared("tasks_train.csv");
  const features::FeatureTable dev_m = prepared("tasks_dev.csv");

  nnet::CnnConfig ccfg = cfg.pipeline.cnn;
  ccfg.input_dim = static_cast<int>(mask.selected.size());
  nnet::TrainConfig tcfg = cfg.pipeline.train;
  tcfg.seed = mix_seed(cfg.seed, "cnn");
  auto [model, history] = nnet::train(train_m, dev_m, ccfg, tcfg);

  nnet::save_model(model, dir / "model.json");
  nnet::save_history(history, dir / "history.csv");
  std::cout << "train: stopped at epoch " << history.stopped_epoch << ", best epoch "
            << history.best_epoch << ", dev UAR "
            << history.dev_uar[history.best_epoch - 1] << "\n";
  return 0;
}

int cmd_eval(const RunConfig& cfg, const std::filesystem::path& out) {
  require_stage("train", out / "train" / "model.json");
  const std::filesystem::path dir = stage_dir(out, "eval", cfg);

  const features::NormParams norm =
      features::load_norm_params(out / "select" / "norm.json");
  const selection::SelectionMask mask = selection::load_mask(out / "select" / "mask.json");
  nnet::CnnModel model = nnet::load_model(out / "train" / "model.json");

  const bool same = cfg.eval_condition == eval::EvalCondition::SameTasks;
  features::FeatureTable dev =
      features::load_table(out / "extract" / (same ? "tasks_dev.csv" : "whole_dev.csv"));
  if (same) dev = filter_tasks(dev, cfg.tasks);
  const features::FeatureTable dev_m =
      selection::apply_mask(features::znorm_apply(dev, norm), mask);

  const std::vector<corpus::Label> predictions = nnet::predict(model, dev_m);
  const eval::ConfusionMatrix cm =
      eval::ConfusionMatrix::from_pairs(dev_m.labels, predictions);
  const double uar_value = eval::uar(cm);

  json doc;
  doc["condition"] = eval::to_string(cfg.eval_condition);
  doc["tasks"] = cfg.tasks;
  doc["uar"] = uar_value;
  json cm_json = json::array();
  for (const auto& row : cm.counts) cm_json.push_back(row);
  doc["confusion"] = cm_json;
  {
    std::ofstream f(dir / "eval.json");
    f << doc.dump(2) << "\n";
  }
  std::cout << "eval: UAR " << uar_value << " ("
            << eval::to_string(cfg.eval_condition) << ", " << dev_m.size()
            << " dev rows)\n";
  return 0;
}

int cmd_experiment(const RunConfig& cfg, const std::filesystem::path& out) {
  require_stage("synth", out / "corpus" / "manifest.json");
  const corpus::CorpusManifest manifest =
      corpus::load_manifest(out / "corpus" / "manifest.json");
  const std::filesystem::path dir = stage_dir(out, "experiment", cfg);

  eval::ExperimentSpec spec;
  spec.params = cfg.pipeline;
  spec.seed = cfg.seed;
  const std::vector<eval::ReportRow> rows =
      eval::experiment_matrix(manifest, spec, extraction_threads());
  eval::save_rows(rows, dir / "rows.json");
  for (const eval::ReportRow& row : rows) {
    std::string label;
    for (std::size_t i = 0; i < row.tasks.size(); ++i) {
      if (i) label += "-";
      label += std::to_string(row.tasks[i]);
    }
    std::cout << "experiment: tasks " << label << " UAR same " << row.uar_same
              << " whole " << row.uar_whole << "\n";
  }
  return 0;
}

int cmd_report(const RunConfig& cfg, const std::filesystem::path& out) {
  require_stage("experiment", out / "experiment" / "rows.json");
  const std::filesystem::path dir = stage_dir(out, "report", cfg);
  const std::vector<eval::ReportRow> rows =
      eval::load_rows(out / "experiment" / "rows.json");
  eval::render_report(rows, eval::builtin_registry(), dir);
  std::cout << "report: wrote " << (dir / "report.txt") << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"speech-based mania state assessment pipeline"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir = "run";
  std::optional<std::uint64_t> seed_flag;
  std::optional<std::string> tasks_flag;
  std::optional<std::string> condition_flag;
  std::optional<std::size_t> target_k_flag;
  bool global_mask_flag = false;

  app.add_option("--config", config_path, "JSON config file");
  app.add_option("--out", out_dir, "run directory");
  app.add_option("--seed", seed_flag, "master seed");
  app.add_option("--tasks", tasks_flag, "comma-separated task list, e.g. 6,7");
  app.add_option("--eval-condition", condition_flag, "same|whole");
  app.add_option("--target-k", target_k_flag, "RFE target feature count");
  app.add_flag("--global-mask", global_mask_flag,
               "fit one selection mask on all tasks instead of per condition");

  const char* names[] = {"synth",  "segment",    "extract", "select",
                         "train",  "eval",       "experiment", "report"};
  const char* descriptions[] = {
      "generate the synthetic corpus",
      "propose task boundaries from marker tones",
      "extract per-task and whole-recording features",
      "fit z-normalization and the RFE selection mask",
      "train the 1D CNN with dev early stopping",
      "evaluate the trained model on the dev split",
      "run the full task/task-group experiment matrix",
      "render report.txt and SVG charts from experiment rows",
  };
  for (int i = 0; i < 8; ++i) {
    app.add_subcommand(names[i], descriptions[i])->fallthrough();
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : kExitUsage;
  }

  try {
    RunConfig cfg;
    if (!config_path.empty()) apply_config_file(cfg, config_path);
    if (seed_flag) cfg.seed = *seed_flag;
    if (tasks_flag) {
      cfg.tasks.clear();
      std::istringstream ss(*tasks_flag);
      std::string item;
      while (std::getline(ss, item, ',')) {
        if (!item.empty()) cfg.tasks.push_back(std::stoi(item));
      }
      if (cfg.tasks.empty()) {
        throw Error(ErrorCode::InvalidConfig, "--tasks parsed to an empty list");
      }
    }
    if (condition_flag) {
      cfg.eval_condition = eval::eval_condition_from_string(*condition_flag);
    }
    if (target_k_flag) cfg.pipeline.rfe.target_k = *target_k_flag;
    if (global_mask_flag) cfg.pipeline.global_mask = true;

    const std::filesystem::path out(out_dir);
    std::filesystem::create_directories(out);

    if (app.got_subcommand("synth")) return cmd_synth(cfg, out);
    if (app.got_subcommand("segment")) return cmd_segment(cfg, out);
    if (app.got_subcommand("extract")) return cmd_extract(cfg, out);
    if (app.got_subcommand("select")) return cmd_select(cfg, out);
    if (app.got_subcommand("train")) return cmd_train(cfg, out);
    if (app.got_subcommand("eval")) return cmd_eval(cfg, out);
    if (app.got_subcommand("experiment")) return cmd_experiment(cfg, out);
    if (app.got_subcommand("report")) return cmd_report(cfg, out);
    return kExitUsage;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.code() == ErrorCode::NumericFailure ? kExitNumeric : kExitData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  }
}
