#include "maniapipe/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>

#include <json.hpp>

#include "maniapipe/audio.hpp"

namespace maniapipe::corpus {

using nlohmann::json;

const char* to_string(Label label) {
  switch (label) {
    case Label::Remission: return "Remission";
    case Label::Hypomania: return "Hypomania";
    case Label::Mania: return "Mania";
  }
  return "?";
}

const char* to_string(Split split) {
  switch (split) {
    case Split::Train: return "Train";
    case Split::Dev: return "Dev";
    case Split::Test: return "Test";
  }
  return "?";
}

const char* to_string(Gender gender) {
  return gender == Gender::Female ? "Female" : "Male";
}

Label label_from_string(const std::string& s) {
  if (s == "Remission") return Label::Remission;
  if (s == "Hypomania") return Label::Hypomania;
  if (s == "Mania") return Label::Mania;
  throw Error(ErrorCode::SchemaViolation, "unknown label '" + s + "'");
}

Split split_from_string(const std::string& s) {
  if (s == "Train") return Split::Train;
  if (s == "Dev") return Split::Dev;
  if (s == "Test") return Split::Test;
  throw Error(ErrorCode::SchemaViolation, "unknown split '" + s + "'");
}

Gender gender_from_string(const std::string& s) {
  if (s == "Female") return Gender::Female;
  if (s == "Male") return Gender::Male;
  throw Error(ErrorCode::SchemaViolation, "unknown gender '" + s + "'");
}

const Recording* CorpusManifest::find_recording(const std::string& id) const {
  for (const auto& rec : recordings) {
    if (rec.id == id) return &rec;
  }
  return nullptr;
}

std::vector<TaskSegment> CorpusManifest::segments_of(
    const std::string& recording_id) const {
  std::vector<TaskSegment> out;
  for (const auto& seg : segments) {
    if (seg.recording_id == recording_id) out.push_back(seg);
  }
  std::sort(out.begin(), out.end(),
            [](const TaskSegment& a, const TaskSegment& b) {
              return a.task_index < b.task_index;
            });
  return out;
}

std::filesystem::path CorpusManifest::resolve_audio_path(const Recording& rec) const {
  std::filesystem::path p(rec.audio_path);
  if (p.is_absolute()) return p;
  return base_dir / p;
}

void validate_manifest(const CorpusManifest& manifest, bool check_audio) {
  std::set<std::string> ids;
  for (const auto& rec : manifest.recordings) {
    if (rec.id.empty()) {
      throw Error(ErrorCode::SchemaViolation, "recording with empty id");
    }
    if (!ids.insert(rec.id).second) {
      throw Error(ErrorCode::SchemaViolation, "duplicate recording id '" + rec.id + "'");
    }
    if (rec.ymrs_total && *rec.ymrs_total < 0) {
      throw Error(ErrorCode::SchemaViolation,
                  "recording '" + rec.id + "': negative ymrs_total");
    }
    if (check_audio && !std::filesystem::exists(manifest.resolve_audio_path(rec))) {
      throw Error(ErrorCode::SchemaViolation,
                  "recording '" + rec.id + "': audio_path not resolvable: " +
                      manifest.resolve_audio_path(rec).string());
    }
  }

  std::map<std::string, std::vector<const TaskSegment*>> by_rec;
  for (const auto& seg : manifest.segments) {
    if (ids.find(seg.recording_id) == ids.end()) {
      throw Error(ErrorCode::DanglingSegment,
                  "segment references unknown recording '" + seg.recording_id + "'");
    }
    if (seg.task_index < 1 || seg.task_index > kNumTasks) {
      throw Error(ErrorCode::SchemaViolation,
                  "segment of '" + seg.recording_id + "': task_index " +
                      std::to_string(seg.task_index) + " outside 1..7");
    }
    if (seg.start_s < 0.0 || seg.end_s <= seg.start_s) {
      throw Error(ErrorCode::SchemaViolation,
                  "segment of '" + seg.recording_id + "' task " +
                      std::to_string(seg.task_index) + ": end_s must exceed start_s");
    }
    by_rec[seg.recording_id].push_back(&seg);
  }
  for (auto& [rec_id, segs] : by_rec) {
    std::sort(segs.begin(), segs.end(), [](const TaskSegment* a, const TaskSegment* b) {
      return a->task_index < b->task_index;
    });
    for (std::size_t i = 1; i < segs.size(); ++i) {
      if (segs[i]->task_index == segs[i - 1]->task_index) {
        throw Error(ErrorCode::SchemaViolation,
                    "recording '" + rec_id + "': duplicate task_index " +
                        std::to_string(segs[i]->task_index));
      }
      if (segs[i]->start_s < segs[i - 1]->end_s) {
        throw Error(ErrorCode::SchemaViolation,
                    "recording '" + rec_id + "': task " +
                        std::to_string(segs[i]->task_index) +
                        " overlaps task " + std::to_string(segs[i - 1]->task_index));
      }
    }
  }
}

namespace {

json recording_to_json(const Recording& rec) {
  json j;
  j["id"] = rec.id;
  j["subject_id"] = rec.subject_id;
  j["session_tag"] = rec.session_tag;
  j["audio_path"] = rec.audio_path;
  j["label"] = to_string(rec.label);
  j["split"] = to_string(rec.split);
  if (rec.age) j["age"] = *rec.age;
  if (rec.gender) j["gender"] = to_string(*rec.gender);
  if (rec.ymrs_total) j["ymrs_total"] = *rec.ymrs_total;
  return j;
}

template <typename T>
T require_field(const json& j, const std::string& field, const std::string& where) {
  if (!j.contains(field)) {
    throw Error(ErrorCode::SchemaViolation, where + ": missing field '" + field + "'");
  }
  try {
    return j.at(field).get<T>();
  } catch (const json::exception&) {
    throw Error(ErrorCode::SchemaViolation, where + ": bad type for field '" + field + "'");
  }
}

}  // namespace

CorpusManifest load_manifest(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) {
    throw Error(ErrorCode::MissingFile, "no such manifest: " + path.string());
  }
  std::ifstream in(path);
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::SchemaViolation,
                "manifest parse error in " + path.string() + ": " + e.what());
  }

  CorpusManifest manifest;
  manifest.base_dir = path.parent_path();
  manifest.schema_version = require_field<int>(doc, "schema_version", "manifest");

  if (!doc.contains("recordings") || !doc["recordings"].is_array()) {
    throw Error(ErrorCode::SchemaViolation, "manifest: missing recordings[]");
  }
  for (const auto& jr : doc["recordings"]) {
    Recording rec;
    rec.id = require_field<std::string>(jr, "id", "recording");
    const std::string where = "recording '" + rec.id + "'";
    rec.subject_id = require_field<std::string>(jr, "subject_id", where);
    rec.session_tag = require_field<std::string>(jr, "session_tag", where);
    rec.audio_path = require_field<std::string>(jr, "audio_path", where);
    rec.label = label_from_string(require_field<std::string>(jr, "label", where));
    rec.split = split_from_string(require_field<std::string>(jr, "split", where));
    if (jr.contains("age")) rec.age = require_field<int>(jr, "age", where);
    if (jr.contains("gender")) {
      rec.gender = gender_from_string(require_field<std::string>(jr, "gender", where));
    }
    if (jr.contains("ymrs_total")) {
      rec.ymrs_total = require_field<int>(jr, "ymrs_total", where);
    }
    manifest.recordings.push_back(std::move(rec));
  }

  if (!doc.contains("segments") || !doc["segments"].is_array()) {
    throw Error(ErrorCode::SchemaViolation, "manifest: missing segments[]");
  }
  for (const auto& js : doc["segments"]) {
    TaskSegment seg;
    seg.recording_id = require_field<std::string>(js, "recording_id", "segment");
    const std::string where = "segment of '" + seg.recording_id + "'";
    seg.task_index = require_field<int>(js, "task_index", where);
    seg.start_s = require_field<double>(js, "start_s", where);
    seg.end_s = require_field<double>(js, "end_s", where);
    manifest.segments.push_back(std::move(seg));
  }

  validate_manifest(manifest, /*check_audio=*/true);
  return manifest;
}

void save_manifest(const CorpusManifest& manifest, const std::filesystem::path& path) {
  json doc;
  doc["schema_version"] = manifest.schema_version;
  doc["recordings"] = json::array();
  for (const auto& rec : manifest.recordings) {
    doc["recordings"].push_back(recording_to_json(rec));
  }
  doc["segments"] = json::array();
  for (const auto& seg : manifest.segments) {
    json js;
    js["recording_id"] = seg.recording_id;
    js["task_index"] = seg.task_index;
    js["start_s"] = seg.start_s;
    js["end_s"] = seg.end_s;
    doc["segments"].push_back(js);
  }
  std::ofstream out(path);
  if (!out) {
    throw Error(ErrorCode::IoError, "cannot write " + path.string());
  }
  out << doc.dump(2) << "\n";
}

SplitSummary split_summary(const CorpusManifest& manifest) {
  SplitSummary summary;
  for (const auto& rec : manifest.recordings) {
    const int s = static_cast<int>(rec.split);
    const int l = static_cast<int>(rec.label);
    summary.per_split[s]++;
    summary.per_label[l]++;
    summary.per_split_label[s][l]++;
    summary.total++;
  }
  return summary;
}

SynthConfig SynthConfig::defaults() {
  SynthConfig cfg;
  cfg.n_per_class_per_split = {{Split::Train, 6}, {Split::Dev, 6}, {Split::Test, 6}};
  cfg.sample_rate = 16000;
  cfg.task_durations_s = {3.0, 2.5, 3.0, 2.0, 1.5, 3.0, 3.5};
  // Class signal rides on pitch, jitter, rate and loudness (the usual manic
  // speech markers); spectral tilt is shared so static spectral shape stays
  // uninformative.
  cfg.class_profiles[Label::Remission] = {108.0, 0.5, 2.3, 0.0, 0.94};
  cfg.class_profiles[Label::Hypomania] = {165.0, 1.2, 3.5, 3.5, 0.94};
  cfg.class_profiles[Label::Mania] = {232.0, 2.2, 5.2, 7.0, 0.94};
  cfg.marker_tone_hz = 3000.0;
  cfg.marker_tone_dur_s = 0.25;
  cfg.seed = 1;
  return cfg;
}

namespace {

void validate_synth_config(const SynthConfig& cfg) {
  if (cfg.sample_rate <= 0) {
    throw Error(ErrorCode::InvalidConfig, "sample_rate must be positive");
  }
  if (cfg.marker_tone_dur_s <= 0.0 ||
      cfg.marker_tone_hz <= 0.0 || cfg.marker_tone_hz >= cfg.sample_rate / 2.0) {
    throw Error(ErrorCode::InvalidConfig, "marker tone outside the representable band");
  }
  for (double d : cfg.task_durations_s) {
    if (d <= cfg.marker_tone_dur_s) {
      throw Error(ErrorCode::InvalidConfig,
                  "every task duration must exceed marker_tone_dur_s");
    }
  }
  if (cfg.class_profiles.size() != kNumLabels) {
    throw Error(ErrorCode::InvalidConfig, "need a class profile for each label");
  }
  for (auto a = cfg.class_profiles.begin(); a != cfg.class_profiles.end(); ++a) {
    for (auto b = std::next(a); b != cfg.class_profiles.end(); ++b) {
      const ClassProfile& p = a->second;
      const ClassProfile& q = b->second;
      if (p.base_pitch_hz == q.base_pitch_hz &&
          p.pitch_jitter_pct == q.pitch_jitter_pct &&
          p.speaking_rate_hz == q.speaking_rate_hz &&
          p.loudness_db == q.loudness_db && p.spectral_tilt == q.spectral_tilt) {
        throw Error(ErrorCode::InvalidConfig,
                    "class profiles must differ in at least one parameter");
      }
    }
  }
  for (const auto& [split, n] : cfg.n_per_class_per_split) {
    if (n < 0) throw Error(ErrorCode::InvalidConfig, "negative count for a split");
  }
}

// All-pole resonator pair plus one-pole tilt filter over a pulse train.
std::vector<double> render_voiced_burst(std::size_t n_samples, int sample_rate,
                                        const ClassProfile& profile, Rng& rng) {
  std::vector<double> excitation(n_samples, 0.0);
  const double base_period = sample_rate / profile.base_pitch_hz;
  // Intonation: each burst starts at a slightly different pitch and declines
  // toward its end.
  const double onset_factor = rng.uniform(0.97, 1.05);
  double t = 0.0;
  while (t < static_cast<double>(n_samples)) {
    const auto idx = static_cast<std::size_t>(t);
    if (idx < n_samples) excitation[idx] = 1.0;
    const double declination = 1.0 + 0.05 * t / static_cast<double>(n_samples);
    const double jitter = 1.0 + profile.pitch_jitter_pct / 100.0 * rng.normal();
    t += base_period * onset_factor * declination * std::max(0.2, jitter);
  }

  auto resonate = [&](std::vector<double>& x, double freq, double bandwidth) {
    const double r = std::exp(-M_PI * bandwidth / sample_rate);
    const double c = 2.0 * r * std::cos(2.0 * M_PI * freq / sample_rate);
    double y1 = 0.0, y2 = 0.0;
    for (double& v : x) {
      const double y = v + c * y1 - r * r * y2;
      y2 = y1;
      y1 = y;
      v = y;
    }
  };
  resonate(excitation, 500.0, 80.0);
  resonate(excitation, 1500.0, 120.0);

  const double a = profile.spectral_tilt;
  double prev = 0.0;
  for (double& v : excitation) {
    prev = (1.0 - a) * v + a * prev;
    v = prev;
  }

  // Fade edges (10 ms) and scale to the profile's loudness target.
  const auto fade = std::min<std::size_t>(n_samples / 2, sample_rate / 100);
  for (std::size_t i = 0; i < fade; ++i) {
    const double g = 0.5 - 0.5 * std::cos(M_PI * i / fade);
    excitation[i] *= g;
    excitation[n_samples - 1 - i] *= g;
  }
  double sq = 0.0;
  for (double v : excitation) sq += v * v;
  const double rms = std::sqrt(sq / n_samples);
  const double target_rms = 0.06 * std::pow(10.0, profile.loudness_db / 20.0);
  const double gain = target_rms / std::max(rms, 1e-9);
  for (double& v : excitation) v *= gain;
  return excitation;
}

// Unvoiced fricative-like hiss: high-emphasis noise burst.
std::vector<double> render_fricative(std::size_t n_samples, double target_rms,
                                     Rng& rng) {
  std::vector<double> noise(n_samples);
  double lp = 0.0;
  for (double& v : noise) {
    const double white = 2.0 * rng.uniform() - 1.0;
    lp = 0.8 * lp + 0.2 * white;
    v = white - lp;
  }
  const auto fade = std::min<std::size_t>(n_samples / 2, 80);
  for (std::size_t i = 0; i < fade; ++i) {
    const double g = static_cast<double>(i) / fade;
    noise[i] *= g;
    noise[n_samples - 1 - i] *= g;
  }
  double sq = 0.0;
  for (double v : noise) sq += v * v;
  const double rms = std::sqrt(sq / n_samples);
  const double gain = target_rms / std::max(rms, 1e-9);
  for (double& v : noise) v *= gain;
  return noise;
}

void append_marker_tone(std::vector<double>& out, const SynthConfig& cfg) {
  const auto n = static_cast<std::size_t>(
      std::lround(cfg.marker_tone_dur_s * cfg.sample_rate));
  const auto fade = std::min<std::size_t>(n / 2, cfg.sample_rate / 200);
  for (std::size_t i = 0; i < n; ++i) {
    double v = 0.15 * std::sin(2.0 * M_PI * cfg.marker_tone_hz * i / cfg.sample_rate);
    if (i < fade) v *= 0.5 - 0.5 * std::cos(M_PI * i / fade);
    if (n - 1 - i < fade) v *= 0.5 - 0.5 * std::cos(M_PI * (n - 1 - i) / fade);
    out.push_back(v);
  }
}

void append_task_audio(std::vector<double>& out, double duration_s,
                       const SynthConfig& cfg, const ClassProfile& profile, Rng& rng) {
  const auto total = static_cast<std::size_t>(std::lround(duration_s * cfg.sample_rate));
  std::size_t written = 0;
  // Lead-in pause so the task never starts flush against the marker tone.
  std::size_t pause = static_cast<std::size_t>(0.06 * cfg.sample_rate);
  while (written < total) {
    pause = std::min(pause, total - written);
    out.insert(out.end(), pause, 0.0);
    written += pause;
    if (written >= total) break;

    const double voiced_s = 0.65 / profile.speaking_rate_hz * rng.uniform(0.85, 1.15);
    auto voiced_n = static_cast<std::size_t>(voiced_s * cfg.sample_rate);
    voiced_n = std::min(std::max<std::size_t>(voiced_n, 64), total - written);
    std::vector<double> burst =
        render_voiced_burst(voiced_n, cfg.sample_rate, profile, rng);
    out.insert(out.end(), burst.begin(), burst.end());
    written += voiced_n;

    // Fricative-like consonant tail on some syllables.
    if (rng.uniform() < 0.35 && written < total) {
      auto fric_n = static_cast<std::size_t>(rng.uniform(0.05, 0.12) * cfg.sample_rate);
      fric_n = std::min(std::max<std::size_t>(fric_n, 64), total - written);
      const double target_rms =
          0.35 * 0.06 * std::pow(10.0, profile.loudness_db / 20.0);
      std::vector<double> fric = render_fricative(fric_n, target_rms, rng);
      out.insert(out.end(), fric.begin(), fric.end());
      written += fric_n;
    }

    const double silence_s = 0.35 / profile.speaking_rate_hz * rng.uniform(0.7, 1.3);
    pause = static_cast<std::size_t>(silence_s * cfg.sample_rate);
  }
}

}  // namespace

CorpusManifest generate_synthetic_corpus(const SynthConfig& cfg,
                                         const std::filesystem::path& out_dir) {
  validate_synth_config(cfg);
  std::error_code ec;
  std::filesystem::create_directories(out_dir / "wav", ec);
  if (ec) {
    throw Error(ErrorCode::IoError, "cannot create " + (out_dir / "wav").string());
  }

  static const char* kSessionTags[] = {"day-0", "day-3", "day-7", "day-28", "month-3"};

  CorpusManifest manifest;
  manifest.base_dir = out_dir;

  for (Split split : {Split::Train, Split::Dev, Split::Test}) {
    const auto it = cfg.n_per_class_per_split.find(split);
    const int count = it == cfg.n_per_class_per_split.end() ? 0 : it->second;
    for (Label label : {Label::Remission, Label::Hypomania, Label::Mania}) {
      for (int i = 0; i < count; ++i) {
        char suffix[16];
        std::snprintf(suffix, sizeof(suffix), "%03d", i);
        std::string id = std::string(to_string(split)) + "_" + to_string(label) +
                         "_" + suffix;
        for (char& c : id) c = static_cast<char>(std::tolower(c));

        Rng rng(mix_seed(cfg.seed, id));
        // Per-recording voice variation around the class profile, like
        // inter-speaker/inter-session spread in a real corpus.
        ClassProfile profile = cfg.class_profiles.at(label);
        profile.base_pitch_hz *= std::clamp(1.0 + 0.03 * rng.normal(), 0.92, 1.08);
        profile.speaking_rate_hz *= std::clamp(1.0 + 0.05 * rng.normal(), 0.85, 1.15);
        profile.loudness_db += std::clamp(0.6 * rng.normal(), -1.5, 1.5);

        std::vector<double> samples;
        std::vector<TaskSegment> segs;
        for (int task = 1; task <= kNumTasks; ++task) {
          append_marker_tone(samples, cfg);
          TaskSegment seg;
          seg.recording_id = id;
          seg.task_index = task;
          seg.start_s = static_cast<double>(samples.size()) / cfg.sample_rate;
          append_task_audio(samples, cfg.task_durations_s[task - 1], cfg, profile, rng);
          seg.end_s = static_cast<double>(samples.size()) / cfg.sample_rate;
          segs.push_back(seg);
        }

        // Recording-room noise floor (~-70 dBFS), low-pass shaped with a flat
        // residue. Level differs per recording and wanders slowly within it,
        // like a real capture chain, so minima/percentile descriptors keep
        // honest variance across rows.
        const double noise_gain = std::clamp(1.0 + 0.25 * rng.normal(), 0.5, 1.6);
        const double lfo_hz = rng.uniform(0.05, 0.15);
        const double lfo_phase = rng.uniform(0.0, 2.0 * M_PI);
        double lp = 0.0;
        for (std::size_t si = 0; si < samples.size(); ++si) {
          const double white = 2.0 * rng.uniform() - 1.0;
          lp = 0.85 * lp + 0.15 * white;
          const double wander =
              1.0 + 0.25 * std::sin(2.0 * M_PI * lfo_hz * si / cfg.sample_rate +
                                    lfo_phase);
          samples[si] += noise_gain * wander * (2.5e-3 * lp + 1e-4 * white);
        }

        double peak = 0.0;
        for (double v : samples) peak = std::max(peak, std::abs(v));
        if (peak > 0.98) {
          const double g = 0.98 / peak;
          for (double& v : samples) v *= g;
        }

        Recording rec;
        rec.id = id;
        rec.subject_id = "subj_" + id;
        rec.session_tag = kSessionTags[i % 5];
        rec.audio_path = "wav/" + id + ".wav";
        rec.label = label;
        rec.split = split;
        rec.age = 20 + static_cast<int>(rng.below(40));
        rec.gender = rng.below(2) == 0 ? Gender::Female : Gender::Male;
        switch (label) {
          case Label::Remission: rec.ymrs_total = static_cast<int>(rng.below(6)); break;
          case Label::Hypomania: rec.ymrs_total = 10 + static_cast<int>(rng.below(8)); break;
          case Label::Mania: rec.ymrs_total = 22 + static_cast<int>(rng.below(14)); break;
        }

        audio::AudioBuffer buf;
        buf.sample_rate = cfg.sample_rate;
        buf.samples = std::move(samples);
        audio::write_wav_pcm16(buf, out_dir / rec.audio_path);

        manifest.recordings.push_back(std::move(rec));
        manifest.segments.insert(manifest.segments.end(), segs.begin(), segs.end());
      }
    }
  }

  validate_manifest(manifest, /*check_audio=*/true);
  save_manifest(manifest, out_dir / "manifest.json");
  return manifest;
}

}  // namespace maniapipe::corpus
