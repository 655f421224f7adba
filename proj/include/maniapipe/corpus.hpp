#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "maniapipe/common.hpp"

namespace maniapipe::corpus {

enum class Label { Remission = 0, Hypomania = 1, Mania = 2 };
enum class Split { Train = 0, Dev = 1, Test = 2 };
enum class Gender { Female, Male };

inline constexpr int kNumLabels = 3;
inline constexpr int kNumSplits = 3;
inline constexpr int kNumTasks = 7;

const char* to_string(Label label);
const char* to_string(Split split);
const char* to_string(Gender gender);
Label label_from_string(const std::string& s);
Split split_from_string(const std::string& s);
Gender gender_from_string(const std::string& s);

struct Recording {
  std::string id;
  std::string subject_id;
  std::string session_tag;  // e.g. day-0 / day-3 / day-7 / day-28 / month-3
  std::string audio_path;   // as written in the manifest; may be relative
  Label label = Label::Remission;
  Split split = Split::Train;
  std::optional<int> age;
  std::optional<Gender> gender;
  std::optional<int> ymrs_total;
};

struct TaskSegment {
  std::string recording_id;
  int task_index = 1;  // 1..7
  double start_s = 0.0;
  double end_s = 0.0;
};

struct CorpusManifest {
  std::vector<Recording> recordings;
  std::vector<TaskSegment> segments;
  int schema_version = 1;
  // Directory the manifest was loaded from; relative audio paths resolve
  // against it. Not serialized.
  std::filesystem::path base_dir;

  const Recording* find_recording(const std::string& id) const;
  std::vector<TaskSegment> segments_of(const std::string& recording_id) const;
  std::filesystem::path resolve_audio_path(const Recording& rec) const;
};

struct SplitSummary {
  std::array<int, kNumSplits> per_split{};
  std::array<int, kNumLabels> per_label{};
  std::array<std::array<int, kNumLabels>, kNumSplits> per_split_label{};
  int total = 0;
};

/// Acoustic parameters of one synthetic class. The synthesizer renders voiced
/// bursts as jittered pulse trains through two formant resonators plus a
/// one-pole tilt filter, separated by silences at the speaking rate.
struct ClassProfile {
  double base_pitch_hz = 120.0;
  double pitch_jitter_pct = 1.0;    // per-period % stddev
  double speaking_rate_hz = 3.0;    // voiced events per second
  double loudness_db = 0.0;         // offset from the reference burst level
  double spectral_tilt = 0.95;      // one-pole lowpass coefficient in [0,1)
};

struct SynthConfig {
  std::map<Split, int> n_per_class_per_split;
  int sample_rate = 16000;
  std::array<double, kNumTasks> task_durations_s{};
  std::map<Label, ClassProfile> class_profiles;
  double marker_tone_hz = 3000.0;
  double marker_tone_dur_s = 0.25;
  std::uint64_t seed = 1;

  static SynthConfig defaults();
};

/// Loads and fully validates a manifest JSON document.
CorpusManifest load_manifest(const std::filesystem::path& path);

void save_manifest(const CorpusManifest& manifest, const std::filesystem::path& path);

SplitSummary split_summary(const CorpusManifest& manifest);

/// Validates invariants of an in-memory manifest (uniqueness, segment order,
/// dangling references). Audio paths are only checked when check_audio is set.
void validate_manifest(const CorpusManifest& manifest, bool check_audio);

/// Renders one WAV per recording (7 task segments, each preceded by a marker
/// tone) plus the matching manifest with ground-truth segment times.
/// Byte-deterministic given (cfg, cfg.seed).
CorpusManifest generate_synthetic_corpus(const SynthConfig& cfg,
                                         const std::filesystem::path& out_dir);

}  // namespace maniapipe::corpus
