#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <fstream>

#include "helpers.hpp"
#include "maniapipe/audio.hpp"
#include "maniapipe/corpus.hpp"
#include "maniapipe/lld.hpp"

using namespace maniapipe;
using testutil::TempDir;

namespace {

void touch_wav(const std::filesystem::path& path) {
  audio::AudioBuffer buf;
  buf.sample_rate = 16000;
  buf.samples.assign(1600, 0.0);
  audio::write_wav_pcm16(buf, path);
}

corpus::CorpusManifest make_fixture(const TempDir& tmp) {
  corpus::CorpusManifest m;
  m.base_dir = tmp.path();
  for (int i = 0; i < 3; ++i) {
    corpus::Recording rec;
    rec.id = "rec_" + std::to_string(i);
    rec.subject_id = "subj_" + std::to_string(i);
    rec.session_tag = "day-0";
    rec.audio_path = rec.id + ".wav";
    rec.label = static_cast<corpus::Label>(i % 3);
    rec.split = static_cast<corpus::Split>(i % 3);
    if (i == 0) {
      rec.age = 31;
      rec.gender = corpus::Gender::Female;
      rec.ymrs_total = 12;
    }
    touch_wav(tmp / rec.audio_path);
    m.recordings.push_back(rec);
  }
  m.segments.push_back({"rec_0", 1, 0.0, 0.04});
  m.segments.push_back({"rec_0", 2, 0.04, 0.09});
  m.segments.push_back({"rec_1", 7, 0.01, 0.1});
  return m;
}

bool structurally_equal(const corpus::CorpusManifest& a,
                        const corpus::CorpusManifest& b) {
  if (a.schema_version != b.schema_version) return false;
  if (a.recordings.size() != b.recordings.size()) return false;
  if (a.segments.size() != b.segments.size()) return false;
  for (std::size_t i = 0; i < a.recordings.size(); ++i) {
    const corpus::Recording& x = a.recordings[i];
    const corpus::Recording& y = b.recordings[i];
    if (x.id != y.id || x.subject_id != y.subject_id ||
        x.session_tag != y.session_tag || x.audio_path != y.audio_path ||
        x.label != y.label || x.split != y.split || x.age != y.age ||
        x.gender != y.gender || x.ymrs_total != y.ymrs_total) {
      return false;
    }
  }
  for (std::size_t i = 0; i < a.segments.size(); ++i) {
    const corpus::TaskSegment& x = a.segments[i];
    const corpus::TaskSegment& y = b.segments[i];
    if (x.recording_id != y.recording_id || x.task_index != y.task_index ||
        x.start_s != y.start_s || x.end_s != y.end_s) {
      return false;
    }
  }
  return true;
}

}  // namespace

TEST_CASE("manifest save/load round trip preserves structure") {
  TempDir tmp("manifest_rt");
  const corpus::CorpusManifest fixture = make_fixture(tmp);
  corpus::save_manifest(fixture, tmp / "manifest.json");
  const corpus::CorpusManifest loaded = corpus::load_manifest(tmp / "manifest.json");
  CHECK(loaded.recordings.size() == 3);
  CHECK(structurally_equal(fixture, loaded));

  // And saving the loaded manifest again round-trips too.
  corpus::save_manifest(loaded, tmp / "again.json");
  CHECK(structurally_equal(loaded, corpus::load_manifest(tmp / "again.json")));
}

TEST_CASE("manifest validation rejects bad segments") {
  TempDir tmp("manifest_bad");
  corpus::CorpusManifest m = make_fixture(tmp);

  SUBCASE("end before start") {
    m.segments.push_back({"rec_2", 3, 0.5, 0.5});
    corpus::save_manifest(m, tmp / "m.json");
    try {
      corpus::load_manifest(tmp / "m.json");
      FAIL("expected SchemaViolation");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::SchemaViolation);
      CHECK(std::string(e.what()).find("rec_2") != std::string::npos);
    }
  }

  SUBCASE("dangling recording reference") {
    m.segments.push_back({"who_is_this", 3, 0.0, 0.5});
    corpus::save_manifest(m, tmp / "m.json");
    try {
      corpus::load_manifest(tmp / "m.json");
      FAIL("expected DanglingSegment");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::DanglingSegment);
    }
  }

  SUBCASE("overlapping tasks") {
    m.segments.push_back({"rec_2", 3, 0.0, 0.06});
    m.segments.push_back({"rec_2", 4, 0.05, 0.09});
    corpus::save_manifest(m, tmp / "m.json");
    CHECK_THROWS_AS(corpus::load_manifest(tmp / "m.json"), Error);
  }

  SUBCASE("missing field") {
    std::ofstream f(tmp / "m.json");
    f << R"({"schema_version":1,"recordings":[{"id":"x"}],"segments":[]})";
    f.close();
    try {
      corpus::load_manifest(tmp / "m.json");
      FAIL("expected SchemaViolation");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::SchemaViolation);
      CHECK(std::string(e.what()).find("subject_id") != std::string::npos);
    }
  }

  SUBCASE("missing file") {
    try {
      corpus::load_manifest(tmp / "not_there.json");
      FAIL("expected MissingFile");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::MissingFile);
    }
  }
}

TEST_CASE("split_summary counts recordings per split and label") {
  corpus::CorpusManifest m;

  SUBCASE("empty manifest") {
    const corpus::SplitSummary s = corpus::split_summary(m);
    CHECK(s.total == 0);
    for (int v : s.per_split) CHECK(v == 0);
    for (int v : s.per_label) CHECK(v == 0);
  }

  SUBCASE("BD-shaped split sizes") {
    auto add = [&m](corpus::Split split, int count) {
      for (int i = 0; i < count; ++i) {
        corpus::Recording rec;
        rec.id = std::string(corpus::to_string(split)) + std::to_string(i);
        rec.label = static_cast<corpus::Label>(i % 3);
        rec.split = split;
        m.recordings.push_back(rec);
      }
    };
    add(corpus::Split::Train, 104);
    add(corpus::Split::Dev, 60);
    add(corpus::Split::Test, 54);
    const corpus::SplitSummary s = corpus::split_summary(m);
    CHECK(s.per_split[0] == 104);
    CHECK(s.per_split[1] == 60);
    CHECK(s.per_split[2] == 54);
    CHECK(s.total == 218);
    CHECK(s.per_label[0] + s.per_label[1] + s.per_label[2] == 218);
  }
}

TEST_CASE("synthetic generator is byte-deterministic and countable") {
  TempDir tmp_a("synth_a");
  TempDir tmp_b("synth_b");
  corpus::SynthConfig cfg = corpus::SynthConfig::defaults();
  cfg.n_per_class_per_split = {{corpus::Split::Train, 2},
                               {corpus::Split::Dev, 2},
                               {corpus::Split::Test, 2}};
  cfg.task_durations_s = {0.8, 0.8, 0.8, 0.8, 0.8, 0.8, 0.8};
  cfg.seed = 99;

  const corpus::CorpusManifest ma = corpus::generate_synthetic_corpus(cfg, tmp_a.path());
  const corpus::CorpusManifest mb = corpus::generate_synthetic_corpus(cfg, tmp_b.path());

  // 2 per class per split -> 18 files.
  CHECK(ma.recordings.size() == 18);
  std::size_t wav_count = 0;
  for ([[maybe_unused]] const auto& entry :
       std::filesystem::directory_iterator(tmp_a.path() / "wav")) {
    ++wav_count;
  }
  CHECK(wav_count == 18);

  const corpus::SplitSummary s = corpus::split_summary(ma);
  CHECK(s.per_split[0] == 6);
  CHECK(s.per_split[1] == 6);
  CHECK(s.per_split[2] == 6);

  auto bytes = [](const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    return std::vector<char>{std::istreambuf_iterator<char>(in),
                             std::istreambuf_iterator<char>()};
  };
  CHECK(bytes(tmp_a / "manifest.json") == bytes(tmp_b / "manifest.json"));
  for (const corpus::Recording& rec : ma.recordings) {
    CHECK(bytes(ma.resolve_audio_path(rec)) ==
          bytes(mb.resolve_audio_path(*mb.find_recording(rec.id))));
  }
}

TEST_CASE("synthetic config validation") {
  TempDir tmp("synth_bad");
  corpus::SynthConfig cfg = corpus::SynthConfig::defaults();
  cfg.task_durations_s[3] = cfg.marker_tone_dur_s;  // not strictly greater
  try {
    corpus::generate_synthetic_corpus(cfg, tmp.path());
    FAIL("expected InvalidConfig");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::InvalidConfig);
  }

  corpus::SynthConfig same = corpus::SynthConfig::defaults();
  same.class_profiles[corpus::Label::Remission] =
      same.class_profiles[corpus::Label::Mania];
  CHECK_THROWS_AS(corpus::generate_synthetic_corpus(same, tmp.path()), Error);
}

TEST_CASE("generated mania recordings have higher mean F0 than remission") {
  TempDir tmp("synth_f0");
  corpus::SynthConfig cfg = corpus::SynthConfig::defaults();
  cfg.n_per_class_per_split = {{corpus::Split::Train, 2},
                               {corpus::Split::Dev, 0},
                               {corpus::Split::Test, 0}};
  cfg.task_durations_s = {1.5, 1.5, 1.5, 1.5, 1.5, 1.5, 1.5};
  cfg.seed = 4242;
  const corpus::CorpusManifest manifest =
      corpus::generate_synthetic_corpus(cfg, tmp.path());

  lld::LldSet f0_only;
  f0_only.enabled = {"f0"};
  lld::FrameConfig frame;

  auto mean_voiced_f0 = [&](const corpus::Recording& rec) {
    const audio::AudioBuffer buf = audio::read_wav(manifest.resolve_audio_path(rec));
    double sum = 0.0;
    std::size_t n = 0;
    // Mean F0 over the recording's task segments (tone-free speech).
    for (const corpus::TaskSegment& seg : manifest.segments_of(rec.id)) {
      const lld::LldMatrix m =
          lld::extract_lld(audio::cut_segment(buf, seg), f0_only, frame);
      for (std::size_t f = 0; f < m.values.rows; ++f) {
        if (m.values(f, 0) > 0.0) {
          sum += m.values(f, 0);
          ++n;
        }
      }
    }
    REQUIRE(n > 0);
    return sum / static_cast<double>(n);
  };

  std::vector<double> mania_f0, remission_f0;
  for (const corpus::Recording& rec : manifest.recordings) {
    if (rec.label == corpus::Label::Mania) mania_f0.push_back(mean_voiced_f0(rec));
    if (rec.label == corpus::Label::Remission) {
      remission_f0.push_back(mean_voiced_f0(rec));
    }
  }
  REQUIRE(mania_f0.size() == 2);
  REQUIRE(remission_f0.size() == 2);
  for (double m : mania_f0) {
    for (double r : remission_f0) CHECK(m > r);
  }
}
