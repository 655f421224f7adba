#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "helpers.hpp"
#include "maniapipe/lld.hpp"

using namespace maniapipe;

namespace {

audio::AudioBuffer make_buffer(std::vector<double> samples, int rate = 16000) {
  audio::AudioBuffer buf;
  buf.sample_rate = rate;
  buf.samples = std::move(samples);
  return buf;
}

/// Periodic synthetic vowel: three harmonics of 160 Hz (period = 100 samples
/// at 16 kHz), voiced in every frame.
std::vector<double> vowel(double dur_s, double amplitude = 0.3) {
  const int n = static_cast<int>(dur_s * 16000);
  std::vector<double> x(n);
  for (int i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / 16000.0;
    x[i] = amplitude * (std::sin(2 * M_PI * 160 * t) +
                        0.5 * std::sin(2 * M_PI * 320 * t) +
                        0.25 * std::sin(2 * M_PI * 480 * t));
  }
  return x;
}

std::size_t column_of(const lld::LldMatrix& m, const std::string& name) {
  for (std::size_t c = 0; c < m.names.size(); ++c) {
    if (m.names[c] == name) return c;
  }
  REQUIRE(false);
  return 0;
}

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

}  // namespace

TEST_CASE("frame counts") {
  lld::FrameConfig cfg;

  SUBCASE("exactly one frame") {
    const Matrix frames = lld::frame_signal(make_buffer(std::vector<double>(400, 0.1)), cfg);
    CHECK(frames.rows == 1);
    CHECK(frames.cols == 400);
  }

  SUBCASE("one second gives 98 frames") {
    const Matrix frames =
        lld::frame_signal(make_buffer(std::vector<double>(16000, 0.0)), cfg);
    CHECK(frames.rows == 98);
  }

  SUBCASE("shorter than a frame throws") {
    try {
      lld::frame_signal(make_buffer(std::vector<double>(399, 0.0)), cfg);
      FAIL("expected TooShort");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::TooShort);
    }
  }
}

TEST_CASE("constant signal frames equal window times pre-emphasized constant") {
  lld::FrameConfig cfg;
  const double c = 0.8;
  const Matrix frames = lld::frame_signal(make_buffer(std::vector<double>(800, c)), cfg);
  const double emphasized = c * (1.0 - cfg.preemphasis);
  for (std::size_t f = 0; f < frames.rows; ++f) {
    for (std::size_t i = 0; i < frames.cols; ++i) {
      const double hamming =
          0.54 - 0.46 * std::cos(2.0 * M_PI * i / (frames.cols - 1));
      CHECK(frames(f, i) == doctest::Approx(emphasized * hamming).epsilon(1e-12));
    }
  }
}

TEST_CASE("pulse-train vowel has median F0 near 220 Hz") {
  // Impulse train at 220 Hz; the autocorrelation pitch tracker should land
  // within +-5 Hz over voiced frames.
  std::vector<double> x(16000, 0.0);
  const double period = 16000.0 / 220.0;
  for (double t = 0.0; t < 16000.0; t += period) {
    x[static_cast<std::size_t>(t)] = 0.8;
  }
  lld::LldSet set;
  set.enabled = {"f0", "voicing_prob"};
  const lld::LldMatrix m = lld::extract_lld(make_buffer(std::move(x)), set, {});

  std::vector<double> voiced;
  for (std::size_t f = 0; f < m.values.rows; ++f) {
    if (m.values(f, 0) > 0.0) voiced.push_back(m.values(f, 0));
  }
  REQUIRE(voiced.size() > 50);
  std::sort(voiced.begin(), voiced.end());
  const double median = voiced[voiced.size() / 2];
  CHECK(median >= 215.0);
  CHECK(median <= 225.0);
}

TEST_CASE("digital silence floors energy and zeroes zcr") {
  const lld::LldMatrix m = lld::extract_lld(
      make_buffer(std::vector<double>(8000, 0.0)), lld::LldSet::all(), {});
  const std::size_t rms_col = column_of(m, "rms_energy");
  const std::size_t zcr_col = column_of(m, "zcr");
  const std::size_t f0_col = column_of(m, "f0");
  for (std::size_t f = 0; f < m.values.rows; ++f) {
    CHECK(m.values(f, rms_col) == 1e-10);
    CHECK(m.values(f, zcr_col) == 0.0);
    CHECK(m.values(f, f0_col) == 0.0);
  }
  CHECK(all_finite(m.values.data));
}

TEST_CASE("1 kHz sine: centroid within one FFT bin, mel energy in the right band") {
  const lld::LldMatrix m = lld::extract_lld(
      make_buffer(testutil::sine_wave(1000.0, 16000, 0.5, 0.5)), lld::LldSet::all(),
      {});
  const double bin_hz = 16000.0 / 512.0;

  const std::size_t cen = column_of(m, "spectral_centroid");
  for (std::size_t f = 2; f + 2 < m.values.rows; ++f) {
    CHECK(std::abs(m.values(f, cen) - 1000.0) <= bin_hz);
  }

  // Oracle: which of the 8 HTK-mel triangles has the largest weight at 1 kHz.
  const double mel_max = hz_to_mel(8000.0);
  int expected_band = -1;
  double best_weight = 0.0;
  for (int b = 0; b < 8; ++b) {
    const double lo = mel_to_hz(mel_max * b / 9.0);
    const double mid = mel_to_hz(mel_max * (b + 1) / 9.0);
    const double hi = mel_to_hz(mel_max * (b + 2) / 9.0);
    double w = 0.0;
    if (1000.0 > lo && 1000.0 < mid) w = (1000.0 - lo) / (mid - lo);
    if (1000.0 >= mid && 1000.0 < hi) w = (hi - 1000.0) / (hi - mid);
    if (w > best_weight) {
      best_weight = w;
      expected_band = b;
    }
  }
  REQUIRE(expected_band >= 0);

  const std::size_t first_band = column_of(m, "log_mel0");
  for (std::size_t f = 2; f + 2 < m.values.rows; ++f) {
    int argmax = 0;
    for (int b = 1; b < 8; ++b) {
      if (m.values(f, first_band + b) > m.values(f, first_band + argmax)) argmax = b;
    }
    CHECK(argmax == expected_band);
  }
}

TEST_CASE("mfcc equals an independent straight-line chain with direct DCT") {
  const std::vector<double> x = vowel(0.2);
  lld::FrameConfig cfg;
  const lld::LldMatrix m = lld::extract_lld(make_buffer(x), lld::LldSet::all(), cfg);

  // Recompute frame 3 from scratch: pre-emphasis, Hamming, naive DFT power,
  // HTK mel bank, ln with the 1e-10 floor, orthonormal DCT-II by definition.
  const std::size_t frame_idx = 3;
  const std::size_t frame_len = 400, hop = 160, nfft = 512;
  std::vector<double> frame(nfft, 0.0);
  for (std::size_t i = 0; i < frame_len; ++i) {
    const std::size_t t = frame_idx * hop + i;
    const double prev = t == 0 ? x[0] : x[t - 1];
    frame[i] = (x[t] - cfg.preemphasis * prev) *
               (0.54 - 0.46 * std::cos(2.0 * M_PI * i / (frame_len - 1)));
  }
  const auto spectrum = testutil::naive_dft(frame);
  std::vector<double> power(nfft / 2 + 1);
  for (std::size_t k = 0; k < power.size(); ++k) power[k] = std::norm(spectrum[k]);

  const int n_mel = 26;
  const double mel_max = hz_to_mel(8000.0);
  std::vector<double> log_mel(n_mel);
  for (int b = 0; b < n_mel; ++b) {
    const double lo = mel_to_hz(mel_max * b / (n_mel + 1));
    const double mid = mel_to_hz(mel_max * (b + 1) / (n_mel + 1));
    const double hi = mel_to_hz(mel_max * (b + 2) / (n_mel + 1));
    double acc = 0.0;
    for (std::size_t k = 0; k < power.size(); ++k) {
      const double hz = static_cast<double>(k) * 16000.0 / nfft;
      double w = 0.0;
      if (hz > lo && hz < mid) w = (hz - lo) / (mid - lo);
      if (hz >= mid && hz < hi) w = (hi - hz) / (hi - mid);
      acc += w * power[k];
    }
    log_mel[b] = std::log(std::max(acc, 1e-10));
  }

  for (int k = 0; k < 15; ++k) {
    double acc = 0.0;
    for (int n = 0; n < n_mel; ++n) {
      acc += log_mel[n] * std::cos(M_PI * k * (2 * n + 1) / (2.0 * n_mel));
    }
    acc *= k == 0 ? std::sqrt(1.0 / n_mel) : std::sqrt(2.0 / n_mel);
    CHECK(std::abs(m.values(frame_idx, column_of(m, "mfcc" + std::to_string(k))) -
                   acc) <= 1e-9);
  }
}

TEST_CASE("empty descriptor set is rejected") {
  lld::LldSet empty;
  try {
    lld::extract_lld(make_buffer(std::vector<double>(8000, 0.0)), empty, {});
    FAIL("expected EmptyLldSet");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::EmptyLldSet);
  }
}

TEST_CASE("append_deltas") {
  lld::LldMatrix m;
  m.names = {"a", "b"};
  m.hop_s = 0.01;

  SUBCASE("constant column gives zero deltas, ramp gives its slope") {
    m.values = Matrix(9, 2);
    for (std::size_t f = 0; f < 9; ++f) {
      m.values(f, 0) = 2.5;
      m.values(f, 1) = 0.7 * static_cast<double>(f);
    }
    const lld::LldMatrix d = lld::append_deltas(m, 2);
    REQUIRE(d.values.cols == 4);
    CHECK(d.names[2] == "a_de");
    CHECK(d.names[3] == "b_de");
    for (std::size_t f = 0; f < 9; ++f) {
      CHECK(d.values(f, 2) == doctest::Approx(0.0).epsilon(1e-15));
      if (f >= 2 && f + 2 < 9) {
        CHECK(d.values(f, 3) == doctest::Approx(0.7).epsilon(1e-12));
      }
    }
  }

  SUBCASE("random five-frame column matches the direct formula") {
    Rng rng(5);
    m.names = {"a"};
    m.values = Matrix(5, 1);
    for (std::size_t f = 0; f < 5; ++f) m.values(f, 0) = rng.uniform(-1, 1);
    const lld::LldMatrix d = lld::append_deltas(m, 2);

    auto at = [&](long f) {
      return m.values(static_cast<std::size_t>(std::clamp(f, 0l, 4l)), 0);
    };
    for (long f = 0; f < 5; ++f) {
      const double expected =
          (1.0 * (at(f + 1) - at(f - 1)) + 2.0 * (at(f + 2) - at(f - 2))) /
          (2.0 * (1 + 4));
      CHECK(d.values(static_cast<std::size_t>(f), 1) ==
            doctest::Approx(expected).epsilon(1e-12));
    }
  }

  SUBCASE("too few frames throws") {
    m.values = Matrix(4, 2);
    CHECK_THROWS_AS(lld::append_deltas(m, 2), Error);
  }
}

TEST_CASE("scaling leaves rate/pitch columns and shifts dB columns") {
  const std::vector<double> base = vowel(0.4);
  const lld::LldMatrix ref = lld::extract_lld(make_buffer(base), lld::LldSet::all(), {});

  for (double alpha : {0.5, 2.0}) {
    std::vector<double> scaled(base);
    for (double& v : scaled) v *= alpha;
    const lld::LldMatrix got =
        lld::extract_lld(make_buffer(std::move(scaled)), lld::LldSet::all(), {});

    const double db_shift = 20.0 * std::log10(alpha);
    for (const char* name : {"f0", "zcr", "voicing_prob", "spectral_centroid"}) {
      const std::size_t c = column_of(ref, name);
      for (std::size_t f = 0; f < ref.values.rows; ++f) {
        CHECK(std::abs(got.values(f, c) - ref.values(f, c)) < 1e-6);
      }
    }
    std::vector<std::string> db_cols = {"loudness"};
    for (int b = 0; b < 8; ++b) db_cols.push_back("log_mel" + std::to_string(b));
    for (const std::string& name : db_cols) {
      const std::size_t c = column_of(ref, name);
      for (std::size_t f = 0; f < ref.values.rows; ++f) {
        CHECK(std::abs(got.values(f, c) - ref.values(f, c) - db_shift) < 1e-6);
      }
    }
  }
}

TEST_CASE("shifting input by one hop shifts rows by one") {
  const std::vector<double> base = vowel(0.5);
  std::vector<double> shifted(160, 0.0);
  shifted.insert(shifted.end(), base.begin(), base.end());

  const lld::LldMatrix a = lld::extract_lld(make_buffer(base), lld::LldSet::all(), {});
  const lld::LldMatrix b =
      lld::extract_lld(make_buffer(std::move(shifted)), lld::LldSet::all(), {});

  // Interior rows (margins cover the pre-emphasis seam, the flux lookback and
  // the +-2 frame jitter context).
  const std::size_t margin = 5;
  for (std::size_t f = margin; f + margin < a.values.rows; ++f) {
    for (std::size_t c = 0; c < a.values.cols; ++c) {
      CHECK(std::abs(b.values(f + 1, c) - a.values(f, c)) < 1e-9);
    }
  }
}

TEST_CASE("no NaN or Inf for tricky finite inputs") {
  for (double fill : {0.0, 1.0, -1.0, 1e-12}) {
    const lld::LldMatrix m = lld::extract_lld(
        make_buffer(std::vector<double>(4800, fill)), lld::LldSet::all(), {});
    CHECK(all_finite(m.values.data));
  }
}
