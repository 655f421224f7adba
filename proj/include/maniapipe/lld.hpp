#pragma once

#include <string>
#include <vector>

#include "maniapipe/audio.hpp"
#include "maniapipe/common.hpp"

namespace maniapipe::lld {

enum class Window { Hamming, Hann };

struct FrameConfig {
  double frame_len_s = 0.025;
  double hop_s = 0.010;
  Window window = Window::Hamming;
  double preemphasis = 0.97;
};

/// Frame trajectories of low-level descriptors: one row per frame, one column
/// per enabled descriptor.
struct LldMatrix {
  Matrix values;
  std::vector<std::string> names;
  double hop_s = 0.010;
};

/// Descriptor inventory. The canonical order below is the column order of
/// every LldMatrix; an LldSet enables a subset of it.
///   mfcc0..mfcc14, log_mel0..log_mel7, rms_energy, loudness, zcr,
///   spectral_centroid, spectral_flux, f0, f0_envelope, voicing_prob,
///   jitter_local, jitter_ddp, shimmer_local
const std::vector<std::string>& canonical_descriptors();

struct LldSet {
  std::vector<std::string> enabled;  // kept in canonical order
  int mel_filters = 26;
  int fft_size = 0;  // 0 = next power of two >= frame length

  static LldSet all();
};

/// Pre-emphasized, windowed analysis frames; one row per frame.
/// Frame count is 1 + floor((n - frame_len) / hop).
Matrix frame_signal(const audio::AudioBuffer& buf, const FrameConfig& cfg);

LldMatrix extract_lld(const audio::AudioBuffer& buf, const LldSet& set,
                      const FrameConfig& cfg);

/// Appends delta-regression columns (window W, edges replicated); names get a
/// "_de" suffix. Output therefore has twice the columns of the input.
LldMatrix append_deltas(const LldMatrix& m, int window);

/// Debug dump: header of descriptor names, one CSV row per frame.
void save_lld_csv(const LldMatrix& m, const std::string& path);

}  // namespace maniapipe::lld
