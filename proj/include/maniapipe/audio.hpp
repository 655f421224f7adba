#pragma once

#include <filesystem>
#include <vector>

#include "maniapipe/common.hpp"
#include "maniapipe/corpus.hpp"

namespace maniapipe::audio {

struct AudioBuffer {
  std::vector<double> samples;  // normalized to [-1, 1]
  int sample_rate = 16000;

  double duration_s() const {
    return static_cast<double>(samples.size()) / sample_rate;
  }
};

struct ToneEvent {
  double start_s = 0.0;
  double end_s = 0.0;
  double mean_power_db = 0.0;
};

/// Decodes RIFF/WAVE, PCM 16-bit or IEEE-float 32-bit, mono or stereo.
/// Stereo is downmixed by channel mean; 16-bit samples are scaled by 1/32768.
AudioBuffer read_wav(const std::filesystem::path& path);

/// Writes mono PCM 16-bit little-endian. Samples are quantized with
/// round(x * 32768) clamped to int16, the exact inverse of read_wav's scaling,
/// so write -> read -> write is byte-stable.
void write_wav_pcm16(const AudioBuffer& buf, const std::filesystem::path& path);

/// Band-limited windowed-sinc resampling. Identity when rates are equal;
/// output length is round(n * target / source).
AudioBuffer resample(const AudioBuffer& buf, int target_rate);

/// Sample-accurate slice [floor(start_s*sr), floor(end_s*sr)).
AudioBuffer cut_segment(const AudioBuffer& buf, const corpus::TaskSegment& seg);

/// Sliding Goertzel band power at tone_hz over 25 ms hops; contiguous
/// super-threshold runs of at least min_dur_s become events, sorted by start.
std::vector<ToneEvent> detect_marker_tones(const AudioBuffer& buf, double tone_hz,
                                           double min_dur_s, double threshold_db);

}  // namespace maniapipe::audio
