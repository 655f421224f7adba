#include "maniapipe/audio.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>

#include "dsp_internal.hpp"

namespace maniapipe::audio {

namespace {

constexpr double kDetectHopS = 0.025;
constexpr double kDbFloor = 1e-10;

std::uint32_t read_u32le(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) |
         (static_cast<std::uint32_t>(p[3]) << 24);
}

std::uint16_t read_u16le(const unsigned char* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

}  // namespace

AudioBuffer read_wav(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) {
    throw Error(ErrorCode::MissingFile, "no such file: " + path.string());
  }
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(ErrorCode::IoError, "cannot open " + path.string());
  }
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
  if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
      std::memcmp(bytes.data() + 8, "WAVE", 4) != 0) {
    throw Error(ErrorCode::CorruptHeader, "not a RIFF/WAVE file: " + path.string());
  }

  bool have_fmt = false;
  std::uint16_t format = 0, channels = 0, bits = 0;
  std::uint32_t sample_rate = 0;
  const unsigned char* data = nullptr;
  std::size_t data_size = 0;

  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const char* tag = reinterpret_cast<const char*>(bytes.data() + pos);
    std::uint32_t size = read_u32le(bytes.data() + pos + 4);
    pos += 8;
    if (pos + size > bytes.size()) {
      throw Error(ErrorCode::CorruptHeader,
                  "chunk '" + std::string(tag, 4) + "' overruns file: " + path.string());
    }
    if (std::memcmp(tag, "fmt ", 4) == 0) {
      if (size < 16) {
        throw Error(ErrorCode::CorruptHeader, "fmt chunk too small: " + path.string());
      }
      format = read_u16le(bytes.data() + pos);
      channels = read_u16le(bytes.data() + pos + 2);
      sample_rate = read_u32le(bytes.data() + pos + 4);
      bits = read_u16le(bytes.data() + pos + 14);
      have_fmt = true;
    } else if (std::memcmp(tag, "data", 4) == 0) {
      data = bytes.data() + pos;
      data_size = size;
    }
    pos += size + (size & 1);  // chunks are word-aligned
  }

  if (!have_fmt || data == nullptr) {
    throw Error(ErrorCode::CorruptHeader, "missing fmt/data chunk: " + path.string());
  }
  if (channels != 1 && channels != 2) {
    throw Error(ErrorCode::UnsupportedFormat,
                std::to_string(channels) + " channels (want mono or stereo): " +
                    path.string());
  }
  const bool pcm16 = format == 1 && bits == 16;
  const bool float32 = format == 3 && bits == 32;
  if (!pcm16 && !float32) {
    throw Error(ErrorCode::UnsupportedFormat,
                "format code " + std::to_string(format) + " at " +
                    std::to_string(bits) + " bits (want PCM16 or float32): " +
                    path.string());
  }

  const std::size_t bytes_per_sample = bits / 8;
  const std::size_t frame_bytes = bytes_per_sample * channels;
  const std::size_t n_frames = data_size / frame_bytes;

  AudioBuffer out;
  out.sample_rate = static_cast<int>(sample_rate);
  out.samples.resize(n_frames);
  for (std::size_t i = 0; i < n_frames; ++i) {
    double acc = 0.0;
    for (std::uint16_t c = 0; c < channels; ++c) {
      const unsigned char* p = data + i * frame_bytes + c * bytes_per_sample;
      if (pcm16) {
        std::int16_t raw = static_cast<std::int16_t>(read_u16le(p));
        acc += static_cast<double>(raw) / 32768.0;
      } else {
        float f;
        std::memcpy(&f, p, 4);
        acc += static_cast<double>(f);
      }
    }
    out.samples[i] = acc / channels;
  }
  return out;
}

void write_wav_pcm16(const AudioBuffer& buf, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw Error(ErrorCode::IoError, "cannot write " + path.string());
  }
  const std::uint32_t n = static_cast<std::uint32_t>(buf.samples.size());
  const std::uint32_t data_size = n * 2;
  const std::uint32_t sr = static_cast<std::uint32_t>(buf.sample_rate);

  auto put_u32 = [&](std::uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v & 0xff),
                          static_cast<unsigned char>((v >> 8) & 0xff),
                          static_cast<unsigned char>((v >> 16) & 0xff),
                          static_cast<unsigned char>((v >> 24) & 0xff)};
    out.write(reinterpret_cast<char*>(b), 4);
  };
  auto put_u16 = [&](std::uint16_t v) {
    unsigned char b[2] = {static_cast<unsigned char>(v & 0xff),
                          static_cast<unsigned char>((v >> 8) & 0xff)};
    out.write(reinterpret_cast<char*>(b), 2);
  };

  out.write("RIFF", 4);
  put_u32(36 + data_size);
  out.write("WAVE", 4);
  out.write("fmt ", 4);
  put_u32(16);
  put_u16(1);  // PCM
  put_u16(1);  // mono
  put_u32(sr);
  put_u32(sr * 2);
  put_u16(2);
  put_u16(16);
  out.write("data", 4);
  put_u32(data_size);
  for (double x : buf.samples) {
    double scaled = std::round(x * 32768.0);
    scaled = std::clamp(scaled, -32768.0, 32767.0);
    put_u16(static_cast<std::uint16_t>(static_cast<std::int16_t>(scaled)));
  }
  if (!out) {
    throw Error(ErrorCode::IoError, "short write: " + path.string());
  }
}

AudioBuffer resample(const AudioBuffer& buf, int target_rate) {
  if (target_rate <= 0) {
    throw Error(ErrorCode::InvalidRate, "target rate " + std::to_string(target_rate));
  }
  if (target_rate == buf.sample_rate) return buf;

  const double ratio =
      static_cast<double>(target_rate) / static_cast<double>(buf.sample_rate);
  const std::size_t n = buf.samples.size();
  const std::size_t out_len =
      static_cast<std::size_t>(std::llround(static_cast<double>(n) * ratio));

  AudioBuffer out;
  out.sample_rate = target_rate;
  out.samples.resize(out_len, 0.0);
  if (n == 0) return out;

  const double cutoff = std::min(1.0, ratio);  // relative to source Nyquist
  constexpr int kHalfTaps = 16;
  const double half_width = kHalfTaps / cutoff;  // in source samples

  for (std::size_t i = 0; i < out_len; ++i) {
    const double center = static_cast<double>(i) / ratio;
    const auto lo = static_cast<long long>(std::ceil(center - half_width));
    const auto hi = static_cast<long long>(std::floor(center + half_width));
    double acc = 0.0;
    for (long long j = std::max(0ll, lo);
         j <= std::min(static_cast<long long>(n) - 1, hi); ++j) {
      const double u = static_cast<double>(j) - center;
      double sinc;
      if (std::abs(u) < 1e-12) {
        sinc = 1.0;
      } else {
        sinc = std::sin(M_PI * cutoff * u) / (M_PI * cutoff * u);
      }
      const double win = 0.5 + 0.5 * std::cos(M_PI * u / half_width);
      acc += buf.samples[static_cast<std::size_t>(j)] * cutoff * sinc * win;
    }
    out.samples[i] = acc;
  }
  return out;
}

AudioBuffer cut_segment(const AudioBuffer& buf, const corpus::TaskSegment& seg) {
  if (seg.start_s < 0.0 || seg.end_s <= seg.start_s) {
    throw Error(ErrorCode::OutOfRange, "bad segment span [" +
                                           std::to_string(seg.start_s) + ", " +
                                           std::to_string(seg.end_s) + ")");
  }
  const auto begin = static_cast<std::size_t>(std::floor(seg.start_s * buf.sample_rate));
  const auto end = static_cast<std::size_t>(std::floor(seg.end_s * buf.sample_rate));
  if (end > buf.samples.size()) {
    throw Error(ErrorCode::OutOfRange,
                "segment of " + seg.recording_id + " ends at " +
                    std::to_string(seg.end_s) + "s but buffer holds " +
                    std::to_string(buf.duration_s()) + "s");
  }
  AudioBuffer out;
  out.sample_rate = buf.sample_rate;
  out.samples.assign(buf.samples.begin() + begin, buf.samples.begin() + end);
  return out;
}

std::vector<ToneEvent> detect_marker_tones(const AudioBuffer& buf, double tone_hz,
                                           double min_dur_s, double threshold_db) {
  if (tone_hz <= 0.0 || tone_hz >= buf.sample_rate / 2.0) {
    throw Error(ErrorCode::InvalidFrequency,
                std::to_string(tone_hz) + " Hz not below Nyquist of " +
                    std::to_string(buf.sample_rate) + " Hz audio");
  }

  const auto hop = static_cast<std::size_t>(std::lround(kDetectHopS * buf.sample_rate));
  if (hop == 0 || buf.samples.size() < hop) return {};
  const std::size_t n_frames = buf.samples.size() / hop;

  // Hann-windowed Goertzel per frame; amplitude estimate 2|X| / sum(window).
  std::vector<double> window(hop);
  double win_sum = 0.0;
  for (std::size_t i = 0; i < hop; ++i) {
    window[i] = 0.5 - 0.5 * std::cos(2.0 * M_PI * i / (hop - 1));
    win_sum += window[i];
  }

  std::vector<double> frame(hop);
  std::vector<double> frame_db(n_frames);
  for (std::size_t f = 0; f < n_frames; ++f) {
    const double* src = buf.samples.data() + f * hop;
    for (std::size_t i = 0; i < hop; ++i) frame[i] = src[i] * window[i];
    const double power = dsp::goertzel_power(frame.data(), hop, tone_hz, buf.sample_rate);
    const double amp = 2.0 * std::sqrt(std::max(0.0, power)) / win_sum;
    frame_db[f] = 20.0 * std::log10(std::max(amp, kDbFloor));
  }

  std::vector<ToneEvent> events;
  std::size_t run_start = 0;
  bool in_run = false;
  double db_acc = 0.0;
  auto flush = [&](std::size_t run_end) {
    const double dur = static_cast<double>(run_end - run_start) * kDetectHopS;
    if (dur >= min_dur_s) {
      ToneEvent ev;
      ev.start_s = static_cast<double>(run_start) * kDetectHopS;
      ev.end_s = static_cast<double>(run_end) * kDetectHopS;
      ev.mean_power_db = db_acc / static_cast<double>(run_end - run_start);
      events.push_back(ev);
    }
  };
  for (std::size_t f = 0; f < n_frames; ++f) {
    if (frame_db[f] > threshold_db) {
      if (!in_run) {
        in_run = true;
        run_start = f;
        db_acc = 0.0;
      }
      db_acc += frame_db[f];
    } else if (in_run) {
      flush(f);
      in_run = false;
    }
  }
  if (in_run) flush(n_frames);
  return events;
}

}  // namespace maniapipe::audio
