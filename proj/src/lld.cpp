#include "maniapipe/lld.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "dsp_internal.hpp"

namespace maniapipe::lld {

namespace {

constexpr double kLogFloor = 1e-10;
constexpr double kVoicingThreshold = 0.35;
constexpr double kF0MinHz = 60.0;
constexpr double kF0MaxHz = 400.0;

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

struct FrameGeometry {
  std::size_t frame_len = 0;
  std::size_t hop = 0;
  std::size_t n_frames = 0;
};

FrameGeometry frame_geometry(std::size_t n_samples, int sample_rate,
                             const FrameConfig& cfg) {
  FrameGeometry g;
  g.frame_len = static_cast<std::size_t>(std::lround(cfg.frame_len_s * sample_rate));
  g.hop = static_cast<std::size_t>(std::lround(cfg.hop_s * sample_rate));
  if (g.frame_len == 0 || g.hop == 0 || g.hop > g.frame_len) {
    throw Error(ErrorCode::InvalidConfig, "frame/hop lengths are inconsistent");
  }
  if (n_samples < g.frame_len) {
    throw Error(ErrorCode::TooShort,
                "buffer of " + std::to_string(n_samples) + " samples is below one frame");
  }
  g.n_frames = 1 + (n_samples - g.frame_len) / g.hop;
  return g;
}

std::vector<double> make_window(Window type, std::size_t n) {
  std::vector<double> w(n, 1.0);
  if (n < 2) return w;
  for (std::size_t i = 0; i < n; ++i) {
    const double phase = 2.0 * M_PI * i / (n - 1);
    w[i] = type == Window::Hamming ? 0.54 - 0.46 * std::cos(phase)
                                   : 0.5 - 0.5 * std::cos(phase);
  }
  return w;
}

/// Triangular mel filterbank over FFT power bins 0..nfft/2, HTK mel scale,
/// spanning 0..sr/2. Returns n_filters rows of bin weights.
std::vector<std::vector<double>> make_mel_bank(int n_filters, std::size_t nfft,
                                               int sample_rate) {
  const std::size_t n_bins = nfft / 2 + 1;
  const double mel_max = hz_to_mel(sample_rate / 2.0);
  std::vector<double> edges(n_filters + 2);
  for (int i = 0; i < n_filters + 2; ++i) {
    edges[i] = mel_to_hz(mel_max * i / (n_filters + 1));
  }
  std::vector<std::vector<double>> bank(n_filters, std::vector<double>(n_bins, 0.0));
  const double hz_per_bin = static_cast<double>(sample_rate) / nfft;
  for (int f = 0; f < n_filters; ++f) {
    const double lo = edges[f], mid = edges[f + 1], hi = edges[f + 2];
    for (std::size_t b = 0; b < n_bins; ++b) {
      const double hz = b * hz_per_bin;
      if (hz > lo && hz < mid) {
        bank[f][b] = (hz - lo) / (mid - lo);
      } else if (hz >= mid && hz < hi) {
        bank[f][b] = (hi - hz) / (hi - mid);
      }
    }
  }
  return bank;
}

/// Orthonormal DCT-II matrix, n_out x n_in.
std::vector<std::vector<double>> make_dct(int n_out, int n_in) {
  std::vector<std::vector<double>> dct(n_out, std::vector<double>(n_in));
  for (int k = 0; k < n_out; ++k) {
    const double scale = k == 0 ? std::sqrt(1.0 / n_in) : std::sqrt(2.0 / n_in);
    for (int n = 0; n < n_in; ++n) {
      dct[k][n] = scale * std::cos(M_PI * k * (2 * n + 1) / (2.0 * n_in));
    }
  }
  return dct;
}

struct PitchEstimate {
  double f0 = 0.0;            // 0 for unvoiced
  double voicing_prob = 0.0;  // normalized autocorrelation peak
  double period = 0.0;        // in samples, 0 for unvoiced
};

/// Autocorrelation pitch over the 60..400 Hz lag range with parabolic peak
/// interpolation. Voiced when the normalized peak exceeds 0.35.
PitchEstimate estimate_pitch(const double* x, std::size_t n, int sample_rate) {
  PitchEstimate est;
  const auto lag_min =
      std::max<std::size_t>(2, static_cast<std::size_t>(sample_rate / kF0MaxHz));
  const auto lag_max = std::min<std::size_t>(
      n - 1, static_cast<std::size_t>(sample_rate / kF0MinHz));
  if (lag_min >= lag_max) return est;

  double r0 = 0.0;
  for (std::size_t i = 0; i < n; ++i) r0 += x[i] * x[i];
  if (r0 < 1e-12) return est;

  std::vector<double> r(lag_max + 2, 0.0);
  for (std::size_t lag = lag_min > 1 ? lag_min - 1 : 1; lag <= lag_max + 1 && lag < n;
       ++lag) {
    double acc = 0.0;
    for (std::size_t i = 0; i + lag < n; ++i) acc += x[i] * x[i + lag];
    r[lag] = acc / r0;
  }

  std::size_t best = lag_min;
  for (std::size_t lag = lag_min; lag <= lag_max; ++lag) {
    if (r[lag] > r[best]) best = lag;
  }
  est.voicing_prob = std::clamp(r[best], 0.0, 1.0);
  if (r[best] <= kVoicingThreshold) return est;

  double lag = static_cast<double>(best);
  if (best > lag_min && best < lag_max) {
    const double denom = r[best - 1] - 2.0 * r[best] + r[best + 1];
    if (std::abs(denom) > 1e-12) {
      const double delta = 0.5 * (r[best - 1] - r[best + 1]) / denom;
      if (std::abs(delta) <= 1.0) lag += delta;
    }
  }
  est.period = lag;
  est.f0 = sample_rate / lag;
  return est;
}

}  // namespace

const std::vector<std::string>& canonical_descriptors() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> v;
    for (int i = 0; i < 15; ++i) v.push_back("mfcc" + std::to_string(i));
    for (int i = 0; i < 8; ++i) v.push_back("log_mel" + std::to_string(i));
    v.insert(v.end(), {"rms_energy", "loudness", "zcr", "spectral_centroid",
                       "spectral_flux", "f0", "f0_envelope", "voicing_prob",
                       "jitter_local", "jitter_ddp", "shimmer_local"});
    return v;
  }();
  return names;
}

LldSet LldSet::all() {
  LldSet set;
  set.enabled = canonical_descriptors();
  return set;
}

Matrix frame_signal(const audio::AudioBuffer& buf, const FrameConfig& cfg) {
  const FrameGeometry g = frame_geometry(buf.samples.size(), buf.sample_rate, cfg);

  // Pre-emphasis over the whole signal, first sample replicated, so frames
  // away from t=0 are shift-covariant.
  std::vector<double> emphasized(buf.samples.size());
  double prev = buf.samples.empty() ? 0.0 : buf.samples[0];
  for (std::size_t i = 0; i < buf.samples.size(); ++i) {
    emphasized[i] = buf.samples[i] - cfg.preemphasis * prev;
    prev = buf.samples[i];
  }

  const std::vector<double> window = make_window(cfg.window, g.frame_len);
  Matrix frames(g.n_frames, g.frame_len);
  for (std::size_t f = 0; f < g.n_frames; ++f) {
    const double* src = emphasized.data() + f * g.hop;
    for (std::size_t i = 0; i < g.frame_len; ++i) {
      frames(f, i) = src[i] * window[i];
    }
  }
  return frames;
}

LldMatrix extract_lld(const audio::AudioBuffer& buf, const LldSet& set,
                      const FrameConfig& cfg) {
  if (set.enabled.empty()) {
    throw Error(ErrorCode::EmptyLldSet, "no descriptors enabled");
  }
  const FrameGeometry g = frame_geometry(buf.samples.size(), buf.sample_rate, cfg);

  std::size_t nfft = set.fft_size > 0 ? static_cast<std::size_t>(set.fft_size)
                                      : dsp::next_power_of_two(g.frame_len);
  if (!dsp::is_power_of_two(nfft) || nfft < g.frame_len) {
    throw Error(ErrorCode::InvalidConfig, "fft_size must be a power of two >= frame");
  }

  const Matrix processed = frame_signal(buf, cfg);
  const std::vector<std::vector<double>> mel_bank =
      make_mel_bank(set.mel_filters, nfft, buf.sample_rate);
  const std::vector<std::vector<double>> mel8_bank = make_mel_bank(8, nfft, buf.sample_rate);
  const std::vector<std::vector<double>> dct = make_dct(15, set.mel_filters);
  const double hz_per_bin = static_cast<double>(buf.sample_rate) / nfft;

  const std::size_t n = g.n_frames;
  std::vector<std::array<double, 15>> mfcc(n);
  std::vector<std::array<double, 8>> log_mel(n);
  std::vector<double> rms_energy(n), loudness(n), zcr(n), centroid(n), flux(n);
  std::vector<double> f0(n), voicing(n), period(n), frame_peak(n);

  std::vector<double> proc_frame(g.frame_len);
  std::vector<double> prev_mags;
  for (std::size_t f = 0; f < n; ++f) {
    const double* raw = buf.samples.data() + f * g.hop;
    for (std::size_t i = 0; i < g.frame_len; ++i) proc_frame[i] = processed(f, i);

    const std::vector<double> power = dsp::power_spectrum(proc_frame, nfft);

    // Spectral shape from the processed frame.
    double total_power = 0.0, weighted = 0.0;
    for (std::size_t b = 0; b < power.size(); ++b) {
      total_power += power[b];
      weighted += power[b] * b * hz_per_bin;
    }
    centroid[f] = total_power > 1e-20 ? weighted / total_power : 0.0;

    std::vector<double> mags(power.size());
    for (std::size_t b = 0; b < power.size(); ++b) mags[b] = std::sqrt(power[b]);
    if (f == 0) {
      flux[f] = 0.0;
    } else {
      double acc = 0.0;
      for (std::size_t b = 0; b < mags.size(); ++b) {
        const double d = mags[b] - prev_mags[b];
        acc += d * d;
      }
      flux[f] = std::sqrt(acc);
    }
    prev_mags = std::move(mags);

    std::vector<double> mel_energy(set.mel_filters, 0.0);
    for (int m = 0; m < set.mel_filters; ++m) {
      double acc = 0.0;
      const std::vector<double>& row = mel_bank[m];
      for (std::size_t b = 0; b < power.size(); ++b) acc += row[b] * power[b];
      mel_energy[m] = std::log(std::max(acc, kLogFloor));
    }
    for (int k = 0; k < 15; ++k) {
      double acc = 0.0;
      for (int m = 0; m < set.mel_filters; ++m) acc += dct[k][m] * mel_energy[m];
      mfcc[f][k] = acc;
    }
    for (int m = 0; m < 8; ++m) {
      double acc = 0.0;
      const std::vector<double>& row = mel8_bank[m];
      for (std::size_t b = 0; b < power.size(); ++b) acc += row[b] * power[b];
      log_mel[f][m] = 10.0 * std::log10(std::max(acc, kLogFloor));
    }

    // Energy, rate and pitch from the raw frame.
    double sq = 0.0, peak = 0.0;
    std::size_t crossings = 0;
    for (std::size_t i = 0; i < g.frame_len; ++i) {
      sq += raw[i] * raw[i];
      peak = std::max(peak, std::abs(raw[i]));
      if (i > 0 && ((raw[i - 1] < 0.0 && raw[i] >= 0.0) ||
                    (raw[i - 1] >= 0.0 && raw[i] < 0.0))) {
        ++crossings;
      }
    }
    const double rms = std::sqrt(sq / g.frame_len);
    rms_energy[f] = std::max(rms, kLogFloor);
    loudness[f] = 20.0 * std::log10(std::max(rms, kLogFloor));
    zcr[f] = static_cast<double>(crossings) / g.frame_len;
    frame_peak[f] = peak;

    const PitchEstimate pitch = estimate_pitch(raw, g.frame_len, buf.sample_rate);
    f0[f] = pitch.f0;
    voicing[f] = pitch.voicing_prob;
    period[f] = pitch.period;
  }

  // F0 envelope: last voiced value held through unvoiced stretches.
  std::vector<double> f0_env(n, 0.0);
  double held = 0.0;
  for (std::size_t f = 0; f < n; ++f) {
    if (f0[f] > 0.0) held = f0[f];
    f0_env[f] = held;
  }

  // Jitter/shimmer over a +-2 frame voiced context; 0 when fewer than three
  // voiced periods are in scope.
  std::vector<double> jitter_local(n, 0.0), jitter_ddp(n, 0.0), shimmer_local(n, 0.0);
  for (std::size_t f = 0; f < n; ++f) {
    const std::size_t lo = f >= 2 ? f - 2 : 0;
    const std::size_t hi = std::min(n - 1, f + 2);
    std::vector<double> periods, amps;
    for (std::size_t i = lo; i <= hi; ++i) {
      if (period[i] > 0.0) {
        periods.push_back(period[i]);
        amps.push_back(frame_peak[i]);
      }
    }
    if (periods.size() < 3) continue;
    const double mean_period =
        std::accumulate(periods.begin(), periods.end(), 0.0) / periods.size();
    const double mean_amp =
        std::accumulate(amps.begin(), amps.end(), 0.0) / amps.size();
    double dsum = 0.0, ddsum = 0.0, asum = 0.0;
    for (std::size_t i = 1; i < periods.size(); ++i) {
      dsum += std::abs(periods[i] - periods[i - 1]);
      asum += std::abs(amps[i] - amps[i - 1]);
    }
    for (std::size_t i = 2; i < periods.size(); ++i) {
      ddsum += std::abs((periods[i] - periods[i - 1]) - (periods[i - 1] - periods[i - 2]));
    }
    jitter_local[f] = dsum / (periods.size() - 1) / std::max(mean_period, 1e-12);
    if (periods.size() >= 3) {
      jitter_ddp[f] = ddsum / (periods.size() - 2) / std::max(mean_period, 1e-12);
    }
    if (mean_amp > 1e-12) {
      shimmer_local[f] = asum / (amps.size() - 1) / mean_amp;
    }
  }

  LldMatrix out;
  out.hop_s = cfg.hop_s;
  out.names = set.enabled;
  out.values = Matrix(n, set.enabled.size());
  for (std::size_t f = 0; f < n; ++f) {
    std::size_t col = 0;
    for (const std::string& name : set.enabled) {
      double v = 0.0;
      if (name.rfind("mfcc", 0) == 0) {
        v = mfcc[f][std::stoi(name.substr(4))];
      } else if (name.rfind("log_mel", 0) == 0) {
        v = log_mel[f][std::stoi(name.substr(7))];
      } else if (name == "rms_energy") {
        v = rms_energy[f];
      } else if (name == "loudness") {
        v = loudness[f];
      } else if (name == "zcr") {
        v = zcr[f];
      } else if (name == "spectral_centroid") {
        v = centroid[f];
      } else if (name == "spectral_flux") {
        v = flux[f];
      } else if (name == "f0") {
        v = f0[f];
      } else if (name == "f0_envelope") {
        v = f0_env[f];
      } else if (name == "voicing_prob") {
        v = voicing[f];
      } else if (name == "jitter_local") {
        v = jitter_local[f];
      } else if (name == "jitter_ddp") {
        v = jitter_ddp[f];
      } else if (name == "shimmer_local") {
        v = shimmer_local[f];
      } else {
        throw Error(ErrorCode::InvalidConfig, "unknown descriptor '" + name + "'");
      }
      out.values(f, col++) = v;
    }
  }
  if (!all_finite(out.values.data)) {
    throw Error(ErrorCode::NumericFailure, "non-finite descriptor value");
  }
  return out;
}

LldMatrix append_deltas(const LldMatrix& m, int window) {
  const std::size_t n = m.values.rows;
  const std::size_t cols = m.values.cols;
  if (window < 1 || n < static_cast<std::size_t>(2 * window + 1)) {
    throw Error(ErrorCode::TooShort,
                "need at least " + std::to_string(2 * window + 1) + " frames");
  }
  double denom = 0.0;
  for (int w = 1; w <= window; ++w) denom += 2.0 * w * w;

  LldMatrix out;
  out.hop_s = m.hop_s;
  out.names = m.names;
  for (const std::string& name : m.names) out.names.push_back(name + "_de");
  out.values = Matrix(n, 2 * cols);
  for (std::size_t f = 0; f < n; ++f) {
    for (std::size_t c = 0; c < cols; ++c) out.values(f, c) = m.values(f, c);
    for (std::size_t c = 0; c < cols; ++c) {
      double acc = 0.0;
      for (int w = 1; w <= window; ++w) {
        const std::size_t ahead = std::min(n - 1, f + w);
        const std::size_t behind = f >= static_cast<std::size_t>(w) ? f - w : 0;
        acc += w * (m.values(ahead, c) - m.values(behind, c));
      }
      out.values(f, cols + c) = acc / denom;
    }
  }
  return out;
}

void save_lld_csv(const LldMatrix& m, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path);
  for (std::size_t c = 0; c < m.names.size(); ++c) {
    out << (c ? "," : "") << m.names[c];
  }
  out << "\n";
  char buf[64];
  for (std::size_t f = 0; f < m.values.rows; ++f) {
    for (std::size_t c = 0; c < m.values.cols; ++c) {
      std::snprintf(buf, sizeof(buf), "%.17g", m.values(f, c));
      out << (c ? "," : "") << buf;
    }
    out << "\n";
  }
}

}  // namespace maniapipe::lld
