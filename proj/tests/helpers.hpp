#pragma once

#include <unistd.h>

#include <cmath>
#include <complex>
#include <cstdlib>
#include <filesystem>
#include <string>
#include <vector>

#include "maniapipe/common.hpp"

namespace testutil {

/// Unique scratch directory, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("maniapipe_" + tag + "_" + std::to_string(::getpid()) + "_" +
             std::to_string(counter++));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const {
    return path_ / name;
  }

 private:
  std::filesystem::path path_;
};

/// O(n^2) reference DFT, independent of the library's FFT.
inline std::vector<std::complex<double>> naive_dft(const std::vector<double>& x) {
  const std::size_t n = x.size();
  std::vector<std::complex<double>> out(n);
  for (std::size_t k = 0; k < n; ++k) {
    std::complex<double> acc(0.0, 0.0);
    for (std::size_t t = 0; t < n; ++t) {
      const double ang = -2.0 * M_PI * static_cast<double>(k) *
                         static_cast<double>(t) / static_cast<double>(n);
      acc += x[t] * std::complex<double>(std::cos(ang), std::sin(ang));
    }
    out[k] = acc;
  }
  return out;
}

/// Frequency (Hz) of the dominant DFT bin below Nyquist.
inline double dominant_frequency(const std::vector<double>& x, int sample_rate) {
  const auto spectrum = naive_dft(x);
  std::size_t best = 1;
  for (std::size_t k = 1; k + 1 < spectrum.size() / 2; ++k) {
    if (std::abs(spectrum[k]) > std::abs(spectrum[best])) best = k;
  }
  return static_cast<double>(best) * sample_rate / static_cast<double>(x.size());
}

inline std::vector<double> sine_wave(double freq_hz, int sample_rate, double dur_s,
                                     double amplitude = 1.0) {
  const auto n = static_cast<std::size_t>(dur_s * sample_rate);
  std::vector<double> x(n);
  for (std::size_t i = 0; i < n; ++i) {
    x[i] = amplitude * std::sin(2.0 * M_PI * freq_hz * i / sample_rate);
  }
  return x;
}

inline bool near(double a, double b, double tol) { return std::abs(a - b) <= tol; }

}  // namespace testutil
