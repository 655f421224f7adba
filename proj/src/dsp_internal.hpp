#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <vector>

// Internal DSP helpers shared by the audio and lld translation units.

namespace maniapipe::dsp {

inline bool is_power_of_two(std::size_t n) { return n > 0 && (n & (n - 1)) == 0; }

inline std::size_t next_power_of_two(std::size_t n) {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

/// In-place iterative radix-2 FFT. size must be a power of two.
inline void fft(std::vector<std::complex<double>>& a) {
  const std::size_t n = a.size();
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const double ang = -2.0 * M_PI / static_cast<double>(len);
    const std::complex<double> wlen(std::cos(ang), std::sin(ang));
    for (std::size_t i = 0; i < n; i += len) {
      std::complex<double> w(1.0, 0.0);
      for (std::size_t k = 0; k < len / 2; ++k) {
        std::complex<double> u = a[i + k];
        std::complex<double> v = a[i + k + len / 2] * w;
        a[i + k] = u + v;
        a[i + k + len / 2] = u - v;
        w *= wlen;
      }
    }
  }
}

/// Power spectrum bins 0..nfft/2 of a real frame zero-padded to nfft.
inline std::vector<double> power_spectrum(const std::vector<double>& frame,
                                          std::size_t nfft) {
  std::vector<std::complex<double>> buf(nfft, {0.0, 0.0});
  const std::size_t n = frame.size() < nfft ? frame.size() : nfft;
  for (std::size_t i = 0; i < n; ++i) buf[i] = {frame[i], 0.0};
  fft(buf);
  std::vector<double> power(nfft / 2 + 1);
  for (std::size_t k = 0; k < power.size(); ++k) power[k] = std::norm(buf[k]);
  return power;
}

/// Goertzel power |X(f)|^2 of x[0..n) at normalized frequency f/sr.
inline double goertzel_power(const double* x, std::size_t n, double freq_hz,
                             double sample_rate) {
  const double w = 2.0 * M_PI * freq_hz / sample_rate;
  const double coeff = 2.0 * std::cos(w);
  double s0 = 0.0, s1 = 0.0, s2 = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    s0 = x[i] + coeff * s1 - s2;
    s2 = s1;
    s1 = s0;
  }
  return s1 * s1 + s2 * s2 - coeff * s1 * s2;
}

}  // namespace maniapipe::dsp
