#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace maniapipe {

enum class ErrorCode {
  MissingFile,
  IoError,
  SchemaViolation,
  DanglingSegment,
  InvalidConfig,
  UnsupportedFormat,
  CorruptHeader,
  InvalidRate,
  OutOfRange,
  InvalidFrequency,
  TooShort,
  EmptyLldSet,
  EmptyMatrix,
  EmptyTable,
  DimensionMismatch,
  SingleClass,
  TargetTooLarge,
  ShapeMismatch,
  BatchTooSmall,
  EmptySet,
  NumericFailure,
};

const char* error_code_name(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + message),
        code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

/// Row-major dense matrix of doubles. Small helper shared by the feature and
/// network code; not a linear-algebra library.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c, double fill = 0.0)
      : rows(r), cols(c), data(r * c, fill) {}

  double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }

  std::span<double> row(std::size_t r) { return {data.data() + r * cols, cols}; }
  std::span<const double> row(std::size_t r) const {
    return {data.data() + r * cols, cols};
  }
};

/// Deterministic RNG used everywhere seeds appear. Wraps mt19937_64 and
/// derives all variates from its raw 64-bit output, so sequences are
/// identical across platforms and standard-library versions.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform in [0, 1).
  double uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, n). n must be > 0.
  std::uint64_t below(std::uint64_t n) { return engine_() % n; }

  /// Standard normal via Box-Muller (deterministic, no cached state).
  double normal() {
    double u1 = uniform();
    double u2 = uniform();
    if (u1 < 1e-300) u1 = 1e-300;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
  }

  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::swap(v[i - 1], v[below(i)]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

/// Stable 64-bit hash for deriving per-item seeds from a master seed.
inline std::uint64_t mix_seed(std::uint64_t seed, const std::string& tag) {
  std::uint64_t h = seed ^ 0x9e3779b97f4a7c15ull;
  for (unsigned char c : tag) {
    h ^= c;
    h *= 0x100000001b3ull;
    h ^= h >> 29;
  }
  return h;
}

inline bool all_finite(std::span<const double> v) {
  for (double x : v) {
    if (!std::isfinite(x)) return false;
  }
  return true;
}

}  // namespace maniapipe
