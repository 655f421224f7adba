#include "maniapipe/functionals.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace maniapipe::functionals {

namespace {

constexpr double kSigmaFloor = 1e-12;

/// Percentile by linear interpolation between closest ranks of the sorted
/// column.
double percentile(const std::vector<double>& sorted, double p) {
  if (sorted.size() == 1) return sorted[0];
  const double rank = p / 100.0 * (sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(rank));
  const double frac = rank - lo;
  if (lo + 1 >= sorted.size()) return sorted.back();
  return sorted[lo] + (sorted[lo + 1] - sorted[lo]) * frac;
}

struct ColumnStats {
  double mean, stddev, skewness, kurtosis;
  double min, max, range;
  double min_pos_rel, max_pos_rel;
  double q1, median, q3, iqr1_2, iqr2_3, iqr1_3;
  double p1, p99, range1_99;
  double slope, offset, mse;
};

ColumnStats column_stats(const std::vector<double>& x) {
  const std::size_t n = x.size();
  ColumnStats s{};

  double sum = 0.0;
  for (double v : x) sum += v;
  s.mean = sum / n;

  double m2 = 0.0, m3 = 0.0, m4 = 0.0;
  for (double v : x) {
    const double d = v - s.mean;
    m2 += d * d;
    m3 += d * d * d;
    m4 += d * d * d * d;
  }
  m2 /= n;
  m3 /= n;
  m4 /= n;
  s.stddev = std::sqrt(m2);
  if (s.stddev < kSigmaFloor) {
    s.skewness = 0.0;
    s.kurtosis = 0.0;
  } else {
    s.skewness = m3 / (s.stddev * s.stddev * s.stddev);
    s.kurtosis = m4 / (m2 * m2) - 3.0;
  }

  std::size_t imin = 0, imax = 0;
  for (std::size_t i = 1; i < n; ++i) {
    if (x[i] < x[imin]) imin = i;
    if (x[i] > x[imax]) imax = i;
  }
  s.min = x[imin];
  s.max = x[imax];
  s.range = s.max - s.min;
  s.min_pos_rel = static_cast<double>(imin) / n;
  s.max_pos_rel = static_cast<double>(imax) / n;

  std::vector<double> sorted(x);
  std::sort(sorted.begin(), sorted.end());
  s.q1 = percentile(sorted, 25.0);
  s.median = percentile(sorted, 50.0);
  s.q3 = percentile(sorted, 75.0);
  s.iqr1_2 = s.median - s.q1;
  s.iqr2_3 = s.q3 - s.median;
  s.iqr1_3 = s.q3 - s.q1;
  s.p1 = percentile(sorted, 1.0);
  s.p99 = percentile(sorted, 99.0);
  s.range1_99 = s.p99 - s.p1;

  // Least squares of x against frame index t = 0..n-1.
  if (n < 2) {
    s.slope = 0.0;
    s.offset = x[0];
    s.mse = 0.0;
  } else {
    const double t_mean = (n - 1) / 2.0;
    double stt = 0.0, stx = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double dt = i - t_mean;
      stt += dt * dt;
      stx += dt * (x[i] - s.mean);
    }
    s.slope = stx / stt;
    s.offset = s.mean - s.slope * t_mean;
    double sq = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double r = x[i] - (s.offset + s.slope * i);
      sq += r * r;
    }
    s.mse = sq / n;
  }
  return s;
}

double pick(const ColumnStats& s, const std::string& name) {
  if (name == "mean") return s.mean;
  if (name == "stddev") return s.stddev;
  if (name == "skewness") return s.skewness;
  if (name == "kurtosis") return s.kurtosis;
  if (name == "min") return s.min;
  if (name == "max") return s.max;
  if (name == "range") return s.range;
  if (name == "min_pos_rel") return s.min_pos_rel;
  if (name == "max_pos_rel") return s.max_pos_rel;
  if (name == "quartile1") return s.q1;
  if (name == "median") return s.median;
  if (name == "quartile3") return s.q3;
  if (name == "iqr1_2") return s.iqr1_2;
  if (name == "iqr2_3") return s.iqr2_3;
  if (name == "iqr1_3") return s.iqr1_3;
  if (name == "percentile1") return s.p1;
  if (name == "percentile99") return s.p99;
  if (name == "range1_99") return s.range1_99;
  if (name == "linreg_slope") return s.slope;
  if (name == "linreg_offset") return s.offset;
  if (name == "linreg_mse") return s.mse;
  throw Error(ErrorCode::InvalidConfig, "unknown functional '" + name + "'");
}

}  // namespace

const std::vector<std::string>& canonical_functionals() {
  static const std::vector<std::string> names = {
      "mean",        "stddev",      "skewness",  "kurtosis",    "min",
      "max",         "range",       "min_pos_rel", "max_pos_rel", "quartile1",
      "median",      "quartile3",   "iqr1_2",    "iqr2_3",      "iqr1_3",
      "percentile1", "percentile99", "range1_99", "linreg_slope",
      "linreg_offset", "linreg_mse"};
  return names;
}

FunctionalSet FunctionalSet::all() {
  FunctionalSet fs;
  fs.enabled = canonical_functionals();
  return fs;
}

FeatureVector apply_functionals(const lld::LldMatrix& m, const FunctionalSet& fs) {
  if (m.values.rows == 0 || m.values.cols == 0) {
    throw Error(ErrorCode::EmptyMatrix, "descriptor matrix has no frames");
  }
  if (fs.enabled.empty()) {
    throw Error(ErrorCode::EmptySet, "no functionals enabled");
  }
  {
    std::set<std::string> unique(fs.enabled.begin(), fs.enabled.end());
    if (unique.size() != fs.enabled.size()) {
      throw Error(ErrorCode::InvalidConfig, "duplicate functional name");
    }
  }

  FeatureVector fv;
  fv.values.reserve(m.values.cols * fs.enabled.size());
  fv.names.reserve(m.values.cols * fs.enabled.size());
  std::vector<double> column(m.values.rows);
  for (std::size_t c = 0; c < m.values.cols; ++c) {
    for (std::size_t f = 0; f < m.values.rows; ++f) column[f] = m.values(f, c);
    const ColumnStats stats = column_stats(column);
    for (const std::string& fn : fs.enabled) {
      fv.values.push_back(pick(stats, fn));
      fv.names.push_back(m.names[c] + "_" + fn);
    }
  }
  if (!all_finite(fv.values)) {
    throw Error(ErrorCode::NumericFailure, "non-finite functional value");
  }
  return fv;
}

int expected_dimension(int lld_count, bool with_deltas, const FunctionalSet& fs,
                       int extras) {
  if (lld_count < 1) {
    throw Error(ErrorCode::InvalidConfig, "lld_count must be >= 1");
  }
  return lld_count * (with_deltas ? 2 : 1) * static_cast<int>(fs.enabled.size()) +
         extras;
}

}  // namespace maniapipe::functionals
