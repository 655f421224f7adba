#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>

#include "helpers.hpp"
#include "maniapipe/functionals.hpp"

using namespace maniapipe;

namespace {

lld::LldMatrix single_column(const std::vector<double>& values,
                             const std::string& name = "x") {
  lld::LldMatrix m;
  m.names = {name};
  m.values = Matrix(values.size(), 1);
  for (std::size_t f = 0; f < values.size(); ++f) m.values(f, 0) = values[f];
  return m;
}

double value_of(const functionals::FeatureVector& fv, const std::string& name) {
  for (std::size_t i = 0; i < fv.names.size(); ++i) {
    if (fv.names[i] == name) return fv.values[i];
  }
  REQUIRE(false);
  return 0.0;
}

/// Independent evaluation of every functional, straight from its definition.
std::map<std::string, double> oracle(const std::vector<double>& x) {
  const std::size_t n = x.size();
  std::map<std::string, double> out;

  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= static_cast<double>(n);
  double m2 = 0, m3 = 0, m4 = 0;
  for (double v : x) {
    m2 += std::pow(v - mean, 2);
    m3 += std::pow(v - mean, 3);
    m4 += std::pow(v - mean, 4);
  }
  m2 /= n;
  m3 /= n;
  m4 /= n;
  const double sd = std::sqrt(m2);
  out["mean"] = mean;
  out["stddev"] = sd;
  out["skewness"] = sd < 1e-12 ? 0.0 : m3 / std::pow(sd, 3);
  out["kurtosis"] = sd < 1e-12 ? 0.0 : m4 / (m2 * m2) - 3.0;

  std::size_t imin = 0, imax = 0;
  for (std::size_t i = 1; i < n; ++i) {
    if (x[i] < x[imin]) imin = i;
    if (x[i] > x[imax]) imax = i;
  }
  out["min"] = x[imin];
  out["max"] = x[imax];
  out["range"] = x[imax] - x[imin];
  out["min_pos_rel"] = static_cast<double>(imin) / n;
  out["max_pos_rel"] = static_cast<double>(imax) / n;

  std::vector<double> sorted(x);
  std::sort(sorted.begin(), sorted.end());
  auto pct = [&](double p) {
    if (n == 1) return sorted[0];
    const double rank = p / 100.0 * static_cast<double>(n - 1);
    const auto lo = static_cast<std::size_t>(std::floor(rank));
    if (lo + 1 >= n) return sorted.back();
    return sorted[lo] + (sorted[lo + 1] - sorted[lo]) * (rank - lo);
  };
  out["quartile1"] = pct(25);
  out["median"] = pct(50);
  out["quartile3"] = pct(75);
  out["iqr1_2"] = out["median"] - out["quartile1"];
  out["iqr2_3"] = out["quartile3"] - out["median"];
  out["iqr1_3"] = out["quartile3"] - out["quartile1"];
  out["percentile1"] = pct(1);
  out["percentile99"] = pct(99);
  out["range1_99"] = out["percentile99"] - out["percentile1"];

  if (n < 2) {
    out["linreg_slope"] = 0.0;
    out["linreg_offset"] = x[0];
    out["linreg_mse"] = 0.0;
  } else {
    const double tm = (n - 1) / 2.0;
    double stt = 0, stx = 0;
    for (std::size_t i = 0; i < n; ++i) {
      stt += (i - tm) * (i - tm);
      stx += (i - tm) * (x[i] - mean);
    }
    const double slope = stx / stt;
    const double offset = mean - slope * tm;
    double sq = 0;
    for (std::size_t i = 0; i < n; ++i) {
      sq += std::pow(x[i] - offset - slope * i, 2);
    }
    out["linreg_slope"] = slope;
    out["linreg_offset"] = offset;
    out["linreg_mse"] = sq / n;
  }
  return out;
}

}  // namespace

TEST_CASE("constant column degenerates cleanly") {
  const functionals::FeatureVector fv =
      functionals::apply_functionals(single_column({4.2, 4.2, 4.2, 4.2}),
                                     functionals::FunctionalSet::all());
  CHECK(value_of(fv, "x_mean") == doctest::Approx(4.2));
  CHECK(value_of(fv, "x_stddev") == 0.0);
  CHECK(value_of(fv, "x_skewness") == 0.0);
  CHECK(value_of(fv, "x_kurtosis") == 0.0);
  CHECK(value_of(fv, "x_range") == 0.0);
  CHECK(value_of(fv, "x_linreg_slope") == 0.0);
}

TEST_CASE("exact line 1..5") {
  const functionals::FeatureVector fv = functionals::apply_functionals(
      single_column({1, 2, 3, 4, 5}), functionals::FunctionalSet::all());
  CHECK(value_of(fv, "x_mean") == doctest::Approx(3.0));
  CHECK(value_of(fv, "x_linreg_slope") == doctest::Approx(1.0));
  CHECK(value_of(fv, "x_linreg_mse") == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(value_of(fv, "x_median") == doctest::Approx(3.0));
}

TEST_CASE("skewness and kurtosis of 1,1,1,9 match the moment oracle") {
  const std::vector<double> x = {1, 1, 1, 9};
  const auto expect = oracle(x);
  // Sanity on the oracle itself before trusting it.
  CHECK(expect.at("skewness") == doctest::Approx(1.1547005383792517).epsilon(1e-12));
  CHECK(expect.at("kurtosis") == doctest::Approx(-2.0 / 3.0).epsilon(1e-12));

  const functionals::FeatureVector fv = functionals::apply_functionals(
      single_column(x), functionals::FunctionalSet::all());
  CHECK(value_of(fv, "x_skewness") ==
        doctest::Approx(expect.at("skewness")).epsilon(1e-12));
  CHECK(value_of(fv, "x_kurtosis") ==
        doctest::Approx(expect.at("kurtosis")).epsilon(1e-12));
}

TEST_CASE("dimension accounting") {
  functionals::FunctionalSet all = functionals::FunctionalSet::all();
  REQUIRE(all.enabled.size() == 21);

  CHECK(functionals::expected_dimension(34, true, all, 154) == 1582);

  functionals::FunctionalSet just_mean;
  just_mean.enabled = {"mean"};
  CHECK(functionals::expected_dimension(1, false, just_mean, 0) == 1);

  // The default descriptor inventory, with deltas, against an actual run.
  const lld::LldSet set = lld::LldSet::all();
  audio::AudioBuffer buf;
  buf.sample_rate = 16000;
  buf.samples = testutil::sine_wave(180.0, 16000, 0.4, 0.4);
  lld::LldMatrix m = lld::extract_lld(buf, set, {});
  m = lld::append_deltas(m, 2);
  const functionals::FeatureVector fv = functionals::apply_functionals(m, all);
  CHECK(static_cast<int>(fv.values.size()) ==
        functionals::expected_dimension(static_cast<int>(set.enabled.size()), true,
                                        all, 0));
  CHECK(fv.values.size() == 2 * set.enabled.size() * 21);
}

TEST_CASE("every functional matches the brute-force oracle on random matrices") {
  Rng rng(2024);
  const functionals::FunctionalSet all = functionals::FunctionalSet::all();
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t frames = 1 + rng.below(40);
    std::vector<double> x(frames);
    for (double& v : x) v = rng.uniform(-5.0, 5.0);
    if (trial % 7 == 0) x.assign(frames, 1.25);  // degenerate columns too

    const functionals::FeatureVector fv =
        functionals::apply_functionals(single_column(x), all);
    const auto expect = oracle(x);
    for (const std::string& fn : all.enabled) {
      CHECK(std::abs(value_of(fv, "x_" + fn) - expect.at(fn)) <= 1e-9);
    }
  }
}

TEST_CASE("frame permutation only moves positional and regression functionals") {
  Rng rng(8);
  std::vector<double> x(31);
  for (double& v : x) v = rng.uniform(0.0, 1.0);
  std::vector<double> shuffled(x);
  rng.shuffle(shuffled);

  const functionals::FunctionalSet all = functionals::FunctionalSet::all();
  const functionals::FeatureVector a =
      functionals::apply_functionals(single_column(x), all);
  const functionals::FeatureVector b =
      functionals::apply_functionals(single_column(shuffled), all);

  const std::vector<std::string> order_free = {
      "mean",      "stddev",      "skewness",   "kurtosis",    "min",
      "max",       "range",       "quartile1",  "median",      "quartile3",
      "iqr1_2",    "iqr2_3",      "iqr1_3",     "percentile1", "percentile99",
      "range1_99"};
  for (const std::string& fn : order_free) {
    CHECK(value_of(a, "x_" + fn) == doctest::Approx(value_of(b, "x_" + fn)).epsilon(1e-12));
  }
}

TEST_CASE("quantile ordering holds on random input") {
  Rng rng(99);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> x(3 + rng.below(60));
    for (double& v : x) v = rng.normal(0.0, 3.0);
    const functionals::FeatureVector fv = functionals::apply_functionals(
        single_column(x), functionals::FunctionalSet::all());
    CHECK(value_of(fv, "x_min") <= value_of(fv, "x_percentile1"));
    CHECK(value_of(fv, "x_percentile1") <= value_of(fv, "x_percentile99"));
    CHECK(value_of(fv, "x_percentile99") <= value_of(fv, "x_max"));
    CHECK(value_of(fv, "x_quartile1") <= value_of(fv, "x_median"));
    CHECK(value_of(fv, "x_median") <= value_of(fv, "x_quartile3"));
    CHECK(all_finite(fv.values));
  }
}

TEST_CASE("empty matrix and bad sets are rejected") {
  lld::LldMatrix empty;
  try {
    functionals::apply_functionals(empty, functionals::FunctionalSet::all());
    FAIL("expected EmptyMatrix");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::EmptyMatrix);
  }

  functionals::FunctionalSet none;
  try {
    functionals::apply_functionals(single_column({1.0}), none);
    FAIL("expected EmptySet");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::EmptySet);
  }

  functionals::FunctionalSet dup;
  dup.enabled = {"mean", "mean"};
  CHECK_THROWS_AS(functionals::apply_functionals(single_column({1.0}), dup), Error);
}
