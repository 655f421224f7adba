#pragma once

#include <array>
#include <vector>

#include "maniapipe/common.hpp"
#include "maniapipe/corpus.hpp"

namespace maniapipe::eval {

/// 3x3 counts, rows = true class, cols = predicted, in
/// (Remission, Hypomania, Mania) order.
struct ConfusionMatrix {
  std::array<std::array<long, corpus::kNumLabels>, corpus::kNumLabels> counts{};

  void add(corpus::Label truth, corpus::Label predicted) {
    counts[static_cast<int>(truth)][static_cast<int>(predicted)]++;
  }

  long row_sum(int row) const {
    long s = 0;
    for (long v : counts[row]) s += v;
    return s;
  }

  static ConfusionMatrix from_pairs(const std::vector<corpus::Label>& truths,
                                    const std::vector<corpus::Label>& predictions);
};

struct UarResult {
  double value = 0.0;
  std::vector<int> included_classes;  // classes with support > 0
};

/// Unweighted average recall: mean over classes with support of
/// counts[i][i] / row_sum[i]. Zero-support classes are excluded (and
/// reported); all-zero support raises EmptyMatrix.
UarResult uar_detail(const ConfusionMatrix& cm);
double uar(const ConfusionMatrix& cm);

}  // namespace maniapipe::eval
