#include "maniapipe/metrics.hpp"

#include <iostream>

namespace maniapipe::eval {

ConfusionMatrix ConfusionMatrix::from_pairs(
    const std::vector<corpus::Label>& truths,
    const std::vector<corpus::Label>& predictions) {
  if (truths.size() != predictions.size()) {
    throw Error(ErrorCode::ShapeMismatch,
                std::to_string(truths.size()) + " truths vs " +
                    std::to_string(predictions.size()) + " predictions");
  }
  ConfusionMatrix cm;
  for (std::size_t i = 0; i < truths.size(); ++i) cm.add(truths[i], predictions[i]);
  return cm;
}

UarResult uar_detail(const ConfusionMatrix& cm) {
  UarResult result;
  double acc = 0.0;
  for (int i = 0; i < corpus::kNumLabels; ++i) {
    const long support = cm.row_sum(i);
    if (support == 0) continue;
    result.included_classes.push_back(i);
    acc += static_cast<double>(cm.counts[i][i]) / static_cast<double>(support);
  }
  if (result.included_classes.empty()) {
    throw Error(ErrorCode::EmptyMatrix, "no class has support");
  }
  if (result.included_classes.size() < corpus::kNumLabels) {
    std::cerr << "warning: UAR averaged over " << result.included_classes.size()
              << " of " << corpus::kNumLabels << " classes (others have no support)\n";
  }
  result.value = acc / static_cast<double>(result.included_classes.size());
  return result;
}

double uar(const ConfusionMatrix& cm) { return uar_detail(cm).value; }

}  // namespace maniapipe::eval
