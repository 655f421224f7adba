#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "maniapipe/common.hpp"
#include "maniapipe/features.hpp"

namespace maniapipe::selection {

struct LinearSvmModel {
  Matrix weights;               // classes x dims, one-vs-rest
  std::vector<double> bias;     // per class
  double c_reg = 1.0;
  std::uint64_t seed = 0;

  int predict(std::span<const double> x) const;
};

struct SvmTrainConfig {
  double c_reg = 1.0;
  int epochs = 200;
  std::uint64_t seed = 0;
};

struct EliminationRound {
  int round = 0;
  std::vector<std::size_t> removed;  // original column indices
  double score = 0.0;                // training accuracy that round (dev proxy)
};

struct SelectionMask {
  std::vector<std::size_t> selected;  // ascending original column indices
  std::vector<EliminationRound> elimination_trace;
};

/// Hinge objective 0.5*||w||^2 + C * sum_i max(0, 1 - y_i (w.x_i + b)) of one
/// one-vs-rest binary problem (labels +-1). Bias is unregularized.
double svm_objective(const Matrix& x, const std::vector<int>& y,
                     std::span<const double> w, double b, double c_reg);

/// Full-batch subgradient of svm_objective at (w, b). Gradient w.r.t. the bias
/// is returned in grad_b.
void svm_subgradient(const Matrix& x, const std::vector<int>& y,
                     std::span<const double> w, double b, double c_reg,
                     std::span<double> grad_w, double& grad_b);

/// Seeded stochastic subgradient training of the one-vs-rest linear SVM with
/// Pegasos step sizes eta_t = 1/(lambda t), lambda = 1/(C n). Appends the
/// per-epoch objective (summed over classes) to objective_history when given.
LinearSvmModel train_linear_svm(const features::FeatureTable& table,
                                const SvmTrainConfig& cfg,
                                std::vector<double>* objective_history = nullptr);

struct RfeConfig {
  std::size_t target_k = 100;
  double step_frac = 0.1;
  SvmTrainConfig svm;
};

/// Recursive feature elimination: repeatedly train the one-vs-rest SVM, rank
/// feature j by sum_c w_cj^2 and drop the lowest-ranked block until exactly
/// target_k columns remain.
SelectionMask rfe(const features::FeatureTable& table, const RfeConfig& cfg);

features::FeatureTable apply_mask(const features::FeatureTable& table,
                                  const SelectionMask& mask);

void save_mask(const SelectionMask& mask, const std::filesystem::path& path);
SelectionMask load_mask(const std::filesystem::path& path);

}  // namespace maniapipe::selection
