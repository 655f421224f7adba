#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "maniapipe/common.hpp"
#include "maniapipe/corpus.hpp"
#include "maniapipe/functionals.hpp"

namespace maniapipe::features {

struct FeatureTable {
  Matrix values;  // rows x dims
  std::vector<corpus::Label> labels;
  std::vector<std::string> names;
  std::vector<std::string> recording_ids;
  std::vector<std::optional<int>> task_indices;
  std::string split_tag;

  std::size_t size() const { return values.rows; }
  std::size_t dims() const { return values.cols; }

  /// Appends one row; the first row fixes the column names.
  void add_row(const functionals::FeatureVector& fv, corpus::Label label);
};

struct NormParams {
  std::vector<double> mean;
  std::vector<double> stddev;  // floored at 1e-8
};

/// Per-dimension mean/stddev over the training rows only.
NormParams znorm_fit(const FeatureTable& train);

FeatureTable znorm_apply(const FeatureTable& table, const NormParams& params);

/// CSV persistence: 17-significant-digit values, header of feature names plus
/// trailing label/recording_id/task_index columns.
void save_table(const FeatureTable& table, const std::filesystem::path& path);
FeatureTable load_table(const std::filesystem::path& path);

void save_norm_params(const NormParams& params, const std::filesystem::path& path);
NormParams load_norm_params(const std::filesystem::path& path);

}  // namespace maniapipe::features
