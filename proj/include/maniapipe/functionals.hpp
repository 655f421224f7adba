#pragma once

#include <optional>
#include <string>
#include <vector>

#include "maniapipe/common.hpp"
#include "maniapipe/lld.hpp"

namespace maniapipe::functionals {

/// The 21 statistical functionals, in canonical order.
const std::vector<std::string>& canonical_functionals();

struct FunctionalSet {
  std::vector<std::string> enabled;

  static FunctionalSet all();
};

struct FeatureVector {
  std::vector<double> values;
  std::vector<std::string> names;  // "<lld>_<functional>"
  std::string recording_id;
  std::optional<int> task_index;
};

/// Collapses each descriptor column to |fs| statistics. Output length is
/// columns(m) * |fs|, ordered column-major over descriptors then functionals.
FeatureVector apply_functionals(const lld::LldMatrix& m, const FunctionalSet& fs);

/// Nominal dimension accounting:
/// lld_count * (2 if deltas) * |fs| + extras.
int expected_dimension(int lld_count, bool with_deltas, const FunctionalSet& fs,
                       int extras);

}  // namespace maniapipe::functionals
