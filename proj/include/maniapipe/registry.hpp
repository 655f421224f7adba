#pragma once

#include <optional>
#include <string>
#include <vector>

namespace maniapipe::eval {

/// Published results this pipeline is usually compared against. Display-only:
/// the original BD recordings are license-restricted, so nothing in the test
/// suite asserts these numbers.
struct ReferenceEntry {
  std::string system;
  std::string features;
  std::string classifier;
  std::optional<double> dev_uar;
  std::optional<double> test_uar;
};

struct TaskGroupReference {
  std::string tasks;      // "1-2-3", "4-5", "6-7"
  double uar_same = 0.0;  // evaluated on the same task group
  double uar_whole = 0.0; // evaluated on the whole recording
};

struct ReferenceRegistry {
  std::vector<ReferenceEntry> related_systems;
  std::vector<TaskGroupReference> task_groups;
  double chance_uar = 1.0 / 3.0;
  // Task-split 1D CNN reference points on the original corpus.
  double best_reported_dev_uar = 0.53;          // tasks 6-7, whole-recording dev
  double cross_condition_dev_uar = 0.51;        // task-7 model on whole-recording dev
  // Per-task bar values were published only as a figure; they are not
  // available as numbers, so the registry carries no per-task references.
  bool per_task_values_available = false;
};

const ReferenceRegistry& builtin_registry();

}  // namespace maniapipe::eval
