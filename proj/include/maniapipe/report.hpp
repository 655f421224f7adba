#pragma once

#include <filesystem>
#include <vector>

#include "maniapipe/experiment.hpp"
#include "maniapipe/registry.hpp"

namespace maniapipe::eval {

/// Writes report.txt (aligned result table plus the reference registry),
/// uar_by_task.svg (per-task bars with reference lines), cm_same.svg /
/// cm_whole.svg (confusion heatmaps of the best row per condition) and
/// rows.json. Output bytes are a pure function of the inputs.
void render_report(const std::vector<ReportRow>& rows, const ReferenceRegistry& registry,
                   const std::filesystem::path& out_dir);

}  // namespace maniapipe::eval
