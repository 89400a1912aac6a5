#pragma once

#include <filesystem>
#include <optional>
#include <string>

namespace afford::report {

/// Renders run artifacts into report.md + PNG figures inside run_dir:
/// loss_curve.png from train_log.jsonl, a metrics table from report.json,
/// and side-by-side image/GT/prediction panels from panels/. A second run
/// directory produces a two-column comparison table (ablation layout).
/// Missing artifacts raise an error listing everything absent.
void write_run_report(const std::filesystem::path& run_dir,
                      const std::optional<std::filesystem::path>& compare_dir = std::nullopt);

}  // namespace afford::report
