// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <string>

#include "ltest/config.hpp"
#include "ltest/csv.hpp"
#include "ltest/model_io.hpp"
#include "ltest/report.hpp"

namespace ltest {

/// Feature-set name usable inside a file name ("hr+hrr" becomes "hr_hrr").
inline std::string file_label(FeatureSet f) {
  std::string s = to_string(f);
  for (auto& ch : s)
    if (ch == '+') ch = '_';
  return s;
}

/// Writes every artefact of a workflow run into `dir`, each file opening
/// with the provenance header.
inline void write_run_outputs(const std::filesystem::path& dir, const PipelineResult& r, const PipelineConfig& cfg) {
  const std::string hash = config_hash(cfg);
  const std::string head = provenance_header(cfg.seed, hash);
  csv::write_file((dir / "config.txt").string(), head + canonical_config(cfg));
  csv::write_file((dir / "split.csv").string(), head + serialize_split(r.plan, r.cohort_order));
  if (r.tuning)
    for (std::size_t i = 0; i < r.tuning->stages.size(); ++i)
      csv::write_file((dir / ("tuning_stage" + std::to_string(i + 1) + ".csv")).string(),
                      grid_file(r.tuning->stages[i].grid, head));
  for (const auto& g : r.selection.grids)
    csv::write_file((dir / ("grid_" + file_label(g.features) + ".csv")).string(), grid_file(g, head));
  csv::write_file((dir / "grid.csv").string(), grid_file(r.final_grid(), head));
  csv::write_file((dir / "sensitivity.csv").string(), sensitivity_file(r.final_grid(), head));
  csv::write_file((dir / "model.txt").string(), head + serialize_model(r.model));
  csv::write_file((dir / "curves.csv").string(), curves_file(r.model, r.bench, head));
  csv::write_file((dir / "athletes.csv").string(), outcomes_file(r.report.athletes, head));
  csv::write_file((dir / "report.txt").string(), text_report(r, cfg, head));
  csv::write_file((dir / "report.json").string(), json_report(r, cfg, hash));
}

}  // namespace ltest
