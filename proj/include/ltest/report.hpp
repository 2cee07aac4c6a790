// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <json.hpp>
#include <string>
#include <vector>

#include "ltest/config.hpp"
#include "ltest/pipeline.hpp"

namespace ltest {

namespace detail {

inline std::string pad(const std::string& s, std::size_t w, bool right = false) {
  if (s.size() >= w) return s;
  return right ? std::string(w - s.size(), ' ') + s : s + std::string(w - s.size(), ' ');
}

/// Plain-text table: first column left aligned, the rest right aligned.
inline std::string table(const std::vector<std::string>& head, const std::vector<std::vector<std::string>>& rows) {
  std::vector<std::size_t> w(head.size());
  for (std::size_t c = 0; c < head.size(); ++c) w[c] = head[c].size();
  for (const auto& r : rows)
    for (std::size_t c = 0; c < r.size() && c < w.size(); ++c) w[c] = std::max(w[c], r[c].size());
  auto line = [&](const std::vector<std::string>& r) {
    std::string s = " ";
    for (std::size_t c = 0; c < w.size(); ++c) s += ' ' + pad(c < r.size() ? r[c] : "", w[c], c > 0);
    return s + '\n';
  };
  std::string rule = "  ";
  for (std::size_t c = 0; c < w.size(); ++c) rule += std::string(w[c], '-') + (c + 1 < w.size() ? " " : "");
  std::string out = line(head) + rule + '\n';
  for (const auto& r : rows) out += line(r);
  return out;
}

inline std::string pct(double v) { return csv::format_fixed(v, 2); }
inline std::string r2(const std::optional<double>& v) { return v ? csv::format_fixed(*v, 2) : "n/a"; }
inline std::string r2(double v) { return csv::format_fixed(v, 2); }
inline std::string num_or_na(const std::optional<double>& v) { return v ? csv::format_number(*v) : "NA"; }

inline nlohmann::ordered_json to_json(const SetIndicators& s) {
  nlohmann::ordered_json j;
  j["heuristic_pct"] = s.heuristic_pct;
  j["pearson_r"] = s.pearson_r ? nlohmann::ordered_json(*s.pearson_r) : nlohmann::ordered_json(nullptr);
  j["athletes"] = s.n;
  j["scored"] = s.n_scored;
  j["within_band"] = s.n_within;
  j["out_of_scope"] = s.n_out_of_scope;
  return j;
}

inline nlohmann::ordered_json to_json(const PerformanceReport& r) {
  return {{"global", to_json(r.global)}, {"train", to_json(r.train)}, {"test", to_json(r.test)}};
}

inline std::string performance_table(const PerformanceReport& r) {
  return table({"", "Global", "Train", "Test"},
               {{"% individualization", pct(r.global.heuristic_pct), pct(r.train.heuristic_pct), pct(r.test.heuristic_pct)},
                {"Pearson R", r2(r.global.pearson_r), r2(r.train.pearson_r), r2(r.test.pearson_r)},
                {"Athletes", std::to_string(r.global.n), std::to_string(r.train.n), std::to_string(r.test.n)},
                {"Out of scope", std::to_string(r.global.n_out_of_scope), std::to_string(r.train.n_out_of_scope),
                 std::to_string(r.test.n_out_of_scope)}});
}

}  // namespace detail

/// Grid results file: one row per (cell, restart, set).
inline std::string grid_file(const GridResult& g, const std::string& header) {
  std::string out = header + "hu,delays,restart,set,heuristic_pct,pearson_r,objective\n";
  for (const auto& c : g.cells)
    for (const auto& r : c.restarts)
      for (auto set : {EvalSet::Global, EvalSet::Train, EvalSet::Test}) {
        const std::string prefix = std::to_string(c.hidden_units) + ',' + std::to_string(c.delays) + ',' +
                                   std::to_string(r.restart) + ',' + to_string(set) + ',';
        if (r.failed) {
          out += prefix + "NA,NA,NA\n";
          continue;
        }
        const auto& s = pick(r.performance, set);
        out += prefix + csv::format_number(s.heuristic_pct) + ',' + detail::num_or_na(s.pearson_r) + ',' +
               csv::format_number(r.objective) + '\n';
      }
  return out;
}

inline std::string sensitivity_file(const GridResult& g, const std::string& header) {
  std::string out = header + "hu,delays,set,heuristic_mean,heuristic_max,pearson_mean,pearson_max,restarts\n";
  for (const auto& row : sensitivity_export(g.cells))
    out += std::to_string(row.hidden_units) + ',' + std::to_string(row.delays) + ',' + to_string(row.set) + ',' +
           csv::format_number(row.heuristic_mean) + ',' + csv::format_number(row.heuristic_max) + ',' +
           csv::format_number(row.pearson_mean) + ',' + csv::format_number(row.pearson_max) + ',' +
           std::to_string(row.n_restarts) + '\n';
  return out;
}

/// Estimated and measured (resampled) lactate per athlete on the grid.
inline std::string curves_file(const LrnnModel& model, const Workbench& wb, const std::string& header) {
  std::string out = header + "athlete_id,rel_intensity,lactate_est,lactate_measured\n";
  for (const auto& s : wb.subjects) {
    const auto est = model.predict(s.series);
    for (std::size_t i = 0; i < s.series.size(); ++i)
      out += s.athlete_id + ',' + csv::format_number(s.series.grid[i]) + ',' + csv::format_number(est[i]) + ',' +
             (i < s.series.lactate.size() ? csv::format_number(s.series.lactate[i]) : std::string("NA")) + '\n';
  }
  return out;
}

inline std::string outcomes_file(const std::vector<AthleteOutcome>& athletes, const std::string& header) {
  std::string out = header + "athlete_id,set,reference_pace,estimated_pace,estimated_rel,error,allowed,within,out_of_scope\n";
  auto opt = [](const std::optional<double>& v) { return v ? csv::format_number(*v) : std::string("NA"); };
  auto finite = [](double v) { return std::isfinite(v) ? csv::format_number(v) : std::string("NA"); };
  for (const auto& a : athletes)
    out += a.athlete_id + (a.in_test ? ",test," : ",train,") + csv::format_number(a.reference_pace) + ',' +
           finite(a.estimated_pace) + ',' + finite(a.estimated_rel) + ',' + opt(a.error) + ',' + opt(a.allowed) + ',' +
           (a.within ? "1" : "0") + ',' + (a.out_of_scope ? "1" : "0") + '\n';
  return out;
}

/// Human-readable report with tables in the layout of the tuning, feature
/// selection, ranking and final-performance tables.
inline std::string text_report(const PipelineResult& r, const PipelineConfig& cfg, const std::string& header,
                               std::size_t ranking_rows = 10) {
  using detail::pct;
  using detail::r2;
  using detail::table;
  std::string out = header;
  out += "LACTATE THRESHOLD ESTIMATION REPORT\n\n";

  out += "Cohort\n";
  out += "  sessions accepted: " + std::to_string(r.cohort_order.size()) + '\n';
  out += "  sessions rejected: " + std::to_string(r.rejected.size()) + '\n';
  for (const auto& x : r.rejected)
    out += "    " + x.athlete_id + " " + std::string(to_string(x.rule)) + ": " + x.message + '\n';
  out += "  without usable tested threshold: " + std::to_string(r.excluded.size()) + '\n';
  for (const auto& id : r.excluded) out += "    " + id + '\n';
  out += '\n';

  out += "Split\n";
  out += "  method: " + to_string(r.plan.method) + '\n';
  if (r.strata) {
    out += "  linkage: " + to_string(cfg.linkage) + ", strata: " + std::to_string(r.strata->n_strata) +
           ", cut height: " + csv::format_fixed(r.strata->linkage_cut, 4) + '\n';
  }
  out += "  train: " + std::to_string(r.plan.train_ids.size()) + ", test: " + std::to_string(r.plan.test_ids.size()) +
         " (" + pct(100.0 * r.plan.test_fraction()) + "% test)\n";
  for (const auto& w : r.plan.warnings) out += "  warning: " + w + '\n';
  out += '\n';

  out += "Selection rule\n";
  out += "  ranking set: " + to_string(cfg.rank.set) + ", tolerance: " + csv::format_number(cfg.rank.heuristic_tolerance) +
         " points / " + csv::format_number(cfg.rank.pearson_tolerance) + " R\n";
  out += "  restarts per cell: " + std::to_string(cfg.train.restarts) +
         ", max epochs: " + std::to_string(cfg.train.max_epochs) + '\n';
  out += '\n';

  if (r.tuning) {
    out += "Preliminary tuning (" + std::to_string(r.tuning_subset.size()) + " athletes, training set, " +
           std::to_string(cfg.tuning_restarts) + " restarts per cell)\n";
    std::vector<std::vector<std::string>> rows;
    for (const auto& st : r.tuning->stages)
      rows.push_back({st.stage.name, format_int_list(st.stage.hidden_units), format_int_list(st.stage.delays),
                      std::to_string(st.grid.cells.size()), std::to_string(st.best.hidden_units),
                      std::to_string(st.best.delays), pct(st.best.heuristic_pct), r2(st.best.pearson_r)});
    out += table({"Step", "HU", "Delays", "Cells", "Best HU", "Best delays", "% indiv.", "R"}, rows);
    out += "  surviving range: HU " + std::to_string(r.tuning->hu_min) + "-" + std::to_string(r.tuning->hu_max) +
           ", delays " + std::to_string(r.tuning->delay_min) + "-" + std::to_string(r.tuning->delay_max) + "\n\n";
  }

  out += "Feature selection (best model per input set, " + to_string(cfg.rank.set) + " set)\n";
  {
    std::vector<std::vector<std::string>> rows;
    for (std::size_t i = 0; i < r.selection.table.size(); ++i) {
      const auto& row = r.selection.table[i];
      rows.push_back({feature_label(row.features), std::to_string(row.hidden_units), std::to_string(row.delays),
                      pct(row.heuristic_pct), r2(row.pearson_r), i == r.selection.selected_index ? "*" : ""});
    }
    out += table({"Inputs", "HU", "Delays", "% indiv.", "R", "Sel."}, rows);
    out += '\n';
  }

  out += "Model ranking (inputs: " + feature_label(r.selection.selected) + ")\n";
  {
    std::vector<std::vector<std::string>> rows;
    const std::size_t n = std::min(ranking_rows, r.ranking.ranked.size());
    for (std::size_t i = 0; i < r.ranking.ranked.size(); ++i) {
      if (i >= n && i != r.ranking.selected) continue;
      const auto& m = r.ranking.ranked[i];
      rows.push_back({std::to_string(i + 1), std::to_string(m.hidden_units), std::to_string(m.delays),
                      std::to_string(m.parameter_count), pct(m.heuristic_pct), r2(m.pearson_r),
                      i == r.ranking.selected ? "*" : ""});
    }
    out += table({"Rank", "HU", "Delays", "Params", "% indiv.", "R", "Sel."}, rows);
    out += '\n';
  }

  out += "Final model performance (HU " + std::to_string(r.final_choice.hidden_units) + ", delays " +
         std::to_string(r.final_choice.delays) + ", inputs " + feature_label(r.selection.selected) +
         ") against tested LT\n";
  out += detail::performance_table(r.report.tested);
  out += "  train-test parity: " + pct(r.report.parity_delta) + " points\n\n";

  if (r.report.truth) {
    out += "Final model performance against ground-truth LT\n";
    out += detail::performance_table(*r.report.truth);
    out += "  train-test parity: " +
           pct(std::abs(r.report.truth->train.heuristic_pct - r.report.truth->test.heuristic_pct)) + " points\n\n";
  }

  out += "Bad lactate threshold estimations (" + std::to_string(r.report.failed.size()) + ")\n";
  {
    std::vector<std::vector<std::string>> rows;
    auto opt = [](const std::optional<double>& v) { return v ? csv::format_fixed(*v, 1) : std::string("n/a"); };
    for (const auto& a : r.report.athletes) {
      if (a.within) continue;
      rows.push_back({a.athlete_id, a.in_test ? "test" : "train", csv::format_fixed(a.reference_pace, 1),
                      std::isfinite(a.estimated_pace) ? csv::format_fixed(a.estimated_pace, 1) : "n/a", opt(a.error),
                      a.out_of_scope ? "out of scope" : opt(a.allowed)});
    }
    out += table({"Athlete", "Set", "Tested s/km", "Estimated s/km", "|Error|", "Allowed"}, rows);
  }
  return out;
}

/// Machine-readable counterpart of the text report.
inline std::string json_report(const PipelineResult& r, const PipelineConfig& cfg, const std::string& hash) {
  nlohmann::ordered_json j;
  j["version"] = std::string(kVersion);
  j["seed"] = cfg.seed;
  j["config_hash"] = hash;
  j["cohort"] = {{"accepted", r.cohort_order.size()}, {"rejected", r.rejected.size()}, {"excluded", r.excluded}};
  nlohmann::ordered_json rej = nlohmann::ordered_json::array();
  for (const auto& x : r.rejected)
    rej.push_back({{"athlete_id", x.athlete_id}, {"rule", std::string(to_string(x.rule))}, {"message", x.message}});
  j["cohort"]["rejections"] = rej;
  j["split"] = {{"method", to_string(r.plan.method)},
                {"train", r.plan.train_ids.size()},
                {"test", r.plan.test_ids.size()},
                {"strata", r.strata ? r.strata->n_strata : 0},
                {"warnings", r.plan.warnings}};
  if (r.tuning) {
    nlohmann::ordered_json stages = nlohmann::ordered_json::array();
    for (const auto& st : r.tuning->stages)
      stages.push_back({{"name", st.stage.name},
                        {"hu", st.stage.hidden_units},
                        {"delays", st.stage.delays},
                        {"cells", st.grid.cells.size()},
                        {"best", {{"hu", st.best.hidden_units},
                                  {"delays", st.best.delays},
                                  {"heuristic_pct", st.best.heuristic_pct},
                                  {"pearson_r", st.best.pearson_r}}}});
    j["tuning"] = {{"subset", r.tuning_subset},
                   {"stages", stages},
                   {"range", {{"hu", {r.tuning->hu_min, r.tuning->hu_max}},
                              {"delays", {r.tuning->delay_min, r.tuning->delay_max}}}}};
  }
  nlohmann::ordered_json fs = nlohmann::ordered_json::array();
  for (const auto& row : r.selection.table)
    fs.push_back({{"features", to_string(row.features)},
                  {"hu", row.hidden_units},
                  {"delays", row.delays},
                  {"heuristic_pct", row.heuristic_pct},
                  {"pearson_r", row.pearson_r}});
  j["feature_selection"] = {{"table", fs}, {"selected", to_string(r.selection.selected)}};
  nlohmann::ordered_json rk = nlohmann::ordered_json::array();
  for (const auto& m : r.ranking.ranked)
    rk.push_back({{"hu", m.hidden_units},
                  {"delays", m.delays},
                  {"parameters", m.parameter_count},
                  {"heuristic_pct", m.heuristic_pct},
                  {"pearson_r", m.pearson_r}});
  j["ranking"] = {{"set", to_string(cfg.rank.set)},
                  {"heuristic_tolerance", cfg.rank.heuristic_tolerance},
                  {"pearson_tolerance", cfg.rank.pearson_tolerance},
                  {"models", rk},
                  {"selected_rank", r.ranking.selected + 1}};
  j["final_model"] = {{"hu", r.final_choice.hidden_units},
                      {"delays", r.final_choice.delays},
                      {"features", to_string(r.selection.selected)},
                      {"parameters", r.final_choice.parameter_count}};
  j["performance_tested"] = detail::to_json(r.report.tested);
  j["parity_delta"] = r.report.parity_delta;
  if (r.report.truth) {
    j["performance_truth"] = detail::to_json(*r.report.truth);
    j["parity_delta_truth"] = std::abs(r.report.truth->train.heuristic_pct - r.report.truth->test.heuristic_pct);
  }
  j["failed"] = r.report.failed;
  return j.dump(2) + '\n';
}

}  // namespace ltest
