// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "ltest/csv.hpp"
#include "ltest/pipeline.hpp"

namespace ltest {

inline constexpr std::string_view kVersion = "1.0.0";

/// "1-4", "1,5,10" or a mix such as "1-3,7".
inline std::vector<int> parse_int_list(std::string_view text) {
  std::vector<int> out;
  for (const auto& part : csv::split(text, ',')) {
    const auto dash = part.find('-', 1);
    auto num = [&](std::string_view s) {
      auto v = csv::parse_number(s);
      if (!v || *v != static_cast<double>(static_cast<int>(*v)))
        fail(ErrorCode::InvalidArgument, "bad integer list '" + std::string(text) + "'");
      return static_cast<int>(*v);
    };
    if (dash == std::string::npos) {
      out.push_back(num(part));
      continue;
    }
    const int lo = num(std::string_view(part).substr(0, dash)), hi = num(std::string_view(part).substr(dash + 1));
    if (hi < lo) fail(ErrorCode::InvalidArgument, "empty range '" + part + "'");
    for (int i = lo; i <= hi; ++i) out.push_back(i);
  }
  if (out.empty()) fail(ErrorCode::InvalidArgument, "empty integer list");
  return out;
}

inline std::string format_int_list(const std::vector<int>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size();) {
    std::size_t j = i;
    while (j + 1 < v.size() && v[j + 1] == v[j] + 1) ++j;
    if (!s.empty()) s += ',';
    s += std::to_string(v[i]);
    if (j > i) s += '-' + std::to_string(v[j]);
    i = j + 1;
  }
  return s;
}

inline std::string to_string(SplitMethod m) { return m == SplitMethod::Knowledge ? "knowledge" : "stratified"; }

inline SplitMethod parse_split_method(std::string_view s) {
  if (s == "knowledge") return SplitMethod::Knowledge;
  if (s == "stratified") return SplitMethod::Stratified;
  fail(ErrorCode::InvalidArgument, "unknown split method '" + std::string(s) + "'");
}

inline std::string to_string(Linkage l) {
  switch (l) {
    case Linkage::Single: return "single";
    case Linkage::Complete: return "complete";
    case Linkage::Average: break;
  }
  return "average";
}

inline EvalSet parse_eval_set(std::string_view s) {
  if (s == "global") return EvalSet::Global;
  if (s == "train") return EvalSet::Train;
  if (s == "test") return EvalSet::Test;
  fail(ErrorCode::InvalidArgument, "unknown evaluation set '" + std::string(s) + "'");
}

/// Key/value pairs from a flat config file: `key = value` per line, '#'
/// starts a comment line.
inline std::vector<std::pair<std::string, std::string>> parse_config_file(std::string_view content) {
  std::vector<std::pair<std::string, std::string>> out;
  auto trim = [](std::string s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return std::string();
    return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
  };
  for (const auto& line : csv::data_lines(content)) {
    const auto eq = line.text.find('=');
    if (eq == std::string::npos)
      fail(ErrorCode::ParseError, "config line " + std::to_string(line.number) + ": expected key = value");
    out.emplace_back(trim(line.text.substr(0, eq)), trim(line.text.substr(eq + 1)));
  }
  return out;
}

inline void apply_setting(PipelineConfig& c, const std::string& key, const std::string& value) {
  auto number = [&]() {
    auto v = csv::parse_number(value);
    if (!v) fail(ErrorCode::InvalidArgument, "config key '" + key + "': bad number '" + value + "'");
    return *v;
  };
  auto integer = [&]() {
    const double v = number();
    if (v != static_cast<double>(static_cast<long long>(v)))
      fail(ErrorCode::InvalidArgument, "config key '" + key + "' expects an integer");
    return static_cast<long long>(v);
  };
  auto boolean = [&]() {
    if (value == "true" || value == "1" || value == "yes") return true;
    if (value == "false" || value == "0" || value == "no") return false;
    fail(ErrorCode::InvalidArgument, "config key '" + key + "' expects true or false");
  };
  if (key == "grid_k") c.grid_k = static_cast<std::size_t>(integer());
  else if (key == "seed") c.seed = static_cast<std::uint64_t>(integer());
  else if (key == "split_method") c.split_method = parse_split_method(value);
  else if (key == "test_fraction") c.test_fraction = number();
  else if (key == "linkage") c.linkage = parse_linkage(value);
  else if (key == "strata") c.n_strata = static_cast<int>(integer());
  else if (key == "tune") c.tune = boolean();
  else if (key == "tuning_min_pts") c.tuning_min_pts = number();
  else if (key == "tuning_max_athletes") c.tuning_max_athletes = static_cast<std::size_t>(integer());
  else if (key == "tuning_restarts") c.tuning_restarts = static_cast<int>(integer());
  else if (key == "hu") c.hidden_units = parse_int_list(value);
  else if (key == "delays") c.delays = parse_int_list(value);
  else if (key == "restarts") c.train.restarts = static_cast<int>(integer());
  else if (key == "max_epochs") c.train.max_epochs = static_cast<int>(integer());
  else if (key == "mu_init") c.train.mu_init = number();
  else if (key == "mu_increase") c.train.mu_increase = number();
  else if (key == "mu_decrease") c.train.mu_decrease = number();
  else if (key == "mu_max") c.train.mu_max = number();
  else if (key == "min_gradient") c.train.min_gradient = number();
  else if (key == "features") c.features = value == "auto" ? std::nullopt : std::optional(parse_feature_set(value));
  else if (key == "heuristic_tolerance") c.rank.heuristic_tolerance = number();
  else if (key == "pearson_tolerance") c.rank.pearson_tolerance = number();
  else if (key == "rank_set") c.rank.set = parse_eval_set(value);
  else if (key == "pearson_margin") c.pearson_margin = number();
  else if (key == "jobs") c.jobs = static_cast<int>(integer());
  else fail(ErrorCode::InvalidArgument, "unknown config key '" + key + "'");
}

/// Every result-affecting setting as `key=value` lines. The worker count is
/// left out: it never changes a result.
inline std::string canonical_config(const PipelineConfig& c) {
  std::string s;
  auto put = [&](std::string_view k, const std::string& v) { s += std::string(k) + '=' + v + '\n'; };
  put("grid_k", std::to_string(c.grid_k));
  put("seed", std::to_string(c.seed));
  put("split_method", to_string(c.split_method));
  put("test_fraction", csv::format_number(c.test_fraction));
  put("linkage", to_string(c.linkage));
  put("strata", std::to_string(c.n_strata));
  put("knowledge_plan", csv::hex64(csv::fnv1a(c.knowledge_plan)));
  put("tune", c.tune ? "true" : "false");
  put("tuning_min_pts", csv::format_number(c.tuning_min_pts));
  put("tuning_max_athletes", std::to_string(c.tuning_max_athletes));
  put("tuning_restarts", std::to_string(c.tuning_restarts));
  for (const auto& st : c.tuning_plan)
    put("tuning_stage", st.name + ':' + format_int_list(st.hidden_units) + ':' + format_int_list(st.delays));
  put("hu", format_int_list(c.hidden_units));
  put("delays", format_int_list(c.delays));
  put("restarts", std::to_string(c.train.restarts));
  put("max_epochs", std::to_string(c.train.max_epochs));
  put("mu_init", csv::format_number(c.train.mu_init));
  put("mu_increase", csv::format_number(c.train.mu_increase));
  put("mu_decrease", csv::format_number(c.train.mu_decrease));
  put("mu_max", csv::format_number(c.train.mu_max));
  put("min_gradient", csv::format_number(c.train.min_gradient));
  put("features", c.features ? to_string(*c.features) : "auto");
  put("heuristic_tolerance", csv::format_number(c.rank.heuristic_tolerance));
  put("pearson_tolerance", csv::format_number(c.rank.pearson_tolerance));
  put("rank_set", to_string(c.rank.set));
  put("pearson_margin", csv::format_number(c.pearson_margin));
  return s;
}

inline std::string config_hash(const PipelineConfig& c) { return csv::hex64(csv::fnv1a(canonical_config(c))); }

/// First line of every output file.
inline std::string provenance_header(std::uint64_t seed, const std::string& hash) {
  return "# ltest " + std::string(kVersion) + " seed=" + std::to_string(seed) + " config=" + hash + '\n';
}

}  // namespace ltest
