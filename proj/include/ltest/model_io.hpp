// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "ltest/csv.hpp"
#include "ltest/features.hpp"

namespace ltest {

/// Text model container, one `key value...` record per line:
///
///   ltest-model 1
///   features hr
///   grid_k 20
///   n_inputs 2
///   hidden_units 2
///   delays 6
///   input_mean <n_inputs values>
///   input_std <n_inputs values>
///   target_mean <value>
///   target_std <value>
///   weights <P values in packing order>
///
/// Numbers use the shortest round-trip decimal form, so save/load is exact.
/// Lines starting with '#' are ignored.
inline constexpr int kModelFormatVersion = 1;

inline std::string serialize_model(const LrnnModel& m) {
  auto join = [](const auto& values) {
    std::string s;
    for (double v : values) s += ' ' + csv::format_number(v);
    return s;
  };
  const Eigen::VectorXd w = m.weights.pack();
  std::vector<double> wv(w.data(), w.data() + w.size());
  std::string out = "ltest-model " + std::to_string(kModelFormatVersion) + '\n';
  out += "features " + to_string(m.features) + '\n';
  out += "grid_k " + std::to_string(m.grid_size) + '\n';
  out += "n_inputs " + std::to_string(m.config.n_inputs) + '\n';
  out += "hidden_units " + std::to_string(m.config.hidden_units) + '\n';
  out += "delays " + std::to_string(m.config.delays) + '\n';
  out += "input_mean" + join(m.norm.input_mean) + '\n';
  out += "input_std" + join(m.norm.input_std) + '\n';
  out += "target_mean " + csv::format_number(m.norm.target_mean) + '\n';
  out += "target_std " + csv::format_number(m.norm.target_std) + '\n';
  out += "weights" + join(wv) + '\n';
  return out;
}

inline LrnnModel parse_model(std::string_view content) {
  std::map<std::string, std::vector<std::string>, std::less<>> rec;
  bool header = false;
  for (const auto& line : csv::data_lines(content)) {
    std::vector<std::string> tok;
    std::size_t i = 0;
    const std::string_view t = line.text;
    while (i < t.size()) {
      while (i < t.size() && (t[i] == ' ' || t[i] == '\t' || t[i] == '\r')) ++i;
      std::size_t j = i;
      while (j < t.size() && t[j] != ' ' && t[j] != '\t' && t[j] != '\r') ++j;
      if (j > i) tok.emplace_back(t.substr(i, j - i));
      i = j;
    }
    if (tok.empty()) continue;
    if (!header) {
      if (tok.size() != 2 || tok[0] != "ltest-model")
        fail(ErrorCode::ParseError, "line " + std::to_string(line.number) + ": not an ltest model file");
      if (tok[1] != std::to_string(kModelFormatVersion))
        fail(ErrorCode::ParseError, "unsupported model format version " + tok[1]);
      header = true;
      continue;
    }
    const std::string key = tok.front();
    tok.erase(tok.begin());
    rec[key] = std::move(tok);
  }
  if (!header) fail(ErrorCode::ParseError, "empty model file");

  auto field = [&](const std::string& k) -> const std::vector<std::string>& {
    auto it = rec.find(k);
    if (it == rec.end()) fail(ErrorCode::ParseError, "model file lacks '" + k + "'");
    return it->second;
  };
  auto numbers = [&](const std::string& k) {
    std::vector<double> v;
    for (const auto& s : field(k)) {
      auto x = csv::parse_number(s);
      if (!x) fail(ErrorCode::ParseError, "model field '" + k + "': bad number '" + s + "'");
      v.push_back(*x);
    }
    return v;
  };
  auto scalar = [&](const std::string& k) {
    auto v = numbers(k);
    if (v.size() != 1) fail(ErrorCode::ParseError, "model field '" + k + "' expects one value");
    return v.front();
  };
  auto count = [&](const std::string& k) {
    const double v = scalar(k);
    if (v < 1 || v != static_cast<double>(static_cast<long>(v)))
      fail(ErrorCode::ParseError, "model field '" + k + "' must be a positive integer");
    return static_cast<int>(v);
  };

  const auto& feat = field("features");
  if (feat.size() != 1) fail(ErrorCode::ParseError, "model field 'features' expects one value");
  LrnnModel m;
  m.features = parse_feature_set(feat.front());
  m.grid_size = static_cast<std::size_t>(count("grid_k"));
  m.config = {count("n_inputs"), count("hidden_units"), count("delays")};
  m.config.check();
  if (m.config.n_inputs != channel_count(m.features))
    fail(ErrorCode::ShapeMismatch, "n_inputs does not match feature set " + to_string(m.features));
  m.norm.input_mean = numbers("input_mean");
  m.norm.input_std = numbers("input_std");
  if (m.norm.input_mean.size() != static_cast<std::size_t>(m.config.n_inputs) ||
      m.norm.input_std.size() != static_cast<std::size_t>(m.config.n_inputs))
    fail(ErrorCode::ShapeMismatch, "normalization statistics do not match n_inputs");
  m.norm.target_mean = scalar("target_mean");
  m.norm.target_std = scalar("target_std");
  const auto w = numbers("weights");
  if (static_cast<int>(w.size()) != m.config.parameter_count())
    fail(ErrorCode::ShapeMismatch, "model has " + std::to_string(w.size()) + " weights, configuration needs " +
                                       std::to_string(m.config.parameter_count()));
  m.weights = LrnnWeights::unpack(m.config, Eigen::Map<const Eigen::VectorXd>(w.data(), static_cast<Eigen::Index>(w.size())));
  return m;
}

}  // namespace ltest
