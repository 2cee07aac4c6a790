// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <array>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "ltest/csv.hpp"
#include "ltest/domain.hpp"

namespace ltest {

inline constexpr std::string_view kSessionHeader =
    "athlete_id,speed,lactate,hr_end,hrr_1min,rpe_resp,rpe_musc";

namespace detail {

inline constexpr std::array<std::string_view, 7> kSessionColumns = {
    "athlete_id", "speed", "lactate", "hr_end", "hrr_1min", "rpe_resp", "rpe_musc"};

inline std::optional<double> parse_optional(const std::string& field, std::size_t line,
                                            std::string_view column) {
  if (field == "-" || field.empty()) return std::nullopt;
  auto v = csv::parse_number(field);
  if (!v)
    fail(ErrorCode::ParseError, "line " + std::to_string(line) + ": bad " + std::string(column) +
                                    " value '" + field + "'");
  return v;
}

inline std::string format_optional(const std::optional<double>& v) {
  return v ? csv::format_number(*v) : std::string("-");
}

}  // namespace detail

/// Parses the comma-delimited session format. The header must name
/// athlete_id and speed; the measurement columns are optional and may
/// appear in any order (a feature-only file simply omits lactate).
/// Athletes are contiguous row blocks. Lines "# incidence,<id>,<text>"
/// attach free-text notes; other '#' lines are ignored.
inline std::vector<TestSession> parse_sessions(std::string_view content) {
  std::vector<TestSession> out;
  std::map<std::string, std::vector<std::string>> incidences;
  {
    std::size_t start = 0;
    while (start < content.size()) {
      auto end = content.find('\n', start);
      if (end == std::string_view::npos) end = content.size();
      std::string_view l = content.substr(start, end - start);
      constexpr std::string_view tag = "# incidence,";
      if (l.substr(0, tag.size()) == tag) {
        auto rest = l.substr(tag.size());
        if (!rest.empty() && rest.back() == '\r') rest.remove_suffix(1);
        const auto comma = rest.find(',');
        if (comma != std::string_view::npos)
          incidences[std::string(rest.substr(0, comma))].emplace_back(rest.substr(comma + 1));
      }
      start = end + 1;
    }
  }

  const auto lines = csv::data_lines(content);
  if (lines.empty()) fail(ErrorCode::ParseError, "empty session file");
  const auto header = csv::split(lines.front().text);
  std::array<int, 7> col{};
  col.fill(-1);
  for (std::size_t i = 0; i < header.size(); ++i) {
    auto it = std::find(detail::kSessionColumns.begin(), detail::kSessionColumns.end(), header[i]);
    if (it == detail::kSessionColumns.end())
      fail(ErrorCode::ParseError, "line " + std::to_string(lines.front().number) +
                                      ": unknown column '" + header[i] + "'");
    col[static_cast<std::size_t>(it - detail::kSessionColumns.begin())] = static_cast<int>(i);
  }
  if (col[0] < 0 || col[1] < 0)
    fail(ErrorCode::ParseError, "header must contain athlete_id and speed");

  for (std::size_t li = 1; li < lines.size(); ++li) {
    const auto& line = lines[li];
    const auto f = csv::split(line.text);
    if (f.size() != header.size())
      fail(ErrorCode::ParseError, "line " + std::to_string(line.number) + ": expected " +
                                      std::to_string(header.size()) + " fields, got " +
                                      std::to_string(f.size()));
    auto field = [&](std::size_t c) -> const std::string& { return f[static_cast<std::size_t>(col[c])]; };
    const std::string& id = field(0);
    if (id.empty()) fail(ErrorCode::ParseError, "line " + std::to_string(line.number) + ": empty athlete_id");

    Stage st;
    auto speed = csv::parse_number(field(1));
    if (!speed || *speed <= 0.0)
      fail(ErrorCode::ParseError, "line " + std::to_string(line.number) + ": bad speed '" + field(1) + "'");
    st.speed = *speed;
    auto opt = [&](std::size_t c) -> std::optional<double> {
      if (col[c] < 0) return std::nullopt;
      return detail::parse_optional(field(c), line.number, detail::kSessionColumns[c]);
    };
    st.lactate = opt(2);
    st.hr_end = opt(3);
    st.hrr_1min = opt(4);
    st.rpe_respiratory = opt(5);
    st.rpe_muscular = opt(6);

    if (out.empty() || out.back().athlete_id != id) {
      for (const auto& s : out)
        if (s.athlete_id == id)
          fail(ErrorCode::ParseError, "line " + std::to_string(line.number) + ": athlete " + id +
                                          " rows are not contiguous");
      TestSession s;
      s.athlete_id = id;
      if (auto it = incidences.find(id); it != incidences.end()) s.incidences = it->second;
      out.push_back(std::move(s));
    }
    TestSession& s = out.back();
    const std::size_t idx = s.stages.size();
    if (std::abs(st.speed - ladder_speed(idx)) > protocol::kSpeedTolerance)
      fail(ErrorCode::ProtocolError, "line " + std::to_string(line.number) + ": athlete " + id +
                                         " speed " + field(1) + " is not on the protocol ladder (expected " +
                                         csv::format_number(ladder_speed(idx)) + ")");
    s.stages.push_back(st);
  }
  for (const auto& s : out) check_protocol(s);
  return out;
}

/// Inverse of parse_sessions for the full seven-column layout.
inline std::string serialize_sessions(const std::vector<TestSession>& sessions) {
  std::string out;
  for (const auto& s : sessions)
    for (const auto& note : s.incidences) out += "# incidence," + s.athlete_id + "," + note + "\n";
  out += kSessionHeader;
  out += '\n';
  for (const auto& s : sessions) {
    for (const auto& st : s.stages) {
      out += s.athlete_id;
      out += ',' + csv::format_number(st.speed);
      out += ',' + detail::format_optional(st.lactate);
      out += ',' + detail::format_optional(st.hr_end);
      out += ',' + detail::format_optional(st.hrr_1min);
      out += ',' + detail::format_optional(st.rpe_respiratory);
      out += ',' + detail::format_optional(st.rpe_muscular);
      out += '\n';
    }
  }
  return out;
}

}  // namespace ltest
