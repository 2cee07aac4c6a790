// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "ltest/csv.hpp"
#include "ltest/standardize.hpp"

namespace ltest {

/// Point-to-point Euclidean distance between two standardized lactate curves.
inline double curve_distance(const FixedGridSeries& a, const FixedGridSeries& b) {
  if (a.lactate.size() != b.lactate.size() || a.lactate.empty())
    fail(ErrorCode::GridMismatch, "curves " + a.athlete_id + " and " + b.athlete_id +
                                      " have different grid sizes");
  double s = 0.0;
  for (std::size_t i = 0; i < a.lactate.size(); ++i) {
    const double d = a.lactate[i] - b.lactate[i];
    s += d * d;
  }
  return std::sqrt(s);
}

inline Eigen::MatrixXd distance_matrix(const std::vector<FixedGridSeries>& cohort) {
  const auto n = static_cast<Eigen::Index>(cohort.size());
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i + 1; j < n; ++j)
      d(i, j) = d(j, i) = curve_distance(cohort[static_cast<std::size_t>(i)],
                                         cohort[static_cast<std::size_t>(j)]);
  return d;
}

enum class Linkage { Single, Complete, Average };

inline Linkage parse_linkage(const std::string& s) {
  if (s == "single") return Linkage::Single;
  if (s == "complete") return Linkage::Complete;
  if (s == "average") return Linkage::Average;
  fail(ErrorCode::InvalidArgument, "unknown linkage '" + s + "'");
}

struct Merge {
  std::size_t a = 0;  // representative (lowest member index) of each side
  std::size_t b = 0;
  double height = 0.0;
  std::size_t size = 0;
};

/// Agglomeration sequence over n observations: n - 1 merges in order.
struct Dendrogram {
  std::size_t n = 0;
  std::vector<Merge> merges;
};

/// Naive O(n^3) agglomerative clustering with Lance-Williams updates.
/// Ties pick the lexicographically smallest active pair.
inline Dendrogram agglomerate(const Eigen::MatrixXd& distances, Linkage linkage = Linkage::Average) {
  const auto n = static_cast<std::size_t>(distances.rows());
  if (n == 0) fail(ErrorCode::EmptyCohort, "cannot cluster an empty cohort");
  if (distances.cols() != distances.rows())
    fail(ErrorCode::ShapeMismatch, "distance matrix must be square");
  Eigen::MatrixXd d = distances;
  std::vector<bool> active(n, true);
  std::vector<std::size_t> size(n, 1);
  Dendrogram out;
  out.n = n;
  for (std::size_t step = 0; step + 1 < n; ++step) {
    std::size_t bi = 0, bj = 0;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i) {
      if (!active[i]) continue;
      for (std::size_t j = i + 1; j < n; ++j) {
        if (!active[j]) continue;
        const double v = d(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
        if (v < best) {
          best = v;
          bi = i;
          bj = j;
        }
      }
    }
    for (std::size_t k = 0; k < n; ++k) {
      if (!active[k] || k == bi || k == bj) continue;
      const auto ik = static_cast<Eigen::Index>(k);
      const double da = d(static_cast<Eigen::Index>(bi), ik);
      const double db = d(static_cast<Eigen::Index>(bj), ik);
      double v = 0.0;
      switch (linkage) {
        case Linkage::Single: v = std::min(da, db); break;
        case Linkage::Complete: v = std::max(da, db); break;
        case Linkage::Average:
          v = (static_cast<double>(size[bi]) * da + static_cast<double>(size[bj]) * db) /
              static_cast<double>(size[bi] + size[bj]);
          break;
      }
      d(static_cast<Eigen::Index>(bi), ik) = d(ik, static_cast<Eigen::Index>(bi)) = v;
    }
    active[bj] = false;
    size[bi] += size[bj];
    out.merges.push_back({bi, bj, best, size[bi]});
  }
  return out;
}

struct Strata {
  std::vector<std::string> athlete_ids;
  std::vector<int> assignments;  // aligned with athlete_ids
  int n_strata = 0;
  double linkage_cut = 0.0;

  int stratum_of(const std::string& id) const {
    for (std::size_t i = 0; i < athlete_ids.size(); ++i)
      if (athlete_ids[i] == id) return assignments[i];
    fail(ErrorCode::UnknownAthlete, "athlete " + id + " not in strata");
  }
};

/// Labels after applying the first `n_merges` merges; labels are
/// contiguous from 0 in order of first appearance.
inline std::vector<int> cut_after(const Dendrogram& tree, std::size_t n_merges) {
  std::vector<std::size_t> parent(tree.n);
  std::iota(parent.begin(), parent.end(), std::size_t{0});
  auto find = [&](std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  for (std::size_t m = 0; m < n_merges && m < tree.merges.size(); ++m)
    parent[find(tree.merges[m].b)] = find(tree.merges[m].a);
  std::map<std::size_t, int> label;
  std::vector<int> out(tree.n);
  for (std::size_t i = 0; i < tree.n; ++i) {
    const auto root = find(i);
    auto it = label.find(root);
    if (it == label.end()) it = label.emplace(root, static_cast<int>(label.size())).first;
    out[i] = it->second;
  }
  return out;
}

/// Number of merges to apply so the cut falls in the largest gap between
/// consecutive merge heights.
inline std::size_t largest_gap_merges(const Dendrogram& tree) {
  const auto& m = tree.merges;
  if (m.size() < 2) return m.size();
  std::size_t best = m.size();
  double best_gap = -1.0;
  for (std::size_t i = 0; i + 1 < m.size(); ++i) {
    const double gap = m[i + 1].height - m[i].height;
    if (gap > best_gap) {
      best_gap = gap;
      best = i + 1;
    }
  }
  return best;
}

inline Strata hierarchical_cluster(const Eigen::MatrixXd& distances,
                                   const std::vector<std::string>& ids,
                                   Linkage linkage = Linkage::Average,
                                   std::optional<int> n_target = std::nullopt) {
  if (ids.empty()) fail(ErrorCode::EmptyCohort, "cannot cluster an empty cohort");
  if (static_cast<std::size_t>(distances.rows()) != ids.size())
    fail(ErrorCode::ShapeMismatch, "distance matrix does not match athlete list");
  const Dendrogram tree = agglomerate(distances, linkage);
  std::size_t merges = 0;
  if (n_target) {
    if (*n_target < 1 || static_cast<std::size_t>(*n_target) > ids.size())
      fail(ErrorCode::InvalidArgument, "requested strata count outside [1, cohort size]");
    merges = ids.size() - static_cast<std::size_t>(*n_target);
  } else {
    merges = largest_gap_merges(tree);
  }
  Strata s;
  s.athlete_ids = ids;
  s.assignments = cut_after(tree, merges);
  s.n_strata = static_cast<int>(ids.size() - merges);
  if (merges == 0)
    s.linkage_cut = 0.0;
  else if (merges < tree.merges.size())
    s.linkage_cut = 0.5 * (tree.merges[merges - 1].height + tree.merges[merges].height);
  else
    s.linkage_cut = tree.merges.back().height;
  return s;
}

inline Strata hierarchical_cluster(const std::vector<FixedGridSeries>& cohort,
                                   Linkage linkage = Linkage::Average,
                                   std::optional<int> n_target = std::nullopt) {
  std::vector<std::string> ids;
  for (const auto& s : cohort) ids.push_back(s.athlete_id);
  return hierarchical_cluster(distance_matrix(cohort), ids, linkage, n_target);
}

enum class SplitMethod { Knowledge, Stratified };

struct SplitPlan {
  std::vector<std::string> train_ids;
  std::vector<std::string> test_ids;
  SplitMethod method = SplitMethod::Stratified;
  std::uint64_t seed = 0;
  std::map<std::string, int> stratum_provenance;
  std::vector<std::string> warnings;

  bool in_test(const std::string& id) const {
    return std::find(test_ids.begin(), test_ids.end(), id) != test_ids.end();
  }
  double test_fraction() const {
    const auto n = train_ids.size() + test_ids.size();
    return n == 0 ? 0.0 : static_cast<double>(test_ids.size()) / static_cast<double>(n);
  }
};

inline constexpr double kDefaultTestFraction = 0.30;

/// Per-stratum test count: round-half-away of fraction * m.
inline std::size_t stratum_test_count(std::size_t m, double test_fraction) {
  return static_cast<std::size_t>(std::lround(test_fraction * static_cast<double>(m)));
}

/// Draws round(fraction * m) members of each stratum into the test set,
/// uniformly without replacement. Lists keep cohort order.
inline SplitPlan stratified_split(const Strata& strata, double test_fraction, std::uint64_t seed) {
  if (!(test_fraction >= 0.0 && test_fraction <= 1.0))
    fail(ErrorCode::InvalidArgument, "test fraction must be within [0, 1]");
  std::mt19937_64 rng(seed);
  std::vector<bool> test(strata.athlete_ids.size(), false);
  for (int k = 0; k < strata.n_strata; ++k) {
    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < strata.assignments.size(); ++i)
      if (strata.assignments[i] == k) members.push_back(i);
    std::shuffle(members.begin(), members.end(), rng);
    const auto take = stratum_test_count(members.size(), test_fraction);
    for (std::size_t j = 0; j < take; ++j) test[members[j]] = true;
  }
  SplitPlan plan;
  plan.method = SplitMethod::Stratified;
  plan.seed = seed;
  for (std::size_t i = 0; i < strata.athlete_ids.size(); ++i) {
    const auto& id = strata.athlete_ids[i];
    (test[i] ? plan.test_ids : plan.train_ids).push_back(id);
    plan.stratum_provenance[id] = strata.assignments[i];
  }
  return plan;
}

/// Split plan file rows: athlete_id,set,stratum (stratum blank when unknown).
inline std::string serialize_split(const SplitPlan& plan, const std::vector<std::string>& cohort_order) {
  std::string out = "athlete_id,set,stratum\n";
  for (const auto& id : cohort_order) {
    const bool test = plan.in_test(id);
    const bool train = std::find(plan.train_ids.begin(), plan.train_ids.end(), id) != plan.train_ids.end();
    if (!test && !train) continue;
    out += id + (test ? ",test," : ",train,");
    if (auto it = plan.stratum_provenance.find(id); it != plan.stratum_provenance.end())
      out += std::to_string(it->second);
    out += '\n';
  }
  return out;
}

/// Reads an assignment file verbatim against a cohort. Every cohort athlete
/// must appear exactly once; a test share other than the nominal fraction
/// is reported as a warning.
inline SplitPlan knowledge_split(std::string_view content, const std::vector<std::string>& cohort_ids,
                                 double nominal_fraction = kDefaultTestFraction) {
  const auto lines = csv::data_lines(content);
  if (lines.empty()) fail(ErrorCode::ParseError, "empty split file");
  const std::set<std::string> cohort(cohort_ids.begin(), cohort_ids.end());
  std::map<std::string, std::pair<bool, std::optional<int>>> rows;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto f = csv::split(lines[i].text);
    if (f.size() < 2 || f.size() > 3)
      fail(ErrorCode::ParseError, "line " + std::to_string(lines[i].number) + ": expected athlete_id,set,stratum");
    if (!cohort.count(f[0])) fail(ErrorCode::UnknownAthlete, "athlete " + f[0] + " is not in the cohort");
    if (f[1] != "train" && f[1] != "test")
      fail(ErrorCode::ParseError, "line " + std::to_string(lines[i].number) + ": set must be train or test");
    if (rows.count(f[0])) fail(ErrorCode::ParseError, "athlete " + f[0] + " assigned twice");
    std::optional<int> stratum;
    if (f.size() == 3 && !f[2].empty()) {
      auto v = csv::parse_number(f[2]);
      if (!v) fail(ErrorCode::ParseError, "line " + std::to_string(lines[i].number) + ": bad stratum");
      stratum = static_cast<int>(*v);
    }
    rows[f[0]] = {f[1] == "test", stratum};
  }
  SplitPlan plan;
  plan.method = SplitMethod::Knowledge;
  for (const auto& id : cohort_ids) {
    auto it = rows.find(id);
    if (it == rows.end()) fail(ErrorCode::MissingAthlete, "athlete " + id + " has no split assignment");
    (it->second.first ? plan.test_ids : plan.train_ids).push_back(id);
    if (it->second.second) plan.stratum_provenance[id] = *it->second.second;
  }
  const double frac = plan.test_fraction();
  const auto expected = stratum_test_count(cohort_ids.size(), nominal_fraction);
  if (plan.test_ids.size() != expected)
    plan.warnings.push_back("test fraction " + csv::format_fixed(100.0 * frac, 2) + "% differs from nominal " +
                            csv::format_fixed(100.0 * nominal_fraction, 0) + "%");
  return plan;
}

/// Share of observations whose cluster's majority label equals their own.
inline double cluster_purity(const std::vector<int>& clusters, const std::vector<int>& labels) {
  std::map<int, std::map<int, int>> counts;
  for (std::size_t i = 0; i < clusters.size(); ++i) ++counts[clusters[i]][labels[i]];
  int agree = 0;
  for (const auto& [c, m] : counts) {
    int best = 0;
    for (const auto& [l, n] : m) best = std::max(best, n);
    agree += best;
  }
  return clusters.empty() ? 0.0 : static_cast<double>(agree) / static_cast<double>(clusters.size());
}

}  // namespace ltest
