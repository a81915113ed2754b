/*
 * Copyright 2026 The FairMod Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// Discrimination scores (per stratum, per dataset, overall) and the
// evaluation figures used to compare raw and adjusted predictions.
//
// The score of a protected attribute P inside a stratum e is
//
//   delta(P, e) = f11 / (f11 + f01) - f10 / (f10 + f00)
//
// i.e. the favourable-outcome rate of the protected side minus that of the
// unprotected side. A stratum with no tuples on one side scores 0 and is
// flagged as undefined. Dataset scores are stratum-size weighted averages,
// and the overall score is the largest absolute dataset score over P.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "fairmod/error.hpp"
#include "fairmod/tabular.hpp"
#include "json.hpp"

namespace fairmod {

struct DivisionScore {
  double score = 0.0;
  bool defined = false;
};

inline DivisionScore ScoreCounts(const CountsTable& counts) {
  const std::uint64_t protected_side = counts.f11 + counts.f01;
  const std::uint64_t unprotected_side = counts.f10 + counts.f00;
  if (protected_side == 0 || unprotected_side == 0) return {0.0, false};
  return {static_cast<double>(counts.f11) / static_cast<double>(protected_side) -
              static_cast<double>(counts.f10) /
                  static_cast<double>(unprotected_side),
          true};
}

struct GroupScore {
  std::string protected_col;
  std::vector<std::pair<std::string, Bit>> group_signature;
  double score = 0.0;
  std::size_t group_size = 0;
  bool defined = false;
};

// One score per (E-group, protected attribute), group-major, protected
// attributes in schema order.
inline std::vector<GroupScore> ComputeGroupScores(
    const BinaryDataset& dataset, const std::vector<EGroup>& groups,
    std::span<const Bit> outcome) {
  if (outcome.size() != dataset.num_rows()) {
    throw Error(ErrorKind::kLengthMismatch,
                "outcome vector has " + std::to_string(outcome.size()) +
                    " entries for " + std::to_string(dataset.num_rows()) +
                    " rows");
  }
  const auto& protected_attrs = dataset.schema().protected_attrs;
  std::vector<BitVector> protected_cols;
  for (const auto& name : protected_attrs) {
    protected_cols.push_back(dataset.Column(name));
  }
  std::vector<GroupScore> scores;
  scores.reserve(groups.size() * protected_attrs.size());
  for (const auto& group : groups) {
    for (std::size_t p = 0; p < protected_attrs.size(); ++p) {
      const auto result =
          ScoreCounts(CountsOf(outcome, protected_cols[p], group.row_indices));
      scores.push_back(GroupScore{protected_attrs[p], group.signature,
                                  result.score, group.size(), result.defined});
    }
  }
  return scores;
}

inline std::vector<GroupScore> ComputeGroupScores(
    const BinaryDataset& dataset, const std::vector<EGroup>& groups,
    const std::string& outcome_col) {
  const BitVector outcome = dataset.Column(outcome_col);
  return ComputeGroupScores(dataset, groups, outcome);
}

// Size-weighted average of the stratum scores of one protected attribute.
inline double DatasetScore(std::span<const GroupScore> scores,
                           std::size_t total_rows) {
  if (total_rows == 0) return 0.0;
  double sum = 0.0;
  for (const auto& s : scores) sum += s.score * static_cast<double>(s.group_size);
  return sum / static_cast<double>(total_rows);
}

// Largest |delta(P, r)| over the protected attributes.
inline double OverallScore(const std::map<std::string, double>& per_protected) {
  if (per_protected.empty()) {
    throw Error(ErrorKind::kInvalidArgument, "no protected attributes");
  }
  double worst = 0.0;
  for (const auto& [name, score] : per_protected) {
    worst = std::max(worst, std::abs(score));
  }
  return worst;
}

struct OverLimitStats {
  double ogds = 0.0;
  double og_pct = 0.0;
  double wgds = 0.0;
  double wg_pct = 0.0;
};

// `severities[k]` is max_P |delta(P, e_k)| over the defined scores of group k;
// groups are given in signature order so the first maximum wins ties.
inline OverLimitStats ComputeOverLimitStats(std::span<const double> severities,
                                            std::span<const std::size_t> sizes,
                                            std::size_t total_rows,
                                            double alpha) {
  if (severities.size() != sizes.size()) {
    throw Error(ErrorKind::kLengthMismatch, "severity/size count mismatch");
  }
  OverLimitStats stats;
  if (severities.empty() || total_rows == 0) return stats;
  double over_sum = 0.0;
  std::size_t over_count = 0;
  std::size_t over_rows = 0;
  std::size_t worst = 0;
  for (std::size_t k = 0; k < severities.size(); ++k) {
    if (severities[k] > alpha) {
      over_sum += severities[k];
      ++over_count;
      over_rows += sizes[k];
    }
    if (severities[k] > severities[worst]) worst = k;
  }
  const double n = static_cast<double>(total_rows);
  if (over_count) {
    stats.ogds = over_sum / static_cast<double>(over_count);
    stats.og_pct = static_cast<double>(over_rows) / n;
  }
  stats.wgds = severities[worst];
  stats.wg_pct = static_cast<double>(sizes[worst]) / n;
  return stats;
}

struct DiscriminationReport {
  std::vector<std::string> protected_order;
  std::map<std::string, double> per_protected_global;
  double overall = 0.0;
  double alpha = 0.0;
  std::vector<GroupScore> per_group;
  std::size_t num_protected = 0;
  double ogds = 0.0;
  double og_pct = 0.0;
  double wgds = 0.0;
  double wg_pct = 0.0;
};

inline DiscriminationReport BuildDiscriminationReport(
    const BinaryDataset& dataset, const std::vector<EGroup>& groups,
    std::span<const Bit> outcome, double alpha) {
  DiscriminationReport report;
  report.alpha = alpha;
  report.protected_order = dataset.schema().protected_attrs;
  report.num_protected = report.protected_order.size();
  report.per_group = ComputeGroupScores(dataset, groups, outcome);

  const std::size_t m = report.num_protected;
  const std::size_t total = dataset.num_rows();
  for (std::size_t p = 0; p < m; ++p) {
    std::vector<GroupScore> column;
    column.reserve(groups.size());
    for (std::size_t g = 0; g < groups.size(); ++g) {
      column.push_back(report.per_group[g * m + p]);
    }
    report.per_protected_global[report.protected_order[p]] =
        DatasetScore(column, total);
  }
  report.overall = OverallScore(report.per_protected_global);

  std::vector<double> severities(groups.size(), 0.0);
  std::vector<std::size_t> sizes(groups.size());
  for (std::size_t g = 0; g < groups.size(); ++g) {
    sizes[g] = groups[g].size();
    for (std::size_t p = 0; p < m; ++p) {
      const auto& s = report.per_group[g * m + p];
      if (s.defined) severities[g] = std::max(severities[g], std::abs(s.score));
    }
  }
  const auto stats = ComputeOverLimitStats(severities, sizes, total, alpha);
  report.ogds = stats.ogds;
  report.og_pct = stats.og_pct;
  report.wgds = stats.wgds;
  report.wg_pct = stats.wg_pct;
  return report;
}

struct DiscriminationLabels {
  std::vector<bool> group_discriminated;  // aligned with per_group
  std::map<std::string, bool> globally_discriminated;
  bool discriminatory = false;
  bool safe = false;
  bool free = false;
};

// All comparisons against alpha are strict: a score equal to alpha is safe.
inline DiscriminationLabels ClassifyDiscrimination(
    const DiscriminationReport& report, double alpha) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) {
    throw Error(ErrorKind::kInvalidArgument, "alpha must lie in [0, 1]");
  }
  DiscriminationLabels labels;
  for (const auto& s : report.per_group) {
    labels.group_discriminated.push_back(std::abs(s.score) > alpha);
  }
  for (const auto& [name, score] : report.per_protected_global) {
    labels.globally_discriminated[name] = std::abs(score) > alpha;
  }
  labels.discriminatory = std::abs(report.overall) > alpha;
  labels.safe = !labels.discriminatory;
  labels.free = report.overall == 0.0;
  return labels;
}

struct AccuracyReport {
  double bcr = 1.0;
  double err = 0.0;
  double ces = 0.0;
  // Set when the actual labels hold a single class and BCR falls back to the
  // one defined rate.
  bool bcr_fallback = false;
};

inline double CombinedEvaluationScore(double glbds, const OverLimitStats& stats,
                                      double err, double bcr) {
  return ((glbds + stats.ogds * stats.og_pct + stats.wgds * stats.wg_pct) /
              3.0 +
          err) /
         bcr;
}

inline AccuracyReport ComputeAccuracyReport(
    std::span<const Bit> actual, std::span<const Bit> predicted,
    const DiscriminationReport& discrimination) {
  if (actual.size() != predicted.size()) {
    throw Error(ErrorKind::kLengthMismatch,
                "actual and predicted label counts differ");
  }
  if (actual.empty()) {
    throw Error(ErrorKind::kInvalidArgument, "no labels to evaluate");
  }
  std::size_t tp = 0, fn = 0, tn = 0, fp = 0;
  for (std::size_t i = 0; i < actual.size(); ++i) {
    if (actual[i]) {
      predicted[i] ? ++tp : ++fn;
    } else {
      predicted[i] ? ++fp : ++tn;
    }
  }
  AccuracyReport report;
  const std::size_t positives = tp + fn;
  const std::size_t negatives = tn + fp;
  if (positives && negatives) {
    report.bcr = 0.5 * (static_cast<double>(tp) / positives +
                        static_cast<double>(tn) / negatives);
  } else {
    report.bcr_fallback = true;
    report.bcr = positives ? static_cast<double>(tp) / positives
                           : static_cast<double>(tn) / negatives;
  }
  report.err = static_cast<double>(fp + fn) / static_cast<double>(actual.size());
  report.ces = CombinedEvaluationScore(
      discrimination.overall,
      {discrimination.ogds, discrimination.og_pct, discrimination.wgds,
       discrimination.wg_pct},
      report.err, report.bcr);
  return report;
}

inline nlohmann::json SignatureToJson(
    const std::vector<std::pair<std::string, Bit>>& signature) {
  nlohmann::json object = nlohmann::json::object();
  for (const auto& [name, bit] : signature) object[name] = bit;
  return object;
}

// Serializes one report row. Rows describing the actual outcome carry no
// accuracy figures, so bcr/err are omitted and ces uses BCR = 1, Err = 0.
inline nlohmann::json ReportToJson(const DiscriminationReport& report,
                                   const std::optional<AccuracyReport>& accuracy) {
  nlohmann::json row = nlohmann::json::object();
  row["glbds"] = report.overall;
  row["ogds"] = report.ogds;
  row["og_pct"] = report.og_pct;
  row["wgds"] = report.wgds;
  row["wg_pct"] = report.wg_pct;
  if (accuracy) {
    row["bcr"] = accuracy->bcr;
    row["err"] = accuracy->err;
    row["ces"] = accuracy->ces;
  } else {
    row["ces"] = CombinedEvaluationScore(
        report.overall,
        {report.ogds, report.og_pct, report.wgds, report.wg_pct}, 0.0, 1.0);
  }
  nlohmann::json per_protected = nlohmann::json::object();
  for (const auto& name : report.protected_order) {
    per_protected[name] = report.per_protected_global.at(name);
  }
  row["per_protected"] = std::move(per_protected);
  nlohmann::json per_group = nlohmann::json::array();
  for (const auto& s : report.per_group) {
    per_group.push_back({{"protected", s.protected_col},
                         {"signature", SignatureToJson(s.group_signature)},
                         {"score", s.score},
                         {"size", s.group_size},
                         {"defined", s.defined},
                         {"over_limit", std::abs(s.score) > report.alpha}});
  }
  row["per_group"] = std::move(per_group);
  return row;
}

}  // namespace fairmod
