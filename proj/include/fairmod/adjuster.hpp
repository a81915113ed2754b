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

// Post-processing model that removes discrimination from binary predictions.
//
// For every E-group the division table is turned into a QP over one signed
// variable t_i per counterpart pair (i in the Dhat = 1 block, j its
// counterpart):
//
//   t_i < 0   move |t_i| tuples from division i to j (flip 1 -> 0)
//   t_i > 0   move  t_i  tuples from division j to i (flip 0 -> 1)
//   -g_i <= t_i <= g_j
//
// Flips only change Dhat, so the protected/unprotected population sizes are
// fixed and each protected attribute contributes two linear rows bounding
// its post-flip score to [-alpha, alpha]. The objective is one of three
// separable quadratics over the post-flip error count of each pair.
//
// The solution is stored per (Dhat, P...) key as the population g and the
// gross outflow x <= 0; at serving time a tuple under that key is flipped
// with probability |x| / g.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "fairmod/divisions.hpp"
#include "fairmod/error.hpp"
#include "fairmod/metrics.hpp"
#include "fairmod/qp_solver.hpp"
#include "fairmod/random.hpp"
#include "fairmod/tabular.hpp"
#include "json.hpp"

namespace fairmod {

enum class ObjectiveVariant { kNorm, kErrc, kChg };

inline const char* ObjectiveVariantName(ObjectiveVariant variant) {
  switch (variant) {
    case ObjectiveVariant::kNorm: return "norm";
    case ObjectiveVariant::kErrc: return "errc";
    case ObjectiveVariant::kChg: return "chg";
  }
  return "norm";
}

inline ObjectiveVariant ParseObjectiveVariant(const std::string& name) {
  if (name == "norm") return ObjectiveVariant::kNorm;
  if (name == "errc") return ObjectiveVariant::kErrc;
  if (name == "chg") return ObjectiveVariant::kChg;
  throw Error(ErrorKind::kInvalidArgument,
              "objective must be norm, errc or chg, got '" + name + "'");
}

struct AdjustParams {
  double alpha = 0.05;
  ObjectiveVariant variant = ObjectiveVariant::kNorm;
  std::uint64_t seed = 0;
  // Groups smaller than this are kept in the model but never adjusted.
  std::size_t min_group_size = 0;

  void Validate() const {
    if (!(alpha >= 0.0 && alpha <= 1.0)) {
      throw Error(ErrorKind::kInvalidArgument, "alpha must lie in [0, 1]");
    }
  }
};

struct FlipPlan {
  std::size_t m = 0;
  std::vector<double> t;  // one per counterpart pair
};

// Counts of the predicted outcome against P_p (1-based) in a division table.
inline CountsTable PredictedCounts(const DivisionTable& table, std::size_t p) {
  CountsTable counts;
  for (std::size_t i = 0; i < table.size(); ++i) {
    const bool dhat = PredictionBitOfDivision(i, table.m) != 0;
    const bool protected_bit = PValueOfDivision(i, p, table.m) != 0;
    auto& cell = dhat ? (protected_bit ? counts.f11 : counts.f10)
                      : (protected_bit ? counts.f01 : counts.f00);
    cell += table.g[i];
  }
  return counts;
}

// Fallback plan: flip every Dhat = 1 tuple to 0, leaving both
// favourable rates at zero for every protected attribute.
inline FlipPlan FallbackPlan(const DivisionTable& table) {
  FlipPlan plan{table.m, std::vector<double>(NumPairs(table.m))};
  for (std::size_t i = 0; i < plan.t.size(); ++i) {
    plan.t[i] = -static_cast<double>(table.g[i]);
  }
  return plan;
}

inline QpProblem AssembleProblem(const DivisionTable& table, double alpha,
                                 ObjectiveVariant variant) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) {
    throw Error(ErrorKind::kInvalidArgument, "alpha must lie in [0, 1]");
  }
  const std::size_t m = table.m;
  const std::size_t pairs = NumPairs(m);
  QpProblem problem;
  problem.n = pairs;
  problem.q.assign(pairs, 0.0);
  problem.c.assign(pairs, 0.0);
  problem.lo.resize(pairs);
  problem.hi.resize(pairs);

  for (std::size_t i = 0; i < pairs; ++i) {
    const std::size_t j = i + pairs;
    const double gi = static_cast<double>(table.g[i]);
    const double gj = static_cast<double>(table.g[j]);
    problem.lo[i] = -gi;
    problem.hi[i] = gj;
    const double pair_size = gi + gj;
    if (pair_size == 0.0) continue;
    if (variant == ObjectiveVariant::kChg) {
      problem.q[i] = 1.0;
      continue;
    }
    const double weight = variant == ObjectiveVariant::kNorm ? 1.0 / pair_size : 1.0;
    // Post-flip error count of the pair: the Dhat = 0 side of an outcome-1
    // pair, or the Dhat = 1 side of an outcome-0 pair.
    //   D = 1: (g_j - t)^2        D = 0: (g_i + t)^2
    const double offset = OutcomeBitOfDivision(i) ? -gj : gi;
    problem.q[i] = weight;
    problem.c[i] = 2.0 * weight * offset;
    problem.constant += weight * offset * offset;
  }

  std::vector<double> row(pairs);
  for (std::size_t p = 1; p <= m; ++p) {
    const CountsTable f = PredictedCounts(table, p);
    const std::uint64_t n1 = f.f11 + f.f01;
    const std::uint64_t n0 = f.f10 + f.f00;
    if (n1 == 0 || n0 == 0) continue;  // score is 0 whatever the flips
    const double inv1 = 1.0 / static_cast<double>(n1);
    const double inv0 = 1.0 / static_cast<double>(n0);
    const double score = static_cast<double>(f.f11) * inv1 -
                         static_cast<double>(f.f10) * inv0;
    for (std::size_t i = 0; i < pairs; ++i) {
      row[i] = PValueOfDivision(i, p, m) ? inv1 : -inv0;
    }
    problem.AddConstraint(row, alpha - score);
    for (auto& v : row) v = -v;
    problem.AddConstraint(row, alpha + score);
  }
  return problem;
}

// Variant objective evaluated straight from its definition.
inline double PlanObjective(const DivisionTable& table, std::span<const double> t,
                            ObjectiveVariant variant) {
  const std::size_t pairs = NumPairs(table.m);
  double total = 0.0;
  for (std::size_t i = 0; i < pairs; ++i) {
    const double gi = static_cast<double>(table.g[i]);
    const double gj = static_cast<double>(table.g[i + pairs]);
    if (variant == ObjectiveVariant::kChg) {
      total += t[i] * t[i];
      continue;
    }
    if (gi + gj == 0.0) continue;
    const double errors = OutcomeBitOfDivision(i) ? gj - t[i] : gi + t[i];
    const double divisor = variant == ObjectiveVariant::kNorm ? gi + gj : 1.0;
    total += errors * errors / divisor;
  }
  return total;
}

// One row of the per-group hash table, keyed by (Dhat, P_1..P_m).
struct AdjustmentEntry {
  Bit dhat = 0;
  BitVector p;
  double g = 0.0;
  double x = 0.0;  // minus the expected number of tuples flipped out

  friend bool operator==(const AdjustmentEntry&, const AdjustmentEntry&) = default;
};

// Position of a key in descending (Dhat, P...) order.
inline std::size_t KeyIndex(Bit dhat, std::span<const Bit> p) {
  std::size_t index = static_cast<std::size_t>(1 - dhat);
  for (Bit bit : p) index = (index << 1) | static_cast<std::size_t>(1 - bit);
  return index;
}

struct GroupDiagnostics {
  std::string status;  // solver status, or "skipped" below min_group_size
  double objective = 0.0;
  std::size_t size = 0;
  std::vector<double> scores_before;
  std::vector<double> expected_scores;
  std::vector<bool> defined;

  friend bool operator==(const GroupDiagnostics&, const GroupDiagnostics&) = default;
};

struct GroupModel {
  BitVector signature;
  std::map<std::size_t, AdjustmentEntry> entries;  // by KeyIndex
  GroupDiagnostics diagnostics;

  friend bool operator==(const GroupModel&, const GroupModel&) = default;
};

using SignatureOrder = std::greater<BitVector>;

struct FairModel {
  double alpha = 0.0;
  std::string schema_fingerprint;
  std::vector<std::string> explanatory;
  std::size_t m = 0;
  std::map<BitVector, GroupModel, SignatureOrder> groups;

  const AdjustmentEntry* Lookup(const BitVector& e_bits, Bit dhat,
                                std::span<const Bit> p_bits) const {
    auto group = groups.find(e_bits);
    if (group == groups.end()) return nullptr;
    auto entry = group->second.entries.find(KeyIndex(dhat, p_bits));
    if (entry == group->second.entries.end()) return nullptr;
    return &entry->second;
  }

  friend bool operator==(const FairModel&, const FairModel&) = default;
};

inline std::vector<AdjustmentEntry> PlanToEntries(const DivisionTable& table,
                                                  const FlipPlan& plan) {
  const std::size_t m = table.m;
  const std::size_t pairs = NumPairs(m);
  const std::size_t keys_per_side = pairs / 2;
  std::vector<AdjustmentEntry> entries(2 * keys_per_side);
  for (std::size_t k = 0; k < keys_per_side; ++k) {
    const std::size_t d1 = 2 * k;  // outcome 1
    const std::size_t d0 = 2 * k + 1;
    const auto signature = DivisionSignature(d1, m);
    const BitVector p(signature.begin() + 1, signature.end() - 1);

    AdjustmentEntry& positive = entries[k];
    positive.dhat = 1;
    positive.p = p;
    positive.g = static_cast<double>(table.g[d1] + table.g[d0]);
    positive.x = -(std::max(-plan.t[d1], 0.0) + std::max(-plan.t[d0], 0.0));

    AdjustmentEntry& negative = entries[k + keys_per_side];
    negative.dhat = 0;
    negative.p = p;
    negative.g = static_cast<double>(table.g[d1 + pairs] + table.g[d0 + pairs]);
    negative.x = -(std::max(plan.t[d1], 0.0) + std::max(plan.t[d0], 0.0));
  }
  return entries;
}

struct ExpectedScore {
  double score = 0.0;
  bool defined = false;
};

// Post-flip score of every protected attribute when each key loses |x|
// tuples to its counterpart key.
inline std::vector<ExpectedScore> ExpectedScores(
    const std::map<std::size_t, AdjustmentEntry>& entries, std::size_t m) {
  std::vector<ExpectedScore> scores(m);
  for (std::size_t p = 0; p < m; ++p) {
    double favourable[2] = {0.0, 0.0};
    double population[2] = {0.0, 0.0};
    for (const auto& [key, entry] : entries) {
      const int side = entry.p[p] ? 1 : 0;
      population[side] += entry.g;
      // Dhat = 1 keys keep g + x; Dhat = 0 keys send -x tuples to Dhat = 1.
      favourable[side] += entry.dhat ? entry.g + entry.x : -entry.x;
    }
    if (population[0] > 0.0 && population[1] > 0.0) {
      scores[p] = {favourable[1] / population[1] - favourable[0] / population[0],
                   true};
    }
  }
  return scores;
}

inline std::string DescribeSignature(const std::vector<std::string>& names,
                                     const BitVector& bits) {
  std::string text = "{";
  for (std::size_t k = 0; k < bits.size(); ++k) {
    if (k) text += ", ";
    text += names[k] + "=" + std::to_string(bits[k]);
  }
  return text + "}";
}

inline FairModel BuildModel(const BinaryDataset& dataset,
                            std::span<const Bit> predictions,
                            const AdjustParams& params) {
  params.Validate();
  if (predictions.size() != dataset.num_rows()) {
    throw Error(ErrorKind::kLengthMismatch,
                "prediction vector has " + std::to_string(predictions.size()) +
                    " entries for " + std::to_string(dataset.num_rows()) +
                    " rows");
  }
  const Schema& schema = dataset.schema();
  const std::size_t m = schema.num_protected();
  CheckProtectedCount(m);

  FairModel model;
  model.alpha = params.alpha;
  model.schema_fingerprint = schema.Fingerprint();
  model.explanatory = schema.explanatory;
  model.m = m;

  for (const EGroup& group : Stratify(dataset)) {
    if (group.size() == 0) continue;
    const DivisionTable table = BuildDivisionTable(dataset, group, predictions);
    GroupModel entry_group;
    entry_group.signature = group.SignatureBits();
    GroupDiagnostics& diag = entry_group.diagnostics;
    diag.size = group.size();
    for (std::size_t p = 1; p <= m; ++p) {
      diag.scores_before.push_back(ScoreCounts(PredictedCounts(table, p)).score);
    }

    FlipPlan plan{m, std::vector<double>(NumPairs(m), 0.0)};
    if (group.size() < params.min_group_size) {
      diag.status = "skipped";
      diag.objective = PlanObjective(table, plan.t, params.variant);
    } else {
      const QpProblem problem = AssembleProblem(table, params.alpha, params.variant);
      std::vector<double> start(problem.n, 0.0);
      if (problem.ConstraintViolation(start) > kQpFeasibilityTolerance) {
        start = FallbackPlan(table).t;
      }
      const QpSolution solution = SolveQpFrom(problem, start);
      if (solution.status != QpStatus::kOptimal) {
        throw Error(ErrorKind::kSolverFailure,
                    "group " + DescribeSignature(schema.explanatory,
                                                 entry_group.signature) +
                        ": solver returned " + QpStatusName(solution.status));
      }
      plan.t = solution.x;
      diag.status = QpStatusName(solution.status);
      diag.objective = solution.objective;
    }

    for (auto& entry : PlanToEntries(table, plan)) {
      entry_group.entries.emplace(KeyIndex(entry.dhat, entry.p), std::move(entry));
    }
    for (const auto& score : ExpectedScores(entry_group.entries, m)) {
      diag.expected_scores.push_back(score.score);
      diag.defined.push_back(score.defined);
    }
    model.groups.emplace(entry_group.signature, std::move(entry_group));
  }
  return model;
}

struct AdjustOutcome {
  Bit prediction = 0;
  bool flipped = false;
  bool pass_through = false;
};

// Flips d_hat with probability |x| / g of its entry. Rows whose group or key
// is unknown to the model pass through unchanged.
inline AdjustOutcome AdjustPrediction(const FairModel& model,
                                      std::span<const Bit> p_bits,
                                      const BitVector& e_bits, Bit d_hat,
                                      CounterRng& rng) {
  const AdjustmentEntry* entry = model.Lookup(e_bits, d_hat, p_bits);
  if (entry == nullptr) return {d_hat, false, true};
  if (entry->x < 0.0 && entry->g > 0.0) {
    const double rd = rng.NextUniform();
    if (rd < -entry->x / entry->g) return {static_cast<Bit>(1 - d_hat), true, false};
  }
  return {d_hat, false, false};
}

struct AdjustCounters {
  std::size_t flips = 0;
  std::size_t pass_throughs = 0;
  std::size_t rows = 0;
};

struct AdjustResult {
  BitVector adjusted;
  AdjustCounters counters;
};

inline AdjustResult AdjustBatch(const FairModel& model, const BinaryDataset& dataset,
                                std::span<const Bit> predictions,
                                std::uint64_t seed) {
  if (predictions.size() != dataset.num_rows()) {
    throw Error(ErrorKind::kLengthMismatch,
                "prediction vector has " + std::to_string(predictions.size()) +
                    " entries for " + std::to_string(dataset.num_rows()) +
                    " rows");
  }
  const Schema& schema = dataset.schema();
  if (schema.Fingerprint() != model.schema_fingerprint) {
    throw Error(ErrorKind::kFingerprintMismatch,
                "model was built for schema " + model.schema_fingerprint +
                    ", data has " + schema.Fingerprint());
  }
  std::vector<std::size_t> pcols, ecols;
  for (const auto& name : schema.protected_attrs) pcols.push_back(dataset.ColumnIndex(name));
  for (const auto& name : schema.explanatory) ecols.push_back(dataset.ColumnIndex(name));

  AdjustResult result;
  result.adjusted.resize(dataset.num_rows());
  BitVector p_bits(pcols.size());
  BitVector e_bits(ecols.size());
  for (std::size_t r = 0; r < dataset.num_rows(); ++r) {
    for (std::size_t k = 0; k < pcols.size(); ++k) p_bits[k] = dataset.at(r, pcols[k]);
    for (std::size_t k = 0; k < ecols.size(); ++k) e_bits[k] = dataset.at(r, ecols[k]);
    CounterRng rng = CounterRng::ForStream(seed, r);
    const AdjustOutcome outcome =
        AdjustPrediction(model, p_bits, e_bits, predictions[r], rng);
    result.adjusted[r] = outcome.prediction;
    result.counters.flips += outcome.flipped;
    result.counters.pass_throughs += outcome.pass_through;
  }
  result.counters.rows = dataset.num_rows();
  return result;
}

inline constexpr int kModelFormatVersion = 1;

inline std::string SaveModel(const FairModel& model) {
  using nlohmann::ordered_json;
  ordered_json doc;
  doc["version"] = kModelFormatVersion;
  doc["alpha"] = model.alpha;
  doc["schema_fingerprint"] = model.schema_fingerprint;
  ordered_json groups = ordered_json::array();
  for (const auto& [bits, group] : model.groups) {
    ordered_json signature = ordered_json::object();
    for (std::size_t k = 0; k < bits.size(); ++k) {
      signature[model.explanatory[k]] = bits[k];
    }
    ordered_json entries = ordered_json::array();
    for (const auto& [key, entry] : group.entries) {
      entries.push_back(ordered_json{
          {"dhat", entry.dhat}, {"p", entry.p}, {"g", entry.g}, {"x", entry.x}});
    }
    const auto& diag = group.diagnostics;
    ordered_json diagnostics = {{"status", diag.status},
                                {"objective", diag.objective},
                                {"size", diag.size},
                                {"scores_before", diag.scores_before},
                                {"expected_scores", diag.expected_scores},
                                {"defined", diag.defined}};
    groups.push_back(ordered_json{{"signature", std::move(signature)},
                                  {"entries", std::move(entries)},
                                  {"diagnostics", std::move(diagnostics)}});
  }
  doc["groups"] = std::move(groups);
  return doc.dump(1) + "\n";
}

inline FairModel LoadModel(std::string_view text) {
  using nlohmann::ordered_json;
  ordered_json doc;
  try {
    doc = ordered_json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::kMalformedInput, std::string("model: ") + e.what());
  }
  FairModel model;
  try {
    if (!doc.is_object() || !doc.contains("version")) {
      throw Error(ErrorKind::kMalformedInput, "model has no version");
    }
    const int version = doc.at("version").get<int>();
    if (version != kModelFormatVersion) {
      throw Error(ErrorKind::kVersionMismatch,
                  "model version " + std::to_string(version) + ", expected " +
                      std::to_string(kModelFormatVersion));
    }
    model.alpha = doc.at("alpha").get<double>();
    model.schema_fingerprint = doc.at("schema_fingerprint").get<std::string>();
    bool first = true;
    for (const auto& group_doc : doc.at("groups")) {
      GroupModel group;
      std::vector<std::string> names;
      for (const auto& [name, bit] : group_doc.at("signature").items()) {
        names.push_back(name);
        const int value = bit.get<int>();
        if (value != 0 && value != 1) {
          throw Error(ErrorKind::kMalformedInput, "signature bit is not 0/1");
        }
        group.signature.push_back(static_cast<Bit>(value));
      }
      if (first) {
        model.explanatory = names;
      } else if (names != model.explanatory) {
        throw Error(ErrorKind::kMalformedInput,
                    "groups disagree on explanatory columns");
      }
      for (const auto& entry_doc : group_doc.at("entries")) {
        AdjustmentEntry entry;
        const int dhat = entry_doc.at("dhat").get<int>();
        if (dhat != 0 && dhat != 1) {
          throw Error(ErrorKind::kMalformedInput, "dhat is not 0/1");
        }
        entry.dhat = static_cast<Bit>(dhat);
        for (const auto& bit : entry_doc.at("p")) {
          const int value = bit.get<int>();
          if (value != 0 && value != 1) {
            throw Error(ErrorKind::kMalformedInput, "protected bit is not 0/1");
          }
          entry.p.push_back(static_cast<Bit>(value));
        }
        entry.g = entry_doc.at("g").get<double>();
        entry.x = entry_doc.at("x").get<double>();
        if (first && group.entries.empty()) {
          model.m = entry.p.size();
        } else if (entry.p.size() != model.m) {
          throw Error(ErrorKind::kMalformedInput,
                      "entries disagree on the protected attribute count");
        }
        if (!(entry.g >= 0.0) || !(entry.x <= 0.0) || !(entry.x >= -entry.g)) {
          throw Error(ErrorKind::kMalformedInput,
                      "entry violates -g <= x <= 0 with g >= 0");
        }
        const std::size_t key = KeyIndex(entry.dhat, entry.p);
        if (!group.entries.emplace(key, std::move(entry)).second) {
          throw Error(ErrorKind::kMalformedInput, "duplicate entry key");
        }
      }
      if (group_doc.contains("diagnostics")) {
        const auto& d = group_doc.at("diagnostics");
        auto& diag = group.diagnostics;
        diag.status = d.at("status").get<std::string>();
        diag.objective = d.at("objective").get<double>();
        diag.size = d.at("size").get<std::size_t>();
        diag.scores_before = d.at("scores_before").get<std::vector<double>>();
        diag.expected_scores = d.at("expected_scores").get<std::vector<double>>();
        diag.defined = d.at("defined").get<std::vector<bool>>();
      }
      first = false;
      BitVector key = group.signature;
      if (!model.groups.emplace(std::move(key), std::move(group)).second) {
        throw Error(ErrorKind::kMalformedInput, "duplicate group signature");
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::kMalformedInput, std::string("model: ") + e.what());
  }
  return model;
}

}  // namespace fairmod
