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

// Brute-force reference computations for toy-sized inputs. Nothing here
// shares code with the scoring or the solver it is meant to check.

#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "fairmod/adjuster.hpp"
#include "fairmod/divisions.hpp"
#include "fairmod/error.hpp"
#include "fairmod/tabular.hpp"

namespace fairmod::oracle {

struct StratumScore {
  std::string protected_col;
  BitVector signature;
  double score = 0.0;
};

// Scores every (E-signature, protected attribute) by filtering rows for each
// conditional probability separately.
inline std::vector<StratumScore> BruteForceScores(const BinaryDataset& dataset,
                                                  std::span<const Bit> outcome) {
  const Schema& schema = dataset.schema();
  std::set<BitVector, std::greater<>> signatures;
  for (std::size_t r = 0; r < dataset.num_rows(); ++r) {
    BitVector sig;
    for (const auto& name : schema.explanatory) {
      sig.push_back(dataset.at(r, dataset.ColumnIndex(name)));
    }
    signatures.insert(sig);
  }
  if (signatures.empty()) signatures.insert(BitVector(schema.explanatory.size(), 0));

  auto in_stratum = [&](std::size_t r, const BitVector& sig) {
    for (std::size_t k = 0; k < schema.explanatory.size(); ++k) {
      if (dataset.at(r, dataset.ColumnIndex(schema.explanatory[k])) != sig[k]) {
        return false;
      }
    }
    return true;
  };
  // P(D = 1 | P = value, E = sig), or nullopt-like NaN when the condition is
  // empty.
  auto conditional = [&](const std::string& pname, Bit value, const BitVector& sig) {
    std::size_t matching = 0, favourable = 0;
    for (std::size_t r = 0; r < dataset.num_rows(); ++r) {
      if (!in_stratum(r, sig)) continue;
      if (dataset.at(r, dataset.ColumnIndex(pname)) != value) continue;
      ++matching;
      if (outcome[r] == 1) ++favourable;
    }
    if (matching == 0) return std::numeric_limits<double>::quiet_NaN();
    return static_cast<double>(favourable) / static_cast<double>(matching);
  };

  std::vector<StratumScore> scores;
  for (const auto& sig : signatures) {
    for (const auto& pname : schema.protected_attrs) {
      const double protected_rate = conditional(pname, 1, sig);
      const double other_rate = conditional(pname, 0, sig);
      double score = 0.0;
      if (!std::isnan(protected_rate) && !std::isnan(other_rate)) {
        score = protected_rate - other_rate;
      }
      scores.push_back({pname, sig, score});
    }
  }
  return scores;
}

inline std::vector<StratumScore> BruteForceScores(const BinaryDataset& dataset) {
  const BitVector outcome = dataset.Outcome();
  return BruteForceScores(dataset, outcome);
}

struct OracleResult {
  double best_objective = std::numeric_limits<double>::infinity();
  std::vector<std::int64_t> best_plan;
  std::uint64_t feasible_count = 0;
};

inline constexpr std::size_t kOracleMaxProtected = 2;
inline constexpr std::uint64_t kOracleMaxCount = 6;

// Tries every integer flip vector in the box, applies it to the division
// table, recomputes the post-flip scores from the flipped counts and keeps
// the best plan whose scores all lie within alpha.
inline OracleResult EnumerateFlipPlans(const DivisionTable& table, double alpha,
                                       ObjectiveVariant variant) {
  const std::size_t m = table.m;
  if (m > kOracleMaxProtected) {
    throw Error(ErrorKind::kSearchSpaceTooLarge,
                "oracle supports at most " + std::to_string(kOracleMaxProtected) +
                    " protected attributes");
  }
  for (auto g : table.g) {
    if (g > kOracleMaxCount) {
      throw Error(ErrorKind::kSearchSpaceTooLarge,
                  "oracle supports division counts up to " +
                      std::to_string(kOracleMaxCount));
    }
  }
  const std::size_t half = table.size() / 2;  // number of pairs

  // Protected bits of each Dhat = 1 division, read off the sorted layout.
  std::vector<BitVector> pbits(half);
  for (std::size_t i = 0; i < half; ++i) {
    const BitVector sig = DivisionSignature(i, m);
    pbits[i].assign(sig.begin() + 1, sig.end() - 1);
  }
  // Favourable-prediction and population counts per (attribute, side).
  std::vector<std::int64_t> favourable0(2 * m, 0), population(2 * m, 0);
  for (std::size_t i = 0; i < table.size(); ++i) {
    const BitVector sig = DivisionSignature(i, m);
    for (std::size_t p = 0; p < m; ++p) {
      const std::size_t slot = 2 * p + sig[1 + p];
      population[slot] += static_cast<std::int64_t>(table.g[i]);
      if (sig[0] == 1) favourable0[slot] += static_cast<std::int64_t>(table.g[i]);
    }
  }

  auto term = [&](std::size_t i, std::int64_t t) {
    const double gi = static_cast<double>(table.g[i]);
    const double gj = static_cast<double>(table.g[i + half]);
    const double flips = static_cast<double>(t);
    if (variant == ObjectiveVariant::kChg) return flips * flips;
    if (gi + gj == 0.0) return 0.0;
    // Outcome-1 pair: errors are the Dhat = 0 tuples left behind; outcome-0
    // pair: errors are the Dhat = 1 tuples.
    const bool outcome_one = DivisionSignature(i, m).back() == 1;
    const double errors = outcome_one ? gj - flips : gi + flips;
    const double divisor = variant == ObjectiveVariant::kNorm ? gi + gj : 1.0;
    return errors * errors / divisor;
  };

  OracleResult result;
  std::vector<std::int64_t> plan(half, 0);
  std::vector<std::int64_t> favourable = favourable0;

  std::function<void(std::size_t, double)> descend = [&](std::size_t i,
                                                         double objective) {
    if (i == half) {
      for (std::size_t p = 0; p < m; ++p) {
        if (population[2 * p] == 0 || population[2 * p + 1] == 0) continue;
        const double score =
            static_cast<double>(favourable[2 * p + 1]) /
                static_cast<double>(population[2 * p + 1]) -
            static_cast<double>(favourable[2 * p]) /
                static_cast<double>(population[2 * p]);
        if (std::abs(score) > alpha + 1e-12) return;
      }
      ++result.feasible_count;
      if (objective < result.best_objective) {
        result.best_objective = objective;
        result.best_plan = plan;
      }
      return;
    }
    const auto lo = -static_cast<std::int64_t>(table.g[i]);
    const auto hi = static_cast<std::int64_t>(table.g[i + half]);
    for (std::int64_t t = lo; t <= hi; ++t) {
      plan[i] = t;
      for (std::size_t p = 0; p < m; ++p) favourable[2 * p + pbits[i][p]] += t;
      descend(i + 1, objective + term(i, t));
      for (std::size_t p = 0; p < m; ++p) favourable[2 * p + pbits[i][p]] -= t;
    }
    plan[i] = 0;
  };
  descend(0, 0.0);
  return result;
}

}  // namespace fairmod::oracle
