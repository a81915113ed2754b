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

// Offline stand-in for the binarized German credit data: same column layout
// and roughly the same per-column rates, with a logistic outcome that leans
// on a handful of attributes (including the protected ones).

#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "fairmod/random.hpp"
#include "fairmod/tabular.hpp"

namespace fairmod::synthetic {

struct ColumnSpec {
  const char* name;
  double rate;    // P(column = 1)
  double effect;  // log-odds contribution to the outcome
};

inline constexpr std::array<ColumnSpec, 3> kGermanProtected{{
    {"age35", 0.43, 0.45},
    {"single", 0.55, 0.35},
    {"foreign", 0.96, -0.9},
}};

inline constexpr std::array<ColumnSpec, 18> kGermanExplanatory{{
    {"chkAccBal", 0.39, 1.4},
    {"duration20m", 0.45, -0.7},
    {"creditHistGood", 0.53, 0.5},
    {"purposeCar", 0.34, -0.2},
    {"credit2320", 0.50, -0.3},
    {"savings500", 0.11, 0.8},
    {"emp4y", 0.40, 0.3},
    {"installPct3", 0.63, -0.25},
    {"sexM", 0.69, 0.2},
    {"guarantor", 0.05, 0.5},
    {"resid3y", 0.55, 0.0},
    {"propertyYes", 0.85, 0.3},
    {"instPlanNon", 0.81, 0.45},
    {"houseOwn", 0.71, 0.4},
    {"creditAcc", 0.37, 0.1},
    {"jobSkilled", 0.63, 0.0},
    {"people2", 0.16, 0.0},
    {"hasTel", 0.40, 0.2},
}};

inline constexpr const char* kGermanOutcome = "approved";

inline Schema GermanCreditSchema() {
  Schema schema;
  schema.outcome = kGermanOutcome;
  for (const auto& c : kGermanProtected) schema.protected_attrs.emplace_back(c.name);
  for (const auto& c : kGermanExplanatory) schema.explanatory.emplace_back(c.name);
  return schema;
}

// Intercept tuned so that about 70% of rows are approved.
inline BinaryDataset GenerateGermanCreditLike(std::size_t rows, std::uint64_t seed,
                                              const Schema& schema = GermanCreditSchema()) {
  std::vector<std::string> columns;
  for (const auto& c : kGermanProtected) columns.emplace_back(c.name);
  for (const auto& c : kGermanExplanatory) columns.emplace_back(c.name);
  columns.emplace_back(kGermanOutcome);

  constexpr double kIntercept = 0.17;
  std::vector<Bit> cells;
  cells.reserve(rows * columns.size());
  for (std::size_t r = 0; r < rows; ++r) {
    CounterRng rng = CounterRng::ForStream(seed, r);
    double logit = kIntercept;
    auto draw = [&](const ColumnSpec& spec) {
      const Bit bit = rng.NextUniform() < spec.rate ? 1 : 0;
      // Centre the effect so the column's rate does not shift the intercept.
      logit += spec.effect * (bit - spec.rate);
      cells.push_back(bit);
    };
    for (const auto& c : kGermanProtected) draw(c);
    for (const auto& c : kGermanExplanatory) draw(c);
    const double p_approved = 1.0 / (1.0 + std::exp(-(logit + std::log(0.7 / 0.3))));
    cells.push_back(rng.NextUniform() < p_approved ? 1 : 0);
  }
  return BinaryDataset(std::move(columns), std::move(cells), schema);
}

}  // namespace fairmod::synthetic
