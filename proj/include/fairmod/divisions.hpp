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

// (prediction, protected..., outcome) division table of one E-group.
//
// With m protected attributes there are 2^(m+2) divisions, sorted by the
// signature (Dhat, P_1, ..., P_m, D) in descending order. Division i therefore
// has signature bits equal to the complement of the binary expansion of i over
// m+2 positions (Dhat most significant, D least significant): division 0 is
// all ones and the last division is all zeros.
//
// Flipping a prediction moves a tuple between a division and its counterpart,
// the division that differs only in Dhat, which sits 2^(m+1) rows away.

#pragma once

#include <cstddef>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "fairmod/error.hpp"
#include "fairmod/tabular.hpp"

namespace fairmod {

inline constexpr std::size_t kMaxProtectedAttributes = 10;

inline void CheckProtectedCount(std::size_t m) {
  if (m == 0 || m > kMaxProtectedAttributes) {
    throw Error(ErrorKind::kInvalidArgument,
                "protected attribute count must be in [1, " +
                    std::to_string(kMaxProtectedAttributes) + "], got " +
                    std::to_string(m));
  }
}

inline std::size_t NumDivisions(std::size_t m) { return std::size_t{1} << (m + 2); }

// Half the table: the Dhat = 1 block, also the number of counterpart pairs.
inline std::size_t NumPairs(std::size_t m) { return std::size_t{1} << (m + 1); }

inline std::size_t Counterpart(std::size_t i, std::size_t m) {
  if (i >= NumDivisions(m)) {
    throw Error(ErrorKind::kIndexOutOfRange,
                "division " + std::to_string(i) + " out of range for m=" +
                    std::to_string(m));
  }
  return (i + NumPairs(m)) % NumDivisions(m);
}

// Number of consecutive divisions sharing the same value of P_p (1-based p).
inline std::size_t RunLength(std::size_t p, std::size_t m) {
  if (p < 1 || p > m) {
    throw Error(ErrorKind::kIndexOutOfRange,
                "protected position " + std::to_string(p) + " not in [1, " +
                    std::to_string(m) + "]");
  }
  return std::size_t{1} << (m + 1 - p);
}

// Value of P_p in division i: 1 when the run number i / l_p is even.
inline Bit PValueOfDivision(std::size_t i, std::size_t p, std::size_t m) {
  return (i / RunLength(p, m)) % 2 == 0 ? 1 : 0;
}

// Bits (Dhat, P_1..P_m, D) of division i.
inline BitVector DivisionSignature(std::size_t i, std::size_t m) {
  BitVector bits(m + 2);
  for (std::size_t k = 0; k < m + 2; ++k) {
    const std::size_t shift = m + 1 - k;
    bits[k] = static_cast<Bit>(1 - ((i >> shift) & 1U));
  }
  return bits;
}

inline Bit PredictionBitOfDivision(std::size_t i, std::size_t m) {
  return static_cast<Bit>(1 - ((i >> (m + 1)) & 1U));
}

inline Bit OutcomeBitOfDivision(std::size_t i) {
  return static_cast<Bit>(1 - (i & 1U));
}

inline std::size_t DivisionIndex(Bit dhat, std::span<const Bit> protected_bits,
                                 Bit d) {
  std::size_t index = static_cast<std::size_t>(1 - dhat);
  for (Bit p : protected_bits) index = (index << 1) | static_cast<std::size_t>(1 - p);
  return (index << 1) | static_cast<std::size_t>(1 - d);
}

struct DivisionTable {
  std::size_t m = 0;
  std::vector<std::uint64_t> g;

  std::size_t size() const { return g.size(); }

  std::uint64_t total() const {
    return std::accumulate(g.begin(), g.end(), std::uint64_t{0});
  }

  static DivisionTable Empty(std::size_t m) {
    CheckProtectedCount(m);
    return DivisionTable{m, std::vector<std::uint64_t>(NumDivisions(m), 0)};
  }
};

inline DivisionTable BuildDivisionTable(const BinaryDataset& dataset,
                                        const EGroup& group,
                                        std::span<const Bit> predictions) {
  if (predictions.size() != dataset.num_rows()) {
    throw Error(ErrorKind::kLengthMismatch,
                "prediction vector has " + std::to_string(predictions.size()) +
                    " entries for " + std::to_string(dataset.num_rows()) +
                    " rows");
  }
  const auto& schema = dataset.schema();
  DivisionTable table = DivisionTable::Empty(schema.num_protected());
  std::vector<std::size_t> pcols;
  for (const auto& name : schema.protected_attrs) {
    pcols.push_back(dataset.ColumnIndex(name));
  }
  const std::size_t dcol = dataset.ColumnIndex(schema.outcome);
  BitVector pbits(pcols.size());
  for (std::size_t r : group.row_indices) {
    for (std::size_t k = 0; k < pcols.size(); ++k) pbits[k] = dataset.at(r, pcols[k]);
    ++table.g[DivisionIndex(predictions[r], pbits, dataset.at(r, dcol))];
  }
  return table;
}

// Debug dump: one line per division in index order.
inline std::string DivisionTableToCsv(const DivisionTable& table) {
  std::string out = "i,dhat";
  for (std::size_t p = 1; p <= table.m; ++p) out += ",p" + std::to_string(p);
  out += ",d,g\n";
  for (std::size_t i = 0; i < table.size(); ++i) {
    out += std::to_string(i);
    for (Bit bit : DivisionSignature(i, table.m)) {
      out += ',';
      out += static_cast<char>('0' + bit);
    }
    out += ',' + std::to_string(table.g[i]) + '\n';
  }
  return out;
}

}  // namespace fairmod
