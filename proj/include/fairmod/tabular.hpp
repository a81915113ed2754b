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

// Binary tabular data: schema roles, CSV ingestion, stratification by the
// explanatory attributes and the per-stratum outcome x protected counts.

#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "fairmod/error.hpp"
#include "json.hpp"

namespace fairmod {

using Bit = std::uint8_t;
using BitVector = std::vector<Bit>;

namespace internal {

inline std::string_view StripCr(std::string_view line) {
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  return line;
}

inline std::vector<std::string_view> SplitLines(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start < text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    lines.push_back(StripCr(text.substr(start, end - start)));
    start = end + 1;
  }
  // A trailing newline does not start another record.
  while (!lines.empty() && lines.back().empty()) lines.pop_back();
  return lines;
}

inline std::vector<std::string_view> SplitFields(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    std::size_t end = line.find(',', start);
    if (end == std::string_view::npos) {
      fields.push_back(line.substr(start));
      break;
    }
    fields.push_back(line.substr(start, end - start));
    start = end + 1;
  }
  return fields;
}

// 64-bit FNV-1a.
inline std::uint64_t Fnv1a(std::string_view text) {
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  for (unsigned char ch : text) {
    hash ^= ch;
    hash *= 0x100000001b3ULL;
  }
  return hash;
}

}  // namespace internal

inline std::string ReadTextFile(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::kIo, "cannot open '" + path + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

inline void WriteTextFile(const std::string& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::kIo, "cannot write '" + path + "'");
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw Error(ErrorKind::kIo, "write failed for '" + path + "'");
}

// Role assignment of the columns. The order of `protected_attrs` fixes
// P_1..P_m everywhere downstream (division tables, model keys).
struct Schema {
  std::string outcome;
  std::vector<std::string> protected_attrs;
  std::vector<std::string> explanatory;
  std::vector<std::string> other;

  std::size_t num_protected() const { return protected_attrs.size(); }

  // Checks the role sets are well-formed and pairwise disjoint.
  void Validate() const {
    if (outcome.empty()) {
      throw Error(ErrorKind::kInvalidArgument, "schema has no outcome column");
    }
    if (protected_attrs.empty()) {
      throw Error(ErrorKind::kInvalidArgument,
                  "schema needs at least one protected column");
    }
    std::set<std::string> seen;
    auto claim = [&seen](const std::string& name, const char* role) {
      if (name.empty()) {
        throw Error(ErrorKind::kInvalidArgument,
                    std::string("empty column name in role ") + role);
      }
      if (!seen.insert(name).second) {
        throw Error(ErrorKind::kRoleOverlap,
                    "column '" + name + "' has more than one role");
      }
    };
    claim(outcome, "outcome");
    for (const auto& name : protected_attrs) claim(name, "protected");
    for (const auto& name : explanatory) claim(name, "explanatory");
    for (const auto& name : other) claim(name, "other");
  }

  // Stable identifier of the role layout; models are only applied to data
  // described by the same fingerprint.
  std::string Fingerprint() const {
    std::string canonical = "D=" + outcome + ";P=";
    auto append = [&canonical](const std::vector<std::string>& names) {
      for (std::size_t i = 0; i < names.size(); ++i) {
        if (i) canonical += ',';
        canonical += names[i];
      }
    };
    append(protected_attrs);
    canonical += ";E=";
    append(explanatory);
    std::ostringstream hex;
    hex << std::hex;
    hex.width(16);
    hex.fill('0');
    hex << internal::Fnv1a(canonical);
    return hex.str();
  }

  nlohmann::json ToJson() const {
    return nlohmann::json{{"outcome", outcome},
                          {"protected", protected_attrs},
                          {"explanatory", explanatory},
                          {"other", other}};
  }

  static Schema FromJson(const nlohmann::json& doc) {
    if (!doc.is_object()) {
      throw Error(ErrorKind::kMalformedInput, "schema must be a JSON object");
    }
    Schema schema;
    try {
      schema.outcome = doc.at("outcome").get<std::string>();
      schema.protected_attrs =
          doc.at("protected").get<std::vector<std::string>>();
      if (doc.contains("explanatory")) {
        schema.explanatory =
            doc.at("explanatory").get<std::vector<std::string>>();
      }
      if (doc.contains("other")) {
        schema.other = doc.at("other").get<std::vector<std::string>>();
      }
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorKind::kMalformedInput,
                  std::string("schema: ") + e.what());
    }
    schema.Validate();
    return schema;
  }

  static Schema Parse(std::string_view text) {
    nlohmann::json doc;
    try {
      doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorKind::kMalformedInput,
                  std::string("schema: ") + e.what());
    }
    return FromJson(doc);
  }

  friend bool operator==(const Schema&, const Schema&) = default;
};

// Immutable {0,1} table. Cells are stored row-major.
class BinaryDataset {
 public:
  BinaryDataset() = default;

  BinaryDataset(std::vector<std::string> columns, std::vector<Bit> cells,
                Schema schema)
      : columns_(std::move(columns)),
        cells_(std::move(cells)),
        schema_(std::move(schema)) {
    if (columns_.empty()) {
      throw Error(ErrorKind::kInvalidArgument, "dataset has no columns");
    }
    if (cells_.size() % columns_.size() != 0) {
      throw Error(ErrorKind::kLengthMismatch,
                  "cell count is not a multiple of the column count");
    }
    for (std::size_t i = 0; i < columns_.size(); ++i) {
      if (!index_.emplace(columns_[i], i).second) {
        throw Error(ErrorKind::kDuplicateColumn,
                    "column '" + columns_[i] + "' appears twice");
      }
    }
    for (Bit cell : cells_) {
      if (cell > 1) {
        throw Error(ErrorKind::kNonBinaryCell, "cell value is not 0 or 1");
      }
    }
    schema_.Validate();
    auto require = [this](const std::string& name) { (void)ColumnIndex(name); };
    require(schema_.outcome);
    for (const auto& name : schema_.protected_attrs) require(name);
    for (const auto& name : schema_.explanatory) require(name);
    for (const auto& name : schema_.other) require(name);
    // Columns without a role are carried as "other".
    std::set<std::string> assigned(schema_.protected_attrs.begin(),
                                   schema_.protected_attrs.end());
    assigned.insert(schema_.outcome);
    assigned.insert(schema_.explanatory.begin(), schema_.explanatory.end());
    assigned.insert(schema_.other.begin(), schema_.other.end());
    for (const auto& name : columns_) {
      if (!assigned.count(name)) schema_.other.push_back(name);
    }
  }

  const std::vector<std::string>& columns() const { return columns_; }
  const Schema& schema() const { return schema_; }
  std::size_t num_rows() const { return cells_.size() / columns_.size(); }
  std::size_t num_columns() const { return columns_.size(); }

  bool HasColumn(const std::string& name) const { return index_.count(name); }

  std::size_t ColumnIndex(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) {
      throw Error(ErrorKind::kMissingColumn, "no column named '" + name + "'");
    }
    return it->second;
  }

  Bit at(std::size_t row, std::size_t column) const {
    return cells_[row * columns_.size() + column];
  }

  std::span<const Bit> row(std::size_t row) const {
    return std::span<const Bit>(cells_).subspan(row * columns_.size(),
                                                columns_.size());
  }

  BitVector Column(const std::string& name) const {
    const std::size_t col = ColumnIndex(name);
    BitVector out(num_rows());
    for (std::size_t r = 0; r < out.size(); ++r) out[r] = at(r, col);
    return out;
  }

  BitVector Outcome() const { return Column(schema_.outcome); }

  const std::vector<Bit>& cells() const { return cells_; }

 private:
  std::vector<std::string> columns_;
  std::vector<Bit> cells_;
  Schema schema_;
  std::map<std::string, std::size_t> index_;
};

// One stratum of the explanatory attributes.
struct EGroup {
  std::vector<std::pair<std::string, Bit>> signature;
  std::vector<std::size_t> row_indices;

  BitVector SignatureBits() const {
    BitVector bits;
    bits.reserve(signature.size());
    for (const auto& [name, bit] : signature) bits.push_back(bit);
    return bits;
  }

  std::size_t size() const { return row_indices.size(); }
};

// Outcome x protected counts; first index is the outcome, second the
// protected value.
struct CountsTable {
  std::uint64_t f11 = 0;
  std::uint64_t f10 = 0;
  std::uint64_t f01 = 0;
  std::uint64_t f00 = 0;

  std::uint64_t total() const { return f11 + f10 + f01 + f00; }

  CountsTable& operator+=(const CountsTable& other) {
    f11 += other.f11;
    f10 += other.f10;
    f01 += other.f01;
    f00 += other.f00;
    return *this;
  }

  friend bool operator==(const CountsTable&, const CountsTable&) = default;
};

inline BinaryDataset LoadDataset(std::string_view csv_text,
                                 const Schema& schema) {
  const auto lines = internal::SplitLines(csv_text);
  if (lines.empty()) {
    throw Error(ErrorKind::kMalformedInput, "csv has no header row");
  }
  std::vector<std::string> columns;
  for (auto field : internal::SplitFields(lines[0])) {
    columns.emplace_back(field);
  }
  {
    std::set<std::string> unique;
    for (const auto& name : columns) {
      if (!unique.insert(name).second) {
        throw Error(ErrorKind::kDuplicateColumn,
                    "column '" + name + "' appears twice in the header");
      }
    }
    schema.Validate();
    auto require = [&unique](const std::string& name) {
      if (!unique.count(name)) {
        throw Error(ErrorKind::kMissingColumn,
                    "schema column '" + name + "' is not in the header");
      }
    };
    require(schema.outcome);
    for (const auto& n : schema.protected_attrs) require(n);
    for (const auto& n : schema.explanatory) require(n);
    for (const auto& n : schema.other) require(n);
  }

  std::vector<Bit> cells;
  cells.reserve((lines.size() - 1) * columns.size());
  for (std::size_t li = 1; li < lines.size(); ++li) {
    const auto fields = internal::SplitFields(lines[li]);
    const std::size_t row = li - 1;
    if (fields.size() != columns.size()) {
      throw Error(ErrorKind::kMalformedInput,
                  "row " + std::to_string(row) + " has " +
                      std::to_string(fields.size()) + " cells, expected " +
                      std::to_string(columns.size()));
    }
    for (std::size_t c = 0; c < fields.size(); ++c) {
      if (fields[c] == "0") {
        cells.push_back(0);
      } else if (fields[c] == "1") {
        cells.push_back(1);
      } else {
        throw Error(ErrorKind::kNonBinaryCell,
                    "row " + std::to_string(row) + ", column '" + columns[c] +
                        "': '" + std::string(fields[c]) + "'");
      }
    }
  }
  return BinaryDataset(std::move(columns), std::move(cells), schema);
}

inline std::string DatasetToCsv(const BinaryDataset& dataset) {
  std::string out;
  const auto& columns = dataset.columns();
  for (std::size_t c = 0; c < columns.size(); ++c) {
    if (c) out += ',';
    out += columns[c];
  }
  out += '\n';
  for (std::size_t r = 0; r < dataset.num_rows(); ++r) {
    for (std::size_t c = 0; c < columns.size(); ++c) {
      if (c) out += ',';
      out += static_cast<char>('0' + dataset.at(r, c));
    }
    out += '\n';
  }
  return out;
}

// Single-column prediction files: a header naming the column, then one bit
// per line.
inline BitVector ParseBitColumn(std::string_view csv_text,
                                std::string_view header) {
  const auto lines = internal::SplitLines(csv_text);
  if (lines.empty() || lines[0] != header) {
    throw Error(ErrorKind::kMalformedInput,
                "expected a single column with header '" +
                    std::string(header) + "'");
  }
  BitVector bits;
  bits.reserve(lines.size() - 1);
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (lines[i] == "0") {
      bits.push_back(0);
    } else if (lines[i] == "1") {
      bits.push_back(1);
    } else {
      throw Error(ErrorKind::kNonBinaryCell,
                  "row " + std::to_string(i - 1) + ", column '" +
                      std::string(header) + "': '" + std::string(lines[i]) +
                      "'");
    }
  }
  return bits;
}

inline std::string BitColumnToCsv(std::string_view header,
                                  std::span<const Bit> bits) {
  std::string out(header);
  out += '\n';
  out.reserve(out.size() + bits.size() * 2);
  for (Bit bit : bits) {
    out += static_cast<char>('0' + bit);
    out += '\n';
  }
  return out;
}

// Groups ordered by signature descending (all-ones first). With no
// explanatory attributes the whole dataset is one group.
inline std::vector<EGroup> Stratify(const BinaryDataset& dataset) {
  const auto& explanatory = dataset.schema().explanatory;
  std::vector<std::size_t> cols;
  for (const auto& name : explanatory) cols.push_back(dataset.ColumnIndex(name));

  std::map<BitVector, std::vector<std::size_t>, std::greater<>> buckets;
  for (std::size_t r = 0; r < dataset.num_rows(); ++r) {
    BitVector key(cols.size());
    for (std::size_t k = 0; k < cols.size(); ++k) key[k] = dataset.at(r, cols[k]);
    buckets[std::move(key)].push_back(r);
  }
  if (explanatory.empty() && buckets.empty()) buckets[BitVector{}];

  std::vector<EGroup> groups;
  groups.reserve(buckets.size());
  for (auto& [key, rows] : buckets) {
    EGroup group;
    for (std::size_t k = 0; k < key.size(); ++k) {
      group.signature.emplace_back(explanatory[k], key[k]);
    }
    group.row_indices = std::move(rows);
    groups.push_back(std::move(group));
  }
  return groups;
}

inline CountsTable CountsOf(std::span<const Bit> outcome,
                            std::span<const Bit> protected_bits,
                            std::span<const std::size_t> row_indices) {
  CountsTable counts;
  for (std::size_t r : row_indices) {
    const bool d = outcome[r] != 0;
    const bool p = protected_bits[r] != 0;
    if (d && p) {
      ++counts.f11;
    } else if (d) {
      ++counts.f10;
    } else if (p) {
      ++counts.f01;
    } else {
      ++counts.f00;
    }
  }
  return counts;
}

inline CountsTable ComputeCountsTable(const BinaryDataset& dataset,
                                      std::span<const std::size_t> row_indices,
                                      const std::string& protected_col,
                                      const std::string& outcome_col) {
  const std::size_t pc = dataset.ColumnIndex(protected_col);
  const std::size_t dc = dataset.ColumnIndex(outcome_col);
  CountsTable counts;
  for (std::size_t r : row_indices) {
    if (r >= dataset.num_rows()) {
      throw Error(ErrorKind::kIndexOutOfRange,
                  "row index " + std::to_string(r) + " out of range");
    }
    const bool d = dataset.at(r, dc) != 0;
    const bool p = dataset.at(r, pc) != 0;
    if (d && p) {
      ++counts.f11;
    } else if (d) {
      ++counts.f10;
    } else if (p) {
      ++counts.f01;
    } else {
      ++counts.f00;
    }
  }
  return counts;
}

// Appends a column that is 1 iff every column of `subset` is 1, and puts it
// in place of the subset in the protected list. The input is not modified.
inline BinaryDataset CombineProtected(const BinaryDataset& dataset,
                                      const std::vector<std::string>& subset,
                                      const std::string& new_name) {
  if (subset.empty()) {
    throw Error(ErrorKind::kInvalidArgument, "empty protected subset");
  }
  if (dataset.HasColumn(new_name)) {
    throw Error(ErrorKind::kNameCollision,
                "column '" + new_name + "' already exists");
  }
  const Schema& schema = dataset.schema();
  std::vector<std::size_t> cols;
  for (const auto& name : subset) {
    if (std::find(schema.protected_attrs.begin(), schema.protected_attrs.end(),
                  name) == schema.protected_attrs.end()) {
      throw Error(ErrorKind::kInvalidArgument,
                  "'" + name + "' is not a protected column");
    }
    cols.push_back(dataset.ColumnIndex(name));
  }

  const std::size_t width = dataset.num_columns();
  std::vector<Bit> cells;
  cells.reserve(dataset.num_rows() * (width + 1));
  for (std::size_t r = 0; r < dataset.num_rows(); ++r) {
    auto row = dataset.row(r);
    cells.insert(cells.end(), row.begin(), row.end());
    Bit all = 1;
    for (std::size_t c : cols) all &= row[c];
    cells.push_back(all);
  }
  auto columns = dataset.columns();
  columns.push_back(new_name);

  Schema combined = schema;
  std::vector<std::string> protected_attrs;
  bool placed = false;
  for (const auto& name : schema.protected_attrs) {
    if (std::find(subset.begin(), subset.end(), name) != subset.end()) {
      if (!placed) {
        protected_attrs.push_back(new_name);
        placed = true;
      }
      // Replaced columns stay in the table as "other".
      combined.other.push_back(name);
    } else {
      protected_attrs.push_back(name);
    }
  }
  combined.protected_attrs = std::move(protected_attrs);
  return BinaryDataset(std::move(columns), std::move(cells),
                       std::move(combined));
}

}  // namespace fairmod
