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

#include "fairmod/tabular.hpp"

#include <map>
#include <random>
#include <string>
#include <vector>

#include <gtest/gtest.h>

namespace fairmod {
namespace {

Schema SexEduIncome() {
  Schema schema;
  schema.outcome = "income";
  schema.protected_attrs = {"sex"};
  schema.explanatory = {"edu"};
  return schema;
}

ErrorKind KindOf(const std::function<void()>& body) {
  try {
    body();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no error raised";
  return ErrorKind::kInvalidArgument;
}

TEST(LoadDataset, ParsesHeaderAndRows) {
  const auto ds = LoadDataset("sex,edu,income\n1,0,1\n0,1,0\n", SexEduIncome());
  EXPECT_EQ(ds.num_rows(), 2u);
  EXPECT_EQ(ds.num_columns(), 3u);
  EXPECT_EQ(ds.Column("income"), (BitVector{1, 0}));
  EXPECT_EQ(ds.at(1, ds.ColumnIndex("edu")), 1);
}

TEST(LoadDataset, AcceptsCrlfAndTrailingBlankLines) {
  const auto ds = LoadDataset("sex,edu,income\r\n1,0,1\r\n0,1,0\r\n\r\n", SexEduIncome());
  EXPECT_EQ(ds.num_rows(), 2u);
  EXPECT_EQ(ds.Column("sex"), (BitVector{1, 0}));
}

TEST(LoadDataset, RejectsNonBinaryCell) {
  try {
    LoadDataset("sex,edu,income\n1,2,1\n", SexEduIncome());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kNonBinaryCell);
    EXPECT_NE(std::string(e.what()).find("edu"), std::string::npos);
  }
}

TEST(LoadDataset, RejectsMissingSchemaColumn) {
  Schema schema = SexEduIncome();
  schema.explanatory.push_back("age");
  EXPECT_EQ(KindOf([&] { LoadDataset("sex,edu,income\n1,0,1\n", schema); }),
            ErrorKind::kMissingColumn);
}

TEST(LoadDataset, RejectsDuplicateColumnsAndRaggedRows) {
  EXPECT_EQ(KindOf([] { LoadDataset("sex,sex,income\n1,0,1\n", SexEduIncome()); }),
            ErrorKind::kDuplicateColumn);
  EXPECT_EQ(KindOf([] { LoadDataset("sex,edu,income\n1,0\n", SexEduIncome()); }),
            ErrorKind::kMalformedInput);
}

TEST(LoadDataset, UnlistedColumnsBecomeOther) {
  const auto ds = LoadDataset("sex,edu,income,zip\n1,0,1,1\n", SexEduIncome());
  EXPECT_EQ(ds.schema().other, (std::vector<std::string>{"zip"}));
}

TEST(LoadDataset, CsvRoundTrip) {
  const std::string text = "sex,edu,income\n1,0,1\n0,1,0\n";
  EXPECT_EQ(DatasetToCsv(LoadDataset(text, SexEduIncome())), text);
}

TEST(Schema, RejectsOverlappingRoles) {
  Schema schema = SexEduIncome();
  schema.explanatory.push_back("sex");
  EXPECT_EQ(KindOf([&] { schema.Validate(); }), ErrorKind::kRoleOverlap);
}

TEST(Schema, JsonRoundTripAndFingerprint) {
  Schema schema = SexEduIncome();
  schema.other = {"zip"};
  const Schema back = Schema::Parse(schema.ToJson().dump());
  EXPECT_EQ(back, schema);
  EXPECT_EQ(back.Fingerprint(), schema.Fingerprint());
  EXPECT_EQ(schema.Fingerprint().size(), 16u);

  Schema other_only = schema;
  other_only.other.clear();
  EXPECT_EQ(other_only.Fingerprint(), schema.Fingerprint());
  Schema reordered = schema;
  reordered.explanatory = {"zip"};
  EXPECT_NE(reordered.Fingerprint(), schema.Fingerprint());
}

TEST(Stratify, NoExplanatoryGivesOneGroup) {
  Schema schema;
  schema.outcome = "d";
  schema.protected_attrs = {"p"};
  const auto ds = LoadDataset("p,d\n1,1\n0,1\n1,0\n0,0\n1,1\n", schema);
  const auto groups = Stratify(ds);
  ASSERT_EQ(groups.size(), 1u);
  EXPECT_EQ(groups[0].size(), 5u);
}

TEST(Stratify, SplitsOnExplanatoryValues) {
  const auto ds = LoadDataset("sex,edu,income\n1,1,1\n0,1,0\n1,0,0\n", SexEduIncome());
  const auto groups = Stratify(ds);
  ASSERT_EQ(groups.size(), 2u);
  // Descending signature order: edu=1 first.
  EXPECT_EQ(groups[0].SignatureBits(), (BitVector{1}));
  EXPECT_EQ(groups[0].size(), 2u);
  EXPECT_EQ(groups[1].size(), 1u);
}

TEST(Stratify, MatchesBruteForcePartition) {
  std::mt19937_64 gen(7);
  Schema schema;
  schema.outcome = "d";
  schema.protected_attrs = {"p"};
  schema.explanatory = {"e1", "e2"};
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t rows = 4 + gen() % 60;
    std::vector<Bit> cells;
    for (std::size_t r = 0; r < rows * 4; ++r) cells.push_back(gen() & 1);
    const BinaryDataset ds({"p", "e1", "e2", "d"}, cells, schema);

    std::map<std::pair<int, int>, std::vector<std::size_t>> expected;
    for (std::size_t r = 0; r < rows; ++r) {
      expected[{cells[r * 4 + 1], cells[r * 4 + 2]}].push_back(r);
    }
    const auto groups = Stratify(ds);
    ASSERT_EQ(groups.size(), expected.size());
    std::size_t total = 0;
    for (const auto& g : groups) {
      const auto bits = g.SignatureBits();
      EXPECT_EQ(g.row_indices, (expected[{bits[0], bits[1]}]));
      total += g.size();
    }
    EXPECT_EQ(total, rows);
    for (std::size_t k = 1; k < groups.size(); ++k) {
      EXPECT_GT(groups[k - 1].SignatureBits(), groups[k].SignatureBits());
    }
  }
}

// Sex against income with no context attribute, built row by row.
BinaryDataset FlatSample() {
  Schema schema;
  schema.outcome = "income";
  schema.protected_attrs = {"sex"};
  std::vector<Bit> cells;
  auto add = [&](int n, Bit sex, Bit income) {
    for (int k = 0; k < n; ++k) {
      cells.push_back(sex);
      cells.push_back(income);
    }
  };
  add(10, 1, 1);
  add(15, 0, 1);
  add(40, 1, 0);
  add(60, 0, 0);
  return BinaryDataset({"sex", "income"}, cells, schema);
}

TEST(CountsTable, FlatSample) {
  const auto ds = FlatSample();
  std::vector<std::size_t> all(ds.num_rows());
  for (std::size_t r = 0; r < all.size(); ++r) all[r] = r;
  const auto f = ComputeCountsTable(ds, all, "sex", "income");
  EXPECT_EQ(f, (CountsTable{10, 15, 40, 60}));
  EXPECT_EQ(ComputeCountsTable(ds, {}, "sex", "income"), (CountsTable{}));
}

TEST(CountsTable, RejectsOutOfRangeRow) {
  const auto ds = FlatSample();
  const std::vector<std::size_t> rows{ds.num_rows()};
  EXPECT_EQ(KindOf([&] { ComputeCountsTable(ds, rows, "sex", "income"); }),
            ErrorKind::kIndexOutOfRange);
}

TEST(CombineProtected, ConjunctionOfSubset) {
  Schema schema;
  schema.outcome = "d";
  schema.protected_attrs = {"race", "sex", "age"};
  const BinaryDataset ds({"race", "sex", "age", "d"},
                         {1, 1, 0, 1,  //
                          1, 0, 1, 0,  //
                          0, 1, 1, 1},
                         schema);
  const auto combined = CombineProtected(ds, {"race", "sex"}, "race_sex");
  EXPECT_EQ(combined.Column("race_sex"), (BitVector{1, 0, 0}));
  EXPECT_EQ(combined.schema().protected_attrs,
            (std::vector<std::string>{"race_sex", "age"}));
  // Input untouched.
  EXPECT_FALSE(ds.HasColumn("race_sex"));

  const auto single = CombineProtected(ds, {"sex"}, "sex2");
  EXPECT_EQ(single.Column("sex2"), ds.Column("sex"));
}

TEST(CombineProtected, RejectsNameCollision) {
  Schema schema;
  schema.outcome = "d";
  schema.protected_attrs = {"race", "sex"};
  const BinaryDataset ds({"race", "sex", "d"}, {1, 1, 0}, schema);
  EXPECT_EQ(KindOf([&] { CombineProtected(ds, {"race", "sex"}, "d"); }),
            ErrorKind::kNameCollision);
}

TEST(BitColumn, RoundTripAndHeaderCheck) {
  const BitVector bits{1, 0, 0, 1};
  const std::string text = BitColumnToCsv("dhat", bits);
  EXPECT_EQ(text, "dhat\n1\n0\n0\n1\n");
  EXPECT_EQ(ParseBitColumn(text, "dhat"), bits);
  EXPECT_EQ(KindOf([&] { ParseBitColumn(text, "dfinal"); }), ErrorKind::kMalformedInput);
  EXPECT_EQ(KindOf([] { ParseBitColumn("dhat\n1\n7\n", "dhat"); }),
            ErrorKind::kNonBinaryCell);
}

}  // namespace
}  // namespace fairmod
