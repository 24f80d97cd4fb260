// Copyright 2026 The proknow Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <gtest/gtest.h>

#include <sstream>

#include "test_support.hpp"

namespace proknow {
namespace {

using testing::data_path;
using testing::parse_dataset_text;

const char* kHeader = R"({"proknow_schema":1,"tags":["Yes/No","Degree/frequency","Causes","Remedies","OSI"]})";

std::string item_line(const std::string& id, const std::vector<std::pair<std::string, int>>& rows,
                      const std::string& sentinel = "END OF QUESTIONS") {
  static const char* tags[] = {"Yes/No", "Degree/frequency", "Causes", "Remedies", "OSI"};
  json j{{"item_id", id}, {"questionnaire", "GAD-7"}, {"item_text", "Feeling nervous, anxious, or on edge"},
         {"end_sentinel", sentinel}};
  json el = json::array();
  for (const auto& [text, rank] : rows) el.push_back({{"text", text}, {"tag", tags[(rank - 1) % 5]}, {"rank", rank}});
  j["elaborations"] = el;
  return j.dump();
}

TEST(LoadDataset, SingleGad7Item) {
  const auto ds = parse_dataset_text(std::string(kHeader) + "\n" +
                                     item_line("gad7-1", {{"Do you feel nervous anxious or on edge", 1},
                                                          {"How likely are you to feel this way", 2},
                                                          {"Any ideas on what may be causing this", 3},
                                                          {"Have you tried any remedies to feel less nervous", 4},
                                                          {"Are you also feeling any other symptoms", 5}}) +
                                     "\n");
  ASSERT_EQ(ds.items.size(), 1u);
  EXPECT_EQ(ds.items[0].max_rank(), 5);
  EXPECT_EQ(ds.items[0].elaborations[4].tag, "OSI");
}

TEST(LoadDataset, EmptyFileHasNoRecords) {
  try {
    parse_dataset_text("");
    FAIL() << "expected DataError";
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("no records"), std::string::npos);
  }
}

TEST(LoadDataset, NonContiguousRanksFail) {
  try {
    parse_dataset_text(item_line("gad7-1", {{"a one", 1}, {"a two", 2}, {"a four", 4}}));
    FAIL() << "expected DataError";
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("non-contiguous ranks at item gad7-1"), std::string::npos) << e.what();
  }
}

TEST(LoadDataset, MalformedLineReportsLineNumber) {
  try {
    parse_dataset_text(std::string(kHeader) + "\n{not json\n");
    FAIL() << "expected DataError";
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find(":2: malformed record"), std::string::npos) << e.what();
  }
}

TEST(LoadDataset, UnknownTagFails) {
  std::string line = item_line("x", {{"Do you feel tense", 1}});
  line.replace(line.find("Yes/No"), 6, "Symptoms");
  EXPECT_THROW(parse_dataset_text(line), DataError);
}

TEST(LoadDataset, MissingFileFails) { EXPECT_THROW(load_dataset("/nonexistent/data.jsonl"), DataError); }

TEST(TableTwo, RowsCarryTheirAnnotatedTagAndRank) {
  const auto ds = testing::table2();
  ASSERT_EQ(ds.items.size(), 2u);
  const std::vector<QuestionRecord> gad1{
      {"Do you feel nervous anxious or on edge", "Yes/No", 1},
      {"How likely are you to feel this way", "Degree/frequency", 2},
      {"Any ideas on what may be causing this", "Causes", 3},
      {"Have you tried any remedies to feel less nervous", "Remedies", 4},
      {"Are you also feeling any other symptoms such as jitters or dread", "OSI", 5}};
  EXPECT_EQ(ds.item("gad7-1").elaborations, gad1);
  const std::vector<QuestionRecord> gad2{{"Do you feel not able to stop or control worrying", "Yes/No", 1},
                                         {"How likely are you to feel this way", "Degree/frequency", 2},
                                         {"Any thoughts on what may be causing this", "Causes", 3},
                                         {"Have you tried any remedies to stop worrying", "Remedies", 4},
                                         {"Are you also feeling any other symptoms", "OSI", 5}};
  EXPECT_EQ(ds.item("gad7-2").elaborations, gad2);
  EXPECT_EQ(ds.item("gad7-2").item_text, "Not being able to stop or control worrying");
}

TEST(Validate, CleanTableTwoHasNoFindings) { EXPECT_TRUE(validate_dataset(testing::table2()).clean()); }

TEST(Validate, DuplicateText) {
  const auto ds = parse_dataset_text(item_line("x", {{"Do you feel tense", 1}, {"do you  feel TENSE", 1}}));
  const auto report = validate_dataset(ds);
  EXPECT_EQ(report.findings.size(), 1u);
  EXPECT_EQ(report.count(Finding::Kind::kDuplicateText), 1u);
}

TEST(Validate, MissingSentinel) {
  std::istringstream in(item_line("x", {{"Do you feel tense", 1}}, ""));
  const auto report = validate_dataset(parse_dataset(in, "<test>", LoadMode::kLenient));
  EXPECT_EQ(report.findings.size(), 1u);
  EXPECT_EQ(report.count(Finding::Kind::kMissingSentinel), 1u);
}

TEST(PoolForItem, Filters) {
  const auto ds = testing::table2();
  const auto rank2 = pool_for_item(ds, "gad7-1", std::nullopt, 2);
  ASSERT_EQ(rank2.size(), 1u);
  EXPECT_EQ(rank2[0].text, "How likely are you to feel this way");
  EXPECT_EQ(pool_for_item(ds, "gad7-1"), ds.item("gad7-1").elaborations);
  EXPECT_TRUE(pool_for_item(ds, "gad7-1", std::nullopt, 99).empty());
  EXPECT_THROW(pool_for_item(ds, "nope"), DataError);
}

TEST(PoolForItem, BothFiltersHoldOnSyntheticCorpus) {
  const auto ds = load_dataset(data_path("synthetic/corpus.jsonl"));
  for (const auto& item : ds.items)
    for (const auto& tag : ds.tags)
      for (int rank = 1; rank <= 5; ++rank)
        for (const auto& r : pool_for_item(ds, item.item_id, tag, rank)) {
          EXPECT_EQ(r.tag, tag);
          EXPECT_EQ(r.rank, rank);
        }
}

TEST(SaveDataset, RoundTrip) {
  for (const char* file : {"table2.jsonl", "synthetic/corpus.jsonl"}) {
    const auto ds = load_dataset(data_path(file));
    std::stringstream buf;
    save_dataset(buf, ds);
    const auto again = parse_dataset(buf);
    EXPECT_EQ(again.items, ds.items) << file;
    EXPECT_EQ(again.tags, ds.tags) << file;
  }
}

TEST(Lexicon, TableThreeCategories) {
  const auto lex = load_lexicon(data_path("table3_lexicon.json"));
  ASSERT_EQ(lex.categories().size(), 2u);
  const auto& mdd = lex.categories().at("MDD");
  EXPECT_NE(std::find(mdd.begin(), mdd.end(), "petrified"), mdd.end());
  EXPECT_TRUE(lex.categories().contains("AD"));
}

TEST(Lexicon, NormalizesAndDeduplicates) {
  const auto lex = parse_lexicon(json::parse(R"({"categories":{"A":["On  Edge","on edge"],"B":["ON EDGE","Tense"]}})"));
  EXPECT_EQ(lex.categories().at("A"), std::vector<std::string>{"on edge"});
  EXPECT_EQ(lex.phrases().size(), 2u);
  EXPECT_THROW(parse_lexicon(json::parse(R"({"categories":{}})")), DataError);
}

TEST(KnowledgeBase, WithoutVectors) {
  const auto kb = load_kb(data_path("synthetic/kb.json"));
  EXPECT_FALSE(kb.has_vectors());
  EXPECT_FALSE(kb.concepts().empty());
}

TEST(KnowledgeBase, JoinsVectorsByConceptString) {
  KnowledgeBase kb = parse_kb(json::parse(R"({"concepts":["Panic attacks","insomnia"]})"));
  VectorTable t(2);
  t.insert("panic_attacks", {1.0, 2.0});
  t.insert("unrelated", {0.0, 1.0});
  kb.attach_vectors(t);
  ASSERT_TRUE(kb.has_vectors());
  ASSERT_NE(kb.concept_vector("panic attacks"), nullptr);
  EXPECT_EQ(*kb.concept_vector("panic attacks"), (Vector{1.0, 2.0}));
  EXPECT_EQ(kb.concept_vector("insomnia"), nullptr);
  EXPECT_THROW(parse_kb(json::parse(R"({"concepts":[]})")), DataError);
}

}  // namespace
}  // namespace proknow
