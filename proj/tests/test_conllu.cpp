#include <gtest/gtest.h>

#include <random>

#include "support.hpp"
#include "uttprobe/conllu.hpp"

using namespace uttprobe;
using namespace testing_support;

namespace {

std::string rows_to_conllu(const std::string& sent_id, const std::vector<Row>& rows) {
  std::string s = "# sent_id = " + sent_id + "\n";
  for (std::size_t i = 0; i < rows.size(); ++i)
    s += std::to_string(i + 1) + "\t" + rows[i].form + "\t_\t_\t_\t_\t" + std::to_string(rows[i].head) + "\t" +
         rows[i].deprel + "\t_\t_\n";
  return s + "\n";
}

std::vector<Row> ten_tokens() {
  std::vector<Row> rows;
  rows.push_back({"a", 0, "root"});
  for (int i = 2; i <= 10; ++i) rows.push_back({"w" + std::to_string(i), 1, "dep"});
  return rows;
}

}  // namespace

TEST(ParseConllu, SampleTurnIsOneDialogueWithRootPani) {
  auto d = parse_conllu(read_file(data_path("fixtures/sample_turn.conllu")));
  ASSERT_EQ(d.size(), 1u);
  ASSERT_EQ(d[0].turns.size(), 1u);
  const auto& t = d[0].turns[0];
  EXPECT_EQ(d[0].id, "fig1");
  EXPECT_EQ(t.turn_index, 0);
  EXPECT_EQ(t.speaker, std::optional<std::string>("A"));
  ASSERT_EQ(t.size(), 18u);
  EXPECT_EQ(root_of(t), 3);
  EXPECT_EQ(t.at(3).form, "pani");
  EXPECT_EQ(t.at(3).deprel, "root");
  EXPECT_EQ(t.at(10).deprel, "parataxis:restart");
  EXPECT_EQ(t.at(17).form, "prześle");
}

TEST(ParseConllu, EmptyInputGivesNoDialogues) {
  EXPECT_TRUE(parse_conllu("").empty());
  EXPECT_TRUE(parse_conllu("\n\n").empty());
}

TEST(ParseConllu, HeadOutOfRangeIsLineNumberedError) {
  auto rows = ten_tokens();
  rows[4].head = 25;
  const std::string text = rows_to_conllu("d-0", rows);
  try {
    parse_conllu(text);
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("head out of range"), std::string::npos) << e.what();
    EXPECT_EQ(e.line(), 6u);  // comment line + 5th token row
  }
}

TEST(ParseConllu, WrongColumnCountIsError) {
  EXPECT_THROW(parse_conllu("# sent_id = d-0\n1\ta\t_\t_\t0\troot\n\n"), ParseError);
}

TEST(ParseConllu, MultiwordAndEmptyNodesAreSkippedWithWarning) {
  std::string text =
      "# sent_id = d-0\n"
      "1-2\tdomu\t_\t_\t_\t_\t_\t_\t_\t_\n"
      "1\tdo\t_\t_\t_\t_\t2\tcase\t_\t_\n"
      "2\tmu\t_\t_\t_\t_\t0\troot\t_\t_\n"
      "2.1\tx\t_\t_\t_\t_\t_\t_\t_\t_\n\n";
  std::vector<std::string> warnings;
  auto d = parse_conllu(text, &warnings);
  ASSERT_EQ(d.at(0).turns.at(0).size(), 2u);
  EXPECT_EQ(warnings.size(), 2u);
}

TEST(ParseConllu, TurnsGroupedByDialogueAndOrdered) {
  std::vector<Row> one{{"tak", 0, "root"}};
  std::string text = rows_to_conllu("a-1", one) + rows_to_conllu("b-0", one) + rows_to_conllu("a-0", one);
  auto d = parse_conllu(text);
  ASSERT_EQ(d.size(), 2u);
  EXPECT_EQ(d[0].id, "a");
  EXPECT_EQ(d[0].turns[0].turn_index, 0);
  EXPECT_EQ(d[0].turns[1].turn_index, 1);
  EXPECT_EQ(d[1].id, "b");
}

TEST(ParseConllu, DuplicateTurnIsError) {
  std::vector<Row> one{{"tak", 0, "root"}};
  EXPECT_THROW(parse_conllu(rows_to_conllu("a-0", one) + rows_to_conllu("a-0", one)), ParseError);
}

TEST(ParseConllu, InvalidTreeIsError) {
  std::vector<Row> cyc{{"a", 2, "dep"}, {"b", 1, "dep"}, {"c", 0, "root"}};
  EXPECT_THROW(parse_conllu(rows_to_conllu("a-0", cyc)), ParseError);
}

TEST(Subtree, SampleTurnToken10) {
  auto t = sample_turn();
  EXPECT_EQ(subtree(t, 10), (std::vector<int>{5, 6, 7, 8, 9, 10, 11, 12, 13, 14, 15, 16, 17, 18}));
  EXPECT_EQ(subtree(t, 10), naive_subtree(t, 10));
}

TEST(Subtree, LeafIsItself) {
  auto t = sample_turn();
  EXPECT_EQ(subtree(t, 18), (std::vector<int>{18}));
  EXPECT_EQ(subtree(t, 1), (std::vector<int>{1}));
}

TEST(Subtree, RootCoversEverything) {
  auto t = sample_turn();
  auto all = subtree(t, 3);
  ASSERT_EQ(all.size(), 18u);
  EXPECT_EQ(all, naive_subtree(t, 3));
}

TEST(Subtree, OutOfRangeThrows) {
  auto t = sample_turn();
  EXPECT_THROW(subtree(t, 0), ArgumentError);
  EXPECT_THROW(subtree(t, 19), ArgumentError);
}

TEST(Validate, SampleTurnIsClean) { EXPECT_TRUE(validate(sample_turn()).empty()); }

TEST(Validate, TwoRootsGiveOneDiagnostic) {
  auto t = make_tree({{"a", 0, "root"}, {"b", 0, "root"}, {"c", 1, "dep"}});
  auto d = validate(t);
  ASSERT_EQ(d.size(), 1u);
  EXPECT_EQ(d[0].rule, "multiple roots");
}

TEST(Validate, TwoCycleIsReported) {
  auto t = make_tree({{"a", 2, "dep"}, {"b", 1, "dep"}, {"c", 0, "root"}});
  auto d = validate(t);
  ASSERT_FALSE(d.empty());
  EXPECT_TRUE(std::any_of(d.begin(), d.end(), [](const Diagnostic& x) { return x.rule == "cycle"; }));
}

TEST(Validate, NoRootSelfHeadAndRange) {
  EXPECT_EQ(validate(make_tree({{"a", 2, "dep"}, {"b", 1, "dep"}})).front().rule, "no root");
  auto self = validate(make_tree({{"a", 0, "root"}, {"b", 2, "dep"}}));
  EXPECT_TRUE(std::any_of(self.begin(), self.end(), [](const Diagnostic& x) { return x.rule == "self head"; }));
  auto range = validate(make_tree({{"a", 0, "root"}, {"b", 7, "dep"}}));
  EXPECT_TRUE(std::any_of(range.begin(), range.end(), [](const Diagnostic& x) { return x.rule == "head out of range"; }));
}

TEST(Detokenize, SampleTurnCleanTokens) {
  auto t = sample_turn();
  std::vector<SurfaceToken> clean;
  for (int id : {7, 8, 9, 10, 11, 12, 14, 15, 16, 17, 18}) clean.push_back(t.at(id));
  EXPECT_EQ(detokenize(clean), "to ja pani podam maila, a pani mi prześle szczegóły");
}

TEST(Detokenize, EmptyAndFallback) {
  EXPECT_EQ(detokenize({}), "");
  auto t = make_tree({{"a", 0, "root"}, {",", 1, "punct"}, {"b", 1, "dep"}});
  EXPECT_EQ(detokenize(t.tokens), "a, b");
  auto p = make_tree({{"(", 2, "punct"}, {"x", 0, "root"}, {")", 2, "punct"}, {"?", 2, "punct"}});
  EXPECT_EQ(detokenize(p.tokens), "(x)?");
}

TEST(Detokenize, FullSampleTurnTurnUsesSpaceAfter) {
  EXPECT_EQ(detokenize(sample_turn().tokens),
            "To niech pani... to... to ja pani podam maila, (yy) a pani mi prześle szczegóły");
}

TEST(Serialize, RoundTripsFixtureBytes) {
  const auto text = read_file(data_path("fixtures/sample_turn.conllu"));
  EXPECT_EQ(serialize_conllu(parse_conllu(text)), text);
}

TEST(Properties, RandomTreesSubtreeLaws) {
  std::mt19937_64 rng(11);
  const std::vector<std::string> rels{"dep", "obj", "nsubj"};
  for (int iter = 0; iter < 300; ++iter) {
    const int n = 1 + static_cast<int>(rng() % 12);
    auto t = random_tree(rng, n, rels);
    ASSERT_TRUE(validate(t).empty());
    EXPECT_EQ(static_cast<int>(subtree(t, root_of(t)).size()), n);
    for (int i = 1; i <= n; ++i) {
      auto si = subtree(t, i);
      EXPECT_EQ(si, naive_subtree(t, i));
      EXPECT_TRUE(std::binary_search(si.begin(), si.end(), i));
      for (int j = 1; j <= n; ++j) {
        auto sj = subtree(t, j);
        std::vector<int> inter;
        std::set_intersection(si.begin(), si.end(), sj.begin(), sj.end(), std::back_inserter(inter));
        bool nested = std::includes(si.begin(), si.end(), sj.begin(), sj.end()) ||
                      std::includes(sj.begin(), sj.end(), si.begin(), si.end());
        EXPECT_TRUE(inter.empty() || nested);
      }
    }
  }
}

TEST(Properties, RandomCorpusSerializeRoundTrip) {
  std::mt19937_64 rng(5);
  std::vector<Dialogue> ds;
  for (int d = 0; d < 4; ++d) {
    Dialogue dlg{"dlg" + std::to_string(d), {}};
    for (int k = 0; k < 3; ++k) {
      auto t = random_tree(rng, 1 + static_cast<int>(rng() % 8), {"dep", "discourse", "punct"});
      t.dialogue_id = dlg.id;
      t.turn_index = k;
      dlg.turns.push_back(t);
    }
    ds.push_back(dlg);
  }
  auto text = serialize_conllu(ds);
  auto back = parse_conllu(text);
  ASSERT_EQ(back.size(), ds.size());
  for (std::size_t d = 0; d < ds.size(); ++d)
    for (std::size_t k = 0; k < ds[d].turns.size(); ++k) {
      const auto& a = ds[d].turns[k].tokens;
      const auto& b = back[d].turns[k].tokens;
      ASSERT_EQ(a.size(), b.size());
      for (std::size_t i = 0; i < a.size(); ++i) {
        EXPECT_EQ(a[i].form, b[i].form);
        EXPECT_EQ(a[i].head, b[i].head);
        EXPECT_EQ(a[i].deprel, b[i].deprel);
      }
    }
  EXPECT_EQ(serialize_conllu(back), text);
}
