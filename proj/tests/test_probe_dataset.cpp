#include <gtest/gtest.h>

#include "support.hpp"
#include "uttprobe/probe_dataset.hpp"

using namespace uttprobe;
using namespace testing_support;

namespace {

ProbeDataset sample_dataset() {
  return build(parse_conllu(read_file(data_path("fixtures/sample_turn.conllu"))));
}

std::string one_token_doc(const std::string& token_obj) {
  return R"({"d": [{"1": )" + token_obj + "}]}";
}

}  // namespace

TEST(Build, SampleTurnIsByteEqualToPrintedExcerpt) {
  EXPECT_EQ(dump_canonical(sample_dataset()), read_file(data_path("fixtures/sample_turn.probe.json")));
}

TEST(Build, SampleTurnEntryDetails) {
  auto ds = sample_dataset();
  const auto& turn = ds.dialogues.at(0).turns.at(0);
  ASSERT_EQ(turn.size(), 18u);
  EXPECT_EQ(turn[3].token, "...");
  EXPECT_FALSE(turn[3].status);
  EXPECT_EQ(turn[3].speech_type, (PhenomenonFlags{true, false, true}));
  EXPECT_EQ(turn[9].dep_type, "parataxis:restart");
  EXPECT_TRUE(turn[9].status);
  EXPECT_FALSE(turn[9].speech_type.has_value());
}

TEST(Build, AllCleanTurn) {
  Dialogue d{"d", {make_tree({{"dzień", 0, "root"}, {"dobry", 1, "amod"}}, "d", 0)}};
  auto ds = build({d});
  for (const auto& t : ds.dialogues[0].turns[0]) {
    EXPECT_TRUE(t.status);
    EXPECT_FALSE(t.speech_type);
  }
}

TEST(Build, InvalidTreeThrows) {
  Dialogue d{"d", {make_tree({{"a", 0, "root"}, {"b", 0, "root"}}, "d", 0)}};
  EXPECT_THROW(build({d}), ArgumentError);
}

TEST(Build, StatusesEqualTokenStatus) {
  auto t = sample_turn();
  auto ds = sample_dataset();
  auto s = token_status(t);
  const auto& turn = ds.dialogues[0].turns[0];
  for (std::size_t i = 0; i < s.size(); ++i) EXPECT_EQ(turn[i].status, s[i].status);
}

TEST(LoadSave, RoundTrip) {
  TempDir dir;
  auto ds = sample_dataset();
  save(ds, dir / "x.json");
  EXPECT_EQ(load(dir / "x.json"), ds);
  EXPECT_EQ(read_file(dir / "x.json"), dump_canonical(ds));
}

TEST(Schema, StatusTrueWithSpeechTypeRejected) {
  auto doc = one_token_doc(
      R"({"token": "a", "status": true, "speech_type": {"discourse": true, "reparandum": false, "restart": false}, "dep_type": "root"})");
  EXPECT_THROW(from_json(nlohmann::ordered_json::parse(doc)), SchemaError);
}

TEST(Schema, StatusFalseNeedsAFlag) {
  auto null_type = one_token_doc(R"({"token": "a", "status": false, "speech_type": null, "dep_type": "root"})");
  EXPECT_THROW(from_json(nlohmann::ordered_json::parse(null_type)), SchemaError);
  auto no_flag = one_token_doc(
      R"({"token": "a", "status": false, "speech_type": {"discourse": false, "reparandum": false, "restart": false}, "dep_type": "root"})");
  EXPECT_THROW(from_json(nlohmann::ordered_json::parse(no_flag)), SchemaError);
}

TEST(Schema, GapInTokenKeysRejected) {
  auto doc = R"({"d": [{"1": {"token": "a", "status": true, "speech_type": null, "dep_type": "root"},
                       "3": {"token": "b", "status": true, "speech_type": null, "dep_type": "obj"}}]})";
  try {
    from_json(nlohmann::ordered_json::parse(doc));
    FAIL();
  } catch (const SchemaError& e) {
    EXPECT_NE(std::string(e.what()).find("dialogue 'd', turn 0, token '3'"), std::string::npos) << e.what();
  }
}

TEST(Schema, ExtraFieldRejected) {
  auto doc = one_token_doc(R"({"token": "a", "status": true, "speech_type": null, "dep_type": "root", "x": 1})");
  EXPECT_THROW(from_json(nlohmann::ordered_json::parse(doc)), SchemaError);
}

TEST(Schema, NotJsonRejected) {
  TempDir dir;
  write_atomic(dir / "bad.json", "{ not json");
  EXPECT_THROW(load(dir / "bad.json"), SchemaError);
}

TEST(Stats, SampleTurnCounts) {
  auto s = stats(sample_dataset());
  EXPECT_EQ(s.turns, 1u);
  EXPECT_EQ(s.true_tokens, 11u);
  EXPECT_EQ(s.false_tokens, 7u);
  EXPECT_DOUBLE_EQ(s.avg_true_per_turn, 11.0);
  EXPECT_EQ(s.discourse.labels, 3u);
  EXPECT_EQ(s.reparandum.labels, 1u);
  EXPECT_EQ(s.restart.labels, 1u);
  EXPECT_EQ(s.discourse.tokens, 3u);
  EXPECT_EQ(s.reparandum.tokens, 2u);
  EXPECT_EQ(s.restart.tokens, 4u);
  EXPECT_EQ(s.discourse.single, 1u);
  EXPECT_EQ(s.reparandum.single, 1u);
  EXPECT_EQ(s.restart.single, 3u);
}

TEST(Stats, EmptyDataset) {
  auto s = stats(ProbeDataset{});
  EXPECT_EQ(s.turns, 0u);
  EXPECT_EQ(s.true_tokens + s.false_tokens, 0u);
  EXPECT_EQ(s.avg_true_per_turn, 0.0);
  EXPECT_EQ(s.discourse.tokens + s.reparandum.tokens + s.restart.tokens, 0u);
}
