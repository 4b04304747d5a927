#include <gtest/gtest.h>

#include "support.hpp"
#include "uttprobe/synth.hpp"

using namespace uttprobe;
using namespace uttprobe::synth;
using namespace testing_support;

namespace {

std::vector<TurnTree> shipped_templates() {
  std::vector<TurnTree> out;
  for (auto& d : parse_conllu(read_file(data_path("templates/polish_clean.conllu"))))
    for (auto& t : d.turns) out.push_back(t);
  return out;
}

InjectionSpec zero_rates() {
  InjectionSpec s;
  s.discourse_rate = s.reparandum_rate = s.restart_rate = 0.0;
  return s;
}

std::vector<std::string> forms_of(const std::vector<SurfaceToken>& toks) {
  std::vector<std::string> out;
  for (const auto& t : toks) out.push_back(t.form);
  return out;
}

/// The sample turn tree with everything speech-specific removed, re-rooted.
TurnTree sample_turn_clean() {
  auto t = sample_turn();
  auto clean = extract_clean(t);
  TurnTree out;
  out.dialogue_id = "fig1";
  std::map<int, int> remap;
  for (std::size_t i = 0; i < clean.size(); ++i) remap[clean[i].id] = static_cast<int>(i) + 1;
  for (auto tok : clean) {
    tok.id = remap[tok.id];
    if (remap.count(tok.head)) {
      tok.head = remap[tok.head];
    } else {
      tok.head = 0;
      tok.deprel = "root";
    }
    out.tokens.push_back(tok);
  }
  return out;
}

void expect_consistent(const Injected& x, const TurnTree& clean) {
  ASSERT_TRUE(validate(x.tree).empty());
  EXPECT_EQ(forms_of(extract_clean(x.tree)), forms_of(clean.tokens));
  auto built = build_turn(x.tree);
  EXPECT_EQ(built, x.ground_truth());
}

}  // namespace

TEST(InjectDiscourse, RateZeroUnchanged) {
  Rng rng(1);
  auto t = sample_turn_clean();
  auto x = inject_discourse(t, zero_rates(), rng);
  EXPECT_EQ(x.tree.tokens, t.tokens);
  EXPECT_TRUE(x.record().tokens.empty());
}

TEST(InjectDiscourse, RateOneFillsEveryGap) {
  auto spec = zero_rates();
  spec.discourse_rate = 1.0;
  Rng rng(2);
  auto t = make_tree({{"dzień", 0, "root"}, {"dobry", 1, "amod"}});
  auto x = inject_discourse(t, spec, rng);
  ASSERT_EQ(x.tree.size(), 5u);
  for (int id : {1, 3, 5}) {
    EXPECT_EQ(x.tree.at(id).deprel, "discourse");
    EXPECT_TRUE(x.truth[static_cast<std::size_t>(id - 1)].discourse);
  }
  expect_consistent(x, t);
}

TEST(InjectDiscourse, SameSeedSameOutput) {
  InjectionSpec spec;
  spec.discourse_rate = 0.5;
  auto t = sample_turn_clean();
  Rng a(9), b(9);
  EXPECT_EQ(inject_discourse(t, spec, a).tree.tokens, inject_discourse(t, spec, b).tree.tokens);
}

TEST(InjectReparandum, RepetitionOfDzienDobry) {
  auto t = make_tree({{"dzień", 0, "root"}, {"dobry", 1, "amod"}});
  bool seen = false;
  for (std::uint64_t seed = 0; seed < 64 && !seen; ++seed) {
    Rng rng(seed);
    auto x = inject_reparandum(Injected::from_clean(t), zero_rates(), rng, DisfluencyKind::Repetition, 1);
    expect_consistent(x, t);
    if (turn_text(x.tree) == "dzień... dzień dobry") {
      seen = true;
      EXPECT_TRUE(x.truth[0].reparandum);
      EXPECT_TRUE(x.truth[1].reparandum && x.truth[1].discourse);
      EXPECT_FALSE(x.truth[2].any());
      EXPECT_EQ(x.tree.at(1).deprel, "reparandum");
      EXPECT_EQ(x.tree.at(1).head, 3);
    }
  }
  EXPECT_TRUE(seen);
}

TEST(InjectReparandum, SubstitutionTruncates) {
  EXPECT_EQ(synth::detail::truncate_form("sytuacją"), "sytu...");
  EXPECT_EQ(synth::detail::truncate_form("siedmiocyfrowy"), "siedmio...");
  auto t = make_tree({{"kod", 0, "root"}, {"ośmiocyfrowy", 1, "amod"}});
  Rng rng(4);
  auto x = inject_reparandum(Injected::from_clean(t), zero_rates(), rng, DisfluencyKind::Substitution, 1);
  expect_consistent(x, t);
  EXPECT_GT(x.tree.size(), t.size());
  bool truncated = false;
  for (const auto& tok : x.tree.tokens) truncated |= tok.form.size() > 3 && tok.form.substr(tok.form.size() - 3) == "...";
  EXPECT_TRUE(truncated);
}

TEST(InjectReparandum, RateZeroUnchanged) {
  Rng rng(1);
  auto t = sample_turn_clean();
  EXPECT_EQ(inject_reparandum(t, zero_rates(), rng).tree.tokens, t.tokens);
}

TEST(InjectReparandum, FilterAfterInjectAnySeed) {
  auto spec = zero_rates();
  spec.reparandum_rate = 1.0;
  auto templates = shipped_templates();
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    Rng rng(seed);
    const auto& t = templates[seed % templates.size()];
    expect_consistent(inject_reparandum(t, spec, rng), t);
  }
}

TEST(InjectRestart, SampleTurnTopology) {
  auto clean = sample_turn_clean();
  Rng rng(0);
  auto x = inject_restart(clean, zero_rates(), rng, &restart_fragments().front());
  EXPECT_EQ(turn_text(x.tree), "To niech pani... to ja pani podam maila, a pani mi prześle szczegóły");
  auto fig = sample_turn();
  for (int id = 1; id <= 4; ++id) {
    EXPECT_EQ(x.tree.at(id).form, fig.at(id).form);
    EXPECT_EQ(x.tree.at(id).head, fig.at(id).head);
    EXPECT_EQ(x.tree.at(id).deprel, fig.at(id).deprel);
  }
  const auto& podam = x.tree.at(8);
  EXPECT_EQ(podam.form, "podam");
  EXPECT_EQ(podam.deprel, "parataxis:restart");
  EXPECT_EQ(podam.head, 3);
  auto f = phenomenon_flags(x.tree);
  for (int id = 1; id <= 4; ++id) EXPECT_TRUE(f[static_cast<std::size_t>(id - 1)].restart);
  EXPECT_TRUE(f[3].discourse);
  expect_consistent(x, clean);
}

TEST(InjectRestart, RateZeroUnchanged) {
  Rng rng(1);
  auto t = sample_turn_clean();
  EXPECT_EQ(inject_restart(t, zero_rates(), rng).tree.tokens, t.tokens);
}

TEST(InjectRestart, MeanRegionSizeInRange) {
  auto spec = zero_rates();
  spec.restart_rate = 1.0;
  auto t = sample_turn_clean();
  std::size_t total = 0;
  for (std::uint64_t seed = 0; seed < 1000; ++seed) {
    Rng rng(seed);
    auto x = inject_restart(t, spec, rng);
    for (const auto& f : x.truth) total += f.restart;
  }
  double mean = static_cast<double>(total) / 1000.0;
  EXPECT_GE(mean, 2.0);
  EXPECT_LE(mean, 8.0);
}

TEST(Corpus, AllRatesZeroAllStatusTrue) {
  auto spec = zero_rates();
  CorpusPlan plan;
  auto c = generate_corpus(shipped_templates(), spec, plan);
  for (const auto& d : c.truth.dialogues)
    for (const auto& turn : d.turns)
      for (const auto& t : turn) EXPECT_TRUE(t.status);
}

TEST(Corpus, FixedSeedIsByteIdentical) {
  InjectionSpec spec;
  spec.seed = 7;
  auto a = generate_corpus(shipped_templates(), spec);
  auto b = generate_corpus(shipped_templates(), spec);
  EXPECT_EQ(serialize_conllu(a.noisy), serialize_conllu(b.noisy));
  EXPECT_EQ(dump_canonical(a.truth), dump_canonical(b.truth));
}

TEST(Corpus, DefaultRatesRoundTripAndConsistency) {
  InjectionSpec spec;
  spec.seed = 42;
  CorpusPlan plan;
  auto c = generate_corpus(shipped_templates(), spec, plan);
  ASSERT_EQ(c.truth.turn_count(), 100u);
  auto built = build(c.noisy);
  EXPECT_EQ(built, c.truth);
  std::size_t flagged = 0;
  for (std::size_t d = 0; d < c.noisy.size(); ++d)
    for (std::size_t k = 0; k < c.noisy[d].turns.size(); ++k) {
      ASSERT_TRUE(validate(c.noisy[d].turns[k]).empty());
      EXPECT_EQ(forms_of(extract_clean(c.noisy[d].turns[k])), forms_of(c.clean[d].turns[k].tokens));
    }
  for (const auto& d : built.dialogues)
    for (const auto& turn : d.turns)
      for (const auto& t : turn) flagged += !t.status;
  EXPECT_GT(flagged, 0u);
}

TEST(Corpus, TotalTurnsLimit) {
  InjectionSpec spec;
  CorpusPlan plan;
  plan.dialogues = 3;
  plan.turns_per_dialogue = 10;
  plan.total_turns = 25;
  auto c = generate_corpus({}, spec, plan);
  EXPECT_EQ(c.truth.turn_count(), 25u);
  EXPECT_EQ(c.noisy.back().turns.size(), 5u);
}

TEST(Spec, BadRatesRejected) {
  InjectionSpec s;
  s.discourse_rate = 1.5;
  EXPECT_THROW(s.check(), ArgumentError);
  s.discourse_rate = -0.1;
  EXPECT_THROW(generate_corpus({}, s), ArgumentError);
}
