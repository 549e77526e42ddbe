#include <gtest/gtest.h>

#include <functional>

#include "support.hpp"
#include "verse/error.hpp"
#include "verse/generator.hpp"
#include "verse/meter.hpp"

using namespace verse;
using namespace verse::fst;
using verse::testing::toy_lexicon;

namespace {

using Strings = std::vector<std::string>;

// Every word sequence of 1..max_words words over `vocab`.
void for_each_line(const Strings& vocab, int max_words, const std::function<void(const Strings&)>& f) {
  Strings line;
  std::function<void()> rec = [&] {
    if (!line.empty()) f(line);
    if (static_cast<int>(line.size()) == max_words) return;
    for (const auto& w : vocab) {
      line.push_back(w);
      rec();
      line.pop_back();
    }
  };
  rec();
}

}  // namespace

TEST(Lexicon, ParsesVariantsAndComments) {
  const auto lex = PronLexicon::parse(";;; comment\nTHE  DH AH0\nTHE(2)  DH AH1\nHM  HH M\n");
  EXPECT_EQ(lex.size(), 2u);
  EXPECT_EQ(lex.at("the").size(), 2u);
  EXPECT_TRUE(lex.contains("hm"));
  EXPECT_EQ(lex.find("zzz"), nullptr);
  try {
    lex.at("zzz");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), "oov");
  }
  EXPECT_THROW(PronLexicon::parse("BAD  B1 AA1\n"), Error);
}

TEST(Lexicon, PhonemeHelpers) {
  EXPECT_TRUE(is_vowel("AH0"));
  EXPECT_FALSE(is_vowel("DH"));
  EXPECT_EQ(stress_digit("EY2"), 2);
  EXPECT_EQ(stress_digit("T"), -1);
  EXPECT_EQ(strip_stress("AA1"), "AA");
}

TEST(Scansion, RenderingsAndWildcard) {
  const auto& lex = toy_lexicon();
  EXPECT_EQ(word_renderings("remember", lex), Strings{"USU"});
  EXPECT_EQ(word_renderings("night", lex), (Strings{"S", "U"}));
  ScansionOptions strict;
  strict.monosyllable_wildcard = false;
  EXPECT_EQ(word_renderings("night", lex, strict), Strings{"S"});
  EXPECT_EQ(word_renderings("the", lex, strict), (Strings{"S", "U"}));
  EXPECT_EQ(scansion({"the", "night"}, lex).size(), 4u);
  EXPECT_EQ(scansion({"above", "remember"}, lex), Strings{"USUSU"});
  EXPECT_THROW(word_renderings("moon", lex), Error);
}

TEST(Scansion, SecondaryStress) {
  const auto lex = PronLexicon::parse("NIGHTINGALE  N AY1 T IH0 NG G EY2 L\n");
  EXPECT_EQ(word_renderings("nightingale", lex), Strings{"SUS"});
  ScansionOptions o;
  o.secondary_is_stressed = false;
  EXPECT_EQ(word_renderings("nightingale", lex, o), Strings{"SUU"});
}

TEST(Meter, PatternsAndSchemes) {
  EXPECT_EQ(MeterPattern::parse("iambic-pentameter").templ, "USUSUSUSUS");
  EXPECT_EQ(MeterPattern::parse("iambic-tetrameter").templ, "USUSUSUS");
  EXPECT_EQ(MeterPattern::parse("US*").templ, "US*");
  EXPECT_THROW(MeterPattern::parse("dactylic-nonsense"), Error);
  EXPECT_THROW(MeterPattern::parse(""), Error);
  const auto cm = MeterScheme::parse("common-meter");
  EXPECT_EQ(cm.for_line(0).size(), 8u);
  EXPECT_EQ(cm.for_line(1).size(), 6u);
  EXPECT_EQ(cm.for_line(2).size(), 8u);
  const auto list = MeterScheme::parse("US,USUS");
  EXPECT_EQ(list.for_line(3).templ, "USUS");
}

TEST(Meter, Conformance) {
  const auto usus = MeterPattern::parse("USUS");
  EXPECT_FALSE(meter_conformance({"USU"}, usus));
  EXPECT_TRUE(meter_conformance({"USUU", "USUS"}, usus));
  EXPECT_EQ(advance_positions({0}, {"USU"}, usus), std::set<int>{3});
  EXPECT_TRUE(advance_positions({3}, {"USU"}, usus).empty());
  EXPECT_TRUE(meter_conformance({"UU"}, MeterPattern::parse("U*")));
  EXPECT_TRUE(stress_matches('S', '*'));
  EXPECT_FALSE(stress_matches('S', 'U'));
  const auto r = matching_rendering({"the", "stars", "remember"}, MeterPattern::parse("USUSU"), toy_lexicon());
  ASSERT_TRUE(r);
  EXPECT_EQ(*r, (Strings{"U", "S", "USU"}));
}

TEST(Rhyme, KeysAndCheck) {
  const auto& lex = toy_lexicon();
  EXPECT_EQ(rhyme_keys("stars", lex), (std::set<RhymeKey>{{"AA", "R", "Z"}}));
  EXPECT_TRUE(rhyme_check("stars", "bars", lex));
  EXPECT_TRUE(rhyme_check("night", "light", lex));
  EXPECT_FALSE(rhyme_check("night", "night", lex));
  EXPECT_FALSE(rhyme_check("stars", "light", lex));
  EXPECT_EQ(rhyme_keys("again", lex).size(), 2u);
  EXPECT_EQ(rhyme_key({"R", "IH0", "M", "EH1", "M", "B", "ER0"}), (RhymeKey{"EH", "M", "B", "ER"}));
  EXPECT_EQ(rhyme_key({"HH", "M"}), RhymeKey{});
  EXPECT_EQ(key_string({"AY", "T"}), "AY T");
}

// The incremental acceptor agrees with the scansion validator on every line
// of up to four toy words, for each meter.
TEST(LineAcceptor, MatchesBruteForceScansion) {
  const auto& lex = toy_lexicon();
  const Strings vocab = lex.words();
  for (const char* meter : {"US", "USUS", "iambic-tetrameter", "SUS*U"}) {
    const auto pattern = MeterPattern::parse(meter);
    LineAcceptor acc(pattern, lex, vocab);
    long accepted = 0;
    for_each_line(vocab, 4, [&](const Strings& line) {
      auto states = acc.initial();
      for (const auto& w : line) {
        const int id = acc.word_index(w);
        states = id < 0 ? LineAcceptor::StateSet{} : acc.advance(states, id);
      }
      const bool want = gen::validate_meter(line, pattern, lex);
      EXPECT_EQ(acc.accepts(states), want) << meter << ": " << line.size();
      accepted += want;
    });
    EXPECT_GT(accepted, 0) << meter;
  }
}

// Composing a line automaton with the line acceptor is non-empty exactly when
// the line scans.
TEST(LineAcceptor, CompositionWithLineAutomaton) {
  const auto& lex = toy_lexicon();
  const Strings vocab = lex.words();
  const auto pattern = MeterPattern::parse("USUS");
  const Wfst machine = build_line_acceptor(pattern, lex, vocab);
  for_each_line(vocab, 3, [&](const Strings& line) {
    const Wfst lineauto = line_automaton(line, machine.input_symbols());
    const bool nonempty = shortest_path(compose(lineauto, machine)).has_value();
    EXPECT_EQ(nonempty, gen::validate_meter(line, pattern, lex));
  });
}

TEST(LineAcceptor, FinalWordsAndEndingMask) {
  const auto& lex = toy_lexicon();
  LineAcceptor acc(MeterPattern::parse("USUS"), lex, lex.words());
  const auto finals = acc.final_words();
  std::set<std::string> names;
  for (int w : finals) names.insert(acc.words()[w]);
  EXPECT_TRUE(names.count("above"));
  EXPECT_TRUE(names.count("night"));
  EXPECT_FALSE(names.count("remember"));  // USU never ends a USUS line
  const int stars = acc.word_index("stars");
  const auto mask = acc.states_ending_with([&](int w) { return w == stars; });
  EXPECT_TRUE(mask[acc.initial().front()]);
  const auto none = acc.states_ending_with([](int) { return false; });
  EXPECT_FALSE(none[acc.initial().front()]);
}

TEST(LineAcceptor, EmptyVocabularyRaises) {
  EXPECT_THROW(LineAcceptor(MeterPattern::parse("US"), toy_lexicon(), {"moon"}), Error);
}
