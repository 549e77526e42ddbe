#include <gtest/gtest.h>

#include <cmath>

#include "support.hpp"
#include "verse/error.hpp"
#include "verse/generator.hpp"
#include "verse/rng.hpp"

using namespace verse;
using namespace verse::gen;
using verse::testing::line_logprob;
using verse::testing::toy_lexicon;
using verse::testing::toy_lm;
using verse::testing::toy_style;

namespace {

using Strings = std::vector<std::string>;

GenerationSpec toy_spec(const std::string& meter, const std::string& scheme) {
  GenerationSpec s;
  s.meter = fst::MeterScheme::parse(meter);
  s.rhyme_scheme = scheme;
  s.line_count = scheme.empty() ? 1 : 0;
  s.seed = 21;
  return s;
}

std::string join(const Strings& words) {
  std::string out;
  for (const auto& w : words) out += (out.empty() ? "" : " ") + w;
  return out;
}

// Boost recomputed straight from the style tables.
double expected_boost(const Strings& words, double lt, double lp) {
  const auto& st = toy_style();
  double total = 0.0;
  for (std::size_t i = 0; i < words.size(); ++i) {
    const std::string prev = i ? words[i - 1] : "";
    double term = 0.0;
    if (auto it = st.high_entropy_terms.find(words[i]); it != st.high_entropy_terms.end()) term = it->second;
    if (auto it = st.expanded_terms.find(words[i]); it != st.expanded_terms.end()) term = std::max(term, it->second);
    double bigram = 0.0;
    if (auto it = st.high_entropy_terms.find(prev + " " + words[i]); it != st.high_entropy_terms.end()) {
      bigram = it->second;
    }
    double topic = 0.0;
    if (auto it = st.topic_words.find(words[i]); it != st.topic_words.end()) topic = it->second;
    total += lt * (term + bigram) + lp * topic;
  }
  return total;
}

struct Scored {
  std::string text;
  double score;
};

// argmax over every line of one or two toy words that scans.
Scored brute_force(const fst::MeterPattern& pattern, double temperature, double lt, double lp) {
  Scored best{"", -std::numeric_limits<double>::infinity()};
  const Strings vocab = toy_lexicon().words();
  std::vector<Strings> lines;
  for (const auto& a : vocab) {
    lines.push_back({a});
    for (const auto& b : vocab) lines.push_back({a, b});
  }
  for (const auto& l : lines) {
    if (!validate_meter(l, pattern, toy_lexicon())) continue;
    const std::string text = join(l);
    const double s = line_logprob(toy_lm(), {}, text, temperature) + expected_boost(l, lt, lp);
    if (s > best.score || (s == best.score && text < best.text)) best = {text, s};
  }
  return best;
}

}  // namespace

TEST(Generator, ExhaustiveBeamEqualsBruteForce) {
  for (double lambda : {0.0, 1.5}) {
    auto spec = toy_spec("US", "");
    spec.beam_width = 0;
    spec.prune_noise = 0.0;
    spec.samples_per_line = 1000;
    spec.lambda_terms = lambda;
    spec.lambda_topics = lambda;
    Generator g(toy_lm(), toy_lexicon(), &toy_style(), spec);
    const auto cands = g.generate_line({}, 0, {}, 1);
    const auto want = brute_force(fst::MeterPattern::parse("US"), spec.temperature, lambda, lambda);
    ASSERT_FALSE(cands.empty());
    EXPECT_EQ(cands.front().text, want.text) << "lambda " << lambda;
    EXPECT_NEAR(cands.front().score, want.score, 1e-9);
  }
}

TEST(Generator, BeamOf64MatchesBruteForce) {
  auto spec = toy_spec("US", "");
  spec.beam_width = 64;
  spec.prune_noise = 0.0;
  Generator g(toy_lm(), toy_lexicon(), nullptr, spec);
  const auto want = brute_force(fst::MeterPattern::parse("US"), spec.temperature, 0, 0);
  EXPECT_EQ(g.generate_line({}, 0, {}, 1).front().text, want.text);
}

TEST(Generator, CandidateScoresMatchIndependentLogprob) {
  auto spec = toy_spec("USUS", "");
  spec.lambda_terms = 0.7;
  spec.lambda_topics = 0.3;
  Generator g(toy_lm(), toy_lexicon(), &toy_style(), spec);
  const Strings context{"the stars above the night"};
  for (const auto& c : g.generate_line(context, 0, {}, 4)) {
    EXPECT_NEAR(c.base_logprob, line_logprob(toy_lm(), context, c.text, spec.temperature), 1e-9);
    EXPECT_NEAR(c.boost, expected_boost(c.words, 0.7, 0.3), 1e-9);
    EXPECT_NEAR(c.score, c.base_logprob + c.boost, 1e-12);
    EXPECT_TRUE(validate_meter(c.words, fst::MeterPattern::parse("USUS"), toy_lexicon()));
    EXPECT_EQ(c.text, join(c.words));
    ASSERT_EQ(c.stress.size(), c.words.size());
  }
}

TEST(Boost, ZeroLambdaIsOrderIdenticalToBaseline) {
  auto spec = toy_spec("iambic-tetrameter", "ABAB");
  std::vector<std::vector<std::string>> base_trace, zero_trace;
  auto recorder = [](std::vector<std::vector<std::string>>& out) {
    return [&out](int, const std::vector<TraceEntry>& beam) {
      std::vector<std::string> texts;
      for (const auto& e : beam) texts.push_back(e.text);
      out.push_back(texts);
    };
  };
  Generator plain(toy_lm(), toy_lexicon(), nullptr, spec);
  Generator zero(toy_lm(), toy_lexicon(), &toy_style(), spec);
  const auto a = plain.generate_poemlet(77, recorder(base_trace));
  const auto b = zero.generate_poemlet(77, recorder(zero_trace));
  EXPECT_FALSE(base_trace.empty());
  EXPECT_EQ(base_trace, zero_trace);
  EXPECT_EQ(a.text(), b.text());
}

TEST(Boost, EveryHypothesisScoreIsBasePlusLambdaWeights) {
  for (double lambda : {0.5, 1.0, 2.0}) {
    auto spec = toy_spec("iambic-tetrameter", "AA");
    spec.lambda_terms = lambda;
    spec.lambda_topics = lambda;
    Generator g(toy_lm(), toy_lexicon(), &toy_style(), spec);
    long checked = 0;
    g.generate_poemlet(5, [&](int, const std::vector<TraceEntry>& beam) {
      for (const auto& e : beam) {
        EXPECT_NEAR(e.boost, expected_boost(e.words, lambda, lambda), 1e-9);
        EXPECT_NEAR(e.score, e.base_logprob + e.boost, 1e-9);
        ++checked;
      }
    });
    EXPECT_GT(checked, 100);
  }
}

TEST(Boost, WeightsFromStyle) {
  const auto hit = boost_weights(&toy_style(), "stars", "light");
  EXPECT_EQ(hit.term, 0.5);
  EXPECT_EQ(hit.bigram, 0.75);
  EXPECT_EQ(hit.topic, 0.0);
  EXPECT_EQ(boosted_score(hit, 2.0, 10.0), 2.0 * 1.25);
  EXPECT_EQ(boost_weights(nullptr, "", "stars").term, 0.0);
}

TEST(Generator, RhymedPoemletsValidate) {
  for (const char* scheme : {"AA", "ABAB"}) {
    Generator g(toy_lm(), toy_lexicon(), nullptr, toy_spec("iambic-tetrameter", scheme));
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
      const auto p = g.generate_poemlet(seed);
      ASSERT_EQ(p.lines.size(), std::string(scheme).size());
      Strings ends;
      for (const auto& l : p.lines) {
        EXPECT_TRUE(validate_meter(l.words, fst::MeterPattern::parse("iambic-tetrameter"), toy_lexicon())) << l.text;
        ends.push_back(l.words.back());
      }
      EXPECT_TRUE(validate_rhyme(ends, scheme, toy_lexicon())) << p.text();
    }
  }
}

TEST(Generator, DeterministicPerSeed) {
  Generator g(toy_lm(), toy_lexicon(), nullptr, toy_spec("USUS", "ABAB"));
  EXPECT_EQ(g.generate_poemlet(3).text(), g.generate_poemlet(3).text());
  const auto batch = g.batch_generate(3);
  ASSERT_TRUE(batch.poemlets[1].has_value());
  EXPECT_EQ(batch.poemlets[1]->text(), g.generate_poemlet(mix_seed(21, 1)).text());
  EXPECT_EQ(batch.report.at("generated"), 3);
}

TEST(Generator, ImpossibleSchemeRaises) {
  // Each toy rhyme class has two words and a word does not rhyme with itself.
  Generator g(toy_lm(), toy_lexicon(), nullptr, toy_spec("US", "AAA"));
  try {
    g.generate_poemlet(1);
    FAIL() << "expected exhaustion";
  } catch (const GenerationError& e) {
    EXPECT_EQ(e.code(), "exhausted");
    EXPECT_TRUE(e.details().contains("line"));
    EXPECT_TRUE(e.details().contains("stats"));
  }
  const auto batch = g.batch_generate(2);
  EXPECT_EQ(batch.failures.size(), 2u);
  EXPECT_EQ(batch.report.at("generated"), 0);
}

TEST(Generator, TinyBudgetRaises) {
  auto spec = toy_spec("iambic-tetrameter", "");
  spec.step_budget = 1;
  Generator g(toy_lm(), toy_lexicon(), nullptr, spec);
  EXPECT_THROW(g.generate_poemlet(1), GenerationError);
}

TEST(Generator, UnreachableMeterRaises) {
  auto spec = toy_spec("SSSSS", "");
  auto strict = spec;
  strict.scansion.monosyllable_wildcard = false;
  strict.vocabulary = {"above", "again"};
  Generator h(toy_lm(), toy_lexicon(), nullptr, strict);
  EXPECT_THROW(h.generate_poemlet(1), GenerationError);
}

TEST(Generator, InvalidSpecs) {
  auto spec = toy_spec("US", "ab");
  EXPECT_THROW(spec.validate(), Error);
  spec = toy_spec("US", "");
  spec.temperature = 0;
  EXPECT_THROW(spec.validate(), Error);
  spec = toy_spec("US", "");
  spec.vocabulary = {"moon"};
  EXPECT_THROW(Generator(toy_lm(), toy_lexicon(), nullptr, spec), Error);
}

TEST(Validators, RhymeAndMeter) {
  EXPECT_TRUE(validate_rhyme({"stars", "night", "bars", "light"}, "ABAB", toy_lexicon()));
  EXPECT_FALSE(validate_rhyme({"stars", "stars"}, "AA", toy_lexicon()));
  EXPECT_FALSE(validate_rhyme({"stars"}, "AA", toy_lexicon()));
  EXPECT_FALSE(validate_meter({"moon"}, fst::MeterPattern::parse("S"), toy_lexicon()));
  EXPECT_TRUE(validate_meter({"above"}, fst::MeterPattern::parse("US"), toy_lexicon()));
}
