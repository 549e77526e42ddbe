#include <gtest/gtest.h>

#include <chrono>
#include <cmath>
#include <fstream>

#include "support.hpp"
#include "verse/charlm.hpp"
#include "verse/error.hpp"

using namespace verse;
using namespace verse::lm;

namespace {

std::string ab_text(std::size_t n) {
  std::string s;
  for (std::size_t i = 0; i < n; ++i) s += (i % 2 == 0) ? 'a' : 'b';
  return s;
}

TrainOptions ab_options() {
  TrainOptions o;
  o.layers = 1;
  o.hidden = 16;
  o.embed = 8;
  o.bptt = 32;
  o.batch = 8;
  o.learning_rate = 1e-2;
  o.steps = 500;
  o.seed = 3;
  return o;
}

const TrainResult& ab_model() {
  static const TrainResult r = train_text(ab_text(1000), ab_options());
  return r;
}

}  // namespace

TEST(CharVocab, ReservedSymbolsAndRoundTrip) {
  const auto v = CharVocab::from_text("h\xC3\xA9llo\nx");
  EXPECT_EQ(v.id("\n"), CharVocab::kLineBreak);
  EXPECT_EQ(v.id("?"), CharVocab::kUnknown);
  EXPECT_EQ(v.size(), 3 + 5);  // h é l o x
  EXPECT_EQ(v.decode(v.encode("h\xC3\xA9llo\nx")), "h\xC3\xA9llo\nx");
}

TEST(Lstm, ZeroParamsGiveUniform) {
  LstmShape shape{2, 4, 3, 7};
  const auto p = LstmParams::zeros(shape);
  const auto r = forward_step(p, DecoderState::zeros(shape), 3);
  for (Eigen::Index i = 0; i < r.probs.size(); ++i) EXPECT_NEAR(r.probs[i], 1.0 / 7.0, 1e-15);
  LanguageModel m{CharVocab::from_text("abcd"), LstmParams::zeros({1, 4, 3, 7})};
  EXPECT_NEAR(perplexity(m, "abcabd").perplexity, 7.0, 1e-9);
}

TEST(Lstm, SoftmaxTemperature) {
  Eigen::VectorXd z(3);
  z << 1.0, 2.0, 3.0;
  const auto p = softmax(z, 0.5);
  EXPECT_NEAR(p.sum(), 1.0, 1e-15);
  EXPECT_NEAR(std::log(p[2] / p[1]), 2.0, 1e-12);
  EXPECT_NEAR(log_softmax(z)[0], std::log(softmax(z)[0]), 1e-12);
}

TEST(Lstm, GradientCheck) {
  const auto start = std::chrono::steady_clock::now();
  const LstmShape shape{2, 8, 5, 6};
  const auto p = LstmParams::random(shape, 17, 0.5);
  const std::vector<int> in{0, 3, 4, 5, 3, 1, 4, 4, 5, 2, 3, 1};
  const std::vector<int> tgt{3, 4, 5, 3, 1, 4, 4, 5, 2, 3, 1, 0};
  const auto r = gradient_check(p, in, tgt);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  EXPECT_EQ(r.parameters_checked, p.parameter_count());
  EXPECT_LT(r.max_relative_error, 1e-4) << r.worst_group << "[" << r.worst_index << "]";
  EXPECT_LT(secs, 10.0);
}

TEST(Lstm, LearnsAlternation) {
  const auto start = std::chrono::steady_clock::now();
  const auto& r = ab_model();
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  ASSERT_EQ(r.loss_trace.size(), 500u);
  EXPECT_LT(r.loss_trace.back(), 0.05);
  EXPECT_LT(secs, 60.0);
}

TEST(Lstm, GreedySampleAlternates) {
  const auto& m = ab_model().model;
  SampleOptions o;
  o.greedy = true;
  o.max_chars = 20;
  const auto s = sample(m, "ab", o);
  ASSERT_EQ(s.size(), 20u);
  EXPECT_EQ(s, ab_text(20));
  EXPECT_LT(perplexity(m, ab_text(200)).perplexity, 1.1);
}

TEST(Lstm, SamplingIsSeeded) {
  const auto& m = ab_model().model;
  SampleOptions o;
  o.seed = 5;
  o.max_chars = 30;
  EXPECT_EQ(sample(m, "", o), sample(m, "", o));
  o.temperature = 0.0;
  EXPECT_THROW(sample(m, "", o), Error);
}

TEST(Lstm, SaveLoadIsBitExact) {
  const auto& m = ab_model().model;
  verse::testing::TempDir dir;
  save_model(m, dir / "lm.bin");
  const auto back = load_model(dir / "lm.bin");
  EXPECT_EQ(back.vocab, m.vocab);
  EXPECT_TRUE(back.params == m.params);
}

TEST(Lstm, CorruptFilesAreRejected) {
  verse::testing::TempDir dir;
  std::ofstream(dir / "junk.bin") << "not a model";
  EXPECT_THROW(load_model(dir / "junk.bin"), Error);
  save_model(ab_model().model, dir / "lm.bin");
  const auto full = verse::testing::read_file(dir / "lm.bin");
  std::ofstream(dir / "cut.bin", std::ios::binary) << full.substr(0, full.size() - 9);
  try {
    load_model(dir / "cut.bin");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), "corrupt_model");
  }
}

TEST(Lstm, TrainingIsDeterministic) {
  auto o = ab_options();
  o.steps = 5;
  const auto a = train_text(ab_text(200), o), b = train_text(ab_text(200), o);
  EXPECT_EQ(a.loss_trace, b.loss_trace);
  EXPECT_TRUE(a.model.params == b.model.params);
}

TEST(Lstm, InvalidInputsRaise) {
  EXPECT_THROW(train_text("", ab_options()), Error);
  auto p = LstmParams::zeros({1, 2, 2, 4});
  p.out_bias[0] = std::nan("");
  EXPECT_THROW(p.validate(), Error);
}
