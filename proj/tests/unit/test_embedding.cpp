#include <gtest/gtest.h>

#include <cmath>

#include "verse/corpus.hpp"
#include "verse/embedding.hpp"
#include "verse/error.hpp"

using namespace verse;
using namespace verse::style;

namespace {
corpus::Corpus abab() { return corpus::Corpus::from_documents("ab", {corpus::make_document("d", "T\na b a b a b")}); }
}  // namespace

TEST(Cooccurrence, HandCountedWindowOne) {
  const auto c = cooccurrence_counts(abab(), 1);
  // pairs: (a,b) x5 adjacent, symmetric
  EXPECT_EQ(c.coeff(0, 1), 5.0);
  EXPECT_EQ(c.coeff(1, 0), 5.0);
  EXPECT_EQ(c.coeff(0, 0), 0.0);
}

TEST(Ppmi, MatchesFormula) {
  const auto counts = cooccurrence_counts(abab(), 2);
  // window 2: a-b adjacent 5 times, a-a 2 apart twice, b-b twice
  ASSERT_EQ(counts.coeff(0, 1), 5.0);
  ASSERT_EQ(counts.coeff(0, 0), 4.0);  // counted from both sides
  const auto p = ppmi(counts);
  const double T = 5 + 5 + 4 + 4, ca = 9, cb = 9;
  EXPECT_NEAR(p.coeff(0, 1), std::max(0.0, std::log(5 * T / (ca * cb))), 1e-12);
  EXPECT_GT(p.coeff(0, 1), 0.0);
  EXPECT_NEAR(p.coeff(0, 0), std::max(0.0, std::log(4 * T / (ca * ca))), 1e-12);
}

TEST(Embeddings, DimensionCappedAndDeterministic) {
  std::string body = "T\n";
  for (int i = 0; i < 30; ++i) body += "sun moon star sea sky ";
  const auto c = corpus::Corpus::from_documents("x", {corpus::make_document("d", body)});
  const auto a = build_embeddings(c, 32, 2, 5);
  EXPECT_LE(a.dim(), 5);
  EXPECT_EQ(a.terms().size(), 5u);
  const auto b = build_embeddings(c, 32, 2, 5);
  EXPECT_TRUE(a.vectors().isApprox(b.vectors()));
  EXPECT_THROW(build_embeddings(c, 0, 2), Error);
}

TEST(Embeddings, NearestAndCosine) {
  Eigen::MatrixXd v(4, 2);
  v << 1, 0, 0.9, 0.1, 0, 1, 0, 0;
  EmbeddingSpace s({"a", "b", "c", "z"}, v);
  EXPECT_NEAR(s.cosine("a", "a"), 1.0, 1e-15);
  EXPECT_EQ(s.cosine("a", "z"), 0.0);
  const auto n = s.nearest("a", 2);
  ASSERT_EQ(n.size(), 2u);
  EXPECT_EQ(n[0].first, "b");
  EXPECT_EQ(n[1].first, "c");
  EXPECT_TRUE(s.nearest("z", 3).empty());
}

TEST(Expansion, DecayTimesSimilarityAndMaxRule) {
  Eigen::MatrixXd v(3, 2);
  v << 1, 0, 1, 1, 0, 1;
  EmbeddingSpace s({"a", "b", "c"}, v);
  std::vector<std::string> skipped;
  const WeightedTerms seeds{{"a", 1.0}, {"c", 0.9}, {"missing", 1.0}};
  const auto out = expand_semantic_network(seeds, s, 1, 0.5, &skipped);
  const double cos_ab = 1.0 / std::sqrt(2.0);
  EXPECT_NEAR(out.at("b"), 0.5 * 1.0 * cos_ab, 1e-12);
  EXPECT_EQ(out.at("c"), 0.9);
  EXPECT_EQ(skipped, std::vector<std::string>{"missing"});
}
