#include <gtest/gtest.h>

#include <fstream>

#include "support.hpp"
#include "verse/corpus.hpp"
#include "verse/error.hpp"

using namespace verse;
using namespace verse::corpus;
using verse::testing::TempDir;

TEST(Tokenize, LowercasesAndKeepsInternalApostrophes) {
  const auto words = tokenize_words("O'er the Hills -- 'tis night, isn't it?");
  const std::vector<std::string> expected{"o'er", "the", "hills", "tis", "night", "isn't", "it"};
  EXPECT_EQ(words, expected);
}

TEST(Tokenize, HyphenatedWordsStayWhole) {
  EXPECT_EQ(tokenize_words("full-throated ease -"), (std::vector<std::string>{"full-throated", "ease"}));
}

TEST(Tokenize, BlankLinesOpenStanzas) {
  const auto t = tokenize("a b\nc\n\n\nd e\n\nf");
  ASSERT_EQ(t.lines.size(), 4u);
  EXPECT_EQ(t.stanza_breaks, (std::vector<std::size_t>{2, 3}));
  EXPECT_EQ(t.tokens().size(), 6u);
}

TEST(Normalize, ComposesAndFixesLineEndings) {
  // e + combining acute -> precomposed
  EXPECT_EQ(normalize("cafe\xCC\x81  \r\nx\ry"), "caf\xC3\xA9\nx\ny");
}

TEST(Document, FirstLineIsTitle) {
  const auto d = make_document("d1", "Ode\nthe night\nthe day\n");
  EXPECT_EQ(d.title, "Ode");
  EXPECT_EQ(d.token_count(), 4u);
  EXPECT_EQ(d.lines.size(), 2u);
}

TEST(Corpus, CountsAndIds) {
  auto c = Corpus::from_documents("c", {make_document("a", "T\nx y x"), make_document("b", "U\ny z")});
  EXPECT_EQ(c.total_tokens(), 5u);
  EXPECT_EQ(c.term_count("x"), 2u);
  EXPECT_EQ(c.doc_freq("y"), 2u);
  EXPECT_EQ(c.doc_freq("nope"), 0u);
  EXPECT_EQ(c.term_id("x"), 0);
  EXPECT_EQ(c.term_id("z"), 2);
  EXPECT_EQ(c.term_id("q"), -1);
  EXPECT_EQ(c.stats().vocabulary_size, 3u);
}

TEST(Corpus, JsonRoundTripIsExact) {
  const auto c = ingest_directory(verse::testing::repo_data("fixtures/keats"));
  EXPECT_EQ(c.size(), 7u);
  TempDir dir;
  save_corpus(c, dir / "c.json");
  EXPECT_EQ(load_corpus(dir / "c.json"), c);
}

TEST(Corpus, TamperedCountsAreRejected) {
  auto j = to_json(Corpus::from_documents("c", {make_document("a", "T\nx y")}));
  j["counts"]["total_tokens"] = 99;
  try {
    corpus_from_json(j);
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), "corrupt_corpus");
  }
}

TEST(Ingest, MissingDirectoryAndInvalidUtf8) {
  EXPECT_THROW(ingest_directory("/nonexistent/verse"), Error);
  TempDir dir;
  std::ofstream(dir / "bad.txt") << "Title\n\xff\xfe bad";
  try {
    ingest_directory(dir.path());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), "undecodable_file");
  }
}

TEST(Merge, SizesFollowCeilingAndSeed) {
  std::vector<Document> a, b;
  for (int i = 0; i < 7; ++i) a.push_back(make_document("a" + std::to_string(i), "T\nalpha"));
  for (int i = 0; i < 5; ++i) b.push_back(make_document("b" + std::to_string(i), "T\nbeta"));
  const auto ca = Corpus::from_documents("A", a), cb = Corpus::from_documents("B", b);
  const auto m = merge_corpora(ca, cb, 0.3, 11);
  EXPECT_EQ(m.size(), 3u + 4u);  // ceil(2.1) + ceil(3.5)
  EXPECT_EQ(merge_corpora(ca, cb, 0.3, 11), m);
  EXPECT_EQ(merge_corpora(ca, cb, 1.0, 1).size(), 7u);
  EXPECT_THROW(merge_corpora(ca, cb, 1.5, 1), Error);
}

TEST(CeilCount, AbsorbsRoundingNoise) {
  EXPECT_EQ(ceil_count(0.05 * 100.0), 5u);
  EXPECT_EQ(ceil_count(2.5), 3u);
  EXPECT_EQ(ceil_count(0.0), 0u);
}
