#include <gtest/gtest.h>

#include <sstream>

#include "support.hpp"
#include "verse/cli.hpp"

using verse::testing::repo_data;
using verse::testing::TempDir;
using verse::testing::test_data;

namespace {

struct Run {
  int code;
  std::string out, err;
};

Run run(std::vector<std::string> args) {
  args.insert(args.begin(), "verse");
  std::ostringstream out, err;
  const int code = verse::cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

}  // namespace

TEST(Cli, UsageErrors) {
  EXPECT_EQ(run({}).code, 2);
  EXPECT_EQ(run({"frobnicate"}).code, 2);
  EXPECT_EQ(run({"ingest", "--corpus", "/no/such/dir", "--out", "x.json"}).code, 2);
  EXPECT_EQ(run({"--help"}).code, 0);
}

TEST(Cli, TinyPipeline) {
  TempDir dir;
  const auto p = [&](const char* name) { return (dir / name).string(); };
  ASSERT_EQ(run({"ingest", "--corpus", repo_data("fixtures/keats").string(), "--out", p("keats.json")}).code, 0);
  ASSERT_EQ(run({"ingest", "--corpus", repo_data("fixtures/background").string(), "--out", p("bg.json")}).code, 0);
  const auto merged = run({"ingest", "--corpus", repo_data("fixtures/keats").string(), "--out", p("mix.json"),
                           "--merge", p("bg.json"), "--ratio", "0.5", "--seed", "3"});
  ASSERT_EQ(merged.code, 0) << merged.err;

  const auto st = run({"style", "build", "--corpus", p("keats.json"), "--background", p("bg.json"), "--top-percent",
                       "5", "--topics", "5", "--select-topics", "2", "--words-per-topic", "5", "--iterations", "50",
                       "--embed-dim", "8", "--neighbors", "3", "--decay", "0.5", "--seed", "2", "--out",
                       p("style.json")});
  ASSERT_EQ(st.code, 0) << st.err;

  const auto tr = run({"lm", "train", "--corpus", p("keats.json"), "--hidden", "16", "--layers", "1", "--steps", "20",
                       "--bptt", "16", "--batch", "4", "--seed", "1", "--out", p("lm.bin")});
  ASSERT_EQ(tr.code, 0) << tr.err;
  const auto ck = run({"lm", "check", "--model", p("lm.bin")});
  EXPECT_EQ(ck.code, 0) << ck.err;

  const auto g = run({"generate", "--style", p("style.json"), "--lm", p("lm.bin"), "--lexicon",
                      repo_data("lexicon/fixture.dict").string(), "--meter", "iambic-tetrameter", "--rhyme", "AA",
                      "--boost-terms", "1", "--boost-topics", "0.5", "--temp", "0.8", "--beam", "8", "--count", "2",
                      "--seed", "4", "--out", p("poems")});
  ASSERT_EQ(g.code, 0) << g.err;
  EXPECT_TRUE(std::filesystem::exists(dir / "poems" / "report.json"));
  const auto report = nlohmann::json::parse(verse::testing::read_file(dir / "poems" / "report.json"));
  EXPECT_EQ(report.at("generated"), 2);
}

TEST(Cli, LmCheckGradient) {
  TempDir dir;
  verse::lm::save_model(verse::testing::toy_lm(), dir / "lm.bin");
  const auto r = run({"lm", "check", "--model", (dir / "lm.bin").string(), "--gradcheck", "--text",
                      test_data("toy.txt").string()});
  EXPECT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("perplexity"), std::string::npos);
}

TEST(Cli, EvalCommands) {
  const auto s = run({"eval", "survey", "--in", test_data("survey.csv").string(), "--json"});
  ASSERT_EQ(s.code, 0) << s.err;
  const auto j = nlohmann::json::parse(s.out);
  EXPECT_EQ(j.at("records"), 6);

  const auto b = run({"eval", "bleu", "--candidate", test_data("bleu/candidate.txt").string(), "--refs",
                      test_data("bleu/refs").string()});
  ASSERT_EQ(b.code, 0) << b.err;
  EXPECT_NE(b.out.find("2/7"), std::string::npos) << b.out;
}
