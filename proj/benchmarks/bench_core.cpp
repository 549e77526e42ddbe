#include <benchmark/benchmark.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "verse/charlm.hpp"
#include "verse/corpus.hpp"
#include "verse/generator.hpp"
#include "verse/lda.hpp"
#include "verse/meter.hpp"
#include "verse/rng.hpp"
#include "verse/wfst.hpp"

using namespace verse;

namespace {

const std::filesystem::path kData = VERSE_DATA_DIR;

const corpus::Corpus& keats() {
  static const corpus::Corpus c = corpus::ingest_directory(kData / "fixtures" / "keats");
  return c;
}

const fst::PronLexicon& lexicon() {
  static const fst::PronLexicon lex = fst::PronLexicon::load(kData / "lexicon" / "fixture.dict");
  return lex;
}

lm::LanguageModel random_model(int hidden, int layers) {
  std::string text;
  for (const auto& d : lm::training_documents(keats())) text += d;
  auto vocab = lm::CharVocab::from_text(text);
  const lm::LstmShape shape{layers, hidden, 32, vocab.size()};
  return {std::move(vocab), lm::LstmParams::random(shape, 1)};
}

}  // namespace

static void BM_LstmStep(benchmark::State& state) {
  const auto m = random_model(static_cast<int>(state.range(0)), 2);
  auto s = lm::DecoderState::zeros(m.params.shape);
  int id = 3;
  for (auto _ : state) {
    lm::DecoderState next;
    benchmark::DoNotOptimize(lm::step_logits(m.params, s, id, next));
    s = std::move(next);
    id = 3 + (id + 1) % (m.params.shape.vocab - 3);
  }
}
BENCHMARK(BM_LstmStep)->Arg(32)->Arg(128);

static void BM_BatchLossAndGradient(benchmark::State& state) {
  const auto m = random_model(64, 2);
  Rng rng(1);
  std::vector<std::vector<int>> in(8), tgt(8);
  for (int b = 0; b < 8; ++b) {
    for (int t = 0; t < 32; ++t) {
      in[b].push_back(3 + static_cast<int>(rng.below(m.params.shape.vocab - 3)));
      tgt[b].push_back(3 + static_cast<int>(rng.below(m.params.shape.vocab - 3)));
    }
  }
  lm::LstmParams grad;
  for (auto _ : state) benchmark::DoNotOptimize(lm::batch_loss(m.params, in, tgt, &grad));
}
BENCHMARK(BM_BatchLossAndGradient)->Unit(benchmark::kMillisecond);

static void BM_LineAcceptorBuild(benchmark::State& state) {
  const auto pattern = fst::MeterPattern::parse("iambic-pentameter");
  const auto words = lexicon().words();
  for (auto _ : state) benchmark::DoNotOptimize(fst::LineAcceptor(pattern, lexicon(), words).machine().num_states());
}
BENCHMARK(BM_LineAcceptorBuild)->Unit(benchmark::kMillisecond);

static void BM_ComposeLineAutomaton(benchmark::State& state) {
  const auto pattern = fst::MeterPattern::parse("iambic-tetrameter");
  const auto machine = fst::build_line_acceptor(pattern, lexicon(), lexicon().words());
  const auto line = fst::line_automaton({"the", "bright", "star", "above", "the", "sea"}, machine.input_symbols());
  for (auto _ : state) benchmark::DoNotOptimize(fst::shortest_path(fst::compose(line, machine)));
}
BENCHMARK(BM_ComposeLineAutomaton)->Unit(benchmark::kMicrosecond);

static void BM_GenerateLine(benchmark::State& state) {
  static const auto m = random_model(64, 1);
  gen::GenerationSpec spec;
  spec.meter = fst::MeterScheme::parse("iambic-tetrameter");
  spec.line_count = 1;
  spec.beam_width = static_cast<int>(state.range(0));
  const gen::Generator g(m, lexicon(), nullptr, spec);
  std::uint64_t seed = 0;
  for (auto _ : state) {
    try {
      benchmark::DoNotOptimize(g.generate_line({}, 0, {}, ++seed));
    } catch (const gen::GenerationError&) {
    }
  }
}
BENCHMARK(BM_GenerateLine)->Arg(8)->Arg(16)->Unit(benchmark::kMillisecond);

static void BM_LdaSweeps(benchmark::State& state) {
  style::LdaOptions o = style::LdaOptions::with_defaults(7);
  o.iterations = 100;
  for (auto _ : state) benchmark::DoNotOptimize(style::train_lda(keats(), o).topic_mass);
}
BENCHMARK(BM_LdaSweeps)->Unit(benchmark::kMillisecond);
BENCHMARK_MAIN();
