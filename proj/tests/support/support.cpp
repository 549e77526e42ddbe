#include "support.hpp"

#include <atomic>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include <unistd.h>

#include "verse/rng.hpp"

namespace verse::testing {

std::filesystem::path test_data(const std::string& name) { return std::filesystem::path(VERSE_TEST_DATA) / name; }

std::filesystem::path repo_data(const std::string& name) { return std::filesystem::path(VERSE_DATA_DIR) / name; }

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

const fst::PronLexicon& toy_lexicon() {
  static const fst::PronLexicon lex = fst::PronLexicon::load(test_data("toy.dict"));
  return lex;
}

const lm::LanguageModel& toy_lm() {
  static const lm::LanguageModel model = [] {
    const auto cached = std::filesystem::path(VERSE_TEST_CACHE) / "toy_lm_v1.bin";
    if (std::filesystem::exists(cached)) {
      try {
        return lm::load_model(cached);
      } catch (const std::exception&) {
        // retrain below
      }
    }
    lm::TrainOptions o;
    o.layers = 1;
    o.hidden = 24;
    o.embed = 8;
    o.bptt = 24;
    o.batch = 8;
    o.steps = 400;
    o.learning_rate = 1e-2;
    o.seed = 7;
    auto result = lm::train_text(read_file(test_data("toy.txt")), o);
    // Rename is atomic, so concurrent test processes never see half a file.
    const auto tmp = cached.string() + "." + std::to_string(::getpid());
    lm::save_model(result.model, tmp);
    std::filesystem::rename(tmp, cached);
    return result.model;
  }();
  return model;
}

const style::StyleModel& toy_style() {
  static const style::StyleModel s = [] {
    style::StyleModel m;
    m.author_id = "toy";
    m.high_entropy_terms = {{"stars", 1.0}, {"light", 0.5}, {"stars light", 0.75}};
    m.topic_words = {{"night", 1.0}, {"remember", 0.25}};
    m.expanded_terms = {{"above", 0.4}};
    return m;
  }();
  return s;
}

double line_logprob(const lm::LanguageModel& lm, const std::vector<std::string>& context, const std::string& text,
                    double temperature) {
  std::vector<int> prefix{lm::CharVocab::kPoemEnd};
  for (const auto& line : context) {
    for (int id : lm.vocab.encode(line)) prefix.push_back(id);
    prefix.push_back(lm::CharVocab::kLineBreak);
  }
  std::vector<int> target = lm.vocab.encode(text);
  target.push_back(lm::CharVocab::kLineBreak);

  auto state = lm::DecoderState::zeros(lm.params.shape);
  Eigen::VectorXd logits;
  for (int id : prefix) {
    lm::DecoderState next;
    logits = lm::step_logits(lm.params, state, id, next);
    state = next;
  }
  double total = 0.0;
  for (int id : target) {
    const Eigen::VectorXd z = logits / temperature;
    const double m = z.maxCoeff();
    double sum = 0.0;
    for (Eigen::Index i = 0; i < z.size(); ++i) sum += std::exp(z[i] - m);
    total += z[id] - m - std::log(sum);
    lm::DecoderState next;
    logits = lm::step_logits(lm.params, state, id, next);
    state = next;
  }
  return total;
}

Relation enumerate_paths(const fst::Wfst& m, int max_len) {
  Relation rel;
  if (m.start() < 0) return rel;
  std::vector<int> in, out;
  auto dfs = [&](auto&& self, int state, double w, int depth) -> void {
    if (auto f = m.final_weight(state)) {
      const auto key = std::make_pair(in, out);
      const double total = w + *f;
      auto it = rel.find(key);
      if (it == rel.end() || total < it->second) rel[key] = total;
    }
    if (depth == max_len) return;
    for (const auto& a : m.arcs(state)) {
      if (a.ilabel != fst::kEpsilon) in.push_back(a.ilabel);
      if (a.olabel != fst::kEpsilon) out.push_back(a.olabel);
      self(self, a.next, w + a.weight, depth + 1);
      if (a.ilabel != fst::kEpsilon) in.pop_back();
      if (a.olabel != fst::kEpsilon) out.pop_back();
    }
  };
  dfs(dfs, m.start(), 0.0, 0);
  return rel;
}

fst::Wfst random_machine(std::uint64_t seed, int states, const fst::SymbolTable& isyms, const fst::SymbolTable& osyms,
                         bool input_eps, bool output_eps) {
  Rng rng(seed);
  fst::Wfst m(isyms, osyms);
  for (int s = 0; s < states; ++s) m.add_state();
  m.set_start(0);
  auto label = [&](const fst::SymbolTable& t, bool eps) {
    const int lo = eps ? 0 : 1;
    return lo + static_cast<int>(rng.below(static_cast<std::uint64_t>(t.size() - lo)));
  };
  for (int s = 0; s < states; ++s) {
    const int arcs = 1 + static_cast<int>(rng.below(3));
    for (int k = 0; k < arcs; ++k) {
      m.add_arc(s, fst::Arc{label(isyms, input_eps), label(osyms, output_eps),
                            0.25 * static_cast<double>(rng.below(9)), static_cast<int>(rng.below(states))});
    }
    if (s == states - 1 || rng.below(3) == 0) m.set_final(s, 0.25 * static_cast<double>(rng.below(5)));
  }
  return m;
}

fst::SymbolTable abc_symbols() {
  fst::SymbolTable t;
  t.add("a");
  t.add("b");
  t.add("c");
  return t;
}

TempDir::TempDir() {
  static std::atomic<int> counter{0};
  std::random_device rd;
  path_ = std::filesystem::temp_directory_path() /
          ("verse-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++) + "-" + std::to_string(rd()));
  std::filesystem::create_directories(path_);
}

TempDir::~TempDir() {
  std::error_code ec;
  std::filesystem::remove_all(path_, ec);
}

}  // namespace verse::testing
