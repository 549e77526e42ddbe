#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "verse/charlm.hpp"
#include "verse/lexicon.hpp"
#include "verse/style_model.hpp"
#include "verse/wfst.hpp"

namespace verse::testing {

std::filesystem::path test_data(const std::string& name);
std::filesystem::path repo_data(const std::string& name);
std::string read_file(const std::filesystem::path& path);

/// Eight words: the stars bars night light above again remember.
const fst::PronLexicon& toy_lexicon();
/// Small LSTM overfit on toy.txt. Cached on disk across test processes.
const lm::LanguageModel& toy_lm();
/// Hand-written style over the toy words.
const style::StyleModel& toy_style();

/// Log probability of `text` + '\n' after poem-end and the context lines,
/// computed with a separate softmax.
double line_logprob(const lm::LanguageModel& lm, const std::vector<std::string>& context, const std::string& text,
                    double temperature);

/// (input labels, output labels) without epsilons -> min weight over every
/// accepting path of at most `max_len` arcs.
using Relation = std::map<std::pair<std::vector<int>, std::vector<int>>, double>;
Relation enumerate_paths(const fst::Wfst& machine, int max_len);

/// Random machine over `isyms`/`osyms`. Weights are multiples of 1/4 so
/// tropical sums are exact. Epsilon appears only on the allowed tapes.
fst::Wfst random_machine(std::uint64_t seed, int states, const fst::SymbolTable& isyms,
                         const fst::SymbolTable& osyms, bool input_eps, bool output_eps);

/// Symbols a, b, c (ids 1..3).
fst::SymbolTable abc_symbols();

class TempDir {
 public:
  TempDir();
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

}  // namespace verse::testing
