#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "verse/charlm.hpp"
#include "verse/error.hpp"
#include "verse/lexicon.hpp"
#include "verse/meter.hpp"
#include "verse/style_model.hpp"

namespace verse::gen {

struct GenerationSpec {
  fst::MeterScheme meter = fst::MeterScheme::parse("iambic-tetrameter");
  std::string rhyme_scheme;  // letters, e.g. "ABAB"; empty = unrhymed
  int line_count = 0;        // 0 = |rhyme_scheme|
  double lambda_terms = 0.0;
  double lambda_topics = 0.0;
  double temperature = 0.8;
  int beam_width = 16;  // 0 = exhaustive (no beam pruning)
  int samples_per_line = 4;
  int step_budget = 2000;    // beam steps per line
  double prune_noise = 1.0;  // Gumbel scale on the pruning key; 0 = deterministic
  std::uint64_t seed = 1;
  std::vector<std::string> vocabulary;  // empty = every lexicon word
  fst::ScansionOptions scansion;

  /// Effective line count; throws Error("invalid_spec") on bad settings.
  int lines() const;
  void validate() const;
};

nlohmann::json to_json(const GenerationSpec& spec);

struct BoostHit {
  std::string word;
  double term = 0.0;    // max(high-entropy, expanded)
  double bigram = 0.0;  // high-entropy bigram ending at the word
  double topic = 0.0;
};

/// lambda_terms * (term + bigram) + lambda_topics * topic; zero without a style.
double boosted_score(const BoostHit& weights, double lambda_terms, double lambda_topics);
BoostHit boost_weights(const style::StyleModel* style, const std::string& prev, const std::string& word);

struct LineCandidate {
  std::string text;
  std::vector<std::string> words;
  std::vector<std::string> stress;  // per-word rendering that fits the meter
  double score = 0.0;               // base_logprob + boost
  double base_logprob = 0.0;
  double boost = 0.0;
  std::vector<BoostHit> hits;  // words with a non-zero weight
};

/// Rhyme requirement for one line's end word.
struct RhymeConstraint {
  std::set<fst::RhymeKey> keys;             // end word must share one; empty = free
  std::set<std::string> forbidden_words;    // identical end words do not rhyme
  std::set<fst::RhymeKey> avoid_keys;       // keys bound to other letters
  std::vector<fst::MeterPattern> partners;  // later lines that must rhyme with this one
  bool needs_key = false;                   // end word must have a rhyme key
};

struct Binding {
  std::set<fst::RhymeKey> keys;
  std::set<std::string> words;
};
using Bindings = std::map<char, Binding>;

struct LineStats {
  int steps = 0;
  long expansions = 0;
  long pruned_lexicon = 0;  // characters that start no usable word
  long pruned_meter = 0;    // completed words the meter acceptor rejects
  long pruned_rhyme = 0;    // line ends with an unsuitable end word
  long pruned_beam = 0;
  int finished = 0;

  void add(const LineStats& o);
};
nlohmann::json to_json(const LineStats& s);

/// Raised when a line yields no candidate; details carry diagnostics.
class GenerationError : public Error {
 public:
  GenerationError(const std::string& message, nlohmann::json details)
      : Error("exhausted", message), details_(std::move(details)) {}
  const nlohmann::json& details() const { return details_; }

 private:
  nlohmann::json details_;
};

struct TraceEntry {
  std::string text;
  std::vector<std::string> words;
  double base_logprob = 0.0;
  double boost = 0.0;
  double score = 0.0;
};
/// Called after each beam step with the surviving hypotheses, best first.
using TraceFn = std::function<void(int step, const std::vector<TraceEntry>& beam)>;

struct Poemlet {
  std::vector<LineCandidate> lines;
  std::vector<std::string> meters;  // pattern per line
  std::string rhyme_scheme;
  std::uint64_t seed = 0;
  LineStats stats;

  std::string text() const;
};
nlohmann::json to_json(const Poemlet& p);

struct BatchFailure {
  int index = 0;
  std::string code;
  std::string message;
  nlohmann::json details;
};

struct BatchResult {
  std::vector<std::optional<Poemlet>> poemlets;  // nullopt where generation failed
  std::vector<BatchFailure> failures;
  nlohmann::json report;
};

/// Holds shared read-only models plus per-pattern acceptors. Const methods
/// are safe to call concurrently.
class Generator {
 public:
  Generator(const lm::LanguageModel& lm, const fst::PronLexicon& lexicon, const style::StyleModel* style,
            GenerationSpec spec);
  ~Generator();
  Generator(Generator&&) noexcept;

  const GenerationSpec& spec() const { return spec_; }
  const fst::LineAcceptor& acceptor(const fst::MeterPattern& pattern) const;
  const fst::PronLexicon& lexicon() const { return lexicon_; }

  /// Candidates for line `line_index` given the accepted lines so far,
  /// sorted by score (best first). Throws GenerationError.
  std::vector<LineCandidate> generate_line(const std::vector<std::string>& left_context, int line_index,
                                           const RhymeConstraint& constraint, std::uint64_t seed,
                                           LineStats* stats = nullptr, const TraceFn& trace = {}) const;

  /// Rhyme constraint of line `line_index` under the scheme and bindings.
  RhymeConstraint constraint_for(int line_index, const Bindings& bindings) const;

  Poemlet generate_poemlet(std::uint64_t seed, const TraceFn& trace = {}) const;
  /// Poemlet i uses seed mix_seed(spec.seed, i); line j of it uses
  /// mix_seed(poemlet seed, j). Failures are collected per index.
  BatchResult batch_generate(int count) const;

 private:
  struct Impl;
  GenerationSpec spec_;
  const lm::LanguageModel& lm_;
  const fst::PronLexicon& lexicon_;
  const style::StyleModel* style_;
  std::unique_ptr<Impl> impl_;
};

/// Independent checks that share no code with the search.
bool validate_meter(const std::vector<std::string>& words, const fst::MeterPattern& pattern,
                    const fst::PronLexicon& lexicon, const fst::ScansionOptions& opts = {});
/// Every pair of lines sharing a scheme letter rhymes.
bool validate_rhyme(const std::vector<std::string>& end_words, const std::string& scheme,
                    const fst::PronLexicon& lexicon);

}  // namespace verse::gen
