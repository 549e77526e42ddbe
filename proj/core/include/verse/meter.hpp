#pragma once

#include <functional>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "verse/lexicon.hpp"
#include "verse/wfst.hpp"

namespace verse::fst {

struct ScansionOptions {
  bool secondary_is_stressed = true;  // digit 2 -> S, else U
  bool monosyllable_wildcard = true;  // one-syllable words render as U or S
};

/// Distinct stress renderings of a word over {U,S}, sorted. A word without
/// vowels renders as the empty string. Throws Error("oov").
std::vector<std::string> word_renderings(std::string_view word, const PronLexicon& lex,
                                         const ScansionOptions& opts = {});

/// Cross product of the per-word renderings, one entry per combination (so
/// the size is the product of the per-word counts), sorted.
std::vector<std::string> scansion(const std::vector<std::string>& tokens, const PronLexicon& lex,
                                  const ScansionOptions& opts = {});

struct MeterPattern {
  std::string name;
  std::string templ;  // over {U, S, *}

  /// Named pattern (`iambic-pentameter`, ...) or a literal template.
  static MeterPattern parse(std::string_view text);
  std::size_t size() const { return templ.size(); }
  friend bool operator==(const MeterPattern&, const MeterPattern&) = default;
};

/// One pattern per line, cycled. `common-meter` alternates tetrameter and
/// trimeter; a comma-separated list gives the cycle literally.
struct MeterScheme {
  std::string name;
  std::vector<MeterPattern> patterns;

  static MeterScheme parse(std::string_view text);
  const MeterPattern& for_line(std::size_t line) const { return patterns[line % patterns.size()]; }
};

bool stress_matches(char stress, char templ);

/// True iff some rendering equals the template.
bool meter_conformance(const std::vector<std::string>& renderings, const MeterPattern& pattern);

/// Pattern positions reachable from `from` after consuming one of the
/// renderings; empty means the prefix can no longer fit.
std::set<int> advance_positions(const std::set<int>& from, const std::vector<std::string>& renderings,
                                const MeterPattern& pattern);

/// Per-word renderings of a conforming scansion (first in lexicographic
/// order), or nullopt when the line does not fit.
std::optional<std::vector<std::string>> matching_rendering(const std::vector<std::string>& tokens,
                                                           const MeterPattern& pattern, const PronLexicon& lex,
                                                           const ScansionOptions& opts = {});

using RhymeKey = std::vector<std::string>;

/// Suffix from the last stressed vowel (fallback: last vowel), digits
/// stripped. Empty for a pronunciation without vowels.
RhymeKey rhyme_key(const Pronunciation& pron);
std::set<RhymeKey> rhyme_keys(std::string_view word, const PronLexicon& lex);
/// Distinct words sharing at least one rhyme key.
bool rhyme_check(std::string_view a, std::string_view b, const PronLexicon& lex);
std::string key_string(const RhymeKey& key);

/// {<eps>, U, S}
SymbolTable stress_symbols();
inline constexpr const char* kPadSymbol = "<pad>";

/// Word symbols -> stress symbols. State 0 is the word boundary; each
/// rendering consumes the word on its first arc and `<pad>` on the rest.
Wfst build_lexicon_transducer(const PronLexicon& lex, const std::vector<std::string>& vocabulary,
                              const ScansionOptions& opts = {});
/// Linear acceptor over stress symbols; `*` arcs accept both.
Wfst pattern_acceptor(const MeterPattern& pattern);
/// Lexicon transducer composed with the pattern acceptor. Throws
/// Error("empty_vocabulary") when no vocabulary word is in the lexicon.
Wfst build_line_acceptor(const MeterPattern& pattern, const PronLexicon& lex,
                         const std::vector<std::string>& vocabulary, const ScansionOptions& opts = {});
/// Acceptor for one token sequence over `symbols`, with `<pad>` self-loops
/// so that it composes with a line acceptor. Unknown tokens make it empty.
Wfst line_automaton(const std::vector<std::string>& tokens, const SymbolTable& symbols);

/// Incremental driver over a line acceptor. State sets only ever hold word
/// boundary states.
class LineAcceptor {
 public:
  using StateSet = std::vector<int>;  // sorted, unique

  LineAcceptor(const MeterPattern& pattern, const PronLexicon& lex, const std::vector<std::string>& vocabulary,
               const ScansionOptions& opts = {});

  const Wfst& machine() const { return machine_; }
  const MeterPattern& pattern() const { return pattern_; }
  /// Usable words, sorted; word index i has input symbol i + 2.
  const std::vector<std::string>& words() const { return words_; }
  /// -1 when the word cannot occur in any accepted line.
  int word_index(std::string_view word) const;

  StateSet initial() const;
  StateSet advance(const StateSet& states, int word) const;
  bool accepts(const StateSet& states) const;
  /// Words that end at least one accepted line.
  std::vector<int> final_words() const;
  /// Boundary states from which some accepted completion ends in a word
  /// satisfying `ok`.
  std::vector<char> states_ending_with(const std::function<bool(int)>& ok) const;
  /// (word index, boundary target) pairs leaving a boundary state, sorted.
  const std::vector<std::pair<int, int>>& word_arcs(int state) const {
    return word_arcs_.at(static_cast<std::size_t>(state));
  }
  bool is_final(int state) const { return machine_.final_weight(state).has_value(); }

 private:
  std::vector<int> closure(int state) const;

  MeterPattern pattern_;
  Wfst machine_;
  std::vector<std::string> words_;
  std::unordered_map<std::string, int> index_;
  int pad_ = -1;
  // Per state: (word index, target) for word arcs, sorted.
  std::vector<std::vector<std::pair<int, int>>> word_arcs_;
};

}  // namespace verse::fst
