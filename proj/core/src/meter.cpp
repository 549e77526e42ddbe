#include "verse/meter.hpp"

#include <algorithm>
#include <deque>
#include <map>

#include "verse/error.hpp"

namespace verse::fst {

std::vector<std::string> word_renderings(std::string_view word, const PronLexicon& lex,
                                         const ScansionOptions& opts) {
  const auto* prons = lex.find(word);
  if (!prons) throw Error("oov", "word not in lexicon: " + std::string(word));
  std::set<std::string> out;
  for (const auto& pron : *prons) {
    std::string r;
    for (const auto& ph : pron) {
      const int d = stress_digit(ph);
      if (d < 0) continue;
      r.push_back(d == 1 || (d == 2 && opts.secondary_is_stressed) ? 'S' : 'U');
    }
    if (r.size() == 1 && opts.monosyllable_wildcard) {
      out.insert("U");
      out.insert("S");
    } else {
      out.insert(r);
    }
  }
  return {out.begin(), out.end()};
}

std::vector<std::string> scansion(const std::vector<std::string>& tokens, const PronLexicon& lex,
                                  const ScansionOptions& opts) {
  std::vector<std::string> acc{""};
  for (const auto& t : tokens) {
    const auto rs = word_renderings(t, lex, opts);
    std::vector<std::string> next;
    next.reserve(acc.size() * rs.size());
    for (const auto& a : acc) {
      for (const auto& r : rs) next.push_back(a + r);
    }
    acc = std::move(next);
  }
  std::sort(acc.begin(), acc.end());
  return acc;
}

namespace {

const std::map<std::string, std::string, std::less<>>& named_patterns() {
  static const std::map<std::string, std::string, std::less<>> names = {
      {"iambic-pentameter", "USUSUSUSUS"}, {"iambic-tetrameter", "USUSUSUS"},
      {"iambic-trimeter", "USUSUS"},       {"trochaic-tetrameter", "SUSUSUSU"},
      {"anapestic-trimeter", "UUSUUSUUS"},
  };
  return names;
}

}  // namespace

MeterPattern MeterPattern::parse(std::string_view text) {
  const auto& names = named_patterns();
  if (const auto it = names.find(text); it != names.end()) return {it->first, it->second};
  if (text.empty()) throw Error("invalid_meter", "empty meter pattern");
  for (char c : text) {
    if (c != 'U' && c != 'S' && c != '*') {
      throw Error("invalid_meter", "unknown meter '" + std::string(text) + "': use a named meter or a U/S/* template");
    }
  }
  return {std::string(text), std::string(text)};
}

MeterScheme MeterScheme::parse(std::string_view text) {
  MeterScheme scheme;
  scheme.name = std::string(text);
  if (text == "common-meter") {
    scheme.patterns = {MeterPattern::parse("iambic-tetrameter"), MeterPattern::parse("iambic-trimeter")};
    return scheme;
  }
  std::size_t pos = 0;
  while (true) {
    const auto comma = text.find(',', pos);
    scheme.patterns.push_back(MeterPattern::parse(text.substr(pos, comma - pos)));
    if (comma == std::string_view::npos) break;
    pos = comma + 1;
  }
  return scheme;
}

bool stress_matches(char stress, char templ) { return templ == '*' || stress == templ; }

namespace {

bool fits_at(const std::string& r, std::size_t at, const std::string& templ) {
  if (at + r.size() > templ.size()) return false;
  for (std::size_t i = 0; i < r.size(); ++i) {
    if (!stress_matches(r[i], templ[at + i])) return false;
  }
  return true;
}

}  // namespace

bool meter_conformance(const std::vector<std::string>& renderings, const MeterPattern& pattern) {
  return std::any_of(renderings.begin(), renderings.end(), [&](const std::string& r) {
    return r.size() == pattern.size() && fits_at(r, 0, pattern.templ);
  });
}

std::set<int> advance_positions(const std::set<int>& from, const std::vector<std::string>& renderings,
                                const MeterPattern& pattern) {
  std::set<int> out;
  for (int p : from) {
    for (const auto& r : renderings) {
      if (fits_at(r, static_cast<std::size_t>(p), pattern.templ)) out.insert(p + static_cast<int>(r.size()));
    }
  }
  return out;
}

std::optional<std::vector<std::string>> matching_rendering(const std::vector<std::string>& tokens,
                                                           const MeterPattern& pattern, const PronLexicon& lex,
                                                           const ScansionOptions& opts) {
  std::vector<std::vector<std::string>> per_word;
  for (const auto& t : tokens) per_word.push_back(word_renderings(t, lex, opts));
  std::vector<std::string> chosen(tokens.size());
  std::function<bool(std::size_t, std::size_t)> search = [&](std::size_t i, std::size_t at) {
    if (i == tokens.size()) return at == pattern.size();
    for (const auto& r : per_word[i]) {
      if (!fits_at(r, at, pattern.templ)) continue;
      chosen[i] = r;
      if (search(i + 1, at + r.size())) return true;
    }
    return false;
  };
  if (!search(0, 0)) return std::nullopt;
  return chosen;
}

RhymeKey rhyme_key(const Pronunciation& pron) {
  int last_stressed = -1, last_vowel = -1;
  for (int i = 0; i < static_cast<int>(pron.size()); ++i) {
    const int d = stress_digit(pron[i]);
    if (d < 0 && !is_vowel(pron[i])) continue;
    last_vowel = i;
    if (d == 1 || d == 2) last_stressed = i;
  }
  const int from = last_stressed >= 0 ? last_stressed : last_vowel;
  RhymeKey key;
  if (from < 0) return key;
  for (std::size_t i = static_cast<std::size_t>(from); i < pron.size(); ++i) key.push_back(strip_stress(pron[i]));
  return key;
}

std::set<RhymeKey> rhyme_keys(std::string_view word, const PronLexicon& lex) {
  std::set<RhymeKey> out;
  for (const auto& p : lex.at(word)) {
    auto k = rhyme_key(p);
    if (!k.empty()) out.insert(std::move(k));
  }
  return out;
}

bool rhyme_check(std::string_view a, std::string_view b, const PronLexicon& lex) {
  if (a == b) return false;
  const auto ka = rhyme_keys(a, lex);
  const auto kb = rhyme_keys(b, lex);
  return std::any_of(ka.begin(), ka.end(), [&](const RhymeKey& k) { return kb.count(k) != 0; });
}

std::string key_string(const RhymeKey& key) {
  std::string out;
  for (std::size_t i = 0; i < key.size(); ++i) {
    if (i) out.push_back(' ');
    out += key[i];
  }
  return out;
}

SymbolTable stress_symbols() {
  SymbolTable t;
  t.add("U");
  t.add("S");
  return t;
}

Wfst build_lexicon_transducer(const PronLexicon& lex, const std::vector<std::string>& vocabulary,
                              const ScansionOptions& opts) {
  std::set<std::string> usable;
  for (const auto& w : vocabulary) {
    if (lex.contains(w)) usable.insert(w);
  }
  SymbolTable in;
  in.add(kPadSymbol);
  for (const auto& w : usable) in.add(w);
  const SymbolTable out = stress_symbols();
  const int u = out.find("U"), s = out.find("S"), pad = in.find(kPadSymbol);

  Wfst t(in, out);
  const int boundary = t.add_state();
  t.set_start(boundary);
  t.set_final(boundary);
  for (const auto& w : usable) {
    const int word = t.input_symbols().find(w);
    for (const auto& r : word_renderings(w, lex, opts)) {
      if (r.empty()) {
        t.add_arc(boundary, Arc{word, kEpsilon, 0.0, boundary});
        continue;
      }
      int from = boundary;
      for (std::size_t i = 0; i < r.size(); ++i) {
        const int to = i + 1 == r.size() ? boundary : t.add_state();
        t.add_arc(from, Arc{i == 0 ? word : pad, r[i] == 'S' ? s : u, 0.0, to});
        from = to;
      }
    }
  }
  return t;
}

Wfst pattern_acceptor(const MeterPattern& pattern) {
  const SymbolTable syms = stress_symbols();
  const int u = syms.find("U"), s = syms.find("S");
  Wfst a(syms, syms);
  int prev = a.add_state();
  a.set_start(prev);
  for (char c : pattern.templ) {
    const int next = a.add_state();
    if (c != 'S') a.add_arc(prev, Arc{u, u, 0.0, next});
    if (c != 'U') a.add_arc(prev, Arc{s, s, 0.0, next});
    prev = next;
  }
  a.set_final(prev);
  return a;
}

Wfst build_line_acceptor(const MeterPattern& pattern, const PronLexicon& lex,
                         const std::vector<std::string>& vocabulary, const ScansionOptions& opts) {
  const Wfst lexicon = build_lexicon_transducer(lex, vocabulary, opts);
  if (lexicon.input_symbols().size() <= 2) {
    throw Error("empty_vocabulary", "no vocabulary word has a pronunciation in the lexicon");
  }
  return compose(lexicon, pattern_acceptor(pattern));
}

Wfst line_automaton(const std::vector<std::string>& tokens, const SymbolTable& symbols) {
  Wfst a(symbols, symbols);
  int prev = a.add_state();
  a.set_start(prev);
  const int pad = symbols.find(kPadSymbol);
  for (const auto& t : tokens) {
    const int sym = symbols.find(t);
    if (sym <= 0 || sym == pad) return Wfst(symbols, symbols);
    const int next = a.add_state();
    a.add_arc(prev, Arc{sym, sym, 0.0, next});
    prev = next;
  }
  a.set_final(prev);
  if (pad > 0) {
    for (int st = 0; st < a.num_states(); ++st) a.add_arc(st, Arc{pad, pad, 0.0, st});
  }
  return a;
}

LineAcceptor::LineAcceptor(const MeterPattern& pattern, const PronLexicon& lex,
                           const std::vector<std::string>& vocabulary, const ScansionOptions& opts)
    : pattern_(pattern), machine_(build_line_acceptor(pattern, lex, vocabulary, opts)) {
  const auto& syms = machine_.input_symbols();
  pad_ = syms.find(kPadSymbol);
  for (int id = 2; id < syms.size(); ++id) words_.push_back(syms.symbol(id));

  const int n = machine_.num_states();
  std::vector<std::vector<int>> closures(static_cast<std::size_t>(n));
  for (int st = 0; st < n; ++st) closures[st] = closure(st);
  word_arcs_.resize(static_cast<std::size_t>(n));
  for (int st = 0; st < n; ++st) {
    for (const auto& a : machine_.arcs(st)) {
      if (a.ilabel < 2) continue;
      const int w = a.ilabel - 2;
      index_.emplace(words_[static_cast<std::size_t>(w)], w);
      for (int b : closures[a.next]) word_arcs_[st].emplace_back(w, b);
    }
    auto& v = word_arcs_[st];
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
  }
}

std::vector<int> LineAcceptor::closure(int state) const {
  std::vector<int> out;
  std::vector<char> seen(static_cast<std::size_t>(machine_.num_states()), 0);
  std::deque<int> queue{state};
  seen[state] = 1;
  while (!queue.empty()) {
    const int s = queue.front();
    queue.pop_front();
    bool has_pad = false;
    for (const auto& a : machine_.arcs(s)) {
      if (a.ilabel != pad_) continue;
      has_pad = true;
      if (!seen[a.next]) {
        seen[a.next] = 1;
        queue.push_back(a.next);
      }
    }
    if (!has_pad) out.push_back(s);
  }
  std::sort(out.begin(), out.end());
  return out;
}

int LineAcceptor::word_index(std::string_view word) const {
  const auto it = index_.find(std::string(word));
  return it == index_.end() ? -1 : it->second;
}

LineAcceptor::StateSet LineAcceptor::initial() const {
  if (machine_.start() < 0) return {};
  return {machine_.start()};
}

LineAcceptor::StateSet LineAcceptor::advance(const StateSet& states, int word) const {
  StateSet out;
  for (int s : states) {
    const auto& v = word_arcs_[static_cast<std::size_t>(s)];
    auto it = std::lower_bound(v.begin(), v.end(), std::make_pair(word, -1));
    for (; it != v.end() && it->first == word; ++it) out.push_back(it->second);
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

bool LineAcceptor::accepts(const StateSet& states) const {
  return std::any_of(states.begin(), states.end(), [&](int s) { return machine_.final_weight(s).has_value(); });
}

std::vector<int> LineAcceptor::final_words() const {
  std::set<int> out;
  for (const auto& v : word_arcs_) {
    for (const auto& [w, t] : v) {
      if (machine_.final_weight(t)) out.insert(w);
    }
  }
  return {out.begin(), out.end()};
}

std::vector<char> LineAcceptor::states_ending_with(const std::function<bool(int)>& ok) const {
  const int n = machine_.num_states();
  std::vector<char> good(static_cast<std::size_t>(n), 0);
  std::vector<std::vector<int>> reverse(static_cast<std::size_t>(n));
  std::deque<int> queue;
  for (int s = 0; s < n; ++s) {
    for (const auto& [w, t] : word_arcs_[s]) {
      reverse[t].push_back(s);
      if (!good[s] && machine_.final_weight(t) && ok(w)) {
        good[s] = 1;
        queue.push_back(s);
      }
    }
  }
  while (!queue.empty()) {
    const int t = queue.front();
    queue.pop_front();
    for (int s : reverse[t]) {
      if (!good[s]) {
        good[s] = 1;
        queue.push_back(s);
      }
    }
  }
  return good;
}

}  // namespace verse::fst
