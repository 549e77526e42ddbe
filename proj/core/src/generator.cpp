#include "verse/generator.hpp"

#include <algorithm>
#include <numeric>

#include "verse/rng.hpp"

namespace verse::gen {

int GenerationSpec::lines() const {
  if (!rhyme_scheme.empty()) return static_cast<int>(rhyme_scheme.size());
  return line_count;
}

void GenerationSpec::validate() const {
  auto fail = [](const std::string& m) { throw Error("invalid_spec", m); };
  if (meter.patterns.empty()) fail("meter has no pattern");
  for (char c : rhyme_scheme) {
    if (c < 'A' || c > 'Z') fail("rhyme scheme must be upper-case letters");
  }
  if (!rhyme_scheme.empty() && line_count != 0 && line_count != static_cast<int>(rhyme_scheme.size())) {
    fail("line count must equal the rhyme scheme length");
  }
  if (lines() <= 0) fail("line count must be positive");
  if (!(lambda_terms >= 0.0) || !(lambda_topics >= 0.0)) fail("boost strengths must be >= 0");
  if (!(temperature > 0.0)) fail("temperature must be > 0");
  if (beam_width < 0) fail("beam width must be >= 1, or 0 for exhaustive search");
  if (samples_per_line < 1) fail("samples per line must be >= 1");
  if (step_budget < 1) fail("step budget must be >= 1");
  if (!(prune_noise >= 0.0)) fail("prune noise must be >= 0");
}

nlohmann::json to_json(const GenerationSpec& s) {
  nlohmann::json meters = nlohmann::json::array();
  for (const auto& p : s.meter.patterns) meters.push_back({{"name", p.name}, {"template", p.templ}});
  return {{"meter", s.meter.name},     {"patterns", meters},
          {"rhyme_scheme", s.rhyme_scheme}, {"lines", s.lines()},
          {"lambda_terms", s.lambda_terms}, {"lambda_topics", s.lambda_topics},
          {"temperature", s.temperature},   {"beam_width", s.beam_width},
          {"samples_per_line", s.samples_per_line}, {"step_budget", s.step_budget},
          {"prune_noise", s.prune_noise},   {"seed", s.seed}};
}

double boosted_score(const BoostHit& w, double lambda_terms, double lambda_topics) {
  return lambda_terms * (w.term + w.bigram) + lambda_topics * w.topic;
}

BoostHit boost_weights(const style::StyleModel* style, const std::string& prev, const std::string& word) {
  BoostHit h;
  h.word = word;
  if (!style) return h;
  h.term = style->term_weight(word);
  h.bigram = style->bigram_weight(prev, word);
  h.topic = style->topic_weight(word);
  return h;
}

void LineStats::add(const LineStats& o) {
  steps += o.steps;
  expansions += o.expansions;
  pruned_lexicon += o.pruned_lexicon;
  pruned_meter += o.pruned_meter;
  pruned_rhyme += o.pruned_rhyme;
  pruned_beam += o.pruned_beam;
  finished += o.finished;
}

nlohmann::json to_json(const LineStats& s) {
  return {{"steps", s.steps},
          {"expansions", s.expansions},
          {"pruned_lexicon", s.pruned_lexicon},
          {"pruned_meter", s.pruned_meter},
          {"pruned_rhyme", s.pruned_rhyme},
          {"pruned_beam", s.pruned_beam},
          {"finished", s.finished}};
}

std::string Poemlet::text() const {
  std::string out;
  for (const auto& l : lines) out += l.text + "\n";
  return out;
}

namespace {

nlohmann::json hit_json(const BoostHit& h) {
  return {{"word", h.word}, {"term", h.term}, {"bigram", h.bigram}, {"topic", h.topic}};
}

nlohmann::json candidate_json(const LineCandidate& c) {
  nlohmann::json hits = nlohmann::json::array();
  for (const auto& h : c.hits) hits.push_back(hit_json(h));
  return {{"text", c.text},   {"words", c.words},         {"stress", c.stress},
          {"score", c.score}, {"base_logprob", c.base_logprob}, {"boost", c.boost},
          {"boost_hits", hits}};
}

bool intersects(const std::set<fst::RhymeKey>& a, const std::set<fst::RhymeKey>& b) {
  for (const auto& k : a) {
    if (b.count(k)) return true;
  }
  return false;
}

}  // namespace

nlohmann::json to_json(const Poemlet& p) {
  nlohmann::json lines = nlohmann::json::array();
  for (const auto& l : p.lines) lines.push_back(candidate_json(l));
  return {{"seed", p.seed}, {"rhyme_scheme", p.rhyme_scheme}, {"meters", p.meters},
          {"lines", lines}, {"stats", to_json(p.stats)}};
}

struct Generator::Impl {
  struct Node {
    std::vector<std::pair<int, int>> children;  // (char id, node), sorted
    int word = -1;
    int lo = 0, hi = 0;  // word ranks below this node
  };

  std::vector<std::string> words;
  std::vector<std::vector<int>> spelled;
  std::vector<std::set<fst::RhymeKey>> keys;
  std::vector<Node> nodes;
  std::vector<int> rank;
  std::map<std::string, std::unique_ptr<fst::LineAcceptor>> acceptors;  // by template
  // Per template: rhyme key -> words that can end a line.
  std::map<std::string, std::map<fst::RhymeKey, std::vector<int>>> enders;
  int space = -1;

  void assign_ranks(int node, int& next) {
    nodes[node].lo = next;
    if (nodes[node].word >= 0) rank[nodes[node].word] = next++;
    for (const auto& [c, child] : nodes[node].children) assign_ranks(child, next);
    nodes[node].hi = next;
  }
};

Generator::Generator(const lm::LanguageModel& lm, const fst::PronLexicon& lexicon, const style::StyleModel* style,
                     GenerationSpec spec)
    : spec_(std::move(spec)), lm_(lm), lexicon_(lexicon), style_(style), impl_(std::make_unique<Impl>()) {
  spec_.validate();
  auto& im = *impl_;
  im.space = lm_.vocab.id(" ");
  if (im.space == lm::CharVocab::kUnknown) {
    throw Error("invalid_model", "language model vocabulary has no space character");
  }

  std::vector<std::string> base = spec_.vocabulary.empty() ? lexicon_.words() : spec_.vocabulary;
  std::vector<std::string> usable;
  for (const auto& w : base) {
    if (!lexicon_.contains(w)) continue;
    const auto ids = lm_.vocab.encode(w);
    const bool ok = !ids.empty() && std::all_of(ids.begin(), ids.end(), [&](int id) {
      return id != lm::CharVocab::kUnknown && id != lm::CharVocab::kLineBreak && id != lm::CharVocab::kPoemEnd &&
             id != im.space;
    });
    if (ok) usable.push_back(w);
  }
  if (usable.empty()) throw Error("empty_vocabulary", "no lexicon word can be spelled by the language model");

  for (const auto& p : spec_.meter.patterns) {
    if (im.acceptors.count(p.templ)) continue;
    im.acceptors.emplace(p.templ, std::make_unique<fst::LineAcceptor>(p, lexicon_, usable, spec_.scansion));
  }
  im.words = im.acceptors.begin()->second->words();
  im.keys.reserve(im.words.size());
  im.nodes.emplace_back();
  for (std::size_t w = 0; w < im.words.size(); ++w) {
    im.keys.push_back(fst::rhyme_keys(im.words[w], lexicon_));
    im.spelled.push_back(lm_.vocab.encode(im.words[w]));
    int node = 0;
    for (int c : im.spelled.back()) {
      auto& ch = im.nodes[node].children;
      auto it = std::lower_bound(ch.begin(), ch.end(), std::make_pair(c, -1));
      if (it == ch.end() || it->first != c) {
        const int fresh = static_cast<int>(im.nodes.size());
        it = ch.insert(it, {c, fresh});
        im.nodes.emplace_back();
      }
      node = it->second;
    }
    im.nodes[node].word = static_cast<int>(w);
  }
  im.rank.assign(im.words.size(), -1);
  int next = 0;
  im.assign_ranks(0, next);

  for (const auto& [templ, acc] : im.acceptors) {
    auto& by_key = im.enders[templ];
    for (int w : acc->final_words()) {
      for (const auto& k : im.keys[w]) by_key[k].push_back(w);
    }
  }
}

Generator::~Generator() = default;
Generator::Generator(Generator&&) noexcept = default;

const fst::LineAcceptor& Generator::acceptor(const fst::MeterPattern& pattern) const {
  const auto it = impl_->acceptors.find(pattern.templ);
  if (it == impl_->acceptors.end()) throw Error("invalid_spec", "pattern not part of the meter scheme");
  return *it->second;
}

RhymeConstraint Generator::constraint_for(int line_index, const Bindings& bindings) const {
  RhymeConstraint c;
  const auto& scheme = spec_.rhyme_scheme;
  if (scheme.empty()) return c;
  const char letter = scheme.at(static_cast<std::size_t>(line_index));
  c.needs_key = true;
  for (const auto& [l, b] : bindings) {
    if (l != letter) c.avoid_keys.insert(b.keys.begin(), b.keys.end());
  }
  if (const auto it = bindings.find(letter); it != bindings.end()) {
    c.keys = it->second.keys;
    c.forbidden_words = it->second.words;
  } else {
    for (std::size_t j = static_cast<std::size_t>(line_index) + 1; j < scheme.size(); ++j) {
      if (scheme[j] == letter) {
        c.partners.push_back(spec_.meter.for_line(j));
        break;
      }
    }
  }
  return c;
}

namespace {

struct Hyp {
  std::vector<int> chars;
  lm::DecoderState state;
  Eigen::VectorXd logp;
  double base = 0.0;
  double boost = 0.0;
  int node = 0;
  fst::LineAcceptor::StateSet states;
  std::vector<int> words;
  std::vector<BoostHit> hits;
};

struct Cand {
  int parent = 0;
  int ch = 0;
  double base = 0.0;
  double boost = 0.0;
  int node = 0;
  int word = -1;  // completed by this character
  BoostHit hit;
  fst::LineAcceptor::StateSet states;
  double key = 0.0;
};

}  // namespace

std::vector<LineCandidate> Generator::generate_line(const std::vector<std::string>& left_context, int line_index,
                                                    const RhymeConstraint& constraint, std::uint64_t seed,
                                                    LineStats* stats_out, const TraceFn& trace) const {
  const auto& im = *impl_;
  const fst::MeterPattern& pattern = spec_.meter.for_line(static_cast<std::size_t>(line_index));
  const fst::LineAcceptor& acc = acceptor(pattern);
  const int nwords = static_cast<int>(im.words.size());
  LineStats stats;

  // Which words may end this line.
  std::vector<char> end_ok(static_cast<std::size_t>(nwords), 1);
  if (constraint.needs_key) {
    for (int w = 0; w < nwords; ++w) {
      const auto& k = im.keys[w];
      bool ok = !k.empty() && !constraint.forbidden_words.count(im.words[w]) &&
                (constraint.keys.empty() || intersects(k, constraint.keys)) && !intersects(k, constraint.avoid_keys);
      for (const auto& partner : constraint.partners) {
        if (!ok) break;
        const auto& by_key = im.enders.at(partner.templ);
        bool found = false;
        for (const auto& key : k) {
          const auto it = by_key.find(key);
          if (it == by_key.end()) continue;
          for (int v : it->second) {
            if (v != w && !intersects(im.keys[v], constraint.avoid_keys)) {
              found = true;
              break;
            }
          }
          if (found) break;
        }
        ok = found;
      }
      end_ok[w] = ok;
    }
  }
  const std::vector<char> good = acc.states_ending_with([&](int w) { return end_ok[w] != 0; });

  auto diagnostics = [&](const std::string& best) {
    nlohmann::json keys = nlohmann::json::array();
    for (const auto& k : constraint.keys) keys.push_back(fst::key_string(k));
    return nlohmann::json{{"line", line_index},  {"pattern", pattern.templ}, {"rhyme_keys", keys},
                          {"stats", to_json(stats)}, {"best_partial", best}};
  };
  const auto start = acc.initial();
  if (start.empty() || !good[start.front()]) {
    throw GenerationError("no line fits the meter and rhyme constraints with this vocabulary", diagnostics(""));
  }

  std::map<fst::LineAcceptor::StateSet, std::vector<int>> allowed_cache;
  auto allowed = [&](const fst::LineAcceptor::StateSet& states) -> const std::vector<int>& {
    auto it = allowed_cache.find(states);
    if (it != allowed_cache.end()) return it->second;
    std::vector<char> mark(static_cast<std::size_t>(nwords), 0);
    for (int s : states) {
      for (const auto& [w, t] : acc.word_arcs(s)) {
        if (good[t] || (acc.is_final(t) && end_ok[w])) mark[im.rank[w]] = 1;
      }
    }
    std::vector<int> prefix(static_cast<std::size_t>(nwords) + 1, 0);
    for (int i = 0; i < nwords; ++i) prefix[i + 1] = prefix[i] + mark[i];
    return allowed_cache.emplace(states, std::move(prefix)).first->second;
  };

  const auto& params = lm_.params;
  Hyp root;
  root.state = lm::DecoderState::zeros(params.shape);
  {
    lm::DecoderState next;
    Eigen::VectorXd logits = lm::step_logits(params, root.state, lm::CharVocab::kPoemEnd, next);
    root.state = std::move(next);
    for (const auto& line : left_context) {
      auto ids = lm_.vocab.encode(line);
      ids.push_back(lm::CharVocab::kLineBreak);
      for (int id : ids) {
        logits = lm::step_logits(params, root.state, id, next);
        root.state = std::move(next);
      }
    }
    root.logp = lm::log_softmax(logits, spec_.temperature);
  }
  root.states = start;

  Rng rng(seed);
  std::vector<Hyp> beam;
  beam.push_back(std::move(root));
  std::vector<LineCandidate> finished;
  std::vector<Cand> cands;

  auto line_words = [&](const Hyp& h, int last) {
    std::vector<std::string> out;
    for (int w : h.words) out.push_back(im.words[w]);
    if (last >= 0) out.push_back(im.words[last]);
    return out;
  };
  auto text_of = [&](const Hyp& h) { return lm_.vocab.decode(h.chars); };

  std::string best_partial;
  while (!beam.empty() && stats.steps < spec_.step_budget) {
    ++stats.steps;
    cands.clear();
    for (int i = 0; i < static_cast<int>(beam.size()); ++i) {
      const Hyp& h = beam[i];
      const auto& node = im.nodes[h.node];
      const auto& prefix = allowed(h.states);
      for (const auto& [c, child] : node.children) {
        const auto& n = im.nodes[child];
        if (prefix[n.hi] - prefix[n.lo] == 0) {
          ++stats.pruned_lexicon;
          continue;
        }
        Cand cand;
        cand.parent = i;
        cand.ch = c;
        cand.base = h.base + h.logp[c];
        cand.boost = h.boost;
        cand.node = child;
        cands.push_back(std::move(cand));
      }
      const int w = node.word;
      if (w < 0) continue;
      if (prefix[im.rank[w] + 1] - prefix[im.rank[w]] == 0) {
        ++stats.pruned_meter;
        continue;
      }
      const auto after = acc.advance(h.states, w);
      const std::string prev = h.words.empty() ? std::string() : im.words[h.words.back()];
      const BoostHit hit = boost_weights(style_, prev, im.words[w]);
      const double boost = h.boost + boosted_score(hit, spec_.lambda_terms, spec_.lambda_topics);

      fst::LineAcceptor::StateSet onward;
      for (int s : after) {
        if (good[s]) onward.push_back(s);
      }
      if (!onward.empty()) {
        Cand cand;
        cand.parent = i;
        cand.ch = im.space;
        cand.base = h.base + h.logp[im.space];
        cand.boost = boost;
        cand.node = 0;
        cand.word = w;
        cand.hit = hit;
        cand.states = std::move(onward);
        cands.push_back(std::move(cand));
      }
      if (acc.accepts(after)) {
        if (!end_ok[w]) {
          ++stats.pruned_rhyme;
          continue;
        }
        LineCandidate lc;
        lc.words = line_words(h, w);
        lc.text = text_of(h);
        lc.base_logprob = h.base + h.logp[lm::CharVocab::kLineBreak];
        lc.boost = boost;
        lc.score = lc.base_logprob + lc.boost;
        lc.hits = h.hits;
        if (hit.term > 0.0 || hit.bigram > 0.0 || hit.topic > 0.0) lc.hits.push_back(hit);
        if (auto r = fst::matching_rendering(lc.words, pattern, lexicon_, spec_.scansion)) lc.stress = *r;
        finished.push_back(std::move(lc));
        ++stats.finished;
      }
    }
    stats.expansions += static_cast<long>(cands.size());

    for (auto& c : cands) {
      c.key = c.base + c.boost;
      if (spec_.prune_noise > 0.0) c.key += spec_.prune_noise * rng.gumbel();
    }
    std::vector<int> order(cands.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return cands[a].key > cands[b].key; });
    std::size_t keep = order.size();
    if (spec_.beam_width > 0 && keep > static_cast<std::size_t>(spec_.beam_width)) {
      keep = static_cast<std::size_t>(spec_.beam_width);
    }
    stats.pruned_beam += static_cast<long>(order.size() - keep);

    std::vector<Hyp> next_beam;
    next_beam.reserve(keep);
    for (std::size_t r = 0; r < keep; ++r) {
      Cand& c = cands[order[r]];
      const Hyp& p = beam[c.parent];
      Hyp h;
      h.chars = p.chars;
      h.chars.push_back(c.ch);
      h.base = c.base;
      h.boost = c.boost;
      h.node = c.node;
      h.words = p.words;
      h.hits = p.hits;
      if (c.word >= 0) {
        h.words.push_back(c.word);
        if (c.hit.term > 0.0 || c.hit.bigram > 0.0 || c.hit.topic > 0.0) h.hits.push_back(c.hit);
        h.states = std::move(c.states);
      } else {
        h.states = p.states;
      }
      lm::DecoderState st;
      const Eigen::VectorXd logits = lm::step_logits(params, p.state, c.ch, st);
      h.state = std::move(st);
      h.logp = lm::log_softmax(logits, spec_.temperature);
      next_beam.push_back(std::move(h));
    }
    beam = std::move(next_beam);
    if (!beam.empty()) best_partial = text_of(beam.front());
    if (trace) {
      std::vector<TraceEntry> entries;
      entries.reserve(beam.size());
      for (const auto& h : beam) entries.push_back({text_of(h), line_words(h, -1), h.base, h.boost, h.base + h.boost});
      trace(stats.steps, entries);
    }
  }

  if (stats_out) stats_out->add(stats);
  if (finished.empty()) {
    throw GenerationError("no candidate line within the step budget", diagnostics(best_partial));
  }
  std::stable_sort(finished.begin(), finished.end(), [](const LineCandidate& a, const LineCandidate& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.text < b.text;
  });
  if (finished.size() > static_cast<std::size_t>(spec_.samples_per_line)) {
    finished.resize(static_cast<std::size_t>(spec_.samples_per_line));
  }
  return finished;
}

Poemlet Generator::generate_poemlet(std::uint64_t seed, const TraceFn& trace) const {
  Poemlet poem;
  poem.seed = seed;
  poem.rhyme_scheme = spec_.rhyme_scheme;
  Bindings bindings;
  std::vector<std::string> context;
  const int n = spec_.lines();
  for (int i = 0; i < n; ++i) {
    const RhymeConstraint c = constraint_for(i, bindings);
    std::vector<LineCandidate> cands;
    try {
      cands = generate_line(context, i, c, mix_seed(seed, static_cast<std::uint64_t>(i)), &poem.stats, trace);
    } catch (const GenerationError& e) {
      nlohmann::json details = e.details();
      details["poemlet_seed"] = seed;
      if (!spec_.rhyme_scheme.empty()) {
        const char letter = spec_.rhyme_scheme[static_cast<std::size_t>(i)];
        details["letter"] = std::string(1, letter);
        if (const auto it = bindings.find(letter); it != bindings.end()) {
          details["bound_words"] = std::vector<std::string>(it->second.words.begin(), it->second.words.end());
        }
      }
      throw GenerationError("line " + std::to_string(i + 1) + ": " + e.what(), details);
    }
    LineCandidate& best = cands.front();
    if (!spec_.rhyme_scheme.empty()) {
      const char letter = spec_.rhyme_scheme[static_cast<std::size_t>(i)];
      const std::string& end = best.words.back();
      auto [it, fresh] = bindings.try_emplace(letter);
      if (fresh) it->second.keys = fst::rhyme_keys(end, lexicon_);
      it->second.words.insert(end);
    }
    context.push_back(best.text);
    poem.meters.push_back(spec_.meter.for_line(static_cast<std::size_t>(i)).templ);
    poem.lines.push_back(std::move(best));
  }
  return poem;
}

BatchResult Generator::batch_generate(int count) const {
  BatchResult out;
  LineStats totals;
  long words = 0, boost_words = 0;
  nlohmann::json items = nlohmann::json::array();
  for (int i = 0; i < count; ++i) {
    const std::uint64_t seed = mix_seed(spec_.seed, static_cast<std::uint64_t>(i));
    try {
      Poemlet p = generate_poemlet(seed);
      totals.add(p.stats);
      long pw = 0, ph = 0;
      for (const auto& l : p.lines) {
        pw += static_cast<long>(l.words.size());
        ph += static_cast<long>(l.hits.size());
      }
      words += pw;
      boost_words += ph;
      nlohmann::json item = to_json(p);
      item["index"] = i;
      item["boost_word_count"] = ph;
      item["word_count"] = pw;
      items.push_back(std::move(item));
      out.poemlets.emplace_back(std::move(p));
    } catch (const GenerationError& e) {
      out.failures.push_back({i, e.code(), e.what(), e.details()});
      out.poemlets.emplace_back(std::nullopt);
    } catch (const Error& e) {
      out.failures.push_back({i, e.code(), e.what(), nullptr});
      out.poemlets.emplace_back(std::nullopt);
    }
  }
  nlohmann::json failures = nlohmann::json::array();
  for (const auto& f : out.failures) {
    failures.push_back({{"index", f.index}, {"code", f.code}, {"message", f.message}, {"details", f.details}});
  }
  out.report = {{"spec", to_json(spec_)},
                {"seed_scheme", "poemlet i uses mix_seed(seed, i); line j uses mix_seed(poemlet seed, j)"},
                {"requested", count},
                {"generated", count - static_cast<int>(out.failures.size())},
                {"poemlets", items},
                {"failures", failures},
                {"totals", to_json(totals)},
                {"boost_word_count", boost_words},
                {"word_count", words},
                {"boost_word_frequency", words ? static_cast<double>(boost_words) / static_cast<double>(words) : 0.0}};
  return out;
}

bool validate_meter(const std::vector<std::string>& words, const fst::MeterPattern& pattern,
                    const fst::PronLexicon& lexicon, const fst::ScansionOptions& opts) {
  for (const auto& w : words) {
    if (!lexicon.contains(w)) return false;
  }
  return fst::meter_conformance(fst::scansion(words, lexicon, opts), pattern);
}

bool validate_rhyme(const std::vector<std::string>& end_words, const std::string& scheme,
                    const fst::PronLexicon& lexicon) {
  if (scheme.empty()) return true;
  if (end_words.size() != scheme.size()) return false;
  for (std::size_t i = 0; i < scheme.size(); ++i) {
    for (std::size_t j = i + 1; j < scheme.size(); ++j) {
      if (scheme[i] == scheme[j] && !fst::rhyme_check(end_words[i], end_words[j], lexicon)) return false;
    }
  }
  return true;
}

}  // namespace verse::gen
