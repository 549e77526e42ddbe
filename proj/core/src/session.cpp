#include "verse/session.hpp"

#include <algorithm>
#include <chrono>
#include <ctime>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>

#include "verse/corpus.hpp"
#include "verse/error.hpp"
#include "verse/rng.hpp"

namespace verse::service {

namespace {

using nlohmann::json;

std::string now_iso() {
  const auto now = std::chrono::system_clock::now();
  const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(now.time_since_epoch()).count() % 1000;
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%S", &tm);
  char out[40];
  std::snprintf(out, sizeof out, "%s.%03dZ", buf, static_cast<int>(ms));
  return out;
}

std::string scheme_of(const json& doc) { return doc.at("spec").at("rhyme_scheme").get<std::string>(); }

int line_total(const json& doc) { return doc.at("spec").at("lines").get<int>(); }

bool complete(const json& doc) {
  return static_cast<int>(doc.at("accepted_lines").size()) >= line_total(doc);
}

json keys_json(const std::set<fst::RhymeKey>& keys) {
  json out = json::array();
  for (const auto& k : keys) out.push_back(fst::key_string(k));
  return out;
}

fst::RhymeKey key_from_string(const std::string& s) {
  fst::RhymeKey k;
  std::istringstream in(s);
  for (std::string p; in >> p;) k.push_back(p);
  return k;
}

}  // namespace

gen::GenerationSpec spec_from_json(const json& j) {
  static const std::set<std::string> known = {"meter",       "rhyme_scheme", "lines",        "lambda_terms",
                                              "lambda_topics", "temperature", "beam_width",   "samples_per_line",
                                              "step_budget", "prune_noise",  "seed",         "vocabulary"};
  if (!j.is_object()) throw Error("invalid_spec", "spec must be a JSON object");
  for (const auto& [k, v] : j.items()) {
    if (!known.count(k)) throw Error("invalid_spec", "unknown spec field '" + k + "'");
  }
  gen::GenerationSpec s;
  try {
    s.meter = fst::MeterScheme::parse(j.value("meter", std::string("iambic-tetrameter")));
    s.rhyme_scheme = j.value("rhyme_scheme", std::string());
    s.line_count = j.value("lines", 0);
    s.lambda_terms = j.value("lambda_terms", 0.0);
    s.lambda_topics = j.value("lambda_topics", 0.0);
    s.temperature = j.value("temperature", 0.8);
    s.beam_width = j.value("beam_width", 16);
    s.samples_per_line = j.value("samples_per_line", 4);
    s.step_budget = j.value("step_budget", 2000);
    s.prune_noise = j.value("prune_noise", 1.0);
    s.seed = j.value("seed", std::uint64_t{1});
    s.vocabulary = j.value("vocabulary", std::vector<std::string>{});
  } catch (const json::exception& e) {
    throw Error("invalid_spec", std::string("bad spec field: ") + e.what());
  }
  s.validate();
  return s;
}

json spec_to_json(const gen::GenerationSpec& s) {
  json j = {{"meter", s.meter.name},
            {"rhyme_scheme", s.rhyme_scheme},
            {"lines", s.lines()},
            {"lambda_terms", s.lambda_terms},
            {"lambda_topics", s.lambda_topics},
            {"temperature", s.temperature},
            {"beam_width", s.beam_width},
            {"samples_per_line", s.samples_per_line},
            {"step_budget", s.step_budget},
            {"prune_noise", s.prune_noise},
            {"seed", s.seed}};
  if (!s.vocabulary.empty()) j["vocabulary"] = s.vocabulary;
  return j;
}

gen::Bindings bindings_from_json(const json& j) {
  gen::Bindings out;
  for (const auto& [letter, b] : j.items()) {
    gen::Binding binding;
    for (const auto& k : b.at("keys")) binding.keys.insert(key_from_string(k.get<std::string>()));
    for (const auto& w : b.at("words")) binding.words.insert(w.get<std::string>());
    out.emplace(letter.at(0), std::move(binding));
  }
  return out;
}

json candidate_to_json(const gen::LineCandidate& c, const std::string& id) {
  json hits = json::array();
  for (const auto& h : c.hits) {
    hits.push_back({{"word", h.word}, {"term", h.term}, {"bigram", h.bigram}, {"topic", h.topic}});
  }
  json scansion = json::array();
  for (std::size_t i = 0; i < c.words.size(); ++i) {
    scansion.push_back({{"word", c.words[i]}, {"stress", i < c.stress.size() ? c.stress[i] : std::string()}});
  }
  return {{"id", id},
          {"text", c.text},
          {"words", c.words},
          {"score", c.score},
          {"base_logprob", c.base_logprob},
          {"boost", c.boost},
          {"scansion", scansion},
          {"boost_hits", hits}};
}

void apply(SessionState& st, const json& entry) {
  const std::string op = entry.at("op").get<std::string>();
  const std::string ts = entry.at("ts").get<std::string>();
  auto& doc = st.doc;
  if (op == "create") {
    st = SessionState{};
    st.doc = entry.at("doc");
    return;
  }
  if (doc.is_null()) throw Error("corrupt_journal", "journal does not start with a create entry");

  if (op == "candidates") {
    if (complete(doc)) throw Error("poem_complete", "all lines of the poem are accepted");
    st.undo.push_back(doc);
    st.redo.clear();
    doc["pending_candidates"] = entry.at("candidates");
    doc["request_counter"] = doc.at("request_counter").get<std::uint64_t>() + 1;
    doc["updated"] = ts;
  } else if (op == "accept") {
    if (complete(doc)) throw Error("poem_complete", "all lines of the poem are accepted");
    const json& line = entry.at("line");
    const json& prov = line.at("provenance");
    if (prov.at("kind") == "generated") {
      const auto& pending = doc.at("pending_candidates");
      const bool found = std::any_of(pending.begin(), pending.end(),
                                     [&](const json& c) { return c.at("id") == prov.at("candidate_id"); });
      if (!found) {
        throw Error("stale_candidate", "candidate " + prov.at("candidate_id").get<std::string>() + " is not pending");
      }
    }
    st.undo.push_back(doc);
    st.redo.clear();
    const std::string scheme = scheme_of(doc);
    const std::size_t index = doc.at("accepted_lines").size();
    if (!scheme.empty()) {
      const std::string letter(1, scheme.at(index));
      auto& bindings = doc["rhyme_bindings"];
      const auto& words = line.at("words");
      const std::string end = words.empty() ? std::string() : words.back().get<std::string>();
      if (!bindings.contains(letter)) {
        bindings[letter] = {{"keys", line.at("rhyme_keys")}, {"words", json::array({end})}};
      } else {
        auto& bw = bindings[letter]["words"];
        if (std::find(bw.begin(), bw.end(), json(end)) == bw.end()) {
          bw.push_back(end);
          std::vector<std::string> sorted = bw.get<std::vector<std::string>>();
          std::sort(sorted.begin(), sorted.end());
          bw = sorted;
        }
      }
    }
    doc["accepted_lines"].push_back(line);
    doc["pending_candidates"] = json::array();
    doc["updated"] = ts;
  } else if (op == "undo") {
    if (st.undo.empty()) throw Error("nothing_to_undo", "no action to undo");
    st.redo.push_back(std::move(doc));
    doc = std::move(st.undo.back());
    st.undo.pop_back();
  } else if (op == "redo") {
    if (st.redo.empty()) throw Error("nothing_to_redo", "no undone action to redo");
    st.undo.push_back(std::move(doc));
    doc = std::move(st.redo.back());
    st.redo.pop_back();
  } else {
    throw Error("corrupt_journal", "unknown journal op '" + op + "'");
  }
}

SessionState replay(const std::vector<json>& journal) {
  SessionState st;
  for (const auto& e : journal) service::apply(st, e);
  return st;
}

std::string export_session(const json& doc, const std::string& format) {
  const std::string title = doc.value("title", std::string("Untitled"));
  const auto& lines = doc.at("accepted_lines");
  if (format == "text") {
    std::string out = title + "\n";
    if (!lines.empty()) out += "\n";
    for (const auto& l : lines) out += l.at("text").get<std::string>() + "\n";
    return out;
  }
  if (format == "markdown") {
    std::string out = "# " + title + "\n";
    if (!lines.empty()) out += "\n";
    for (std::size_t i = 0; i < lines.size(); ++i) {
      out += lines[i].at("text").get<std::string>();
      out += i + 1 < lines.size() ? "  \n" : "\n";
    }
    return out;
  }
  if (format == "json") return doc.dump(2) + "\n";
  throw Error("invalid_format", "export format must be text, markdown or json");
}

SessionManager::SessionManager(std::shared_ptr<const Models> models, std::filesystem::path dir)
    : models_(std::move(models)), dir_(std::move(dir)), styles_(models_->styles) {
  std::random_device rd;
  id_salt_ = (static_cast<std::uint64_t>(rd()) << 32) ^ rd() ^
             static_cast<std::uint64_t>(std::chrono::steady_clock::now().time_since_epoch().count());
  std::filesystem::create_directories(dir_);
  std::vector<std::filesystem::path> files;
  for (const auto& e : std::filesystem::directory_iterator(dir_)) {
    if (e.is_regular_file() && e.path().extension() == ".jsonl") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  for (const auto& f : files) {
    try {
      auto s = std::make_shared<Session>();
      s->state = replay(read_journal(f));
      sessions_.emplace(s->state.doc.at("id").get<std::string>(), std::move(s));
    } catch (const std::exception& e) {
      std::cerr << "skipping session journal " << f << ": " << e.what() << '\n';
    }
  }
}

void SessionManager::add_style(const std::string& id, std::shared_ptr<const style::StyleModel> style) {
  std::lock_guard lock(mutex_);
  styles_[id] = std::move(style);
}

std::vector<std::string> SessionManager::style_ids() const {
  std::lock_guard lock(mutex_);
  std::vector<std::string> out;
  for (const auto& [id, s] : styles_) out.push_back(id);
  return out;
}

std::shared_ptr<const style::StyleModel> SessionManager::style(const std::string& id) const {
  std::lock_guard lock(mutex_);
  const auto it = styles_.find(id);
  if (it == styles_.end()) throw Error("unknown_style", "no style with id '" + id + "'");
  return it->second;
}

std::filesystem::path SessionManager::journal_path(const std::string& id) const { return dir_ / (id + ".jsonl"); }

std::vector<json> SessionManager::read_journal(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("io_error", "cannot read " + path.string());
  std::vector<json> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    try {
      out.push_back(json::parse(line));
    } catch (const json::exception& e) {
      throw Error("corrupt_journal", path.string() + ": " + e.what());
    }
  }
  return out;
}

std::shared_ptr<SessionManager::Session> SessionManager::find(const std::string& id) const {
  std::lock_guard lock(mutex_);
  const auto it = sessions_.find(id);
  if (it == sessions_.end()) throw Error("unknown_session", "no session with id '" + id + "'");
  return it->second;
}

void SessionManager::commit(const std::string& id, Session& s, json entry) {
  SessionState next = s.state;
  service::apply(next, entry);
  {
    std::ofstream out(journal_path(id), std::ios::app);
    if (!out) throw Error("io_error", "cannot append to the session journal");
    out << entry.dump() << '\n';
    out.flush();
    if (!out) throw Error("io_error", "cannot append to the session journal");
  }
  s.state = std::move(next);
}

json SessionManager::view(const SessionState& s) const {
  json v = s.doc;
  v["can_undo"] = !s.undo.empty();
  v["can_redo"] = !s.redo.empty();
  v["complete"] = complete(s.doc);
  const std::size_t index = s.doc.at("accepted_lines").size();
  if (!complete(s.doc)) {
    const auto spec = spec_from_json(s.doc.at("spec"));
    json next = {{"index", index}, {"meter", spec.meter.for_line(index).templ}};
    if (!spec.rhyme_scheme.empty()) next["letter"] = std::string(1, spec.rhyme_scheme[index]);
    v["next_line"] = next;
  } else {
    v["next_line"] = nullptr;
  }
  return v;
}

json SessionManager::create(const json& request) {
  if (!request.is_object()) throw Error("invalid_request", "body must be a JSON object");
  const std::string style_id = request.value("style_id", std::string());
  if (style_id.empty()) throw Error("invalid_request", "style_id is required");
  style(style_id);
  const gen::GenerationSpec spec = spec_from_json(request.value("spec", json::object()));

  std::string id;
  {
    std::lock_guard lock(mutex_);
    for (std::uint64_t n = sessions_.size();; ++n) {
      char buf[17];
      std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(mix_seed(id_salt_, n)));
      id = buf;
      if (!sessions_.count(id) && !std::filesystem::exists(journal_path(id))) break;
    }
    sessions_.emplace(id, std::make_shared<Session>());
  }
  const std::string ts = now_iso();
  json doc = {{"id", id},
              {"style_id", style_id},
              {"title", request.value("title", std::string("Untitled"))},
              {"seed", spec.seed},
              {"spec", spec_to_json(spec)},
              {"accepted_lines", json::array()},
              {"rhyme_bindings", json::object()},
              {"pending_candidates", json::array()},
              {"request_counter", 0},
              {"created", ts},
              {"updated", ts}};
  auto s = find(id);
  std::lock_guard lock(s->mutex);
  try {
    commit(id, *s, {{"op", "create"}, {"ts", ts}, {"doc", doc}});
  } catch (...) {
    std::lock_guard g(mutex_);
    sessions_.erase(id);
    throw;
  }
  return view(s->state);
}

json SessionManager::get(const std::string& id) const {
  auto s = find(id);
  std::lock_guard lock(s->mutex);
  return view(s->state);
}

std::vector<std::string> SessionManager::list() const {
  std::lock_guard lock(mutex_);
  std::vector<std::string> out;
  for (const auto& [id, s] : sessions_) out.push_back(id);
  return out;
}

const gen::Generator& SessionManager::generator_for(Session& s) {
  if (!s.generator) {
    gen::GenerationSpec spec = spec_from_json(s.state.doc.at("spec"));
    spec.samples_per_line = std::max(spec.samples_per_line, 50);
    const auto st = style(s.state.doc.at("style_id").get<std::string>());
    s.generator = std::make_unique<gen::Generator>(models_->lm, models_->lexicon, st.get(), spec);
  }
  return *s.generator;
}

json SessionManager::request_candidates(const std::string& id, int count) {
  if (count < 1 || count > 50) throw Error("invalid_request", "count must be in 1..50");
  auto s = find(id);
  std::lock_guard lock(s->mutex);
  const json& doc = s->state.doc;
  if (complete(doc)) throw Error("poem_complete", "all lines of the poem are accepted");
  const gen::Generator& g = generator_for(*s);
  const int index = static_cast<int>(doc.at("accepted_lines").size());
  std::vector<std::string> context;
  for (const auto& l : doc.at("accepted_lines")) context.push_back(l.at("text").get<std::string>());
  const auto counter = doc.at("request_counter").get<std::uint64_t>();
  const auto constraint = g.constraint_for(index, bindings_from_json(doc.at("rhyme_bindings")));
  gen::LineStats stats;
  auto cands = g.generate_line(context, index, constraint, mix_seed(doc.at("seed").get<std::uint64_t>(), counter),
                               &stats);
  if (cands.size() > static_cast<std::size_t>(count)) cands.resize(static_cast<std::size_t>(count));
  json list = json::array();
  for (std::size_t i = 0; i < cands.size(); ++i) {
    list.push_back(candidate_to_json(cands[i], "c" + std::to_string(counter) + "-" + std::to_string(i)));
  }
  commit(id, *s, {{"op", "candidates"}, {"ts", now_iso()}, {"candidates", list}});
  json out = view(s->state);
  out["stats"] = gen::to_json(stats);
  return out;
}

json SessionManager::accept(const std::string& id, const json& request) {
  if (!request.is_object()) throw Error("invalid_request", "body must be a JSON object");
  auto s = find(id);
  std::lock_guard lock(s->mutex);
  const json& doc = s->state.doc;
  if (complete(doc)) throw Error("poem_complete", "all lines of the poem are accepted");
  const auto& lex = models_->lexicon;
  const auto spec = spec_from_json(doc.at("spec"));
  const std::size_t index = doc.at("accepted_lines").size();
  const auto& pattern = spec.meter.for_line(index);

  json line;
  std::vector<std::string> words;
  if (request.contains("candidate_id")) {
    const std::string cid = request.at("candidate_id").get<std::string>();
    const auto& pending = doc.at("pending_candidates");
    const auto it = std::find_if(pending.begin(), pending.end(), [&](const json& c) { return c.at("id") == cid; });
    if (it == pending.end()) throw Error("stale_candidate", "candidate " + cid + " is not pending");
    words = it->at("words").get<std::vector<std::string>>();
    json stress = json::array();
    for (const auto& sc : it->at("scansion")) stress.push_back(sc.at("stress"));
    line = {{"text", it->at("text")},
            {"words", words},
            {"stress", stress},
            {"provenance", {{"kind", "generated"}, {"candidate_id", cid}}},
            {"warnings", json::array()}};
  } else if (request.contains("text")) {
    const std::string text = request.at("text").get<std::string>();
    words = corpus::tokenize_words(text);
    if (words.empty()) throw Error("invalid_request", "custom line has no words");
    json warnings = json::array();
    bool known = true;
    for (const auto& w : words) {
      if (!lex.contains(w)) {
        warnings.push_back("'" + w + "' is not in the pronunciation lexicon");
        known = false;
      }
    }
    json stress = json::array();
    if (known) {
      if (auto r = fst::matching_rendering(words, pattern, lex, spec.scansion)) {
        stress = *r;
      } else {
        warnings.push_back("line does not scan as " + pattern.templ);
      }
    }
    if (!spec.rhyme_scheme.empty()) {
      const std::string letter(1, spec.rhyme_scheme[index]);
      const auto& b = doc.at("rhyme_bindings");
      if (b.contains(letter)) {
        bool rhymes = false;
        if (lex.contains(words.back())) {
          for (const auto& bw : b.at(letter).at("words")) {
            const std::string other = bw.get<std::string>();
            if (lex.contains(other) && fst::rhyme_check(words.back(), other, lex)) rhymes = true;
          }
        }
        if (!rhymes) warnings.push_back("'" + words.back() + "' does not rhyme with line " + letter);
      }
    }
    line = {{"text", corpus::normalize(text)},
            {"words", words},
            {"stress", stress},
            {"provenance", {{"kind", "custom"}}},
            {"warnings", warnings}};
  } else {
    throw Error("invalid_request", "accept needs candidate_id or text");
  }
  line["rhyme_keys"] = lex.contains(words.back()) ? keys_json(fst::rhyme_keys(words.back(), lex)) : json::array();
  commit(id, *s, {{"op", "accept"}, {"ts", now_iso()}, {"line", line}});
  return view(s->state);
}

json SessionManager::undo(const std::string& id) {
  auto s = find(id);
  std::lock_guard lock(s->mutex);
  commit(id, *s, {{"op", "undo"}, {"ts", now_iso()}});
  return view(s->state);
}

json SessionManager::redo(const std::string& id) {
  auto s = find(id);
  std::lock_guard lock(s->mutex);
  commit(id, *s, {{"op", "redo"}, {"ts", now_iso()}});
  return view(s->state);
}

std::string SessionManager::export_as(const std::string& id, const std::string& format) const {
  auto s = find(id);
  std::lock_guard lock(s->mutex);
  return export_session(s->state.doc, format);
}

}  // namespace verse::service
