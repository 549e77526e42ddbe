#include "verse/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include <unicode/locid.h>
#include <unicode/normalizer2.h>
#include <unicode/uchar.h>
#include <unicode/unistr.h>

#include "verse/error.hpp"
#include "verse/rng.hpp"
#include "verse/utf8.hpp"

namespace verse::corpus {

namespace {

bool is_word_char(UChar32 c) {
  if (u_isalnum(c)) return true;
  const auto type = u_charType(c);
  return type == U_NON_SPACING_MARK || type == U_COMBINING_SPACING_MARK || type == U_ENCLOSING_MARK;
}

bool is_apostrophe(UChar32 c) { return c == 0x27 || c == 0x2019 || c == 0x2BC; }

bool is_hyphen(UChar32 c) { return c == 0x2D || c == 0x2010; }

std::string to_utf8(const icu::UnicodeString& s) {
  std::string out;
  s.toUTF8String(out);
  return out;
}

icu::UnicodeString nfc(std::string_view text) {
  UErrorCode status = U_ZERO_ERROR;
  const icu::Normalizer2* normalizer = icu::Normalizer2::getNFCInstance(status);
  const auto src = icu::UnicodeString::fromUTF8(icu::StringPiece(text.data(), static_cast<int32_t>(text.size())));
  if (U_FAILURE(status)) return src;
  icu::UnicodeString out = normalizer->normalize(src, status);
  return U_FAILURE(status) ? src : out;
}

std::vector<std::string> split_raw_lines(std::string_view text) {
  std::vector<std::string> lines;
  std::string current;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (c == '\r') {
      lines.push_back(std::move(current));
      current.clear();
      if (i + 1 < text.size() && text[i + 1] == '\n') ++i;
    } else if (c == '\n') {
      lines.push_back(std::move(current));
      current.clear();
    } else {
      current.push_back(c);
    }
  }
  lines.push_back(std::move(current));
  return lines;
}

std::vector<std::string> tokenize_line(const icu::UnicodeString& line) {
  std::vector<std::string> tokens;
  icu::UnicodeString lower = line;
  lower.toLower(icu::Locale::getRoot());

  std::vector<UChar32> cps;
  for (int32_t i = 0; i < lower.length();) {
    const UChar32 c = lower.char32At(i);
    cps.push_back(c);
    i += U16_LENGTH(c);
  }

  icu::UnicodeString current;
  auto flush = [&] {
    if (!current.isEmpty()) tokens.push_back(to_utf8(current));
    current.remove();
  };
  for (std::size_t i = 0; i < cps.size(); ++i) {
    const UChar32 c = cps[i];
    if (is_word_char(c)) {
      current.append(c);
      continue;
    }
    if ((is_apostrophe(c) || is_hyphen(c)) && !current.isEmpty() && i + 1 < cps.size() &&
        is_word_char(cps[i + 1])) {
      current.append(is_apostrophe(c) ? UChar32{'\''} : UChar32{'-'});
      continue;
    }
    flush();
  }
  flush();
  return tokens;
}

bool is_blank(std::string_view line) {
  return std::all_of(line.begin(), line.end(), [](char c) { return c == ' ' || c == '\t'; });
}

std::string rtrim(std::string s) {
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.pop_back();
  return s;
}

}  // namespace

std::vector<std::string> TokenizedText::tokens() const {
  std::vector<std::string> out;
  for (const auto& line : lines) out.insert(out.end(), line.begin(), line.end());
  return out;
}

std::string normalize(std::string_view text) {
  const std::string composed = to_utf8(nfc(text));
  auto lines = split_raw_lines(composed);
  std::string out;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (i) out.push_back('\n');
    out += rtrim(std::move(lines[i]));
  }
  while (!out.empty() && out.back() == '\n') out.pop_back();
  return out;
}

TokenizedText tokenize(std::string_view text) {
  TokenizedText result;
  bool pending_break = false;
  for (const auto& raw : split_raw_lines(text)) {
    if (is_blank(raw)) {
      pending_break = !result.lines.empty();
      continue;
    }
    auto tokens = tokenize_line(nfc(raw));
    if (tokens.empty()) continue;
    if (pending_break) result.stanza_breaks.push_back(result.lines.size());
    pending_break = false;
    result.lines.push_back(std::move(tokens));
  }
  return result;
}

std::vector<std::string> tokenize_words(std::string_view text) { return tokenize(text).tokens(); }

std::size_t Document::token_count() const {
  std::size_t n = 0;
  for (const auto& line : lines) n += line.size();
  return n;
}

Document make_document(std::string id, std::string_view raw) {
  const std::string text = normalize(raw);
  Document doc;
  doc.id = std::move(id);
  const auto newline = text.find('\n');
  doc.title = text.substr(0, newline);
  doc.text = newline == std::string::npos ? std::string{} : text.substr(newline + 1);
  auto tokenized = tokenize(doc.text);
  doc.lines = std::move(tokenized.lines);
  doc.stanza_breaks = std::move(tokenized.stanza_breaks);
  return doc;
}

Corpus Corpus::from_documents(std::string id, std::vector<Document> documents) {
  Corpus c;
  c.id_ = std::move(id);
  c.documents_ = std::move(documents);
  for (const auto& doc : c.documents_) {
    std::set<std::string> seen;
    for (const auto& line : doc.lines) {
      for (const auto& tok : line) {
        ++c.term_counts_[tok];
        ++c.total_tokens_;
        seen.insert(tok);
      }
    }
    for (const auto& t : seen) ++c.doc_freq_[t];
    c.total_chars_ += utf8::length(doc.text);
  }
  std::int32_t next = 0;
  c.terms_.reserve(c.term_counts_.size());
  for (const auto& [term, count] : c.term_counts_) {
    c.vocabulary_.emplace(term, next++);
    c.terms_.push_back(term);
  }
  return c;
}

std::size_t Corpus::term_count(const std::string& term) const {
  const auto it = term_counts_.find(term);
  return it == term_counts_.end() ? 0 : it->second;
}

std::size_t Corpus::doc_freq(const std::string& term) const {
  const auto it = doc_freq_.find(term);
  return it == doc_freq_.end() ? 0 : it->second;
}

std::int32_t Corpus::term_id(const std::string& term) const {
  const auto it = vocabulary_.find(term);
  return it == vocabulary_.end() ? -1 : it->second;
}

CorpusStats Corpus::stats() const {
  return CorpusStats{documents_.size(), total_tokens_, total_chars_, vocabulary_.size()};
}

Corpus ingest_directory(const std::filesystem::path& dir, std::string id) {
  namespace fs = std::filesystem;
  std::error_code ec;
  if (!fs::is_directory(dir, ec)) {
    throw Error("missing_directory", "corpus directory does not exist: " + dir.string());
  }
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".txt") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end(),
            [](const fs::path& a, const fs::path& b) { return a.filename().string() < b.filename().string(); });

  std::vector<Document> docs;
  for (const auto& file : files) {
    std::ifstream in(file, std::ios::binary);
    if (!in) throw Error("unreadable_file", "cannot read " + file.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    std::string raw = buf.str();
    if (!utf8::valid(raw)) throw Error("undecodable_file", "not valid UTF-8: " + file.string());
    if (raw.size() >= 3 && raw.compare(0, 3, "\xEF\xBB\xBF") == 0) raw.erase(0, 3);
    docs.push_back(make_document(file.stem().string(), raw));
  }
  if (docs.empty()) throw Error("no_documents", "no documents in " + dir.string());
  if (id.empty()) id = fs::absolute(dir).lexically_normal().filename().string();
  if (id.empty()) id = fs::absolute(dir).lexically_normal().parent_path().filename().string();
  return Corpus::from_documents(std::move(id), std::move(docs));
}

std::size_t ceil_count(double x) {
  if (x <= 0.0) return 0;
  return static_cast<std::size_t>(std::ceil(x - 1e-9));
}

namespace {

std::vector<std::size_t> sample_indices(std::size_t n, std::size_t k, Rng& rng) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  for (std::size_t i = 0; i < k; ++i) {
    const std::size_t j = i + rng.below(n - i);
    std::swap(idx[i], idx[j]);
  }
  idx.resize(k);
  std::sort(idx.begin(), idx.end());
  return idx;
}

}  // namespace

Corpus merge_corpora(const Corpus& a, const Corpus& b, double ratio, std::uint64_t seed) {
  if (!(ratio >= 0.0 && ratio <= 1.0)) {
    throw Error("invalid_ratio", "merge ratio must lie in [0, 1]");
  }
  const std::size_t take_a = std::min(a.size(), ceil_count(ratio * static_cast<double>(a.size())));
  const std::size_t take_b = std::min(b.size(), ceil_count((1.0 - ratio) * static_cast<double>(b.size())));

  Rng rng_a(mix_seed(seed, 0));
  Rng rng_b(mix_seed(seed, 1));
  std::vector<Document> docs;
  for (std::size_t i : sample_indices(a.size(), take_a, rng_a)) {
    Document d = a.documents()[i];
    d.id = a.id() + "/" + d.id;
    docs.push_back(std::move(d));
  }
  for (std::size_t i : sample_indices(b.size(), take_b, rng_b)) {
    Document d = b.documents()[i];
    d.id = b.id() + "/" + d.id;
    docs.push_back(std::move(d));
  }
  return Corpus::from_documents(a.id() + "+" + b.id(), std::move(docs));
}

nlohmann::json to_json(const Corpus& corpus) {
  using nlohmann::json;
  json docs = json::array();
  for (const auto& d : corpus.documents()) {
    docs.push_back({{"id", d.id},
                    {"title", d.title},
                    {"text", d.text},
                    {"lines", d.lines},
                    {"stanza_breaks", d.stanza_breaks}});
  }
  json vocab = json::object();
  for (const auto& [t, id] : corpus.vocabulary()) vocab[t] = id;
  json tc = json::object();
  for (const auto& [t, n] : corpus.term_counts()) tc[t] = n;
  json df = json::object();
  for (const auto& [t, n] : corpus.doc_freqs()) df[t] = n;
  return {{"version", kCorpusFormatVersion},
          {"id", corpus.id()},
          {"documents", std::move(docs)},
          {"vocabulary", std::move(vocab)},
          {"counts",
           {{"total_tokens", corpus.total_tokens()},
            {"total_chars", corpus.total_chars()},
            {"term_counts", std::move(tc)},
            {"doc_freq", std::move(df)}}}};
}

Corpus corpus_from_json(const nlohmann::json& j) {
  try {
    if (j.at("version").get<int>() != kCorpusFormatVersion) {
      throw Error("unsupported_version", "unsupported corpus format version");
    }
    std::vector<Document> docs;
    for (const auto& d : j.at("documents")) {
      Document doc;
      doc.id = d.at("id").get<std::string>();
      doc.title = d.at("title").get<std::string>();
      doc.text = d.at("text").get<std::string>();
      doc.lines = d.at("lines").get<std::vector<std::vector<std::string>>>();
      doc.stanza_breaks = d.at("stanza_breaks").get<std::vector<std::size_t>>();
      docs.push_back(std::move(doc));
    }
    Corpus c = Corpus::from_documents(j.at("id").get<std::string>(), std::move(docs));
    const auto& counts = j.at("counts");
    if (counts.at("total_tokens").get<std::size_t>() != c.total_tokens() ||
        counts.at("total_chars").get<std::size_t>() != c.total_chars() ||
        j.at("vocabulary").size() != c.vocabulary().size()) {
      throw Error("corrupt_corpus", "stored corpus counts disagree with its documents");
    }
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw Error("corrupt_corpus", std::string("malformed corpus json: ") + e.what());
  }
}

void save_corpus(const Corpus& corpus, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("io_error", "cannot write " + path.string());
  out << to_json(corpus).dump(1) << '\n';
}

Corpus load_corpus(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("io_error", "cannot read " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw Error("corrupt_corpus", path.string() + ": " + e.what());
  }
  return corpus_from_json(j);
}

}  // namespace verse::corpus
