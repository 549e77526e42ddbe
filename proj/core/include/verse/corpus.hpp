#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace verse::corpus {

/// Tokens of a text, grouped by non-empty line. `stanza_breaks` holds the
/// index of every line that opens a new stanza (never 0).
struct TokenizedText {
  std::vector<std::vector<std::string>> lines;
  std::vector<std::size_t> stanza_breaks;

  std::vector<std::string> tokens() const;
};

/// NFC normalization, CRLF/CR to LF, trailing whitespace removed per line.
std::string normalize(std::string_view text);

/// Lowercased word tokens. Apostrophes and hyphens survive only between two
/// word characters; every other non-word character separates tokens. Blank
/// lines are stanza boundaries.
TokenizedText tokenize(std::string_view text);

/// Flat token list of `tokenize(text)`.
std::vector<std::string> tokenize_words(std::string_view text);

struct Document {
  std::string id;
  std::string title;
  std::string text;  // normalized body, title excluded
  std::vector<std::vector<std::string>> lines;
  std::vector<std::size_t> stanza_breaks;

  std::size_t token_count() const;

  friend bool operator==(const Document&, const Document&) = default;
};

/// Builds a document from a raw file body. The first line is the title.
Document make_document(std::string id, std::string_view raw);

struct CorpusStats {
  std::size_t documents = 0;
  std::size_t words = 0;
  std::size_t characters = 0;
  std::size_t vocabulary_size = 0;

  friend bool operator==(const CorpusStats&, const CorpusStats&) = default;
};

/// Immutable document collection with vocabulary statistics. Term ids are
/// assigned in lexicographic term order, so they are dense and stable.
class Corpus {
 public:
  Corpus() = default;

  static Corpus from_documents(std::string id, std::vector<Document> documents);

  const std::string& id() const { return id_; }
  const std::vector<Document>& documents() const { return documents_; }
  const std::map<std::string, std::int32_t>& vocabulary() const { return vocabulary_; }
  const std::vector<std::string>& terms() const { return terms_; }
  const std::map<std::string, std::size_t>& term_counts() const { return term_counts_; }
  const std::map<std::string, std::size_t>& doc_freqs() const { return doc_freq_; }

  std::size_t term_count(const std::string& term) const;
  std::size_t doc_freq(const std::string& term) const;
  /// -1 when the term is not in the vocabulary.
  std::int32_t term_id(const std::string& term) const;

  std::size_t total_tokens() const { return total_tokens_; }
  std::size_t total_chars() const { return total_chars_; }
  std::size_t size() const { return documents_.size(); }
  bool empty() const { return documents_.empty(); }

  CorpusStats stats() const;

  friend bool operator==(const Corpus&, const Corpus&) = default;

 private:
  std::string id_;
  std::vector<Document> documents_;
  std::map<std::string, std::int32_t> vocabulary_;
  std::vector<std::string> terms_;
  std::map<std::string, std::size_t> term_counts_;
  std::map<std::string, std::size_t> doc_freq_;
  std::size_t total_tokens_ = 0;
  std::size_t total_chars_ = 0;
};

inline CorpusStats corpus_stats(const Corpus& corpus) { return corpus.stats(); }

/// One document per `.txt` file, visited in file-name order. The corpus id is
/// the directory name unless `id` is given.
Corpus ingest_directory(const std::filesystem::path& dir, std::string id = {});

/// Document-level hybridization: ceil(ratio*|a|) documents sampled without
/// replacement from `a` and ceil((1-ratio)*|b|) from `b`. Ids are prefixed
/// with the source corpus id.
Corpus merge_corpora(const Corpus& a, const Corpus& b, double ratio, std::uint64_t seed);

inline constexpr int kCorpusFormatVersion = 1;

nlohmann::json to_json(const Corpus& corpus);
Corpus corpus_from_json(const nlohmann::json& j);

void save_corpus(const Corpus& corpus, const std::filesystem::path& path);
Corpus load_corpus(const std::filesystem::path& path);

/// ceil(x) that ignores accumulated floating error just above an integer.
std::size_t ceil_count(double x);

}  // namespace verse::corpus
