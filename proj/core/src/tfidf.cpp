#include "verse/tfidf.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <vector>

#include "verse/error.hpp"

namespace verse::style {

namespace {

std::set<std::string> document_bigrams(const corpus::Document& doc) {
  std::set<std::string> out;
  for (const auto& line : doc.lines) {
    for (std::size_t i = 1; i < line.size(); ++i) out.insert(line[i - 1] + " " + line[i]);
  }
  return out;
}

}  // namespace

double tfidf_score(std::size_t tf, std::size_t df, std::size_t background_docs) {
  if (tf == 0) return 0.0;
  const double tf_part = 1.0 + std::log(static_cast<double>(tf));
  const double idf = std::log((static_cast<double>(background_docs) + 1.0) / (static_cast<double>(df) + 1.0));
  return tf_part * idf;
}

std::map<std::string, std::size_t> bigram_counts(const corpus::Corpus& corpus) {
  std::map<std::string, std::size_t> counts;
  for (const auto& doc : corpus.documents()) {
    for (const auto& line : doc.lines) {
      for (std::size_t i = 1; i < line.size(); ++i) ++counts[line[i - 1] + " " + line[i]];
    }
  }
  return counts;
}

TfIdfModel build_tfidf(const corpus::Corpus& author, const corpus::Corpus& background, bool include_bigrams) {
  if (author.vocabulary().empty()) throw Error("empty_vocabulary", "author corpus has no terms");
  if (background.empty()) throw Error("empty_background", "background corpus has no documents");

  TfIdfModel model;
  model.background_doc_count = background.size();
  for (const auto& [term, tf] : author.term_counts()) {
    const std::size_t df = background.doc_freq(term);
    model.author_term_freq[term] = tf;
    model.background_doc_freq[term] = df;
    model.scores[term] = tfidf_score(tf, df, background.size());
  }
  if (include_bigrams) {
    std::map<std::string, std::size_t> bg_df;
    for (const auto& doc : background.documents()) {
      for (const auto& bg : document_bigrams(doc)) ++bg_df[bg];
    }
    for (const auto& [bigram, tf] : bigram_counts(author)) {
      const auto it = bg_df.find(bigram);
      const std::size_t df = it == bg_df.end() ? 0 : it->second;
      model.author_term_freq[bigram] = tf;
      model.background_doc_freq[bigram] = df;
      model.scores[bigram] = tfidf_score(tf, df, background.size());
    }
  }
  return model;
}

WeightedTerms select_high_entropy(const TfIdfModel& model, double n_percent) {
  if (!(n_percent > 0.0 && n_percent <= 100.0)) {
    throw Error("invalid_percent", "n_percent must lie in (0, 100]");
  }
  std::vector<std::pair<std::string, double>> ranked(model.scores.begin(), model.scores.end());
  // std::map order is already lexicographic, so a stable sort on score keeps
  // the lexicographic tie rule.
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  const std::size_t count =
      std::min(ranked.size(), corpus::ceil_count(n_percent / 100.0 * static_cast<double>(ranked.size())));

  WeightedTerms out;
  const double top = count ? ranked.front().second : 0.0;
  for (std::size_t i = 0; i < count; ++i) {
    out.emplace(ranked[i].first, top > 0.0 ? ranked[i].second / top : 0.0);
  }
  return out;
}

}  // namespace verse::style
