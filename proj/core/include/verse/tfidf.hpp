#pragma once

#include <cstddef>
#include <map>
#include <string>

#include "verse/corpus.hpp"

namespace verse::style {

/// Term -> weight. Ordered so that every traversal is deterministic.
using WeightedTerms = std::map<std::string, double>;

/// Author terms scored against a background corpus.
struct TfIdfModel {
  std::map<std::string, double> scores;
  std::size_t background_doc_count = 0;
  std::map<std::string, std::size_t> background_doc_freq;  // author terms only
  std::map<std::string, std::size_t> author_term_freq;
};

/// (1 + ln tf) * ln((N + 1) / (df + 1)); zero when tf == 0.
double tfidf_score(std::size_t tf, std::size_t df, std::size_t background_docs);

/// Scores every author term. With `include_bigrams`, contiguous within-line
/// word pairs ("w1 w2") are scored as terms of their own.
TfIdfModel build_tfidf(const corpus::Corpus& author, const corpus::Corpus& background,
                       bool include_bigrams = false);

/// Top ceil(n_percent/100 * |V|) terms by score; ties go to the
/// lexicographically smaller term. Weights are score / max selected score.
WeightedTerms select_high_entropy(const TfIdfModel& model, double n_percent);

/// Within-line bigram counts of a corpus, keyed "w1 w2".
std::map<std::string, std::size_t> bigram_counts(const corpus::Corpus& corpus);

}  // namespace verse::style
