#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "verse/corpus.hpp"
#include "verse/tfidf.hpp"

namespace verse::style {

struct LdaOptions {
  int topics = 20;
  double alpha = 2.5;
  double beta = 0.01;
  int iterations = 2000;
  std::uint64_t seed = 1;
  /// Called after every sweep with the flat token->topic assignment vector
  /// (documents in corpus order, tokens in reading order).
  std::function<void(int sweep, std::span<const int> assignments)> on_sweep;

  /// Griffiths-Steyvers conventions: alpha = 50/K, beta = 0.01.
  static LdaOptions with_defaults(int topics);
};

/// Collapsed-Gibbs LDA fit. phi is K x |V| (vocabulary in corpus term-id
/// order), theta is |D| x K.
struct TopicModel {
  int topics = 0;
  double alpha = 0.0;
  double beta = 0.0;
  std::uint64_t seed = 0;
  std::vector<std::string> vocabulary;
  std::vector<std::vector<double>> phi;
  std::vector<std::vector<double>> theta;
  std::vector<std::vector<int>> assignments;  // per document, per token
  std::vector<std::size_t> topic_mass;
};

TopicModel train_lda(const corpus::Corpus& corpus, const LdaOptions& options);

struct TopicSelection {
  std::vector<int> topics;  // ranked by assigned token mass
  WeightedTerms words;
};

/// Ranks topics by topic_mass (ties by id), keeps the first m, takes each
/// one's words_per_topic highest-phi words and max-normalizes over the set.
TopicSelection top_topics(const TopicModel& model, int m, int words_per_topic);

}  // namespace verse::style
