#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "verse/corpus.hpp"
#include "verse/tfidf.hpp"

namespace verse::style {

struct StyleConfig {
  double n_percent = 5.0;
  int select_topics = 5;  // m
  int topics = 20;        // K, clipped to the document count
  double alpha = 0.0;     // <= 0 means 50 / K
  double beta = 0.01;
  int iterations = 2000;
  int words_per_topic = 10;
  int embed_dim = 32;
  int window = 2;
  int neighbor_k = 5;
  double neighbor_decay = 0.5;
  bool bigrams = false;
  std::uint64_t seed = 1;

  friend bool operator==(const StyleConfig&, const StyleConfig&) = default;
};

inline constexpr int kStyleFormatVersion = 1;

/// An author's fingerprint. `expanded_terms` holds only the semantic-network
/// neighbours that are not already high-entropy or topic words.
struct StyleModel {
  std::string author_id;
  WeightedTerms high_entropy_terms;
  WeightedTerms topic_words;
  WeightedTerms expanded_terms;
  StyleConfig config;
  int format_version = kStyleFormatVersion;

  /// Weight used by the lambda_terms boost: max(high-entropy, expanded).
  double term_weight(std::string_view word) const;
  /// Weight of the bigram "prev word"; 0 if absent.
  double bigram_weight(std::string_view prev, std::string_view word) const;
  double topic_weight(std::string_view word) const;

  friend bool operator==(const StyleModel&, const StyleModel&) = default;
};

using ProgressFn = std::function<void(std::string_view stage)>;

StyleModel build_style_model(const corpus::Corpus& author, const corpus::Corpus& background,
                             const StyleConfig& config, const ProgressFn& progress = {});

nlohmann::json to_json(const StyleModel& model);
StyleModel style_from_json(const nlohmann::json& j);

void save_style(const StyleModel& model, const std::filesystem::path& path);
StyleModel load_style(const std::filesystem::path& path);

}  // namespace verse::style
