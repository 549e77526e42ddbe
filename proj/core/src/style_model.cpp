#include "verse/style_model.hpp"

#include <algorithm>
#include <fstream>

#include "verse/decimal.hpp"
#include "verse/embedding.hpp"
#include "verse/error.hpp"
#include "verse/lda.hpp"

namespace verse::style {

namespace {

double lookup(const WeightedTerms& terms, std::string_view word) {
  const auto it = terms.find(std::string(word));
  return it == terms.end() ? 0.0 : it->second;
}

nlohmann::json terms_to_json(const WeightedTerms& terms) {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [t, w] : terms) j[t] = format_decimal(w);
  return j;
}

WeightedTerms terms_from_json(const nlohmann::json& j) {
  WeightedTerms out;
  for (const auto& [t, w] : j.items()) out.emplace(t, parse_decimal(w.get<std::string>()));
  return out;
}

}  // namespace

double StyleModel::term_weight(std::string_view word) const {
  return std::max(lookup(high_entropy_terms, word), lookup(expanded_terms, word));
}

double StyleModel::bigram_weight(std::string_view prev, std::string_view word) const {
  if (prev.empty()) return 0.0;
  std::string key(prev);
  key.push_back(' ');
  key.append(word);
  return lookup(high_entropy_terms, key);
}

double StyleModel::topic_weight(std::string_view word) const { return lookup(topic_words, word); }

StyleModel build_style_model(const corpus::Corpus& author, const corpus::Corpus& background,
                             const StyleConfig& config, const ProgressFn& progress) {
  auto report = [&](std::string_view stage) {
    if (progress) progress(stage);
  };
  StyleModel model;
  model.author_id = author.id();
  model.config = config;
  auto& cfg = model.config;
  cfg.topics = std::max(1, std::min<int>(cfg.topics, static_cast<int>(author.size())));
  cfg.select_topics = std::max(1, std::min(cfg.select_topics, cfg.topics));
  if (cfg.alpha <= 0.0) cfg.alpha = 50.0 / cfg.topics;

  report("tfidf");
  const TfIdfModel tfidf = build_tfidf(author, background, cfg.bigrams);
  model.high_entropy_terms = select_high_entropy(tfidf, cfg.n_percent);

  report("lda");
  LdaOptions lda;
  lda.topics = cfg.topics;
  lda.alpha = cfg.alpha;
  lda.beta = cfg.beta;
  lda.iterations = cfg.iterations;
  lda.seed = cfg.seed;
  const TopicModel topics = train_lda(author, lda);
  model.topic_words = top_topics(topics, cfg.select_topics, cfg.words_per_topic).words;

  report("embeddings");
  const EmbeddingSpace space = build_embeddings(author, cfg.embed_dim, cfg.window, cfg.seed);
  WeightedTerms seeds = model.high_entropy_terms;
  for (const auto& [t, w] : model.topic_words) {
    auto [it, inserted] = seeds.emplace(t, w);
    if (!inserted) it->second = std::max(it->second, w);
  }
  const WeightedTerms expanded = expand_semantic_network(seeds, space, cfg.neighbor_k, cfg.neighbor_decay);
  for (const auto& [t, w] : expanded) {
    if (!seeds.count(t)) model.expanded_terms.emplace(t, w);
  }
  report("done");
  return model;
}

nlohmann::json to_json(const StyleModel& model) {
  const auto& c = model.config;
  return {{"format_version", model.format_version},
          {"author_id", model.author_id},
          {"config",
           {{"n_percent", c.n_percent},
            {"m", c.select_topics},
            {"K", c.topics},
            {"alpha", format_decimal(c.alpha)},
            {"beta", format_decimal(c.beta)},
            {"iterations", c.iterations},
            {"words_per_topic", c.words_per_topic},
            {"embed_dim", c.embed_dim},
            {"window", c.window},
            {"neighbor_k", c.neighbor_k},
            {"neighbor_decay", format_decimal(c.neighbor_decay)},
            {"bigrams", c.bigrams},
            {"seed", c.seed}}},
          {"high_entropy_terms", terms_to_json(model.high_entropy_terms)},
          {"topic_words", terms_to_json(model.topic_words)},
          {"expanded_terms", terms_to_json(model.expanded_terms)}};
}

StyleModel style_from_json(const nlohmann::json& j) {
  try {
    StyleModel m;
    m.format_version = j.at("format_version").get<int>();
    if (m.format_version != kStyleFormatVersion) {
      throw Error("unsupported_version", "unsupported style format version");
    }
    m.author_id = j.at("author_id").get<std::string>();
    const auto& c = j.at("config");
    m.config.n_percent = c.at("n_percent").get<double>();
    m.config.select_topics = c.at("m").get<int>();
    m.config.topics = c.at("K").get<int>();
    m.config.alpha = parse_decimal(c.at("alpha").get<std::string>());
    m.config.beta = parse_decimal(c.at("beta").get<std::string>());
    m.config.iterations = c.at("iterations").get<int>();
    m.config.words_per_topic = c.at("words_per_topic").get<int>();
    m.config.embed_dim = c.at("embed_dim").get<int>();
    m.config.window = c.at("window").get<int>();
    m.config.neighbor_k = c.at("neighbor_k").get<int>();
    m.config.neighbor_decay = parse_decimal(c.at("neighbor_decay").get<std::string>());
    m.config.bigrams = c.at("bigrams").get<bool>();
    m.config.seed = c.at("seed").get<std::uint64_t>();
    m.high_entropy_terms = terms_from_json(j.at("high_entropy_terms"));
    m.topic_words = terms_from_json(j.at("topic_words"));
    m.expanded_terms = terms_from_json(j.at("expanded_terms"));
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw Error("corrupt_style", std::string("malformed style json: ") + e.what());
  }
}

void save_style(const StyleModel& model, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("io_error", "cannot write " + path.string());
  out << to_json(model).dump(2) << '\n';
}

StyleModel load_style(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("io_error", "cannot read " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw Error("corrupt_style", path.string() + ": " + e.what());
  }
  return style_from_json(j);
}

}  // namespace verse::style
