#include "verse/lda.hpp"

#include <algorithm>
#include <cassert>
#include <numeric>

#include "verse/error.hpp"
#include "verse/rng.hpp"

namespace verse::style {

LdaOptions LdaOptions::with_defaults(int topics) {
  LdaOptions o;
  o.topics = topics;
  o.alpha = topics > 0 ? 50.0 / topics : 0.0;
  o.beta = 0.01;
  o.iterations = 2000;
  return o;
}

TopicModel train_lda(const corpus::Corpus& corpus, const LdaOptions& options) {
  const int K = options.topics;
  if (K < 1) throw Error("invalid_topics", "topic count must be at least 1");
  if (options.iterations < 1) throw Error("invalid_iterations", "iterations must be at least 1");
  if (corpus.empty() || corpus.total_tokens() == 0) throw Error("empty_corpus", "LDA needs a non-empty corpus");
  if (!(options.alpha > 0.0) || !(options.beta > 0.0)) {
    throw Error("invalid_hyperparameters", "alpha and beta must be positive");
  }

  const std::size_t D = corpus.size();
  const std::size_t V = corpus.vocabulary().size();
  const double alpha = options.alpha;
  const double beta = options.beta;
  const double vbeta = static_cast<double>(V) * beta;

  // Flat token stream; doc_start[d] .. doc_start[d+1] are document d's tokens.
  std::vector<int> words;
  std::vector<std::size_t> doc_start{0};
  for (const auto& doc : corpus.documents()) {
    for (const auto& line : doc.lines) {
      for (const auto& tok : line) words.push_back(corpus.term_id(tok));
    }
    doc_start.push_back(words.size());
  }
  const std::size_t N = words.size();

  std::vector<int> z(N);
  std::vector<std::size_t> n_dk(D * K, 0), n_kw(static_cast<std::size_t>(K) * V, 0), n_k(K, 0);
  Rng rng(options.seed);
  for (std::size_t d = 0; d < D; ++d) {
    for (std::size_t i = doc_start[d]; i < doc_start[d + 1]; ++i) {
      const int k = static_cast<int>(rng.below(static_cast<std::uint64_t>(K)));
      z[i] = k;
      ++n_dk[d * K + k];
      ++n_kw[static_cast<std::size_t>(k) * V + words[i]];
      ++n_k[k];
    }
  }

  std::vector<double> cumulative(K);
  for (int sweep = 0; sweep < options.iterations; ++sweep) {
    for (std::size_t d = 0; d < D; ++d) {
      for (std::size_t i = doc_start[d]; i < doc_start[d + 1]; ++i) {
        const int w = words[i];
        const int old = z[i];
        --n_dk[d * K + old];
        --n_kw[static_cast<std::size_t>(old) * V + w];
        --n_k[old];

        double total = 0.0;
        for (int k = 0; k < K; ++k) {
          total += (static_cast<double>(n_dk[d * K + k]) + alpha) *
                   (static_cast<double>(n_kw[static_cast<std::size_t>(k) * V + w]) + beta) /
                   (static_cast<double>(n_k[k]) + vbeta);
          cumulative[k] = total;
        }
        const double u = rng.uniform() * total;
        int k = 0;
        while (k + 1 < K && cumulative[k] <= u) ++k;

        z[i] = k;
        ++n_dk[d * K + k];
        ++n_kw[static_cast<std::size_t>(k) * V + w];
        ++n_k[k];
      }
    }
    assert(std::accumulate(n_k.begin(), n_k.end(), std::size_t{0}) == N);
    if (options.on_sweep) options.on_sweep(sweep, std::span<const int>(z));
  }

  TopicModel model;
  model.topics = K;
  model.alpha = alpha;
  model.beta = beta;
  model.seed = options.seed;
  model.vocabulary = corpus.terms();
  model.topic_mass.assign(n_k.begin(), n_k.end());
  model.phi.assign(K, std::vector<double>(V));
  for (int k = 0; k < K; ++k) {
    const double denom = static_cast<double>(n_k[k]) + vbeta;
    for (std::size_t w = 0; w < V; ++w) {
      model.phi[k][w] = (static_cast<double>(n_kw[static_cast<std::size_t>(k) * V + w]) + beta) / denom;
    }
  }
  model.theta.assign(D, std::vector<double>(K));
  model.assignments.resize(D);
  for (std::size_t d = 0; d < D; ++d) {
    const double len = static_cast<double>(doc_start[d + 1] - doc_start[d]);
    const double denom = len + K * alpha;
    for (int k = 0; k < K; ++k) model.theta[d][k] = (static_cast<double>(n_dk[d * K + k]) + alpha) / denom;
    model.assignments[d].assign(z.begin() + static_cast<std::ptrdiff_t>(doc_start[d]),
                                z.begin() + static_cast<std::ptrdiff_t>(doc_start[d + 1]));
  }
  return model;
}

TopicSelection top_topics(const TopicModel& model, int m, int words_per_topic) {
  if (m < 1 || m > model.topics) throw Error("invalid_topic_selection", "m must lie in [1, K]");
  if (words_per_topic < 1) throw Error("invalid_topic_selection", "words_per_topic must be at least 1");

  std::vector<int> order(model.topics);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return model.topic_mass[a] > model.topic_mass[b]; });

  TopicSelection sel;
  sel.topics.assign(order.begin(), order.begin() + m);
  const std::size_t V = model.vocabulary.size();
  const std::size_t take = std::min<std::size_t>(static_cast<std::size_t>(words_per_topic), V);

  for (int k : sel.topics) {
    std::vector<std::size_t> ids(V);
    std::iota(ids.begin(), ids.end(), 0);
    std::stable_sort(ids.begin(), ids.end(),
                     [&](std::size_t a, std::size_t b) { return model.phi[k][a] > model.phi[k][b]; });
    for (std::size_t i = 0; i < take; ++i) {
      const auto& word = model.vocabulary[ids[i]];
      const double p = model.phi[k][ids[i]];
      auto [it, inserted] = sel.words.emplace(word, p);
      if (!inserted) it->second = std::max(it->second, p);
    }
  }
  double top = 0.0;
  for (const auto& [w, p] : sel.words) top = std::max(top, p);
  if (top > 0.0) {
    for (auto& [w, p] : sel.words) p /= top;
  }
  return sel;
}

}  // namespace verse::style
