#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "verse/corpus.hpp"
#include "verse/tfidf.hpp"

namespace verse::style {

/// Symmetric word-by-word co-occurrence counts over a +/- window inside each
/// document, rows and columns in corpus term-id order.
Eigen::SparseMatrix<double> cooccurrence_counts(const corpus::Corpus& corpus, int window);

/// max(0, ln(C(w,c) * T / (C(w) * C(c)))) for every non-zero count.
Eigen::SparseMatrix<double> ppmi(const Eigen::SparseMatrix<double>& counts);

/// Word vectors, one row per term.
class EmbeddingSpace {
 public:
  EmbeddingSpace() = default;
  EmbeddingSpace(std::vector<std::string> terms, Eigen::MatrixXd vectors, int window = 0);

  int dim() const { return static_cast<int>(vectors_.cols()); }
  int window() const { return window_; }
  const std::vector<std::string>& terms() const { return terms_; }
  const Eigen::MatrixXd& vectors() const { return vectors_; }

  bool contains(const std::string& term) const { return index_.count(term) != 0; }
  Eigen::VectorXd vector(const std::string& term) const;

  /// Cosine similarity; 0 when either vector has zero norm.
  double cosine(const std::string& a, const std::string& b) const;

  /// k most cosine-similar other terms (ties by term order). Zero-norm
  /// vectors have no neighbours and are never neighbours.
  std::vector<std::pair<std::string, double>> nearest(const std::string& term, int k) const;

 private:
  std::vector<std::string> terms_;
  std::map<std::string, int> index_;
  Eigen::MatrixXd vectors_;
  Eigen::VectorXd norms_;
  int window_ = 0;
};

/// PPMI co-occurrence matrix factored to `dim` dimensions (capped at the
/// matrix rank) by a symmetric eigendecomposition: vectors = U * sqrt(|lambda|).
EmbeddingSpace build_embeddings(const corpus::Corpus& corpus, int dim, int window, std::uint64_t seed = 0);

/// Adds each seed's k nearest neighbours with weight decay * seed weight *
/// cosine (positive similarities only). Existing weights are never lowered.
/// Seeds missing from the space are skipped and appended to `skipped`.
WeightedTerms expand_semantic_network(const WeightedTerms& seeds, const EmbeddingSpace& space, int k,
                                      double decay, std::vector<std::string>* skipped = nullptr);

}  // namespace verse::style
