#include "verse/embedding.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <Eigen/Eigenvalues>
#include <Eigen/QR>

#include "verse/error.hpp"
#include "verse/rng.hpp"

namespace verse::style {

namespace {

constexpr Eigen::Index kExactSolveLimit = 800;

Eigen::MatrixXd gaussian_matrix(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed) {
  Rng rng(seed);
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j) {
    for (Eigen::Index i = 0; i < rows; ++i) {
      // Box-Muller; one draw per pair is enough here.
      double u1 = rng.uniform();
      while (u1 <= 0.0) u1 = rng.uniform();
      const double u2 = rng.uniform();
      m(i, j) = std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
    }
  }
  return m;
}

Eigen::MatrixXd orthonormal_basis(const Eigen::MatrixXd& y) {
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(y);
  return qr.householderQ() * Eigen::MatrixXd::Identity(y.rows(), y.cols());
}

/// Eigenpairs of a symmetric matrix sorted by |lambda| descending.
void top_eigenpairs(const Eigen::SparseMatrix<double>& m, Eigen::Index want, std::uint64_t seed,
                    Eigen::VectorXd& values, Eigen::MatrixXd& vectors) {
  const Eigen::Index n = m.rows();
  Eigen::VectorXd evals;
  Eigen::MatrixXd evecs;
  if (n <= kExactSolveLimit) {
    const Eigen::MatrixXd dense(m);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(dense);
    evals = solver.eigenvalues();
    evecs = solver.eigenvectors();
  } else {
    // Randomized subspace iteration.
    const Eigen::Index width = std::min(n, want + 10);
    Eigen::MatrixXd q = orthonormal_basis(m * gaussian_matrix(n, width, seed));
    for (int it = 0; it < 6; ++it) q = orthonormal_basis(m * q);
    const Eigen::MatrixXd small = q.transpose() * (m * q);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(small);
    evals = solver.eigenvalues();
    evecs = q * solver.eigenvectors();
  }
  std::vector<Eigen::Index> order(evals.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](Eigen::Index a, Eigen::Index b) { return std::abs(evals[a]) > std::abs(evals[b]); });
  const Eigen::Index take = std::min<Eigen::Index>(want, static_cast<Eigen::Index>(order.size()));
  values.resize(take);
  vectors.resize(n, take);
  for (Eigen::Index j = 0; j < take; ++j) {
    values[j] = evals[order[j]];
    vectors.col(j) = evecs.col(order[j]);
  }
}

}  // namespace

Eigen::SparseMatrix<double> cooccurrence_counts(const corpus::Corpus& corpus, int window) {
  const auto V = static_cast<Eigen::Index>(corpus.vocabulary().size());
  std::map<std::pair<int, int>, double> counts;
  for (const auto& doc : corpus.documents()) {
    std::vector<int> ids;
    for (const auto& line : doc.lines) {
      for (const auto& tok : line) ids.push_back(corpus.term_id(tok));
    }
    const auto n = static_cast<int>(ids.size());
    for (int i = 0; i < n; ++i) {
      for (int j = std::max(0, i - window); j <= std::min(n - 1, i + window); ++j) {
        if (j != i) counts[{ids[i], ids[j]}] += 1.0;
      }
    }
  }
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(counts.size());
  for (const auto& [key, c] : counts) triplets.emplace_back(key.first, key.second, c);
  Eigen::SparseMatrix<double> m(V, V);
  m.setFromTriplets(triplets.begin(), triplets.end());
  return m;
}

Eigen::SparseMatrix<double> ppmi(const Eigen::SparseMatrix<double>& counts) {
  const Eigen::VectorXd row_sums = counts * Eigen::VectorXd::Ones(counts.cols());
  const Eigen::VectorXd col_sums = counts.transpose() * Eigen::VectorXd::Ones(counts.rows());
  const double total = row_sums.sum();
  std::vector<Eigen::Triplet<double>> triplets;
  for (int k = 0; k < counts.outerSize(); ++k) {
    for (Eigen::SparseMatrix<double>::InnerIterator it(counts, k); it; ++it) {
      if (it.value() <= 0.0) continue;
      const double pmi = std::log(it.value() * total / (row_sums[it.row()] * col_sums[it.col()]));
      if (pmi > 0.0) triplets.emplace_back(it.row(), it.col(), pmi);
    }
  }
  Eigen::SparseMatrix<double> out(counts.rows(), counts.cols());
  out.setFromTriplets(triplets.begin(), triplets.end());
  return out;
}

EmbeddingSpace::EmbeddingSpace(std::vector<std::string> terms, Eigen::MatrixXd vectors, int window)
    : terms_(std::move(terms)), vectors_(std::move(vectors)), window_(window) {
  if (static_cast<Eigen::Index>(terms_.size()) != vectors_.rows()) {
    throw Error("shape_mismatch", "one vector per term required");
  }
  for (std::size_t i = 0; i < terms_.size(); ++i) index_.emplace(terms_[i], static_cast<int>(i));
  norms_ = vectors_.rowwise().norm();
}

Eigen::VectorXd EmbeddingSpace::vector(const std::string& term) const {
  const auto it = index_.find(term);
  if (it == index_.end()) return Eigen::VectorXd::Zero(vectors_.cols());
  return vectors_.row(it->second).transpose();
}

double EmbeddingSpace::cosine(const std::string& a, const std::string& b) const {
  const auto ia = index_.find(a);
  const auto ib = index_.find(b);
  if (ia == index_.end() || ib == index_.end()) return 0.0;
  const double na = norms_[ia->second];
  const double nb = norms_[ib->second];
  if (na == 0.0 || nb == 0.0) return 0.0;
  if (ia->second == ib->second) return 1.0;
  return vectors_.row(ia->second).dot(vectors_.row(ib->second)) / (na * nb);
}

std::vector<std::pair<std::string, double>> EmbeddingSpace::nearest(const std::string& term, int k) const {
  std::vector<std::pair<std::string, double>> out;
  const auto it = index_.find(term);
  if (k <= 0 || it == index_.end() || norms_[it->second] == 0.0) return out;
  const int self = it->second;
  const Eigen::VectorXd sims = (vectors_ * vectors_.row(self).transpose()) / norms_[self];
  std::vector<int> candidates;
  for (int i = 0; i < static_cast<int>(terms_.size()); ++i) {
    if (i != self && norms_[i] > 0.0) candidates.push_back(i);
  }
  auto similarity = [&](int i) { return sims[i] / norms_[i]; };
  const auto take = std::min<std::size_t>(static_cast<std::size_t>(k), candidates.size());
  std::partial_sort(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(take), candidates.end(),
                    [&](int a, int b) {
                      const double sa = similarity(a), sb = similarity(b);
                      if (sa != sb) return sa > sb;
                      return terms_[a] < terms_[b];
                    });
  for (std::size_t i = 0; i < take; ++i) out.emplace_back(terms_[candidates[i]], similarity(candidates[i]));
  return out;
}

EmbeddingSpace build_embeddings(const corpus::Corpus& corpus, int dim, int window, std::uint64_t seed) {
  if (dim < 1) throw Error("invalid_dimension", "embedding dimension must be at least 1");
  if (window < 1) throw Error("invalid_window", "co-occurrence window must be at least 1");
  if (corpus.empty()) throw Error("empty_corpus", "embeddings need a non-empty corpus");

  const Eigen::SparseMatrix<double> m = ppmi(cooccurrence_counts(corpus, window));
  const Eigen::Index V = m.rows();
  Eigen::VectorXd values;
  Eigen::MatrixXd vecs;
  if (V > 0 && m.nonZeros() > 0) top_eigenpairs(m, std::min<Eigen::Index>(dim, V), seed, values, vecs);

  const double largest = values.size() ? std::abs(values[0]) : 0.0;
  Eigen::Index rank = 0;
  while (rank < values.size() && std::abs(values[rank]) > 1e-10 * largest) ++rank;
  const Eigen::Index d = std::max<Eigen::Index>(1, std::min<Eigen::Index>(dim, rank));

  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(V, d);
  for (Eigen::Index j = 0; j < std::min(d, rank); ++j) {
    Eigen::VectorXd col = vecs.col(j);
    Eigen::Index pivot = 0;
    col.cwiseAbs().maxCoeff(&pivot);
    if (col[pivot] < 0) col = -col;
    out.col(j) = col * std::sqrt(std::abs(values[j]));
  }
  return EmbeddingSpace(corpus.terms(), std::move(out), window);
}

WeightedTerms expand_semantic_network(const WeightedTerms& seeds, const EmbeddingSpace& space, int k,
                                      double decay, std::vector<std::string>* skipped) {
  if (k < 0) throw Error("invalid_neighbors", "neighbour count must be non-negative");
  WeightedTerms out = seeds;
  if (k == 0) return out;
  for (const auto& [seed, weight] : seeds) {
    if (!space.contains(seed)) {
      if (skipped) skipped->push_back(seed);
      continue;
    }
    for (const auto& [neighbor, sim] : space.nearest(seed, k)) {
      if (sim <= 0.0) continue;
      const double w = decay * weight * sim;
      auto [it, inserted] = out.emplace(neighbor, w);
      if (!inserted) it->second = std::max(it->second, w);
    }
  }
  return out;
}

}  // namespace verse::style
