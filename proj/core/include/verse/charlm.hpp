#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "verse/corpus.hpp"

namespace verse::lm {

/// Code-point vocabulary with three reserved symbols. The poem-end symbol
/// also serves as the start-of-text context.
class CharVocab {
 public:
  static constexpr int kPoemEnd = 0;
  static constexpr int kLineBreak = 1;
  static constexpr int kUnknown = 2;

  CharVocab();
  explicit CharVocab(const std::vector<std::string>& symbols);

  /// Reserved symbols plus every code point of `text` except '\n', sorted.
  static CharVocab from_text(std::string_view text);

  int size() const { return static_cast<int>(symbols_.size()); }
  /// Id of a single code point; unknown characters map to kUnknown.
  int id(std::string_view ch) const;
  const std::string& symbol(int id) const { return symbols_.at(static_cast<std::size_t>(id)); }
  const std::vector<std::string>& symbols() const { return symbols_; }

  std::vector<int> encode(std::string_view text) const;
  std::string decode(std::span<const int> ids) const;

  friend bool operator==(const CharVocab& a, const CharVocab& b) { return a.symbols_ == b.symbols_; }

 private:
  std::vector<std::string> symbols_;
  std::map<std::string, int> ids_;
};

struct LstmShape {
  int layers = 2;
  int hidden = 128;
  int embed = 32;
  int vocab = 0;

  friend bool operator==(const LstmShape&, const LstmShape&) = default;
};

/// Gate rows are stacked [input; forget; cell; output]. Layer l's weight
/// matrix multiplies the column [x; h_prev] where x is the embedding (l = 0)
/// or the hidden state of layer l-1.
struct LstmParams {
  LstmShape shape;
  Eigen::MatrixXd embedding;           // embed x vocab
  std::vector<Eigen::MatrixXd> weights;  // 4H x (in + H)
  std::vector<Eigen::VectorXd> biases;   // 4H
  Eigen::MatrixXd out_weights;         // vocab x H
  Eigen::VectorXd out_bias;            // vocab

  static LstmParams zeros(const LstmShape& shape);
  /// uniform(-scale, scale) weights, forget-gate bias +1.
  static LstmParams random(const LstmShape& shape, std::uint64_t seed, double scale = 0.08);

  /// Throws on inconsistent shapes or non-finite values.
  void validate() const;

  std::size_t parameter_count() const;
  std::vector<std::string> group_names() const;
  /// Contiguous views over every parameter group, in group_names() order.
  std::vector<std::span<double>> groups();
  std::vector<std::span<const double>> groups() const;

  friend bool operator==(const LstmParams& a, const LstmParams& b);
};

struct DecoderState {
  std::vector<Eigen::VectorXd> h;
  std::vector<Eigen::VectorXd> c;

  static DecoderState zeros(const LstmShape& shape);
};

struct LanguageModel {
  CharVocab vocab;
  LstmParams params;
};

/// Feeds one character and returns the output logits; `next` receives the
/// new state (the input state is never modified).
Eigen::VectorXd step_logits(const LstmParams& params, const DecoderState& state, int char_id, DecoderState& next);

struct StepResult {
  Eigen::VectorXd probs;
  DecoderState state;
};

StepResult forward_step(const LstmParams& params, const DecoderState& state, int char_id);

Eigen::VectorXd softmax(const Eigen::VectorXd& logits, double temperature = 1.0);
Eigen::VectorXd log_softmax(const Eigen::VectorXd& logits, double temperature = 1.0);

/// Mean cross-entropy (nats per predicted character) of a batch of
/// equal-length windows run from the zero state. When `grad` is non-null it
/// receives d loss / d params.
double batch_loss(const LstmParams& params, std::span<const std::vector<int>> inputs,
                  std::span<const std::vector<int>> targets, LstmParams* grad = nullptr);

struct TrainOptions {
  int layers = 2;
  int hidden = 128;
  int embed = 32;
  int bptt = 64;
  double learning_rate = 2e-3;
  int steps = 1000;
  int batch = 16;
  double clip = 5.0;
  double init_scale = 0.08;
  std::uint64_t seed = 1;
  std::function<void(int step, double loss)> on_step;
};

struct TrainResult {
  LanguageModel model;
  std::vector<double> loss_trace;
};

/// The character stream a corpus is trained on: every document's lines
/// joined by '\n' (one extra '\n' between stanzas) and followed by '\n'.
/// Documents are separated by the poem-end symbol, which the caller encodes.
std::vector<std::string> training_documents(const corpus::Corpus& corpus);

/// Encodes documents as [end] doc1 [end] doc2 [end] ...
std::vector<int> encode_stream(const CharVocab& vocab, const std::vector<std::string>& documents);

TrainResult train(const corpus::Corpus& corpus, const TrainOptions& options);
TrainResult train_text(std::string_view text, const TrainOptions& options);
TrainResult train_stream(const CharVocab& vocab, const std::vector<int>& stream, const TrainOptions& options);

struct SampleOptions {
  double temperature = 0.8;
  bool greedy = false;  // the temperature -> 0 limit
  std::size_t max_chars = 2000;
  std::uint64_t seed = 0;
};

/// Continuation of `prefix` (not including it), stopping before poem-end or
/// after max_chars characters.
std::string sample(const LanguageModel& model, std::string_view prefix, const SampleOptions& options);

struct PerplexityResult {
  double nats_per_char = 0.0;
  double perplexity = 1.0;
  std::size_t characters = 0;
};

PerplexityResult perplexity(const LanguageModel& model, std::string_view text);

struct GradientCheckResult {
  double max_relative_error = 0.0;
  std::string worst_group;
  std::size_t worst_index = 0;
  std::size_t parameters_checked = 0;
};

/// Five-point central finite differences against batch_loss gradients over every
/// parameter; relative error |a - n| / max(|a|, |n|, 1e-8).
GradientCheckResult gradient_check(const LstmParams& params, std::span<const int> inputs,
                                   std::span<const int> targets, double epsilon = 1e-2);

void save_model(const LanguageModel& model, const std::filesystem::path& path);
LanguageModel load_model(const std::filesystem::path& path);

}  // namespace verse::lm
