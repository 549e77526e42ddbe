#include "verse/charlm.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "verse/error.hpp"
#include "verse/rng.hpp"
#include "verse/utf8.hpp"

namespace verse::lm {

namespace {

const std::string kPoemEndSymbol = "<end>";
const std::string kLineBreakSymbol = "\n";
const std::string kUnknownSymbol = "<unk>";

constexpr char kMagic[8] = {'V', 'E', 'R', 'S', 'E', 'L', 'M', '1'};

Eigen::MatrixXd sigmoid(const Eigen::MatrixXd& x) { return (1.0 + (-x.array()).exp()).inverse().matrix(); }

bool all_finite(std::span<const double> values) {
  return std::all_of(values.begin(), values.end(), [](double v) { return std::isfinite(v); });
}

}  // namespace

// ---------------------------------------------------------------- vocabulary

CharVocab::CharVocab() : CharVocab(std::vector<std::string>{kPoemEndSymbol, kLineBreakSymbol, kUnknownSymbol}) {}

CharVocab::CharVocab(const std::vector<std::string>& symbols) : symbols_(symbols) {
  if (symbols_.size() < 3 || symbols_[kPoemEnd] != kPoemEndSymbol || symbols_[kLineBreak] != kLineBreakSymbol ||
      symbols_[kUnknown] != kUnknownSymbol) {
    throw Error("bad_vocabulary", "character vocabulary must start with the reserved symbols");
  }
  for (std::size_t i = 0; i < symbols_.size(); ++i) {
    if (!ids_.emplace(symbols_[i], static_cast<int>(i)).second) {
      throw Error("bad_vocabulary", "duplicate vocabulary symbol");
    }
  }
}

CharVocab CharVocab::from_text(std::string_view text) {
  std::set<std::string> chars;
  for (auto& cp : utf8::code_points(text)) {
    if (cp != "\n") chars.insert(std::move(cp));
  }
  std::vector<std::string> symbols{kPoemEndSymbol, kLineBreakSymbol, kUnknownSymbol};
  for (const auto& c : chars) {
    if (c != kPoemEndSymbol && c != kUnknownSymbol) symbols.push_back(c);
  }
  return CharVocab(symbols);
}

int CharVocab::id(std::string_view ch) const {
  if (ch == "\n") return kLineBreak;
  const auto it = ids_.find(std::string(ch));
  if (it == ids_.end() || it->second == kPoemEnd || it->second == kUnknown) return kUnknown;
  return it->second;
}

std::vector<int> CharVocab::encode(std::string_view text) const {
  std::vector<int> out;
  for (const auto& cp : utf8::code_points(text)) out.push_back(id(cp));
  return out;
}

std::string CharVocab::decode(std::span<const int> ids) const {
  std::string out;
  for (int i : ids) {
    if (i == kPoemEnd || i == kUnknown) continue;
    out += symbol(i);
  }
  return out;
}

// ---------------------------------------------------------------- parameters

LstmParams LstmParams::zeros(const LstmShape& shape) {
  if (shape.layers < 1 || shape.hidden < 1 || shape.embed < 1 || shape.vocab < 1) {
    throw Error("bad_shape", "LSTM dimensions must be positive");
  }
  LstmParams p;
  p.shape = shape;
  const int H = shape.hidden;
  p.embedding = Eigen::MatrixXd::Zero(shape.embed, shape.vocab);
  for (int l = 0; l < shape.layers; ++l) {
    const int in = l == 0 ? shape.embed : H;
    p.weights.push_back(Eigen::MatrixXd::Zero(4 * H, in + H));
    p.biases.push_back(Eigen::VectorXd::Zero(4 * H));
  }
  p.out_weights = Eigen::MatrixXd::Zero(shape.vocab, H);
  p.out_bias = Eigen::VectorXd::Zero(shape.vocab);
  return p;
}

LstmParams LstmParams::random(const LstmShape& shape, std::uint64_t seed, double scale) {
  LstmParams p = zeros(shape);
  Rng rng(seed);
  for (auto group : p.groups()) {
    for (double& v : group) v = rng.uniform(-scale, scale);
  }
  const int H = shape.hidden;
  for (auto& b : p.biases) b.segment(H, H).array() += 1.0;
  return p;
}

void LstmParams::validate() const {
  const int H = shape.hidden;
  bool ok = shape.layers >= 1 && H >= 1 && shape.embed >= 1 && shape.vocab >= 1 &&
            embedding.rows() == shape.embed && embedding.cols() == shape.vocab &&
            static_cast<int>(weights.size()) == shape.layers && static_cast<int>(biases.size()) == shape.layers &&
            out_weights.rows() == shape.vocab && out_weights.cols() == H && out_bias.size() == shape.vocab;
  for (int l = 0; ok && l < shape.layers; ++l) {
    const int in = l == 0 ? shape.embed : H;
    ok = weights[l].rows() == 4 * H && weights[l].cols() == in + H && biases[l].size() == 4 * H;
  }
  if (!ok) throw Error("bad_shape", "LSTM parameter shapes are inconsistent");
  for (auto g : groups()) {
    if (!all_finite(g)) throw Error("non_finite", "LSTM parameters contain NaN or Inf");
  }
}

std::size_t LstmParams::parameter_count() const {
  std::size_t n = 0;
  for (auto g : groups()) n += g.size();
  return n;
}

std::vector<std::string> LstmParams::group_names() const {
  std::vector<std::string> names{"embedding"};
  for (int l = 0; l < shape.layers; ++l) {
    names.push_back("layer" + std::to_string(l) + ".weights");
    names.push_back("layer" + std::to_string(l) + ".bias");
  }
  names.emplace_back("output.weights");
  names.emplace_back("output.bias");
  return names;
}

std::vector<std::span<double>> LstmParams::groups() {
  std::vector<std::span<double>> out;
  out.emplace_back(embedding.data(), static_cast<std::size_t>(embedding.size()));
  for (std::size_t l = 0; l < weights.size(); ++l) {
    out.emplace_back(weights[l].data(), static_cast<std::size_t>(weights[l].size()));
    out.emplace_back(biases[l].data(), static_cast<std::size_t>(biases[l].size()));
  }
  out.emplace_back(out_weights.data(), static_cast<std::size_t>(out_weights.size()));
  out.emplace_back(out_bias.data(), static_cast<std::size_t>(out_bias.size()));
  return out;
}

std::vector<std::span<const double>> LstmParams::groups() const {
  std::vector<std::span<const double>> out;
  for (auto g : const_cast<LstmParams*>(this)->groups()) out.emplace_back(g.data(), g.size());
  return out;
}

bool operator==(const LstmParams& a, const LstmParams& b) {
  if (!(a.shape == b.shape)) return false;
  const auto ga = a.groups();
  const auto gb = b.groups();
  if (ga.size() != gb.size()) return false;
  for (std::size_t i = 0; i < ga.size(); ++i) {
    if (!std::equal(ga[i].begin(), ga[i].end(), gb[i].begin(), gb[i].end())) return false;
  }
  return true;
}

DecoderState DecoderState::zeros(const LstmShape& shape) {
  DecoderState s;
  s.h.assign(shape.layers, Eigen::VectorXd::Zero(shape.hidden));
  s.c.assign(shape.layers, Eigen::VectorXd::Zero(shape.hidden));
  return s;
}

// ---------------------------------------------------------------- inference

Eigen::VectorXd softmax(const Eigen::VectorXd& logits, double temperature) {
  const Eigen::ArrayXd scaled = logits.array() / temperature;
  const Eigen::ArrayXd e = (scaled - scaled.maxCoeff()).exp();
  return (e / e.sum()).matrix();
}

Eigen::VectorXd log_softmax(const Eigen::VectorXd& logits, double temperature) {
  const Eigen::ArrayXd scaled = logits.array() / temperature;
  const double m = scaled.maxCoeff();
  const double lse = m + std::log((scaled - m).exp().sum());
  return (scaled - lse).matrix();
}

Eigen::VectorXd step_logits(const LstmParams& params, const DecoderState& state, int char_id, DecoderState& next) {
  const auto& shape = params.shape;
  if (char_id < 0 || char_id >= shape.vocab) throw Error("bad_symbol", "character id out of range");
  if (static_cast<int>(state.h.size()) != shape.layers || static_cast<int>(state.c.size()) != shape.layers) {
    throw Error("bad_state", "decoder state layer count does not match the model");
  }
  const int H = shape.hidden;
  next.h.resize(shape.layers);
  next.c.resize(shape.layers);
  Eigen::VectorXd input = params.embedding.col(char_id);
  for (int l = 0; l < shape.layers; ++l) {
    if (state.h[l].size() != H || state.c[l].size() != H) {
      throw Error("bad_state", "decoder state width does not match the model");
    }
    const auto in = static_cast<Eigen::Index>(input.size());
    const auto& w = params.weights[l];
    const Eigen::VectorXd gates =
        w.leftCols(in) * input + w.rightCols(H) * state.h[l] + params.biases[l];
    const Eigen::ArrayXd i = sigmoid(gates.segment(0, H)).array();
    const Eigen::ArrayXd f = sigmoid(gates.segment(H, H)).array();
    const Eigen::ArrayXd g = gates.segment(2 * H, H).array().tanh();
    const Eigen::ArrayXd o = sigmoid(gates.segment(3 * H, H)).array();
    next.c[l] = (f * state.c[l].array() + i * g).matrix();
    next.h[l] = (o * next.c[l].array().tanh()).matrix();
    input = next.h[l];
  }
  return params.out_weights * input + params.out_bias;
}

StepResult forward_step(const LstmParams& params, const DecoderState& state, int char_id) {
  StepResult r;
  r.probs = softmax(step_logits(params, state, char_id, r.state));
  return r;
}

// ---------------------------------------------------------------- training

namespace {

struct LayerCache {
  Eigen::MatrixXd concat, i, f, g, o, c_prev, tanh_c, h;
};

}  // namespace

double batch_loss(const LstmParams& params, std::span<const std::vector<int>> inputs,
                  std::span<const std::vector<int>> targets, LstmParams* grad) {
  const auto& shape = params.shape;
  const int L = shape.layers, H = shape.hidden, V = shape.vocab;
  const auto B = static_cast<Eigen::Index>(inputs.size());
  if (grad) *grad = LstmParams::zeros(shape);
  if (B == 0 || inputs[0].empty()) return 0.0;
  if (targets.size() != inputs.size()) throw Error("bad_batch", "inputs and targets differ in batch size");
  const std::size_t T = inputs[0].size();
  for (Eigen::Index b = 0; b < B; ++b) {
    if (inputs[b].size() != T || targets[b].size() != T) throw Error("bad_batch", "windows must share one length");
    for (std::size_t t = 0; t < T; ++t) {
      if (inputs[b][t] < 0 || inputs[b][t] >= V || targets[b][t] < 0 || targets[b][t] >= V) {
        throw Error("bad_symbol", "character id out of range");
      }
    }
  }

  std::vector<std::vector<LayerCache>> cache(T, std::vector<LayerCache>(L));
  std::vector<Eigen::MatrixXd> probs(T);
  std::vector<Eigen::MatrixXd> h(L, Eigen::MatrixXd::Zero(H, B)), c(L, Eigen::MatrixXd::Zero(H, B));
  double loss = 0.0;

  for (std::size_t t = 0; t < T; ++t) {
    Eigen::MatrixXd x(shape.embed, B);
    for (Eigen::Index b = 0; b < B; ++b) x.col(b) = params.embedding.col(inputs[b][t]);
    for (int l = 0; l < L; ++l) {
      auto& lc = cache[t][l];
      const Eigen::MatrixXd& in = l == 0 ? x : h[l - 1];
      lc.concat.resize(in.rows() + H, B);
      lc.concat << in, h[l];
      Eigen::MatrixXd gates = params.weights[l] * lc.concat;
      gates.colwise() += params.biases[l];
      lc.i = sigmoid(gates.topRows(H));
      lc.f = sigmoid(gates.middleRows(H, H));
      lc.g = gates.middleRows(2 * H, H).array().tanh().matrix();
      lc.o = sigmoid(gates.bottomRows(H));
      lc.c_prev = c[l];
      c[l] = lc.f.cwiseProduct(c[l]) + lc.i.cwiseProduct(lc.g);
      lc.tanh_c = c[l].array().tanh().matrix();
      lc.h = lc.o.cwiseProduct(lc.tanh_c);
      h[l] = lc.h;
    }
    Eigen::MatrixXd logits = params.out_weights * h[L - 1];
    logits.colwise() += params.out_bias;
    Eigen::MatrixXd p(V, B);
    for (Eigen::Index b = 0; b < B; ++b) {
      const double m = logits.col(b).maxCoeff();
      const Eigen::ArrayXd e = (logits.col(b).array() - m).exp();
      const double sum = e.sum();
      p.col(b) = (e / sum).matrix();
      loss -= (logits(targets[b][t], b) - m) - std::log(sum);
    }
    probs[t] = std::move(p);
  }
  const double scale = 1.0 / (static_cast<double>(B) * static_cast<double>(T));
  loss *= scale;
  if (!grad) return loss;

  std::vector<Eigen::MatrixXd> dh_next(L, Eigen::MatrixXd::Zero(H, B)), dc_next(L, Eigen::MatrixXd::Zero(H, B));
  for (std::size_t t = T; t-- > 0;) {
    Eigen::MatrixXd dlogits = probs[t];
    for (Eigen::Index b = 0; b < B; ++b) dlogits(targets[b][t], b) -= 1.0;
    dlogits *= scale;
    grad->out_weights.noalias() += dlogits * cache[t][L - 1].h.transpose();
    grad->out_bias += dlogits.rowwise().sum();
    Eigen::MatrixXd dh_above = params.out_weights.transpose() * dlogits;

    for (int l = L - 1; l >= 0; --l) {
      const auto& lc = cache[t][l];
      const Eigen::ArrayXXd dh = (dh_above + dh_next[l]).array();
      const Eigen::ArrayXXd o = lc.o.array(), i = lc.i.array(), f = lc.f.array(), g = lc.g.array();
      const Eigen::ArrayXXd tc = lc.tanh_c.array();
      const Eigen::ArrayXXd dc = dh * o * (1.0 - tc.square()) + dc_next[l].array();
      Eigen::MatrixXd dgates(4 * H, B);
      dgates.topRows(H) = (dc * g * i * (1.0 - i)).matrix();
      dgates.middleRows(H, H) = (dc * lc.c_prev.array() * f * (1.0 - f)).matrix();
      dgates.middleRows(2 * H, H) = (dc * i * (1.0 - g.square())).matrix();
      dgates.bottomRows(H) = (dh * tc * o * (1.0 - o)).matrix();

      grad->weights[l].noalias() += dgates * lc.concat.transpose();
      grad->biases[l] += dgates.rowwise().sum();
      const Eigen::MatrixXd dconcat = params.weights[l].transpose() * dgates;
      const Eigen::Index in = dconcat.rows() - H;
      dh_next[l] = dconcat.bottomRows(H);
      dc_next[l] = (dc * f).matrix();
      dh_above = dconcat.topRows(in);
    }
    for (Eigen::Index b = 0; b < B; ++b) grad->embedding.col(inputs[b][t]) += dh_above.col(b);
  }
  return loss;
}

std::vector<std::string> training_documents(const corpus::Corpus& corpus) {
  std::vector<std::string> docs;
  for (const auto& doc : corpus.documents()) {
    std::string text;
    std::size_t next_break = 0;
    for (std::size_t i = 0; i < doc.lines.size(); ++i) {
      if (next_break < doc.stanza_breaks.size() && doc.stanza_breaks[next_break] == i) {
        text.push_back('\n');
        ++next_break;
      }
      for (std::size_t k = 0; k < doc.lines[i].size(); ++k) {
        if (k) text.push_back(' ');
        text += doc.lines[i][k];
      }
      text.push_back('\n');
    }
    if (!text.empty()) docs.push_back(std::move(text));
  }
  return docs;
}

std::vector<int> encode_stream(const CharVocab& vocab, const std::vector<std::string>& documents) {
  std::vector<int> stream{CharVocab::kPoemEnd};
  for (const auto& doc : documents) {
    const auto ids = vocab.encode(doc);
    stream.insert(stream.end(), ids.begin(), ids.end());
    stream.push_back(CharVocab::kPoemEnd);
  }
  return stream;
}

TrainResult train(const corpus::Corpus& corpus, const TrainOptions& options) {
  const auto docs = training_documents(corpus);
  if (docs.empty()) throw Error("empty_corpus", "training corpus has no text");
  std::string all;
  for (const auto& d : docs) all += d;
  const CharVocab vocab = CharVocab::from_text(all);
  return train_stream(vocab, encode_stream(vocab, docs), options);
}

TrainResult train_text(std::string_view text, const TrainOptions& options) {
  if (text.empty()) throw Error("empty_corpus", "training text is empty");
  const CharVocab vocab = CharVocab::from_text(text);
  std::vector<int> stream{CharVocab::kPoemEnd};
  const auto ids = vocab.encode(text);
  stream.insert(stream.end(), ids.begin(), ids.end());
  return train_stream(vocab, stream, options);
}

TrainResult train_stream(const CharVocab& vocab, const std::vector<int>& stream, const TrainOptions& options) {
  if (options.steps < 1) throw Error("invalid_steps", "training needs at least one step");
  if (options.batch < 1 || options.bptt < 1) throw Error("invalid_options", "batch and bptt must be positive");
  if (stream.size() < 2) throw Error("empty_corpus", "training stream needs at least two symbols");

  const LstmShape shape{options.layers, options.hidden, options.embed, vocab.size()};
  TrainResult result;
  result.model.vocab = vocab;
  result.model.params = LstmParams::random(shape, mix_seed(options.seed, 0), options.init_scale);
  auto& params = result.model.params;

  const std::size_t T = std::min<std::size_t>(static_cast<std::size_t>(options.bptt), stream.size() - 1);
  const std::size_t last_start = stream.size() - 1 - T;
  Rng rng(mix_seed(options.seed, 1));

  auto param_groups = params.groups();
  std::vector<std::vector<double>> m1, m2;
  for (auto g : param_groups) {
    m1.emplace_back(g.size(), 0.0);
    m2.emplace_back(g.size(), 0.0);
  }
  constexpr double beta1 = 0.9, beta2 = 0.999, adam_eps = 1e-8;

  std::vector<std::vector<int>> inputs(options.batch), targets(options.batch);
  LstmParams grad;
  for (int step = 0; step < options.steps; ++step) {
    for (int b = 0; b < options.batch; ++b) {
      const std::size_t s = rng.below(last_start + 1);
      inputs[b].assign(stream.begin() + static_cast<std::ptrdiff_t>(s),
                       stream.begin() + static_cast<std::ptrdiff_t>(s + T));
      targets[b].assign(stream.begin() + static_cast<std::ptrdiff_t>(s + 1),
                        stream.begin() + static_cast<std::ptrdiff_t>(s + T + 1));
    }
    const double loss = batch_loss(params, inputs, targets, &grad);
    if (!std::isfinite(loss)) {
      throw Error("diverged", "training loss became non-finite at step " + std::to_string(step));
    }
    result.loss_trace.push_back(loss);
    if (options.on_step) options.on_step(step, loss);

    auto grad_groups = grad.groups();
    double norm2 = 0.0;
    for (auto g : grad_groups) {
      for (double v : g) norm2 += v * v;
    }
    const double norm = std::sqrt(norm2);
    const double clip_scale = options.clip > 0.0 && norm > options.clip ? options.clip / norm : 1.0;

    const double t = step + 1.0;
    const double correction1 = 1.0 - std::pow(beta1, t);
    const double correction2 = 1.0 - std::pow(beta2, t);
    param_groups = params.groups();
    for (std::size_t gi = 0; gi < param_groups.size(); ++gi) {
      auto p = param_groups[gi];
      auto g = grad_groups[gi];
      for (std::size_t k = 0; k < p.size(); ++k) {
        const double gk = g[k] * clip_scale;
        m1[gi][k] = beta1 * m1[gi][k] + (1.0 - beta1) * gk;
        m2[gi][k] = beta2 * m2[gi][k] + (1.0 - beta2) * gk * gk;
        const double mhat = m1[gi][k] / correction1;
        const double vhat = m2[gi][k] / correction2;
        p[k] -= options.learning_rate * mhat / (std::sqrt(vhat) + adam_eps);
      }
    }
  }
  return result;
}

// ---------------------------------------------------------------- sampling

std::string sample(const LanguageModel& model, std::string_view prefix, const SampleOptions& options) {
  if (!options.greedy && !(options.temperature > 0.0)) {
    throw Error("invalid_temperature", "sampling temperature must be positive");
  }
  const auto& params = model.params;
  DecoderState state = DecoderState::zeros(params.shape), next;
  Eigen::VectorXd logits = step_logits(params, state, CharVocab::kPoemEnd, next);
  std::swap(state, next);
  for (int id : model.vocab.encode(prefix)) {
    logits = step_logits(params, state, id, next);
    std::swap(state, next);
  }

  Rng rng(options.seed);
  std::vector<int> out;
  while (out.size() < options.max_chars) {
    int choice = 0;
    if (options.greedy) {
      logits.maxCoeff(&choice);
    } else {
      const Eigen::VectorXd p = softmax(logits, options.temperature);
      const double u = rng.uniform();
      double acc = 0.0;
      choice = static_cast<int>(p.size()) - 1;
      for (Eigen::Index k = 0; k < p.size(); ++k) {
        acc += p[k];
        if (u < acc) {
          choice = static_cast<int>(k);
          break;
        }
      }
    }
    if (choice == CharVocab::kPoemEnd) break;
    out.push_back(choice);
    logits = step_logits(params, state, choice, next);
    std::swap(state, next);
  }
  return model.vocab.decode(out);
}

PerplexityResult perplexity(const LanguageModel& model, std::string_view text) {
  if (text.empty()) throw Error("empty_text", "perplexity needs non-empty text");
  const auto& params = model.params;
  DecoderState state = DecoderState::zeros(params.shape), next;
  Eigen::VectorXd logits = step_logits(params, state, CharVocab::kPoemEnd, next);
  std::swap(state, next);
  double nll = 0.0;
  const auto ids = model.vocab.encode(text);
  for (int id : ids) {
    nll -= log_softmax(logits)[id];
    logits = step_logits(params, state, id, next);
    std::swap(state, next);
  }
  PerplexityResult r;
  r.characters = ids.size();
  r.nats_per_char = nll / static_cast<double>(ids.size());
  r.perplexity = std::exp(r.nats_per_char);
  return r;
}

// ---------------------------------------------------------------- verification

GradientCheckResult gradient_check(const LstmParams& params, std::span<const int> inputs,
                                   std::span<const int> targets, double epsilon) {
  GradientCheckResult result;
  if (inputs.empty()) return result;
  const std::vector<std::vector<int>> in{std::vector<int>(inputs.begin(), inputs.end())};
  const std::vector<std::vector<int>> tg{std::vector<int>(targets.begin(), targets.end())};

  LstmParams grad;
  batch_loss(params, in, tg, &grad);
  LstmParams probe = params;
  const auto names = params.group_names();
  auto probe_groups = probe.groups();
  const auto grad_groups = std::as_const(grad).groups();
  for (std::size_t gi = 0; gi < probe_groups.size(); ++gi) {
    for (std::size_t k = 0; k < probe_groups[gi].size(); ++k) {
      double& theta = probe_groups[gi][k];
      const double saved = theta;
      auto at = [&](double offset) {
        theta = saved + offset;
        return batch_loss(probe, in, tg);
      };
      // Five-point stencil: O(h^4) truncation lets h stay large enough that
      // roundoff does not swamp gradients near 1e-8.
      const double d1 = at(epsilon) - at(-epsilon);
      const double d2 = at(2.0 * epsilon) - at(-2.0 * epsilon);
      theta = saved;
      const double numeric = (8.0 * d1 - d2) / (12.0 * epsilon);
      const double analytic = grad_groups[gi][k];
      const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-8});
      const double rel = std::abs(analytic - numeric) / denom;
      ++result.parameters_checked;
      if (rel > result.max_relative_error) {
        result.max_relative_error = rel;
        result.worst_group = names[gi];
        result.worst_index = k;
      }
    }
  }
  return result;
}

// ---------------------------------------------------------------- file format

void save_model(const LanguageModel& model, const std::filesystem::path& path) {
  model.params.validate();
  const auto& shape = model.params.shape;
  nlohmann::json groups = nlohmann::json::array();
  const auto names = model.params.group_names();
  const auto data = model.params.groups();
  for (std::size_t i = 0; i < names.size(); ++i) groups.push_back({{"name", names[i]}, {"size", data[i].size()}});
  const nlohmann::json header = {{"format", "verse-charlm"},
                                 {"version", 1},
                                 {"dtype", "float64-le"},
                                 {"layout", "column-major"},
                                 {"layers", shape.layers},
                                 {"hidden", shape.hidden},
                                 {"embed", shape.embed},
                                 {"vocab", model.vocab.symbols()},
                                 {"groups", groups}};
  const std::string text = header.dump();

  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("io_error", "cannot write " + path.string());
  out.write(kMagic, sizeof kMagic);
  auto put_u64 = [&](std::uint64_t v) {
    char bytes[8];
    for (int i = 0; i < 8; ++i) bytes[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
    out.write(bytes, 8);
  };
  put_u64(text.size());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  for (auto g : data) {
    for (double v : g) put_u64(std::bit_cast<std::uint64_t>(v));
  }
  if (!out) throw Error("io_error", "short write to " + path.string());
}

LanguageModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("io_error", "cannot read " + path.string());
  char magic[8];
  in.read(magic, 8);
  if (!in || !std::equal(magic, magic + 8, kMagic)) throw Error("corrupt_model", "not a verse LM file");
  auto get_u64 = [&]() {
    unsigned char bytes[8];
    in.read(reinterpret_cast<char*>(bytes), 8);
    if (!in) throw Error("corrupt_model", "truncated LM file");
    std::uint64_t v = 0;
    for (int i = 7; i >= 0; --i) v = (v << 8) | bytes[i];
    return v;
  };
  const std::uint64_t header_size = get_u64();
  if (header_size > (1u << 26)) throw Error("corrupt_model", "implausible LM header size");
  std::string text(header_size, '\0');
  in.read(text.data(), static_cast<std::streamsize>(header_size));
  if (!in) throw Error("corrupt_model", "truncated LM header");

  LanguageModel model;
  try {
    const auto header = nlohmann::json::parse(text);
    if (header.at("format") != "verse-charlm" || header.at("version") != 1 || header.at("dtype") != "float64-le") {
      throw Error("corrupt_model", "unsupported LM header");
    }
    model.vocab = CharVocab(header.at("vocab").get<std::vector<std::string>>());
    const LstmShape shape{header.at("layers").get<int>(), header.at("hidden").get<int>(),
                          header.at("embed").get<int>(), model.vocab.size()};
    model.params = LstmParams::zeros(shape);
    const auto& groups = header.at("groups");
    auto data = model.params.groups();
    if (groups.size() != data.size()) throw Error("corrupt_model", "LM group count mismatch");
    for (std::size_t i = 0; i < data.size(); ++i) {
      if (groups[i].at("size").get<std::size_t>() != data[i].size()) {
        throw Error("corrupt_model", "LM group size mismatch");
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error("corrupt_model", std::string("bad LM header: ") + e.what());
  }
  for (auto g : model.params.groups()) {
    for (double& v : g) v = std::bit_cast<double>(get_u64());
  }
  model.params.validate();
  return model;
}

}  // namespace verse::lm
