#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <functional>
#include <mutex>
#include <optional>
#include <span>
#include <thread>
#include <vector>

#include "conec/corpus.hpp"
#include "conec/error.hpp"

namespace conec {

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

enum class CombineMode { kSum, kMean };
enum class SigmoidMode { kTable, kExact };

struct TrainConfig {
  std::size_t dim = 200;
  std::size_t window = 5;
  std::size_t negatives = 13;
  std::size_t epochs = 1;
  double lr_start = 0.025;
  double lr_min = 1e-4;
  CombineMode combine = CombineMode::kMean;
  // Subsampling threshold; 0 keeps every token.
  double subsample = 0.0;
  std::uint64_t seed = 1;
  std::size_t workers = 1;
  bool dynamic_window = true;
  SigmoidMode sigmoid = SigmoidMode::kTable;

  void validate() const {
    if (dim < 1) throw UsageError("dim must be >= 1");
    if (window < 1) throw UsageError("window must be >= 1");
    if (negatives < 1) throw UsageError("negatives must be >= 1");
    if (!(lr_min > 0.0) || !(lr_start > lr_min)) throw UsageError("need lr_start > lr_min > 0");
    if (workers < 1) throw UsageError("workers must be >= 1");
    if (subsample < 0.0) throw UsageError("subsample threshold must be >= 0");
  }
};

// Input (w0) and output (w1) weights, one row per vocabulary word.
template <typename Scalar>
struct ModelParams {
  Matrix<Scalar> w0;
  Matrix<Scalar> w1;

  Eigen::Index rows() const noexcept { return w0.rows(); }
  Eigen::Index dim() const noexcept { return w0.cols(); }

  // w0 ~ U(-0.5/d, 0.5/d), w1 = 0.
  static ModelParams initialize(std::size_t vocab_size, std::size_t dim, std::uint64_t seed) {
    ModelParams p;
    const auto n = static_cast<Eigen::Index>(vocab_size);
    const auto d = static_cast<Eigen::Index>(dim);
    p.w0.resize(n, d);
    p.w1 = Matrix<Scalar>::Zero(n, d);
    Rng rng(seed);
    const double half = 0.5 / static_cast<double>(dim);
    std::uniform_real_distribution<double> u(-half, half);
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < d; ++j) p.w0(i, j) = static_cast<Scalar>(u(rng));
    return p;
  }

  bool all_finite() const { return w0.allFinite() && w1.allFinite(); }
};

// Logistic function, either exact or a 1000-bin table over [-6, 6] with
// inputs clipped to that range.
class Sigmoid {
 public:
  static constexpr int kBins = 1000;
  static constexpr double kMaxInput = 6.0;

  explicit Sigmoid(SigmoidMode mode = SigmoidMode::kTable) : mode_(mode) {
    for (int i = 0; i <= kBins; ++i) {
      const double x = (2.0 * i / kBins - 1.0) * kMaxInput;
      table_[static_cast<std::size_t>(i)] = 1.0 / (1.0 + std::exp(-x));
    }
  }

  SigmoidMode mode() const noexcept { return mode_; }

  double operator()(double x) const {
    if (mode_ == SigmoidMode::kExact) return 1.0 / (1.0 + std::exp(-x));
    const double clipped = std::clamp(x, -kMaxInput, kMaxInput);
    const auto bin = static_cast<std::size_t>((clipped + kMaxInput) * (kBins / (2.0 * kMaxInput)) + 0.5);
    return table_[bin];
  }

  // -log(sigmoid(x)).
  double neg_log(double x) const {
    if (mode_ == SigmoidMode::kExact) return x > 0 ? std::log1p(std::exp(-x)) : -x + std::log1p(std::exp(x));
    return -std::log((*this)(x));
  }

 private:
  SigmoidMode mode_;
  std::array<double, kBins + 1> table_{};
};

struct StepScores {
  // Target score first, then one per negative.
  std::vector<double> scores;
  double loss = 0.0;
};

// Context ids around `position`: a half-width b is drawn from [1, window]
// (or fixed at `window` when not dynamic), clipped at sentence boundaries.
// OOV tokens are skipped.
inline void sample_training_window(std::span<const WordId> sentence, std::size_t position, std::size_t window,
                                   Rng& rng, std::vector<WordId>& out, bool dynamic = true) {
  out.clear();
  std::size_t b = window;
  if (dynamic && window > 1) b = std::uniform_int_distribution<std::size_t>(1, window)(rng);
  const std::size_t lo = position >= b ? position - b : 0;
  const std::size_t hi = std::min(sentence.size(), position + b + 1);
  for (std::size_t i = lo; i < hi; ++i) {
    if (i != position && sentence[i] >= 0) out.push_back(sentence[i]);
  }
}

inline std::vector<WordId> sample_training_window(std::span<const WordId> sentence, std::size_t position,
                                                  std::size_t window, Rng& rng, bool dynamic = true) {
  std::vector<WordId> out;
  sample_training_window(sentence, position, window, rng, out, dynamic);
  return out;
}

template <typename Scalar, typename Derived>
bool forward_hidden_into(std::span<const WordId> context, const Matrix<Scalar>& w0, CombineMode mode,
                         Eigen::MatrixBase<Derived>& h) {
  h.setZero();
  if (context.empty()) return false;
  for (WordId c : context) h += w0.row(c).transpose();
  if (mode == CombineMode::kMean) h /= static_cast<Scalar>(context.size());
  return true;
}

// Sum (or mean) of the context rows of w0; nullopt for an empty context.
template <typename Scalar>
std::optional<Vector<Scalar>> forward_hidden(std::span<const WordId> context, const Matrix<Scalar>& w0,
                                             CombineMode mode) {
  Vector<Scalar> h(w0.cols());
  if (!forward_hidden_into(context, w0, mode, h)) return std::nullopt;
  return h;
}

namespace detail {

// Core of one negative-sampling update. `scores` receives k+1 values;
// `err` is scratch of size d. Returns the step loss.
template <typename Scalar>
double negative_sampling_update(const Eigen::Ref<const Vector<Scalar>>& h, WordId target,
                                std::span<const WordId> negatives, std::span<const WordId> context,
                                Matrix<Scalar>& w0, Matrix<Scalar>& w1, double lr, CombineMode mode,
                                const Sigmoid& sigmoid, std::span<double> scores, Vector<Scalar>& err,
                                std::span<double> grads) {
  const std::size_t k1 = negatives.size() + 1;
  auto row_of = [&](std::size_t j) { return j == 0 ? target : negatives[j - 1]; };

  double loss = 0.0;
  for (std::size_t j = 0; j < k1; ++j) {
    const double s = static_cast<double>(w1.row(row_of(j)).dot(h.transpose()));
    if (!std::isfinite(s)) throw NumericError("non-finite score in negative sampling step");
    scores[j] = s;
    const double label = j == 0 ? 1.0 : 0.0;
    grads[j] = sigmoid(s) - label;
    loss += j == 0 ? sigmoid.neg_log(s) : sigmoid.neg_log(-s);
  }

  // Back-propagated error uses the pre-update output rows.
  err.setZero();
  for (std::size_t j = 0; j < k1; ++j) err += static_cast<Scalar>(grads[j]) * w1.row(row_of(j)).transpose();
  for (std::size_t j = 0; j < k1; ++j) w1.row(row_of(j)) -= static_cast<Scalar>(lr * grads[j]) * h.transpose();

  double scale = lr;
  if (mode == CombineMode::kMean) scale /= static_cast<double>(context.size());
  for (WordId c : context) w0.row(c) -= static_cast<Scalar>(scale) * err.transpose();
  return loss;
}

}  // namespace detail

// One SGD step of CBOW with negative sampling. The label vector is 1 for the
// target and 0 for each negative; w1 rows and context rows of w0 are updated
// in place.
template <typename Scalar>
StepScores negative_sampling_step(const Eigen::Ref<const Vector<Scalar>>& h, WordId target,
                                  std::span<const WordId> negatives, std::span<const WordId> context,
                                  Matrix<Scalar>& w0, Matrix<Scalar>& w1, double lr, CombineMode mode,
                                  const Sigmoid& sigmoid) {
  StepScores out;
  out.scores.resize(negatives.size() + 1);
  std::vector<double> grads(out.scores.size());
  Vector<Scalar> err(w0.cols());
  out.loss = detail::negative_sampling_update<Scalar>(h, target, negatives, context, w0, w1, lr, mode, sigmoid,
                                                      out.scores, err, grads);
  return out;
}

// Scalar loss of a step at the current parameters, without updating them.
template <typename Scalar>
double negative_sampling_loss(std::span<const WordId> context, WordId target, std::span<const WordId> negatives,
                              const Matrix<Scalar>& w0, const Matrix<Scalar>& w1, CombineMode mode,
                              const Sigmoid& sigmoid) {
  auto h = forward_hidden<Scalar>(context, w0, mode);
  if (!h) return 0.0;
  double loss = sigmoid.neg_log(static_cast<double>(w1.row(target).dot(h->transpose())));
  for (WordId n : negatives) loss += sigmoid.neg_log(-static_cast<double>(w1.row(n).dot(h->transpose())));
  return loss;
}

struct TrainProgress {
  std::size_t epoch = 0;
  std::uint64_t processed = 0;
  std::uint64_t scheduled = 0;
  double lr = 0.0;
  double mean_loss = 0.0;
};

using ProgressCallback = std::function<void(const TrainProgress&)>;

inline double scheduled_lr(const TrainConfig& config, std::uint64_t processed, std::uint64_t scheduled) {
  if (scheduled == 0) return config.lr_start;
  const double frac = std::min(1.0, static_cast<double>(processed) / static_cast<double>(scheduled));
  return std::max(config.lr_min, config.lr_start - (config.lr_start - config.lr_min) * frac);
}

// Trains CBOW with negative sampling over every sentence of `docs`, `epochs`
// full passes. Workers share the weights without locking; one worker with a
// fixed seed is bit-reproducible.
template <typename Scalar>
ModelParams<Scalar> train(std::span<const TokenDocument> docs, const Vocabulary& vocab, const TrainConfig& config,
                          const ProgressCallback& progress = {}, std::uint64_t progress_interval = 100000) {
  config.validate();
  if (vocab.size() == 0) throw DataError("empty vocabulary");
  auto params = ModelParams<Scalar>::initialize(vocab.size(), config.dim, config.seed);
  if (config.epochs == 0) return params;
  if (vocab.size() < 2) throw DataError("training needs at least two vocabulary words");

  std::vector<std::span<const WordId>> sentences;
  for (const auto& doc : docs)
    for (const auto& s : doc.sentences) sentences.emplace_back(s);

  const std::uint64_t per_epoch = count_known_tokens(docs);
  if (per_epoch == 0) throw DataError("corpus has no in-vocabulary tokens");
  const std::uint64_t scheduled = per_epoch * config.epochs;

  const NoiseSampler sampler(vocab.counts);
  const Sigmoid sigmoid(config.sigmoid);
  std::vector<double> discard(vocab.size());
  for (std::size_t i = 0; i < vocab.size(); ++i)
    discard[i] = discard_probability(vocab.counts[i], vocab.total_tokens, config.subsample);

  std::atomic<std::uint64_t> processed{0};
  std::mutex error_mutex;
  std::exception_ptr error;
  std::atomic<bool> failed{false};
  const std::size_t workers = std::min(config.workers, std::max<std::size_t>(1, sentences.size()));

  auto work = [&](std::size_t worker) {
    try {
      Rng rng(config.seed + 0x9E3779B97F4A7C15ull * (worker + 1));
      std::uniform_real_distribution<double> coin(0.0, 1.0);
      const std::size_t begin = sentences.size() * worker / workers;
      const std::size_t end = sentences.size() * (worker + 1) / workers;
      const auto d = static_cast<Eigen::Index>(config.dim);
      Vector<Scalar> h(d), err(d);
      std::vector<WordId> kept, context, negatives(config.negatives);
      std::vector<double> scores(config.negatives + 1), grads(config.negatives + 1);
      double interval_loss = 0.0;
      std::uint64_t interval_steps = 0, interval_tokens = 0;

      for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
        for (std::size_t si = begin; si < end; ++si) {
          if (failed.load(std::memory_order_relaxed)) return;
          kept.clear();
          std::uint64_t known = 0;
          for (WordId id : sentences[si]) {
            if (id < 0) continue;
            ++known;
            if (config.subsample > 0.0 && coin(rng) < discard[static_cast<std::size_t>(id)]) continue;
            kept.push_back(id);
          }
          const double lr = scheduled_lr(config, processed.load(std::memory_order_relaxed), scheduled);
          for (std::size_t pos = 0; pos < kept.size(); ++pos) {
            sample_training_window(kept, pos, config.window, rng, context, config.dynamic_window);
            if (!forward_hidden_into<Scalar>(context, params.w0, config.combine, h)) continue;
            sample_negatives(sampler, negatives, kept[pos], rng);
            interval_loss += detail::negative_sampling_update<Scalar>(h, kept[pos], negatives, context, params.w0,
                                                                      params.w1, lr, config.combine, sigmoid,
                                                                      scores, err, grads);
            ++interval_steps;
          }
          const std::uint64_t now = processed.fetch_add(known, std::memory_order_relaxed) + known;
          interval_tokens += known;
          if (worker == 0 && progress && interval_tokens >= progress_interval) {
            progress({epoch, now, scheduled, lr, interval_steps ? interval_loss / interval_steps : 0.0});
            interval_loss = 0.0;
            interval_steps = interval_tokens = 0;
          }
        }
      }
      if (worker == 0 && progress && interval_steps > 0) {
        progress({config.epochs - 1, processed.load(), scheduled, config.lr_min, interval_loss / interval_steps});
      }
    } catch (...) {
      std::lock_guard lock(error_mutex);
      if (!error) error = std::current_exception();
      failed = true;
    }
  };

  if (workers == 1) {
    work(0);
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work, w);
  }
  if (error) std::rethrow_exception(error);
  return params;
}

}  // namespace conec
