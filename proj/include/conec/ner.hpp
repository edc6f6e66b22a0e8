#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "conec/context.hpp"
#include "conec/corpus.hpp"
#include "conec/trainer.hpp"

namespace conec {

// One CoNLL document: sentences of tokens with their original surface form
// and NER tag (IOB, verbatim).
struct ConllDocument {
  std::vector<std::vector<std::string>> surfaces;
  std::vector<std::vector<std::string>> tags;

  std::size_t token_count() const;
};

struct LabeledCorpus {
  std::string fold;
  std::vector<ConllDocument> documents;

  std::size_t token_count() const;
  // All tags in document/sentence/token order.
  std::vector<std::string> flat_tags() const;
};

// Four whitespace-separated columns per token (word POS chunk NER); a blank
// line ends a sentence and a -DOCSTART- line starts a new document.
LabeledCorpus load_conll(std::istream& in, std::string fold = {});
LabeledCorpus load_conll(const std::string& path, std::string fold = {});

// Lowercased token documents for embedding lookup, tags copied to `labels`.
std::vector<TokenDocument> to_token_documents(const LabeledCorpus& corpus, const Vocabulary& vocab);

// Lowercased token stream of a corpus (for vocabulary building).
std::vector<std::string> lowercase_tokens(const LabeledCorpus& corpus);

enum class Regime {
  kBaseline,  // rows of w0, OOV -> zero
  kGlobal,    // global CVs (a = 1), OOV -> zero
  kOov,       // global CVs, OOV -> local CVs (a = 0)
  kMixed,     // a * global + (1 - a) * local, OOV -> local
};

std::string to_string(Regime regime);
Regime parse_regime(const std::string& name);

struct FeatureOptions {
  Regime regime = Regime::kBaseline;
  MixWeight a{1.0};
  bool normalize = false;
};

// One row per token, in document/sentence/token order.
Matrix<double> featurize(std::span<const TokenDocument> docs, const Vocabulary& vocab, const Matrix<float>& w0,
                         const ContextCountStore* store, const FeatureOptions& options);

struct ClassifierConfig {
  double l2 = 1e-4;
  std::size_t epochs = 100;
  double lr = 0.1;
  // 0 means full-batch gradient descent.
  std::size_t batch_size = 64;
  // Stop after this many epochs without a better validation score.
  std::size_t patience = 10;
  std::uint64_t seed = 1;
  // Center and scale every feature column by its training mean and std.
  bool standardize = true;
};

// Multinomial logistic regression; weights are C x (d + 1), last column bias.
// Inputs are mapped to (x - shift) / scale first; empty shift/scale means
// raw features. All-zero rows (no embedding) stay zero, so they are scored by
// the bias alone.
template <typename Scalar>
struct LinearClassifier {
  Matrix<Scalar> weights;
  std::vector<std::string> classes;
  Vector<Scalar> shift, scale;

  Eigen::Index num_classes() const noexcept { return weights.rows(); }
  Eigen::Index dim() const noexcept { return weights.cols() - 1; }

  template <typename Derived>
  Matrix<Scalar> transform(const Eigen::MatrixBase<Derived>& x) const {
    if (shift.size() == 0) return x;
    Matrix<Scalar> out = ((x.rowwise() - shift.transpose()).array().rowwise() / scale.transpose().array()).matrix();
    for (Eigen::Index i = 0; i < x.rows(); ++i)
      if (x.row(i).isZero(0)) out.row(i).setZero();
    return out;
  }

  template <typename Derived>
  Matrix<Scalar> logits(const Eigen::MatrixBase<Derived>& x) const {
    Matrix<Scalar> z = transform(x) * weights.leftCols(dim()).transpose();
    z.rowwise() += weights.col(dim()).transpose();
    return z;
  }

  template <typename Derived>
  Matrix<Scalar> probabilities(const Eigen::MatrixBase<Derived>& x) const {
    Matrix<Scalar> z = logits(x);
    for (Eigen::Index i = 0; i < z.rows(); ++i) {
      z.row(i).array() -= z.row(i).maxCoeff();
      z.row(i) = z.row(i).array().exp().matrix();
      z.row(i) /= z.row(i).sum();
    }
    return z;
  }
};

// Mean softmax cross-entropy plus l2/2 * |W|^2 over the non-bias columns.
// Writes the gradient into `grad` (same shape as weights) when given.
template <typename Scalar>
Scalar softmax_loss(const Matrix<Scalar>& weights, const Eigen::Ref<const Matrix<Scalar>>& x,
                    std::span<const int> labels, double l2, Matrix<Scalar>* grad = nullptr) {
  const Eigen::Index d = weights.cols() - 1;
  const auto n = static_cast<Scalar>(x.rows());
  Matrix<Scalar> z = x * weights.leftCols(d).transpose();
  z.rowwise() += weights.col(d).transpose();
  Scalar loss = 0;
  for (Eigen::Index i = 0; i < z.rows(); ++i) {
    const Scalar m = z.row(i).maxCoeff();
    z.row(i).array() -= m;
    const Scalar log_sum = std::log(z.row(i).array().exp().sum());
    loss -= z(i, labels[static_cast<std::size_t>(i)]) - log_sum;
    z.row(i) = (z.row(i).array() - log_sum).exp().matrix();
    z(i, labels[static_cast<std::size_t>(i)]) -= Scalar(1);
  }
  loss /= n;
  loss += static_cast<Scalar>(0.5 * l2) * weights.leftCols(d).squaredNorm();
  if (grad != nullptr) {
    grad->resize(weights.rows(), weights.cols());
    grad->leftCols(d) = (z.transpose() * x) / n + static_cast<Scalar>(l2) * weights.leftCols(d);
    grad->col(d) = z.colwise().sum().transpose() / n;
  }
  return loss;
}

// Validation score (higher is better) evaluated after every epoch.
template <typename Scalar>
using ValidationFn = std::function<double(const LinearClassifier<Scalar>&)>;

// Per-epoch callback receiving the full training loss.
using EpochLossFn = std::function<void(std::size_t epoch, double loss)>;

// Class indices follow the sorted distinct labels.
template <typename Scalar>
LinearClassifier<Scalar> train_classifier(const Matrix<Scalar>& x, std::span<const std::string> labels,
                                          const ClassifierConfig& config, const ValidationFn<Scalar>& validate = {},
                                          const EpochLossFn& on_epoch = {}) {
  if (static_cast<std::size_t>(x.rows()) != labels.size()) throw LengthMismatchError("features and labels differ in length");
  LinearClassifier<Scalar> clf;
  clf.classes.assign(labels.begin(), labels.end());
  std::sort(clf.classes.begin(), clf.classes.end());
  clf.classes.erase(std::unique(clf.classes.begin(), clf.classes.end()), clf.classes.end());
  if (clf.classes.size() < 2) throw DegenerateLabelsError("classifier needs at least two distinct labels");

  std::vector<int> y(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    y[i] = static_cast<int>(std::lower_bound(clf.classes.begin(), clf.classes.end(), labels[i]) - clf.classes.begin());
  }
  const auto c = static_cast<Eigen::Index>(clf.classes.size());
  clf.weights = Matrix<Scalar>::Zero(c, x.cols() + 1);
  if (config.standardize) {
    clf.shift = Vector<Scalar>::Zero(x.cols());
    clf.scale = Vector<Scalar>::Zero(x.cols());
    Scalar rows = 0;
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      if (x.row(i).isZero(0)) continue;
      clf.shift += x.row(i).transpose();
      ++rows;
    }
    if (rows > 0) clf.shift /= rows;
    for (Eigen::Index i = 0; i < x.rows(); ++i)
      if (!x.row(i).isZero(0)) clf.scale += (x.row(i).transpose() - clf.shift).cwiseAbs2();
    if (rows > 0) clf.scale = (clf.scale / rows).cwiseSqrt();
    for (Eigen::Index j = 0; j < clf.scale.size(); ++j)
      if (!(clf.scale(j) > Scalar(1e-12))) clf.scale(j) = Scalar(1);
  }
  const Matrix<Scalar> xs = clf.transform(x);

  const std::size_t n = labels.size();
  const std::size_t batch = config.batch_size == 0 ? n : std::min(config.batch_size, n);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(config.seed);
  Matrix<Scalar> grad, xb(static_cast<Eigen::Index>(batch), x.cols());
  std::vector<int> yb(batch);

  std::optional<LinearClassifier<Scalar>> best;
  double best_score = -1.0;
  std::size_t stale = 0;
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    if (batch < n) std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t start = 0; start < n; start += batch) {
      const std::size_t len = std::min(batch, n - start);
      if (batch == n) {
        softmax_loss<Scalar>(clf.weights, xs, y, config.l2, &grad);
      } else {
        for (std::size_t i = 0; i < len; ++i) {
          xb.row(static_cast<Eigen::Index>(i)) = xs.row(static_cast<Eigen::Index>(order[start + i]));
          yb[i] = y[order[start + i]];
        }
        softmax_loss<Scalar>(clf.weights, xb.topRows(static_cast<Eigen::Index>(len)),
                             std::span<const int>(yb.data(), len), config.l2, &grad);
      }
      clf.weights -= static_cast<Scalar>(config.lr) * grad;
    }
    if (!clf.weights.allFinite()) throw NumericError("classifier weights diverged");
    if (on_epoch) on_epoch(epoch, static_cast<double>(softmax_loss<Scalar>(clf.weights, xs, y, config.l2)));
    if (validate) {
      const double score = validate(clf);
      // Ties keep the later, longer-trained weights.
      if (score >= best_score) best = clf;
      if (score > best_score) {
        best_score = score;
        stale = 0;
      } else if (++stale >= config.patience) {
        break;
      }
    }
  }
  return best ? *best : clf;
}

// Per-token argmax; ties resolve to the lowest class index.
template <typename Scalar, typename Derived>
std::vector<std::string> predict_tags(const LinearClassifier<Scalar>& clf, const Eigen::MatrixBase<Derived>& x) {
  const Matrix<Scalar> z = clf.logits(x);
  std::vector<std::string> tags(static_cast<std::size_t>(z.rows()));
  for (Eigen::Index i = 0; i < z.rows(); ++i) {
    Eigen::Index best = 0;
    for (Eigen::Index j = 1; j < z.cols(); ++j)
      if (z(i, j) > z(i, best)) best = j;
    tags[static_cast<std::size_t>(i)] = clf.classes[static_cast<std::size_t>(best)];
  }
  return tags;
}

struct PhraseCounts {
  std::size_t gold = 0;
  std::size_t found = 0;
  std::size_t correct = 0;
};

// Phrase-level scores with conlleval semantics (IOB1 and IOB2 alike: a
// phrase is correct only if boundaries and type match).
struct ChunkF1 {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double accuracy = 0.0;
  std::size_t tokens = 0;
  PhraseCounts counts;
  std::map<std::string, PhraseCounts> by_type;

  static double precision_of(const PhraseCounts& c);
  static double recall_of(const PhraseCounts& c);
  static double f1_of(const PhraseCounts& c);
};

// Incremental conlleval scorer. Sentence boundaries end open phrases.
class ChunkScorer {
 public:
  void add(const std::string& gold, const std::string& predicted);
  void boundary();
  ChunkF1 result() const;

 private:
  void step(const std::string& gold, const std::string& predicted, bool counted);

  std::string last_gold_ = "O", last_gold_type_, last_pred_ = "O", last_pred_type_;
  bool in_correct_ = false;
  std::size_t tokens_ = 0, correct_tags_ = 0;
  PhraseCounts counts_;
  std::map<std::string, PhraseCounts> by_type_;
};

ChunkF1 chunk_f1(std::span<const std::string> gold, std::span<const std::string> predicted);
// Sentence-structured variant; phrases never span sentences.
ChunkF1 chunk_f1(const std::vector<std::vector<std::string>>& gold,
                 const std::vector<std::vector<std::string>>& predicted);

// conlleval-style report: summary line pair followed by one line per type.
std::string conlleval_report(const ChunkF1& score);

// Regrouping a flat tag list into a corpus' sentence structure.
std::vector<std::vector<std::string>> split_like(const LabeledCorpus& corpus, std::span<const std::string> flat);

struct NerModel {
  const Vocabulary* vocab = nullptr;
  const Matrix<float>* w0 = nullptr;
  const ContextCountStore* store = nullptr;
  std::uint64_t seed = 0;
};

struct NerSetting {
  Regime regime = Regime::kBaseline;
  double a = 1.0;
};

struct NerResult {
  std::string fold;
  Regime regime = Regime::kBaseline;
  double a = 1.0;
  std::uint64_t seed = 0;
  ChunkF1 score;
};

struct NerExperimentConfig {
  ClassifierConfig classifier;
  bool normalize = false;
};

// Fits a classifier on `train` (early stopping on `dev` F1) for every model
// and setting, then scores every fold.
std::vector<NerResult> run_ner_experiment(std::span<const NerModel> models, const LabeledCorpus& train,
                                          const LabeledCorpus& dev, const LabeledCorpus& test,
                                          std::span<const NerSetting> settings, const NerExperimentConfig& config,
                                          const std::function<void(const NerResult&)>& on_result = {});

// fold, regime, a, seed, precision, recall, f1.
void write_results_tsv(std::ostream& out, std::span<const NerResult> results);
// fold, regime, a, runs, mean_f1, std_f1 (sample standard deviation).
void write_summary_tsv(std::ostream& out, std::span<const NerResult> results);

// Settings for a regime list and a-grid: one per fixed regime, one per a for kMixed.
std::vector<NerSetting> expand_settings(std::span<const Regime> regimes, std::span<const double> a_grid);

}  // namespace conec
