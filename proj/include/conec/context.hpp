#pragma once

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "conec/corpus.hpp"
#include "conec/error.hpp"
#include "conec/trainer.hpp"

namespace conec {

enum class CvKind { kGlobal, kLocal, kMixed };

// Average context vector over the vocabulary. OOV context words have no
// column; their surfaces are kept for inspection only.
struct ContextVector {
  Eigen::SparseVector<double> weights;
  CvKind kind = CvKind::kLocal;
  std::vector<std::string> oov_context;

  bool empty() const { return weights.nonZeros() == 0; }
  double at(WordId id) const { return weights.coeff(id); }
};

// Weight of the corpus-wide context vector in the global/local blend.
class MixWeight {
 public:
  explicit MixWeight(double a) : a_(a) {
    if (!(a >= 0.0 && a <= 1.0)) throw UsageError("mix weight must lie in [0, 1]");
  }
  double value() const noexcept { return a_; }

 private:
  double a_;
};

// Accumulated binary context vectors per word plus occurrence counts.
// Row w of `counts` holds, for each context word c, the number of
// occurrences of w that had c in their window.
struct ContextCountStore {
  using SparseRows = Eigen::SparseMatrix<double, Eigen::RowMajor>;

  SparseRows counts;
  std::vector<std::uint64_t> occ;
  bool include_target = false;
  std::size_t window = 5;

  std::size_t vocab_size() const noexcept { return occ.size(); }
  bool has_word(WordId w) const {
    return w >= 0 && static_cast<std::size_t>(w) < occ.size() && occ[static_cast<std::size_t>(w)] > 0;
  }

  // Adds another store built with the same settings over disjoint text.
  ContextCountStore& operator+=(const ContextCountStore& other);

  // The same store as if accumulated with the target word included. Every
  // occurrence contributes a 1 at its own position, so the diagonal becomes occ.
  ContextCountStore with_target_included() const;
};

// Distinct in-vocabulary ids within `window` tokens of `position` (full,
// fixed window), sorted. With include_target, the word itself is added.
void binary_context(std::span<const WordId> sentence, std::size_t position, std::size_t window,
                    bool include_target, std::vector<WordId>& out);

ContextVector binary_cv(std::span<const WordId> sentence, std::size_t position, std::size_t window,
                        bool include_target, std::size_t vocab_size);

// Streaming accumulation; pairs are buffered, sorted and folded into the
// sparse rows in batches so memory stays proportional to distinct pairs.
class ContextAccumulator {
 public:
  ContextAccumulator(std::size_t vocab_size, std::size_t window, bool include_target,
                     std::size_t batch_pairs = std::size_t{1} << 24);

  void add_sentence(std::span<const WordId> sentence);
  void add_document(const TokenDocument& doc);
  ContextCountStore finish();

 private:
  void flush();

  ContextCountStore store_;
  std::vector<std::uint64_t> pending_;
  std::size_t batch_pairs_;
  std::vector<WordId> scratch_;
};

ContextCountStore accumulate_global(std::span<const TokenDocument> docs, std::size_t vocab_size,
                                    std::size_t window, bool include_target, std::size_t workers = 1);

// Row of the store divided by the word's occurrence count.
ContextVector global_cv(const ContextCountStore& store, WordId word);

// Average binary context vector over the occurrences of `surface` in `doc`.
ContextVector local_cv(const TokenDocument& doc, const std::string& surface, const Vocabulary& vocab,
                       std::size_t window, bool include_target);

// Local context vectors of every distinct token of a document in one pass,
// keyed by token id (negative ids for OOV surfaces).
std::unordered_map<WordId, ContextVector> local_cvs(const TokenDocument& doc, std::size_t vocab_size,
                                                    std::size_t window, bool include_target);

ContextVector mix_cv(const ContextVector& global, const ContextVector& local, MixWeight a);

// Context vector scaled to unit L2 norm; empty vectors are returned unchanged.
ContextVector l2_normalized(ContextVector cv);

// cv^T * w0.
template <typename Scalar>
Vector<Scalar> synthesize_embedding(const ContextVector& cv, const Matrix<Scalar>& w0) {
  Vector<Scalar> y = Vector<Scalar>::Zero(w0.cols());
  for (Eigen::SparseVector<double>::InnerIterator it(cv.weights); it; ++it) {
    if (it.index() >= w0.rows()) throw DataError("context vector index outside the embedding matrix");
    y += static_cast<Scalar>(it.value()) * w0.row(it.index()).transpose();
  }
  return y;
}

// Blend weight and local context for embed_word. A missing document means
// the word is embedded from its global context only.
struct EmbedOptions {
  MixWeight a{1.0};
  bool normalize = false;
};

// The context vector embed_word multiplies with w0:
//  - in vocabulary, no document (or absent from it): global only
//  - in vocabulary, in the document: a * global + (1 - a) * local
//  - out of vocabulary: local only
ContextVector word_context(const std::string& surface, const ContextCountStore& store, const Vocabulary& vocab,
                           const TokenDocument* document, const EmbedOptions& options);

template <typename Scalar>
Vector<Scalar> embed_word(const std::string& surface, const ContextCountStore& store, const Matrix<Scalar>& w0,
                          const Vocabulary& vocab, const TokenDocument* document, const EmbedOptions& options) {
  Vector<Scalar> y = synthesize_embedding(word_context(surface, store, vocab, document, options), w0);
  if (!y.allFinite()) throw NumericError("non-finite embedding for '" + surface + "'");
  return y;
}

// Global-CV embeddings of every vocabulary word, row i = global_cv(i)^T w0.
// Words without stored contexts get a zero row.
template <typename Scalar>
Matrix<Scalar> global_embeddings(const ContextCountStore& store, const Matrix<Scalar>& w0) {
  if (static_cast<Eigen::Index>(store.vocab_size()) != w0.rows())
    throw DataError("context store and embedding matrix disagree on vocabulary size");
  Matrix<Scalar> y = Matrix<Scalar>::Zero(w0.rows(), w0.cols());
  for (Eigen::Index i = 0; i < store.counts.outerSize(); ++i) {
    const auto m = store.occ[static_cast<std::size_t>(i)];
    if (m == 0) continue;
    for (ContextCountStore::SparseRows::InnerIterator it(store.counts, i); it; ++it)
      y.row(i) += static_cast<Scalar>(it.value() / static_cast<double>(m)) * w0.row(it.col());
  }
  return y;
}

}  // namespace conec
