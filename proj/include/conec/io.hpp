#pragma once

#include <charconv>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "conec/analogy.hpp"
#include "conec/context.hpp"
#include "conec/corpus.hpp"
#include "conec/trainer.hpp"

namespace conec {

struct Checkpoint {
  static constexpr std::uint32_t kVersion = 1;

  Vocabulary vocab;
  TrainConfig config;
  ModelParams<float> params;
  std::optional<ContextCountStore> store;
  std::uint64_t seed = 0;
};

// Binary layout: magic "CONECKPT", u32 version, then vocabulary, training
// config, w0, w1 (u64 rows, u64 cols, row-major little-endian f32) and an
// optional context store in CSR form.
void save_checkpoint(const Checkpoint& checkpoint, std::ostream& out);
void save_checkpoint(const Checkpoint& checkpoint, const std::string& path);
Checkpoint load_checkpoint(std::istream& in);
Checkpoint load_checkpoint(const std::string& path);

enum class EmbeddingMode { kWord2vec, kConecGlobal };

EmbeddingMode parse_embedding_mode(const std::string& name);

// Rows of w0 (word2vec) or global-CV embeddings (conec-global).
Matrix<float> embedding_matrix(const Checkpoint& checkpoint, EmbeddingMode mode, bool include_target);

// Shortest round-trip decimal form, independent of the locale.
template <typename Scalar>
void append_number(std::string& out, Scalar value) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, value);
  out.append(buf, res.ptr);
}

// word2vec text format: "N d" then one "word v1 ... vd" line per word.
template <typename Scalar>
void write_embeddings(std::ostream& out, const std::vector<std::string>& words, const Matrix<Scalar>& vectors) {
  std::string line;
  out << vectors.rows() << ' ' << vectors.cols() << '\n';
  for (Eigen::Index i = 0; i < vectors.rows(); ++i) {
    line = words[static_cast<std::size_t>(i)];
    for (Eigen::Index j = 0; j < vectors.cols(); ++j) {
      line += ' ';
      append_number(line, vectors(i, j));
    }
    line += '\n';
    out << line;
  }
}

struct EmbeddingFile {
  std::vector<std::string> words;
  Matrix<float> vectors;
};

EmbeddingFile read_embeddings(std::istream& in);

void export_embeddings(const Checkpoint& checkpoint, EmbeddingMode mode, bool include_target, const std::string& path);

struct Neighbor {
  std::string word;
  double cosine = 0.0;
};

// Highest-cosine words for `query`, descending; `exclude` drops one id.
template <typename Scalar>
std::vector<Neighbor> nearest_neighbors(const BasicEmbeddingTable<Scalar>& table, const Vector<Scalar>& query,
                                        std::size_t topn, std::optional<WordId> exclude = std::nullopt) {
  if (topn < 1) throw UsageError("topn must be >= 1");
  const Scalar norm = query.norm();
  if (!(norm > Scalar(0))) throw DataError("nearest neighbours of a zero vector are undefined");
  const Vector<Scalar> scores = table.unit() * (query / norm);
  std::vector<std::pair<Scalar, WordId>> ranked;
  for (std::size_t i = 0; i < table.size(); ++i) {
    const auto id = static_cast<WordId>(i);
    if (!table.usable(id) || (exclude && *exclude == id)) continue;
    ranked.emplace_back(scores(static_cast<Eigen::Index>(i)), id);
  }
  const std::size_t n = std::min(topn, ranked.size());
  std::partial_sort(ranked.begin(), ranked.begin() + static_cast<std::ptrdiff_t>(n), ranked.end(),
                    [](const auto& x, const auto& y) { return x.first != y.first ? x.first > y.first : x.second < y.second; });
  std::vector<Neighbor> out;
  for (std::size_t i = 0; i < n; ++i)
    out.push_back({table.words()[static_cast<std::size_t>(ranked[i].second)], static_cast<double>(ranked[i].first)});
  return out;
}

// word, count, id.
void write_vocab_tsv(std::ostream& out, const Vocabulary& vocab);
// word, context_word, count.
void write_store_tsv(std::ostream& out, const ContextCountStore& store, const Vocabulary& vocab);
// word, occurrences.
void write_occurrence_tsv(std::ostream& out, const ContextCountStore& store, const Vocabulary& vocab);

}  // namespace conec
