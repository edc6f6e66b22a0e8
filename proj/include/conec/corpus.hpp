#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace conec {

using WordId = std::int32_t;
using Rng = std::mt19937_64;

struct TokenizeOptions {
  bool lowercase = true;
  // Strip leading/trailing non-alphanumerics, keep internal ones.
  bool strip_punctuation = true;
};

std::vector<std::string> tokenize(std::string_view line, const TokenizeOptions& options = {});

std::string to_lower(std::string_view s);

struct Vocabulary {
  std::vector<std::string> words;
  std::unordered_map<std::string, WordId> index;
  std::vector<std::uint64_t> counts;
  // Includes tokens of words dropped by min_count.
  std::uint64_t total_tokens = 0;
  std::uint64_t min_count = 1;

  std::size_t size() const noexcept { return words.size(); }
  std::optional<WordId> find(const std::string& word) const;
  bool contains(const std::string& word) const { return index.count(word) != 0; }
};

// Streaming word counter; build() applies the min_count cut and assigns ids
// by descending frequency, ties broken lexicographically.
class VocabularyBuilder {
 public:
  void add(const std::string& token);
  void add(std::span<const std::string> tokens);
  Vocabulary build(std::uint64_t min_count) const;

 private:
  std::unordered_map<std::string, std::uint64_t> counts_;
  std::uint64_t total_ = 0;
};

Vocabulary build_vocabulary(std::span<const std::string> tokens, std::uint64_t min_count);

// Rebuilds `index` from `words`.
void reindex(Vocabulary& vocab);

// Probability of dropping one occurrence of a word during training.
// threshold <= 0 disables subsampling.
double discard_probability(std::uint64_t count, std::uint64_t total, double threshold);

// A tokenized document. In-vocabulary tokens carry their id; out-of-vocabulary
// tokens carry a negative id, -(k+1), where k indexes oov_surfaces. Equal OOV
// surfaces within a document share one id.
struct TokenDocument {
  std::size_t doc_id = 0;
  std::vector<std::vector<WordId>> sentences;
  std::vector<std::string> oov_surfaces;
  // Per-token tags parallel to `sentences`; empty when unlabeled.
  std::vector<std::vector<std::string>> labels;
  std::unordered_map<std::string, WordId> oov_index;

  static constexpr bool is_oov(WordId id) noexcept { return id < 0; }
  static constexpr std::size_t oov_slot(WordId id) noexcept { return static_cast<std::size_t>(-id - 1); }

  // Appends a sentence of (already normalized) tokens.
  void add_sentence(std::span<const std::string> tokens, const Vocabulary& vocab);
  // Id a surface form resolves to inside this document, if it occurs at all.
  std::optional<WordId> resolve(const std::string& surface, const Vocabulary& vocab) const;
  std::string_view surface(WordId id, const Vocabulary& vocab) const;
  std::size_t token_count() const;
};

struct ReadOptions {
  TokenizeOptions tokenize;
  // Longer lines are split into several sentences; 0 disables splitting.
  std::size_t max_sentence_length = 1000;
};

// Counts every token of a plain-text corpus.
Vocabulary count_vocabulary(std::istream& in, std::uint64_t min_count, const ReadOptions& options = {});

// Plain text, one sentence per line; a blank line ends a document.
std::vector<TokenDocument> read_documents(std::istream& in, const Vocabulary& vocab,
                                          const ReadOptions& options = {});

// Number of in-vocabulary tokens across documents.
std::uint64_t count_known_tokens(std::span<const TokenDocument> docs);

// Samples ids proportionally to count^power with Vose's alias method.
class NoiseSampler {
 public:
  static constexpr double kPower = 0.75;

  NoiseSampler() = default;
  explicit NoiseSampler(std::span<const std::uint64_t> counts, double power = kPower);

  WordId sample(Rng& rng) const;
  std::size_t size() const noexcept { return prob_.size(); }
  // Normalized target probability of each id.
  const std::vector<double>& probabilities() const noexcept { return weights_; }

 private:
  std::vector<double> prob_;
  std::vector<WordId> alias_;
  std::vector<double> weights_;
};

// Draws out.size() noise ids, none equal to `exclude`.
void sample_negatives(const NoiseSampler& sampler, std::span<WordId> out, WordId exclude, Rng& rng);
std::vector<WordId> sample_negatives(const NoiseSampler& sampler, std::size_t k, WordId exclude, Rng& rng);

}  // namespace conec
