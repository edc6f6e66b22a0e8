#include "conec/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <numeric>

#include "conec/error.hpp"

namespace conec {

namespace {

bool is_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

// Bytes of multi-byte UTF-8 sequences count as word characters.
bool is_word_char(char c) {
  const auto u = static_cast<unsigned char>(c);
  return u >= 0x80 || (u >= '0' && u <= '9') || (u >= 'a' && u <= 'z') || (u >= 'A' && u <= 'Z');
}

template <typename Fn>
void for_each_line_sentence(std::istream& in, const ReadOptions& options, Fn&& on_sentence,
                            auto&& on_document_break) {
  std::string line;
  std::vector<std::string> tokens;
  while (std::getline(in, line)) {
    tokens = tokenize(line, options.tokenize);
    if (tokens.empty()) {
      bool blank = std::all_of(line.begin(), line.end(), is_space);
      if (blank) on_document_break();
      continue;
    }
    const std::size_t chunk = options.max_sentence_length == 0 ? tokens.size() : options.max_sentence_length;
    for (std::size_t begin = 0; begin < tokens.size(); begin += chunk) {
      const std::size_t end = std::min(tokens.size(), begin + chunk);
      on_sentence(std::span<const std::string>(tokens.data() + begin, end - begin));
    }
  }
}

}  // namespace

std::string to_lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) {
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  }
  return out;
}

std::vector<std::string> tokenize(std::string_view line, const TokenizeOptions& options) {
  std::vector<std::string> tokens;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && is_space(line[i])) ++i;
    std::size_t j = i;
    while (j < line.size() && !is_space(line[j])) ++j;
    if (j > i) {
      std::string_view tok = line.substr(i, j - i);
      if (options.strip_punctuation) {
        std::size_t b = 0, e = tok.size();
        while (b < e && !is_word_char(tok[b])) ++b;
        while (e > b && !is_word_char(tok[e - 1])) --e;
        tok = tok.substr(b, e - b);
      }
      if (!tok.empty()) tokens.push_back(options.lowercase ? to_lower(tok) : std::string(tok));
    }
    i = j;
  }
  return tokens;
}

std::optional<WordId> Vocabulary::find(const std::string& word) const {
  auto it = index.find(word);
  if (it == index.end()) return std::nullopt;
  return it->second;
}

void VocabularyBuilder::add(const std::string& token) {
  ++counts_[token];
  ++total_;
}

void VocabularyBuilder::add(std::span<const std::string> tokens) {
  for (const auto& t : tokens) add(t);
}

Vocabulary VocabularyBuilder::build(std::uint64_t min_count) const {
  if (min_count == 0) throw UsageError("min_count must be positive");
  std::vector<std::pair<std::string, std::uint64_t>> kept;
  for (const auto& [word, count] : counts_) {
    if (count >= min_count) kept.emplace_back(word, count);
  }
  if (kept.empty()) {
    throw EmptyVocabularyError("no word occurs at least " + std::to_string(min_count) + " times");
  }
  std::sort(kept.begin(), kept.end(), [](const auto& x, const auto& y) {
    return x.second != y.second ? x.second > y.second : x.first < y.first;
  });

  Vocabulary vocab;
  vocab.total_tokens = total_;
  vocab.min_count = min_count;
  vocab.words.reserve(kept.size());
  vocab.counts.reserve(kept.size());
  for (auto& [word, count] : kept) {
    vocab.words.push_back(std::move(word));
    vocab.counts.push_back(count);
  }
  reindex(vocab);
  return vocab;
}

Vocabulary build_vocabulary(std::span<const std::string> tokens, std::uint64_t min_count) {
  VocabularyBuilder builder;
  builder.add(tokens);
  return builder.build(min_count);
}

void reindex(Vocabulary& vocab) {
  vocab.index.clear();
  vocab.index.reserve(vocab.words.size());
  for (std::size_t i = 0; i < vocab.words.size(); ++i) {
    vocab.index.emplace(vocab.words[i], static_cast<WordId>(i));
  }
}

double discard_probability(std::uint64_t count, std::uint64_t total, double threshold) {
  if (threshold <= 0.0 || count == 0 || total == 0) return 0.0;
  const double f = static_cast<double>(count) / static_cast<double>(total);
  const double keep = std::min(1.0, (std::sqrt(f / threshold) + 1.0) * (threshold / f));
  return std::clamp(1.0 - keep, 0.0, 1.0);
}

void TokenDocument::add_sentence(std::span<const std::string> tokens, const Vocabulary& vocab) {
  std::vector<WordId> ids;
  ids.reserve(tokens.size());
  for (const auto& tok : tokens) {
    if (auto id = vocab.find(tok)) {
      ids.push_back(*id);
      continue;
    }
    auto [it, inserted] = oov_index.try_emplace(tok, static_cast<WordId>(-static_cast<WordId>(oov_surfaces.size()) - 1));
    if (inserted) oov_surfaces.push_back(tok);
    ids.push_back(it->second);
  }
  sentences.push_back(std::move(ids));
}

std::optional<WordId> TokenDocument::resolve(const std::string& surface, const Vocabulary& vocab) const {
  WordId id;
  if (auto known = vocab.find(surface)) {
    id = *known;
  } else {
    auto it = oov_index.find(surface);
    if (it == oov_index.end()) return std::nullopt;
    id = it->second;
  }
  for (const auto& sentence : sentences) {
    if (std::find(sentence.begin(), sentence.end(), id) != sentence.end()) return id;
  }
  return std::nullopt;
}

std::string_view TokenDocument::surface(WordId id, const Vocabulary& vocab) const {
  if (is_oov(id)) return oov_surfaces.at(oov_slot(id));
  return vocab.words.at(static_cast<std::size_t>(id));
}

std::size_t TokenDocument::token_count() const {
  std::size_t n = 0;
  for (const auto& s : sentences) n += s.size();
  return n;
}

Vocabulary count_vocabulary(std::istream& in, std::uint64_t min_count, const ReadOptions& options) {
  VocabularyBuilder builder;
  for_each_line_sentence(in, options, [&](std::span<const std::string> tokens) { builder.add(tokens); }, [] {});
  return builder.build(min_count);
}

std::vector<TokenDocument> read_documents(std::istream& in, const Vocabulary& vocab, const ReadOptions& options) {
  std::vector<TokenDocument> docs;
  TokenDocument current;
  auto flush = [&] {
    if (current.sentences.empty()) return;
    current.doc_id = docs.size();
    docs.push_back(std::move(current));
    current = TokenDocument{};
  };
  for_each_line_sentence(
      in, options, [&](std::span<const std::string> tokens) { current.add_sentence(tokens, vocab); }, flush);
  flush();
  return docs;
}

std::uint64_t count_known_tokens(std::span<const TokenDocument> docs) {
  std::uint64_t n = 0;
  for (const auto& doc : docs) {
    for (const auto& s : doc.sentences) {
      n += static_cast<std::uint64_t>(std::count_if(s.begin(), s.end(), [](WordId id) { return id >= 0; }));
    }
  }
  return n;
}

NoiseSampler::NoiseSampler(std::span<const std::uint64_t> counts, double power) {
  const std::size_t n = counts.size();
  if (n == 0) throw DataError("noise sampler needs a non-empty vocabulary");
  weights_.resize(n);
  for (std::size_t i = 0; i < n; ++i) weights_[i] = std::pow(static_cast<double>(counts[i]), power);
  const double total = std::accumulate(weights_.begin(), weights_.end(), 0.0);
  for (auto& w : weights_) w /= total;

  prob_.assign(n, 0.0);
  alias_.assign(n, 0);
  std::vector<double> scaled(n);
  std::vector<std::size_t> small, large;
  for (std::size_t i = 0; i < n; ++i) {
    scaled[i] = weights_[i] * static_cast<double>(n);
    (scaled[i] < 1.0 ? small : large).push_back(i);
  }
  while (!small.empty() && !large.empty()) {
    const std::size_t s = small.back();
    small.pop_back();
    const std::size_t l = large.back();
    prob_[s] = scaled[s];
    alias_[s] = static_cast<WordId>(l);
    scaled[l] = (scaled[l] + scaled[s]) - 1.0;
    if (scaled[l] < 1.0) {
      large.pop_back();
      small.push_back(l);
    }
  }
  for (auto i : large) prob_[i] = 1.0;
  for (auto i : small) prob_[i] = 1.0;
}

WordId NoiseSampler::sample(Rng& rng) const {
  std::uniform_int_distribution<std::size_t> column(0, prob_.size() - 1);
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  const std::size_t i = column(rng);
  return coin(rng) < prob_[i] ? static_cast<WordId>(i) : alias_[i];
}

void sample_negatives(const NoiseSampler& sampler, std::span<WordId> out, WordId exclude, Rng& rng) {
  const bool excludable = exclude >= 0 && static_cast<std::size_t>(exclude) < sampler.size();
  if (excludable && sampler.size() < 2) throw DataError("negative sampling needs at least two words");
  for (auto& id : out) {
    do {
      id = sampler.sample(rng);
    } while (id == exclude);
  }
}

std::vector<WordId> sample_negatives(const NoiseSampler& sampler, std::size_t k, WordId exclude, Rng& rng) {
  std::vector<WordId> out(k);
  sample_negatives(sampler, out, exclude, rng);
  return out;
}

}  // namespace conec
