#include "conec/context.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <thread>

namespace conec {

namespace {

using Triplet = Eigen::Triplet<double, ContextCountStore::SparseRows::StorageIndex>;

struct LocalAccumulation {
  std::map<WordId, double> counts;
  std::set<std::string> oov_context;
  std::size_t occurrences = 0;
};

ContextVector to_vector(const std::map<WordId, double>& counts, double scale, std::size_t vocab_size, CvKind kind) {
  ContextVector cv;
  cv.kind = kind;
  cv.weights.resize(static_cast<Eigen::Index>(vocab_size));
  cv.weights.reserve(static_cast<Eigen::Index>(counts.size()));
  for (const auto& [id, c] : counts) cv.weights.insertBack(id) = c * scale;
  return cv;
}

// Adds the binary context of every position accepted by `want` into `acc`.
template <typename Want>
void accumulate_local(const TokenDocument& doc, std::size_t window, bool include_target, Want&& want,
                      std::map<WordId, LocalAccumulation>& acc) {
  std::vector<WordId> ids;
  for (const auto& sentence : doc.sentences) {
    for (std::size_t pos = 0; pos < sentence.size(); ++pos) {
      const WordId target = sentence[pos];
      if (!want(target)) continue;
      auto& entry = acc[target];
      ++entry.occurrences;
      binary_context(sentence, pos, window, include_target, ids);
      for (WordId c : ids) entry.counts[c] += 1.0;
      const std::size_t lo = pos >= window ? pos - window : 0;
      const std::size_t hi = std::min(sentence.size(), pos + window + 1);
      for (std::size_t i = lo; i < hi; ++i) {
        if (i != pos && TokenDocument::is_oov(sentence[i]))
          entry.oov_context.insert(doc.oov_surfaces[TokenDocument::oov_slot(sentence[i])]);
      }
    }
  }
}

ContextVector finalize_local(const LocalAccumulation& acc, std::size_t vocab_size) {
  // Binary entries per occurrence: repeat counts never exceed the occurrence count.
  ContextVector cv = to_vector(acc.counts, 1.0 / static_cast<double>(acc.occurrences), vocab_size, CvKind::kLocal);
  cv.oov_context.assign(acc.oov_context.begin(), acc.oov_context.end());
  return cv;
}

}  // namespace

void binary_context(std::span<const WordId> sentence, std::size_t position, std::size_t window,
                    bool include_target, std::vector<WordId>& out) {
  out.clear();
  const std::size_t lo = position >= window ? position - window : 0;
  const std::size_t hi = std::min(sentence.size(), position + window + 1);
  for (std::size_t i = lo; i < hi; ++i) {
    if (i != position && sentence[i] >= 0) out.push_back(sentence[i]);
  }
  if (include_target && sentence[position] >= 0) out.push_back(sentence[position]);
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
}

ContextVector binary_cv(std::span<const WordId> sentence, std::size_t position, std::size_t window,
                        bool include_target, std::size_t vocab_size) {
  std::vector<WordId> ids;
  binary_context(sentence, position, window, include_target, ids);
  ContextVector cv;
  cv.weights.resize(static_cast<Eigen::Index>(vocab_size));
  for (WordId id : ids) cv.weights.insertBack(id) = 1.0;
  return cv;
}

ContextCountStore& ContextCountStore::operator+=(const ContextCountStore& other) {
  if (other.occ.size() != occ.size() || other.window != window || other.include_target != include_target)
    throw DataError("cannot merge context stores with different settings");
  counts = SparseRows(counts + other.counts);
  for (std::size_t i = 0; i < occ.size(); ++i) occ[i] += other.occ[i];
  return *this;
}

ContextCountStore ContextCountStore::with_target_included() const {
  ContextCountStore out = *this;
  if (include_target) return out;
  std::vector<Triplet> diag;
  for (std::size_t w = 0; w < occ.size(); ++w) {
    if (occ[w] == 0) continue;
    const auto i = static_cast<Eigen::Index>(w);
    const double delta = static_cast<double>(occ[w]) - counts.coeff(i, i);
    if (delta != 0.0) diag.emplace_back(i, i, delta);
  }
  SparseRows d(counts.rows(), counts.cols());
  d.setFromTriplets(diag.begin(), diag.end());
  out.counts = SparseRows(counts + d);
  out.counts.makeCompressed();
  out.include_target = true;
  return out;
}

ContextAccumulator::ContextAccumulator(std::size_t vocab_size, std::size_t window, bool include_target,
                                       std::size_t batch_pairs)
    : batch_pairs_(std::max<std::size_t>(batch_pairs, 1)) {
  const auto n = static_cast<Eigen::Index>(vocab_size);
  store_.counts.resize(n, n);
  store_.occ.assign(vocab_size, 0);
  store_.window = window;
  store_.include_target = include_target;
}

void ContextAccumulator::add_sentence(std::span<const WordId> sentence) {
  for (std::size_t pos = 0; pos < sentence.size(); ++pos) {
    const WordId w = sentence[pos];
    if (w < 0) continue;
    ++store_.occ[static_cast<std::size_t>(w)];
    binary_context(sentence, pos, store_.window, store_.include_target, scratch_);
    for (WordId c : scratch_)
      pending_.push_back((static_cast<std::uint64_t>(w) << 32) | static_cast<std::uint32_t>(c));
  }
  if (pending_.size() >= batch_pairs_) flush();
}

void ContextAccumulator::add_document(const TokenDocument& doc) {
  for (const auto& s : doc.sentences) add_sentence(s);
}

void ContextAccumulator::flush() {
  if (pending_.empty()) return;
  std::sort(pending_.begin(), pending_.end());
  std::vector<Triplet> triplets;
  for (std::size_t i = 0; i < pending_.size();) {
    std::size_t j = i;
    while (j < pending_.size() && pending_[j] == pending_[i]) ++j;
    triplets.emplace_back(static_cast<Eigen::Index>(pending_[i] >> 32),
                          static_cast<Eigen::Index>(pending_[i] & 0xffffffffu), static_cast<double>(j - i));
    i = j;
  }
  pending_.clear();
  ContextCountStore::SparseRows batch(store_.counts.rows(), store_.counts.cols());
  batch.setFromTriplets(triplets.begin(), triplets.end());
  if (store_.counts.nonZeros() == 0) {
    store_.counts = std::move(batch);
  } else {
    store_.counts = ContextCountStore::SparseRows(store_.counts + batch);
  }
}

ContextCountStore ContextAccumulator::finish() {
  flush();
  store_.counts.makeCompressed();
  return std::move(store_);
}

ContextCountStore accumulate_global(std::span<const TokenDocument> docs, std::size_t vocab_size,
                                    std::size_t window, bool include_target, std::size_t workers) {
  std::vector<std::span<const WordId>> sentences;
  for (const auto& doc : docs)
    for (const auto& s : doc.sentences) sentences.emplace_back(s);
  workers = std::clamp<std::size_t>(workers, 1, std::max<std::size_t>(1, sentences.size()));

  std::vector<ContextCountStore> shards(workers);
  auto work = [&](std::size_t w) {
    ContextAccumulator acc(vocab_size, window, include_target, (std::size_t{1} << 24) / workers);
    const std::size_t begin = sentences.size() * w / workers;
    const std::size_t end = sentences.size() * (w + 1) / workers;
    for (std::size_t i = begin; i < end; ++i) acc.add_sentence(sentences[i]);
    shards[w] = acc.finish();
  };
  if (workers == 1) {
    work(0);
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work, w);
  }
  ContextCountStore store = std::move(shards[0]);
  for (std::size_t w = 1; w < workers; ++w) store += shards[w];
  store.counts.makeCompressed();
  return store;
}

ContextVector global_cv(const ContextCountStore& store, WordId word) {
  if (!store.has_word(word)) throw MissingWordError("word id " + std::to_string(word) + " has no stored contexts");
  const double m = static_cast<double>(store.occ[static_cast<std::size_t>(word)]);
  ContextVector cv;
  cv.kind = CvKind::kGlobal;
  cv.weights.resize(static_cast<Eigen::Index>(store.vocab_size()));
  for (ContextCountStore::SparseRows::InnerIterator it(store.counts, word); it; ++it)
    cv.weights.insertBack(it.col()) = it.value() / m;
  return cv;
}

ContextVector local_cv(const TokenDocument& doc, const std::string& surface, const Vocabulary& vocab,
                       std::size_t window, bool include_target) {
  const auto id = doc.resolve(surface, vocab);
  if (!id) throw MissingWordError("'" + surface + "' does not occur in the document");
  std::map<WordId, LocalAccumulation> acc;
  accumulate_local(doc, window, include_target, [&](WordId w) { return w == *id; }, acc);
  return finalize_local(acc.at(*id), vocab.size());
}

std::unordered_map<WordId, ContextVector> local_cvs(const TokenDocument& doc, std::size_t vocab_size,
                                                    std::size_t window, bool include_target) {
  std::map<WordId, LocalAccumulation> acc;
  accumulate_local(doc, window, include_target, [](WordId) { return true; }, acc);
  std::unordered_map<WordId, ContextVector> out;
  out.reserve(acc.size());
  for (const auto& [id, a] : acc) out.emplace(id, finalize_local(a, vocab_size));
  return out;
}

ContextVector mix_cv(const ContextVector& global, const ContextVector& local, MixWeight a) {
  if (global.weights.size() != local.weights.size())
    throw DataError("context vectors span different vocabularies");
  ContextVector cv;
  cv.kind = CvKind::kMixed;
  cv.weights.resize(global.weights.size());
  // Entries equal in both vectors are copied so that identical arguments
  // reproduce the input exactly for every a.
  const double wa = a.value();
  Eigen::SparseVector<double>::InnerIterator g(global.weights), l(local.weights);
  while (g || l) {
    Eigen::Index idx;
    double value;
    if (g && (!l || g.index() < l.index())) {
      idx = g.index(), value = wa * g.value();
      ++g;
    } else if (l && (!g || l.index() < g.index())) {
      idx = l.index(), value = (1.0 - wa) * l.value();
      ++l;
    } else {
      idx = g.index();
      value = g.value() == l.value() ? g.value() : wa * g.value() + (1.0 - wa) * l.value();
      ++g, ++l;
    }
    if (value != 0.0) cv.weights.insertBack(idx) = value;
  }
  cv.oov_context = local.oov_context;
  return cv;
}

ContextVector l2_normalized(ContextVector cv) {
  const double norm = cv.weights.norm();
  if (norm > 0.0) cv.weights /= norm;
  return cv;
}

ContextVector word_context(const std::string& surface, const ContextCountStore& store, const Vocabulary& vocab,
                           const TokenDocument* document, const EmbedOptions& options) {
  ContextVector cv;
  const bool in_document = document != nullptr && document->resolve(surface, vocab).has_value();
  if (auto id = vocab.find(surface); id && store.has_word(*id)) {
    cv = global_cv(store, *id);
    if (in_document) {
      cv = mix_cv(cv, local_cv(*document, surface, vocab, store.window, store.include_target), options.a);
    }
  } else {
    if (document == nullptr) throw UnresolvableWordError("'" + surface + "' is out of vocabulary and has no context");
    cv = local_cv(*document, surface, vocab, store.window, store.include_target);
  }
  return options.normalize ? l2_normalized(std::move(cv)) : cv;
}

}  // namespace conec
