#pragma once

// Independent oracles and fixtures shared by the unit tests and the
// acceptance runner. Nothing here calls into the code under test except to
// build inputs.

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "conec/context.hpp"
#include "conec/corpus.hpp"
#include "conec/ner.hpp"
#include "conec/trainer.hpp"

namespace conec::testing {

struct Corpus {
  Vocabulary vocab;
  std::vector<TokenDocument> docs;
};

// Documents separated by blank lines, one sentence per line.
inline Corpus make_corpus(const std::string& text, std::uint64_t min_count = 1) {
  Corpus c;
  std::istringstream counting(text);
  c.vocab = count_vocabulary(counting, min_count);
  std::istringstream reading(text);
  c.docs = read_documents(reading, c.vocab);
  return c;
}

// Random corpus over a small alphabet: several documents, variable sentence
// lengths, total tokens <= max_tokens. Some words are rare so min_count
// produces OOV tokens.
inline std::string random_corpus_text(std::uint64_t seed, std::size_t max_tokens = 200, std::size_t alphabet = 12) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> word(0, alphabet - 1), len(1, 12), sents(1, 4),
      target(max_tokens / 2, max_tokens);
  std::string text;
  std::size_t used = 0;
  const std::size_t goal = target(rng);
  for (std::size_t d = 0; used < goal; ++d) {
    if (d) text += "\n";
    const std::size_t n_sents = sents(rng);
    for (std::size_t s = 0; s < n_sents && used < goal; ++s) {
      const std::size_t n = std::min(len(rng), goal - used);
      for (std::size_t i = 0; i < n; ++i) {
        if (i) text += ' ';
        // Squaring skews the distribution toward low letters.
        const std::size_t w = word(rng) * word(rng) / (alphabet - 1);
        text += "w" + std::to_string(w);
      }
      text += "\n";
      used += n;
    }
  }
  return text;
}

// Dense context counts by direct enumeration: for every in-vocabulary token,
// every in-vocabulary word inside the full window contributes at most 1.
struct DenseStore {
  Eigen::MatrixXd counts;
  std::vector<std::uint64_t> occ;
};

inline DenseStore naive_store(const std::vector<TokenDocument>& docs, std::size_t n, std::size_t window,
                              bool include_target) {
  DenseStore s{Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n)),
               std::vector<std::uint64_t>(n, 0)};
  for (const auto& doc : docs) {
    for (const auto& sent : doc.sentences) {
      const auto len = static_cast<long>(sent.size());
      for (long i = 0; i < len; ++i) {
        const WordId w = sent[static_cast<std::size_t>(i)];
        if (w < 0) continue;
        ++s.occ[static_cast<std::size_t>(w)];
        std::vector<bool> seen(n, false);
        for (long j = 0; j < len; ++j) {
          const WordId c = sent[static_cast<std::size_t>(j)];
          if (c < 0) continue;
          const bool in_window = j != i && std::abs(j - i) <= static_cast<long>(window);
          const bool self = j == i && include_target;
          if ((in_window || self) && !seen[static_cast<std::size_t>(c)]) {
            seen[static_cast<std::size_t>(c)] = true;
            s.counts(w, c) += 1.0;
          }
        }
      }
    }
  }
  return s;
}

inline double rel_err(double analytic, double numeric) {
  return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), 1e-6});
}

inline Matrix<double> random_matrix(Eigen::Index rows, Eigen::Index cols, double scale, std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, scale);
  Matrix<double> m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = g(rng);
  return m;
}

// Random small negative-sampling instance; returns the largest relative
// error between the step's implied gradient ((before - after) / lr, over all
// entries of W0 and W1) and central differences of the step loss.
inline double step_gradient_error(std::uint64_t seed, CombineMode mode) {
  std::mt19937_64 rng(seed);
  const auto n = static_cast<Eigen::Index>(std::uniform_int_distribution<int>(3, 10)(rng));
  const auto d = static_cast<Eigen::Index>(std::uniform_int_distribution<int>(1, 8)(rng));
  std::uniform_int_distribution<WordId> id(0, static_cast<WordId>(n - 1));
  const WordId target = id(rng);
  std::vector<WordId> context(std::uniform_int_distribution<std::size_t>(1, 4)(rng));
  for (auto& c : context) c = id(rng);
  std::vector<WordId> negatives(std::uniform_int_distribution<std::size_t>(1, 5)(rng));
  for (auto& w : negatives) {
    do w = id(rng);
    while (w == target);
  }
  Matrix<double> w0 = random_matrix(n, d, 0.5, rng), w1 = random_matrix(n, d, 0.5, rng);

  const Sigmoid sigmoid(SigmoidMode::kExact);
  auto loss = [&](const Matrix<double>& a, const Matrix<double>& b) {
    return negative_sampling_loss<double>(context, target, negatives, a, b, mode, sigmoid);
  };

  const double lr = 1e-3;
  Matrix<double> w0_after = w0, w1_after = w1;
  const Vector<double> h = *forward_hidden<double>(context, w0, mode);
  negative_sampling_step<double>(h, target, negatives, context, w0_after, w1_after, lr, mode, sigmoid);
  const Matrix<double> g0 = (w0 - w0_after) / lr, g1 = (w1 - w1_after) / lr;

  const double eps = 1e-5;
  double worst = 0.0;
  auto check = [&](Matrix<double>& m, const Matrix<double>& g, bool first) {
    for (Eigen::Index i = 0; i < m.rows(); ++i)
      for (Eigen::Index j = 0; j < m.cols(); ++j) {
        const double keep = m(i, j);
        m(i, j) = keep + eps;
        const double up = first ? loss(m, w1) : loss(w0, m);
        m(i, j) = keep - eps;
        const double down = first ? loss(m, w1) : loss(w0, m);
        m(i, j) = keep;
        worst = std::max(worst, rel_err(g(i, j), (up - down) / (2 * eps)));
      }
  };
  check(w0, g0, true);
  check(w1, g1, false);
  return worst;
}

// Same comparison for the softmax classifier: 10 samples, bias included.
inline double classifier_gradient_error(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const Eigen::Index n = 10;
  const auto d = static_cast<Eigen::Index>(std::uniform_int_distribution<int>(1, 6)(rng));
  const auto c = static_cast<Eigen::Index>(std::uniform_int_distribution<int>(2, 5)(rng));
  const Matrix<double> x = random_matrix(n, d, 1.0, rng);
  Matrix<double> w = random_matrix(c, d + 1, 0.5, rng);
  std::vector<int> y(static_cast<std::size_t>(n));
  for (auto& v : y) v = std::uniform_int_distribution<int>(0, static_cast<int>(c - 1))(rng);
  const double l2 = 0.05;

  Matrix<double> grad;
  softmax_loss<double>(w, x, y, l2, &grad);
  const double eps = 1e-5;
  double worst = 0.0;
  for (Eigen::Index i = 0; i < w.rows(); ++i)
    for (Eigen::Index j = 0; j < w.cols(); ++j) {
      const double keep = w(i, j);
      w(i, j) = keep + eps;
      const double up = softmax_loss<double>(w, x, y, l2);
      w(i, j) = keep - eps;
      const double down = softmax_loss<double>(w, x, y, l2);
      w(i, j) = keep;
      worst = std::max(worst, rel_err(grad(i, j), (up - down) / (2 * eps)));
    }
  return worst;
}

// Exact analogy fixture: orthonormal role axes r_i plus a shared gender
// offset, e_(i,m) = r_i + g_m. All vectors have norm sqrt(2), so
// unit(b) - unit(a) + unit(c) equals unit(d) exactly for (i,m):(i,f) ::
// (j,m):(j,f), and d is its unique cosine-1 neighbour.
struct AnalogyFixture {
  std::vector<std::string> words;
  Matrix<float> vectors;
  std::vector<std::array<std::string, 4>> questions;
};

inline AnalogyFixture analogy_fixture() {
  const std::vector<std::pair<std::string, std::string>> roles{
      {"king", "queen"}, {"man", "woman"}, {"boy", "girl"}, {"father", "mother"}, {"prince", "princess"}};
  AnalogyFixture f;
  const auto dim = static_cast<Eigen::Index>(roles.size() + 2);
  f.vectors = Matrix<float>::Zero(static_cast<Eigen::Index>(2 * roles.size()), dim);
  for (std::size_t i = 0; i < roles.size(); ++i) {
    const auto m = static_cast<Eigen::Index>(2 * i), w = m + 1;
    f.words.push_back(roles[i].first);
    f.words.push_back(roles[i].second);
    f.vectors(m, static_cast<Eigen::Index>(i)) = 1.0f;
    f.vectors(w, static_cast<Eigen::Index>(i)) = 1.0f;
    f.vectors(m, dim - 2) = 1.0f;
    f.vectors(w, dim - 1) = 1.0f;
  }
  for (std::size_t i = 0; i < roles.size(); ++i) {
    const std::size_t j = (i + 1) % roles.size(), k = (i + 2) % roles.size();
    f.questions.push_back({roles[i].first, roles[i].second, roles[j].first, roles[j].second});
    f.questions.push_back({roles[i].second, roles[i].first, roles[k].second, roles[k].first});
  }
  return f;
}

// Chunk-scoring parity fixtures with the summary lines a reference
// conlleval produces (see tests/oracles/conlleval_fixtures.py).
struct ChunkFixture {
  std::string name;
  std::vector<std::vector<std::string>> gold, predicted;
  std::string summary;
  double precision, recall, f1;
};

inline std::vector<ChunkFixture> chunk_fixtures() {
  return {
      {"identical",
       {{"B-PER", "I-PER", "O", "B-LOC"}, {"O", "B-ORG", "I-ORG"}},
       {{"B-PER", "I-PER", "O", "B-LOC"}, {"O", "B-ORG", "I-ORG"}},
       "processed 7 tokens with 3 phrases; found: 3 phrases; correct: 3.\n"
       "accuracy: 100.00%; precision: 100.00%; recall: 100.00%; FB1: 100.00\n",
       100.0, 100.0, 100.0},
      {"half_right",
       {{"B-PER", "I-PER", "O", "B-LOC", "O"}},
       {{"B-PER", "I-PER", "O", "B-ORG", "O"}},
       "processed 5 tokens with 2 phrases; found: 2 phrases; correct: 1.\n"
       "accuracy:  80.00%; precision:  50.00%; recall:  50.00%; FB1:  50.00\n",
       50.0, 50.0, 50.0},
      {"all_outside",
       {{"I-PER", "O", "I-LOC", "I-LOC"}},
       {{"O", "O", "O", "O"}},
       "processed 4 tokens with 2 phrases; found: 0 phrases; correct: 0.\n"
       "accuracy:  25.00%; precision:   0.00%; recall:   0.00%; FB1:   0.00\n",
       0.0, 0.0, 0.0},
      {"iob1_adjacent",
       {{"I-PER", "I-PER", "B-PER", "O", "I-LOC"}},
       {{"I-PER", "I-PER", "I-PER", "O", "I-LOC"}},
       "processed 5 tokens with 3 phrases; found: 2 phrases; correct: 1.\n"
       "accuracy:  80.00%; precision:  50.00%; recall:  33.33%; FB1:  40.00\n",
       50.0, 100.0 / 3.0, 40.0},
      {"mixed_boundaries",
       {{"I-ORG", "I-ORG", "O", "I-MISC"}, {"I-PER", "I-PER"}, {"O", "I-LOC", "B-LOC", "I-LOC"}},
       {{"I-ORG", "O", "O", "I-MISC"}, {"I-PER", "I-LOC"}, {"O", "I-LOC", "I-LOC", "I-LOC"}},
       "processed 10 tokens with 5 phrases; found: 5 phrases; correct: 1.\n"
       "accuracy:  70.00%; precision:  20.00%; recall:  20.00%; FB1:  20.00\n",
       20.0, 20.0, 20.0},
  };
}

inline std::string first_lines(const std::string& text, std::size_t n) {
  std::size_t pos = 0;
  for (std::size_t i = 0; i < n && pos != std::string::npos; ++i) {
    pos = text.find('\n', pos);
    if (pos != std::string::npos) ++pos;
  }
  return text.substr(0, pos);
}

// Small CoNLL corpus: entity names recur with distinctive context words.
// The test fold holds names never seen in training.
inline std::string toy_conll(bool test_fold, std::uint64_t seed = 7) {
  std::mt19937_64 rng(seed);
  const std::vector<std::string> people = test_fold ? std::vector<std::string>{"Zorba", "Quincy"}
                                                    : std::vector<std::string>{"John", "Maria", "Peter"};
  const std::vector<std::string> places = test_fold ? std::vector<std::string>{"Oslo", "Lima"}
                                                    : std::vector<std::string>{"Paris", "Berlin", "Rome"};
  const std::vector<std::string> filler{"the", "a", "big", "old", "day", "news", "today"};
  auto pick = [&](const std::vector<std::string>& v) {
    return v[std::uniform_int_distribution<std::size_t>(0, v.size() - 1)(rng)];
  };
  std::string out;
  for (int doc = 0; doc < 6; ++doc) {
    out += "-DOCSTART- -X- -X- O\n\n";
    for (int s = 0; s < 5; ++s) {
      const std::string person = pick(people), place = pick(places);
      out += pick(filler) + " DT B-NP O\n";
      out += "mr NNP I-NP O\n";
      out += person + " NNP I-NP I-PER\n";
      out += "said VBD I-VP O\n";
      out += "in IN I-PP O\n";
      out += place + " NNP I-NP I-LOC\n";
      out += pick(filler) + " NN I-NP O\n\n";
    }
  }
  return out;
}

}  // namespace conec::testing
