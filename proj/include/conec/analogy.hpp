#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "conec/corpus.hpp"
#include "conec/trainer.hpp"

namespace conec {

// "a is to b as c is to d".
struct AnalogyQuestion {
  std::string a, b, c, d;
  std::string category;
};

// Lines ": name" open a category; other non-blank lines hold four words.
std::vector<AnalogyQuestion> load_questions(std::istream& in);
std::vector<AnalogyQuestion> load_questions(const std::string& path);

// Word vectors with unit-normalized rows; zero rows are never candidates.
template <typename Scalar>
class BasicEmbeddingTable {
 public:
  BasicEmbeddingTable() = default;

  BasicEmbeddingTable(std::vector<std::string> words, const Matrix<Scalar>& vectors)
      : words_(std::move(words)), unit_(vectors), usable_(static_cast<std::size_t>(vectors.rows()), false) {
    if (static_cast<Eigen::Index>(words_.size()) != vectors.rows())
      throw DataError("embedding table: word count does not match matrix rows");
    for (std::size_t i = 0; i < words_.size(); ++i) {
      index_.emplace(words_[i], static_cast<WordId>(i));
      const auto row = static_cast<Eigen::Index>(i);
      const Scalar norm = unit_.row(row).norm();
      if (norm > Scalar(0)) {
        unit_.row(row) /= norm;
        usable_[i] = true;
      }
    }
  }

  std::size_t size() const noexcept { return words_.size(); }
  Eigen::Index dim() const noexcept { return unit_.cols(); }
  const std::vector<std::string>& words() const noexcept { return words_; }
  const Matrix<Scalar>& unit() const noexcept { return unit_; }
  bool usable(WordId id) const { return usable_.at(static_cast<std::size_t>(id)); }

  std::optional<WordId> find(const std::string& word) const {
    auto it = index_.find(word);
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

 private:
  std::vector<std::string> words_;
  std::unordered_map<std::string, WordId> index_;
  Matrix<Scalar> unit_;
  std::vector<bool> usable_;
};

using EmbeddingTable = BasicEmbeddingTable<float>;

namespace detail {

// Highest-scoring usable id below `limit`, skipping `excluded`; ties go to
// the lowest id. Returns -1 if nothing qualifies.
template <typename Scalar, typename Scores>
WordId best_candidate(const BasicEmbeddingTable<Scalar>& table, const Scores& scores,
                      std::span<const WordId> excluded, std::size_t limit) {
  WordId best = -1;
  Scalar best_score = 0;
  const std::size_t n = limit == 0 ? table.size() : std::min(limit, table.size());
  for (std::size_t i = 0; i < n; ++i) {
    const auto id = static_cast<WordId>(i);
    if (!table.usable(id)) continue;
    if (std::find(excluded.begin(), excluded.end(), id) != excluded.end()) continue;
    const Scalar s = scores(static_cast<Eigen::Index>(i));
    if (best < 0 || s > best_score) {
      best = id;
      best_score = s;
    }
  }
  return best;
}

}  // namespace detail

// 3CosAdd: argmax over cos(v, e_b - e_a + e_c), excluding a, b and c.
// candidate_limit > 0 restricts candidates to the first ids (the most
// frequent words when ids follow frequency).
template <typename Scalar>
WordId answer_3cosadd(const BasicEmbeddingTable<Scalar>& table, WordId a, WordId b, WordId c,
                      std::size_t candidate_limit = 0) {
  const auto& e = table.unit();
  const Vector<Scalar> query = (e.row(b) - e.row(a) + e.row(c)).transpose();
  const Vector<Scalar> scores = e * query;
  const std::array<WordId, 3> excluded{a, b, c};
  return detail::best_candidate(table, scores, excluded, candidate_limit);
}

struct CategoryScore {
  std::string category;
  std::size_t attempted = 0;
  std::size_t skipped = 0;
  std::size_t correct = 0;

  double accuracy() const { return attempted == 0 ? 0.0 : static_cast<double>(correct) / static_cast<double>(attempted); }
};

struct AnalogyReport {
  std::vector<CategoryScore> categories;
  CategoryScore total{"total"};
};

struct AnalogyOptions {
  std::size_t candidate_limit = 0;
  std::size_t batch = 256;
};

// Questions with any word missing from the table (or beyond the candidate
// limit) are skipped; accuracy is over attempted questions only.
template <typename Scalar>
AnalogyReport evaluate_analogies(const BasicEmbeddingTable<Scalar>& table, std::span<const AnalogyQuestion> questions,
                                 const AnalogyOptions& options = {}) {
  AnalogyReport report;
  std::unordered_map<std::string, std::size_t> slot;
  auto category = [&](const std::string& name) -> CategoryScore& {
    auto [it, inserted] = slot.try_emplace(name, report.categories.size());
    if (inserted) report.categories.push_back(CategoryScore{name});
    return report.categories[it->second];
  };
  auto lookup = [&](const std::string& w) -> std::optional<WordId> {
    auto id = table.find(w);
    if (id && options.candidate_limit > 0 && static_cast<std::size_t>(*id) >= options.candidate_limit)
      return std::nullopt;
    return id;
  };

  struct Pending {
    std::array<WordId, 4> ids;
    std::size_t cat;
  };
  std::vector<Pending> batch;
  const auto& e = table.unit();
  auto run_batch = [&] {
    if (batch.empty()) return;
    Matrix<Scalar> queries(static_cast<Eigen::Index>(batch.size()), e.cols());
    for (std::size_t q = 0; q < batch.size(); ++q) {
      const auto& ids = batch[q].ids;
      queries.row(static_cast<Eigen::Index>(q)) = e.row(ids[1]) - e.row(ids[0]) + e.row(ids[2]);
    }
    const Matrix<Scalar> scores = queries * e.transpose();
    for (std::size_t q = 0; q < batch.size(); ++q) {
      const auto& ids = batch[q].ids;
      const std::array<WordId, 3> excluded{ids[0], ids[1], ids[2]};
      const WordId predicted =
          detail::best_candidate(table, scores.row(static_cast<Eigen::Index>(q)), excluded, options.candidate_limit);
      if (predicted == ids[3]) ++report.categories[batch[q].cat].correct;
    }
    batch.clear();
  };

  for (const auto& q : questions) {
    CategoryScore& cat = category(q.category);
    const std::size_t cat_slot = slot.at(q.category);
    auto a = lookup(q.a), b = lookup(q.b), c = lookup(q.c), d = lookup(q.d);
    if (!a || !b || !c || !d) {
      ++cat.skipped;
      continue;
    }
    ++cat.attempted;
    batch.push_back({{*a, *b, *c, *d}, cat_slot});
    if (batch.size() >= std::max<std::size_t>(1, options.batch)) run_batch();
  }
  run_batch();

  for (const auto& cat : report.categories) {
    report.total.attempted += cat.attempted;
    report.total.skipped += cat.skipped;
    report.total.correct += cat.correct;
  }
  return report;
}

// category, attempted, skipped, correct, accuracy (percent); last row "total".
void write_report_tsv(std::ostream& out, const AnalogyReport& report);

}  // namespace conec
