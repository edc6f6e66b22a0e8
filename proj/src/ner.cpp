#include "conec/ner.hpp"

#include <cstdio>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <unordered_map>

namespace conec {

std::size_t ConllDocument::token_count() const {
  std::size_t n = 0;
  for (const auto& s : surfaces) n += s.size();
  return n;
}

std::size_t LabeledCorpus::token_count() const {
  std::size_t n = 0;
  for (const auto& d : documents) n += d.token_count();
  return n;
}

std::vector<std::string> LabeledCorpus::flat_tags() const {
  std::vector<std::string> tags;
  tags.reserve(token_count());
  for (const auto& d : documents)
    for (const auto& s : d.tags) tags.insert(tags.end(), s.begin(), s.end());
  return tags;
}

LabeledCorpus load_conll(std::istream& in, std::string fold) {
  LabeledCorpus corpus;
  corpus.fold = std::move(fold);
  std::vector<std::string> surfaces, tags;
  bool open_document = false;

  auto end_sentence = [&] {
    if (surfaces.empty()) return;
    if (!open_document) {
      corpus.documents.emplace_back();
      open_document = true;
    }
    corpus.documents.back().surfaces.push_back(std::move(surfaces));
    corpus.documents.back().tags.push_back(std::move(tags));
    surfaces.clear();
    tags.clear();
  };

  std::string line;
  std::size_t line_no = 0;
  const TokenizeOptions verbatim{.lowercase = false, .strip_punctuation = false};
  while (std::getline(in, line)) {
    ++line_no;
    const auto cols = tokenize(line, verbatim);
    if (cols.empty()) {
      end_sentence();
      continue;
    }
    if (cols[0] == "-DOCSTART-") {
      end_sentence();
      corpus.documents.emplace_back();
      open_document = true;
      continue;
    }
    if (cols.size() != 4) {
      throw MalformedLineError("expected 4 columns, found " + std::to_string(cols.size()), line_no);
    }
    surfaces.push_back(cols[0]);
    tags.push_back(cols[3]);
  }
  end_sentence();
  std::erase_if(corpus.documents, [](const ConllDocument& d) { return d.surfaces.empty(); });
  return corpus;
}

LabeledCorpus load_conll(const std::string& path, std::string fold) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open CoNLL file " + path);
  return load_conll(in, std::move(fold));
}

std::vector<TokenDocument> to_token_documents(const LabeledCorpus& corpus, const Vocabulary& vocab) {
  std::vector<TokenDocument> docs;
  docs.reserve(corpus.documents.size());
  for (const auto& src : corpus.documents) {
    TokenDocument doc;
    doc.doc_id = docs.size();
    for (std::size_t s = 0; s < src.surfaces.size(); ++s) {
      std::vector<std::string> lowered;
      lowered.reserve(src.surfaces[s].size());
      for (const auto& w : src.surfaces[s]) lowered.push_back(to_lower(w));
      doc.add_sentence(lowered, vocab);
      doc.labels.push_back(src.tags[s]);
    }
    docs.push_back(std::move(doc));
  }
  return docs;
}

std::vector<std::string> lowercase_tokens(const LabeledCorpus& corpus) {
  std::vector<std::string> out;
  out.reserve(corpus.token_count());
  for (const auto& d : corpus.documents)
    for (const auto& s : d.surfaces)
      for (const auto& w : s) out.push_back(to_lower(w));
  return out;
}

std::string to_string(Regime regime) {
  switch (regime) {
    case Regime::kBaseline: return "baseline";
    case Regime::kGlobal: return "global";
    case Regime::kOov: return "oov";
    case Regime::kMixed: return "mixed";
  }
  return "unknown";
}

Regime parse_regime(const std::string& name) {
  if (name == "baseline" || name == "word2vec") return Regime::kBaseline;
  if (name == "global") return Regime::kGlobal;
  if (name == "oov") return Regime::kOov;
  if (name == "mixed") return Regime::kMixed;
  throw UsageError("unknown regime '" + name + "'");
}

Matrix<double> featurize(std::span<const TokenDocument> docs, const Vocabulary& vocab, const Matrix<float>& w0,
                         const ContextCountStore* store, const FeatureOptions& options) {
  const Regime regime = options.regime;
  if (regime != Regime::kBaseline && store == nullptr) throw MissingStoreError("regime needs a context store");
  std::size_t rows = 0;
  for (const auto& doc : docs) rows += doc.token_count();
  Matrix<double> out = Matrix<double>::Zero(static_cast<Eigen::Index>(rows), w0.cols());

  const bool needs_local = regime == Regime::kOov || regime == Regime::kMixed;
  auto finish = [&](ContextVector cv) -> Vector<double> {
    if (options.normalize) cv = l2_normalized(std::move(cv));
    return synthesize_embedding(cv, w0).cast<double>();
  };

  Eigen::Index row = 0;
  for (const auto& doc : docs) {
    std::unordered_map<WordId, ContextVector> locals;
    if (needs_local) locals = local_cvs(doc, vocab.size(), store->window, store->include_target);
    std::unordered_map<WordId, Vector<double>> cache;

    for (const auto& sentence : doc.sentences) {
      for (WordId id : sentence) {
        auto it = cache.find(id);
        if (it == cache.end()) {
          Vector<double> y = Vector<double>::Zero(w0.cols());
          const bool known = id >= 0;
          const bool has_global = known && store != nullptr && store->has_word(id);
          switch (regime) {
            case Regime::kBaseline:
              if (known) y = w0.row(id).transpose().cast<double>();
              break;
            case Regime::kGlobal:
              if (has_global) y = finish(global_cv(*store, id));
              break;
            case Regime::kOov:
              if (has_global) {
                y = finish(global_cv(*store, id));
              } else if (!known) {
                y = finish(locals.at(id));
              }
              break;
            case Regime::kMixed:
              if (has_global) {
                y = finish(mix_cv(global_cv(*store, id), locals.at(id), options.a));
              } else {
                y = finish(locals.at(id));
              }
              break;
          }
          it = cache.emplace(id, std::move(y)).first;
        }
        out.row(row++) = it->second.transpose();
      }
    }
  }
  return out;
}

// --- conlleval -------------------------------------------------------------

namespace {

std::pair<std::string, std::string> split_tag(const std::string& tag) {
  const auto dash = tag.find('-');
  if (dash == std::string::npos) return {tag, ""};
  return {tag.substr(0, dash), tag.substr(dash + 1)};
}

bool end_of_chunk(const std::string& prev, const std::string& tag, const std::string& prev_type,
                  const std::string& type) {
  if (prev == "B" && (tag == "B" || tag == "O")) return true;
  if (prev == "I" && (tag == "B" || tag == "O")) return true;
  if (prev == "E" && (tag == "E" || tag == "I" || tag == "O")) return true;
  if (prev != "O" && prev != "." && prev_type != type) return true;
  return prev == "]" || prev == "[";
}

bool start_of_chunk(const std::string& prev, const std::string& tag, const std::string& prev_type,
                    const std::string& type) {
  if (tag == "B" && (prev == "B" || prev == "I" || prev == "O")) return true;
  if (prev == "O" && (tag == "I" || tag == "E")) return true;
  if (prev == "E" && (tag == "E" || tag == "I")) return true;
  if (tag != "O" && tag != "." && prev_type != type) return true;
  return tag == "[" || tag == "]";
}

}  // namespace

double ChunkF1::precision_of(const PhraseCounts& c) {
  return c.found == 0 ? 0.0 : 100.0 * static_cast<double>(c.correct) / static_cast<double>(c.found);
}

double ChunkF1::recall_of(const PhraseCounts& c) {
  return c.gold == 0 ? 0.0 : 100.0 * static_cast<double>(c.correct) / static_cast<double>(c.gold);
}

double ChunkF1::f1_of(const PhraseCounts& c) {
  const double p = precision_of(c), r = recall_of(c);
  return p + r > 0.0 ? 2.0 * p * r / (p + r) : 0.0;
}

void ChunkScorer::step(const std::string& gold_tag, const std::string& pred_tag, bool counted) {
  const auto [gold, gold_type] = split_tag(gold_tag);
  const auto [pred, pred_type] = split_tag(pred_tag);

  const bool gold_end = end_of_chunk(last_gold_, gold, last_gold_type_, gold_type);
  const bool pred_end = end_of_chunk(last_pred_, pred, last_pred_type_, pred_type);
  if (in_correct_) {
    if (gold_end && pred_end && last_pred_type_ == last_gold_type_) {
      in_correct_ = false;
      ++counts_.correct;
      ++by_type_[last_gold_type_].correct;
    } else if (gold_end != pred_end || pred_type != gold_type) {
      in_correct_ = false;
    }
  }

  const bool gold_start = start_of_chunk(last_gold_, gold, last_gold_type_, gold_type);
  const bool pred_start = start_of_chunk(last_pred_, pred, last_pred_type_, pred_type);
  if (gold_start && pred_start && pred_type == gold_type) in_correct_ = true;
  if (gold_start) {
    ++counts_.gold;
    ++by_type_[gold_type].gold;
  }
  if (pred_start) {
    ++counts_.found;
    ++by_type_[pred_type].found;
  }
  if (counted) {
    if (gold == pred && gold_type == pred_type) ++correct_tags_;
    ++tokens_;
  }
  last_gold_ = gold;
  last_gold_type_ = gold_type;
  last_pred_ = pred;
  last_pred_type_ = pred_type;
}

void ChunkScorer::add(const std::string& gold, const std::string& predicted) { step(gold, predicted, true); }

void ChunkScorer::boundary() { step("O", "O", false); }

ChunkF1 ChunkScorer::result() const {
  ChunkF1 out;
  out.counts = counts_;
  if (in_correct_) {
    ++out.counts.correct;
  }
  out.by_type = by_type_;
  if (in_correct_) ++out.by_type[last_gold_type_].correct;
  out.tokens = tokens_;
  out.precision = ChunkF1::precision_of(out.counts);
  out.recall = ChunkF1::recall_of(out.counts);
  out.f1 = ChunkF1::f1_of(out.counts);
  out.accuracy = tokens_ == 0 ? 0.0 : 100.0 * static_cast<double>(correct_tags_) / static_cast<double>(tokens_);
  return out;
}

ChunkF1 chunk_f1(std::span<const std::string> gold, std::span<const std::string> predicted) {
  if (gold.size() != predicted.size()) throw LengthMismatchError("gold and predicted tag sequences differ in length");
  ChunkScorer scorer;
  for (std::size_t i = 0; i < gold.size(); ++i) scorer.add(gold[i], predicted[i]);
  return scorer.result();
}

ChunkF1 chunk_f1(const std::vector<std::vector<std::string>>& gold,
                 const std::vector<std::vector<std::string>>& predicted) {
  if (gold.size() != predicted.size()) throw LengthMismatchError("gold and predicted sentence counts differ");
  ChunkScorer scorer;
  for (std::size_t s = 0; s < gold.size(); ++s) {
    if (gold[s].size() != predicted[s].size()) throw LengthMismatchError("sentence lengths differ");
    for (std::size_t i = 0; i < gold[s].size(); ++i) scorer.add(gold[s][i], predicted[s][i]);
    scorer.boundary();
  }
  return scorer.result();
}

std::string conlleval_report(const ChunkF1& score) {
  std::string out;
  char buf[256];
  std::snprintf(buf, sizeof buf, "processed %zu tokens with %zu phrases; found: %zu phrases; correct: %zu.\n",
                score.tokens, score.counts.gold, score.counts.found, score.counts.correct);
  out += buf;
  if (score.tokens > 0) {
    std::snprintf(buf, sizeof buf, "accuracy: %6.2f%%; precision: %6.2f%%; recall: %6.2f%%; FB1: %6.2f\n",
                  score.accuracy, score.precision, score.recall, score.f1);
    out += buf;
  }
  for (const auto& [type, c] : score.by_type) {
    if (type.empty()) continue;
    std::snprintf(buf, sizeof buf, "%17s: precision: %6.2f%%; recall: %6.2f%%; FB1: %6.2f  %zu\n", type.c_str(),
                  ChunkF1::precision_of(c), ChunkF1::recall_of(c), ChunkF1::f1_of(c), c.found);
    out += buf;
  }
  return out;
}

std::vector<std::vector<std::string>> split_like(const LabeledCorpus& corpus, std::span<const std::string> flat) {
  if (flat.size() != corpus.token_count()) throw LengthMismatchError("tag count does not match corpus");
  std::vector<std::vector<std::string>> out;
  std::size_t pos = 0;
  for (const auto& d : corpus.documents) {
    for (const auto& s : d.tags) {
      out.emplace_back(flat.begin() + static_cast<std::ptrdiff_t>(pos),
                       flat.begin() + static_cast<std::ptrdiff_t>(pos + s.size()));
      pos += s.size();
    }
  }
  return out;
}

namespace {

std::vector<std::vector<std::string>> sentence_tags(const LabeledCorpus& corpus) {
  std::vector<std::vector<std::string>> out;
  for (const auto& d : corpus.documents) out.insert(out.end(), d.tags.begin(), d.tags.end());
  return out;
}

}  // namespace

std::vector<NerResult> run_ner_experiment(std::span<const NerModel> models, const LabeledCorpus& train,
                                          const LabeledCorpus& dev, const LabeledCorpus& test,
                                          std::span<const NerSetting> settings, const NerExperimentConfig& config,
                                          const std::function<void(const NerResult&)>& on_result) {
  std::vector<NerResult> results;
  const std::array<const LabeledCorpus*, 3> folds{&train, &dev, &test};
  const auto train_tags = train.flat_tags();
  const auto dev_gold = sentence_tags(dev);

  for (const auto& model : models) {
    if (model.vocab == nullptr || model.w0 == nullptr) throw DataError("NER model is missing weights");
    std::array<std::vector<TokenDocument>, 3> docs;
    for (std::size_t f = 0; f < folds.size(); ++f) docs[f] = to_token_documents(*folds[f], *model.vocab);

    for (const auto& setting : settings) {
      FeatureOptions options{setting.regime, MixWeight(setting.a), config.normalize};
      std::array<Matrix<double>, 3> features;
      for (std::size_t f = 0; f < folds.size(); ++f)
        features[f] = featurize(docs[f], *model.vocab, *model.w0, model.store, options);

      ClassifierConfig cc = config.classifier;
      cc.seed += model.seed;
      ValidationFn<double> validate;
      if (dev.token_count() > 0) {
        validate = [&](const LinearClassifier<double>& clf) {
          return chunk_f1(dev_gold, split_like(dev, predict_tags(clf, features[1]))).f1;
        };
      }
      const auto clf = train_classifier<double>(features[0], train_tags, cc, validate);

      for (std::size_t f = 0; f < folds.size(); ++f) {
        if (folds[f]->token_count() == 0) continue;
        NerResult r;
        r.fold = folds[f]->fold;
        r.regime = setting.regime;
        r.a = setting.a;
        r.seed = model.seed;
        r.score = chunk_f1(sentence_tags(*folds[f]), split_like(*folds[f], predict_tags(clf, features[f])));
        if (on_result) on_result(r);
        results.push_back(std::move(r));
      }
    }
  }
  return results;
}

void write_results_tsv(std::ostream& out, std::span<const NerResult> results) {
  out << "fold\tregime\ta\tseed\tprecision\trecall\tf1\n";
  for (const auto& r : results) {
    out << r.fold << '\t' << to_string(r.regime) << '\t' << std::setprecision(3) << r.a << '\t' << r.seed << '\t'
        << std::fixed << std::setprecision(2) << r.score.precision << '\t' << r.score.recall << '\t' << r.score.f1
        << '\n'
        << std::defaultfloat;
  }
}

void write_summary_tsv(std::ostream& out, std::span<const NerResult> results) {
  struct Acc {
    std::vector<double> f1;
  };
  std::vector<std::tuple<std::string, Regime, double>> order;
  std::map<std::tuple<std::string, int, double>, Acc> groups;
  for (const auto& r : results) {
    auto key = std::make_tuple(r.fold, static_cast<int>(r.regime), r.a);
    if (!groups.count(key)) order.emplace_back(r.fold, r.regime, r.a);
    groups[key].f1.push_back(r.score.f1);
  }
  out << "fold\tregime\ta\truns\tmean_f1\tstd_f1\n";
  for (const auto& [fold, regime, a] : order) {
    const auto& f1 = groups[std::make_tuple(fold, static_cast<int>(regime), a)].f1;
    const double mean = std::accumulate(f1.begin(), f1.end(), 0.0) / static_cast<double>(f1.size());
    double var = 0.0;
    for (double v : f1) var += (v - mean) * (v - mean);
    const double sd = f1.size() > 1 ? std::sqrt(var / static_cast<double>(f1.size() - 1)) : 0.0;
    out << fold << '\t' << to_string(regime) << '\t' << std::setprecision(3) << a << '\t' << f1.size() << '\t'
        << std::fixed << std::setprecision(2) << mean << '\t' << sd << '\n'
        << std::defaultfloat;
  }
}

std::vector<NerSetting> expand_settings(std::span<const Regime> regimes, std::span<const double> a_grid) {
  std::vector<NerSetting> out;
  for (Regime r : regimes) {
    if (r == Regime::kMixed) {
      for (double a : a_grid) out.push_back({r, a});
    } else {
      out.push_back({r, 1.0});
    }
  }
  return out;
}

}  // namespace conec
