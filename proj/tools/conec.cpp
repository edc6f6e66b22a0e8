// conec: train CBOW word2vec, accumulate context vectors and build
// context-encoder embeddings; analogy and NER evaluation harnesses.

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "conec/analogy.hpp"
#include "conec/context.hpp"
#include "conec/corpus.hpp"
#include "conec/error.hpp"
#include "conec/io.hpp"
#include "conec/ner.hpp"
#include "conec/trainer.hpp"

namespace {

using namespace conec;

struct GlobalOptions {
  std::uint64_t seed = 1;
  std::size_t workers = 1;
  bool quiet = false;
};

void log(const GlobalOptions& g, const std::string& msg) {
  if (!g.quiet) std::cerr << msg << '\n';
}

struct CorpusOptions {
  std::string input;
  std::string format = "text";
  std::uint64_t min_count = 5;
  bool keep_case = false;
  bool keep_punct = false;
  std::size_t max_sentence = 1000;

  ReadOptions read() const {
    ReadOptions r;
    r.tokenize.lowercase = !keep_case;
    r.tokenize.strip_punctuation = !keep_punct;
    r.max_sentence_length = max_sentence;
    return r;
  }
};

void add_corpus_options(CLI::App* cmd, CorpusOptions& c) {
  cmd->add_option("--input", c.input, "Corpus path (UTF-8 text, one sentence per line)")->required();
  cmd->add_option("--format", c.format, "Input format")->check(CLI::IsMember({"text", "conll"}));
  cmd->add_option("--min-count", c.min_count, "Drop words rarer than this")->check(CLI::PositiveNumber);
  cmd->add_flag("--keep-case", c.keep_case, "Do not lowercase tokens");
  cmd->add_flag("--keep-punct", c.keep_punct, "Do not strip leading/trailing punctuation");
  cmd->add_option("--max-sentence", c.max_sentence, "Split longer lines (0: never)");
}

struct LoadedCorpus {
  Vocabulary vocab;
  std::vector<TokenDocument> docs;
};

std::ifstream open_input(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path);
  return in;
}

LoadedCorpus load_corpus(const CorpusOptions& c) {
  LoadedCorpus out;
  if (c.format == "conll") {
    const auto corpus = load_conll(c.input, "train");
    out.vocab = build_vocabulary(lowercase_tokens(corpus), c.min_count);
    out.docs = to_token_documents(corpus, out.vocab);
    return out;
  }
  {
    auto in = open_input(c.input);
    out.vocab = count_vocabulary(in, c.min_count, c.read());
  }
  auto in = open_input(c.input);
  out.docs = read_documents(in, out.vocab, c.read());
  return out;
}

// --- train ---------------------------------------------------------------

struct TrainOptions {
  CorpusOptions corpus;
  TrainConfig config;
  std::string combine = "mean";
  bool static_window = false;
  bool exact_sigmoid = false;
  std::size_t cv_window = 0;
  bool include_target = false;
  bool no_store = false;
  std::string out;
};

void add_train_options(CLI::App* cmd, TrainOptions& t) {
  cmd->add_option("--dim", t.config.dim, "Embedding dimensionality")->check(CLI::PositiveNumber);
  cmd->add_option("--window", t.config.window, "Context window (each side)")->check(CLI::PositiveNumber);
  cmd->add_option("--negatives", t.config.negatives, "Noise words per step")->check(CLI::PositiveNumber);
  cmd->add_option("--epochs", t.config.epochs, "Passes over the corpus");
  cmd->add_option("--lr", t.config.lr_start, "Initial learning rate");
  cmd->add_option("--lr-min", t.config.lr_min, "Final learning rate");
  cmd->add_option("--combine", t.combine, "Hidden layer: mean or sum of context rows")
      ->check(CLI::IsMember({"mean", "sum"}));
  cmd->add_option("--subsample", t.config.subsample, "Subsampling threshold (0: off)");
  cmd->add_flag("--static-window", t.static_window, "Always use the full window");
  cmd->add_flag("--exact-sigmoid", t.exact_sigmoid, "Exact logistic instead of the lookup table");
  cmd->add_option("--cv-window", t.cv_window, "Context-vector window (default: --window)");
  cmd->add_flag("--include-target", t.include_target, "Include the word itself in its context vectors");
  cmd->add_flag("--no-store", t.no_store, "Skip context-vector accumulation");
}

Checkpoint train_checkpoint(TrainOptions t, const LoadedCorpus& corpus, const GlobalOptions& g) {
  t.config.seed = g.seed;
  t.config.workers = g.workers;
  t.config.combine = t.combine == "sum" ? CombineMode::kSum : CombineMode::kMean;
  t.config.dynamic_window = !t.static_window;
  t.config.sigmoid = t.exact_sigmoid ? SigmoidMode::kExact : SigmoidMode::kTable;

  Checkpoint ck;
  ck.vocab = corpus.vocab;
  ck.config = t.config;
  ck.seed = g.seed;
  log(g, "vocabulary: " + std::to_string(ck.vocab.size()) + " words, " + std::to_string(ck.vocab.total_tokens) +
             " tokens");
  ProgressCallback progress;
  if (!g.quiet) {
    progress = [](const TrainProgress& p) {
      std::fprintf(stderr, "\repoch %zu  %5.1f%%  lr %.5f  loss %.4f", p.epoch + 1,
                   p.scheduled ? 100.0 * static_cast<double>(p.processed) / static_cast<double>(p.scheduled) : 100.0,
                   p.lr, p.mean_loss);
    };
  }
  ck.params = train<float>(corpus.docs, ck.vocab, ck.config, progress);
  if (!g.quiet) std::fputc('\n', stderr);
  if (!ck.params.all_finite()) throw NumericError("training produced non-finite weights");
  if (!t.no_store) {
    const std::size_t w = t.cv_window == 0 ? t.config.window : t.cv_window;
    ck.store = accumulate_global(corpus.docs, ck.vocab.size(), w, t.include_target, g.workers);
    log(g, "context store: " + std::to_string(ck.store->counts.nonZeros()) + " entries");
  }
  return ck;
}

// --- helpers -------------------------------------------------------------

std::vector<TokenDocument> read_context_document(const std::string& text, const std::string& path,
                                                 const Vocabulary& vocab) {
  if (!path.empty()) {
    auto in = open_input(path);
    return read_documents(in, vocab);
  }
  std::istringstream in(text);
  return read_documents(in, vocab);
}

void print_vector(const Vector<float>& v) {
  std::string line;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (i) line += ' ';
    append_number(line, v(i));
  }
  std::cout << line << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Context encoders on top of CBOW word2vec"};
  app.option_defaults()->always_capture_default();
  app.require_subcommand(1);
  app.fallthrough();
  GlobalOptions g;
  app.add_option("--seed", g.seed, "Random seed");
  app.add_option("--workers", g.workers, "Worker threads")->check(CLI::PositiveNumber);
  app.add_flag("--quiet", g.quiet, "No progress output");

  // vocab
  CorpusOptions vocab_opts;
  std::string vocab_out;
  auto* vocab_cmd = app.add_subcommand("vocab", "Build a vocabulary and write it as TSV (word, count, id)");
  add_corpus_options(vocab_cmd, vocab_opts);
  vocab_cmd->add_option("--out", vocab_out, "Output TSV")->required();

  // train
  TrainOptions train_opts;
  auto* train_cmd = app.add_subcommand("train", "Train word2vec and accumulate context vectors");
  add_corpus_options(train_cmd, train_opts.corpus);
  add_train_options(train_cmd, train_opts);
  train_cmd->add_option("--out", train_opts.out, "Checkpoint path")->required();

  // export
  std::string model_path, export_out, mode_name = "word2vec", store_prefix;
  bool include_target = false;
  auto* export_cmd = app.add_subcommand("export", "Write embeddings in word2vec text format");
  export_cmd->add_option("--model", model_path)->required();
  export_cmd->add_option("--mode", mode_name)->check(CLI::IsMember({"word2vec", "conec-global"}));
  export_cmd->add_flag("--include-target", include_target);
  export_cmd->add_option("--out", export_out)->required();
  export_cmd->add_option("--store-tsv", store_prefix, "Also write <prefix>.pairs.tsv and <prefix>.occ.tsv");

  // embed
  std::string word, context_text, document_path;
  double mix = 1.0;
  bool normalize = false;
  auto* embed_cmd = app.add_subcommand("embed", "Print the embedding of one word, optionally in context");
  embed_cmd->add_option("--model", model_path)->required();
  embed_cmd->add_option("--word", word)->required();
  embed_cmd->add_option("--context", context_text, "Text of the document the word occurs in");
  embed_cmd->add_option("--document", document_path, "File holding that document");
  embed_cmd->add_option("--a", mix, "Weight of the global context vector")->check(CLI::Range(0.0, 1.0));
  embed_cmd->add_flag("--normalize", normalize, "L2-normalize the context vector first");

  // nn
  std::size_t topn = 10;
  auto* nn_cmd = app.add_subcommand("nn", "Nearest neighbours of a word by cosine similarity");
  nn_cmd->add_option("--model", model_path)->required();
  nn_cmd->add_option("--word", word)->required();
  nn_cmd->add_option("--topn", topn)->check(CLI::PositiveNumber);
  nn_cmd->add_option("--mode", mode_name)->check(CLI::IsMember({"word2vec", "conec-global"}));
  nn_cmd->add_flag("--include-target", include_target);

  // analogy
  std::string questions_path, report_path;
  std::size_t restrict_vocab = 0;
  auto* analogy_cmd = app.add_subcommand("analogy", "3CosAdd word analogy accuracy");
  analogy_cmd->add_option("--model", model_path)->required();
  analogy_cmd->add_option("--questions", questions_path)->required();
  analogy_cmd->add_option("--mode", mode_name)->check(CLI::IsMember({"word2vec", "conec-global"}));
  analogy_cmd->add_flag("--include-target", include_target);
  analogy_cmd->add_option("--restrict", restrict_vocab, "Only the most frequent N words (0: all)");
  analogy_cmd->add_option("--report", report_path, "Per-category TSV report");

  // ner
  std::vector<std::string> ner_models, regimes{"baseline", "global", "oov", "mixed"};
  std::vector<double> a_grid{0.0, 0.2, 0.4, 0.6, 0.8, 1.0};
  std::string train_path, dev_path, test_path, ner_out;
  std::size_t seeds = 3;
  TrainOptions ner_train;
  ner_train.config.epochs = 25;
  ner_train.corpus.min_count = 1;
  NerExperimentConfig ner_cfg;
  auto* ner_cmd = app.add_subcommand("ner", "CoNLL NER with embedding features and logistic regression");
  ner_cmd->add_option("--model", ner_models, "Checkpoint(s); trained on --train when omitted");
  ner_cmd->add_option("--train", train_path)->required();
  ner_cmd->add_option("--dev", dev_path)->required();
  ner_cmd->add_option("--test", test_path)->required();
  ner_cmd->add_option("--regime", regimes)->check(CLI::IsMember({"baseline", "global", "oov", "mixed"}));
  ner_cmd->add_option("--a", a_grid, "Mix weights for the mixed regime")->check(CLI::Range(0.0, 1.0));
  ner_cmd->add_option("--seeds", seeds, "word2vec initializations to train")->check(CLI::PositiveNumber);
  ner_cmd->add_option("--min-count", ner_train.corpus.min_count)->check(CLI::PositiveNumber);
  add_train_options(ner_cmd, ner_train);
  ner_cmd->add_option("--l2", ner_cfg.classifier.l2, "Classifier L2 penalty");
  ner_cmd->add_option("--clf-epochs", ner_cfg.classifier.epochs, "Classifier epochs");
  ner_cmd->add_option("--clf-lr", ner_cfg.classifier.lr, "Classifier learning rate");
  ner_cmd->add_option("--clf-batch", ner_cfg.classifier.batch_size, "Classifier mini-batch (0: full batch)");
  ner_cmd->add_flag("--normalize", ner_cfg.normalize, "L2-normalize context vectors");
  ner_cmd->add_flag("--raw-features", [&](std::int64_t) { ner_cfg.classifier.standardize = false; },
                    "Do not standardize feature columns");
  ner_cmd->add_option("--out", ner_out, "Results TSV (fold, regime, a, seed, precision, recall, f1)")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : static_cast<int>(ExitCode::kUsage);
  }

  try {
    if (*vocab_cmd) {
      Vocabulary vocab;
      if (vocab_opts.format == "conll") {
        vocab = build_vocabulary(lowercase_tokens(load_conll(vocab_opts.input)), vocab_opts.min_count);
      } else {
        auto in = open_input(vocab_opts.input);
        vocab = count_vocabulary(in, vocab_opts.min_count, vocab_opts.read());
      }
      std::ofstream out(vocab_out);
      if (!out) throw DataError("cannot write " + vocab_out);
      write_vocab_tsv(out, vocab);
      log(g, std::to_string(vocab.size()) + " words");
    } else if (*train_cmd) {
      const auto corpus = load_corpus(train_opts.corpus);
      const auto ck = train_checkpoint(train_opts, corpus, g);
      save_checkpoint(ck, train_opts.out);
      log(g, "wrote " + train_opts.out);
    } else if (*export_cmd) {
      const auto ck = load_checkpoint(model_path);
      export_embeddings(ck, parse_embedding_mode(mode_name), include_target, export_out);
      if (!store_prefix.empty()) {
        if (!ck.store) throw MissingStoreError("checkpoint has no context store");
        std::ofstream pairs(store_prefix + ".pairs.tsv"), occ(store_prefix + ".occ.tsv");
        write_store_tsv(pairs, *ck.store, ck.vocab);
        write_occurrence_tsv(occ, *ck.store, ck.vocab);
      }
    } else if (*embed_cmd) {
      const auto ck = load_checkpoint(model_path);
      if (!ck.store) throw MissingStoreError("checkpoint has no context store");
      const std::string key = to_lower(word);
      std::vector<TokenDocument> docs;
      if (!context_text.empty() || !document_path.empty())
        docs = read_context_document(context_text, document_path, ck.vocab);
      TokenDocument merged;
      for (auto& d : docs)
        for (auto& s : d.sentences) {
          std::vector<std::string> words;
          for (WordId id : s) words.emplace_back(d.surface(id, ck.vocab));
          merged.add_sentence(words, ck.vocab);
        }
      const TokenDocument* doc = docs.empty() ? nullptr : &merged;
      print_vector(embed_word(key, *ck.store, ck.params.w0, ck.vocab, doc, EmbedOptions{MixWeight(mix), normalize}));
    } else if (*nn_cmd) {
      const auto ck = load_checkpoint(model_path);
      const EmbeddingTable table(ck.vocab.words, embedding_matrix(ck, parse_embedding_mode(mode_name), include_target));
      const auto id = table.find(to_lower(word));
      if (!id) throw MissingWordError("'" + word + "' is not in the vocabulary");
      const Vector<float> query = table.unit().row(*id).transpose();
      for (const auto& n : nearest_neighbors(table, query, topn, id)) std::cout << n.word << '\t' << n.cosine << '\n';
    } else if (*analogy_cmd) {
      const auto ck = load_checkpoint(model_path);
      const auto questions = load_questions(questions_path);
      const EmbeddingTable table(ck.vocab.words, embedding_matrix(ck, parse_embedding_mode(mode_name), include_target));
      const auto report = evaluate_analogies(table, questions, AnalogyOptions{restrict_vocab});
      write_report_tsv(std::cout, report);
      if (!report_path.empty()) {
        std::ofstream out(report_path);
        if (!out) throw DataError("cannot write " + report_path);
        write_report_tsv(out, report);
      }
    } else if (*ner_cmd) {
      const auto train_fold = load_conll(train_path, "train");
      const auto dev_fold = load_conll(dev_path, "dev");
      const auto test_fold = load_conll(test_path, "test");

      std::vector<Checkpoint> checkpoints;
      for (const auto& p : ner_models) checkpoints.push_back(load_checkpoint(p));
      if (checkpoints.empty()) {
        LoadedCorpus corpus;
        corpus.vocab = build_vocabulary(lowercase_tokens(train_fold), ner_train.corpus.min_count);
        corpus.docs = to_token_documents(train_fold, corpus.vocab);
        for (std::size_t s = 0; s < seeds; ++s) {
          GlobalOptions gs = g;
          gs.seed = g.seed + s;
          log(g, "training word2vec, seed " + std::to_string(gs.seed));
          checkpoints.push_back(train_checkpoint(ner_train, corpus, gs));
        }
      }
      std::vector<NerModel> models;
      for (const auto& ck : checkpoints) {
        if (!ck.store) throw MissingStoreError("NER checkpoints need a context store");
        models.push_back({&ck.vocab, &ck.params.w0, &*ck.store, ck.seed});
      }
      std::vector<Regime> regime_list;
      for (const auto& r : regimes) regime_list.push_back(parse_regime(r));
      const auto settings = expand_settings(regime_list, a_grid);
      ner_cfg.classifier.seed = g.seed;
      const auto results = run_ner_experiment(models, train_fold, dev_fold, test_fold, settings, ner_cfg,
                                              [&](const NerResult& r) {
                                                if (g.quiet) return;
                                                std::fprintf(stderr, "%-5s %-8s a=%.2f seed=%llu F1=%.2f\n",
                                                             r.fold.c_str(), to_string(r.regime).c_str(), r.a,
                                                             static_cast<unsigned long long>(r.seed), r.score.f1);
                                              });
      std::ofstream out(ner_out);
      if (!out) throw DataError("cannot write " + ner_out);
      write_results_tsv(out, results);
      std::ofstream summary(ner_out + ".summary.tsv");
      write_summary_tsv(summary, results);
      write_summary_tsv(std::cout, results);
    }
  } catch (const Error& e) {
    std::cerr << "conec: " << e.what() << '\n';
    return static_cast<int>(e.exit_code());
  } catch (const std::exception& e) {
    std::cerr << "conec: " << e.what() << '\n';
    return static_cast<int>(ExitCode::kData);
  }
  return 0;
}
