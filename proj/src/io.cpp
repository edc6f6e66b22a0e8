#include "conec/io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <sstream>

namespace conec {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

namespace {

constexpr char kMagic[8] = {'C', 'O', 'N', 'E', 'C', 'K', 'P', 'T'};

class Writer {
 public:
  explicit Writer(std::ostream& out) : out_(out) {}

  template <typename T>
  void put(T value) {
    static_assert(std::is_trivially_copyable_v<T>);
    out_.write(reinterpret_cast<const char*>(&value), sizeof(T));
  }

  void bytes(const void* data, std::size_t n) { out_.write(static_cast<const char*>(data), static_cast<std::streamsize>(n)); }

  void str(const std::string& s) {
    put<std::uint32_t>(static_cast<std::uint32_t>(s.size()));
    bytes(s.data(), s.size());
  }

  template <typename Scalar>
  void matrix(const Matrix<Scalar>& m) {
    put<std::uint64_t>(static_cast<std::uint64_t>(m.rows()));
    put<std::uint64_t>(static_cast<std::uint64_t>(m.cols()));
    bytes(m.data(), static_cast<std::size_t>(m.size()) * sizeof(Scalar));
  }

 private:
  std::ostream& out_;
};

class Reader {
 public:
  explicit Reader(std::istream& in) : in_(in) {
    const auto here = in_.tellg();
    if (here != std::streampos(-1)) {
      in_.seekg(0, std::ios::end);
      const auto end = in_.tellg();
      in_.seekg(here);
      if (end != std::streampos(-1)) remaining_ = static_cast<std::uint64_t>(end - here);
    }
  }

  void bytes(void* data, std::size_t n) {
    reserve(n, 1);
    in_.read(static_cast<char*>(data), static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(in_.gcount()) != n) throw TruncatedFileError("checkpoint ends unexpectedly");
    if (remaining_) *remaining_ -= n;
  }

  template <typename T>
  T get() {
    T value;
    bytes(&value, sizeof(T));
    return value;
  }

  // Fails early when a declared array cannot fit in what is left of the file.
  void reserve(std::uint64_t count, std::uint64_t element_size) {
    if (remaining_ && element_size != 0 && count > *remaining_ / element_size)
      throw TruncatedFileError("checkpoint is shorter than its declared contents");
  }

  std::string str() {
    const auto n = get<std::uint32_t>();
    std::string s(n, '\0');
    bytes(s.data(), n);
    return s;
  }

  template <typename Scalar>
  Matrix<Scalar> matrix() {
    const auto rows = get<std::uint64_t>();
    const auto cols = get<std::uint64_t>();
    if (cols != 0 && rows > std::numeric_limits<std::uint64_t>::max() / cols)
      throw CorruptHeaderError("matrix dimensions overflow");
    reserve(rows * cols, sizeof(Scalar));
    Matrix<Scalar> m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    bytes(m.data(), static_cast<std::size_t>(rows * cols) * sizeof(Scalar));
    return m;
  }

  bool at_end() { return in_.peek() == std::char_traits<char>::eof(); }

 private:
  std::istream& in_;
  std::optional<std::uint64_t> remaining_;
};

void write_store(Writer& w, const ContextCountStore& store) {
  w.put<std::uint8_t>(store.include_target ? 1 : 0);
  w.put<std::uint64_t>(store.window);
  w.put<std::uint64_t>(store.occ.size());
  for (auto m : store.occ) w.put<std::uint64_t>(m);
  ContextCountStore::SparseRows counts = store.counts;
  counts.makeCompressed();
  w.put<std::uint64_t>(static_cast<std::uint64_t>(counts.nonZeros()));
  for (Eigen::Index i = 0; i <= counts.outerSize(); ++i)
    w.put<std::uint64_t>(static_cast<std::uint64_t>(counts.outerIndexPtr()[i]));
  for (Eigen::Index k = 0; k < counts.nonZeros(); ++k)
    w.put<std::uint32_t>(static_cast<std::uint32_t>(counts.innerIndexPtr()[k]));
  w.bytes(counts.valuePtr(), static_cast<std::size_t>(counts.nonZeros()) * sizeof(double));
}

ContextCountStore read_store(Reader& r) {
  ContextCountStore store;
  store.include_target = r.get<std::uint8_t>() != 0;
  store.window = r.get<std::uint64_t>();
  const auto n = r.get<std::uint64_t>();
  r.reserve(n, sizeof(std::uint64_t));
  store.occ.resize(n);
  for (auto& m : store.occ) m = r.get<std::uint64_t>();
  const auto nnz = r.get<std::uint64_t>();
  r.reserve(nnz, sizeof(std::uint32_t) + sizeof(double));

  std::vector<std::uint64_t> row_ptr(n + 1);
  for (auto& p : row_ptr) p = r.get<std::uint64_t>();
  std::vector<std::uint32_t> cols(nnz);
  r.bytes(cols.data(), nnz * sizeof(std::uint32_t));
  std::vector<double> values(nnz);
  r.bytes(values.data(), nnz * sizeof(double));

  if (row_ptr.front() != 0 || row_ptr.back() != nnz) throw CorruptHeaderError("context store row index is inconsistent");
  using Triplet = Eigen::Triplet<double, ContextCountStore::SparseRows::StorageIndex>;
  std::vector<Triplet> triplets;
  triplets.reserve(nnz);
  for (std::uint64_t i = 0; i < n; ++i) {
    if (row_ptr[i] > row_ptr[i + 1]) throw CorruptHeaderError("context store row index is not monotone");
    for (std::uint64_t k = row_ptr[i]; k < row_ptr[i + 1]; ++k) {
      if (cols[k] >= n) throw CorruptHeaderError("context store column out of range");
      triplets.emplace_back(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(cols[k]), values[k]);
    }
  }
  store.counts.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  store.counts.setFromTriplets(triplets.begin(), triplets.end());
  store.counts.makeCompressed();
  return store;
}

}  // namespace

void save_checkpoint(const Checkpoint& ck, std::ostream& out) {
  Writer w(out);
  w.bytes(kMagic, sizeof kMagic);
  w.put<std::uint32_t>(Checkpoint::kVersion);

  w.put<std::uint64_t>(ck.vocab.size());
  w.put<std::uint64_t>(ck.vocab.total_tokens);
  w.put<std::uint64_t>(ck.vocab.min_count);
  for (std::size_t i = 0; i < ck.vocab.size(); ++i) {
    w.str(ck.vocab.words[i]);
    w.put<std::uint64_t>(ck.vocab.counts[i]);
  }

  const auto& c = ck.config;
  w.put<std::uint64_t>(c.dim);
  w.put<std::uint64_t>(c.window);
  w.put<std::uint64_t>(c.negatives);
  w.put<std::uint64_t>(c.epochs);
  w.put<double>(c.lr_start);
  w.put<double>(c.lr_min);
  w.put<std::uint8_t>(static_cast<std::uint8_t>(c.combine));
  w.put<double>(c.subsample);
  w.put<std::uint64_t>(c.seed);
  w.put<std::uint64_t>(c.workers);
  w.put<std::uint8_t>(c.dynamic_window ? 1 : 0);
  w.put<std::uint8_t>(static_cast<std::uint8_t>(c.sigmoid));
  w.put<std::uint64_t>(ck.seed);

  w.matrix(ck.params.w0);
  w.matrix(ck.params.w1);

  w.put<std::uint8_t>(ck.store ? 1 : 0);
  if (ck.store) write_store(w, *ck.store);
  if (!out) throw DataError("failed writing checkpoint");
}

void save_checkpoint(const Checkpoint& checkpoint, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open " + path + " for writing");
  save_checkpoint(checkpoint, out);
  out.close();
  if (!out) throw DataError("failed writing checkpoint " + path);
}

Checkpoint load_checkpoint(std::istream& in) {
  Reader r(in);
  char magic[sizeof kMagic];
  try {
    r.bytes(magic, sizeof magic);
  } catch (const TruncatedFileError&) {
    throw CorruptHeaderError("file too short to be a checkpoint");
  }
  if (std::memcmp(magic, kMagic, sizeof kMagic) != 0) throw CorruptHeaderError("not a checkpoint (bad magic)");
  const auto version = r.get<std::uint32_t>();
  if (version != Checkpoint::kVersion) {
    throw VersionMismatchError("checkpoint version " + std::to_string(version) + ", expected " +
                               std::to_string(Checkpoint::kVersion));
  }

  Checkpoint ck;
  const auto n = r.get<std::uint64_t>();
  r.reserve(n, sizeof(std::uint32_t) + sizeof(std::uint64_t));
  ck.vocab.total_tokens = r.get<std::uint64_t>();
  ck.vocab.min_count = r.get<std::uint64_t>();
  ck.vocab.words.reserve(n);
  ck.vocab.counts.reserve(n);
  for (std::uint64_t i = 0; i < n; ++i) {
    ck.vocab.words.push_back(r.str());
    ck.vocab.counts.push_back(r.get<std::uint64_t>());
  }
  reindex(ck.vocab);
  if (ck.vocab.index.size() != ck.vocab.words.size()) throw CorruptHeaderError("duplicate vocabulary entries");

  auto& c = ck.config;
  c.dim = r.get<std::uint64_t>();
  c.window = r.get<std::uint64_t>();
  c.negatives = r.get<std::uint64_t>();
  c.epochs = r.get<std::uint64_t>();
  c.lr_start = r.get<double>();
  c.lr_min = r.get<double>();
  const auto combine = r.get<std::uint8_t>();
  if (combine > 1) throw CorruptHeaderError("unknown combine mode");
  c.combine = static_cast<CombineMode>(combine);
  c.subsample = r.get<double>();
  c.seed = r.get<std::uint64_t>();
  c.workers = r.get<std::uint64_t>();
  c.dynamic_window = r.get<std::uint8_t>() != 0;
  const auto sigmoid = r.get<std::uint8_t>();
  if (sigmoid > 1) throw CorruptHeaderError("unknown sigmoid mode");
  c.sigmoid = static_cast<SigmoidMode>(sigmoid);
  ck.seed = r.get<std::uint64_t>();

  ck.params.w0 = r.matrix<float>();
  ck.params.w1 = r.matrix<float>();
  if (static_cast<std::uint64_t>(ck.params.w0.rows()) != n || ck.params.w1.rows() != ck.params.w0.rows() ||
      ck.params.w1.cols() != ck.params.w0.cols()) {
    throw CorruptHeaderError("weight matrices do not match the vocabulary");
  }

  if (r.get<std::uint8_t>() != 0) {
    ck.store = read_store(r);
    if (ck.store->vocab_size() != n) throw CorruptHeaderError("context store does not match the vocabulary");
  }
  if (!r.at_end()) throw CorruptHeaderError("trailing bytes after checkpoint");
  return ck;
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint " + path);
  return load_checkpoint(in);
}

EmbeddingMode parse_embedding_mode(const std::string& name) {
  if (name == "word2vec") return EmbeddingMode::kWord2vec;
  if (name == "conec-global" || name == "conec") return EmbeddingMode::kConecGlobal;
  throw UsageError("unknown embedding mode '" + name + "'");
}

Matrix<float> embedding_matrix(const Checkpoint& ck, EmbeddingMode mode, bool include_target) {
  if (mode == EmbeddingMode::kWord2vec) return ck.params.w0;
  if (!ck.store) throw MissingStoreError("checkpoint has no context store; retrain without --no-store");
  if (include_target && !ck.store->include_target) {
    return global_embeddings(ck.store->with_target_included(), ck.params.w0);
  }
  if (!include_target && ck.store->include_target) {
    throw MissingStoreError("context store was accumulated with the target word; cannot remove it");
  }
  return global_embeddings(*ck.store, ck.params.w0);
}

EmbeddingFile read_embeddings(std::istream& in) {
  EmbeddingFile file;
  std::string line;
  if (!std::getline(in, line)) throw DataError("empty embedding file");
  std::istringstream header(line);
  long long n = -1, d = -1;
  if (!(header >> n >> d) || n < 0 || d < 0) throw MalformedLineError("expected 'N d' header", 1);
  file.vectors.resize(n, d);
  file.words.reserve(static_cast<std::size_t>(n));
  for (long long i = 0; i < n; ++i) {
    if (!std::getline(in, line)) throw DataError("embedding file ends after " + std::to_string(i) + " vectors");
    const char* p = line.data();
    const char* end = p + line.size();
    const char* sp = std::find(p, end, ' ');
    file.words.emplace_back(p, sp);
    p = sp;
    for (long long j = 0; j < d; ++j) {
      while (p < end && *p == ' ') ++p;
      float v;
      auto res = std::from_chars(p, end, v);
      if (res.ec != std::errc()) throw MalformedLineError("bad vector component", static_cast<std::size_t>(i + 2));
      file.vectors(i, j) = v;
      p = res.ptr;
    }
    while (p < end && (*p == ' ' || *p == '\r')) ++p;
    if (p != end) throw MalformedLineError("too many vector components", static_cast<std::size_t>(i + 2));
  }
  return file;
}

void export_embeddings(const Checkpoint& ck, EmbeddingMode mode, bool include_target, const std::string& path) {
  const Matrix<float> m = embedding_matrix(ck, mode, include_target);
  std::ofstream out(path);
  if (!out) throw DataError("cannot open " + path + " for writing");
  write_embeddings(out, ck.vocab.words, m);
  if (!out) throw DataError("failed writing " + path);
}

void write_vocab_tsv(std::ostream& out, const Vocabulary& vocab) {
  for (std::size_t i = 0; i < vocab.size(); ++i) out << vocab.words[i] << '\t' << vocab.counts[i] << '\t' << i << '\n';
}

void write_store_tsv(std::ostream& out, const ContextCountStore& store, const Vocabulary& vocab) {
  for (Eigen::Index i = 0; i < store.counts.outerSize(); ++i) {
    for (ContextCountStore::SparseRows::InnerIterator it(store.counts, i); it; ++it) {
      out << vocab.words[static_cast<std::size_t>(i)] << '\t' << vocab.words[static_cast<std::size_t>(it.col())]
          << '\t' << static_cast<std::uint64_t>(it.value()) << '\n';
    }
  }
}

void write_occurrence_tsv(std::ostream& out, const ContextCountStore& store, const Vocabulary& vocab) {
  for (std::size_t i = 0; i < store.occ.size(); ++i) {
    if (store.occ[i] > 0) out << vocab.words[i] << '\t' << store.occ[i] << '\n';
  }
}

}  // namespace conec
