#include "conec/analogy.hpp"

#include <fstream>
#include <iomanip>
#include <ostream>

namespace conec {

std::vector<AnalogyQuestion> load_questions(std::istream& in) {
  std::vector<AnalogyQuestion> questions;
  std::string line, category;
  std::size_t line_no = 0;
  const TokenizeOptions raw{.lowercase = true, .strip_punctuation = false};
  while (std::getline(in, line)) {
    ++line_no;
    auto tokens = tokenize(line, raw);
    if (tokens.empty()) continue;
    if (tokens[0] == ":") {
      if (tokens.size() != 2) throw MalformedLineError("category line needs exactly one name", line_no);
      category = tokens[1];
      continue;
    }
    if (tokens.size() != 4) {
      throw MalformedLineError("expected 4 words, found " + std::to_string(tokens.size()), line_no);
    }
    questions.push_back({tokens[0], tokens[1], tokens[2], tokens[3], category});
  }
  return questions;
}

std::vector<AnalogyQuestion> load_questions(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open questions file " + path);
  return load_questions(in);
}

void write_report_tsv(std::ostream& out, const AnalogyReport& report) {
  out << "category\tattempted\tskipped\tcorrect\taccuracy\n";
  auto row = [&](const CategoryScore& c) {
    out << c.category << '\t' << c.attempted << '\t' << c.skipped << '\t' << c.correct << '\t' << std::fixed
        << std::setprecision(2) << 100.0 * c.accuracy() << '\n';
  };
  for (const auto& c : report.categories) row(c);
  row(report.total);
}

}  // namespace conec
