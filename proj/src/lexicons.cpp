#include "notai/lexicons.hpp"

#include <algorithm>
#include <fstream>

#include "notai/error.hpp"
#include "notai/hashing.hpp"
#include "notai/textstats.hpp"

namespace notai {

std::vector<std::string> read_lexicon_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open lexicon file " + path.string());
  std::vector<std::string> entries;
  std::string line;
  while (std::getline(in, line)) {
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::string entry = normalize_text(line);
    if (!entry.empty()) entries.push_back(std::move(entry));
  }
  return entries;
}

Lexicons::Lexicons(const std::vector<std::string>& stopwords,
                   const std::vector<std::string>& cliches) {
  for (const auto& w : stopwords) {
    std::string norm = to_lower(normalize_text(w));
    if (!norm.empty()) stopwords_.insert(std::move(norm));
  }
  for (const auto& phrase : cliches) {
    const std::string norm = normalize_text(phrase);
    if (norm.empty()) continue;
    TokenView tv;
    try {
      tv = tokenize(Document{phrase, norm});
    } catch (const Error&) {
      continue;  // punctuation-only entry
    }
    std::string joined;
    for (const auto& word : tv.word_tokens) {
      if (!joined.empty()) joined.push_back(' ');
      joined += word;
    }
    max_cliche_words_ = std::max(max_cliche_words_, tv.word_tokens.size());
    cliches_.insert(std::move(joined));
  }
  if (stopwords_.empty() || cliches_.empty()) {
    throw Error(ErrorCode::InvalidArgument, "stopword and cliche lexicons must be non-empty");
  }

  std::vector<std::string> sorted_stop(stopwords_.begin(), stopwords_.end());
  std::vector<std::string> sorted_cliche(cliches_.begin(), cliches_.end());
  std::sort(sorted_stop.begin(), sorted_stop.end());
  std::sort(sorted_cliche.begin(), sorted_cliche.end());
  Sha256 h;
  h.update("stopwords\n");
  for (const auto& s : sorted_stop) { h.update(s); h.update("\n"); }
  h.update("cliches\n");
  for (const auto& s : sorted_cliche) { h.update(s); h.update("\n"); }
  hash_ = h.hex_digest();
}

Lexicons Lexicons::load(const std::filesystem::path& stopwords_file,
                        const std::filesystem::path& cliches_file) {
  return Lexicons(read_lexicon_file(stopwords_file), read_lexicon_file(cliches_file));
}

Lexicons Lexicons::load_dir(const std::filesystem::path& dir) {
  return load(dir / "stopwords.txt", dir / "cliches.txt");
}

Lexicons Lexicons::load_default() { return load_dir(NOTAI_DEFAULT_DATA_DIR); }

}  // namespace notai
