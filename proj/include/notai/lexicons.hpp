#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

namespace notai {

// Stopword and cliche lists. Read-only after construction; the content hash
// is recorded in model files so a model is always scored with the lexicons
// it was trained with.
class Lexicons {
 public:
  // Entries are normalized, lowercased and (for cliches) re-tokenized into
  // space-joined word sequences. Throws Error{InvalidArgument} if either list
  // is empty.
  Lexicons(const std::vector<std::string>& stopwords, const std::vector<std::string>& cliches);

  // Files with one entry per line; `#` starts a comment.
  static Lexicons load(const std::filesystem::path& stopwords_file,
                       const std::filesystem::path& cliches_file);
  static Lexicons load_dir(const std::filesystem::path& dir);
  static Lexicons load_default();

  bool is_stopword(std::string_view word) const {
    return stopwords_.contains(std::string(word));
  }
  bool is_cliche(std::string_view joined_words) const {
    return cliches_.contains(std::string(joined_words));
  }
  std::size_t max_cliche_words() const noexcept { return max_cliche_words_; }
  std::size_t stopword_count() const noexcept { return stopwords_.size(); }
  std::size_t cliche_count() const noexcept { return cliches_.size(); }
  const std::string& hash() const noexcept { return hash_; }

 private:
  std::unordered_set<std::string> stopwords_;
  std::unordered_set<std::string> cliches_;
  std::size_t max_cliche_words_ = 0;
  std::string hash_;
};

std::vector<std::string> read_lexicon_file(const std::filesystem::path& path);

}  // namespace notai
