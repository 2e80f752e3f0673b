#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace ndmt {

enum class Granularity { word, chars };

struct TokenSequence {
  std::vector<std::string> tokens;
  Granularity granularity = Granularity::word;

  std::size_t size() const { return tokens.size(); }
  bool empty() const { return tokens.empty(); }
  bool operator==(const TokenSequence&) const = default;
};

// Canonical composition (NFC). Invalid UTF-8 sequences become U+FFFD.
std::string nfc_normalize(std::string_view text);

// Simple per-codepoint lowercase mapping.
std::string fold_case(std::string_view text);

// Languages whose words are not space-delimited: zh, ja (and ko hanja).
bool is_cjk_language(std::string_view lang);

// Word tokens. Unicode whitespace and control characters separate tokens,
// punctuation characters are split off as single-codepoint tokens. For CJK
// languages every Han/Kana codepoint is its own token while latin and digit
// runs stay whole ("GPT4模型" -> GPT4 模 型).
TokenSequence tokenize_words(std::string_view text, std::string_view lang,
                             bool lowercase = true);

// One token per Unicode scalar value, whitespace dropped.
TokenSequence tokenize_chars(std::string_view text, bool lowercase = false);

// Multiset of n-grams over a token sequence. Keys are the n tokens joined by
// U+001F, which the tokenizers never emit inside a token.
class NGramMultiset {
 public:
  static constexpr char kSeparator = '\x1f';

  NGramMultiset() = default;
  explicit NGramMultiset(int n) : n_(n) {}

  int order() const { return n_; }
  const std::unordered_map<std::string, int>& counts() const { return counts_; }
  int count(std::span<const std::string> gram) const;
  int count(std::initializer_list<std::string> gram) const;
  std::size_t distinct() const { return counts_.size(); }
  long total() const { return total_; }
  bool empty() const { return total_ == 0; }

  // Sum over shared n-grams of min(count here, count in other).
  long overlap(const NGramMultiset& other) const;

  void add(std::string key, int times = 1);

 private:
  int n_ = 1;
  long total_ = 0;
  std::unordered_map<std::string, int> counts_;
};

// Sliding-window n-grams. Throws ValidationError for n < 1.
NGramMultiset ngrams(const TokenSequence& seq, int n);

}  // namespace ndmt
