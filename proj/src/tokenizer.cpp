#include "ndmt/tokenizer.hpp"

#include <unicode/normalizer2.h>
#include <unicode/uchar.h>
#include <unicode/unistr.h>
#include <unicode/uscript.h>
#include <unicode/utf8.h>

#include "ndmt/error.hpp"

namespace ndmt {
namespace {

// Decodes UTF-8 into scalar values; malformed bytes yield U+FFFD.
std::vector<UChar32> decode(std::string_view text) {
  std::vector<UChar32> out;
  out.reserve(text.size());
  const auto* s = reinterpret_cast<const uint8_t*>(text.data());
  const int32_t length = static_cast<int32_t>(text.size());
  int32_t i = 0;
  while (i < length) {
    UChar32 c;
    U8_NEXT(s, i, length, c);
    out.push_back(c < 0 ? 0xFFFD : c);
  }
  return out;
}

void append(std::string& out, UChar32 c) {
  char buf[U8_MAX_LENGTH];
  int32_t n = 0;
  U8_APPEND_UNSAFE(buf, n, c);
  out.append(buf, static_cast<std::size_t>(n));
}

bool is_separator(UChar32 c) {
  return u_isUWhiteSpace(c) || u_charType(c) == U_CONTROL_CHAR;
}

bool is_punct_or_symbol(UChar32 c) {
  switch (u_charType(c)) {
    case U_DASH_PUNCTUATION:
    case U_START_PUNCTUATION:
    case U_END_PUNCTUATION:
    case U_CONNECTOR_PUNCTUATION:
    case U_OTHER_PUNCTUATION:
    case U_INITIAL_PUNCTUATION:
    case U_FINAL_PUNCTUATION:
    case U_MATH_SYMBOL:
    case U_CURRENCY_SYMBOL:
    case U_MODIFIER_SYMBOL:
    case U_OTHER_SYMBOL:
      return true;
    default:
      return false;
  }
}

bool is_cjk_codepoint(UChar32 c) {
  UErrorCode status = U_ZERO_ERROR;
  const UScriptCode script = uscript_getScript(c, &status);
  if (U_FAILURE(status)) return false;
  return script == USCRIPT_HAN || script == USCRIPT_HIRAGANA ||
         script == USCRIPT_KATAKANA;
}

}  // namespace

std::string nfc_normalize(std::string_view text) {
  UErrorCode status = U_ZERO_ERROR;
  const icu::Normalizer2* nfc = icu::Normalizer2::getNFCInstance(status);
  if (U_FAILURE(status)) throw Error("ICU NFC normalizer unavailable");
  const icu::UnicodeString in = icu::UnicodeString::fromUTF8(
      icu::StringPiece(text.data(), static_cast<int32_t>(text.size())));
  const icu::UnicodeString normalized = nfc->normalize(in, status);
  if (U_FAILURE(status)) throw Error("NFC normalization failed");
  std::string out;
  normalized.toUTF8String(out);
  return out;
}

std::string fold_case(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  for (UChar32 c : decode(text)) append(out, u_tolower(c));
  return out;
}

bool is_cjk_language(std::string_view lang) {
  const auto cut = lang.find_first_of("-_");
  const std::string_view primary = lang.substr(0, cut);
  return primary == "zh" || primary == "ja";
}

TokenSequence tokenize_words(std::string_view text, std::string_view lang,
                             bool lowercase) {
  const bool cjk = is_cjk_language(lang);
  TokenSequence seq{{}, Granularity::word};
  std::string current;
  auto flush = [&] {
    if (!current.empty()) seq.tokens.push_back(std::move(current));
    current.clear();
  };
  for (UChar32 c : decode(text)) {
    if (is_separator(c)) {
      flush();
      continue;
    }
    if (lowercase) c = u_tolower(c);
    if (is_punct_or_symbol(c) || (cjk && is_cjk_codepoint(c))) {
      flush();
      std::string single;
      append(single, c);
      seq.tokens.push_back(std::move(single));
      continue;
    }
    append(current, c);
  }
  flush();
  return seq;
}

TokenSequence tokenize_chars(std::string_view text, bool lowercase) {
  TokenSequence seq{{}, Granularity::chars};
  for (UChar32 c : decode(text)) {
    if (is_separator(c)) continue;
    if (lowercase) c = u_tolower(c);
    std::string single;
    append(single, c);
    seq.tokens.push_back(std::move(single));
  }
  return seq;
}

int NGramMultiset::count(std::span<const std::string> gram) const {
  std::string key;
  for (std::size_t i = 0; i < gram.size(); ++i) {
    if (i) key.push_back(kSeparator);
    key += gram[i];
  }
  const auto it = counts_.find(key);
  return it == counts_.end() ? 0 : it->second;
}

int NGramMultiset::count(std::initializer_list<std::string> gram) const {
  return count(std::span<const std::string>(gram.begin(), gram.size()));
}

long NGramMultiset::overlap(const NGramMultiset& other) const {
  const auto& small = counts_.size() <= other.counts_.size() ? counts_ : other.counts_;
  const auto& large = counts_.size() <= other.counts_.size() ? other.counts_ : counts_;
  long matched = 0;
  for (const auto& [key, c] : small) {
    const auto it = large.find(key);
    if (it != large.end()) matched += std::min(c, it->second);
  }
  return matched;
}

void NGramMultiset::add(std::string key, int times) {
  counts_[std::move(key)] += times;
  total_ += times;
}

NGramMultiset ngrams(const TokenSequence& seq, int n) {
  if (n < 1) throw ValidationError("n-gram order must be >= 1, got " + std::to_string(n));
  NGramMultiset out(n);
  const auto& t = seq.tokens;
  const std::size_t order = static_cast<std::size_t>(n);
  if (t.size() < order) return out;
  for (std::size_t i = 0; i + order <= t.size(); ++i) {
    std::string key = t[i];
    for (std::size_t j = 1; j < order; ++j) {
      key.push_back(NGramMultiset::kSeparator);
      key += t[i + j];
    }
    out.add(std::move(key));
  }
  return out;
}

}  // namespace ndmt
