#include "ndmt/error.hpp"
#include "ndmt/metrics.hpp"

namespace ndmt {
namespace {

constexpr int kCharOrder = 6;
constexpr int kWordOrder = 2;
constexpr double kBetaSquared = 4.0;

struct Prepared {
  TokenSequence chars;
  TokenSequence words;
};

Prepared prepare(std::string_view text, std::string_view lang, bool lowercase) {
  return {tokenize_chars(text, lowercase), tokenize_words(text, lang, lowercase)};
}

// Adds one order's F-score to (sum, orders) unless the reference has no
// n-grams at that order.
void accumulate(const TokenSequence& hyp, const TokenSequence& ref, int n, double& sum, int& orders) {
  const NGramMultiset r = ngrams(ref, n);
  if (r.empty()) return;
  ++orders;
  const NGramMultiset h = ngrams(hyp, n);
  if (h.empty()) return;
  const double matched = static_cast<double>(h.overlap(r));
  if (matched == 0.0) return;
  const double precision = matched / static_cast<double>(h.total());
  const double recall = matched / static_cast<double>(r.total());
  sum += (1.0 + kBetaSquared) * precision * recall / (kBetaSquared * precision + recall);
}

double score_one(const Prepared& hyp, const Prepared& ref) {
  double sum = 0.0;
  int orders = 0;
  for (int n = 1; n <= kCharOrder; ++n) accumulate(hyp.chars, ref.chars, n, sum, orders);
  for (int n = 1; n <= kWordOrder; ++n) accumulate(hyp.words, ref.words, n, sum, orders);
  if (orders == 0) return hyp.chars.empty() ? 100.0 : 0.0;
  return 100.0 * sum / orders;
}

}  // namespace

double chrfpp(std::string_view candidate, std::span<const std::string> refs, std::string_view lang,
              bool lowercase) {
  if (refs.empty()) throw ValidationError("chrfpp: at least one reference is required");
  const Prepared hyp = prepare(candidate, lang, lowercase);
  double best = 0.0;
  for (const auto& ref : refs) best = std::max(best, score_one(hyp, prepare(ref, lang, lowercase)));
  return best;
}

}  // namespace ndmt
