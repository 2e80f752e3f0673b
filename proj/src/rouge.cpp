#include <algorithm>

#include "ndmt/error.hpp"
#include "ndmt/metrics.hpp"

namespace ndmt {
namespace {

double f1(double matched, double hyp_total, double ref_total) {
  if (matched == 0.0) return 0.0;
  const double p = matched / hyp_total;
  const double r = matched / ref_total;
  return 2.0 * p * r / (p + r);
}

std::size_t lcs_length(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  std::vector<std::size_t> row(b.size() + 1, 0);
  for (const auto& x : a) {
    std::size_t diag = 0;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const std::size_t up = row[j];
      row[j] = x == b[j - 1] ? diag + 1 : std::max(row[j], row[j - 1]);
      diag = up;
    }
  }
  return row[b.size()];
}

double score_one(const TokenSequence& hyp, const TokenSequence& ref, RougeVariant variant) {
  if (variant == RougeVariant::lcs) {
    if (hyp.empty() || ref.empty()) return hyp.empty() && ref.empty() ? 100.0 : 0.0;
    return 100.0 * f1(static_cast<double>(lcs_length(hyp.tokens, ref.tokens)),
                      static_cast<double>(hyp.size()), static_cast<double>(ref.size()));
  }
  const int n = variant == RougeVariant::one ? 1 : 2;
  const NGramMultiset h = ngrams(hyp, n);
  const NGramMultiset r = ngrams(ref, n);
  // Neither side long enough for this order: only an exact copy counts.
  if (h.empty() && r.empty()) return hyp.tokens == ref.tokens ? 100.0 : 0.0;
  if (h.empty() || r.empty()) return 0.0;
  return 100.0 * f1(static_cast<double>(h.overlap(r)), static_cast<double>(h.total()),
                    static_cast<double>(r.total()));
}

}  // namespace

double rouge(const TokenSequence& candidate, std::span<const TokenSequence> refs, RougeVariant variant) {
  if (refs.empty()) throw ValidationError("rouge: at least one reference is required");
  double best = 0.0;
  for (const auto& ref : refs) best = std::max(best, score_one(candidate, ref, variant));
  return best;
}

}  // namespace ndmt
