#include <cmath>
#include <cstdlib>
#include <unordered_map>

#include "ndmt/error.hpp"
#include "ndmt/metrics.hpp"

namespace ndmt {
namespace {

constexpr int kMaxOrder = 4;

}  // namespace

double bleu(const TokenSequence& candidate, std::span<const TokenSequence> refs) {
  if (refs.empty()) throw ValidationError("bleu: at least one reference is required");
  if (candidate.empty()) return 0.0;

  const long c = static_cast<long>(candidate.size());
  long r = static_cast<long>(refs.front().size());
  for (const auto& ref : refs) {
    const long len = static_cast<long>(ref.size());
    const long d = std::labs(len - c), best = std::labs(r - c);
    if (d < best || (d == best && len < r)) r = len;
  }

  double log_sum = 0.0;
  int zero_orders = 0;
  for (int n = 1; n <= kMaxOrder; ++n) {
    const NGramMultiset hyp = ngrams(candidate, n);
    // Clip each hypothesis n-gram by its maximum count in any reference.
    std::unordered_map<std::string, int> max_ref;
    for (const auto& ref : refs) {
      const NGramMultiset grams = ngrams(ref, n);
      for (const auto& [key, cnt] : grams.counts()) {
        int& slot = max_ref[key];
        slot = std::max(slot, cnt);
      }
    }
    long matched = 0;
    for (const auto& [key, cnt] : hyp.counts()) {
      const auto it = max_ref.find(key);
      if (it != max_ref.end()) matched += std::min(cnt, it->second);
    }
    double precision;
    if (matched > 0) {
      precision = static_cast<double>(matched) / static_cast<double>(hyp.total());
    } else {
      ++zero_orders;
      precision = 1.0 / (std::ldexp(1.0, zero_orders) * static_cast<double>(std::max(1L, hyp.total())));
    }
    log_sum += std::log(precision);
  }

  const double bp = c >= r ? 1.0 : std::exp(1.0 - static_cast<double>(r) / static_cast<double>(c));
  return 100.0 * bp * std::exp(log_sum / kMaxOrder);
}

}  // namespace ndmt
