#include <algorithm>
#include <cmath>
#include <unordered_map>

#include "ndmt/error.hpp"
#include "ndmt/metrics.hpp"

namespace ndmt {
namespace {

// Search nodes explored before settling for the best alignment found so far.
constexpr long kNodeBudget = 200'000;

// Depth-first search over maximum-cardinality exact alignments, minimizing
// the number of chunks. Every word type must reach min(count in hyp, count
// in ref) matches, so a hypothesis token may stay unmatched only while its
// type still has surplus occurrences.
class ChunkSearch {
 public:
  ChunkSearch(std::span<const std::string> hyp, std::span<const std::string> ref) {
    std::unordered_map<std::string_view, int> ids;
    auto id = [&](const std::string& t) {
      return ids.emplace(t, static_cast<int>(ids.size())).first->second;
    };
    for (const auto& t : ref) ref_.push_back(id(t));
    for (const auto& t : hyp) hyp_.push_back(id(t));
    const std::size_t types = ids.size();
    positions_.resize(types);
    for (std::size_t j = 0; j < ref_.size(); ++j) positions_[static_cast<std::size_t>(ref_[j])].push_back(static_cast<int>(j));
    std::vector<int> hyp_count(types, 0);
    for (int t : hyp_) ++hyp_count[static_cast<std::size_t>(t)];
    surplus_.resize(types);
    for (std::size_t t = 0; t < types; ++t) {
      const int ref_count = static_cast<int>(positions_[t].size());
      const int m = std::min(hyp_count[t], ref_count);
      matches_ += m;
      surplus_[t] = hyp_count[t] - m;
    }
    used_.assign(ref_.size(), false);
  }

  MeteorAlignment run() {
    if (matches_ == 0) return {0, 0};
    best_ = static_cast<int>(hyp_.size()) + 1;
    dfs(0, -2, 0);
    return {matches_, best_};
  }

 private:
  void dfs(std::size_t i, int prev_ref, int chunks) {
    if (chunks >= best_ || nodes_ >= kNodeBudget) return;
    ++nodes_;
    if (i == hyp_.size()) {
      best_ = chunks;
      return;
    }
    const auto t = static_cast<std::size_t>(hyp_[i]);
    // Continuing the current chunk first finds good bounds early.
    const int next = prev_ref + 1;
    if (prev_ref >= 0 && next < static_cast<int>(ref_.size()) && !used_[static_cast<std::size_t>(next)] &&
        ref_[static_cast<std::size_t>(next)] == hyp_[i]) {
      take(i, next, chunks);
    }
    for (int j : positions_[t]) {
      if (j == next && prev_ref >= 0) continue;
      if (!used_[static_cast<std::size_t>(j)]) take(i, j, chunks + 1);
    }
    if (surplus_[t] > 0) {
      --surplus_[t];
      dfs(i + 1, -2, chunks);
      ++surplus_[t];
    }
  }

  void take(std::size_t i, int j, int chunks) {
    used_[static_cast<std::size_t>(j)] = true;
    dfs(i + 1, j, chunks);
    used_[static_cast<std::size_t>(j)] = false;
  }

  std::vector<int> hyp_;
  std::vector<int> ref_;
  std::vector<std::vector<int>> positions_;
  std::vector<int> surplus_;
  std::vector<bool> used_;
  int matches_ = 0;
  int best_ = 0;
  long nodes_ = 0;
};

}  // namespace

MeteorAlignment meteor_align(std::span<const std::string> hyp, std::span<const std::string> ref) {
  return ChunkSearch(hyp, ref).run();
}

double meteor_exact(const TokenSequence& candidate, std::span<const TokenSequence> refs) {
  if (refs.empty()) throw ValidationError("meteor_exact: at least one reference is required");
  double best = 0.0;
  for (const auto& ref : refs) {
    const MeteorAlignment a = meteor_align(candidate.tokens, ref.tokens);
    if (a.matches == 0) continue;
    const double m = a.matches;
    const double p = m / static_cast<double>(candidate.size());
    const double r = m / static_cast<double>(ref.size());
    const double fmean = 10.0 * p * r / (r + 9.0 * p);
    const double penalty = 0.5 * std::pow(a.chunks / m, 3.0);
    best = std::max(best, 100.0 * fmean * (1.0 - penalty));
  }
  return best;
}

}  // namespace ndmt
