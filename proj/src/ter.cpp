// Translation edit rate.
//
// Edits between a hypothesis and a reference are computed in two passes:
//
//  1. Greedy shifting: repeatedly apply the block shift with the largest net
//     gain (Levenshtein reduction minus the shift's own cost), restricted to
//     blocks of at most kMaxShiftSize tokens that occur verbatim in the
//     reference and are not already aligned, landing next to the reference
//     position they match. At most kMaxShifts shifts.
//  2. Exact refinement: breadth-first search over arrangements reachable by
//     block shifts, bounded by the greedy result and by the bag-of-words
//     lower bound max(|h|, |r|) - |h intersect r|, which no rearrangement can
//     beat. The search has a fixed work budget; short sentences are solved
//     exactly, long ones fall back to the best arrangement found.

#include <algorithm>
#include <unordered_map>
#include <unordered_set>

#include "ndmt/error.hpp"
#include "ndmt/metrics.hpp"

namespace ndmt {
namespace {

constexpr int kMaxShifts = 10;
constexpr int kMaxShiftSize = 10;
constexpr long kExactBudgetCells = 4'000'000;

using Seq = std::vector<int>;

class EditDistance {
 public:
  int operator()(const Seq& a, const Seq& b) {
    const std::size_t m = b.size();
    row_.resize(m + 1);
    for (std::size_t j = 0; j <= m; ++j) row_[j] = static_cast<int>(j);
    for (std::size_t i = 1; i <= a.size(); ++i) {
      int diag = row_[0];
      row_[0] = static_cast<int>(i);
      const int ai = a[i - 1];
      for (std::size_t j = 1; j <= m; ++j) {
        const int up = row_[j];
        row_[j] = std::min({up + 1, row_[j - 1] + 1, diag + (ai == b[j - 1] ? 0 : 1)});
        diag = up;
      }
    }
    return row_[m];
  }

 private:
  std::vector<int> row_;
};

// Levenshtein alignment with backtrace. herr/rerr flag positions not covered
// by an exact match; hpos[j] is the hypothesis index aligned with reference j
// (the insertion point for a block that should start there).
struct Alignment {
  int cost = 0;
  std::vector<bool> herr;
  std::vector<bool> rerr;
  std::vector<int> hpos;
};

Alignment align(const Seq& h, const Seq& r) {
  const std::size_t n = h.size(), m = r.size();
  std::vector<int> d((n + 1) * (m + 1));
  auto at = [&](std::size_t i, std::size_t j) -> int& { return d[i * (m + 1) + j]; };
  for (std::size_t i = 0; i <= n; ++i) at(i, 0) = static_cast<int>(i);
  for (std::size_t j = 0; j <= m; ++j) at(0, j) = static_cast<int>(j);
  for (std::size_t i = 1; i <= n; ++i) {
    for (std::size_t j = 1; j <= m; ++j) {
      at(i, j) = std::min({at(i - 1, j) + 1, at(i, j - 1) + 1,
                           at(i - 1, j - 1) + (h[i - 1] == r[j - 1] ? 0 : 1)});
    }
  }
  Alignment a;
  a.cost = at(n, m);
  a.herr.assign(n, true);
  a.rerr.assign(m, true);
  a.hpos.assign(m + 1, static_cast<int>(n));
  std::size_t i = n, j = m;
  while (i > 0 || j > 0) {
    if (i > 0 && j > 0 && at(i, j) == at(i - 1, j - 1) + (h[i - 1] == r[j - 1] ? 0 : 1)) {
      if (h[i - 1] == r[j - 1]) a.herr[i - 1] = a.rerr[j - 1] = false;
      a.hpos[j - 1] = static_cast<int>(i - 1);
      --i;
      --j;
    } else if (i > 0 && at(i, j) == at(i - 1, j) + 1) {
      --i;
    } else {
      a.hpos[j - 1] = static_cast<int>(i);
      --j;
    }
  }
  return a;
}

// Moves h[start, start+len) so that it begins at index dest of the result.
Seq shifted(const Seq& h, std::size_t start, std::size_t len, std::size_t dest) {
  Seq out;
  out.reserve(h.size());
  Seq rest;
  rest.reserve(h.size() - len);
  rest.insert(rest.end(), h.begin(), h.begin() + static_cast<long>(start));
  rest.insert(rest.end(), h.begin() + static_cast<long>(start + len), h.end());
  out.insert(out.end(), rest.begin(), rest.begin() + static_cast<long>(dest));
  out.insert(out.end(), h.begin() + static_cast<long>(start), h.begin() + static_cast<long>(start + len));
  out.insert(out.end(), rest.begin() + static_cast<long>(dest), rest.end());
  return out;
}

int greedy_edits(Seq h, const Seq& r, EditDistance& lev) {
  int shifts = 0;
  Alignment a = align(h, r);
  while (shifts < kMaxShifts) {
    int best_gain = 0;
    Seq best;
    const std::size_t n = h.size();
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t len = 1; len <= static_cast<std::size_t>(kMaxShiftSize) && i + len <= n; ++len) {
        if (std::none_of(a.herr.begin() + static_cast<long>(i),
                         a.herr.begin() + static_cast<long>(i + len), [](bool e) { return e; })) {
          continue;
        }
        for (std::size_t j = 0; j + len <= r.size(); ++j) {
          if (!std::equal(h.begin() + static_cast<long>(i), h.begin() + static_cast<long>(i + len),
                          r.begin() + static_cast<long>(j))) {
            continue;
          }
          if (std::none_of(a.rerr.begin() + static_cast<long>(j),
                           a.rerr.begin() + static_cast<long>(j + len), [](bool e) { return e; })) {
            continue;
          }
          // Land the block where reference j is aligned, with one position of
          // slack either side.
          const int target = a.hpos[j];
          if (target >= static_cast<int>(i) && target <= static_cast<int>(i + len)) continue;
          const int base = target > static_cast<int>(i) ? target - static_cast<int>(len) : target;
          for (int dest = base - 1; dest <= base + 1; ++dest) {
            if (dest < 0 || dest > static_cast<int>(n - len) || dest == static_cast<int>(i)) continue;
            Seq cand = shifted(h, i, len, static_cast<std::size_t>(dest));
            const int gain = a.cost - lev(cand, r) - 1;
            if (gain > best_gain) {
              best_gain = gain;
              best = std::move(cand);
            }
          }
        }
      }
    }
    if (best_gain <= 0) break;
    h = std::move(best);
    a = align(h, r);
    ++shifts;
  }
  return a.cost + shifts;
}

int bag_lower_bound(const Seq& h, const Seq& r) {
  std::unordered_map<int, int> counts;
  for (int t : r) ++counts[t];
  int common = 0;
  for (int t : h) {
    auto it = counts.find(t);
    if (it != counts.end() && it->second > 0) {
      --it->second;
      ++common;
    }
  }
  return static_cast<int>(std::max(h.size(), r.size())) - common;
}

struct SeqHash {
  std::size_t operator()(const Seq& s) const {
    std::size_t h = 1469598103934665603ULL;
    for (int t : s) h = (h ^ static_cast<std::size_t>(t)) * 1099511628211ULL;
    return h;
  }
};

int exact_edits(const Seq& h, const Seq& r, int upper, EditDistance& lev) {
  const int lower = bag_lower_bound(h, r);
  int best = upper;
  if (best <= lower) return best;
  const long cell_cost = static_cast<long>(std::max<std::size_t>(1, h.size() * r.size()));
  long budget = kExactBudgetCells;

  std::unordered_set<Seq, SeqHash> seen{h};
  std::vector<Seq> frontier{h};
  const std::size_t n = h.size();
  for (int depth = 0; !frontier.empty() && depth + 1 + lower < best; ++depth) {
    std::vector<Seq> next;
    for (const Seq& s : frontier) {
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t len = 1; i + len <= n; ++len) {
          for (std::size_t dest = 0; dest + len <= n; ++dest) {
            if (dest == i) continue;
            Seq t = shifted(s, i, len, dest);
            if (!seen.insert(t).second) continue;
            best = std::min(best, depth + 1 + lev(t, r));
            if (best <= lower + depth + 1) return best;
            budget -= cell_cost;
            if (budget <= 0) return best;
            next.push_back(std::move(t));
          }
        }
      }
    }
    frontier = std::move(next);
  }
  return best;
}

std::pair<Seq, Seq> intern(std::span<const std::string> hyp, std::span<const std::string> ref) {
  std::unordered_map<std::string_view, int> ids;
  auto id = [&](const std::string& t) {
    return ids.emplace(t, static_cast<int>(ids.size())).first->second;
  };
  Seq h, r;
  h.reserve(hyp.size());
  r.reserve(ref.size());
  for (const auto& t : ref) r.push_back(id(t));
  for (const auto& t : hyp) h.push_back(id(t));
  return {std::move(h), std::move(r)};
}

}  // namespace

int ter_edits(std::span<const std::string> hyp, std::span<const std::string> ref) {
  auto [h, r] = intern(hyp, ref);
  if (h.empty() || r.empty()) return static_cast<int>(std::max(h.size(), r.size()));
  EditDistance lev;
  const int greedy = greedy_edits(h, r, lev);
  return exact_edits(h, r, greedy, lev);
}

double ter(const TokenSequence& candidate, std::span<const TokenSequence> refs) {
  if (refs.empty()) throw ValidationError("ter: at least one reference is required");
  double best = std::numeric_limits<double>::infinity();
  for (const auto& ref : refs) {
    const int edits = ter_edits(candidate.tokens, ref.tokens);
    const double len = static_cast<double>(std::max<std::size_t>(1, ref.size()));
    best = std::min(best, 100.0 * edits / len);
  }
  return best;
}

}  // namespace ndmt
