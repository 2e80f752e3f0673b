#include "ndmt/correlation.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <string>

#include "ndmt/error.hpp"

namespace ndmt {
namespace {

constexpr double kTieEps = 1e-12;

void check_inputs(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) {
    throw ValidationError("correlation inputs differ in length (" + std::to_string(x.size()) + " vs " +
                          std::to_string(y.size()) + ")");
  }
  if (x.size() < 3) {
    throw ValidationError("correlation needs at least 3 paired values, got " + std::to_string(x.size()));
  }
}

bool is_constant(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(), [&](double a) { return a == v.front(); });
}

double pearson(std::span<const double> a, std::span<const double> b) {
  const double n = static_cast<double>(a.size());
  const double ma = std::accumulate(a.begin(), a.end(), 0.0) / n;
  const double mb = std::accumulate(b.begin(), b.end(), 0.0) / n;
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  return std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
}

int sign(double v) { return (v > 0.0) - (v < 0.0); }

// Concordant minus discordant pairs.
long kendall_s(std::span<const double> a, std::span<const double> b) {
  long s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t j = i + 1; j < a.size(); ++j) s += sign(a[j] - a[i]) * sign(b[j] - b[i]);
  }
  return s;
}

// Tie groups of a sample: sizes of runs of equal values.
std::vector<long> tie_groups(std::span<const double> v) {
  std::map<double, long> counts;
  for (double x : v) ++counts[x];
  std::vector<long> out;
  for (const auto& [value, c] : counts) {
    if (c > 1) out.push_back(c);
  }
  return out;
}

double tau_b(long s, std::span<const double> a, std::span<const double> b) {
  const double n = static_cast<double>(a.size());
  const double n0 = n * (n - 1.0) / 2.0;
  double n1 = 0.0, n2 = 0.0;
  for (long t : tie_groups(a)) n1 += t * (t - 1) / 2.0;
  for (long u : tie_groups(b)) n2 += u * (u - 1) / 2.0;
  return std::clamp(static_cast<double>(s) / std::sqrt((n0 - n1) * (n0 - n2)), -1.0, 1.0);
}

double normal_p(double z, Alternative alternative) {
  switch (alternative) {
    case Alternative::greater: return 0.5 * std::erfc(z / std::sqrt(2.0));
    case Alternative::less: return 0.5 * std::erfc(-z / std::sqrt(2.0));
    case Alternative::two_sided: return std::min(1.0, std::erfc(std::fabs(z) / std::sqrt(2.0)));
  }
  return 1.0;
}

bool at_least_as_extreme(double stat, double observed, Alternative alternative) {
  const double eps = kTieEps * std::max(1.0, std::fabs(observed));
  switch (alternative) {
    case Alternative::greater: return stat >= observed - eps;
    case Alternative::less: return stat <= observed + eps;
    case Alternative::two_sided: return std::fabs(stat) >= std::fabs(observed) - eps;
  }
  return false;
}

// Fraction of the n! pairings of x with a permutation of y whose statistic is
// at least as extreme as the observed pairing.
template <typename Stat>
double permutation_p(std::span<const double> x, std::span<const double> y, double observed,
                     Alternative alternative, Stat stat) {
  std::vector<std::size_t> perm(y.size());
  std::iota(perm.begin(), perm.end(), 0);
  std::vector<double> permuted(y.size());
  long hits = 0, total = 0;
  do {
    for (std::size_t i = 0; i < perm.size(); ++i) permuted[i] = y[perm[i]];
    if (at_least_as_extreme(stat(x, std::span<const double>(permuted)), observed, alternative)) ++hits;
    ++total;
  } while (std::next_permutation(perm.begin(), perm.end()));
  return static_cast<double>(hits) / static_cast<double>(total);
}

}  // namespace

std::vector<double> average_ranks(std::span<const double> values) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(values.size());
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j + 1 < order.size() && values[order[j + 1]] == values[order[i]]) ++j;
    const double r = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = r;
    i = j + 1;
  }
  return ranks;
}

Coefficient spearman(std::span<const double> x, std::span<const double> y, Alternative alternative) {
  check_inputs(x, y);
  const bool cx = is_constant(x), cy = is_constant(y);
  if (cx || cy) return {cx && cy ? 1.0 : 0.0, 1.0};
  const std::vector<double> rx = average_ranks(x), ry = average_ranks(y);
  const double rho = pearson(rx, ry);
  const std::size_t n = x.size();
  if (n <= kExactPermutationMax) {
    return {rho, permutation_p(rx, ry, rho, alternative,
                               [](std::span<const double> a, std::span<const double> b) { return pearson(a, b); })};
  }
  return {rho, normal_p(rho * std::sqrt(static_cast<double>(n) - 1.0), alternative)};
}

Coefficient kendall(std::span<const double> x, std::span<const double> y, Alternative alternative) {
  check_inputs(x, y);
  const bool cx = is_constant(x), cy = is_constant(y);
  if (cx || cy) return {cx && cy ? 1.0 : 0.0, 1.0};
  const long s = kendall_s(x, y);
  const double tau = tau_b(s, x, y);
  const std::size_t n = x.size();
  if (n <= kExactPermutationMax) {
    // tau-b denominators do not change under permutation, so S orders the
    // permutations exactly as tau does.
    return {tau, permutation_p(x, y, static_cast<double>(s), alternative,
                               [](std::span<const double> a, std::span<const double> b) {
                                 return static_cast<double>(kendall_s(a, b));
                               })};
  }
  const double nd = static_cast<double>(n);
  double v0 = nd * (nd - 1.0) * (2.0 * nd + 5.0);
  double vt = 0.0, vu = 0.0, t1 = 0.0, u1 = 0.0, t2 = 0.0, u2 = 0.0;
  for (long t : tie_groups(x)) {
    const double d = static_cast<double>(t);
    vt += d * (d - 1.0) * (2.0 * d + 5.0);
    t1 += d * (d - 1.0);
    t2 += d * (d - 1.0) * (d - 2.0);
  }
  for (long u : tie_groups(y)) {
    const double d = static_cast<double>(u);
    vu += d * (d - 1.0) * (2.0 * d + 5.0);
    u1 += d * (d - 1.0);
    u2 += d * (d - 1.0) * (d - 2.0);
  }
  const double var = (v0 - vt - vu) / 18.0 + t1 * u1 / (2.0 * nd * (nd - 1.0)) +
                     t2 * u2 / (9.0 * nd * (nd - 1.0) * (nd - 2.0));
  return {tau, normal_p(static_cast<double>(s) / std::sqrt(var), alternative)};
}

CorrelationResult correlate(std::span<const double> x, std::span<const double> y, Alternative alternative) {
  const Coefficient r = spearman(x, y, alternative);
  const Coefficient t = kendall(x, y, alternative);
  return {r.value, t.value, r.p, t.p, x.size()};
}

}  // namespace ndmt
