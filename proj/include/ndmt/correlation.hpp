#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace ndmt {

// Direction of the alternative hypothesis for p-values.
enum class Alternative { greater, less, two_sided };

// Largest n for which p-values come from full permutation enumeration
// (8! = 40320 permutations). Larger samples use the normal approximation.
inline constexpr std::size_t kExactPermutationMax = 8;

struct Coefficient {
  double value = 0.0;
  double p = 1.0;
};

struct CorrelationResult {
  double rho = 0.0;
  double tau = 0.0;
  double p_rho = 1.0;
  double p_tau = 1.0;
  std::size_t n = 0;
};

// Ascending ranks starting at 1; tied values share the mean of their ranks.
std::vector<double> average_ranks(std::span<const double> values);

// Spearman's rho: Pearson correlation of average ranks, which equals
// 1 - 6 sum d^2 / (n (n^2 - 1)) when there are no ties. When either input is
// constant the coefficient is 1 if both are constant and 0 otherwise, with
// p = 1. Requires equal lengths and n >= 3 (ValidationError otherwise).
Coefficient spearman(std::span<const double> x, std::span<const double> y,
                     Alternative alternative = Alternative::greater);

// Kendall's tau-b (tie corrected). Same conventions as spearman.
Coefficient kendall(std::span<const double> x, std::span<const double> y,
                    Alternative alternative = Alternative::greater);

CorrelationResult correlate(std::span<const double> x, std::span<const double> y,
                            Alternative alternative = Alternative::greater);

}  // namespace ndmt
