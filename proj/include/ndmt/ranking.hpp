#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ndmt/correlation.hpp"
#include "ndmt/groupstats.hpp"
#include "ndmt/metrics.hpp"

namespace ndmt {

enum class Direction { higher_better, lower_better };

std::string_view to_string(Direction d);

struct RankingOptions {
  // Lower std ranks first when true.
  bool std_ascending = true;
};

// Gain metrics rank higher values first, loss metrics lower values first; std
// follows RankingOptions regardless of polarity.
Direction direction_of(const MetricId& metric, Strategy strategy, const RankingOptions& options = {});

struct RankedSystem {
  std::string system_id;
  double value = 0.0;
  double rank = 0.0;  // 1 = best; ties share the mean of their positions
};

struct Ranking {
  MetricId metric;
  Strategy strategy = Strategy::mean;
  Direction direction = Direction::higher_better;
  std::vector<RankedSystem> systems;  // best first; ties keep input order

  const RankedSystem* find(std::string_view system_id) const;
};

// Requires at least 3 reports with distinct system ids covering one source
// set. Throws ValidationError otherwise.
Ranking rank_systems(std::span<const SystemReport> reports, const MetricId& metric, Strategy strategy,
                     const RankingOptions& options = {});

// One correlation cell keyed by metric name and strategy.
struct StrategyCorrelation {
  std::string metric;
  Strategy strategy = Strategy::mean;
  CorrelationResult result;
};

struct DmtNdmtOptions {
  // Alternative for the location strategies (min/max/mean/random).
  Alternative alternative = Alternative::greater;
  // Alternative for std, which is expected to anticorrelate with quality.
  Alternative std_alternative = Alternative::less;
};

// Correlates every ND measurement with the deterministic score of the same
// system (the baseline's mean, which equals every location measure for K=1).
// `nd_to_d` maps ND system ids to baseline ids; ids map to themselves when
// absent. Values are correlated raw, so a loss metric keeps its sign.
std::vector<StrategyCorrelation> dmt_ndmt_consistency(std::span<const SystemReport> nd_reports,
                                                      std::span<const SystemReport> d_reports,
                                                      std::span<const MetricId> metrics,
                                                      const std::map<std::string, std::string>& nd_to_d = {},
                                                      const DmtNdmtOptions& options = {});

using ReportsBySize = std::map<std::size_t, std::vector<SystemReport>>;

// Correlation of the measurement values of one (metric, strategy) between two
// sampling sizes, matched by system id.
CorrelationResult size_pair_correlation(const ReportsBySize& reports, const MetricId& metric,
                                        Strategy strategy, std::size_t size_a, std::size_t size_b,
                                        Alternative alternative = Alternative::greater);

struct ConsistencyCell {
  std::string metric;
  Strategy strategy = Strategy::mean;
  std::size_t base_size = 0;
  std::size_t size = 0;
  CorrelationResult result;
};

struct ConsistencyTable {
  std::size_t base_size = 0;
  std::vector<std::size_t> sizes;      // compared sizes, ascending, base excluded
  std::vector<MetricId> metrics;
  std::vector<ConsistencyCell> cells;  // metric-major, then strategy, then size

  const ConsistencyCell* find(std::string_view metric, Strategy strategy, std::size_t size) const;
};

// Every metric x strategy x non-base size against the base size, which
// defaults to the smallest size present. Requires at least 2 sizes, the same
// system set at every size, and at least 3 systems.
ConsistencyTable cross_size_consistency(const ReportsBySize& reports, std::span<const MetricId> metrics,
                                        std::optional<std::size_t> base_size = std::nullopt);

// Strategies viewed through polarity: the worst case is min for gain metrics
// and max for loss metrics.
enum class StrategyRole { worst, best, mean, random, std };

std::string_view to_string(StrategyRole role);
std::span<const StrategyRole> all_roles();
Strategy resolve_role(StrategyRole role, Polarity polarity);

struct BucketsEntry {
  StrategyRole role = StrategyRole::worst;
  double min_rho = 1.0;
  double min_tau = 1.0;
  double evidence = 1.0;  // min(min_rho, min_tau)
  bool stable = false;    // evidence >= threshold
};

struct BucketsReport {
  double threshold = 1.0;
  std::vector<BucketsEntry> entries;  // all_roles() order

  const BucketsEntry& at(StrategyRole role) const;
};

// Throws ValidationError on an empty table.
BucketsReport detect_buckets(const ConsistencyTable& table, double threshold = 1.0);

struct SizePairResult {
  std::size_t size_a = 0;
  std::size_t size_b = 0;
  CorrelationResult result;
};

struct ReliabilityVerdict {
  MetricId metric;
  bool reliable = false;
  double evidence = 1.0;  // min of rho and tau over all size pairs
  double threshold = 0.95;
  std::vector<SizePairResult> pairs;
};

// Mean-strategy rankings compared over every pair of sizes. Requires at least
// 2 sizes and 3 systems.
std::vector<ReliabilityVerdict> expecto_sample(const ReportsBySize& reports, std::span<const MetricId> metrics,
                                               double threshold = 0.95);

// Systems whose mean-strategy rank is the same at every size under every
// reliable metric. Empty when no metric is reliable.
std::vector<std::string> robust_systems(const ReportsBySize& reports,
                                        std::span<const ReliabilityVerdict> verdicts);

}  // namespace ndmt
