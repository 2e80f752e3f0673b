#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "ndmt/error.hpp"
#include "ndmt/ranking.hpp"
#include "oracles.hpp"

using namespace ndmt;

namespace {

const MetricId kBleu = MetricId::of(NativeMetric::bleu);
const MetricId kTer = MetricId::of(NativeMetric::ter);

// One report whose every measurement of every metric is derived from `v`.
SystemReport report(std::string id, double v, std::size_t k = 10, std::size_t sources = 4) {
  SystemReport r;
  r.system_id = std::move(id);
  r.sampling_size = k;
  r.source_count = sources;
  for (std::size_t i = 0; i < sources; ++i) r.source_ids.push_back("s" + std::to_string(i));
  for (const MetricId& m : {kBleu, kTer}) {
    Measurements a;
    a.min = v - 10;
    a.max = v + 10;
    a.mean = v;
    a.random = v + 1;
    a.std = 5;
    r.metrics.push_back({m, a});
  }
  return r;
}

void set(SystemReport& r, const std::string& metric, Strategy s, double v) {
  for (auto& m : r.metrics) {
    if (m.metric.name == metric) m.averages.get(s) = v;
  }
}

std::vector<SystemReport> family(const std::vector<double>& values, std::size_t k = 10) {
  std::vector<SystemReport> out;
  for (std::size_t i = 0; i < values.size(); ++i) out.push_back(report("S" + std::to_string(i), values[i], k));
  return out;
}

ReportsBySize same_at_sizes(const std::vector<double>& values, std::vector<std::size_t> sizes) {
  ReportsBySize out;
  for (std::size_t k : sizes) out[k] = family(values, k);
  return out;
}

const std::vector<MetricId> kMetrics = {kBleu, kTer};

}  // namespace

TEST(Rank, SortsByDirection) {
  auto rs = family({50, 50, 50});
  set(rs[0], "bleu", Strategy::min, 30);
  set(rs[1], "bleu", Strategy::min, 20);
  set(rs[2], "bleu", Strategy::min, 40);
  const Ranking r = rank_systems(rs, kBleu, Strategy::min);
  ASSERT_EQ(r.systems.size(), 3u);
  EXPECT_EQ(r.systems[0].system_id, "S2");
  EXPECT_EQ(r.systems[1].system_id, "S0");
  EXPECT_EQ(r.systems[2].system_id, "S1");
  EXPECT_EQ(r.find("S2")->rank, 1.0);
  EXPECT_EQ(r.direction, Direction::higher_better);
}

TEST(Rank, TerMaxIsLowerBetter) {
  auto rs = family({50, 50, 50});
  set(rs[0], "ter", Strategy::max, 80);
  set(rs[1], "ter", Strategy::max, 40);
  set(rs[2], "ter", Strategy::max, 60);
  const Ranking r = rank_systems(rs, kTer, Strategy::max);
  EXPECT_EQ(r.direction, Direction::lower_better);
  EXPECT_EQ(r.systems[0].system_id, "S1");
  EXPECT_EQ(resolve_role(StrategyRole::worst, Polarity::loss), Strategy::max);
  EXPECT_EQ(resolve_role(StrategyRole::worst, Polarity::gain), Strategy::min);
  EXPECT_EQ(resolve_role(StrategyRole::best, Polarity::loss), Strategy::min);
}

TEST(Rank, StdDirectionFollowsOption) {
  EXPECT_EQ(direction_of(kBleu, Strategy::std), Direction::lower_better);
  EXPECT_EQ(direction_of(kTer, Strategy::std), Direction::lower_better);
  EXPECT_EQ(direction_of(kBleu, Strategy::std, RankingOptions{false}), Direction::higher_better);
}

TEST(Rank, TiesShareAverageRank) {
  const Ranking r = rank_systems(family({10, 20, 20}), kBleu, Strategy::mean);
  EXPECT_EQ(r.systems[0].rank, 1.5);
  EXPECT_EQ(r.systems[1].rank, 1.5);
  EXPECT_EQ(r.systems[0].system_id, "S1");  // input order among ties
  EXPECT_EQ(r.systems[2].rank, 3.0);
}

TEST(Rank, RejectsBadReportSets) {
  EXPECT_THROW(rank_systems(family({1, 2}), kBleu, Strategy::mean), ValidationError);
  auto dup = family({1, 2, 3});
  dup[2].system_id = "S0";
  EXPECT_THROW(rank_systems(dup, kBleu, Strategy::mean), ValidationError);
  auto other = family({1, 2, 3});
  other[1].source_ids.back() = "elsewhere";
  EXPECT_THROW(rank_systems(other, kBleu, Strategy::mean), ValidationError);
}

TEST(Rank, InvariantUnderIncreasingTransform) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0, 100);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> v(3 + rng() % 6), t;
    for (auto& x : v) x = std::round(u(rng));
    for (double x : v) t.push_back(std::exp(x / 10.0));
    const Ranking a = rank_systems(family(v), kBleu, Strategy::mean);
    const Ranking b = rank_systems(family(t), kBleu, Strategy::mean);
    for (std::size_t i = 0; i < v.size(); ++i) {
      EXPECT_EQ(a.systems[i].system_id, b.systems[i].system_id);
      EXPECT_EQ(a.systems[i].rank, b.systems[i].rank);
    }
  }
}

TEST(DmtNdmt, IdenticalValuesCorrelatePerfectly) {
  const auto nd = family({10, 20, 30, 40, 50});
  auto d = family({10, 20, 30, 40, 50});
  for (auto& r : d) {
    for (auto& m : r.metrics) m.averages = {m.averages.mean, m.averages.mean, m.averages.mean, m.averages.mean, 0};
  }
  const auto cells = dmt_ndmt_consistency(nd, d, kMetrics);
  EXPECT_EQ(cells.size(), 10u);
  for (const auto& c : cells) {
    if (c.strategy == Strategy::std) continue;
    EXPECT_EQ(c.result.rho, 1.0) << c.metric << " " << to_string(c.strategy);
    EXPECT_EQ(c.result.tau, 1.0);
  }
}

TEST(DmtNdmt, StdDecreasingInQualityGivesMinusOne) {
  auto nd = family({10, 20, 30, 40, 50});
  for (std::size_t i = 0; i < nd.size(); ++i) set(nd[i], "bleu", Strategy::std, 50.0 - 8.0 * static_cast<double>(i));
  const auto cells = dmt_ndmt_consistency(nd, family({10, 20, 30, 40, 50}), std::vector<MetricId>{kBleu});
  for (const auto& c : cells) {
    if (c.strategy != Strategy::std) continue;
    EXPECT_EQ(c.result.rho, -1.0);
    EXPECT_EQ(c.result.tau, -1.0);
    EXPECT_NEAR(c.result.p_rho, 1.0 / 120.0, 1e-12);  // "less" alternative
  }
}

TEST(DmtNdmt, MapsNdIdsToBaselineIds) {
  const auto nd = family({10, 20, 30});
  auto d = family({10, 20, 30});
  for (auto& r : d) r.system_id += "-greedy";
  EXPECT_THROW(dmt_ndmt_consistency(nd, d, kMetrics), ValidationError);
  const std::map<std::string, std::string> map{{"S0", "S0-greedy"}, {"S1", "S1-greedy"}, {"S2", "S2-greedy"}};
  EXPECT_NO_THROW(dmt_ndmt_consistency(nd, d, kMetrics, map));
}

TEST(DmtNdmt, IndependentValuesAreUncorrelatedOnAverage) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0, 100);
  double rho_sum = 0, p_sum = 0;
  const int trials = 300;
  for (int t = 0; t < trials; ++t) {
    std::vector<double> a(6), b(6);
    for (auto& x : a) x = u(rng);
    for (auto& x : b) x = u(rng);
    const auto cells = dmt_ndmt_consistency(family(a), family(b), std::vector<MetricId>{kBleu});
    rho_sum += cells[2].result.rho;  // mean strategy
    p_sum += cells[2].result.p_rho;
  }
  EXPECT_LT(std::fabs(rho_sum / trials), 0.1);
  EXPECT_GT(p_sum / trials, 0.4);
}

TEST(CrossSize, IdenticalReportsGiveAllOnes) {
  const auto table = cross_size_consistency(same_at_sizes({1, 2, 3, 4, 5}, {10, 20, 50}), kMetrics);
  EXPECT_EQ(table.base_size, 10u);
  EXPECT_EQ(table.sizes, (std::vector<std::size_t>{20, 50}));
  EXPECT_EQ(table.cells.size(), 2u * 5u * 2u);
  for (const auto& c : table.cells) {
    EXPECT_EQ(c.result.rho, 1.0);
    EXPECT_EQ(c.result.tau, 1.0);
  }
  const auto buckets = detect_buckets(table);
  for (const auto& e : buckets.entries) EXPECT_TRUE(e.stable) << to_string(e.role);
}

TEST(CrossSize, ExplicitBaseSizeAndErrors) {
  auto reports = same_at_sizes({1, 2, 3}, {10, 20, 50});
  const auto table = cross_size_consistency(reports, kMetrics, 50);
  EXPECT_EQ(table.sizes, (std::vector<std::size_t>{10, 20}));
  EXPECT_THROW(cross_size_consistency(reports, kMetrics, 30), ValidationError);
  EXPECT_THROW(cross_size_consistency(same_at_sizes({1, 2, 3}, {10}), kMetrics), ValidationError);
  reports[20].pop_back();
  EXPECT_THROW(cross_size_consistency(reports, kMetrics), ValidationError);
  auto renamed = same_at_sizes({1, 2, 3}, {10, 20});
  renamed[20][0].system_id = "X";
  EXPECT_THROW(cross_size_consistency(renamed, kMetrics), ValidationError);
}

TEST(Buckets, OnlyWorstCaseStableInThePaperShape) {
  // Worst case keeps its order at every size; best case swaps two systems.
  auto reports = same_at_sizes({10, 20, 30, 40, 50}, {10, 20, 50});
  for (std::size_t k : {20u, 50u}) {
    auto& rs = reports[k];
    set(rs[0], "bleu", Strategy::max, 100);
    set(rs[0], "ter", Strategy::min, -100);
  }
  const auto table = cross_size_consistency(reports, kMetrics);
  const auto b = detect_buckets(table);
  EXPECT_TRUE(b.at(StrategyRole::worst).stable);
  EXPECT_FALSE(b.at(StrategyRole::best).stable);
  EXPECT_EQ(b.at(StrategyRole::worst).evidence, 1.0);
  EXPECT_LT(b.at(StrategyRole::best).evidence, 1.0);
  for (StrategyRole r : {StrategyRole::mean, StrategyRole::random, StrategyRole::std}) {
    EXPECT_TRUE(b.at(r).stable);
  }
}

TEST(Buckets, SingleCellBelowThreshold) {
  auto reports = same_at_sizes({10, 20, 30, 40, 50}, {10, 20});
  set(reports[20][3], "bleu", Strategy::min, 100);  // S3 jumps to the top
  const auto b = detect_buckets(cross_size_consistency(reports, std::vector<MetricId>{kBleu}));
  EXPECT_FALSE(b.at(StrategyRole::worst).stable);
  EXPECT_TRUE(b.at(StrategyRole::best).stable);
}

TEST(Buckets, MonotoneInThreshold) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0, 100);
  for (int trial = 0; trial < 50; ++trial) {
    ReportsBySize reports;
    for (std::size_t k : {10u, 20u, 50u}) {
      std::vector<double> v(5);
      for (auto& x : v) x = u(rng);
      reports[k] = family(v, k);
    }
    const auto table = cross_size_consistency(reports, kMetrics);
    const double thresholds[] = {1.0, 0.9, 0.5, 0.0, -1.0};
    for (std::size_t i = 0; i + 1 < std::size(thresholds); ++i) {
      const auto hi = detect_buckets(table, thresholds[i]), lo = detect_buckets(table, thresholds[i + 1]);
      for (StrategyRole r : all_roles()) {
        if (hi.at(r).stable) EXPECT_TRUE(lo.at(r).stable);
      }
    }
  }
}

TEST(Buckets, RejectsEmptyTable) { EXPECT_THROW(detect_buckets(ConsistencyTable{}), ValidationError); }

TEST(ExpectoSample, DuplicatedReportsAreReliable) {
  const auto verdicts = expecto_sample(same_at_sizes({3, 1, 4, 5, 9}, {10, 20, 50}), kMetrics);
  ASSERT_EQ(verdicts.size(), 2u);
  for (const auto& v : verdicts) {
    EXPECT_TRUE(v.reliable);
    EXPECT_EQ(v.evidence, 1.0);
    EXPECT_EQ(v.pairs.size(), 3u);
  }
  EXPECT_EQ(robust_systems(same_at_sizes({3, 1, 4, 5, 9}, {10, 20, 50}), verdicts).size(), 5u);
}

TEST(ExpectoSample, OneSwapAtLargestSizeIsUnreliable) {
  auto reports = same_at_sizes({10, 20, 30, 40, 50}, {10, 20, 50});
  set(reports[50][3], "bleu", Strategy::mean, 60);  // S3 and S4 trade places
  const auto verdicts = expecto_sample(reports, kMetrics, 0.95);
  EXPECT_FALSE(verdicts[0].reliable);
  EXPECT_NEAR(verdicts[0].evidence, 0.8, 1e-12);
  // evidence equals the oracle correlations of the offending pair
  const std::vector<double> a{10, 20, 30, 40, 50}, b{10, 20, 30, 60, 50};
  EXPECT_NEAR(verdicts[0].evidence, std::min(oracle::spearman(a, b), oracle::kendall(a, b)), 1e-12);
  EXPECT_TRUE(verdicts[1].reliable);
  const auto robust = robust_systems(reports, verdicts);
  EXPECT_EQ(robust.size(), 5u);  // TER alone is reliable and never reorders
}

TEST(ExpectoSample, RequiresTwoSizes) {
  EXPECT_THROW(expecto_sample(same_at_sizes({1, 2, 3}, {10}), kMetrics), ValidationError);
}
