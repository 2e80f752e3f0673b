#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "ndmt/error.hpp"
#include "ndmt/groupstats.hpp"
#include "oracles.hpp"

using namespace ndmt;

namespace {

GroupScores scores(std::vector<double> v, std::string source = "s1") {
  return {MetricId::of(NativeMetric::bleu), std::move(source), std::move(v)};
}

SourceSet sources(int n) {
  SourceSet s;
  for (int i = 0; i < n; ++i) {
    s.add({"s" + std::to_string(i), "src", LangPair::parse("en-de"), {"a b c d e"}});
  }
  return s;
}

RunSet run_of(std::string id, const std::vector<std::vector<std::string>>& groups, double temp = 0.7) {
  RunSet r;
  r.system_id = std::move(id);
  r.temperature = temp;
  r.decoding_mode = temp == 0.0 ? DecodingMode::deterministic : DecodingMode::sampled;
  for (std::size_t i = 0; i < groups.size(); ++i) {
    const std::string sid = "s" + std::to_string(i);
    r.groups.emplace(sid, CandidateGroup{sid, r.system_id, temp, 0, groups[i]});
  }
  return r;
}

const std::vector<MetricId> kMetrics = {MetricId::of(NativeMetric::bleu), MetricId::of(NativeMetric::ter),
                                        MetricId::of(NativeMetric::glvs)};

}  // namespace

TEST(GroupMeasurements, ThreeScoreExample) {
  const Measurements m = group_measurements(scores({20, 40, 60}), 1).values;
  EXPECT_EQ(m.min, 20);
  EXPECT_EQ(m.max, 60);
  EXPECT_DOUBLE_EQ(m.mean, 40);
  EXPECT_NEAR(m.std, 16.33, 0.005);
  EXPECT_NEAR(m.std, std::sqrt(800.0 / 3.0), 1e-12);
}

TEST(GroupMeasurements, ConstantAndSingletonGroups) {
  for (const auto& v : {std::vector<double>{55, 55, 55}, std::vector<double>{70}}) {
    const Measurements m = group_measurements(scores(v), 3).values;
    EXPECT_EQ(m.min, v[0]);
    EXPECT_EQ(m.max, v[0]);
    EXPECT_EQ(m.mean, v[0]);
    EXPECT_EQ(m.random, v[0]);
    EXPECT_EQ(m.std, 0.0);
  }
  EXPECT_THROW(group_measurements(scores({}), 0), ValidationError);
}

TEST(GroupMeasurements, OrderingInvariants) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0, 100);
  for (int trial = 0; trial < 2000; ++trial) {
    std::vector<double> v(1 + rng() % 10);
    for (auto& x : v) x = (rng() % 3 == 0) ? 50.0 : u(rng);
    const Measurements m = group_measurements(scores(v), rng()).values;
    EXPECT_LE(m.min, m.random);
    EXPECT_LE(m.random, m.max);
    EXPECT_LE(m.min, m.mean + 1e-9);
    EXPECT_LE(m.mean, m.max + 1e-9);
    const bool constant = std::all_of(v.begin(), v.end(), [&](double x) { return x == v[0]; });
    EXPECT_EQ(m.std == 0.0, constant);
    EXPECT_NE(std::find(v.begin(), v.end(), m.random), v.end());
  }
}

TEST(GroupMeasurements, RandomPickIsUnbiased) {
  const std::vector<double> v{10, 20, 35, 80, 95};
  const double mean = oracle::mean(v);
  double var = 0;
  for (double x : v) var += (x - mean) * (x - mean);
  var /= static_cast<double>(v.size());
  const int seeds = 10000;
  double sum = 0;
  for (int s = 0; s < seeds; ++s) {
    sum += group_measurements(scores(v), random_pick_seed(static_cast<std::uint64_t>(s), "sys", "s1")).values.random;
  }
  EXPECT_NEAR(sum / seeds, mean, 3.0 * std::sqrt(var / seeds));
}

TEST(GroupMeasurements, RandomPickIsReproducible) {
  const std::vector<double> v{1, 2, 3, 4, 5, 6, 7, 8};
  const auto seed = random_pick_seed(42, "sys", "s1");
  EXPECT_EQ(group_measurements(scores(v), seed).values.random, group_measurements(scores(v), seed).values.random);
  EXPECT_NE(random_pick_seed(42, "sys", "s1"), random_pick_seed(42, "sys", "s2"));
  EXPECT_NE(random_pick_seed(42, "sys", "s1"), random_pick_seed(42, "other", "s1"));
}

TEST(Strategies, NamesRoundTrip) {
  for (Strategy s : all_strategies()) EXPECT_EQ(parse_strategy(to_string(s)), s);
  EXPECT_THROW(parse_strategy("median"), ValidationError);
}

TEST(SystemReport, AveragesOverSources) {
  // BLEU of exact copies is 100 and of the empty string 0, so min per source
  // is 0 or 100 as constructed.
  const SourceSet src = sources(2);
  const RunSet run = run_of("m", {{"a b c d e", ""}, {"a b c d e", "a b c d e"}});
  const SystemReport r = system_report(run, src, kMetrics, 0);
  EXPECT_EQ(r.source_count, 2u);
  const Measurements& b = r.at("bleu").averages;
  EXPECT_DOUBLE_EQ(b.min, 50.0);
  EXPECT_DOUBLE_EQ(b.max, 100.0);
  EXPECT_DOUBLE_EQ(b.mean, 75.0);
  EXPECT_DOUBLE_EQ(b.std, 25.0);
  EXPECT_LE(r.at("ter").averages.min, r.at("ter").averages.mean);
  EXPECT_LE(r.at("ter").averages.mean, r.at("ter").averages.max);
}

TEST(SystemReport, DeterministicRunHasNoSpread) {
  const SourceSet src = sources(3);
  const RunSet run = run_of("g", {{"a b"}, {"a b c d e"}, {"x y"}}, 0.0);
  const SystemReport r = system_report(run, src, kMetrics, 0);
  for (const auto& m : r.metrics) {
    EXPECT_EQ(m.averages.std, 0.0) << m.metric.name;
    EXPECT_EQ(m.averages.min, m.averages.max) << m.metric.name;
  }
  EXPECT_EQ(r.at("glvs").averages.mean, 100.0);
}

TEST(SystemReport, MissingGroupsAreExcludedNotZeroFilled) {
  const SourceSet src = sources(3);
  RunSet run = run_of("m", {{"a b c d e"}, {"a b c d e"}});
  const SystemReport r = system_report(run, src, kMetrics, 0);
  EXPECT_EQ(r.source_count, 2u);
  EXPECT_EQ(r.excluded_sources, (std::vector<std::string>{"s2"}));
  EXPECT_DOUBLE_EQ(r.at("bleu").averages.mean, 100.0);
  EXPECT_THROW(system_report(run_of("e", {}), src, kMetrics, 0), ValidationError);
}

TEST(SystemReport, DominationIsPreservedByAveraging) {
  std::mt19937_64 rng(2);
  const SourceSet src = sources(20);
  std::vector<std::vector<std::string>> a, b;
  for (int i = 0; i < 20; ++i) {
    // b's pool is a's pool plus one empty candidate, so b's min never exceeds a's.
    std::vector<std::string> g;
    for (int k = 0; k < 4; ++k) g.push_back(rng() % 2 ? "a b c d e" : "a b x y e");
    a.push_back(g);
    g.push_back("");
    b.push_back(g);
  }
  const auto ra = system_report(run_of("a", a), src, kMetrics, 0);
  const auto rb = system_report(run_of("b", b), src, kMetrics, 0);
  EXPECT_GE(ra.at("bleu").averages.min, rb.at("bleu").averages.min);
}

TEST(SystemReport, SubsetMinAndMaxAreBoundedByThePool) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0, 100);
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<double> pool(10);
    for (auto& x : pool) x = u(rng);
    std::vector<double> sub(pool.begin(), pool.begin() + 1 + static_cast<long>(rng() % 10));
    const auto full = group_measurements(scores(pool), 0).values;
    const auto part = group_measurements(scores(sub), 0).values;
    EXPECT_GE(part.min, full.min);
    EXPECT_LE(part.max, full.max);
  }
}

TEST(Delta, SubtractsElementwise) {
  const SourceSet src = sources(2);
  const RunSet nd = run_of("m", {{"a b c d e", ""}, {"a b c d e", "a b c d e"}});
  const RunSet d = run_of("g", {{"a b c d e"}, {"a b c d e"}}, 0.0);
  const DeltaReport delta = delta_report(system_report(nd, src, kMetrics, 0), system_report(d, src, kMetrics, 0));
  EXPECT_EQ(delta.nd_system_id, "m");
  const auto& bleu = delta.metrics[0];
  EXPECT_EQ(bleu.metric.name, "bleu");
  EXPECT_DOUBLE_EQ(bleu.delta.min, -50.0);
  EXPECT_DOUBLE_EQ(bleu.delta.mean, -25.0);
  EXPECT_DOUBLE_EQ(bleu.delta.max, 0.0);
  const auto& glvs = delta.metrics[2];
  EXPECT_EQ(glvs.baseline.mean, 100.0);
  EXPECT_LT(glvs.delta.mean, 0.0);
}

TEST(Delta, GlvsHandExampleGivesMinus25) {
  SourceSet src;
  src.add({"s0", "src", LangPair::parse("en-de"), {"a b"}});
  const std::vector<MetricId> glvs{MetricId::of(NativeMetric::glvs)};
  const auto nd = system_report(run_of("m", {{"a b", "a c"}}), src, glvs, 0);
  const auto d = system_report(run_of("g", {{"a b"}}, 0.0), src, glvs, 0);
  EXPECT_DOUBLE_EQ(delta_report(nd, d).metrics[0].delta.mean, -25.0);
}

TEST(Delta, SelfDeltaOfSingletonRunIsZero) {
  const SourceSet src = sources(3);
  const auto r = system_report(run_of("g", {{"a b"}, {"c d"}, {"e"}}, 0.0), src, kMetrics, 0);
  for (const auto& m : delta_report(r, r).metrics) {
    for (Strategy s : all_strategies()) EXPECT_EQ(m.delta.get(s), 0.0);
  }
}

TEST(Delta, RejectsMismatchedReports) {
  const SourceSet src = sources(3);
  const auto a = system_report(run_of("a", {{"a"}, {"b"}, {"c"}}), src, kMetrics, 0);
  const auto fewer = system_report(run_of("b", {{"a"}, {"b"}}), src, kMetrics, 0);
  EXPECT_THROW(delta_report(a, fewer), ValidationError);
  const std::vector<MetricId> only_bleu{MetricId::of(NativeMetric::bleu)};
  const auto other_metrics = system_report(run_of("c", {{"a"}, {"b"}, {"c"}}), src, only_bleu, 0);
  EXPECT_THROW(delta_report(a, other_metrics), ValidationError);
}
