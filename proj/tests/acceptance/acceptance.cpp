// Acceptance suite: one PASS/FAIL line per criterion, exit 1 if any primary one fails.
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <unistd.h>

#include <fmt/format.h>

#include "json.hpp"
#include "ndmt/bridge.hpp"
#include "ndmt/cli.hpp"
#include "ndmt/correlation.hpp"
#include "ndmt/groupstats.hpp"
#include "ndmt/metrics.hpp"
#include "ndmt/ranking.hpp"
#include "ndmt/report_io.hpp"
#include "ndmt/rng.hpp"
#include "ndmt/synthgen.hpp"
#include "ndmt/tokenizer.hpp"
#include "oracles.hpp"

using namespace ndmt;
using json = nlohmann::json;
namespace fs = std::filesystem;

namespace {

// Tolerances and budgets.
constexpr double kPTolerance = 1e-12;
constexpr double kSigmas = 3.0;
constexpr std::uint64_t kSeed = 20240611;

struct Outcome {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok && pass) detail = what;
    pass = pass && ok;
  }
};

struct Criterion {
  std::string name;
  bool primary = true;
  double budget_seconds = 1.0;
  std::function<Outcome()> body;
};

TokenSequence words(const std::string& text, std::string_view lang = "en") { return tokenize_words(text, lang); }

fs::path scratch(const std::string& tag) {
  const fs::path p = fs::temp_directory_path() / fmt::format("ndmt-acceptance-{}-{}", tag, ::getpid());
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

int cli(std::vector<std::string> args, std::string* err = nullptr) {
  std::ostringstream out, e;
  const int code = run_cli(args, out, e);
  if (err) *err = e.str();
  return code;
}

std::map<std::string, std::string> snapshot(const fs::path& root) {
  std::map<std::string, std::string> files;
  for (const auto& entry : fs::recursive_directory_iterator(root)) {
    if (!entry.is_regular_file()) continue;
    std::ifstream in(entry.path(), std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    files[fs::relative(entry.path(), root).generic_string()] = s.str();
  }
  return files;
}

// ---------------------------------------------------------------- GLVS

Outcome glvs_determinism() {
  Outcome o;
  const std::vector<std::pair<std::string, std::string>> samples = {
      {"en", "The cat sat on the mat ."}, {"en", "x"}, {"zh", "我们今天去公园散步。"}, {"zh", "好"}};
  for (const auto& [lang, text] : samples) {
    for (std::size_t k : {1u, 2u, 10u, 50u}) {
      const std::vector<std::string> group(k, text);
      for (double s : glvs_scores(group, lang)) {
        o.require(s == 100.0, fmt::format("{} K={} \"{}\" scored {}", lang, k, text, s));
      }
    }
  }
  return o;
}

Outcome glvs_oracle() {
  Outcome o;
  const auto check = [&](const std::vector<std::string>& g, std::vector<double> expected) {
    o.require(glvs_scores(g, "en") == expected, fmt::format("hand example [{}]", fmt::join(g, " | ")));
  };
  check({"a b", "a c"}, {75.0, 75.0});
  check({"a b", "c d"}, {50.0, 50.0});

  // Every non-empty subset of a 4-word vocabulary as a candidate; groups of 1..3 with repetition.
  const std::vector<std::string> vocab = {"w", "x", "y", "z"};
  std::vector<std::string> cands;
  for (int mask = 1; mask < 16; ++mask) {
    std::string c;
    for (int b = 0; b < 4; ++b) {
      if (mask & (1 << b)) c += (c.empty() ? "" : " ") + vocab[static_cast<std::size_t>(b)];
    }
    cands.push_back(c);
  }
  std::size_t groups = 0;
  std::vector<std::size_t> idx;
  const std::function<void(std::size_t)> walk = [&](std::size_t depth) {
    if (!idx.empty()) {
      std::vector<std::string> g;
      std::vector<oracle::Words> w;
      for (auto i : idx) {
        g.push_back(cands[i]);
        w.push_back(oracle::split_spaces(cands[i]));
      }
      ++groups;
      o.require(glvs_scores(g, "en") == oracle::glvs(w), fmt::format("group [{}]", fmt::join(g, " | ")));
    }
    if (depth == 3) return;
    for (std::size_t i = 0; i < cands.size(); ++i) {
      idx.push_back(i);
      walk(depth + 1);
      idx.pop_back();
    }
  };
  walk(0);
  o.detail = o.pass ? fmt::format("{} groups", groups) : o.detail;
  return o;
}

// ---------------------------------------------------------------- metrics

Outcome metric_fixpoints() {
  Outcome o;
  Rng rng(derive_seed(kSeed, "fixpoints"));
  const auto lexicon = [&](std::size_t i) { return fmt::format("w{}", i); };
  for (int n = 0; n < 1000; ++n) {
    std::string text;
    const std::size_t len = 4 + rng.below(27);
    for (std::size_t i = 0; i < len; ++i) text += (i ? " " : "") + lexicon(rng.below(40));
    if (rng.bernoulli(0.3)) text += " .";
    const TokenSequence t = words(text);
    const std::vector<TokenSequence> refs{t};
    const std::vector<std::string> raw{text};
    o.require(bleu(t, refs) == 100.0, "BLEU fixpoint: " + text);
    o.require(chrfpp(text, raw) == 100.0, "ChrF++ fixpoint: " + text);
    o.require(rouge(t, refs, RougeVariant::one) == 100.0 && rouge(t, refs, RougeVariant::two) == 100.0 &&
                  rouge(t, refs, RougeVariant::lcs) == 100.0,
              "ROUGE fixpoint: " + text);
    o.require(ter(t, refs) == 0.0, "TER fixpoint: " + text);
  }

  std::vector<oracle::Words> seqs{{}};
  for (std::size_t start = 0; seqs.back().size() < 6;) {
    const std::size_t end = seqs.size();
    for (std::size_t i = start; i < end; ++i) {
      for (const char* tok : {"a", "b", "c"}) {
        oracle::Words w = seqs[i];
        w.push_back(tok);
        seqs.push_back(std::move(w));
      }
    }
    start = end;
  }
  std::size_t pairs = 0;
  for (const auto& hyp : seqs) {
    const auto arrangements = oracle::shift_distances(hyp);
    for (const auto& ref : seqs) {
      const int expected = oracle::ter_edits(arrangements, ref);
      const int got = ter_edits(hyp, ref);
      ++pairs;
      if (got != expected) {
        o.require(false, fmt::format("TER [{}] vs [{}]: {} != {}", fmt::join(hyp, " "), fmt::join(ref, " "), got,
                                     expected));
        return o;
      }
    }
  }
  o.detail = fmt::format("1000 sentences, {} TER pairs", pairs);
  return o;
}

// ---------------------------------------------------------------- correlation

Outcome p_anchors() {
  Outcome o;
  const std::vector<double> x{1, 2, 3, 4, 5};
  const std::vector<double> swap_ends{1, 2, 3, 5, 4};   // rho 0.9, tau 0.8
  const Coefficient r = spearman(x, swap_ends);
  const Coefficient t = kendall(x, swap_ends);
  const Coefficient perfect = spearman(x, x);
  o.require(std::abs(r.value - 0.9) < kPTolerance && std::abs(r.p - 5.0 / 120.0) < kPTolerance,
            fmt::format("rho {} p {}", r.value, r.p));
  o.require(std::abs(t.value - 0.8) < kPTolerance && std::abs(t.p - 5.0 / 120.0) < kPTolerance,
            fmt::format("tau {} p {}", t.value, t.p));
  o.require(perfect.value == 1.0 && std::abs(perfect.p - 1.0 / 120.0) < kPTolerance,
            fmt::format("rho=1 p {}", perfect.p));
  o.require(format_p_value(perfect.p) == "0.00", "rho=1 p prints as " + format_p_value(perfect.p));
  o.require(format_p_value(r.p) == "0.04" && format_p_value(t.p) == "0.04", "rank-swap p prints as " + format_p_value(r.p));
  return o;
}

// ---------------------------------------------------------------- group statistics

Outcome group_contract() {
  Outcome o;
  Rng rng(derive_seed(kSeed, "groups"));
  const MetricId metric = MetricId::of(NativeMetric::bleu);
  for (int g = 0; g < 200; ++g) {
    GroupScores s{metric, fmt::format("g{}", g), {}};
    const std::size_t k = 1 + rng.below(12);
    const bool constant = rng.bernoulli(0.2);
    const double c = rng.uniform() * 100.0;
    for (std::size_t i = 0; i < k; ++i) s.per_candidate.push_back(constant ? c : std::round(rng.uniform() * 400) / 4);
    const bool all_equal = std::all_of(s.per_candidate.begin(), s.per_candidate.end(),
                                       [&](double v) { return v == s.per_candidate.front(); });
    const Measurements m = group_measurements(s, derive_seed(kSeed, static_cast<std::uint64_t>(g))).values;
    o.require(m.min <= m.random && m.random <= m.max, fmt::format("group {}: random outside [min, max]", g));
    o.require(m.min <= m.mean && m.mean <= m.max, fmt::format("group {}: mean outside [min, max]", g));
    o.require((m.std == 0.0) == all_equal, fmt::format("group {}: std {} but constant={}", g, m.std, all_equal));
  }

  // Random pick averaged over 10,000 seeds.
  constexpr int kDraws = 10000;
  const std::vector<std::vector<double>> groups = {{0, 100}, {12.5, 40, 40, 77.25, 99}, {1, 2, 3, 4, 5, 6, 7, 8, 9, 10}};
  for (const auto& values : groups) {
    const GroupScores s{metric, "g", values};
    double sum = 0.0;
    Measurements first{};
    for (int seed = 0; seed < kDraws; ++seed) {
      const Measurements m = group_measurements(s, static_cast<std::uint64_t>(seed)).values;
      if (seed == 0) first = m;
      sum += m.random;
    }
    const double sigma = first.std / std::sqrt(static_cast<double>(kDraws));
    const double avg = sum / kDraws;
    o.require(std::abs(avg - first.mean) <= kSigmas * sigma,
              fmt::format("random average {} vs mean {} (3 sigma {})", avg, first.mean, kSigmas * sigma));
  }
  return o;
}

// ---------------------------------------------------------------- buckets

json buckets_manifest(std::uint64_t seed) {
  const std::vector<double> dropout = {0.0, 0.012, 0.025, 0.04, 0.06};
  json profiles = json::array();
  for (std::size_t i = 0; i < dropout.size(); ++i) {
    profiles.push_back({{"system", fmt::format("S{}", i)}, {"dropout_rate", dropout[i]}, {"diversity", 0.2}});
  }
  return {{"out", "gen"},
          {"synth", {{"sources", 200}, {"seed", seed}, {"sizes", {10, 20, 50}}, {"profiles", profiles}}}};
}

json read_json(const fs::path& p) {
  std::ifstream in(p);
  return json::parse(in);
}

Outcome buckets_reproduction() {
  Outcome o;
  std::string runs[2];
  for (int pass = 0; pass < 2; ++pass) {
    const fs::path dir = scratch(fmt::format("buckets{}", pass));
    std::ofstream(dir / "m.json") << buckets_manifest(kSeed).dump(2);
    const std::string gen = (dir / "gen" / "manifest.json").string();
    std::string err;
    for (const auto& args : std::vector<std::vector<std::string>>{{"synth", "--manifest", (dir / "m.json").string()},
                                                                   {"evaluate", "--manifest", gen},
                                                                   {"consistency", "--manifest", gen}}) {
      if (cli(args, &err) != kExitOk) {
        o.require(false, args[0] + " failed: " + err);
        return o;
      }
    }
    const fs::path results = dir / "gen" / "results" / "consistency";
    const json table = read_json(results / "consistency.json");
    runs[pass] = table.dump() + read_json(results / "buckets.json").dump();
    if (pass == 0) {
      double worst = 1.0;
      std::string best_below;
      for (const auto& c : table.at("cells")) {
        const std::string metric = c.at("metric");
        const std::string strategy = c.at("strategy");
        const double ev = std::min(c.at("rho").get<double>(), c.at("tau").get<double>());
        const bool loss = metric == "ter";
        if (strategy == (loss ? "max" : "min")) worst = std::min(worst, ev);
        if (strategy == (loss ? "min" : "max") && ev < 1.0 && best_below.empty()) {
          best_below = fmt::format("{} k{}", metric, c.at("size").get<int>());
        }
      }
      o.require(worst == 1.0, fmt::format("worst-case evidence {}", worst));
      o.require(!best_below.empty(), "best-case strategy is 1.0 everywhere");
      if (o.pass) o.detail = "worst = 1.0 on every size pair; best < 1 at " + best_below;
    }
    fs::remove_all(dir);
  }
  o.require(runs[0] == runs[1], "consistency output differs between runs");
  return o;
}

// ---------------------------------------------------------------- temperature trend

Outcome temperature_trend() {
  Outcome o;
  const std::vector<double> diversities = {0.0, 0.25, 0.5, 0.75, 1.0};
  constexpr int kSeeds = 20;
  const MetricId glvs = MetricId::of(NativeMetric::glvs);
  const std::vector<MetricId> metrics{glvs};
  std::vector<std::vector<double>> means(diversities.size());
  for (int s = 0; s < kSeeds; ++s) {
    const std::uint64_t seed = derive_seed(kSeed, static_cast<std::uint64_t>(s));
    const SourceSet sources = gen_sources({.count = 60, .seed = seed});
    for (std::size_t d = 0; d < diversities.size(); ++d) {
      SystemProfile p;
      p.system_id = "T";
      p.diversity = diversities[d];
      p.base_quality = 0.9;
      p.seed = derive_seed(seed, static_cast<std::uint64_t>(d));
      const SystemReport r = system_report(gen_run(p, sources, 10), sources, metrics, seed);
      means[d].push_back(r.at("glvs").averages.mean);
    }
  }
  std::vector<std::string> cells;
  for (std::size_t d = 0; d + 1 < diversities.size(); ++d) {
    std::vector<double> diff;
    for (int s = 0; s < kSeeds; ++s) diff.push_back(means[d][s] - means[d + 1][s]);
    const double m = oracle::mean(diff);
    double var = 0.0;
    for (double v : diff) var += (v - m) * (v - m);
    const double se = std::sqrt(var / (kSeeds - 1)) / std::sqrt(static_cast<double>(kSeeds));
    o.require(m > kSigmas * se, fmt::format("diversity {} -> {}: drop {} not above 3 sigma {}", diversities[d],
                                            diversities[d + 1], m, kSigmas * se));
    cells.push_back(fmt::format("{:.1f}", oracle::mean(means[d])));
  }
  cells.push_back(fmt::format("{:.1f}", oracle::mean(means.back())));
  if (o.pass) o.detail = "group-mean GLVS " + fmt::format("{}", fmt::join(cells, " > "));
  return o;
}

// ---------------------------------------------------------------- ExpectoSample

SystemReport bleu_report(const std::string& id, std::size_t k, double value) {
  SystemReport r;
  r.system_id = id;
  r.sampling_size = k;
  r.metrics.push_back({MetricId::of(NativeMetric::bleu), {value - 10, value + 10, value, value, 5}});
  return r;
}

Outcome expectosample_contract() {
  Outcome o;
  const MetricId bleu_id = MetricId::of(NativeMetric::bleu);
  const std::vector<MetricId> metrics{bleu_id};
  const std::vector<double> base{50, 40, 30, 20, 10};
  const auto family = [&](bool swap_at_50) {
    ReportsBySize r;
    for (std::size_t k : {10u, 20u, 50u}) {
      std::vector<double> v = base;
      if (swap_at_50 && k == 50) std::swap(v[3], v[4]);
      for (std::size_t i = 0; i < v.size(); ++i) r[k].push_back(bleu_report(fmt::format("S{}", i), k, v[i]));
    }
    return r;
  };
  const auto dup = expecto_sample(family(false), metrics, 0.95);
  o.require(dup.size() == 1 && dup[0].reliable && dup[0].evidence == 1.0, "duplicated reports not reliable");

  const ReportsBySize swapped = family(true);
  const auto v = expecto_sample(swapped, metrics, 0.95);
  o.require(v.size() == 1 && !v[0].reliable, "one-swap metric judged reliable");
  if (!o.pass) return o;
  double expected = 1.0;
  for (const auto& pair : v[0].pairs) {
    std::vector<double> a, b;
    for (std::size_t i = 0; i < base.size(); ++i) {
      a.push_back(swapped.at(pair.size_a)[i].at("bleu").averages.mean);
      b.push_back(swapped.at(pair.size_b)[i].at("bleu").averages.mean);
    }
    const double rho = oracle::spearman(a, b), tau = oracle::kendall(a, b);
    o.require(std::abs(pair.result.rho - rho) < kPTolerance && std::abs(pair.result.tau - tau) < kPTolerance,
              fmt::format("pair {}-{} differs from oracle", pair.size_a, pair.size_b));
    expected = std::min({expected, rho, tau});
  }
  o.require(std::abs(v[0].evidence - expected) < kPTolerance && std::abs(expected - 0.8) < kPTolerance,
            fmt::format("evidence {} vs oracle {}", v[0].evidence, expected));
  if (o.pass) o.detail = fmt::format("one-swap evidence {:.2f} < 0.95", v[0].evidence);
  return o;
}

// ---------------------------------------------------------------- end to end

Outcome end_to_end() {
  Outcome o;
  const fs::path dir = scratch("e2e");
  std::ofstream(dir / "m.json") << buckets_manifest(kSeed + 1).dump(2);
  std::map<std::string, std::string> first;
  for (int pass = 0; pass < 2; ++pass) {
    fs::remove_all(dir / "gen");
    const std::string gen = (dir / "gen" / "manifest.json").string();
    std::string err;
    for (const auto& args : std::vector<std::vector<std::string>>{{"synth", "--manifest", (dir / "m.json").string()},
                                                                   {"evaluate", "--manifest", gen},
                                                                   {"delta", "--manifest", gen},
                                                                   {"consistency", "--manifest", gen},
                                                                   {"expectosample", "--manifest", gen}}) {
      if (cli(args, &err) != kExitOk) {
        o.require(false, args[0] + " failed: " + err);
        fs::remove_all(dir);
        return o;
      }
    }
    const auto files = snapshot(dir / "gen");
    if (pass == 0) {
      first = files;
      continue;
    }
    o.require(files.size() == first.size(), "different file sets");
    for (const auto& [name, text] : first) {
      const auto it = files.find(name);
      o.require(it != files.end() && it->second == text, "differs: " + name);
    }
    if (o.pass) o.detail = fmt::format("{} files byte-identical", files.size());
  }
  fs::remove_all(dir);
  return o;
}

// ---------------------------------------------------------------- bridge

Outcome bridge_conformance() {
  Outcome o;
  ExternalMetricConfig cfg;
  cfg.metric_name = "echo";
  cfg.command = std::string("'") + NDMT_FAKE_SIDECAR + "' --mode echo";
  cfg.batch_size = 16;
  Rng rng(derive_seed(kSeed, "bridge"));
  std::vector<BridgeItem> items;
  std::vector<double> expected;
  for (int i = 0; i < 1000; ++i) {
    std::string cand;
    const std::size_t len = rng.below(120);
    for (std::size_t c = 0; c < len; ++c) cand += static_cast<char>('a' + rng.below(26));
    if (i % 7 == 0) cand += " 翻译";
    const std::string src = std::string(1 + rng.below(80), 's') + "ü";
    items.push_back({src, cand, {"ref"}});
    expected.push_back(std::min(1.0, static_cast<double>(oracle::codepoints(cand).size()) /
                                         std::max<double>(1.0, static_cast<double>(oracle::codepoints(src).size()))));
  }
  const std::vector<double> got = score_batch_external(cfg, items);
  o.require(got.size() == items.size(), "item count");
  std::size_t mismatches = 0;
  for (std::size_t i = 0; i < got.size() && i < expected.size(); ++i) mismatches += got[i] != expected[i];
  o.require(mismatches == 0, fmt::format("{} echo scores differ from the in-process formula", mismatches));

  const auto fails = [&](const std::string& mode, const std::string& needle) {
    ExternalMetricConfig bad = cfg;
    bad.command += " --mode " + mode + " --at 5";
    try {
      score_batch_external(bad, std::span(items).first(20));
    } catch (const std::exception& e) {
      return std::string(e.what()).find(needle) != std::string::npos;
    }
    return false;
  };
  o.require(fails("drop", "id"), "dropped response not reported");
  o.require(fails("scale", "1.7"), "out-of-scale score not reported");
  o.require(fails("error", "error"), "error line not reported");
  ExternalMetricConfig shuffled = cfg;
  shuffled.command += " --mode shuffle";
  o.require(score_batch_external(shuffled, items) == got, "shuffled responses not reordered");
  if (o.pass) o.detail = "1000 items exact; drop/scale/error/shuffle handled";
  return o;
}

}  // namespace

int main() {
  const std::vector<Criterion> criteria = {
      {"GLVS determinism anchor", true, 1, glvs_determinism},
      {"GLVS hand oracle and brute force", true, 10, glvs_oracle},
      {"Metric fixpoints and TER oracle", true, 60, metric_fixpoints},
      {"Permutation p-value anchor", true, 1, p_anchors},
      {"Group-measurement contract", true, 30, group_contract},
      {"Synthetic Buckets reproduction", true, 120, buckets_reproduction},
      {"Temperature-trend shape", true, 120, temperature_trend},
      {"ExpectoSample contract", true, 5, expectosample_contract},
      {"End-to-end determinism", true, 300, end_to_end},
      {"Bridge conformance", false, 30, bridge_conformance},
  };
  bool ok = true;
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome out;
    try {
      out = c.body();
    } catch (const std::exception& e) {
      out.pass = false;
      out.detail = std::string("exception: ") + e.what();
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (secs > c.budget_seconds) {
      out.detail = fmt::format("took {:.2f} s, budget {} s; {}", secs, c.budget_seconds, out.detail);
      out.pass = false;
    }
    if (c.primary) ok = ok && out.pass;
    std::cout << fmt::format("{} [{}] {} ({:.2f} s){}{}\n", out.pass ? "PASS" : "FAIL",
                             c.primary ? "PRIMARY" : "SECONDARY", c.name, secs, out.detail.empty() ? "" : ": ",
                             out.detail)
              << std::flush;
  }
  return ok ? 0 : 1;
}
