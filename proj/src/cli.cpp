#include "ndmt/cli.hpp"

#include <fmt/format.h>

#include <filesystem>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "ndmt/bridge.hpp"
#include "ndmt/corpus.hpp"
#include "ndmt/error.hpp"
#include "ndmt/groupstats.hpp"
#include "ndmt/manifest.hpp"
#include "ndmt/ranking.hpp"
#include "ndmt/report_io.hpp"
#include "ndmt/rng.hpp"
#include "ndmt/synthgen.hpp"

namespace ndmt {
namespace {

using json = nlohmann::json;
namespace fs = std::filesystem;

struct Flags {
  std::string manifest;
  std::optional<std::uint64_t> seed;
  std::vector<std::size_t> sizes;
  std::optional<double> threshold;
  std::optional<std::size_t> base_size;
  std::string out;
  // synth only
  std::vector<std::string> profiles;
  std::optional<std::size_t> source_count;
};

std::string error_line(std::string_view kind, std::string_view message) {
  return json{{"error", kind}, {"message", message}}.dump() + "\n";
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

// File-name-safe form of a system id.
std::string file_stem(std::string_view id) {
  std::string s;
  for (char c : id) {
    const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '-' ||
                    c == '_' || c == '.';
    s += ok ? c : '_';
  }
  return s.empty() ? "_" : s;
}

std::string size_stem(std::string_view id, std::size_t k) { return fmt::format("{}__k{}", file_stem(id), k); }

template <typename Writer>
std::string to_text(Writer&& w) {
  std::ostringstream ss;
  w(ss);
  return ss.str();
}

RunManifest load_with_overrides(const Flags& f) {
  if (f.manifest.empty()) throw ValidationError("--manifest is required");
  RunManifest m = load_manifest(f.manifest);
  if (f.seed) m.seed = *f.seed;
  if (!f.sizes.empty()) m.sizes = f.sizes;
  if (f.base_size) m.base_size = *f.base_size;
  if (!f.out.empty()) m.out = f.out;
  return m;
}

fs::path reports_dir(const RunManifest& m) { return m.out / "reports"; }

// ---------------------------------------------------------------- evaluate

struct Job {
  RunSet run;
  std::size_t size = 0;
  bool baseline = false;
};

struct Failure {
  std::string system;
  std::size_t size = 0;
  std::string metric;
  std::string message;
};

std::vector<Job> collect_jobs(const RunManifest& m, const SourceSet& sources, json& log) {
  std::vector<Job> jobs;
  std::set<std::pair<std::string, std::size_t>> seen;
  const auto add = [&](Job job) {
    if (!seen.insert({job.run.system_id + (job.baseline ? "\x1f" "baseline" : ""), job.size}).second) {
      throw ValidationError(fmt::format("system \"{}\" appears twice at sampling size {}; give runs distinct ids",
                                        job.run.system_id, job.size));
    }
    for (const auto& w : job.run.diagnostics.warnings) {
      log["warnings"].push_back(fmt::format("{} (k={}): {}", job.run.system_id, job.size, w));
    }
    jobs.push_back(std::move(job));
  };
  for (const auto& file : m.candidates) {
    for (RunSet& run : load_runs(file.path, sources)) {
      const std::size_t pool = run.pool_size();
      if (pool == 0) continue;
      std::vector<std::size_t> sizes;
      if (file.size) sizes = {*file.size};
      else if (!m.sizes.empty()) sizes = m.sizes;
      else sizes = {pool};
      for (std::size_t k : sizes) {
        if (k > pool) {
          log["warnings"].push_back(fmt::format("{}: pool size {} is smaller than sampling size {}; skipped",
                                                run.system_id, pool, k));
          continue;
        }
        add({k == pool ? run : subsample_run(run, k, m.subsample_seed), k, false});
      }
    }
  }
  for (const auto& file : m.baselines) {
    for (RunSet& run : load_runs(file, sources)) {
      if (run.decoding_mode != DecodingMode::deterministic) {
        log["warnings"].push_back(fmt::format("baseline \"{}\" is not a temperature-0 run", run.system_id));
      }
      const std::size_t pool = run.pool_size();
      add({std::move(run), pool, true});
    }
  }
  return jobs;
}

int cmd_evaluate(const Flags& flags, std::ostream& out, std::ostream& err) {
  const RunManifest m = load_with_overrides(flags);
  validate_manifest_inputs(m);
  const SourceSet sources = load_sources(*m.sources);
  json log = {{"warnings", json::array()}, {"excluded_sources", json::array()}, {"failures", json::array()}};
  std::vector<Job> jobs = collect_jobs(m, sources, log);
  if (jobs.empty()) throw ValidationError("manifest yields no runs to evaluate");

  std::vector<MetricId> native;
  for (const auto& metric : m.metrics) {
    if (metric.native) native.push_back(metric);
  }
  const MetricOptions options{!m.case_sensitive, m.cjk_codepoints};
  const fs::path dir = reports_dir(m);
  std::vector<Failure> failures;
  json index = json::array();
  std::vector<SystemReport> all;

  for (const Job& job : jobs) {
    ScoreTable table = score_run(job.run, sources, native, options);
    std::vector<MetricId> ok;
    for (const auto& metric : m.metrics) {
      if (metric.native) {
        ok.push_back(metric);
        continue;
      }
      try {
        table[metric.name] = score_run_external(*m.external(metric.name), job.run, sources);
        ok.push_back(metric);
      } catch (const Error& e) {
        failures.push_back({job.run.system_id, job.size, metric.name, e.what()});
      }
    }
    SystemReport report = build_report(job.run, sources, ok, table, m.seed);
    if (!job.baseline) report.sampling_size = job.size;
    const std::string stem = job.baseline ? "baseline/" + file_stem(report.system_id)
                                          : "nd/" + size_stem(report.system_id, job.size);
    write_text_file(dir / (stem + ".json"), dump(report_to_json(report)));
    write_text_file(dir / (stem + ".csv"), to_text([&](std::ostream& s) {
                      write_reports_csv(s, std::span<const SystemReport>(&report, 1));
                    }));
    index.push_back({{"system", report.system_id},
                     {"role", job.baseline ? "baseline" : "nd"},
                     {"sampling_size", report.sampling_size},
                     {"file", stem + ".json"}});
    if (!report.excluded_sources.empty()) {
      log["excluded_sources"].push_back(
          {{"system", report.system_id}, {"sampling_size", report.sampling_size}, {"sources", report.excluded_sources}});
    }
    out << fmt::format("evaluated {} (k={}, {} sources)\n", report.system_id, report.sampling_size,
                       report.source_count);
    all.push_back(std::move(report));
  }
  for (const auto& f : failures) {
    log["failures"].push_back({{"system", f.system}, {"sampling_size", f.size}, {"metric", f.metric}, {"message", f.message}});
    err << error_line("protocol", fmt::format("{} (k={}): {}", f.system, f.size, f.message));
  }
  write_text_file(dir / "index.json", dump({{"reports", index}}));
  write_text_file(dir / "reports.csv", to_text([&](std::ostream& s) { write_reports_csv(s, all); }));
  write_text_file(dir / "evaluate_log.json", dump(log));
  return failures.empty() ? kExitOk : kExitRuntime;
}

// ---------------------------------------------------------------- loaded reports

struct LoadedReports {
  std::vector<SystemReport> nd;
  std::vector<SystemReport> baselines;
};

LoadedReports load_reports(const RunManifest& m) {
  const fs::path dir = reports_dir(m);
  if (!fs::exists(dir / "index.json")) {
    throw ValidationError("no reports under \"" + dir.string() + "\"; run `ndmt-eval evaluate` first");
  }
  json index;
  try {
    index = json::parse(read_text_file(dir / "index.json"));
  } catch (const json::parse_error& e) {
    throw ValidationError("corrupt report index: " + std::string(e.what()));
  }
  LoadedReports out;
  for (const auto& entry : index.at("reports")) {
    const std::string file = entry.at("file").get<std::string>();
    json j;
    try {
      j = json::parse(read_text_file(dir / file));
    } catch (const json::parse_error& e) {
      throw ValidationError("corrupt report " + file + ": " + e.what());
    }
    SystemReport r = report_from_json(j);
    (entry.at("role").get<std::string>() == "baseline" ? out.baselines : out.nd).push_back(std::move(r));
  }
  return out;
}

// Manifest metrics present in every report, in manifest order.
std::vector<MetricId> common_metrics(const RunManifest& m, std::span<const SystemReport> reports, std::ostream& out) {
  std::vector<MetricId> metrics;
  for (const auto& metric : m.metrics) {
    bool everywhere = true;
    for (const auto& r : reports) everywhere = everywhere && r.find(metric.name);
    if (everywhere) metrics.push_back(metric);
    else out << fmt::format("note: metric {} is missing from some reports and is skipped\n", metric.name);
  }
  if (metrics.empty()) throw ValidationError("no metric is present in every report");
  return metrics;
}

ReportsBySize by_size(const std::vector<SystemReport>& nd, std::span<const std::size_t> only) {
  ReportsBySize out;
  for (const auto& r : nd) {
    if (only.empty() || std::find(only.begin(), only.end(), r.sampling_size) != only.end()) {
      out[r.sampling_size].push_back(r);
    }
  }
  for (std::size_t k : only) {
    if (!out.count(k)) throw ValidationError(fmt::format("no reports at sampling size {}", k));
  }
  return out;
}

const SystemReport& baseline_for(const RunManifest& m, const SystemReport& nd, std::span<const SystemReport> bases) {
  const auto it = m.baseline_map.find(nd.system_id);
  const std::string& id = it == m.baseline_map.end() ? nd.system_id : it->second;
  for (const auto& b : bases) {
    if (b.system_id == id) return b;
  }
  throw ValidationError(fmt::format("missing baseline \"{}\" for system \"{}\"", id, nd.system_id));
}

// ---------------------------------------------------------------- delta

int cmd_delta(const Flags& flags, std::ostream& out) {
  const RunManifest m = load_with_overrides(flags);
  const LoadedReports reports = load_reports(m);
  if (reports.nd.empty()) throw ValidationError("no ND reports to compare");
  if (reports.baselines.empty()) throw ValidationError("missing baseline: the manifest lists no baselines");
  std::vector<DeltaReport> deltas;
  std::map<std::size_t, std::vector<DeltaReport>> per_size;
  for (const auto& nd : reports.nd) {
    if (!flags.sizes.empty() &&
        std::find(flags.sizes.begin(), flags.sizes.end(), nd.sampling_size) == flags.sizes.end()) {
      continue;
    }
    deltas.push_back(delta_report(nd, baseline_for(m, nd, reports.baselines)));
    per_size[nd.sampling_size].push_back(deltas.back());
  }
  const fs::path dir = m.out / "delta";
  write_text_file(dir / "deltas.csv", to_text([&](std::ostream& s) { write_deltas_csv(s, deltas); }));
  json arr = json::array();
  for (const auto& d : deltas) arr.push_back(delta_to_json(d));
  write_text_file(dir / "deltas.json", dump(arr));
  for (const auto& [k, ds] : per_size) {
    for (Strategy st : all_strategies()) {
      write_text_file(dir / fmt::format("grid_k{}_{}.csv", k, to_string(st)),
                      to_text([&](std::ostream& s) { write_delta_grid_csv(s, ds, st); }));
    }
  }
  out << fmt::format("wrote {} delta reports to {}\n", deltas.size(), dir.string());
  return kExitOk;
}

// ---------------------------------------------------------------- rank

int cmd_rank(const Flags& flags, std::ostream& out) {
  const RunManifest m = load_with_overrides(flags);
  const LoadedReports reports = load_reports(m);
  const ReportsBySize sized = by_size(reports.nd, flags.sizes);
  if (sized.empty()) throw ValidationError("no ND reports to rank");
  const fs::path dir = m.out / "rank";
  const RankingOptions options{m.std_ascending};
  for (const auto& [k, rs] : sized) {
    const std::vector<MetricId> metrics = common_metrics(m, rs, out);
    std::vector<Ranking> rankings;
    for (const auto& metric : metrics) {
      for (Strategy st : all_strategies()) rankings.push_back(rank_systems(rs, metric, st, options));
    }
    write_text_file(dir / fmt::format("rankings_k{}.csv", k),
                    to_text([&](std::ostream& s) { write_rankings_csv(s, rankings); }));
    json arr = json::array();
    for (const auto& r : rankings) arr.push_back(ranking_to_json(r));
    write_text_file(dir / fmt::format("rankings_k{}.json", k), dump(arr));

    if (!reports.baselines.empty()) {
      std::vector<SystemReport> paired;
      std::map<std::string, std::string> map;
      for (const auto& nd : rs) {
        const SystemReport& b = baseline_for(m, nd, reports.baselines);
        paired.push_back(b);
        map[nd.system_id] = b.system_id;
      }
      const std::vector<MetricId> dm = common_metrics(m, paired, out);
      std::vector<MetricId> both;
      for (const auto& metric : metrics) {
        if (std::find(dm.begin(), dm.end(), metric) != dm.end()) both.push_back(metric);
      }
      const auto cells = dmt_ndmt_consistency(rs, paired, both, map);
      write_text_file(dir / fmt::format("dmt_ndmt_k{}.csv", k),
                      to_text([&](std::ostream& s) { write_strategy_correlations_csv(s, cells); }));
      write_text_file(dir / fmt::format("dmt_ndmt_k{}_table.csv", k),
                      to_text([&](std::ostream& s) { write_strategy_correlation_table(s, cells); }));
      write_text_file(dir / fmt::format("dmt_ndmt_k{}.json", k), dump(strategy_correlations_to_json(cells)));
    }
    out << fmt::format("ranked {} systems at k={}\n", rs.size(), k);
  }
  return kExitOk;
}

// ---------------------------------------------------------------- consistency / buckets / expectosample

struct Consistency {
  ConsistencyTable table;
  BucketsReport buckets;
};

Consistency compute_consistency(const RunManifest& m, const Flags& flags, std::ostream& out) {
  const LoadedReports reports = load_reports(m);
  const ReportsBySize sized = by_size(reports.nd, m.sizes);
  const std::vector<MetricId> metrics = common_metrics(m, reports.nd, out);
  Consistency c;
  c.table = cross_size_consistency(sized, metrics, m.base_size);
  c.buckets = detect_buckets(c.table, flags.threshold.value_or(m.buckets_threshold));
  return c;
}

void write_buckets(const fs::path& dir, const BucketsReport& b) {
  write_text_file(dir / "buckets.json", dump(buckets_to_json(b)));
}

int cmd_consistency(const Flags& flags, std::ostream& out) {
  const RunManifest m = load_with_overrides(flags);
  const Consistency c = compute_consistency(m, flags, out);
  const fs::path dir = m.out / "consistency";
  write_text_file(dir / "consistency.csv", to_text([&](std::ostream& s) { write_consistency_csv(s, c.table); }));
  write_text_file(dir / "consistency_table.csv",
                  to_text([&](std::ostream& s) { write_consistency_table(s, c.table); }));
  write_text_file(dir / "consistency.json", dump(consistency_to_json(c.table)));
  write_buckets(dir, c.buckets);
  out << fmt::format("consistency: base size {}, {} cells\n", c.table.base_size, c.table.cells.size());
  return kExitOk;
}

int cmd_buckets(const Flags& flags, std::ostream& out) {
  const RunManifest m = load_with_overrides(flags);
  const Consistency c = compute_consistency(m, flags, out);
  write_buckets(m.out / "consistency", c.buckets);
  for (const auto& e : c.buckets.entries) {
    out << fmt::format("{:<7} evidence {:.4f} {}\n", to_string(e.role), e.evidence, e.stable ? "stable" : "unstable");
  }
  return kExitOk;
}

int cmd_expectosample(const Flags& flags, std::ostream& out) {
  const RunManifest m = load_with_overrides(flags);
  const LoadedReports reports = load_reports(m);
  const ReportsBySize sized = by_size(reports.nd, m.sizes);
  const std::vector<MetricId> metrics = common_metrics(m, reports.nd, out);
  const auto verdicts = expecto_sample(sized, metrics, flags.threshold.value_or(m.threshold));
  const auto robust = robust_systems(sized, verdicts);
  const fs::path dir = m.out / "expectosample";
  write_text_file(dir / "verdicts.csv", to_text([&](std::ostream& s) { write_verdicts_csv(s, verdicts); }));
  write_text_file(dir / "verdicts.json", dump(verdicts_to_json(verdicts, robust)));
  for (const auto& v : verdicts) {
    out << fmt::format("{:<14} {} (evidence {:.4f})\n", v.metric.name, v.reliable ? "reliable" : "unreliable",
                       v.evidence);
  }
  return kExitOk;
}

// ---------------------------------------------------------------- synth

SystemProfile parse_profile_flag(const std::string& text) {
  // id:base_quality:diversity:dropout_rate[:seed]
  std::vector<std::string> parts;
  std::size_t start = 0, colon;
  while ((colon = text.find(':', start)) != std::string::npos) {
    parts.push_back(text.substr(start, colon - start));
    start = colon + 1;
  }
  parts.push_back(text.substr(start));
  if (parts.size() != 4 && parts.size() != 5) {
    throw ValidationError("--profile expects id:base_quality:diversity:dropout_rate[:seed], got \"" + text + "\"");
  }
  SystemProfile p;
  p.system_id = parts[0];
  try {
    p.base_quality = std::stod(parts[1]);
    p.diversity = std::stod(parts[2]);
    p.dropout_rate = std::stod(parts[3]);
    if (parts.size() == 5) p.seed = std::stoull(parts[4]);
    else p.seed = 0;
  } catch (const std::exception&) {
    throw ValidationError("--profile \"" + text + "\" has a non-numeric field");
  }
  p.validate();
  return p;
}

int cmd_synth(const Flags& flags, std::ostream& out) {
  RunManifest m;
  if (!flags.manifest.empty()) m = load_manifest(flags.manifest);
  SynthSpec spec = m.synth.value_or(SynthSpec{});
  std::set<std::string> explicit_seed;
  if (m.synth && !flags.manifest.empty()) {
    const json raw = json::parse(read_text_file(flags.manifest));
    for (const auto& p : raw.at("synth").value("profiles", json::array())) {
      if (p.contains("seed")) explicit_seed.insert(p.at("system").get<std::string>());
    }
  }
  for (const auto& text : flags.profiles) {
    SystemProfile p = parse_profile_flag(text);
    if (std::count(text.begin(), text.end(), ':') == 4) explicit_seed.insert(p.system_id);
    spec.profiles.push_back(std::move(p));
  }
  if (spec.profiles.empty()) throw ValidationError("synth needs at least one profile (manifest synth.profiles or --profile)");
  if (flags.seed) spec.corpus.seed = *flags.seed;
  if (!flags.sizes.empty()) spec.sizes = flags.sizes;
  if (flags.source_count) spec.corpus.count = *flags.source_count;
  if (spec.sizes.empty()) throw ValidationError("synth needs at least one sampling size");
  std::set<std::string> ids;
  for (auto& p : spec.profiles) {
    if (!ids.insert(p.system_id).second) throw ValidationError("profile \"" + p.system_id + "\" is listed twice");
    if (!explicit_seed.count(p.system_id)) p.seed = derive_seed(spec.corpus.seed, p.system_id);
    if (spec.shared_dropout && !p.dropout_seed) p.dropout_seed = derive_seed(spec.corpus.seed, "shared-dropout");
  }
  const fs::path dir = !flags.out.empty() ? fs::path(flags.out)
                       : !flags.manifest.empty() ? m.out
                                                 : fs::path("ndmt-synth");

  const SourceSet sources = gen_sources(spec.corpus);
  write_text_file(dir / "sources.jsonl", to_text([&](std::ostream& s) { write_sources(s, sources); }));

  RunManifest gen;
  gen.base_dir = dir;
  gen.sources = dir / "sources.jsonl";
  gen.metrics = m.metrics.empty() ? std::vector<MetricId>{} : m.metrics;
  if (gen.metrics.empty()) {
    for (NativeMetric n : all_native_metrics()) gen.metrics.push_back(MetricId::of(n));
  }
  gen.external_metrics = m.external_metrics;
  gen.sizes = spec.sizes;
  gen.seed = spec.corpus.seed;
  gen.threshold = m.threshold;
  gen.buckets_threshold = m.buckets_threshold;
  gen.out = dir / "results";
  std::size_t files = 0;
  for (const auto& p : spec.profiles) {
    for (const auto& [k, run] : gen_size_family(p, sources, spec.sizes)) {
      const fs::path file = dir / "candidates" / (size_stem(p.system_id, k) + ".jsonl");
      write_text_file(file, to_text([&](std::ostream& s) { write_run(s, run); }));
      gen.candidates.push_back({file, k});
      ++files;
    }
    if (spec.baselines) {
      const RunSet base = gen_baseline(p, sources);
      const fs::path file = dir / "baselines" / (file_stem(base.system_id) + ".jsonl");
      write_text_file(file, to_text([&](std::ostream& s) { write_run(s, base); }));
      gen.baselines.push_back(file);
      gen.baseline_map[p.system_id] = base.system_id;
    }
  }
  write_text_file(dir / "manifest.json", dump(manifest_to_json(gen)));
  out << fmt::format("wrote {} sources, {} candidate files and {} baselines to {}\n", sources.size(), files,
                     gen.baselines.size(), dir.string());
  return kExitOk;
}

void add_common(CLI::App* sub, Flags& f) {
  sub->add_option("--manifest", f.manifest, "Run manifest (JSON)");
  sub->add_option("--seed", f.seed, "Seed for random picks and synthetic data");
  sub->add_option("--sizes", f.sizes, "Sampling sizes, e.g. 10,20,50")->delimiter(',');
  sub->add_option("--threshold", f.threshold, "Reliability or stability threshold");
  sub->add_option("--base-size", f.base_size, "Base sampling size for cross-size tables");
  sub->add_option("--out", f.out, "Output directory");
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Evaluation of non-deterministic translation systems", "ndmt-eval"};
  app.require_subcommand(1);
  Flags f;
  struct Sub {
    const char* name;
    const char* help;
  };
  const Sub subs[] = {{"evaluate", "Score candidate groups and write per-system reports"},
                      {"delta", "Differences between ND reports and their deterministic baselines"},
                      {"rank", "System rankings and D-MT/ND-MT correlation"},
                      {"consistency", "Ranking correlation across sampling sizes"},
                      {"expectosample", "Metric reliability across sampling sizes"},
                      {"synth", "Generate a synthetic corpus, candidate pools and manifest"},
                      {"buckets", "Worst-case strategy stability across sampling sizes"}};
  std::map<std::string, CLI::App*> handles;
  for (const auto& s : subs) {
    CLI::App* sub = app.add_subcommand(s.name, s.help);
    add_common(sub, f);
    handles[s.name] = sub;
  }
  handles["synth"]->add_option("--profile", f.profiles, "id:base_quality:diversity:dropout_rate[:seed]");
  handles["synth"]->add_option("--sources", f.source_count, "Number of synthetic sources");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << error_line("usage", e.what());
    return kExitValidation;
  }

  try {
    if (handles["evaluate"]->parsed()) return cmd_evaluate(f, out, err);
    if (handles["delta"]->parsed()) return cmd_delta(f, out);
    if (handles["rank"]->parsed()) return cmd_rank(f, out);
    if (handles["consistency"]->parsed()) return cmd_consistency(f, out);
    if (handles["expectosample"]->parsed()) return cmd_expectosample(f, out);
    if (handles["synth"]->parsed()) return cmd_synth(f, out);
    if (handles["buckets"]->parsed()) return cmd_buckets(f, out);
  } catch (const ValidationError& e) {
    err << error_line("validation", e.what());
    return kExitValidation;
  } catch (const ProtocolError& e) {
    err << error_line("protocol", e.what());
    return kExitRuntime;
  } catch (const std::exception& e) {
    err << error_line("runtime", e.what());
    return kExitRuntime;
  }
  return kExitValidation;
}

}  // namespace ndmt
