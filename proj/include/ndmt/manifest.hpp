#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "ndmt/bridge.hpp"
#include "ndmt/metrics.hpp"
#include "ndmt/synthgen.hpp"

namespace ndmt {

struct CandidateFile {
  std::filesystem::path path;
  // Sampling size the file's pools represent. When absent the file is
  // subsampled to every manifest size (or used whole if there are none).
  std::optional<std::size_t> size;
};

struct SynthSpec {
  SyntheticCorpusOptions corpus;
  std::vector<SystemProfile> profiles;
  std::vector<std::size_t> sizes{10, 20, 50};
  bool baselines = true;
  // Profiles without their own dropout_seed share one derived from the corpus seed.
  bool shared_dropout = true;
};

// Declarative description of one experiment. Relative paths are resolved
// against the manifest's directory.
struct RunManifest {
  std::filesystem::path base_dir;
  std::optional<std::filesystem::path> sources;
  std::vector<CandidateFile> candidates;
  std::vector<std::filesystem::path> baselines;
  std::vector<MetricId> metrics;  // native and external, in manifest order
  std::vector<ExternalMetricConfig> external_metrics;
  std::vector<std::size_t> sizes;
  std::optional<std::uint64_t> subsample_seed;  // absent: pools are cut to prefixes
  std::uint64_t seed = 0;
  std::optional<std::size_t> base_size;
  double threshold = 0.95;
  double buckets_threshold = 1.0;
  bool std_ascending = true;
  bool case_sensitive = false;
  bool cjk_codepoints = true;  // "cjk_words": "codepoint" | "whitespace"
  std::map<std::string, std::string> baseline_map;  // ND system id -> baseline system id
  std::filesystem::path out = "ndmt-out";
  std::optional<SynthSpec> synth;

  const ExternalMetricConfig* external(const std::string& name) const;
};

// Throws ValidationError naming the offending key.
RunManifest parse_manifest(const nlohmann::json& j, const std::filesystem::path& base_dir);
RunManifest load_manifest(const std::filesystem::path& path);

// Serializes with paths relative to `base_dir` where possible.
nlohmann::json manifest_to_json(const RunManifest& m);

// Every referenced input file exists and at least one metric is configured.
void validate_manifest_inputs(const RunManifest& m);

SystemProfile parse_profile(const nlohmann::json& j);

}  // namespace ndmt
