#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>

#include "ndmt/corpus.hpp"

namespace ndmt {

// Controls one synthetic system. Each source gets a base translation: the
// reference with every token replaced by a systematic error token with
// probability 1 - base_quality. Each candidate is then either the degenerate
// output (probability dropout_rate) or the base translation with every token
// replaced by a random distractor with probability substitution_rate().
struct SystemProfile {
  std::string system_id;
  double base_quality = 1.0;  // [0, 1]
  double diversity = 0.0;     // >= 0
  double dropout_rate = 0.0;  // [0, 1]
  std::uint64_t seed = 0;
  // Seed of the dropout draws; defaults to `seed`. Profiles sharing it drop
  // the same candidate slots wherever their rates allow, so a higher rate
  // drops a superset of the slots dropped by a lower one.
  std::optional<std::uint64_t> dropout_seed;
  double temperature = 0.5;   // provenance only, > 0

  // Throws ValidationError when a field is out of range.
  void validate() const;
  double substitution_rate() const;
};

// Token used for the degenerate output, repeated to the reference length.
inline constexpr std::string_view kDegenerateToken = "zqnull";

// Distractor and systematic-error vocabularies. Both are disjoint from the
// synthetic source/reference vocabulary and from each other.
std::string distractor_token(std::size_t index);
std::string error_token(std::size_t index);

// k candidates per source. Sources must all have a reference; the first one
// is perturbed. Candidate i of a source depends only on (seed, source id, i),
// so runs of different sizes are nested.
RunSet gen_run(const SystemProfile& profile, const SourceSet& sources, std::size_t k);

// One run per size; smaller pools are prefixes of larger ones.
std::map<std::size_t, RunSet> gen_size_family(const SystemProfile& profile, const SourceSet& sources,
                                              std::span<const std::size_t> sizes);

// Deterministic counterpart: the base translation, K = 1, temperature 0.
// The system id gets `suffix` appended.
RunSet gen_baseline(const SystemProfile& profile, const SourceSet& sources, std::string_view suffix = "-greedy");

struct SyntheticCorpusOptions {
  std::size_t count = 200;
  std::uint64_t seed = 0;
  std::string lang_pair = "en-de";
  std::size_t min_length = 6;
  std::size_t max_length = 20;
};

// Pseudo-word sources with one reference each, ids "s0000", "s0001", ...
SourceSet gen_sources(const SyntheticCorpusOptions& options);

}  // namespace ndmt
