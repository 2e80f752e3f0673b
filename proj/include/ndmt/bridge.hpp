#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "ndmt/corpus.hpp"
#include "ndmt/metrics.hpp"

namespace ndmt {

// An external scorer reached over the line protocol:
//   request  {"id": int, "src": str, "cand": str, "refs": [str, ...]}
//   response {"id": int, "score": float}  or  {"id": -1, "error": str}
// one JSON object per LF-terminated UTF-8 line on the child's stdin/stdout.
struct ExternalMetricConfig {
  std::string metric_name;
  std::string command;  // run through /bin/sh -c
  bool needs_references = true;
  bool needs_source = true;
  Polarity polarity = Polarity::gain;
  Scale scale{0.0, 1.0};
  double timeout_seconds = 60.0;  // longest silence tolerated from the child
  std::size_t batch_size = 64;    // requests written per flush

  // Throws ValidationError on an empty name or command, a name that collides
  // with a native metric, a non-positive timeout or batch size, or lo > hi.
  void validate() const;
  MetricId metric_id() const;
};

struct BridgeItem {
  std::string src;
  std::string cand;
  std::vector<std::string> refs;
};

// Starts the scorer once, streams every item and returns scores in item
// order. Sources and references are sent empty when the config does not need
// them. Throws ProtocolError when the child fails to start, exits or goes
// silent before answering every id, sends an error line, a malformed line, an
// unknown or repeated id, or a score outside the declared scale. The message
// carries the child's stderr when there is any.
std::vector<double> score_batch_external(const ExternalMetricConfig& config, std::span<const BridgeItem> items);

// Scores every candidate of the run through one scorer invocation. Keyed by
// source id, in SourceSet order of the run's groups.
std::map<std::string, GroupScores> score_run_external(const ExternalMetricConfig& config, const RunSet& run,
                                                      const SourceSet& sources);

}  // namespace ndmt
