#include "ndmt/error.hpp"
#include "ndmt/metrics.hpp"
#include "ndmt/tokenizer.hpp"

namespace ndmt {

GroupScores score_group(const CandidateGroup& group, const SourceSegment& source, const MetricId& metric,
                        const MetricOptions& options) {
  if (!metric.native) {
    throw ValidationError("metric \"" + metric.name + "\" is external; score it through the bridge");
  }
  if (group.candidates.empty()) {
    throw ValidationError("empty candidate group for source \"" + source.id + "\"");
  }
  const std::string& target = source.lang_pair.target;
  const std::string lang = options.cjk_codepoints || !is_cjk_language(target) ? target : std::string("und");
  const NativeMetric m = *metric.native;
  if (m == NativeMetric::glvs) return glvs_group(group, lang, options.lowercase);

  if (source.references.empty()) {
    throw ValidationError("metric \"" + metric.name + "\" needs references but source \"" + source.id +
                          "\" has none");
  }

  GroupScores out{metric, source.id, {}};
  out.per_candidate.reserve(group.size());

  if (m == NativeMetric::chrfpp) {
    for (const auto& c : group.candidates) {
      out.per_candidate.push_back(chrfpp(c, source.references, lang, options.lowercase));
    }
    return out;
  }

  std::vector<TokenSequence> refs;
  refs.reserve(source.references.size());
  for (const auto& r : source.references) refs.push_back(tokenize_words(r, lang, options.lowercase));

  for (const auto& c : group.candidates) {
    const TokenSequence hyp = tokenize_words(c, lang, options.lowercase);
    double v = 0.0;
    switch (m) {
      case NativeMetric::bleu: v = bleu(hyp, refs); break;
      case NativeMetric::ter: v = ter(hyp, refs); break;
      case NativeMetric::rouge1: v = rouge(hyp, refs, RougeVariant::one); break;
      case NativeMetric::rouge2: v = rouge(hyp, refs, RougeVariant::two); break;
      case NativeMetric::rougeL: v = rouge(hyp, refs, RougeVariant::lcs); break;
      case NativeMetric::meteor_exact: v = meteor_exact(hyp, refs); break;
      case NativeMetric::chrfpp:
      case NativeMetric::glvs: break;
    }
    out.per_candidate.push_back(v);
  }
  return out;
}

}  // namespace ndmt
