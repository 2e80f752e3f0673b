#include <array>

#include "ndmt/error.hpp"
#include "ndmt/metrics.hpp"

namespace ndmt {
namespace {

constexpr std::array kNative = {NativeMetric::bleu,   NativeMetric::chrfpp, NativeMetric::ter,
                                NativeMetric::rouge1, NativeMetric::rouge2, NativeMetric::rougeL,
                                NativeMetric::meteor_exact, NativeMetric::glvs};

std::string_view native_name(NativeMetric m) {
  switch (m) {
    case NativeMetric::bleu: return "bleu";
    case NativeMetric::chrfpp: return "chrfpp";
    case NativeMetric::ter: return "ter";
    case NativeMetric::rouge1: return "rouge1";
    case NativeMetric::rouge2: return "rouge2";
    case NativeMetric::rougeL: return "rougeL";
    case NativeMetric::meteor_exact: return "meteor_exact";
    case NativeMetric::glvs: return "glvs";
  }
  return "";
}

}  // namespace

std::string_view to_string(Polarity p) { return p == Polarity::gain ? "gain" : "loss"; }

Polarity parse_polarity(std::string_view text) {
  if (text == "gain") return Polarity::gain;
  if (text == "loss") return Polarity::loss;
  throw ValidationError("polarity must be \"gain\" or \"loss\", got \"" + std::string(text) + "\"");
}

MetricId MetricId::of(NativeMetric m) {
  MetricId id;
  id.name = std::string(native_name(m));
  id.native = m;
  if (m == NativeMetric::ter) {
    id.polarity = Polarity::loss;
    id.scale = {0.0, std::numeric_limits<double>::infinity()};
  }
  return id;
}

MetricId MetricId::external(std::string name, Polarity polarity, Scale scale) {
  if (find_native(name)) {
    throw ValidationError("external metric name \"" + name + "\" collides with a native metric");
  }
  MetricId id;
  id.name = std::move(name);
  id.polarity = polarity;
  id.scale = scale;
  return id;
}

std::optional<MetricId> MetricId::find_native(std::string_view name) {
  for (NativeMetric m : kNative) {
    if (native_name(m) == name) return of(m);
  }
  return std::nullopt;
}

bool MetricId::needs_references() const { return native && *native != NativeMetric::glvs; }

std::span<const NativeMetric> all_native_metrics() { return kNative; }

}  // namespace ndmt
