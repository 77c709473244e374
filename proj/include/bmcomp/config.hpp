#pragma once

// JSON scenario, limits and calibration files. Every object rejects keys it
// does not know; all failures throw ConfigError.
//
// Curve objects:
//   {"family": "two-segment", "shape": "linear"|"quadratic",
//    "knee_x": x, "knee_y": y, "start": 0, "end": 1}
//   {"family": "logistic", "midpoint": m, "scale": s}
//   {"family": "table", "values": [S(0), ..., S(N-1)]}
//   {"family": "constant", "p": p}
//   {"family": "step", "k": k}
//
// Scenario (simulate, trace):
//   {"N", "gT", "gTau" (default gT/2), "rounds", "seed", "curve",
//    "codec": "srw-lemma1"|"srw-optimized"|"crw",
//    "channel": {"kind": "ideal"} | {"kind": "lossy", "p_loss", "max_delay_rounds"},
//    "entropy_layer", "replicas", "warmup", "batch_rounds"}
//
// Limits:
//   {"N", "curve", "gT": [..], "gTau" (fixed; default gT/2 per row), "rate",
//    "tau_sweep": {"gT", "gTau": [..]}, "schemes": [..]}
//
// Calibration targets:
//   {"N", "bound", "scale", "targets": [{"scheme", "gT", "bits", "gTau"}]}

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "bmcomp/limits.hpp"
#include "bmcomp/s_curve.hpp"
#include "bmcomp/sim.hpp"

namespace bmcomp {

using Json = nlohmann::json;

Json load_json_file(const std::string& path);

/// Applies "dotted.key=value" assignments. The value is parsed as JSON when
/// possible and taken as a string otherwise.
void apply_overrides(Json& j, const std::vector<std::string>& assignments);

SCurve parse_curve(const Json& j, std::size_t n);
Json curve_to_json(const SCurve& curve);

ScenarioConfig parse_scenario(const Json& j);

struct LimitsConfig {
  std::optional<SCurve> curve;
  std::vector<std::size_t> gTs;
  std::optional<std::size_t> gTau;
  std::optional<std::size_t> tau_sweep_gT;
  std::vector<std::size_t> tau_sweep_gTaus;
  std::vector<Scheme> schemes;
  /// Chunks per second, for the per-period column.
  double rate = 3.37;
};

LimitsConfig parse_limits(const Json& j);
LimitTable build_limit_table(const LimitsConfig& c);

struct CalibrationSpec {
  std::vector<CalibrationTarget> targets;
  CalibrationOptions options;
};

CalibrationSpec parse_targets(const Json& j);

}  // namespace bmcomp
