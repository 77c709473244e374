#include "bmcomp/cli.hpp"

#include <fstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <fmt/ostream.h>

#include "bmcomp/config.hpp"
#include "bmcomp/errors.hpp"
#include "bmcomp/limits.hpp"
#include "bmcomp/sim.hpp"

namespace bmcomp {

namespace {

std::ofstream open_out(const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw ConfigError(fmt::format("cannot write {}", path));
  return f;
}

Json load_with_overrides(const std::string& path, const std::vector<std::string>& overrides) {
  Json j = load_json_file(path);
  apply_overrides(j, overrides);
  return j;
}

int cmd_limits(const std::string& config, const std::vector<std::string>& overrides,
               const std::string& out_path, const std::string& layout) {
  const LimitsConfig c = parse_limits(load_with_overrides(config, overrides));
  const LimitTable table = build_limit_table(c);
  auto f = open_out(out_path);
  if (layout == "pivot") write_limits_pivot(f, table, c.rate);
  else write_limits_csv(f, table, c.rate);
  return kExitOk;
}

int cmd_simulate(const std::string& config, const std::vector<std::string>& overrides,
                 const std::string& out_path, const std::string& json_path,
                 std::optional<std::size_t> replicas, bool strict, std::ostream& out) {
  ScenarioConfig c = parse_scenario(load_with_overrides(config, overrides));
  if (replicas) {
    c.replicas = *replicas;
    validate(c);
  }
  const ExchangeMetrics m = run_scenario(c);
  {
    auto f = open_out(out_path);
    write_metrics_csv(f, m);
  }
  if (!json_path.empty()) {
    auto f = open_out(json_path);
    f << metrics_json(m) << '\n';
  }

  bool flagged = false;
  fmt::print(out, "{} N={} gT={} gTau={} replicas={} channel={}\n", to_string(m.codec), m.N, m.gT,
             m.gTau, m.replicas,
             c.lossy ? fmt::format("lossy(p_loss={}, max_delay={})", c.lossy->p_loss,
                                   c.lossy->max_delay_rounds)
                     : std::string("ideal"));
  for (const auto& r : delta_rows(m)) {
    fmt::print(out, "  {:<4} {:<11} empirical {:10.4f}  analytic {:10.4f}  delta {:+9.4f}  se {:8.4f}{}\n",
               r.direction, r.quantity, r.empirical, r.analytic, r.delta, r.std_error,
               r.flagged ? "  FLAG" : "");
    flagged = flagged || r.flagged;
  }
  fmt::print(out,
             "  audit: soundness {} completeness {} desyncs {} stuck {}; delivered {}/{} "
             "undecodable {}\n",
             m.soundness_violations, m.completeness_violations, m.desyncs, m.stuck_sessions,
             m.delivered, m.sent, m.undecodable);
  if (m.entropy_layer) {
    fmt::print(out, "  coder: roundtrip failures {} overhead violations {}\n",
               m.coder_roundtrip_failures, m.coder_overhead_violations);
  }
  return strict && (flagged || !m.clean()) ? kExitDelta : kExitOk;
}

std::string bit_string(const Bits& bits) {
  std::string s;
  for (auto b : bits) s.push_back(b ? '1' : '0');
  return s;
}

int cmd_trace(const std::string& config, const std::vector<std::string>& overrides,
              std::ostream& out) {
  ScenarioConfig c = parse_scenario(load_with_overrides(config, overrides));
  if (c.N > 32) throw ConfigError(fmt::format("trace needs N <= 32, got {}", c.N));
  if (c.lossy) throw ConfigError("trace runs on an ideal channel only");
  c.replicas = 1;
  c.entropy_layer = false;
  std::uint64_t last_round = ~std::uint64_t{0};
  auto show = [&](const MessageEvent& e) {
    if (e.round != last_round) {
      fmt::print(out, "round {}\n", e.round);
      last_round = e.round;
    }
    const char* from = e.sender == Peer::a ? "A" : "B";
    const char* to = e.sender == Peer::a ? "B" : "A";
    fmt::print(out, "  {} -> {}\n", from, to);
    fmt::print(out, "    bitmap   offset {:>4}  {}\n", e.truth.offset, bit_string(e.truth.bits));
    fmt::print(out, "    message  {} ({} bytes)\n", e.message, e.wire_bytes);
    std::string wanted;
    for (const auto& w : e.wanted) {
      wanted += fmt::format("{}{}:{}", wanted.empty() ? "" : " ", w.chunk, w.filled ? 1 : 0);
    }
    fmt::print(out, "    wanted   {{{}}}\n", wanted);
    fmt::print(out, "    window {} {}\n", from, e.sender_window.to_string());
    fmt::print(out, "    window {} {}\n", to, e.receiver_window.to_string());
  };
  fmt::print(out, "{} N={} gT={} gTau={} rounds={} seed={}\n", to_string(c.codec), c.N, c.gT, c.gTau,
             c.rounds, c.seed);
  run_ideal(c, 0, show);
  return kExitOk;
}

int cmd_calibrate(const std::string& targets_path, const std::string& family_name,
                  const std::string& out_path, std::optional<double> bound, std::ostream& out) {
  CalibrationSpec spec = parse_targets(load_json_file(targets_path));
  if (bound) spec.options.bound = *bound;
  const auto family = parse_family(family_name);
  if (!family) throw ConfigError(fmt::format("unknown curve family '{}'", family_name));
  const CalibrationResult r = calibrate_s(spec.targets, *family, spec.options);

  Json residuals = Json::array();
  for (std::size_t i = 0; i < spec.targets.size(); ++i) {
    const auto& t = spec.targets[i];
    residuals.push_back({{"scheme", to_string(t.scheme)},
                         {"gT", t.gT},
                         {"gTau", t.gTau.value_or(default_gtau(t.gT))},
                         {"target", t.bits},
                         {"achieved", r.achieved[i]},
                         {"residual", r.residuals[i]}});
    fmt::print(out, "{:<7} gT {:>3}  target {:8.3f}  achieved {:8.3f}  residual {:+.4f}%\n",
               to_string(t.scheme), t.gT, t.bits, r.achieved[i], 100 * r.residuals[i]);
  }
  const Json result{{"N", spec.options.n},
                    {"family", to_string(*family)},
                    {"curve", curve_to_json(r.curve)},
                    {"objective", r.objective},
                    {"residuals", residuals}};
  auto f = open_out(out_path);
  f << result.dump(2) << '\n';
  return kExitOk;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Buffer-map compression toolkit"};
  app.require_subcommand(1);

  std::string config, out_path, json_path, layout = "csv", targets, family;
  std::vector<std::string> overrides;
  std::size_t replicas_arg = 0;
  double bound_arg = 0;
  bool strict = false;

  auto* limits = app.add_subcommand("limits", "Closed-form compressed-length table (CSV)");
  limits->add_option("--config", config, "Limits config (JSON)")->required();
  limits->add_option("--out", out_path, "Output file")->required();
  limits->add_option("--layout", layout, "csv or pivot")->check(CLI::IsMember({"csv", "pivot"}));
  limits->add_option("--set", overrides, "Override a config value, key=value");

  auto* simulate = app.add_subcommand("simulate", "Monte Carlo exchange simulation");
  simulate->add_option("--config", config, "Scenario (JSON)")->required();
  simulate->add_option("--out", out_path, "Metrics CSV")->required();
  simulate->add_option("--json", json_path, "Metrics JSON");
  auto* replicas_opt = simulate->add_option("--replicas", replicas_arg, "Parallel replicas");
  simulate->add_flag("--strict", strict, "Exit 4 when a delta exceeds 2 standard errors");
  simulate->add_option("--set", overrides, "Override a config value, key=value");

  auto* trace = app.add_subcommand("trace", "Round-by-round dump of a small session");
  trace->add_option("--config", config, "Scenario (JSON), N <= 32")->required();
  trace->add_option("--set", overrides, "Override a config value, key=value");

  auto* calibrate = app.add_subcommand("calibrate", "Fit a curve to target lengths");
  calibrate->add_option("--targets", targets, "Targets (JSON)")->required();
  calibrate->add_option("--family", family,
                        "two-segment-linear, two-segment-quadratic, logistic, logistic-midpoint")
      ->required();
  calibrate->add_option("--out", out_path, "Output curve file")->required();
  auto* bound_opt = calibrate->add_option("--bound", bound_arg, "Largest relative residual");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kExitConfig;
  }

  try {
    if (limits->parsed()) return cmd_limits(config, overrides, out_path, layout);
    if (simulate->parsed()) {
      std::optional<std::size_t> replicas;
      if (replicas_opt->count() > 0) replicas = replicas_arg;
      return cmd_simulate(config, overrides, out_path, json_path, replicas, strict, out);
    }
    if (trace->parsed()) return cmd_trace(config, overrides, out);
    if (calibrate->parsed()) {
      std::optional<double> bound;
      if (bound_opt->count() > 0) bound = bound_arg;
      return cmd_calibrate(targets, family, out_path, bound, out);
    }
  } catch (const NoFeasibleCurve& e) {
    err << "error: " << e.what() << '\n';
    return kExitInfeasible;
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const InvalidParameters& e) {
    err << "error: " << e.what() << '\n';
    return kExitConfig;
  }
  return kExitConfig;
}

}  // namespace bmcomp
