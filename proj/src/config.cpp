#include "bmcomp/config.hpp"

#include <algorithm>
#include <fstream>
#include <initializer_list>

#include <fmt/format.h>

#include "bmcomp/errors.hpp"

namespace bmcomp {

namespace {

void check_keys(const Json& j, std::initializer_list<const char*> allowed, const char* where) {
  if (!j.is_object()) throw ConfigError(fmt::format("{} must be a JSON object", where));
  for (const auto& [key, value] : j.items()) {
    if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; })) {
      throw ConfigError(fmt::format("unknown key '{}' in {}", key, where));
    }
  }
}

const Json& required(const Json& j, const char* key, const char* where) {
  if (!j.contains(key)) throw ConfigError(fmt::format("{} is missing '{}'", where, key));
  return j.at(key);
}

template <class T>
T get_as(const Json& v, const char* key) {
  try {
    if constexpr (std::is_same_v<T, bool>) {
      if (!v.is_boolean()) throw ConfigError(fmt::format("'{}' must be true or false", key));
    } else if constexpr (std::is_unsigned_v<T>) {
      if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<long long>() >= 0)) {
        throw ConfigError(fmt::format("'{}' must be a non-negative integer", key));
      }
    } else if constexpr (std::is_floating_point_v<T>) {
      if (!v.is_number()) throw ConfigError(fmt::format("'{}' must be a number", key));
    } else if constexpr (std::is_same_v<T, std::string>) {
      if (!v.is_string()) throw ConfigError(fmt::format("'{}' must be a string", key));
    }
    return v.get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(fmt::format("bad value for '{}': {}", key, e.what()));
  }
}

template <class T>
T field(const Json& j, const char* key, const char* where) {
  return get_as<T>(required(j, key, where), key);
}

template <class T>
T field_or(const Json& j, const char* key, T fallback) {
  return j.contains(key) ? get_as<T>(j.at(key), key) : fallback;
}

template <class T>
std::vector<T> list(const Json& v, const char* key) {
  if (!v.is_array()) throw ConfigError(fmt::format("'{}' must be an array", key));
  std::vector<T> out;
  for (const auto& e : v) out.push_back(get_as<T>(e, key));
  return out;
}

}  // namespace

Json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(fmt::format("cannot open {}", path));
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(fmt::format("{}: {}", path, e.what()));
  }
}

void apply_overrides(Json& j, const std::vector<std::string>& assignments) {
  for (const auto& a : assignments) {
    const auto eq = a.find('=');
    if (eq == std::string::npos || eq == 0) {
      throw ConfigError(fmt::format("override '{}' is not key=value", a));
    }
    const std::string key = a.substr(0, eq), text = a.substr(eq + 1);
    Json value = Json::parse(text, nullptr, false);
    if (value.is_discarded()) value = text;
    Json* node = &j;
    std::size_t start = 0;
    while (true) {
      const auto dot = key.find('.', start);
      const std::string part = key.substr(start, dot - start);
      if (node->is_null()) *node = Json::object();
      if (!node->is_object()) throw ConfigError(fmt::format("override '{}' crosses a non-object", key));
      if (dot == std::string::npos) {
        (*node)[part] = value;
        break;
      }
      node = &(*node)[part];
      start = dot + 1;
    }
  }
}

SCurve parse_curve(const Json& j, std::size_t n) {
  if (!j.is_object()) throw ConfigError("curve must be a JSON object");
  const auto family = field<std::string>(j, "family", "curve");
  try {
    if (family == "two-segment") {
      check_keys(j, {"family", "shape", "knee_x", "knee_y", "start", "end"}, "curve");
      const auto shape = field_or<std::string>(j, "shape", "linear");
      if (shape != "linear" && shape != "quadratic") {
        throw ConfigError(fmt::format("unknown two-segment shape '{}'", shape));
      }
      return SCurve::two_segment(
          n, shape == "linear" ? SegmentShape::linear : SegmentShape::quadratic,
          field<double>(j, "knee_x", "curve"), field<double>(j, "knee_y", "curve"),
          field_or<double>(j, "start", 0.0), field_or<double>(j, "end", 1.0));
    }
    if (family == "logistic") {
      check_keys(j, {"family", "midpoint", "scale"}, "curve");
      return SCurve::logistic(n, field<double>(j, "midpoint", "curve"),
                              field<double>(j, "scale", "curve"));
    }
    if (family == "table") {
      check_keys(j, {"family", "values"}, "curve");
      auto values = list<double>(required(j, "values", "curve"), "values");
      if (values.size() != n) {
        throw ConfigError(fmt::format("curve table has {} values for N = {}", values.size(), n));
      }
      return SCurve::table(std::move(values));
    }
    if (family == "constant") {
      check_keys(j, {"family", "p"}, "curve");
      return SCurve::constant(n, field<double>(j, "p", "curve"));
    }
    if (family == "step") {
      check_keys(j, {"family", "k"}, "curve");
      return SCurve::step(n, field<std::size_t>(j, "k", "curve"));
    }
  } catch (const InvalidParameters& e) {
    throw ConfigError(fmt::format("invalid curve: {}", e.what()));
  }
  throw ConfigError(fmt::format("unknown curve family '{}'", family));
}

Json curve_to_json(const SCurve& curve) {
  Json j;
  const std::string& f = curve.family();
  if (f.rfind("two-segment-", 0) == 0) {
    j["family"] = "two-segment";
    j["shape"] = f.substr(std::string("two-segment-").size());
  } else {
    j["family"] = f;
  }
  for (const auto& [name, value] : curve.params()) {
    if (name == "k") j[name] = static_cast<std::size_t>(value);
    else j[name] = value;
  }
  if (f == "table") j["values"] = curve.values();
  return j;
}

ScenarioConfig parse_scenario(const Json& j) {
  constexpr const char* where = "scenario";
  check_keys(j,
             {"N", "gT", "gTau", "rounds", "seed", "curve", "codec", "channel", "entropy_layer",
              "replicas", "warmup", "batch_rounds"},
             where);
  ScenarioConfig c;
  c.N = field<std::size_t>(j, "N", where);
  c.gT = field<std::size_t>(j, "gT", where);
  c.gTau = field_or<std::size_t>(j, "gTau", default_gtau(c.gT));
  c.rounds = field<std::uint64_t>(j, "rounds", where);
  c.seed = field_or<std::uint64_t>(j, "seed", 1);
  c.curve = parse_curve(required(j, "curve", where), c.N);
  const auto codec = field_or<std::string>(j, "codec", "srw-lemma1");
  const auto kind = parse_codec(codec);
  if (!kind) throw ConfigError(fmt::format("unknown codec '{}'", codec));
  c.codec = *kind;
  if (j.contains("channel")) {
    const Json& ch = j.at("channel");
    if (!ch.is_object()) throw ConfigError("channel must be a JSON object");
    const auto k = field<std::string>(ch, "kind", "channel");
    if (k == "lossy") {
      check_keys(ch, {"kind", "p_loss", "max_delay_rounds"}, "channel");
      c.lossy = LossyChannel{field<double>(ch, "p_loss", "channel"),
                             field_or<std::uint32_t>(ch, "max_delay_rounds", 0)};
    } else if (k == "ideal") {
      check_keys(ch, {"kind"}, "channel");
    } else {
      throw ConfigError(fmt::format("unknown channel kind '{}'", k));
    }
  }
  c.entropy_layer = field_or<bool>(j, "entropy_layer", false);
  c.replicas = field_or<std::size_t>(j, "replicas", 1);
  if (j.contains("warmup")) c.warmup = field<std::uint64_t>(j, "warmup", where);
  c.batch_rounds = field_or<std::size_t>(j, "batch_rounds", 100);
  validate(c);
  return c;
}

LimitsConfig parse_limits(const Json& j) {
  constexpr const char* where = "limits config";
  check_keys(j, {"N", "curve", "gT", "gTau", "rate", "tau_sweep", "schemes"}, where);
  LimitsConfig c;
  const auto n = field<std::size_t>(j, "N", where);
  c.curve = parse_curve(required(j, "curve", where), n);
  if (j.contains("gT")) c.gTs = list<std::size_t>(j.at("gT"), "gT");
  if (j.contains("gTau")) c.gTau = field<std::size_t>(j, "gTau", where);
  c.rate = field_or<double>(j, "rate", 3.37);
  if (!(c.rate > 0)) throw ConfigError("rate must be positive");
  if (j.contains("tau_sweep")) {
    const Json& t = j.at("tau_sweep");
    check_keys(t, {"gT", "gTau"}, "tau_sweep");
    c.tau_sweep_gT = field<std::size_t>(t, "gT", "tau_sweep");
    c.tau_sweep_gTaus = list<std::size_t>(required(t, "gTau", "tau_sweep"), "gTau");
  }
  if (j.contains("schemes")) {
    for (const auto& name : list<std::string>(j.at("schemes"), "schemes")) {
      const auto s = parse_scheme(name);
      if (!s) throw ConfigError(fmt::format("unknown scheme '{}'", name));
      c.schemes.push_back(*s);
    }
  } else {
    c.schemes = table_schemes();
  }
  if (c.gTs.empty() && !c.tau_sweep_gT) throw ConfigError("limits config needs gT or tau_sweep");
  auto check = [n](std::size_t gT, std::size_t gTau) {
    if (gT == 0 || gT > n) throw ConfigError(fmt::format("gT = {} must lie in [1, N = {}]", gT, n));
    if (gTau == 0 || gTau > gT) {
      throw ConfigError(fmt::format("gTau = {} must lie in [1, gT = {}]", gTau, gT));
    }
  };
  for (std::size_t gT : c.gTs) check(gT, c.gTau.value_or(default_gtau(gT)));
  for (std::size_t gTau : c.tau_sweep_gTaus) check(*c.tau_sweep_gT, gTau);
  return c;
}

LimitTable build_limit_table(const LimitsConfig& c) {
  LimitTable t;
  for (std::size_t gT : c.gTs) {
    const auto rows = c.gTau ? tau_sweep(*c.curve, gT, {*c.gTau}, c.schemes)
                             : sweep(*c.curve, {gT}, c.schemes);
    t.insert(t.end(), rows.begin(), rows.end());
  }
  if (c.tau_sweep_gT) {
    const auto rows = tau_sweep(*c.curve, *c.tau_sweep_gT, c.tau_sweep_gTaus, c.schemes);
    t.insert(t.end(), rows.begin(), rows.end());
  }
  return t;
}

CalibrationSpec parse_targets(const Json& j) {
  constexpr const char* where = "targets file";
  check_keys(j, {"N", "bound", "scale", "targets"}, where);
  CalibrationSpec s;
  s.options.n = field_or<std::size_t>(j, "N", 456);
  s.options.bound = field_or<double>(j, "bound", 0.02);
  s.options.fixed_scale = field_or<double>(j, "scale", 20.0);
  const Json& targets = required(j, "targets", where);
  if (!targets.is_array() || targets.empty()) throw ConfigError("targets must be a non-empty array");
  for (const auto& t : targets) {
    check_keys(t, {"scheme", "gT", "bits", "gTau"}, "target");
    const auto name = field<std::string>(t, "scheme", "target");
    const auto scheme = parse_scheme(name);
    if (!scheme) throw ConfigError(fmt::format("unknown scheme '{}'", name));
    CalibrationTarget ct{*scheme, field<std::size_t>(t, "gT", "target"),
                         field<double>(t, "bits", "target"), std::nullopt};
    if (t.contains("gTau")) ct.gTau = field<std::size_t>(t, "gTau", "target");
    s.targets.push_back(ct);
  }
  return s;
}

}  // namespace bmcomp
