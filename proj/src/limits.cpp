#include "bmcomp/limits.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include <fmt/format.h>
#include <fmt/ostream.h>

#include "bmcomp/errors.hpp"

namespace bmcomp {

double binary_entropy(double x) {
  if (!(x >= 0.0 && x <= 1.0)) throw DomainError(fmt::format("binary_entropy({}) undefined", x));
  if (x == 0.0 || x == 1.0) return 0.0;
  return -(x * std::log2(x) + (1.0 - x) * std::log2(1.0 - x));
}

void validate(const LimitParams& p) {
  const std::size_t n = p.curve.width();
  if (p.gT == 0 || p.gT > n) {
    throw InvalidParameters(fmt::format("gT = {} must lie in [1, N = {}]", p.gT, n));
  }
  if (p.gTau == 0 || p.gTau > p.gT) {
    throw InvalidParameters(fmt::format("gTau = {} must lie in [1, gT = {}]", p.gTau, p.gT));
  }
}

namespace {

// h((S(i+g) - S(i)) / (1 - S(i))), or 0 where S(i) = 1.
double cond_entropy(const SCurve& S, std::size_t i, std::size_t g) {
  const double si = S(i);
  if (si >= 1.0) return 0.0;
  return binary_entropy(std::clamp((S(i + g) - si) / (1.0 - si), 0.0, 1.0));
}

// One direction of the common-window length; `lead` is the gap from the
// partner's last report to this one.
double crw_direction(const SCurve& S, std::size_t n, std::size_t gT, std::size_t lead) {
  double w = static_cast<double>(gT);
  for (std::size_t i = 0; i < lead; ++i) w -= S(i);
  for (std::size_t i = 0; i + gT < n; ++i) w += (1.0 - S(i)) * (1.0 - S(i + lead));
  return w;
}

double jfc_direction(const SCurve& S, std::size_t n, std::size_t gT, std::size_t lead) {
  double w = 0;
  for (std::size_t i = 0; i < gT - lead; ++i) w += binary_entropy(S(i));
  for (std::size_t i = 0; i < lead; ++i) w += (1.0 - S(i)) * binary_entropy(S(i + gT - lead));
  for (std::size_t i = 0; i + gT < n; ++i) {
    w += (1.0 - S(i)) * (1.0 - S(i + lead)) * cond_entropy(S, i, gT);
  }
  return w;
}

}  // namespace

double w_trad(const LimitParams& p) {
  double w = 0;
  for (std::size_t i = 0; i < p.curve.width(); ++i) w += binary_entropy(p.curve(i));
  return w;
}

double w_srw(const LimitParams& p, bool with_offset) {
  validate(p);
  const std::size_t n = p.curve.width();
  double w = 0;
  if (with_offset) {
    w = static_cast<double>(n);
    for (std::size_t i = 0; i + p.gT < n; ++i) w -= p.curve(i);
  } else {
    w = static_cast<double>(p.gT + n);
    for (std::size_t i = 0; i < n; ++i) w -= p.curve(i);
  }
  return w;
}

Directional w_crw(const LimitParams& p) {
  validate(p);
  const std::size_t n = p.curve.width();
  Directional d;
  d.ab = crw_direction(p.curve, n, p.gT, p.gTau);
  d.ba = crw_direction(p.curve, n, p.gT, p.gT - p.gTau);
  d.avg = (d.ab + d.ba) / 2;
  return d;
}

double w_jfs(const LimitParams& p) {
  validate(p);
  const std::size_t n = p.curve.width();
  double w = 0;
  for (std::size_t i = 0; i < p.gT; ++i) w += binary_entropy(p.curve(i));
  for (std::size_t i = 0; i + p.gT < n; ++i) w += (1.0 - p.curve(i)) * cond_entropy(p.curve, i, p.gT);
  return w;
}

Directional w_jfc(const LimitParams& p) {
  validate(p);
  const std::size_t n = p.curve.width();
  Directional d;
  d.ab = jfc_direction(p.curve, n, p.gT, p.gTau);
  d.ba = jfc_direction(p.curve, n, p.gT, p.gT - p.gTau);
  d.avg = (d.ab + d.ba) / 2;
  return d;
}

namespace {
constexpr std::pair<Scheme, const char*> kSchemeNames[] = {
    {Scheme::trad, "trad"},     {Scheme::srw1, "srw1"},     {Scheme::srw2, "srw2"},
    {Scheme::crw, "crw"},       {Scheme::crw_ab, "crw_ab"}, {Scheme::crw_ba, "crw_ba"},
    {Scheme::jfs, "jfs"},       {Scheme::jfc, "jfc"},       {Scheme::jfc_ab, "jfc_ab"},
    {Scheme::jfc_ba, "jfc_ba"},
};
}  // namespace

const char* to_string(Scheme s) {
  for (const auto& [k, name] : kSchemeNames) {
    if (k == s) return name;
  }
  return "?";
}

std::optional<Scheme> parse_scheme(const std::string& name) {
  for (const auto& [k, n] : kSchemeNames) {
    if (name == n) return k;
  }
  return std::nullopt;
}

double limit_value(const LimitParams& p, Scheme s) {
  validate(p);
  switch (s) {
    case Scheme::trad: return w_trad(p);
    case Scheme::srw1: return w_srw(p, true);
    case Scheme::srw2: return w_srw(p, false);
    case Scheme::crw: return w_crw(p).avg;
    case Scheme::crw_ab: return w_crw(p).ab;
    case Scheme::crw_ba: return w_crw(p).ba;
    case Scheme::jfs: return w_jfs(p);
    case Scheme::jfc: return w_jfc(p).avg;
    case Scheme::jfc_ab: return w_jfc(p).ab;
    case Scheme::jfc_ba: return w_jfc(p).ba;
  }
  return 0;
}

std::size_t default_gtau(std::size_t gT) { return std::max<std::size_t>(1, gT / 2); }

const std::vector<Scheme>& table_schemes() {
  static const std::vector<Scheme> schemes = {Scheme::trad, Scheme::srw1, Scheme::srw2,
                                              Scheme::crw,  Scheme::jfs,  Scheme::jfc};
  return schemes;
}

LimitTable sweep(const SCurve& curve, const std::vector<std::size_t>& gTs,
                 const std::vector<Scheme>& schemes) {
  LimitTable t;
  for (std::size_t gT : gTs) {
    const LimitParams p{curve, gT, default_gtau(gT)};
    for (Scheme s : schemes) t.push_back({s, gT, p.gTau, limit_value(p, s)});
  }
  return t;
}

LimitTable tau_sweep(const SCurve& curve, std::size_t gT, const std::vector<std::size_t>& gTaus,
                     const std::vector<Scheme>& schemes) {
  LimitTable t;
  for (std::size_t gTau : gTaus) {
    const LimitParams p{curve, gT, gTau};
    for (Scheme s : schemes) t.push_back({s, gT, gTau, limit_value(p, s)});
  }
  return t;
}

namespace {
double per_period(double bits, std::size_t gT, double rate) {
  return bits * rate / static_cast<double>(gT);
}
}  // namespace

void write_limits_csv(std::ostream& out, const LimitTable& table, double rate) {
  out << "scheme,gT,gTau,bits,bits_per_period\n";
  for (const auto& r : table) {
    fmt::print(out, "{},{},{},{:.6f},{:.6f}\n", to_string(r.scheme), r.gT, r.gTau, r.bits,
               per_period(r.bits, r.gT, rate));
  }
}

void write_limits_pivot(std::ostream& out, const LimitTable& table, double rate) {
  std::vector<Scheme> schemes;
  std::map<std::pair<std::size_t, std::size_t>, std::map<Scheme, double>> rows;
  for (const auto& r : table) {
    if (std::find(schemes.begin(), schemes.end(), r.scheme) == schemes.end()) {
      schemes.push_back(r.scheme);
    }
    rows[{r.gT, r.gTau}][r.scheme] = r.bits;
  }
  out << "# gT gTau period_s";
  for (Scheme s : schemes) out << ' ' << to_string(s);
  for (Scheme s : schemes) out << ' ' << to_string(s) << "_per_s";
  out << '\n';
  for (const auto& [key, vals] : rows) {
    fmt::print(out, "{} {} {:.4f}", key.first, key.second, static_cast<double>(key.first) / rate);
    for (Scheme s : schemes) {
      const auto it = vals.find(s);
      if (it == vals.end()) out << " nan";
      else fmt::print(out, " {:.6f}", it->second);
    }
    for (Scheme s : schemes) {
      const auto it = vals.find(s);
      if (it == vals.end()) out << " nan";
      else fmt::print(out, " {:.6f}", per_period(it->second, key.first, rate));
    }
    out << '\n';
  }
}

}  // namespace bmcomp
