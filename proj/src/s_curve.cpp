#include "bmcomp/s_curve.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "bmcomp/errors.hpp"

namespace bmcomp {

SCurve::SCurve(std::string family, std::vector<std::pair<std::string, double>> params,
               std::vector<double> values)
    : family_(std::move(family)), params_(std::move(params)), values_(std::move(values)) {
  if (values_.empty()) throw InvalidParameters("curve width must be positive");
  for (std::size_t x = 0; x < values_.size(); ++x) {
    const double v = values_[x];
    if (!(v >= 0.0 && v <= 1.0)) {
      throw InvalidParameters(fmt::format("S({}) = {} is not a probability", x, v));
    }
    if (x > 0 && v < values_[x - 1]) {
      throw InvalidParameters(fmt::format("S decreases at x = {} ({} < {})", x, v, values_[x - 1]));
    }
  }
}

SCurve SCurve::two_segment(std::size_t n, SegmentShape shape, double knee_x, double knee_y,
                           double start, double end) {
  if (n < 3) throw InvalidParameters("two-segment curve needs width >= 3");
  const double last = static_cast<double>(n - 1);
  if (!(knee_x > 0.0 && knee_x < last)) {
    throw InvalidParameters(fmt::format("knee_x = {} must lie in (0, {})", knee_x, last));
  }
  if (!(start <= knee_y && knee_y <= end)) {
    throw InvalidParameters(
        fmt::format("need start <= knee_y <= end, got {}, {}, {}", start, knee_y, end));
  }
  std::vector<double> v(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double x = static_cast<double>(i);
    if (x <= knee_x) {
      const double t = x / knee_x;
      v[i] = start + (knee_y - start) * (shape == SegmentShape::linear ? t : t * t);
    } else {
      const double t = (last - x) / (last - knee_x);
      v[i] = shape == SegmentShape::linear ? end - (end - knee_y) * t : end - (end - knee_y) * t * t;
    }
    v[i] = std::clamp(v[i], 0.0, 1.0);
  }
  return SCurve(fmt::format("two-segment-{}", to_string(shape)),
                {{"knee_x", knee_x}, {"knee_y", knee_y}, {"start", start}, {"end", end}},
                std::move(v));
}

SCurve SCurve::logistic(std::size_t n, double midpoint, double scale) {
  if (!(scale > 0.0)) throw InvalidParameters("logistic scale must be positive");
  std::vector<double> v(n);
  for (std::size_t i = 0; i < n; ++i) {
    v[i] = 1.0 / (1.0 + std::exp(-(static_cast<double>(i) - midpoint) / scale));
  }
  return SCurve("logistic", {{"midpoint", midpoint}, {"scale", scale}}, std::move(v));
}

SCurve SCurve::table(std::vector<double> values) {
  return SCurve("table", {}, std::move(values));
}

SCurve SCurve::constant(std::size_t n, double p) {
  return SCurve("constant", {{"p", p}}, std::vector<double>(n, p));
}

SCurve SCurve::step(std::size_t n, std::size_t k) {
  std::vector<double> v(n, 0.0);
  for (std::size_t i = k; i < n; ++i) v[i] = 1.0;
  return SCurve("step", {{"k", static_cast<double>(k)}}, std::move(v));
}

const char* to_string(SegmentShape shape) {
  return shape == SegmentShape::linear ? "linear" : "quadratic";
}

double s_eval(const SCurve& curve, std::uint64_t x) { return curve(x); }

double not_fetched_prob(const SCurve& curve, std::int64_t c, std::int64_t s_t, std::size_t n) {
  if (c > s_t) return 1.0;
  if (c < s_t - static_cast<std::int64_t>(n)) return 0.0;
  return 1.0 - curve(static_cast<std::uint64_t>(s_t - c));
}

double cond_download_prob(const SCurve& curve, std::uint64_t age_i, std::uint64_t age_j) {
  if (age_j < age_i) {
    throw DomainError(fmt::format("conditional fill needs age_j >= age_i, got {} < {}", age_j, age_i));
  }
  const double si = curve(age_i);
  if (si >= 1.0) {
    throw DegenerateCondition(fmt::format("chunk is certainly filled at age {}", age_i));
  }
  return std::clamp((curve(age_j) - si) / (1.0 - si), 0.0, 1.0);
}

FillAgeSampler::FillAgeSampler(const SCurve& curve, std::uint64_t seed)
    : cdf_(curve.values()), rng_(seed) {
  cdf_.push_back(1.0);
}

std::uint32_t FillAgeSampler::operator()() {
  // u uniform on (0, 1]; the first x with S(x) >= u has P(A <= x) = S(x).
  const double u = static_cast<double>((rng_() >> 11) + 1) * 0x1.0p-53;
  const auto it = std::lower_bound(cdf_.begin(), cdf_.end(), u);
  return static_cast<std::uint32_t>(it - cdf_.begin());
}

namespace {
std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}
}  // namespace

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t replica, std::uint64_t stream) {
  return splitmix64(splitmix64(splitmix64(seed) ^ replica) ^ stream);
}

}  // namespace bmcomp
