#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "bmcomp/errors.hpp"
#include "bmcomp/limits.hpp"

namespace bmcomp {

namespace {

constexpr std::pair<CurveFamily, const char*> kFamilyNames[] = {
    {CurveFamily::two_segment_linear, "two-segment-linear"},
    {CurveFamily::two_segment_quadratic, "two-segment-quadratic"},
    {CurveFamily::logistic, "logistic"},
    {CurveFamily::logistic_midpoint, "logistic-midpoint"},
};

struct Box {
  std::vector<double> lo, hi;
};

Box parameter_box(CurveFamily f, std::size_t n) {
  const double last = static_cast<double>(n - 1);
  switch (f) {
    case CurveFamily::two_segment_linear:
    case CurveFamily::two_segment_quadratic:
      return {{1e-3, 0.0}, {last - 1e-3, 1.0}};
    case CurveFamily::logistic:
      return {{-last, 0.25}, {2 * last, last}};
    case CurveFamily::logistic_midpoint:
      return {{-last}, {2 * last}};
  }
  return {};
}

SCurve make_curve(CurveFamily f, const std::vector<double>& x, const CalibrationOptions& o) {
  switch (f) {
    case CurveFamily::two_segment_linear:
      return SCurve::two_segment(o.n, SegmentShape::linear, x[0], x[1]);
    case CurveFamily::two_segment_quadratic:
      return SCurve::two_segment(o.n, SegmentShape::quadratic, x[0], x[1]);
    case CurveFamily::logistic:
      return SCurve::logistic(o.n, x[0], x[1]);
    case CurveFamily::logistic_midpoint:
      return SCurve::logistic(o.n, x[0], o.fixed_scale);
  }
  throw InvalidParameters("unknown curve family");
}

struct Fit {
  std::vector<double> achieved;
  std::vector<double> residuals;
  double objective = std::numeric_limits<double>::infinity();
};

Fit evaluate(const SCurve& curve, const std::vector<CalibrationTarget>& targets) {
  Fit fit;
  fit.objective = 0;
  for (const auto& t : targets) {
    const LimitParams p{curve, t.gT, t.gTau.value_or(default_gtau(t.gT))};
    const double w = limit_value(p, t.scheme);
    const double r = (w - t.bits) / std::max(std::abs(t.bits), 1.0);
    fit.achieved.push_back(w);
    fit.residuals.push_back(r);
    fit.objective += r * r;
  }
  return fit;
}

}  // namespace

const char* to_string(CurveFamily f) {
  for (const auto& [k, name] : kFamilyNames) {
    if (k == f) return name;
  }
  return "?";
}

std::optional<CurveFamily> parse_family(const std::string& name) {
  for (const auto& [k, n] : kFamilyNames) {
    if (name == n) return k;
  }
  return std::nullopt;
}

std::size_t free_parameters(CurveFamily f) {
  return f == CurveFamily::logistic_midpoint ? 1 : 2;
}

CalibrationResult calibrate_s(const std::vector<CalibrationTarget>& targets, CurveFamily family,
                              const CalibrationOptions& options) {
  if (targets.empty()) throw InvalidParameters("calibration needs at least one target");
  if (options.n < 3) throw InvalidParameters("calibration needs N >= 3");
  for (const auto& t : targets) {
    const std::size_t gTau = t.gTau.value_or(default_gtau(t.gT));
    if (t.gT == 0 || t.gT > options.n || gTau == 0 || gTau > t.gT) {
      throw InvalidParameters(
          fmt::format("target {} at gT = {}, gTau = {} is outside the valid range",
                      to_string(t.scheme), t.gT, gTau));
    }
  }

  const Box box = parameter_box(family, options.n);
  const std::size_t dim = box.lo.size();
  auto cost = [&](const std::vector<double>& x) {
    try {
      return evaluate(make_curve(family, x, options), targets).objective;
    } catch (const InvalidParameters&) {
      return std::numeric_limits<double>::infinity();
    }
  };

  // Coarse grid, then compass search from the best grid point.
  constexpr int kGrid = 64;
  std::vector<double> best(dim);
  double best_cost = std::numeric_limits<double>::infinity();
  std::vector<int> idx(dim, 0);
  while (true) {
    std::vector<double> x(dim);
    for (std::size_t d = 0; d < dim; ++d) {
      x[d] = box.lo[d] + (box.hi[d] - box.lo[d]) * (idx[d] + 0.5) / kGrid;
    }
    const double c = cost(x);
    if (c < best_cost) {
      best_cost = c;
      best = x;
    }
    std::size_t d = 0;
    while (d < dim && ++idx[d] == kGrid) idx[d++] = 0;
    if (d == dim) break;
  }

  std::vector<double> step(dim);
  for (std::size_t d = 0; d < dim; ++d) step[d] = (box.hi[d] - box.lo[d]) / kGrid;
  for (int iter = 0; iter < 100000; ++iter) {
    bool improved = false;
    for (std::size_t d = 0; d < dim && !improved; ++d) {
      for (double sign : {1.0, -1.0}) {
        std::vector<double> x = best;
        x[d] = std::clamp(x[d] + sign * step[d], box.lo[d], box.hi[d]);
        const double c = cost(x);
        if (c < best_cost) {
          best_cost = c;
          best = std::move(x);
          improved = true;
          break;
        }
      }
    }
    if (!improved) {
      bool done = true;
      for (std::size_t d = 0; d < dim; ++d) {
        step[d] /= 2;
        if (step[d] > 1e-12 * std::max(1.0, box.hi[d] - box.lo[d])) done = false;
      }
      if (done) break;
    }
  }

  if (!std::isfinite(best_cost)) throw NoFeasibleCurve("no valid curve in the parameter range");
  SCurve curve = make_curve(family, best, options);
  Fit fit = evaluate(curve, targets);
  double worst = 0;
  for (double r : fit.residuals) worst = std::max(worst, std::abs(r));
  if (worst > options.bound) {
    throw NoFeasibleCurve(fmt::format("best {} fit misses a target by {:.2f}% (bound {:.2f}%)",
                                      to_string(family), 100 * worst, 100 * options.bound));
  }
  return {std::move(curve), std::move(fit.achieved), std::move(fit.residuals), fit.objective};
}

}  // namespace bmcomp
