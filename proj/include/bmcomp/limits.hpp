#pragma once

#include <cstddef>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "bmcomp/s_curve.hpp"

namespace bmcomp {

/// gT and gTau are chunks per exchange period and per send-offset interval.
/// The buffer width is the curve's width.
struct LimitParams {
  const SCurve& curve;
  std::size_t gT;
  std::size_t gTau;
};

struct Directional {
  double ab = 0;
  double ba = 0;
  double avg = 0;
};

/// Entropy of a Bernoulli(x) source in bits. Throws DomainError outside [0, 1].
double binary_entropy(double x);

double w_trad(const LimitParams& p);
double w_srw(const LimitParams& p, bool with_offset);
Directional w_crw(const LimitParams& p);
double w_jfs(const LimitParams& p);
Directional w_jfc(const LimitParams& p);

enum class Scheme { trad, srw1, srw2, crw, crw_ab, crw_ba, jfs, jfc, jfc_ab, jfc_ba };

const char* to_string(Scheme s);
std::optional<Scheme> parse_scheme(const std::string& name);

/// Throws InvalidParameters unless 0 < gT <= N and 0 < gTau <= gT.
void validate(const LimitParams& p);
double limit_value(const LimitParams& p, Scheme s);

struct LimitRow {
  Scheme scheme;
  std::size_t gT;
  std::size_t gTau;
  double bits;
};

using LimitTable = std::vector<LimitRow>;

/// gTau used when a sweep does not fix it: gT / 2 rounded down, at least 1.
std::size_t default_gtau(std::size_t gT);

/// The headline schemes in table order: trad, srw1, srw2, crw, jfs, jfc.
const std::vector<Scheme>& table_schemes();

/// One row per scheme per gT, with gTau = default_gtau(gT).
LimitTable sweep(const SCurve& curve, const std::vector<std::size_t>& gTs,
                 const std::vector<Scheme>& schemes = table_schemes());

/// Fixed gT, one row per scheme per gTau.
LimitTable tau_sweep(const SCurve& curve, std::size_t gT, const std::vector<std::size_t>& gTaus,
                     const std::vector<Scheme>& schemes = table_schemes());

/// scheme,gT,gTau,bits,bits_per_period. bits_per_period is bits per second:
/// the exchange period lasts gT / rate seconds.
void write_limits_csv(std::ostream& out, const LimitTable& table, double rate);

/// One line per (gT, gTau) with a column per scheme; whitespace separated for
/// plotting tools.
void write_limits_pivot(std::ostream& out, const LimitTable& table, double rate);

struct CalibrationTarget {
  Scheme scheme;
  std::size_t gT;
  double bits;
  /// Defaults to default_gtau(gT).
  std::optional<std::size_t> gTau;
};

enum class CurveFamily {
  two_segment_linear,
  two_segment_quadratic,
  logistic,
  /// Logistic with a fixed scale; only the midpoint is free.
  logistic_midpoint,
};

const char* to_string(CurveFamily f);
std::optional<CurveFamily> parse_family(const std::string& name);
std::size_t free_parameters(CurveFamily f);

struct CalibrationOptions {
  std::size_t n = 456;
  /// Largest acceptable |relative residual| over the targets.
  double bound = 0.02;
  /// Scale used by logistic_midpoint.
  double fixed_scale = 20.0;
};

struct CalibrationResult {
  SCurve curve;
  std::vector<double> achieved;
  /// (achieved - target) / max(|target|, 1) per target.
  std::vector<double> residuals;
  double objective = 0;
};

/// Grid search followed by pattern-search refinement of the family's free
/// parameters. Throws NoFeasibleCurve when the best fit misses the bound and
/// InvalidParameters for an empty or malformed target list.
CalibrationResult calibrate_s(const std::vector<CalibrationTarget>& targets, CurveFamily family,
                              const CalibrationOptions& options = {});

}  // namespace bmcomp
