#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "bmcomp/bits.hpp"

namespace bmcomp {

enum class SegmentShape { linear, quadratic };

/// Monotone chunk-diffusion curve: S(x) is the probability that a chunk is
/// filled x slots after the service curve passed it. Defined on integer ages;
/// S(x) = 1 for every x >= width.
class SCurve {
 public:
  /// Two segments through (0, start), (knee_x, knee_y) and (N-1, end).
  /// Linear: straight lines. Quadratic: the first segment is a parabola with
  /// its vertex at the origin, the second one has its vertex at (N-1, end).
  static SCurve two_segment(std::size_t n, SegmentShape shape, double knee_x, double knee_y,
                            double start = 0.0, double end = 1.0);
  static SCurve logistic(std::size_t n, double midpoint, double scale);
  /// values[x] = S(x) for x in [0, values.size()).
  static SCurve table(std::vector<double> values);
  static SCurve constant(std::size_t n, double p);
  /// 0 below k, 1 from k on.
  static SCurve step(std::size_t n, std::size_t k);

  double operator()(std::uint64_t x) const { return x < values_.size() ? values_[x] : 1.0; }
  std::size_t width() const { return values_.size(); }
  const std::vector<double>& values() const { return values_; }

  /// Family name and parameters, enough to rebuild the curve.
  const std::string& family() const { return family_; }
  const std::vector<std::pair<std::string, double>>& params() const { return params_; }

 private:
  SCurve(std::string family, std::vector<std::pair<std::string, double>> params,
         std::vector<double> values);

  std::string family_;
  std::vector<std::pair<std::string, double>> params_;
  std::vector<double> values_;
};

const char* to_string(SegmentShape shape);

double s_eval(const SCurve& curve, std::uint64_t x);

/// Probability that chunk c is not held by a peer whose service point is s_t
/// and whose buffer is n chunks wide.
double not_fetched_prob(const SCurve& curve, std::int64_t c, std::int64_t s_t, std::size_t n);

/// P(filled by age_j | not filled at age_i). Throws DegenerateCondition when
/// S(age_i) = 1 and DomainError when age_j < age_i.
double cond_download_prob(const SCurve& curve, std::uint64_t age_i, std::uint64_t age_j);

/// Draws integer fill ages A with P(A <= x) = S(x); A <= width always.
class FillAgeSampler {
 public:
  FillAgeSampler(const SCurve& curve, std::uint64_t seed);
  std::uint32_t operator()();

 private:
  std::vector<double> cdf_;
  std::mt19937_64 rng_;
};

/// Mixes a base seed with a replica index and a stream id into an independent
/// generator seed.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t replica, std::uint64_t stream);

}  // namespace bmcomp
