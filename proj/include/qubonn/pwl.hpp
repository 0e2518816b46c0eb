#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace qubonn::pwl {

enum class Kind { Constant, Linear };

/// Piecewise function over [M_0, M_n] given by strictly increasing
/// breakpoints M_0..M_n and one value (or slope/intercept pair) per interval.
/// Interval i (1-based) is [M_{i-1}, M_i); the last interval is closed on the
/// right so every x in the domain belongs to exactly one interval.
class PiecewiseFn {
 public:
  PiecewiseFn(std::vector<double> breakpoints, std::vector<double> values);
  PiecewiseFn(std::vector<double> breakpoints, std::vector<double> slopes,
              std::vector<double> intercepts);

  Kind kind() const { return kind_; }
  int interval_count() const { return static_cast<int>(breakpoints_.size()) - 1; }
  const std::vector<double>& breakpoints() const { return breakpoints_; }
  const std::vector<double>& values() const { return values_; }
  const std::vector<double>& slopes() const { return slopes_; }
  const std::vector<double>& intercepts() const { return intercepts_; }
  double domain_min() const { return breakpoints_.front(); }
  double domain_max() const { return breakpoints_.back(); }

  /// 1-based index i with M_{i-1} <= x < M_i (last interval closed).
  /// Throws std::out_of_range outside [M_0, M_n].
  int locate_interval(double x) const;
  double eval(double x) const;

  std::string to_json() const;
  static PiecewiseFn from_json(const std::string& text);

 private:
  std::vector<double> breakpoints_;
  std::vector<double> values_;      // constant kind
  std::vector<double> slopes_;      // linear kind
  std::vector<double> intercepts_;  // linear kind
  Kind kind_;
};

/// Per-interval value = f evaluated at the interval midpoint.
PiecewiseFn build_midpoint_constant(const std::function<double(double)>& f,
                                    std::vector<double> breakpoints);

/// Smallest n with R^2*M2/(2n^2) <= eps, i.e. ceil(sqrt(R^2*M2/(2*eps)));
/// 1 when M2 == 0.
int64_t segment_count_for_error(double half_range, double second_deriv_sup,
                                double eps);

/// Whole-network sup-error bound eps_sigma * sqrt(max_width) * depth.
double network_error_bound(double eps_sigma, int max_width, int depth);

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace qubonn::pwl
