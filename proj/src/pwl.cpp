#include "qubonn/pwl.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "json.hpp"

namespace qubonn::pwl {

namespace {

void check_breakpoints(const std::vector<double>& bp) {
  if (bp.size() < 2) {
    throw std::invalid_argument("piecewise function needs at least 2 breakpoints");
  }
  for (std::size_t i = 1; i < bp.size(); ++i) {
    if (!(bp[i - 1] < bp[i])) {
      throw std::invalid_argument("breakpoints must be strictly increasing");
    }
  }
  for (double b : bp) {
    if (!std::isfinite(b)) {
      throw std::invalid_argument("breakpoints must be finite");
    }
  }
}

}  // namespace

PiecewiseFn::PiecewiseFn(std::vector<double> breakpoints, std::vector<double> values)
    : breakpoints_(std::move(breakpoints)), values_(std::move(values)), kind_(Kind::Constant) {
  check_breakpoints(breakpoints_);
  if (values_.size() + 1 != breakpoints_.size()) {
    throw std::invalid_argument("need exactly one value per interval");
  }
}

PiecewiseFn::PiecewiseFn(std::vector<double> breakpoints, std::vector<double> slopes,
                         std::vector<double> intercepts)
    : breakpoints_(std::move(breakpoints)),
      slopes_(std::move(slopes)),
      intercepts_(std::move(intercepts)),
      kind_(Kind::Linear) {
  check_breakpoints(breakpoints_);
  if (slopes_.size() + 1 != breakpoints_.size() || intercepts_.size() != slopes_.size()) {
    throw std::invalid_argument("need exactly one (slope, intercept) per interval");
  }
}

int PiecewiseFn::locate_interval(double x) const {
  if (!(x >= breakpoints_.front() && x <= breakpoints_.back())) {
    throw std::out_of_range("x outside piecewise domain");
  }
  if (x == breakpoints_.back()) {
    return interval_count();
  }
  // first breakpoint strictly greater than x bounds the interval on the right
  auto it = std::upper_bound(breakpoints_.begin(), breakpoints_.end(), x);
  return static_cast<int>(it - breakpoints_.begin());
}

double PiecewiseFn::eval(double x) const {
  int i = locate_interval(x);
  if (kind_ == Kind::Constant) {
    return values_[i - 1];
  }
  return slopes_[i - 1] * x + intercepts_[i - 1];
}

std::string PiecewiseFn::to_json() const {
  nlohmann::json j;
  j["breakpoints"] = breakpoints_;
  if (kind_ == Kind::Constant) {
    j["kind"] = "constant";
    j["values"] = values_;
  } else {
    j["kind"] = "linear";
    j["slopes"] = slopes_;
    j["intercepts"] = intercepts_;
  }
  return j.dump();
}

PiecewiseFn PiecewiseFn::from_json(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text);
  std::vector<double> bp = j.at("breakpoints").get<std::vector<double>>();
  if (j.at("kind") == "constant") {
    return PiecewiseFn(std::move(bp), j.at("values").get<std::vector<double>>());
  }
  return PiecewiseFn(std::move(bp), j.at("slopes").get<std::vector<double>>(),
                     j.at("intercepts").get<std::vector<double>>());
}

PiecewiseFn build_midpoint_constant(const std::function<double(double)>& f,
                                    std::vector<double> breakpoints) {
  check_breakpoints(breakpoints);
  std::vector<double> values;
  values.reserve(breakpoints.size() - 1);
  for (std::size_t i = 1; i < breakpoints.size(); ++i) {
    double mid = 0.5 * (breakpoints[i - 1] + breakpoints[i]);
    double v = f(mid);
    if (!std::isfinite(v)) {
      throw std::invalid_argument("function not finite at interval midpoint");
    }
    values.push_back(v);
  }
  return PiecewiseFn(std::move(breakpoints), std::move(values));
}

int64_t segment_count_for_error(double half_range, double second_deriv_sup, double eps) {
  if (!(half_range > 0.0) || second_deriv_sup < 0.0) {
    throw std::invalid_argument("need half_range > 0 and second_deriv_sup >= 0");
  }
  if (!(eps > 0.0)) {
    throw std::invalid_argument("error target must be positive");
  }
  if (second_deriv_sup == 0.0) {
    return 1;
  }
  double n = std::sqrt(half_range * half_range * second_deriv_sup / (2.0 * eps));
  auto count = static_cast<int64_t>(std::ceil(n));
  return std::max<int64_t>(count, 1);
}

double network_error_bound(double eps_sigma, int max_width, int depth) {
  if (eps_sigma < 0.0 || max_width <= 0 || depth <= 0) {
    throw std::invalid_argument("invalid network error bound arguments");
  }
  return eps_sigma * std::sqrt(static_cast<double>(max_width)) * depth;
}

}  // namespace qubonn::pwl
