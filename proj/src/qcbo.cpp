#include "qubonn/qcbo.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace qubonn::qcbo {

const char* tag_name(VarTag tag) {
  switch (tag) {
    case VarTag::BetaOutput: return "beta_output";
    case VarTag::BetaPreact: return "beta_preact";
    case VarTag::WeightBit: return "weight_bit";
    case VarTag::BiasBit: return "bias_bit";
    case VarTag::ActivBit: return "activ_bit";
    case VarTag::AuxProduct: return "aux_product";
    case VarTag::SlackBit: return "slack_bit";
  }
  return "?";
}

VarTag tag_from_name(const std::string& name) {
  for (VarTag t : {VarTag::BetaOutput, VarTag::BetaPreact, VarTag::WeightBit, VarTag::BiasBit,
                   VarTag::ActivBit, VarTag::AuxProduct, VarTag::SlackBit}) {
    if (name == tag_name(t)) return t;
  }
  throw std::invalid_argument("unknown variable tag: " + name);
}

int VarRegistry::add(VarInfo info) {
  vars_.push_back(info);
  return static_cast<int>(vars_.size()) - 1;
}

std::map<VarTag, int> VarRegistry::counts() const {
  std::map<VarTag, int> c;
  for (const auto& v : vars_) ++c[v.tag];
  return c;
}

void LinExpr::add(int var, double coeff) {
  if (coeff != 0.0) terms.push_back({var, coeff});
}

void LinExpr::add_scaled(const LinExpr& other, double w) {
  for (const auto& t : other.terms) add(t.var, w * t.coeff);
  constant += w * other.constant;
}

void LinExpr::compact() {
  std::sort(terms.begin(), terms.end(),
            [](const LinTerm& a, const LinTerm& b) { return a.var < b.var; });
  std::vector<LinTerm> out;
  for (const auto& t : terms) {
    if (!out.empty() && out.back().var == t.var) {
      out.back().coeff += t.coeff;
    } else {
      out.push_back(t);
    }
  }
  out.erase(std::remove_if(out.begin(), out.end(),
                           [](const LinTerm& t) { return t.coeff == 0.0; }),
            out.end());
  terms = std::move(out);
}

double LinExpr::eval(const std::vector<uint8_t>& x) const {
  double v = constant;
  for (const auto& t : terms) {
    if (x[t.var]) v += t.coeff;
  }
  return v;
}

double LinExpr::min_value() const {
  double v = constant;
  for (const auto& t : terms) v += std::min(0.0, t.coeff);
  return v;
}

double LinExpr::max_value() const {
  double v = constant;
  for (const auto& t : terms) v += std::max(0.0, t.coeff);
  return v;
}

bool LinExpr::integral(double tol) const {
  auto near_int = [tol](double v) { return std::abs(v - std::round(v)) <= tol; };
  if (!near_int(constant)) return false;
  for (const auto& t : terms) {
    if (!near_int(t.coeff)) return false;
  }
  return true;
}

void QuadExpr::add_lin(int var, double coeff) {
  if (coeff != 0.0) lin.push_back({var, coeff});
}

void QuadExpr::add_quad(int a, int b, double coeff) {
  if (coeff == 0.0) return;
  if (a == b) {
    lin.push_back({a, coeff});
    return;
  }
  if (a > b) std::swap(a, b);
  quad.push_back({a, b, coeff});
}

void QuadExpr::add_scaled(const QuadExpr& other, double w) {
  if (w == 0.0) return;
  for (const auto& t : other.lin) add_lin(t.var, w * t.coeff);
  for (const auto& t : other.quad) add_quad(t.a, t.b, w * t.coeff);
  constant += w * other.constant;
}

void QuadExpr::add_scaled(const LinExpr& other, double w) {
  if (w == 0.0) return;
  for (const auto& t : other.terms) add_lin(t.var, w * t.coeff);
  constant += w * other.constant;
}

void QuadExpr::compact() {
  std::sort(lin.begin(), lin.end(),
            [](const LinTerm& a, const LinTerm& b) { return a.var < b.var; });
  std::vector<LinTerm> lo;
  for (const auto& t : lin) {
    if (!lo.empty() && lo.back().var == t.var) {
      lo.back().coeff += t.coeff;
    } else {
      lo.push_back(t);
    }
  }
  lo.erase(std::remove_if(lo.begin(), lo.end(), [](const LinTerm& t) { return t.coeff == 0.0; }),
           lo.end());
  lin = std::move(lo);

  std::sort(quad.begin(), quad.end(), [](const QuadTerm& x, const QuadTerm& y) {
    return std::tie(x.a, x.b) < std::tie(y.a, y.b);
  });
  std::vector<QuadTerm> qo;
  for (const auto& t : quad) {
    if (!qo.empty() && qo.back().a == t.a && qo.back().b == t.b) {
      qo.back().coeff += t.coeff;
    } else {
      qo.push_back(t);
    }
  }
  qo.erase(std::remove_if(qo.begin(), qo.end(), [](const QuadTerm& t) { return t.coeff == 0.0; }),
           qo.end());
  quad = std::move(qo);
}

double QuadExpr::eval(const std::vector<uint8_t>& x) const {
  double v = constant;
  for (const auto& t : lin) {
    if (x[t.var]) v += t.coeff;
  }
  for (const auto& t : quad) {
    if (x[t.a] && x[t.b]) v += t.coeff;
  }
  return v;
}

double QuadExpr::abs_coeff_sum() const {
  double s = 0.0;
  for (const auto& t : lin) s += std::abs(t.coeff);
  for (const auto& t : quad) s += std::abs(t.coeff);
  return s;
}

QuadExpr QuadExpr::square(const LinExpr& e) { return product(e, e); }

QuadExpr QuadExpr::product(const LinExpr& a, const LinExpr& b) {
  QuadExpr out;
  out.constant = a.constant * b.constant;
  for (const auto& t : a.terms) out.add_lin(t.var, t.coeff * b.constant);
  for (const auto& t : b.terms) out.add_lin(t.var, t.coeff * a.constant);
  for (const auto& ta : a.terms) {
    for (const auto& tb : b.terms) {
      out.add_quad(ta.var, tb.var, ta.coeff * tb.coeff);
    }
  }
  out.compact();
  return out;
}

bool QcboModel::feasible(const std::vector<uint8_t>& x, double tol) const {
  for (const auto& c : eq) {
    if (std::abs(c.expr.eval(x) - c.rhs) > tol) return false;
  }
  for (const auto& c : ineq) {
    if (c.expr.eval(x) > c.rhs + tol) return false;
  }
  for (const auto& c : quad_constraints) {
    double v = c.expr.eval(x);
    if (c.sense == Sense::Eq ? std::abs(v - c.rhs) > tol : v > c.rhs + tol) return false;
  }
  return true;
}

double QcboModel::objective_value(const std::vector<uint8_t>& x) const {
  return objective.eval(x);
}

EncodedInt encode_integer(QcboModel& m, int bits, bool is_signed, VarTag tag,
                          std::array<int, 4> idx) {
  if (bits < 1) {
    throw std::invalid_argument("bit count must be >= 1");
  }
  EncodedInt enc;
  for (int l = 0; l < bits; ++l) {
    VarInfo info{tag, idx};
    // the first free index slot carries the bit position
    int slot = 3;
    for (int s = 0; s < 4; ++s) {
      if (info.idx[s] == -1) {
        slot = s;
        break;
      }
    }
    info.idx[slot] = l;
    int id = m.vars.add(info);
    enc.bit_ids.push_back(id);
    enc.expr.add(id, std::pow(2.0, l));
  }
  if (is_signed) {
    enc.expr.add_constant(-std::pow(2.0, bits - 1));
  }
  return enc;
}

double NetSpec::weight_value_min() const {
  return weight_code == WeightCode::PlusMinusOne ? -1.0 : -std::pow(2.0, weight_bits - 1);
}

double NetSpec::weight_value_max() const {
  return weight_code == WeightCode::PlusMinusOne ? 1.0 : std::pow(2.0, weight_bits - 1) - 1;
}

double NetSpec::bias_value_min() const {
  return bias_code == WeightCode::PlusMinusOne ? -1.0 : -std::pow(2.0, bias_bits - 1);
}

double NetSpec::bias_value_max() const {
  return bias_code == WeightCode::PlusMinusOne ? 1.0 : std::pow(2.0, bias_bits - 1) - 1;
}

std::vector<double> NetSpec::coded_activation_values() const {
  const double scale = std::pow(10.0, code_decimals);
  std::vector<double> out;
  out.reserve(activation.values().size());
  for (double v : activation.values()) {
    out.push_back(std::round(v * scale) / scale);
  }
  return out;
}

int64_t NetSpec::code_scale() const {
  const auto values = coded_activation_values();
  const int64_t base = static_cast<int64_t>(std::llround(std::pow(10.0, code_decimals)));
  int64_t scale = 1;
  for (double v : values) {
    int64_t k = std::llround(std::abs(v) * base);
    int64_t denom = base / std::gcd(k, base);  // gcd(0, base) = base
    scale = std::lcm(scale, denom);
  }
  return scale;
}

int NetSpec::activation_bits() const {
  const auto values = coded_activation_values();
  const int64_t scale = code_scale();
  int64_t lo = std::numeric_limits<int64_t>::max(), hi = std::numeric_limits<int64_t>::min();
  for (double v : values) {
    int64_t c = std::llround(v * static_cast<double>(scale));
    lo = std::min<int64_t>(lo, c);
    hi = std::max<int64_t>(hi, c);
  }
  int64_t span = hi - lo;
  int bits = 1;
  while ((int64_t(1) << bits) - 1 < span) ++bits;
  return bits;
}

double NetSpec::loss_value(int interval, int label) const {
  const auto values = coded_activation_values();
  double pred = values.at(interval - 1);
  double diff = pred - static_cast<double>(label);
  return diff * diff;
}

void NetSpec::validate() const {
  if (dims.size() < 3) {
    throw std::invalid_argument("network needs at least one hidden layer");
  }
  for (int d : dims) {
    if (d < 1) throw std::invalid_argument("layer dimensions must be positive");
  }
  if (dims.back() != 1) {
    throw std::invalid_argument("output dimension must be 1");
  }
  if (weight_bits < 1 || bias_bits < 1) {
    throw std::invalid_argument("bit widths must be >= 1");
  }
  if (weight_code == WeightCode::PlusMinusOne && weight_bits != 1) {
    throw std::invalid_argument("plus/minus-one weight code needs 1 bit");
  }
  if (bias_code == WeightCode::PlusMinusOne && bias_bits != 1) {
    throw std::invalid_argument("plus/minus-one bias code needs 1 bit");
  }
  if (activation.kind() != pwl::Kind::Constant) {
    throw std::invalid_argument("QCBO encoding consumes constant-kind activations");
  }

  const double w_abs = std::max(std::abs(weight_value_min()), std::abs(weight_value_max()));
  const double b_abs = std::max(std::abs(bias_value_min()), std::abs(bias_value_max()));
  double in_abs = feature_bound;
  const auto values = coded_activation_values();
  double act_abs = 0.0;
  for (double v : values) act_abs = std::max(act_abs, std::abs(v));

  for (int l = 1; l < static_cast<int>(dims.size()); ++l) {
    double bound = dims[l - 1] * w_abs * in_abs + b_abs;
    if (-bound < activation.domain_min() || bound > activation.domain_max()) {
      std::ostringstream msg;
      msg << "layer " << l << " pre-activation range [" << -bound << ", " << bound
          << "] exceeds activation domain [" << activation.domain_min() << ", "
          << activation.domain_max() << "]";
      throw std::invalid_argument(msg.str());
    }
    in_abs = act_abs;
  }
}

std::string NetSpec::to_json() const {
  nlohmann::json j;
  j["dims"] = dims;
  j["weight_bits"] = weight_bits;
  j["weight_code"] = weight_code == WeightCode::PlusMinusOne ? "pm1" : "offset";
  j["bias_bits"] = bias_bits;
  j["bias_code"] = bias_code == WeightCode::PlusMinusOne ? "pm1" : "offset";
  j["activation"] = nlohmann::json::parse(activation.to_json());
  j["feature_bound"] = feature_bound;
  j["code_decimals"] = code_decimals;
  return j.dump(2);
}

NetSpec NetSpec::from_json(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text);
  NetSpec spec(j.at("dims").get<std::vector<int>>(),
               pwl::PiecewiseFn::from_json(j.at("activation").dump()));
  spec.weight_bits = j.at("weight_bits").get<int>();
  spec.weight_code = j.at("weight_code") == "pm1" ? WeightCode::PlusMinusOne
                                                  : WeightCode::OffsetBinary;
  spec.bias_bits = j.at("bias_bits").get<int>();
  spec.bias_code = j.at("bias_code") == "pm1" ? WeightCode::PlusMinusOne
                                              : WeightCode::OffsetBinary;
  spec.feature_bound = j.at("feature_bound").get<double>();
  spec.code_decimals = j.at("code_decimals").get<int>();
  return spec;
}

namespace {

LinExpr value_expr(QcboModel& m, WeightCode code, int bits, VarTag tag, std::array<int, 4> idx) {
  if (code == WeightCode::PlusMinusOne) {
    EncodedInt enc = encode_integer(m, 1, false, tag, idx);
    LinExpr e;
    e.add(enc.bit_ids[0], 2.0);
    e.add_constant(-1.0);
    return e;
  }
  return encode_integer(m, bits, true, tag, idx).expr;
}

}  // namespace

QcboModel build_fip_model(const NetSpec& spec, const std::vector<Sample>& data) {
  spec.validate();
  if (data.empty()) {
    throw std::invalid_argument("training data must be non-empty");
  }
  const int d0 = spec.dims.front();
  for (const auto& s : data) {
    if (static_cast<int>(s.features.size()) != d0) {
      throw std::invalid_argument("feature dimension mismatch");
    }
    if (s.label != 0 && s.label != 1) {
      throw std::invalid_argument("labels must be binary");
    }
  }

  QcboModel m;
  // Interval-selection bounds: every pre-activation lies on the 1/scale grid
  // (integer features/weights, coded activations), so nudging the internal
  // boundaries half a grid step down makes ownership of on-breakpoint values
  // unambiguous and identical to the half-open evaluation convention. Without
  // this, a pre-activation parked exactly on a breakpoint lets the model pick
  // either interval per sample, which decodes inconsistently.
  const int64_t scale = spec.code_scale();
  const double grid_shift = 0.5 / static_cast<double>(scale);
  {
    const auto& raw = spec.activation.breakpoints();
    m.breakpoints = raw;
    for (std::size_t i = 1; i + 1 < raw.size(); ++i) {
      m.breakpoints[i] = raw[i] - grid_shift;
    }
  }
  const auto& bp = m.breakpoints;
  const int n_int = spec.activation.interval_count();
  const auto values = spec.coded_activation_values();
  const int a_bits = spec.activation_bits();
  int64_t min_code = std::numeric_limits<int64_t>::max();
  for (double v : values) {
    min_code = std::min<int64_t>(min_code, std::llround(v * static_cast<double>(scale)));
  }

  const int depth = spec.depth();
  double total_weight = 0.0;
  for (const auto& s : data) total_weight += s.weight;
  if (!(total_weight > 0.0)) {
    throw std::invalid_argument("total sample weight must be positive");
  }

  // Weights and biases are shared across samples; create them first.
  std::vector<std::vector<std::vector<LinExpr>>> weight(depth + 1);
  std::vector<std::vector<LinExpr>> bias(depth + 1);
  for (int l = 1; l <= depth; ++l) {
    weight[l].resize(spec.dims[l]);
    bias[l].resize(spec.dims[l]);
    for (int j = 0; j < spec.dims[l]; ++j) {
      weight[l][j].resize(spec.dims[l - 1]);
      for (int k = 0; k < spec.dims[l - 1]; ++k) {
        weight[l][j][k] =
            value_expr(m, spec.weight_code, spec.weight_bits, VarTag::WeightBit, {l, j, k, -1});
      }
      bias[l][j] = value_expr(m, spec.bias_code, spec.bias_bits, VarTag::BiasBit, {l, j, -1, -1});
    }
  }

  for (int s = 0; s < static_cast<int>(data.size()); ++s) {
    const Sample& sample = data[s];
    // activations feeding the current layer; layer 0 inputs are constants
    std::vector<LinExpr> prev(d0);
    std::vector<std::vector<int>> prev_bits(d0);
    for (int k = 0; k < d0; ++k) {
      prev[k].add_constant(sample.features[k]);
    }

    for (int l = 1; l <= depth; ++l) {
      std::vector<LinExpr> next(spec.dims[l]);
      std::vector<std::vector<int>> next_bits(spec.dims[l]);
      for (int j = 0; j < spec.dims[l]; ++j) {
        QuadExpr h;
        for (int k = 0; k < spec.dims[l - 1]; ++k) {
          if (prev_bits[k].empty()) {
            // constant input: w * feature stays linear
            h.add_scaled(weight[l][j][k], prev[k].constant);
          } else {
            h.add_scaled(QuadExpr::product(weight[l][j][k], prev[k]), 1.0);
            for (const auto& wt : weight[l][j][k].terms) {
              BilinearGroup g;
              g.weight_var = wt.var;
              g.bit_vars = prev_bits[k];
              for (int b = 0; b < static_cast<int>(prev_bits[k].size()); ++b) {
                g.bit_coeffs.push_back(std::pow(2.0, b) / static_cast<double>(scale));
              }
              m.bilinear_groups.push_back(std::move(g));
            }
          }
        }
        h.add_scaled(bias[l][j], 1.0);
        h.compact();

        std::vector<int> beta(n_int);
        for (int i = 0; i < n_int; ++i) {
          VarInfo info;
          if (l == depth) {
            info = {VarTag::BetaOutput, {s, i + 1, -1, -1}};
          } else {
            info = {VarTag::BetaPreact, {s, l, j, i + 1}};
          }
          beta[i] = m.vars.add(info);
        }

        LinConstraint onehot;
        for (int id : beta) onehot.expr.add(id, 1.0);
        onehot.rhs = 1.0;
        onehot.kind = kRowOneHot;
        m.eq.push_back(std::move(onehot));

        // interval band: sum_i beta_i M_{i-1} <= h <= sum_i beta_i M_i
        QuadExpr lower;  // sum beta_i M_{i-1} - h <= 0
        QuadExpr upper;  // h - sum beta_i M_i <= 0
        for (int i = 0; i < n_int; ++i) {
          lower.add_lin(beta[i], bp[i]);
          upper.add_lin(beta[i], -bp[i + 1]);
        }
        lower.add_scaled(h, -1.0);
        upper.add_scaled(h, 1.0);
        lower.compact();
        upper.compact();
        for (QuadExpr* row : {&lower, &upper}) {
          if (row->is_linear()) {
            LinConstraint c;
            c.expr.terms = row->lin;
            c.expr.constant = row->constant;
            c.rhs = 0.0;
            c.kind = kRowInterval;
            m.ineq.push_back(std::move(c));
          } else {
            QuadConstraint c;
            c.expr = *row;
            c.rhs = 0.0;
            c.sense = Sense::Le;
            c.kind = kRowInterval;
            m.quad_constraints.push_back(std::move(c));
          }
        }

        IntervalBlock block;
        block.beta_ids = beta;
        block.preact = h;
        block.sample = s;
        block.layer = l;
        block.neuron = j;
        m.blocks.push_back(std::move(block));

        if (l < depth) {
          EncodedInt enc = encode_integer(m, a_bits, false, VarTag::ActivBit, {s, l, j, -1});
          LinExpr a_expr;
          for (int b = 0; b < a_bits; ++b) {
            a_expr.add(enc.bit_ids[b], std::pow(2.0, b) / static_cast<double>(scale));
          }
          a_expr.add_constant(static_cast<double>(min_code) / static_cast<double>(scale));

          LinConstraint activ;
          activ.expr = a_expr;
          for (int i = 0; i < n_int; ++i) activ.expr.add(beta[i], -values[i]);
          activ.expr.compact();
          activ.rhs = 0.0;
          activ.kind = kRowActivEq;
          m.eq.push_back(std::move(activ));

          next[j] = a_expr;
          next_bits[j] = enc.bit_ids;
        } else {
          double w = sample.weight / total_weight;
          for (int i = 0; i < n_int; ++i) {
            m.objective.add_lin(beta[i], w * spec.loss_value(i + 1, sample.label));
          }
        }
      }
      prev = std::move(next);
      prev_bits = std::move(next_bits);
    }
  }

  m.objective.compact();
  m.objective_abs_sum_hint = m.objective.abs_coeff_sum();
  return m;
}

RosenbergResult rosenberg_reduce(QcboModel& m, int x1, int x2) {
  RosenbergResult r;
  r.y_id = m.vars.add({VarTag::AuxProduct, {x1, x2, -1, -1}});
  r.penalty.add_lin(r.y_id, 3.0);
  r.penalty.add_quad(x1, x2, 1.0);
  r.penalty.add_quad(r.y_id, x1, -2.0);
  r.penalty.add_quad(r.y_id, x2, -2.0);
  return r;
}

int linearize_product(QcboModel& m, int xi, int xj) {
  int y = m.vars.add({VarTag::AuxProduct, {xi, xj, -1, -1}});
  LinConstraint c1;  // x_ij - x_i <= 0
  c1.expr.add(y, 1.0);
  c1.expr.add(xi, -1.0);
  c1.rhs = 0.0;
  LinConstraint c2;  // x_ij - x_j <= 0
  c2.expr.add(y, 1.0);
  c2.expr.add(xj, -1.0);
  c2.rhs = 0.0;
  LinConstraint c3;  // x_i + x_j - x_ij <= 1
  c3.expr.add(xi, 1.0);
  c3.expr.add(xj, 1.0);
  c3.expr.add(y, -1.0);
  c3.rhs = 1.0;
  m.ineq.push_back(std::move(c1));
  m.ineq.push_back(std::move(c2));
  m.ineq.push_back(std::move(c3));
  return y;
}

WeightedBilinearResult linearize_weighted_bilinear(QcboModel& m, int weight_var,
                                                   const std::vector<int>& bit_vars,
                                                   const std::vector<double>& bit_coeffs) {
  if (bit_vars.empty() || bit_vars.size() != bit_coeffs.size()) {
    throw std::invalid_argument("bad bilinear group");
  }
  LinExpr e;  // the encoded integer expression
  double upper = 0.0;
  for (std::size_t i = 0; i < bit_vars.size(); ++i) {
    if (bit_coeffs[i] <= 0.0) {
      throw std::invalid_argument("bilinear bit coefficients must be positive");
    }
    e.add(bit_vars[i], bit_coeffs[i]);
    upper += bit_coeffs[i];
  }

  WeightedBilinearResult r;
  // z encoded on the same grid as e: fresh bits with the same coefficients
  for (std::size_t i = 0; i < bit_vars.size(); ++i) {
    int id = m.vars.add({VarTag::AuxProduct, {weight_var, bit_vars[i], -1, -1}});
    r.z_bit_ids.push_back(id);
    r.z_expr.add(id, bit_coeffs[i]);
  }

  LinConstraint c1;  // e + U*w - z <= U
  c1.expr.add_scaled(e, 1.0);
  c1.expr.add(weight_var, upper);
  c1.expr.add_scaled(r.z_expr, -1.0);
  c1.expr.compact();
  c1.rhs = upper;
  LinConstraint c2;  // z - e <= 0
  c2.expr.add_scaled(r.z_expr, 1.0);
  c2.expr.add_scaled(e, -1.0);
  c2.expr.compact();
  c2.rhs = 0.0;
  LinConstraint c3;  // z - U*w <= 0
  c3.expr.add_scaled(r.z_expr, 1.0);
  c3.expr.add(weight_var, -upper);
  c3.expr.compact();
  c3.rhs = 0.0;
  m.ineq.push_back(std::move(c1));
  m.ineq.push_back(std::move(c2));
  m.ineq.push_back(std::move(c3));
  return r;
}

namespace {

// Replaces quadratic terms in `e` using the substitution map; returns the
// leftover pairs that had no substitution.
void substitute_products(QuadExpr& e, const std::map<std::pair<int, int>, LinExpr>& subs) {
  std::vector<QuadTerm> rest;
  for (const auto& t : e.quad) {
    auto it = subs.find({t.a, t.b});
    if (it == subs.end()) {
      rest.push_back(t);
    } else {
      e.add_scaled(it->second, t.coeff);
    }
  }
  e.quad = std::move(rest);
  e.compact();
}

std::set<std::pair<int, int>> collect_pairs(const QcboModel& m) {
  std::set<std::pair<int, int>> pairs;
  for (const auto& c : m.quad_constraints) {
    for (const auto& t : c.expr.quad) pairs.insert({t.a, t.b});
  }
  return pairs;
}

}  // namespace

QcboModel linearize_all(const QcboModel& model, LinearizeStrategy strategy) {
  QcboModel m = model;
  if (m.is_linearized()) {
    return m;
  }

  std::map<std::pair<int, int>, LinExpr> subs;

  if (strategy == LinearizeStrategy::Constraints) {
    // grouped bilinear terms first: one encoded z per recorded group
    std::set<std::pair<int, int>> pairs = collect_pairs(m);
    for (const auto& g : m.bilinear_groups) {
      bool all_present = !g.bit_vars.empty();
      for (int b : g.bit_vars) {
        auto key = std::minmax(g.weight_var, b);
        if (!pairs.count({key.first, key.second})) {
          all_present = false;
          break;
        }
      }
      if (!all_present) continue;
      auto key0 = std::minmax(g.weight_var, g.bit_vars[0]);
      if (subs.count({key0.first, key0.second})) continue;  // already covered
      WeightedBilinearResult r = linearize_weighted_bilinear(m, g.weight_var, g.bit_vars,
                                                             g.bit_coeffs);
      for (std::size_t i = 0; i < g.bit_vars.size(); ++i) {
        auto key = std::minmax(g.weight_var, g.bit_vars[i]);
        // w * delta_i = z_i (the z bit on the same coefficient)
        LinExpr rep;
        rep.add(r.z_bit_ids[i], 1.0);
        subs[{key.first, key.second}] = rep;
      }
    }
    // any remaining product gets a McCormick auxiliary
    for (const auto& p : collect_pairs(m)) {
      if (subs.count(p)) continue;
      int y = linearize_product(m, p.first, p.second);
      LinExpr rep;
      rep.add(y, 1.0);
      subs[p] = rep;
    }
  } else {
    double lambda = 1.0 + (m.objective_abs_sum_hint > 0.0 ? m.objective_abs_sum_hint
                                                          : m.objective.abs_coeff_sum());
    for (const auto& p : collect_pairs(m)) {
      RosenbergResult r = rosenberg_reduce(m, p.first, p.second);
      m.objective.add_scaled(r.penalty, lambda);
      LinExpr rep;
      rep.add(r.y_id, 1.0);
      subs[p] = rep;
    }
    m.objective.compact();
  }

  for (auto& c : m.quad_constraints) {
    substitute_products(c.expr, subs);
    if (!c.expr.is_linear()) {
      throw std::logic_error("linearization left a quadratic constraint");
    }
    LinConstraint lc;
    lc.expr.terms = c.expr.lin;
    lc.expr.constant = c.expr.constant;
    lc.rhs = c.rhs;
    lc.kind = c.kind;
    if (c.sense == Sense::Eq) {
      m.eq.push_back(std::move(lc));
    } else {
      m.ineq.push_back(std::move(lc));
    }
  }
  m.quad_constraints.clear();

  for (auto& b : m.blocks) {
    substitute_products(b.preact, subs);
  }
  return m;
}

namespace {

struct ActivationSub {
  double bit_coeff = 0.0;   // c_b in a = const + sum c_b delta_b
  int def_index = -1;
};

struct ActivationDef {
  double constant = 0.0;  // const in a = const + sum c_b delta_b
  LinExpr selector;       // sum_i v_i beta_i
};

// rewrites every activation-bit occurrence through a = selector
void substitute_activation_terms(QuadExpr& e, const std::map<int, ActivationSub>& subs,
                                 const std::vector<ActivationDef>& defs) {
  // linear occurrences: group by definition, verify proportionality
  std::map<int, double> lin_factor;  // def -> g with coeff_b = g * c_b
  std::vector<LinTerm> lin_rest;
  for (const auto& t : e.lin) {
    auto it = subs.find(t.var);
    if (it == subs.end()) {
      lin_rest.push_back(t);
      continue;
    }
    double g = t.coeff / it->second.bit_coeff;
    auto [fit, inserted] = lin_factor.emplace(it->second.def_index, g);
    if (!inserted && std::abs(fit->second - g) > 1e-9 * std::max(1.0, std::abs(g))) {
      throw std::logic_error("activation bits appear non-proportionally");
    }
  }
  // quadratic occurrences: group by (other var, definition)
  std::map<std::pair<int, int>, double> quad_factor;  // (other, def) -> g
  std::vector<QuadTerm> quad_rest;
  for (const auto& t : e.quad) {
    auto ia = subs.find(t.a);
    auto ib = subs.find(t.b);
    if (ia == subs.end() && ib == subs.end()) {
      quad_rest.push_back(t);
      continue;
    }
    if (ia != subs.end() && ib != subs.end()) {
      throw std::logic_error("products between activation bits are not supported");
    }
    int other = ia != subs.end() ? t.b : t.a;
    const ActivationSub& sub = ia != subs.end() ? ia->second : ib->second;
    double g = t.coeff / sub.bit_coeff;
    auto key = std::make_pair(other, sub.def_index);
    auto [fit, inserted] = quad_factor.emplace(key, g);
    if (!inserted && std::abs(fit->second - g) > 1e-9 * std::max(1.0, std::abs(g))) {
      throw std::logic_error("activation bits appear non-proportionally");
    }
  }

  e.lin = std::move(lin_rest);
  e.quad = std::move(quad_rest);
  // sum_b c_b delta_b == selector - const
  for (const auto& [def_index, g] : lin_factor) {
    const ActivationDef& def = defs[def_index];
    e.add_scaled(def.selector, g);
    e.add_constant(-g * def.constant);
  }
  for (const auto& [key, g] : quad_factor) {
    const auto& [other, def_index] = key;
    const ActivationDef& def = defs[def_index];
    for (const auto& t : def.selector.terms) {
      e.add_quad(other, t.var, g * t.coeff);
    }
    e.add_lin(other, g * (def.selector.constant - def.constant));
  }
  e.compact();
}

}  // namespace

QcboModel presolve_activations(const QcboModel& model) {
  QcboModel m = model;

  std::vector<ActivationDef> defs;
  std::map<int, ActivationSub> subs;
  std::vector<LinConstraint> kept_eq;
  for (const auto& c : m.eq) {
    if (c.kind != kRowActivEq) {
      kept_eq.push_back(c);
      continue;
    }
    // row: const + sum c_b delta_b - sum v_i beta_i = 0
    ActivationDef def;
    def.constant = c.expr.constant - c.rhs;
    std::vector<std::pair<int, double>> bits;
    for (const auto& t : c.expr.terms) {
      VarTag tag = m.vars.info(t.var).tag;
      if (tag == VarTag::ActivBit) {
        bits.emplace_back(t.var, t.coeff);
      } else {
        def.selector.add(t.var, -t.coeff);
      }
    }
    int def_index = static_cast<int>(defs.size());
    for (const auto& [var, coeff] : bits) {
      subs[var] = {coeff, def_index};
    }
    defs.push_back(std::move(def));
  }
  if (defs.empty()) {
    return m;
  }
  m.eq = std::move(kept_eq);

  for (auto& c : m.quad_constraints) {
    substitute_activation_terms(c.expr, subs, defs);
  }
  for (auto& c : m.ineq) {
    QuadExpr wrapped;
    wrapped.lin = c.expr.terms;
    wrapped.constant = c.expr.constant;
    substitute_activation_terms(wrapped, subs, defs);
    if (!wrapped.is_linear()) {
      throw std::logic_error("linear row became quadratic during presolve");
    }
    c.expr.terms = wrapped.lin;
    c.expr.constant = wrapped.constant;
  }
  for (auto& b : m.blocks) {
    substitute_activation_terms(b.preact, subs, defs);
  }
  substitute_activation_terms(m.objective, subs, defs);

  // bilinear groups over substituted bits are gone
  std::vector<BilinearGroup> kept_groups;
  for (const auto& g : m.bilinear_groups) {
    bool touches = subs.count(g.weight_var) > 0;
    for (int b : g.bit_vars) touches = touches || subs.count(b) > 0;
    if (!touches) kept_groups.push_back(g);
  }
  m.bilinear_groups = std::move(kept_groups);
  return m;
}

namespace {

// slack in [-1/2, 1/2] on the 2^k grid -1/2 + j/2^k; the grid contains 0.
LinExpr centered_slack(QcboModel& m, int bits, int group) {
  LinExpr s;
  double step = 1.0 / std::pow(2.0, bits);
  for (int b = 0; b < bits; ++b) {
    int id = m.vars.add({VarTag::SlackBit, {group, b, -1, -1}});
    s.add(id, step * std::pow(2.0, b));
  }
  s.add_constant(-0.5);
  return s;
}

int next_slack_group(const QcboModel& m) {
  int g = 0;
  for (int i = 0; i < m.vars.size(); ++i) {
    const auto& v = m.vars.info(i);
    if (v.tag == VarTag::SlackBit) g = std::max(g, v.idx[0] + 1);
  }
  return g;
}

}  // namespace

QuadExpr interval_ineq_to_penalty(QcboModel& m, const IntervalBlock& block,
                                  const std::vector<double>& breakpoints, PenaltyMode mode,
                                  int slack_bits) {
  const int n = static_cast<int>(breakpoints.size()) - 1;
  if (n < 1 || static_cast<int>(block.beta_ids.size()) != n) {
    throw std::invalid_argument("block/breakpoint mismatch");
  }
  if (!block.preact.is_linear() &&
      !(mode == PenaltyMode::Midpoint)) {
    throw std::invalid_argument("pre-activation must be linear for slack-mode penalties");
  }
  LinExpr h;
  h.terms = block.preact.lin;
  h.constant = block.preact.constant;

  const int group = next_slack_group(m);

  if (mode == PenaltyMode::Slack) {
    double dm = breakpoints[1] - breakpoints[0];
    for (int i = 1; i < n; ++i) {
      if (std::abs((breakpoints[i + 1] - breakpoints[i]) - dm) > 1e-9 * std::max(1.0, dm)) {
        throw std::invalid_argument("slack mode requires uniform interval widths");
      }
    }
    if (!block.preact.is_linear()) {
      throw std::invalid_argument("pre-activation must be linear for slack-mode penalties");
    }
    // s = dm * (sum 2^l delta) / (2^k - 1) in [0, dm]
    LinExpr s;
    double denom = std::pow(2.0, slack_bits) - 1.0;
    for (int b = 0; b < slack_bits; ++b) {
      int id = m.vars.add({VarTag::SlackBit, {group, b, -1, -1}});
      s.add(id, dm * std::pow(2.0, b) / denom);
    }
    LinExpr inner;  // sum beta_i M_{i-1} + s - h
    for (int i = 0; i < n; ++i) inner.add(block.beta_ids[i], breakpoints[i]);
    inner.add_scaled(s, 1.0);
    inner.add_scaled(h, -1.0);
    inner.compact();
    return QuadExpr::square(inner);
  }

  // midpoint mode
  LinExpr s = centered_slack(m, slack_bits, group);
  std::vector<LinExpr> c(n);
  for (int i = 0; i < n; ++i) {
    double width = breakpoints[i + 1] - breakpoints[i];
    c[i].add_scaled(h, 2.0 / (2.0 * width));
    c[i].add_constant(-(breakpoints[i] + breakpoints[i + 1]) / (2.0 * width));
  }

  // sum_i b_i (c_i + s)^2 with b_n = 1 - sum_{i<n} beta_i, expanded as
  // (c_n + s)^2 + sum_{i<n} beta_i [ (c_i + s)^2 - (c_n + s)^2 ]
  std::vector<QuadExpr> sq(n);
  for (int i = 0; i < n; ++i) {
    LinExpr e = c[i];
    e.add_scaled(s, 1.0);
    e.compact();
    sq[i] = QuadExpr::square(e);
  }

  QuadExpr penalty = sq[n - 1];
  QuadExpr rosenberg_total;
  std::map<std::pair<int, int>, int> pair_cache;
  for (int i = 0; i + 1 < n; ++i) {
    QuadExpr diff = sq[i];
    diff.add_scaled(sq[n - 1], -1.0);
    diff.compact();
    int beta = block.beta_ids[i];
    penalty.add_lin(beta, diff.constant);
    for (const auto& t : diff.lin) {
      if (t.var == beta) {
        penalty.add_lin(beta, t.coeff);
      } else {
        penalty.add_quad(beta, t.var, t.coeff);
      }
    }
    for (const auto& t : diff.quad) {
      // beta * u * v: substitute u*v with a Rosenberg auxiliary
      auto key = std::make_pair(t.a, t.b);
      auto it = pair_cache.find(key);
      int y;
      if (it == pair_cache.end()) {
        RosenbergResult r = rosenberg_reduce(m, t.a, t.b);
        rosenberg_total.add_scaled(r.penalty, 1.0);
        y = r.y_id;
        pair_cache.emplace(key, y);
      } else {
        y = it->second;
      }
      penalty.add_quad(beta, y, t.coeff);
    }
  }
  penalty.compact();
  if (!rosenberg_total.lin.empty() || !rosenberg_total.quad.empty()) {
    double lambda = 1.0 + penalty.abs_coeff_sum();
    penalty.add_scaled(rosenberg_total, lambda);
    penalty.compact();
  }
  return penalty;
}

SignActivation encode_sign_activation(QcboModel& m, const LinExpr& x_expr, double sup_abs_x,
                                      double lambda, int slack_bits) {
  if (!(sup_abs_x > 0.0) || !(lambda > 0.0)) {
    throw std::invalid_argument("need positive bound and penalty weight");
  }
  SignActivation out;
  out.beta_id = m.vars.add({VarTag::BetaOutput, {-1, -1, -1, -1}});
  LinExpr s = centered_slack(m, slack_bits, next_slack_group(m));

  // (2x + M) / (2M) + s
  LinExpr bterm;
  bterm.add_scaled(x_expr, 1.0 / sup_abs_x);
  bterm.add_constant(0.5);
  bterm.add_scaled(s, 1.0);
  bterm.compact();

  // beta * [ ((2x-M)/(2M)+s)^2 - ((2x+M)/(2M)+s)^2 ] = beta * (-2x/M - 2s)
  QuadExpr penalty = QuadExpr::square(bterm);
  penalty.add_lin(out.beta_id, 0.0);
  LinExpr swing;
  swing.add_scaled(x_expr, -2.0 / sup_abs_x);
  swing.add_scaled(s, -2.0);
  swing.compact();
  penalty.add_lin(out.beta_id, swing.constant);
  for (const auto& t : swing.terms) {
    penalty.add_quad(out.beta_id, t.var, t.coeff);
  }
  penalty.compact();

  out.objective.add_lin(out.beta_id, 2.0);
  out.objective.add_constant(-1.0);
  out.objective.add_scaled(penalty, lambda);
  out.objective.compact();
  return out;
}

SpinReport spin_report(const QcboModel& model) {
  SpinReport r;
  for (const auto& [tag, count] : model.vars.counts()) {
    r.per_family[tag_name(tag)] = count;
  }
  r.total = model.var_count();
  return r;
}

std::string spin_report_json(const SpinReport& report) {
  nlohmann::json j;
  j["total"] = report.total;
  j["per_family"] = report.per_family;
  return j.dump(2);
}

int64_t sample_complexity(const std::vector<int>& dims, int bits, double eps, double alpha,
                          double c_max) {
  if (dims.size() < 2) {
    throw std::invalid_argument("need at least input and output dimensions");
  }
  if (bits < 1) {
    throw std::invalid_argument("bit width must be >= 1");
  }
  if (!(eps > 0.0 && eps < 1.0) || !(alpha > 0.0 && alpha < 1.0) || !(c_max > 0.0)) {
    throw std::invalid_argument("need eps, alpha in (0,1) and c_max > 0");
  }
  double param_count = 0.0;
  for (std::size_t l = 1; l < dims.size(); ++l) {
    param_count += static_cast<double>(dims[l]) * (dims[l - 1] + 1);
  }
  // ln(2 |Theta| / alpha) with |Theta| = 2^{B * params}
  double log_theta = bits * param_count * std::log(2.0);
  double bound = c_max * c_max / (2.0 * eps * eps) * (std::log(2.0) + log_theta - std::log(alpha));
  return static_cast<int64_t>(std::ceil(bound));
}

QcboBruteResult brute_force_qcbo(const QcboModel& model, int cap) {
  const int n = model.var_count();
  if (n > cap) {
    throw std::invalid_argument("QCBO brute force cap exceeded");
  }
  QcboBruteResult res;
  std::vector<uint8_t> x(n, 0);
  const uint64_t total = 1ULL << n;
  // near-equal values count as ties so tie-breaking survives the float
  // summation-order differences a linearization introduces
  const double tie_tol = 1e-9;
  for (uint64_t k = 0; k < total; ++k) {
    for (int b = 0; b < n; ++b) x[b] = static_cast<uint8_t>((k >> b) & 1u);
    if (!model.feasible(x)) continue;
    double v = model.objective_value(x);
    if (!res.feasible || v < res.best_value - tie_tol) {
      res.feasible = true;
      res.best_value = v;
      res.best = x;
    } else if (std::abs(v - res.best_value) <= tie_tol &&
               std::lexicographical_compare(x.begin(), x.end(), res.best.begin(),
                                            res.best.end())) {
      res.best_value = std::min(res.best_value, v);
      res.best = x;
    }
  }
  return res;
}

namespace {

// appends s >= 0 covering [0, range] as a unary (counting) code: every slack
// adjustment is a single bit flip, which keeps the squared penalties free of
// multi-bit traps for the annealer. Exact unit steps when the row is
// integral, otherwise `levels` equal steps over the range.
LinExpr nonneg_slack(QcboModel& m, double range, bool exact_integer, int levels, int group) {
  LinExpr s;
  if (range <= 0.0) return s;
  if (exact_integer) {
    int u = static_cast<int>(std::ceil(range - 1e-9));
    for (int b = 0; b < u; ++b) {
      int id = m.vars.add({VarTag::SlackBit, {group, b, -1, -1}});
      s.add(id, 1.0);
    }
  } else {
    for (int b = 0; b < levels; ++b) {
      int id = m.vars.add({VarTag::SlackBit, {group, b, -1, -1}});
      s.add(id, range / levels);
    }
  }
  return s;
}

}  // namespace

PenaltyForm penalty_qubo(const QcboModel& linearized, const PenaltyOptions& opts) {
  if (!linearized.is_linearized()) {
    throw std::invalid_argument("penalty form needs a linearized model");
  }
  PenaltyForm out;
  out.model = linearized;
  QcboModel& m = out.model;

  double base = m.objective_abs_sum_hint > 0.0 ? m.objective_abs_sum_hint
                                               : m.objective.abs_coeff_sum();
  const double p = 1.0 + base;
  out.weight = p;

  QuadExpr acc;  // penalty terms only; the objective is kept separate
  int group = next_slack_group(m);

  for (const auto& c : m.eq) {
    LinExpr diff = c.expr;
    diff.add_constant(-c.rhs);
    diff.compact();
    double w = p * (c.kind == kRowActivEq ? opts.activ_eq_multiplier : 1.0);
    acc.add_scaled(QuadExpr::square(diff), w);
  }

  // interval rows regenerated from their blocks with block-aware slack
  // ranges; rows are normalized by the widest interval so couplings stay O(P)
  double dm_max = 0.0;
  for (std::size_t i = 0; i + 1 < m.breakpoints.size(); ++i) {
    dm_max = std::max(dm_max, m.breakpoints[i + 1] - m.breakpoints[i]);
  }
  const double p_interval = p * opts.interval_multiplier;
  for (const auto& block : m.blocks) {
    if (!block.preact.is_linear()) {
      throw std::invalid_argument("penalty form needs linear pre-activations");
    }
    const int n = static_cast<int>(block.beta_ids.size());
    LinExpr h;
    h.terms = block.preact.lin;
    h.constant = block.preact.constant;

    // lower: sum beta_i M_{i-1} - h + s = 0, feasible s in [0, DeltaM_i]
    LinExpr lower;
    for (int i = 0; i < n; ++i) lower.add(block.beta_ids[i], m.breakpoints[i]);
    lower.add_scaled(h, -1.0);
    lower.compact();
    bool exact = lower.integral() && std::abs(dm_max - std::round(dm_max)) < 1e-9;
    lower.add_scaled(nonneg_slack(m, dm_max, exact, opts.quantized_slack_levels, group++), 1.0);
    lower.compact();
    LinExpr lower_norm;
    lower_norm.add_scaled(lower, 1.0 / dm_max);
    acc.add_scaled(QuadExpr::square(lower_norm), p_interval);

    // upper: h - sum beta_i M_i + s = 0
    LinExpr upper = h;
    for (int i = 0; i < n; ++i) upper.add(block.beta_ids[i], -m.breakpoints[i + 1]);
    upper.compact();
    bool exact_u = upper.integral() && std::abs(dm_max - std::round(dm_max)) < 1e-9;
    upper.add_scaled(nonneg_slack(m, dm_max, exact_u, opts.quantized_slack_levels, group++), 1.0);
    upper.compact();
    LinExpr upper_norm;
    upper_norm.add_scaled(upper, 1.0 / dm_max);
    acc.add_scaled(QuadExpr::square(upper_norm), p_interval);
  }

  // leftover inequality rows (auxiliary-variable constraints on ad-hoc or
  // constraints-strategy models)
  for (const auto& c : m.ineq) {
    if (c.kind == kRowInterval) continue;  // covered by its block above
    LinExpr row = c.expr;
    row.add_constant(-c.rhs);
    row.compact();
    double range = -row.min_value();
    if (range < -1e-9) {
      throw std::invalid_argument("inequality row infeasible over the binary box");
    }
    bool exact = row.integral();
    row.add_scaled(nonneg_slack(m, range, exact, opts.quantized_slack_levels, group++), 1.0);
    row.compact();
    acc.add_scaled(QuadExpr::square(row), p);
  }

  acc.compact();
  auto fold = [&m](const QuadExpr& e) {
    qubo::QuboInstance q(m.var_count(), e.constant);
    for (const auto& t : e.lin) q.add(t.var, t.var, t.coeff);
    for (const auto& t : e.quad) q.add(t.a, t.b, t.coeff);
    return q;
  };
  out.penalty_part = fold(acc);
  out.objective_part = fold(m.objective);
  out.qubo = qubo::combine(out.objective_part, out.penalty_part, 1.0);
  return out;
}

void optimize_slack_bits(const qubo::QuboInstance& q, const QcboModel& model,
                         std::vector<uint8_t>& x) {
  if (static_cast<int>(x.size()) != model.var_count() || q.size() != model.var_count()) {
    throw std::invalid_argument("assignment/model/qubo size mismatch");
  }
  std::map<int, std::vector<int>> groups;
  for (int id = 0; id < model.var_count(); ++id) {
    const VarInfo& v = model.vars.info(id);
    if (v.tag == VarTag::SlackBit) groups[v.idx[0]].push_back(id);
  }
  for (const auto& [group, bits] : groups) {
    const int k = static_cast<int>(bits.size());
    std::vector<char> in_group(model.var_count(), 0);
    for (int id : bits) in_group[id] = 1;
    // linear field on each bit given everything outside the group
    std::vector<double> field(k, 0.0);
    for (int b = 0; b < k; ++b) {
      int id = bits[b];
      double f = q.coeff(id, id);
      for (int j = 0; j < q.size(); ++j) {
        if (j == id || in_group[j]) continue;
        if (x[j]) f += q.coeff(std::min(id, j), std::max(id, j));
      }
      field[b] = f;
    }
    if (k <= 12) {
      double best = std::numeric_limits<double>::infinity();
      uint32_t best_pattern = 0;
      for (uint32_t pattern = 0; pattern < (1u << k); ++pattern) {
        double e = 0.0;
        for (int a = 0; a < k; ++a) {
          if (!((pattern >> a) & 1u)) continue;
          e += field[a];
          for (int b = a + 1; b < k; ++b) {
            if ((pattern >> b) & 1u) {
              e += q.coeff(std::min(bits[a], bits[b]), std::max(bits[a], bits[b]));
            }
          }
        }
        if (e < best) {
          best = e;
          best_pattern = pattern;
        }
      }
      for (int b = 0; b < k; ++b) {
        x[bits[b]] = static_cast<uint8_t>((best_pattern >> b) & 1u);
      }
    } else {
      // unary groups: the energy depends only on the prefix count
      double best = 0.0;
      int best_count = 0;
      double e = 0.0;
      for (int c = 1; c <= k; ++c) {
        e += field[c - 1];
        for (int b = 0; b < c - 1; ++b) {
          e += q.coeff(std::min(bits[b], bits[c - 1]), std::max(bits[b], bits[c - 1]));
        }
        if (e < best) {
          best = e;
          best_count = c;
        }
      }
      for (int b = 0; b < k; ++b) {
        x[bits[b]] = static_cast<uint8_t>(b < best_count ? 1 : 0);
      }
    }
  }
}

namespace {

std::vector<uint8_t> encode_param_bits(int value, WeightCode code, int bits) {
  std::vector<uint8_t> out(static_cast<std::size_t>(code == WeightCode::PlusMinusOne ? 1 : bits));
  if (code == WeightCode::PlusMinusOne) {
    if (value != 1 && value != -1) {
      throw std::invalid_argument("plus/minus-one code takes values -1 or 1");
    }
    out[0] = value == 1 ? 1 : 0;
    return out;
  }
  int64_t shifted = static_cast<int64_t>(value) + (int64_t(1) << (bits - 1));
  if (shifted < 0 || shifted > (int64_t(1) << bits) - 1) {
    throw std::invalid_argument("weight value outside code range");
  }
  for (int b = 0; b < bits; ++b) out[b] = static_cast<uint8_t>((shifted >> b) & 1);
  return out;
}

}  // namespace

std::vector<uint8_t> feasible_completion(const QcboModel& model, const NetSpec& spec,
                                         const std::vector<Sample>& data,
                                         const std::vector<std::vector<std::vector<int>>>& weights,
                                         const std::vector<std::vector<int>>& biases) {
  const int depth = spec.depth();
  const auto values = spec.coded_activation_values();
  const int64_t scale = spec.code_scale();
  int64_t min_code = std::numeric_limits<int64_t>::max();
  for (double v : values) min_code = std::min<int64_t>(min_code, std::llround(v * double(scale)));

  // forward pass per sample, recording interval choices and activation codes
  const int n_samples = static_cast<int>(data.size());
  std::vector<std::vector<std::vector<int>>> interval(n_samples);   // [s][l-1][j]
  std::vector<std::vector<std::vector<int64_t>>> code(n_samples);   // [s][l-1][j]
  for (int s = 0; s < n_samples; ++s) {
    interval[s].resize(depth);
    code[s].resize(depth);
    std::vector<double> act = data[s].features;
    for (int l = 1; l <= depth; ++l) {
      interval[s][l - 1].resize(spec.dims[l]);
      code[s][l - 1].resize(spec.dims[l]);
      std::vector<double> next(spec.dims[l]);
      for (int j = 0; j < spec.dims[l]; ++j) {
        double h = biases[l - 1][j];
        for (int k = 0; k < spec.dims[l - 1]; ++k) {
          h += static_cast<double>(weights[l - 1][j][k]) * act[k];
        }
        int iv = spec.activation.locate_interval(h);
        interval[s][l - 1][j] = iv;
        next[j] = values[iv - 1];
        code[s][l - 1][j] = std::llround(values[iv - 1] * double(scale));
      }
      act = std::move(next);
    }
  }

  std::vector<uint8_t> x(model.var_count(), 0);
  for (int id = 0; id < model.var_count(); ++id) {
    const VarInfo& v = model.vars.info(id);
    switch (v.tag) {
      case VarTag::WeightBit: {
        int l = v.idx[0], j = v.idx[1], k = v.idx[2], bit = v.idx[3];
        x[id] = encode_param_bits(weights[l - 1][j][k], spec.weight_code, spec.weight_bits)[bit];
        break;
      }
      case VarTag::BiasBit: {
        int l = v.idx[0], j = v.idx[1], bit = v.idx[2];
        x[id] = encode_param_bits(biases[l - 1][j], spec.bias_code, spec.bias_bits)[bit];
        break;
      }
      case VarTag::BetaPreact: {
        int s = v.idx[0], l = v.idx[1], j = v.idx[2], iv = v.idx[3];
        x[id] = interval[s][l - 1][j] == iv ? 1 : 0;
        break;
      }
      case VarTag::BetaOutput: {
        int s = v.idx[0], iv = v.idx[1];
        x[id] = interval[s][depth - 1][0] == iv ? 1 : 0;
        break;
      }
      case VarTag::ActivBit: {
        int s = v.idx[0], l = v.idx[1], j = v.idx[2], bit = v.idx[3];
        int64_t offset_code = code[s][l - 1][j] - min_code;
        x[id] = static_cast<uint8_t>((offset_code >> bit) & 1);
        break;
      }
      case VarTag::AuxProduct: {
        int a = v.idx[0], b = v.idx[1];
        x[id] = static_cast<uint8_t>(x[a] & x[b]);
        break;
      }
      case VarTag::SlackBit:
        break;  // left at zero
    }
  }
  return x;
}

namespace {

nlohmann::json lin_expr_json(const LinExpr& e) {
  nlohmann::json terms = nlohmann::json::array();
  for (const auto& t : e.terms) terms.push_back({t.var, t.coeff});
  return {{"terms", terms}, {"constant", e.constant}};
}

LinExpr lin_expr_from_json(const nlohmann::json& j) {
  LinExpr e;
  for (const auto& t : j.at("terms")) e.add(t.at(0).get<int>(), t.at(1).get<double>());
  e.constant = j.at("constant").get<double>();
  return e;
}

nlohmann::json quad_expr_json(const QuadExpr& e) {
  nlohmann::json lin = nlohmann::json::array();
  for (const auto& t : e.lin) lin.push_back({t.var, t.coeff});
  nlohmann::json quad = nlohmann::json::array();
  for (const auto& t : e.quad) quad.push_back({t.a, t.b, t.coeff});
  return {{"lin", lin}, {"quad", quad}, {"constant", e.constant}};
}

QuadExpr quad_expr_from_json(const nlohmann::json& j) {
  QuadExpr e;
  for (const auto& t : j.at("lin")) e.add_lin(t.at(0).get<int>(), t.at(1).get<double>());
  for (const auto& t : j.at("quad")) {
    e.add_quad(t.at(0).get<int>(), t.at(1).get<int>(), t.at(2).get<double>());
  }
  e.constant = j.at("constant").get<double>();
  return e;
}

}  // namespace

std::string QcboModel::to_json() const {
  nlohmann::json j;
  nlohmann::json vars_j = nlohmann::json::array();
  for (int i = 0; i < vars.size(); ++i) {
    const VarInfo& v = vars.info(i);
    vars_j.push_back({{"tag", tag_name(v.tag)}, {"idx", v.idx}});
  }
  j["vars"] = std::move(vars_j);
  j["objective"] = quad_expr_json(objective);
  j["objective_abs_sum_hint"] = objective_abs_sum_hint;
  nlohmann::json eq_j = nlohmann::json::array();
  for (const auto& c : eq) {
    eq_j.push_back({{"expr", lin_expr_json(c.expr)}, {"rhs", c.rhs}, {"kind", c.kind}});
  }
  j["eq"] = std::move(eq_j);
  nlohmann::json ineq_j = nlohmann::json::array();
  for (const auto& c : ineq) {
    ineq_j.push_back({{"expr", lin_expr_json(c.expr)}, {"rhs", c.rhs}, {"kind", c.kind}});
  }
  j["ineq"] = std::move(ineq_j);
  nlohmann::json quad_j = nlohmann::json::array();
  for (const auto& c : quad_constraints) {
    quad_j.push_back({{"expr", quad_expr_json(c.expr)},
                      {"rhs", c.rhs},
                      {"sense", c.sense == Sense::Eq ? "eq" : "le"},
                      {"kind", c.kind}});
  }
  j["quad_constraints"] = std::move(quad_j);
  nlohmann::json blocks_j = nlohmann::json::array();
  for (const auto& b : blocks) {
    blocks_j.push_back({{"beta_ids", b.beta_ids},
                        {"preact", quad_expr_json(b.preact)},
                        {"sample", b.sample},
                        {"layer", b.layer},
                        {"neuron", b.neuron}});
  }
  j["blocks"] = std::move(blocks_j);
  nlohmann::json groups_j = nlohmann::json::array();
  for (const auto& g : bilinear_groups) {
    groups_j.push_back({{"weight_var", g.weight_var},
                        {"bit_vars", g.bit_vars},
                        {"bit_coeffs", g.bit_coeffs}});
  }
  j["bilinear_groups"] = std::move(groups_j);
  j["breakpoints"] = breakpoints;
  return j.dump();
}

QcboModel QcboModel::from_json(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text);
  QcboModel m;
  for (const auto& v : j.at("vars")) {
    VarInfo info;
    info.tag = tag_from_name(v.at("tag").get<std::string>());
    auto idx = v.at("idx");
    for (int i = 0; i < 4; ++i) info.idx[i] = idx.at(i).get<int>();
    m.vars.add(info);
  }
  m.objective = quad_expr_from_json(j.at("objective"));
  m.objective_abs_sum_hint = j.at("objective_abs_sum_hint").get<double>();
  for (const auto& c : j.at("eq")) {
    m.eq.push_back({lin_expr_from_json(c.at("expr")), c.at("rhs").get<double>(),
                    c.at("kind").get<int>()});
  }
  for (const auto& c : j.at("ineq")) {
    m.ineq.push_back({lin_expr_from_json(c.at("expr")), c.at("rhs").get<double>(),
                      c.at("kind").get<int>()});
  }
  for (const auto& c : j.at("quad_constraints")) {
    QuadConstraint qc;
    qc.expr = quad_expr_from_json(c.at("expr"));
    qc.rhs = c.at("rhs").get<double>();
    qc.sense = c.at("sense") == "eq" ? Sense::Eq : Sense::Le;
    qc.kind = c.at("kind").get<int>();
    m.quad_constraints.push_back(std::move(qc));
  }
  for (const auto& b : j.at("blocks")) {
    IntervalBlock blk;
    blk.beta_ids = b.at("beta_ids").get<std::vector<int>>();
    blk.preact = quad_expr_from_json(b.at("preact"));
    blk.sample = b.at("sample").get<int>();
    blk.layer = b.at("layer").get<int>();
    blk.neuron = b.at("neuron").get<int>();
    m.blocks.push_back(std::move(blk));
  }
  for (const auto& g : j.at("bilinear_groups")) {
    BilinearGroup grp;
    grp.weight_var = g.at("weight_var").get<int>();
    grp.bit_vars = g.at("bit_vars").get<std::vector<int>>();
    grp.bit_coeffs = g.at("bit_coeffs").get<std::vector<double>>();
    m.bilinear_groups.push_back(std::move(grp));
  }
  m.breakpoints = j.at("breakpoints").get<std::vector<double>>();
  return m;
}

}  // namespace qubonn::qcbo
