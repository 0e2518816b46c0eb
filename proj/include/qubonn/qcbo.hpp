#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "qubonn/pwl.hpp"
#include "qubonn/qubo.hpp"

namespace qubonn::qcbo {

enum class VarTag {
  BetaOutput,   // {sample, interval}
  BetaPreact,   // {sample, layer, neuron, interval}
  WeightBit,    // {layer, row, col, bit}
  BiasBit,      // {layer, neuron, bit}
  ActivBit,     // {sample, layer, neuron, bit}
  AuxProduct,   // {var_a, var_b}
  SlackBit,     // {group, bit}
};

const char* tag_name(VarTag tag);
VarTag tag_from_name(const std::string& name);

struct VarInfo {
  VarTag tag;
  std::array<int, 4> idx{-1, -1, -1, -1};
};

class VarRegistry {
 public:
  int add(VarInfo info);
  int size() const { return static_cast<int>(vars_.size()); }
  const VarInfo& info(int id) const { return vars_.at(id); }
  std::map<VarTag, int> counts() const;

 private:
  std::vector<VarInfo> vars_;
};

struct LinTerm {
  int var;
  double coeff;
};

struct LinExpr {
  std::vector<LinTerm> terms;
  double constant = 0.0;

  void add(int var, double coeff);
  void add_constant(double c) { constant += c; }
  void add_scaled(const LinExpr& other, double w);
  void compact();  // merge duplicate vars, drop zeros
  double eval(const std::vector<uint8_t>& x) const;
  double min_value() const;  // over the binary box
  double max_value() const;
  bool integral(double tol = 1e-9) const;
};

struct QuadTerm {
  int a, b;  // a < b
  double coeff;
};

struct QuadExpr {
  std::vector<LinTerm> lin;
  std::vector<QuadTerm> quad;
  double constant = 0.0;

  void add_lin(int var, double coeff);
  void add_quad(int a, int b, double coeff);  // a==b folds into lin
  void add_constant(double c) { constant += c; }
  void add_scaled(const QuadExpr& other, double w);
  void add_scaled(const LinExpr& other, double w);
  void compact();
  double eval(const std::vector<uint8_t>& x) const;
  bool is_linear() const { return quad.empty(); }
  double abs_coeff_sum() const;

  static QuadExpr square(const LinExpr& e);
  static QuadExpr product(const LinExpr& a, const LinExpr& b);
};

enum class Sense { Eq, Le };

// row kinds; penalty conversion weights activation equalities higher and
// regenerates interval rows from their blocks
inline constexpr int kRowGeneric = 0;
inline constexpr int kRowOneHot = 1;
inline constexpr int kRowActivEq = 2;
inline constexpr int kRowInterval = 3;

struct LinConstraint {
  LinExpr expr;
  double rhs = 0.0;
  int kind = kRowGeneric;
};

struct QuadConstraint {
  QuadExpr expr;
  double rhs = 0.0;
  Sense sense = Sense::Le;
  int kind = kRowGeneric;
};

/// One FIP interval block: the one-hot group selecting the interval of a
/// neuron's pre-activation, the pre-activation expression itself, and the
/// breakpoint grid. Penalty conversion works from these.
struct IntervalBlock {
  std::vector<int> beta_ids;  // beta_1..beta_n
  QuadExpr preact;            // h; linear after linearize_all
  int sample = -1;
  int layer = -1;
  int neuron = -1;
};

/// A bilinear group w * (sum_l c_l * delta_l) recorded at build time so the
/// constraint-based linearization can introduce one encoded z per group
/// instead of one auxiliary per bit pair.
struct BilinearGroup {
  int weight_var;
  std::vector<int> bit_vars;
  std::vector<double> bit_coeffs;
};

class QcboModel {
 public:
  VarRegistry vars;
  QuadExpr objective;
  std::vector<LinConstraint> eq;    // expr == rhs
  std::vector<LinConstraint> ineq;  // expr <= rhs
  std::vector<QuadConstraint> quad_constraints;
  std::vector<IntervalBlock> blocks;
  std::vector<BilinearGroup> bilinear_groups;
  std::vector<double> breakpoints;  // grid shared by all blocks (empty for ad-hoc models)
  // |objective coefficient| sum before any penalty terms were folded in;
  // the base for penalty weights
  double objective_abs_sum_hint = 0.0;

  int var_count() const { return vars.size(); }
  bool is_linearized() const { return quad_constraints.empty(); }

  bool feasible(const std::vector<uint8_t>& x, double tol = 1e-9) const;
  double objective_value(const std::vector<uint8_t>& x) const;

  std::string to_json() const;
  static QcboModel from_json(const std::string& text);

 private:
};

/// Binary encoding of an integer variable: fresh bits delta_l with value
/// expression sum_l 2^l delta_l, minus 2^{bits-1} when signed.
struct EncodedInt {
  LinExpr expr;
  std::vector<int> bit_ids;
};

EncodedInt encode_integer(QcboModel& m, int bits, bool is_signed, VarTag tag,
                          std::array<int, 4> idx);

enum class WeightCode {
  OffsetBinary,  // {-2^{B-1}, ..., 2^{B-1}-1}
  PlusMinusOne,  // B=1, value 2*delta - 1
};

enum class LossKind { Squared };

struct NetSpec {
  std::vector<int> dims;  // d_0..d_L
  int weight_bits = 1;
  WeightCode weight_code = WeightCode::PlusMinusOne;
  int bias_bits = 1;
  WeightCode bias_code = WeightCode::PlusMinusOne;
  pwl::PiecewiseFn activation;
  double feature_bound = 1.0;  // max |input feature|
  int code_decimals = 3;       // activation values rounded to this many decimals
  LossKind loss = LossKind::Squared;

  NetSpec(std::vector<int> dims_, pwl::PiecewiseFn activation_)
      : dims(std::move(dims_)), activation(std::move(activation_)) {}

  int depth() const { return static_cast<int>(dims.size()) - 1; }
  double weight_value_min() const;
  double weight_value_max() const;
  double bias_value_min() const;
  double bias_value_max() const;

  /// Activation interval values rounded to code_decimals; the table shared by
  /// the QCBO build and the decoded network.
  std::vector<double> coded_activation_values() const;
  /// Smallest integer scale making every coded value integral.
  int64_t code_scale() const;
  /// Bits needed to span [min_code, max_code] as an unsigned offset code.
  int activation_bits() const;

  double loss_value(int interval, int label) const;

  /// Interval-arithmetic range check: every layer's pre-activation interval
  /// must fit inside the activation domain. Throws naming the first layer
  /// that fails.
  void validate() const;

  std::string to_json() const;
  static NetSpec from_json(const std::string& text);
};

struct Sample {
  std::vector<double> features;
  int label = 0;
  double weight = 1.0;
};

QcboModel build_fip_model(const NetSpec& spec, const std::vector<Sample>& data);

/// Rosenberg reduction: fresh y plus penalty 3y + x1 x2 - 2y(x1+x2), zero
/// exactly on y = x1 * x2 and >= 1 otherwise.
struct RosenbergResult {
  int y_id;
  QuadExpr penalty;
};
RosenbergResult rosenberg_reduce(QcboModel& m, int x1, int x2);

/// McCormick-style product: fresh x_ij plus the three constraints
/// x_ij <= x_i, x_ij <= x_j, x_ij >= x_i + x_j - 1 (appended to m.ineq).
int linearize_product(QcboModel& m, int xi, int xj);

/// Shared-weight bilinear linearization: z = w * sum_l c_l delta_l with z
/// binary-encoded on the same coefficient grid, pinned by three inequalities.
struct WeightedBilinearResult {
  LinExpr z_expr;
  std::vector<int> z_bit_ids;
};
WeightedBilinearResult linearize_weighted_bilinear(QcboModel& m, int weight_var,
                                                   const std::vector<int>& bit_vars,
                                                   const std::vector<double>& bit_coeffs);

enum class LinearizeStrategy { Constraints, Rosenberg };

/// Exact presolve for the penalty path: every hidden activation variable is
/// uniquely determined by its one-hot group (a == sum_i v_i beta_i), so its
/// bit expression is substituted into all other rows and the defining
/// equality is dropped. The activation bits stay registered but appear in no
/// term afterwards; products then couple weight bits to betas directly,
/// which spares the annealer the binary-code equality traps.
QcboModel presolve_activations(const QcboModel& model);

/// Eliminates all quadratic constraints. `Constraints` introduces auxiliary
/// variables plus linear constraints (grouped bilinear terms get one encoded
/// z each); `Rosenberg` substitutes products into the constraints and adds
/// penalty terms to the objective with weight 1 + sum |objective coeffs|.
/// Interval block pre-activations are rewritten in place. Idempotent.
QcboModel linearize_all(const QcboModel& model, LinearizeStrategy strategy);

enum class PenaltyMode { Slack, Midpoint };

/// Inequality-to-penalty conversion for one interval block.
/// Slack mode: (sum beta_i M_{i-1} + s - h)^2 with s binary-encoded over
/// [0, DeltaM]; requires a uniform grid. Midpoint mode: the per-interval
/// normalized squared distance with slack s in [-1/2, 1/2]; works on any
/// grid (residual cubic monomials are Rosenberg-reduced when h contains
/// variables and the grid is non-uniform).
QuadExpr interval_ineq_to_penalty(QcboModel& m, const IntervalBlock& block,
                                  const std::vector<double>& breakpoints, PenaltyMode mode,
                                  int slack_bits = 4);

/// Sign-activation encoding: objective contribution
/// (2 beta - 1) + lambda * [beta ((2x-M)/(2M) + s)^2 + (1-beta)((2x+M)/(2M) + s)^2]
/// with binary-encoded slack s in [-1/2, 1/2].
struct SignActivation {
  int beta_id;
  QuadExpr objective;
};
SignActivation encode_sign_activation(QcboModel& m, const LinExpr& x_expr, double sup_abs_x,
                                      double lambda, int slack_bits = 4);

struct SpinReport {
  std::map<std::string, int> per_family;
  int total = 0;
};
SpinReport spin_report(const QcboModel& model);
std::string spin_report_json(const SpinReport& report);

/// Hoeffding sample bound N = ceil(C_max^2/(2 eps^2) * ln(2 |Theta| / alpha))
/// with |Theta| = 2^{B * sum_l d_l (d_{l-1}+1)}.
int64_t sample_complexity(const std::vector<int>& dims, int bits, double eps, double alpha,
                          double c_max);

struct QcboBruteResult {
  bool feasible = false;
  std::vector<uint8_t> best;
  double best_value = 0.0;
};

/// Exhaustive constrained minimization (test oracle and desk-scale solver).
QcboBruteResult brute_force_qcbo(const QcboModel& model, int cap = 24);

struct PenaltyOptions {
  // unary slack levels for non-integral interval rows; integral rows get
  // exact unit steps
  int quantized_slack_levels = 16;
  // activation equalities are weighted heavier so activation drift can never
  // pay for itself
  double activ_eq_multiplier = 4.0;
  // interval rows are normalized by the widest interval before squaring
  // (keeps couplings O(P) instead of O(P * M^2)); this multiplier restores
  // the one-step violation margin in normalized units
  double interval_multiplier = 2.0;
};

struct PenaltyForm {
  QcboModel model;  // with slack bits registered
  qubo::QuboInstance qubo{0};           // objective + penalties (the exact form)
  qubo::QuboInstance objective_part{0};  // objective terms only
  qubo::QuboInstance penalty_part{0};    // penalty terms only
  double weight = 0.0;  // base penalty 1 + sum |objective coefficients|
};

/// Folds a fully linearized model into a single unconstrained QUBO:
/// objective + P * (equality penalties) + per-row squared-slack penalties for
/// the interval blocks and any remaining inequality rows.
PenaltyForm penalty_qubo(const QcboModel& linearized, const PenaltyOptions& opts = {});

/// Sets every slack-bit group in `x` to its energy-minimizing assignment
/// given all other variables (exhaustive per group; groups are small).
void optimize_slack_bits(const qubo::QuboInstance& q, const QcboModel& model,
                         std::vector<uint8_t>& x);

/// The unique feasible completion for a given integer weight/bias assignment:
/// bit-encodes the parameters, forward-simulates the piecewise network on
/// every sample, sets the betas by interval location, the activation bits by
/// code, and any auxiliary products by multiplying out. Slack bits are left
/// at zero (raw models carry none).
std::vector<uint8_t> feasible_completion(const QcboModel& model, const NetSpec& spec,
                                         const std::vector<Sample>& data,
                                         const std::vector<std::vector<std::vector<int>>>& weights,
                                         const std::vector<std::vector<int>>& biases);

}  // namespace qubonn::qcbo
