#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "qubonn/qcbo.hpp"
#include "qubonn/qubo.hpp"

namespace qubonn::qcgd {

/// One linear functional <A, V> = rhs on the lifted matrix; entries stored
/// upper-triangular, off-diagonal entries count twice (A symmetric).
struct ConstraintRow {
  std::vector<std::tuple<int, int, double>> entries;
  double rhs = 0.0;

  void add(int i, int j, double a);
  double value(const std::vector<double>& v_flat, int p) const;
};

/// Copositive lift of a linearized QCBO: minimize Tr(C V) over the convex
/// hull of rank-one binary lifts [1;x][1;x]^T subject to the constraint rows.
struct CopositiveProgram {
  int p = 0;            // 1 homogenization coordinate + model vars + slack bits
  int model_vars = 0;   // original (pre-lift) variable count
  std::vector<double> cost;  // dense symmetric p*p, row-major
  std::vector<ConstraintRow> rows;

  double cost_entry(int i, int j) const { return cost[static_cast<std::size_t>(i) * p + j]; }
  double trace_cost(const std::vector<double>& v_flat) const;
};

/// Builds the lift. Inequalities become equalities with fresh binary-encoded
/// slack coordinates: exact unit-step encodings when the row is integral,
/// otherwise `quantized_slack_bits` levels over the row's box range.
CopositiveProgram lift(const qcbo::QcboModel& linearized, int quantized_slack_bits = 8);

struct TraceRow {
  int t = 0;
  double gamma = 0.0;
  double alpha = 0.0;
  double obj_surrogate = 0.0;
  double infeasibility = 0.0;
  double oracle_best = 0.0;
  int samples = 0;
  bool skipped = false;
};

struct QcgdState {
  std::vector<double> v_flat;  // p*p symmetric iterate
  std::vector<double> duals;   // one per constraint row
  int t = 1;
  double alpha0 = 1.0;
  double delta = 1.0;
  std::vector<TraceRow> trace;

  static QcgdState init(const CopositiveProgram& prog, double delta, double alpha0);
};

/// gamma_t = 2/(delta (t+1)), alpha_t = alpha0 sqrt(delta t + 1).
std::pair<double, double> schedules(int t, double delta, double alpha0);

/// G_t = C + L*(z + alpha_t (L V - v)), dense symmetric p x p.
std::vector<double> gradient_matrix(const QcgdState& state, const CopositiveProgram& prog);

/// The oracle-facing subproblem: G_t folded into a QUBO over the p-1
/// non-homogenization coordinates with w_0 substituted to 1, so every oracle
/// sample lifts to a vertex [1; x][1; x]^T.
qubo::QuboInstance gradient_qubo(const QcgdState& state, const CopositiveProgram& prog);

/// One Frank-Wolfe step: solve the gradient QUBO m_t times, take the best
/// direction H = w w^T (w complemented when w_0 = 0), blend V, ascend duals.
void step(QcgdState& state, const CopositiveProgram& prog, const qubo::OracleFn& oracle, int m_t,
          uint64_t seed);

/// Skip rule: reuse the previous direction iff the coefficient change is
/// smaller than the previous spectral gap.
bool lazy_gate(const qubo::QuboInstance& q_prev, const qubo::QuboInstance& q_new, double gap);

/// Second-lowest minus lowest attainable objective value (exact, brute force).
double spectral_gap(const qubo::QuboInstance& q, int cap = 26);

struct RunConfig {
  int iterations = 1000;  // T
  double delta = 1.0;
  double alpha0 = 1.0;
  double p0 = 0.5;              // oracle per-call success probability
  int truncation_digits = 0;    // 0 = off
  bool lazy = false;            // exact-oracle mode only
  double tol_infeasibility = 1e-4;
  double tol_objective = 1e-4;
  uint64_t seed = 1;
  std::optional<double> objective_reference;  // best known optimum
};

struct RunResult {
  std::vector<uint8_t> solution;  // original variables only
  std::vector<TraceRow> trace;
  int converged_at = -1;  // first t where both residuals were under tolerance
  bool extraction_feasible = false;
  int samples_per_iteration = 0;
};

RunResult run(const CopositiveProgram& prog, const qubo::OracleFn& oracle,
              const RunConfig& config);

/// Threshold the homogenization column at 1/2 (ties round to 1); falls back
/// to the sign-aligned top eigenvector of the variable submatrix when the
/// thresholded point violates the constraint rows. Returns original-variable
/// bits only.
std::vector<uint8_t> extract(const std::vector<double>& v_flat, const CopositiveProgram& prog,
                             bool* feasible = nullptr);

/// m_t = ceil(c ln T) + 1 with c = 2 / (-ln(1 - p0)).
int samples_per_iteration(int iterations, double p0);

/// Realized total oracle wall-clock tau * T * m_t.
double tts_estimate(double tau_seconds, int iterations, double p0);

void write_trace_csv(const std::vector<TraceRow>& trace, const std::string& path);

}  // namespace qubonn::qcgd
