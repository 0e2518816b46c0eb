#include "qubonn/qcgd.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <stdexcept>

#include "qubonn/common.hpp"

namespace qubonn::qcgd {

void ConstraintRow::add(int i, int j, double a) {
  if (a == 0.0) return;
  if (i > j) std::swap(i, j);
  entries.emplace_back(i, j, a);
}

double ConstraintRow::value(const std::vector<double>& v_flat, int p) const {
  double acc = 0.0;
  for (const auto& [i, j, a] : entries) {
    double vij = v_flat[static_cast<std::size_t>(i) * p + j];
    acc += (i == j) ? a * vij : 2.0 * a * vij;
  }
  return acc;
}

double CopositiveProgram::trace_cost(const std::vector<double>& v_flat) const {
  double acc = 0.0;
  for (int i = 0; i < p; ++i) {
    for (int j = 0; j < p; ++j) {
      acc += cost[static_cast<std::size_t>(i) * p + j] * v_flat[static_cast<std::size_t>(i) * p + j];
    }
  }
  return acc;
}

namespace {

void cost_add(std::vector<double>& cost, int p, int i, int j, double a) {
  cost[static_cast<std::size_t>(i) * p + j] += a;
  if (i != j) cost[static_cast<std::size_t>(j) * p + i] += a;
}

// Finds a power of ten making every coefficient integral, or 0 when none
// does (up to 10^6).
double integral_scale(const qcbo::LinExpr& e, double rhs) {
  for (int k = 0; k <= 6; ++k) {
    double s = std::pow(10.0, k);
    auto near_int = [s](double v) { return std::abs(v * s - std::round(v * s)) <= 1e-9 * s; };
    bool ok = near_int(rhs) && near_int(e.constant);
    for (const auto& t : e.terms) ok = ok && near_int(t.coeff);
    if (ok) return s;
  }
  return 0.0;
}

}  // namespace

CopositiveProgram lift(const qcbo::QcboModel& linearized, int quantized_slack_bits) {
  if (!linearized.is_linearized()) {
    throw std::invalid_argument("lift needs a linearized model");
  }
  const int n = linearized.var_count();

  // slack coordinates appended after the model variables
  struct PendingRow {
    qcbo::LinExpr expr;  // over lifted coordinate ids (1-based model vars)
    double rhs;
  };
  std::vector<PendingRow> pending;

  for (const auto& c : linearized.eq) {
    PendingRow row;
    for (const auto& t : c.expr.terms) row.expr.add(t.var + 1, t.coeff);
    row.rhs = c.rhs - c.expr.constant;
    pending.push_back(std::move(row));
  }

  int next_slack = n + 1;
  for (const auto& c : linearized.ineq) {
    PendingRow row;
    for (const auto& t : c.expr.terms) row.expr.add(t.var + 1, t.coeff);
    row.rhs = c.rhs - c.expr.constant;
    double range = row.rhs - (c.expr.min_value() - c.expr.constant);
    if (range < -1e-9) {
      throw std::invalid_argument("inequality row infeasible over the binary box");
    }
    if (range > 1e-9) {
      double s = integral_scale(c.expr, c.rhs);
      if (s > 0.0) {
        int64_t u = static_cast<int64_t>(std::llround(range * s));
        int bits = 1;
        while (((int64_t(1) << bits) - 1) < u) ++bits;
        for (int b = 0; b < bits; ++b) {
          row.expr.add(next_slack++, std::pow(2.0, b) / s);
        }
      } else {
        double denom = std::pow(2.0, quantized_slack_bits) - 1.0;
        for (int b = 0; b < quantized_slack_bits; ++b) {
          row.expr.add(next_slack++, range * std::pow(2.0, b) / denom);
        }
      }
    }
    pending.push_back(std::move(row));
  }

  CopositiveProgram prog;
  prog.model_vars = n;
  prog.p = next_slack;
  prog.cost.assign(static_cast<std::size_t>(prog.p) * prog.p, 0.0);

  cost_add(prog.cost, prog.p, 0, 0, linearized.objective.constant);
  for (const auto& t : linearized.objective.lin) {
    cost_add(prog.cost, prog.p, 0, t.var + 1, 0.5 * t.coeff);
  }
  for (const auto& t : linearized.objective.quad) {
    cost_add(prog.cost, prog.p, t.a + 1, t.b + 1, 0.5 * t.coeff);
  }

  ConstraintRow pin;  // V[0,0] = 1
  pin.add(0, 0, 1.0);
  pin.rhs = 1.0;
  prog.rows.push_back(std::move(pin));

  for (const auto& row : pending) {
    ConstraintRow r;
    for (const auto& t : row.expr.terms) {
      r.add(0, t.var, 0.5 * t.coeff);
    }
    r.rhs = row.rhs;
    prog.rows.push_back(std::move(r));
  }
  return prog;
}

QcgdState QcgdState::init(const CopositiveProgram& prog, double delta, double alpha0) {
  QcgdState s;
  s.v_flat.assign(static_cast<std::size_t>(prog.p) * prog.p, 0.0);
  s.v_flat[0] = 1.0;  // V0 = e0 e0^T
  s.duals.assign(prog.rows.size(), 0.0);
  s.t = 1;
  s.delta = delta;
  s.alpha0 = alpha0;
  return s;
}

std::pair<double, double> schedules(int t, double delta, double alpha0) {
  if (t < 1 || !(delta > 0.0) || !(alpha0 > 0.0)) {
    throw std::invalid_argument("need t >= 1, delta > 0, alpha0 > 0");
  }
  double gamma = 2.0 / (delta * (t + 1));
  double alpha = alpha0 * std::sqrt(delta * t + 1.0);
  return {gamma, alpha};
}

std::vector<double> gradient_matrix(const QcgdState& state, const CopositiveProgram& prog) {
  const int p = prog.p;
  auto [gamma, alpha] = schedules(state.t, state.delta, state.alpha0);
  (void)gamma;

  std::vector<double> g = prog.cost;
  for (std::size_t r = 0; r < prog.rows.size(); ++r) {
    double residual = prog.rows[r].value(state.v_flat, p) - prog.rows[r].rhs;
    double y = state.duals[r] + alpha * residual;
    if (y == 0.0) continue;
    for (const auto& [i, j, a] : prog.rows[r].entries) {
      g[static_cast<std::size_t>(i) * p + j] += y * a;
      if (i != j) g[static_cast<std::size_t>(j) * p + i] += y * a;
    }
  }
  return g;
}

qubo::QuboInstance gradient_qubo(const QcgdState& state, const CopositiveProgram& prog) {
  const int p = prog.p;
  std::vector<double> g = gradient_matrix(state, prog);

  // w_0 = 1 substituted: the sampled bits are the lifted coordinates 1..p-1
  qubo::QuboInstance q(p - 1, g[0]);
  for (int i = 1; i < p; ++i) {
    double diag = g[static_cast<std::size_t>(i) * p + i] + g[static_cast<std::size_t>(i)] +
                  g[static_cast<std::size_t>(i) * p];
    q.set(i - 1, i - 1, diag);
    for (int j = i + 1; j < p; ++j) {
      double c = g[static_cast<std::size_t>(i) * p + j] + g[static_cast<std::size_t>(j) * p + i];
      if (c != 0.0) q.set(i - 1, j - 1, c);
    }
  }
  return q;
}

namespace {

void apply_direction(QcgdState& state, const CopositiveProgram& prog,
                     const std::vector<uint8_t>& w, double oracle_best, int samples,
                     bool skipped) {
  const int p = prog.p;
  auto [gamma, alpha] = schedules(state.t, state.delta, state.alpha0);

  for (int i = 0; i < p; ++i) {
    for (int j = 0; j < p; ++j) {
      double h = (w[i] && w[j]) ? 1.0 : 0.0;
      auto idx = static_cast<std::size_t>(i) * p + j;
      state.v_flat[idx] = (1.0 - gamma) * state.v_flat[idx] + gamma * h;
    }
  }

  double infeas_sq = 0.0;
  for (std::size_t r = 0; r < prog.rows.size(); ++r) {
    double residual = prog.rows[r].value(state.v_flat, p) - prog.rows[r].rhs;
    state.duals[r] += gamma * alpha * residual;
    infeas_sq += residual * residual;
  }

  TraceRow row;
  row.t = state.t;
  row.gamma = gamma;
  row.alpha = alpha;
  row.obj_surrogate = prog.trace_cost(state.v_flat);
  row.infeasibility = std::sqrt(infeas_sq);
  row.oracle_best = oracle_best;
  row.samples = samples;
  row.skipped = skipped;
  state.trace.push_back(row);
  ++state.t;
}

}  // namespace

void step(QcgdState& state, const CopositiveProgram& prog, const qubo::OracleFn& oracle, int m_t,
          uint64_t seed) {
  qubo::QuboInstance q = gradient_qubo(state, prog);
  qubo::OracleSample s = qubo::best_of(oracle, q, m_t, seed);
  std::vector<uint8_t> w(prog.p, 0);
  w[0] = 1;
  std::copy(s.assignment.begin(), s.assignment.end(), w.begin() + 1);
  apply_direction(state, prog, w, s.objective, m_t, false);
}

bool lazy_gate(const qubo::QuboInstance& q_prev, const qubo::QuboInstance& q_new, double gap) {
  if (gap < 0.0) {
    throw std::invalid_argument("spectral gap must be nonnegative");
  }
  return qubo::QuboInstance::coeff_distance(q_prev, q_new) < gap;
}

double spectral_gap(const qubo::QuboInstance& q, int cap) {
  qubo::BruteForceResult r = qubo::brute_force_solve(q, cap);
  return r.second_value - r.best_value;
}

int samples_per_iteration(int iterations, double p0) {
  if (iterations < 1 || !(p0 > 0.0 && p0 < 1.0)) {
    throw std::invalid_argument("need T >= 1 and p0 in (0,1)");
  }
  double c = 2.0 / (-std::log(1.0 - p0));
  return static_cast<int>(std::ceil(c * std::log(static_cast<double>(iterations)))) + 1;
}

double tts_estimate(double tau_seconds, int iterations, double p0) {
  if (!(tau_seconds > 0.0)) {
    throw std::invalid_argument("oracle call time must be positive");
  }
  return tau_seconds * iterations * samples_per_iteration(iterations, p0);
}

std::vector<uint8_t> extract(const std::vector<double>& v_flat, const CopositiveProgram& prog,
                             bool* feasible) {
  const int p = prog.p;
  std::vector<uint8_t> lifted(p, 0);
  lifted[0] = 1;
  for (int i = 1; i < p; ++i) {
    lifted[i] = v_flat[static_cast<std::size_t>(i)] >= 0.5 ? 1 : 0;  // row 0, ties to 1
  }

  auto check = [&](const std::vector<uint8_t>& cand) {
    std::vector<double> rank_one(static_cast<std::size_t>(p) * p, 0.0);
    for (int i = 0; i < p; ++i) {
      if (!cand[i]) continue;
      for (int j = 0; j < p; ++j) {
        if (cand[j]) rank_one[static_cast<std::size_t>(i) * p + j] = 1.0;
      }
    }
    for (const auto& row : prog.rows) {
      if (std::abs(row.value(rank_one, p) - row.rhs) > 1e-6) return false;
    }
    return true;
  };

  bool ok = check(lifted);
  if (!ok) {
    // rank-one projection of the variable submatrix
    const int m = p - 1;
    std::vector<double> u(m, 1.0 / std::sqrt(static_cast<double>(m)));
    std::vector<double> next(m);
    double lambda = 0.0;
    for (int iter = 0; iter < 200; ++iter) {
      for (int i = 0; i < m; ++i) {
        double acc = 0.0;
        for (int j = 0; j < m; ++j) {
          acc += v_flat[static_cast<std::size_t>(i + 1) * p + (j + 1)] * u[j];
        }
        next[i] = acc;
      }
      double norm = 0.0;
      for (double v : next) norm += v * v;
      norm = std::sqrt(norm);
      if (norm == 0.0) break;
      lambda = norm;
      for (int i = 0; i < m; ++i) u[i] = next[i] / norm;
    }
    double align = 0.0;
    for (int i = 0; i < m; ++i) align += u[i] * v_flat[static_cast<std::size_t>(i + 1)];
    double sign = align < 0.0 ? -1.0 : 1.0;
    double scale = std::sqrt(std::max(lambda, 0.0));
    for (int i = 0; i < m; ++i) {
      lifted[i + 1] = sign * scale * u[i] >= 0.5 ? 1 : 0;
    }
    ok = check(lifted);
  }
  if (feasible) *feasible = ok;
  return std::vector<uint8_t>(lifted.begin() + 1, lifted.begin() + 1 + prog.model_vars);
}

RunResult run(const CopositiveProgram& prog, const qubo::OracleFn& oracle,
              const RunConfig& config) {
  if (config.iterations < 1) {
    throw std::invalid_argument("need at least one iteration");
  }
  if (!(config.delta > 0.0) || !(config.alpha0 > 0.0)) {
    throw std::invalid_argument("need positive delta and alpha0");
  }
  if (config.truncation_digits < 0) {
    throw std::invalid_argument("truncation digits must be >= 0");
  }

  const int m_t = samples_per_iteration(config.iterations, config.p0);
  QcgdState state = QcgdState::init(prog, config.delta, config.alpha0);

  RunResult result;
  result.samples_per_iteration = m_t;

  std::optional<qubo::QuboInstance> prev_q;
  std::vector<uint8_t> prev_w;
  double prev_gap = 0.0;
  double best_feasible = std::numeric_limits<double>::infinity();

  for (int t = 1; t <= config.iterations; ++t) {
    qubo::QuboInstance q = gradient_qubo(state, prog);
    if (config.truncation_digits > 0) {
      q = qubo::truncate(q, config.truncation_digits);
    }

    bool skipped = false;
    std::vector<uint8_t> sample_bits;
    double oracle_best = 0.0;
    // drift accumulates against the QUBO of the last solved iteration
    if (config.lazy && prev_q && lazy_gate(*prev_q, q, prev_gap)) {
      skipped = true;
      sample_bits = prev_w;
      oracle_best = q.value(prev_w);
    } else {
      qubo::OracleSample s = qubo::best_of(oracle, q, m_t, mix_seed(config.seed, t));
      sample_bits = s.assignment;
      oracle_best = s.objective;
      if (config.lazy) {
        prev_gap = spectral_gap(q);
        if (!std::isfinite(prev_gap)) prev_gap = 0.0;
      }
      prev_q = q;
      prev_w = sample_bits;
    }

    std::vector<uint8_t> w(prog.p, 0);
    w[0] = 1;
    std::copy(sample_bits.begin(), sample_bits.end(), w.begin() + 1);
    apply_direction(state, prog, w, oracle_best, skipped ? 0 : m_t, skipped);

    // objective gap against the best known bound
    TraceRow& row = state.trace.back();
    double reference;
    if (config.objective_reference) {
      reference = *config.objective_reference;
    } else {
      bool feas = false;
      std::vector<uint8_t> cand = extract(state.v_flat, prog, &feas);
      if (feas) {
        std::vector<uint8_t> lifted(prog.p, 0);
        lifted[0] = 1;
        for (int i = 0; i < prog.model_vars; ++i) lifted[i + 1] = cand[i];
        // slack coordinates beyond model_vars were already validated by check
        std::vector<double> rank_one(static_cast<std::size_t>(prog.p) * prog.p, 0.0);
        for (int i = 0; i < prog.p; ++i) {
          if (!lifted[i]) continue;
          for (int j = 0; j < prog.p; ++j) {
            if (lifted[j]) rank_one[static_cast<std::size_t>(i) * prog.p + j] = 1.0;
          }
        }
        best_feasible = std::min(best_feasible, prog.trace_cost(rank_one));
      }
      reference = best_feasible;
    }
    row.obj_surrogate = std::isfinite(reference)
                            ? prog.trace_cost(state.v_flat) - reference
                            : std::numeric_limits<double>::quiet_NaN();

    if (result.converged_at < 0 && std::isfinite(row.obj_surrogate) &&
        row.infeasibility < config.tol_infeasibility &&
        std::abs(row.obj_surrogate) < config.tol_objective) {
      result.converged_at = t;
      break;
    }
  }

  result.trace = std::move(state.trace);
  result.solution = extract(state.v_flat, prog, &result.extraction_feasible);
  return result;
}

void write_trace_csv(const std::vector<TraceRow>& trace, const std::string& path) {
  std::ofstream out(path);
  if (!out) {
    throw std::runtime_error("cannot open " + path + " for writing");
  }
  out << "t,gamma,alpha,obj_surrogate,infeasibility,oracle_best,samples,skipped\n";
  char buf[256];
  for (const auto& r : trace) {
    std::snprintf(buf, sizeof(buf), "%d,%.17g,%.17g,%.17g,%.17g,%.17g,%d,%d\n", r.t, r.gamma,
                  r.alpha, r.obj_surrogate, r.infeasibility, r.oracle_best, r.samples,
                  r.skipped ? 1 : 0);
    out << buf;
  }
}

}  // namespace qubonn::qcgd
