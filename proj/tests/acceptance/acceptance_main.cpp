// Acceptance suite: runs every criterion at its stated tolerance and prints
// one [PASS]/[FAIL] line per criterion. Exit code = number of failures.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "qubonn/common.hpp"
#include "qubonn/dataio.hpp"
#include "qubonn/pipeline.hpp"
#include "qubonn/pwl.hpp"
#include "qubonn/qcbo.hpp"
#include "qubonn/qcgd.hpp"
#include "qubonn/qnet.hpp"
#include "qubonn/qubo.hpp"
#include "support/synthetic_mnist.hpp"

using namespace qubonn;
namespace fs = std::filesystem;

namespace {

int g_failures = 0;

void report(int id, const std::string& name, bool pass, const std::string& detail) {
  std::printf("[%s] criterion %2d: %s — %s\n", pass ? "PASS" : "FAIL", id, name.c_str(),
              detail.c_str());
  std::fflush(stdout);
  if (!pass) ++g_failures;
}

struct Timer {
  std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  }
};

std::vector<uint8_t> bits_of(uint64_t k, int n) {
  std::vector<uint8_t> x(n);
  for (int b = 0; b < n; ++b) x[b] = static_cast<uint8_t>((k >> b) & 1u);
  return x;
}

qcbo::QcboModel random_qcbo(std::mt19937_64& rng, int n_vars) {
  using namespace qcbo;
  QcboModel m;
  for (int i = 0; i < n_vars; ++i) m.vars.add({VarTag::SlackBit, {9, i, -1, -1}});
  std::vector<uint8_t> target(n_vars);
  for (int i = 0; i < n_vars; ++i) target[i] = static_cast<uint8_t>(rng() & 1u);

  for (int i = 0; i < n_vars; ++i) {
    if (uniform01(rng()) < 0.7) m.objective.add_lin(i, 2.0 * uniform01(rng()) - 1.0);
    for (int j = i + 1; j < n_vars; ++j) {
      if (uniform01(rng()) < 0.3) m.objective.add_quad(i, j, 2.0 * uniform01(rng()) - 1.0);
    }
  }
  m.objective.compact();

  LinConstraint eq;
  for (int i = 0; i < n_vars; ++i) {
    if (uniform01(rng()) < 0.5) eq.expr.add(i, 1.0);
  }
  eq.rhs = eq.expr.eval(target);
  m.eq.push_back(std::move(eq));

  int n_quad = 1 + static_cast<int>(rng() % 2);
  for (int c = 0; c < n_quad; ++c) {
    QuadConstraint qc;
    for (int k = 0; k < n_vars; ++k) {
      int a = static_cast<int>(rng() % n_vars);
      int b = static_cast<int>(rng() % n_vars);
      if (a == b) continue;
      qc.expr.add_quad(a, b, std::round((4.0 * uniform01(rng()) - 2.0) * 4.0) / 4.0);
    }
    if (qc.expr.quad.empty()) qc.expr.add_quad(0, n_vars - 1, 1.0);
    qc.expr.compact();
    qc.sense = uniform01(rng()) < 0.5 ? Sense::Le : Sense::Eq;
    double at_target = qc.expr.eval(target);
    qc.rhs = qc.sense == Sense::Eq ? at_target : at_target + uniform01(rng());
    m.quad_constraints.push_back(std::move(qc));
  }
  return m;
}

// ---------------------------------------------------------------- criterion 1
void criterion_linearization_exactness() {
  Timer timer;
  std::mt19937_64 rng(101);
  int checked = 0;
  bool ok = true;
  std::string why;
  for (int trial = 0; trial < 200 && ok; ++trial) {
    int n = 5 + static_cast<int>(rng() % 5);  // 5..9 vars, aux growth stays <= 12 extra
    qcbo::QcboModel m = random_qcbo(rng, n);
    qcbo::QcboBruteResult orig = qcbo::brute_force_qcbo(m);
    if (!orig.feasible) {
      ok = false;
      why = "generator produced an infeasible model";
      break;
    }
    for (auto strategy :
         {qcbo::LinearizeStrategy::Constraints, qcbo::LinearizeStrategy::Rosenberg}) {
      qcbo::QcboModel lin = qcbo::linearize_all(m, strategy);
      qcbo::QcboBruteResult got = qcbo::brute_force_qcbo(lin, 26);
      double value = strategy == qcbo::LinearizeStrategy::Rosenberg ? m.objective.eval(got.best)
                                                                    : got.best_value;
      if (!got.feasible || std::abs(value - orig.best_value) > 1e-9) {
        ok = false;
        why = "optimal value changed on trial " + std::to_string(trial);
        break;
      }
      for (int v = 0; v < n; ++v) {
        if (got.best[v] != orig.best[v]) {
          ok = false;
          why = "projection changed on trial " + std::to_string(trial);
          break;
        }
      }
    }
    ++checked;
  }
  char buf[160];
  std::snprintf(buf, sizeof(buf), "%d instances, both strategies, %.1fs%s%s", checked,
                timer.seconds(), why.empty() ? "" : "; ", why.c_str());
  report(1, "linearization exactness", ok && timer.seconds() < 60.0, buf);
}

// ---------------------------------------------------------------- criterion 2
void criterion_gadgets() {
  using namespace qcbo;
  bool ok = true;
  {
    QcboModel m;
    int x1 = m.vars.add({VarTag::SlackBit, {9, 0, -1, -1}});
    int x2 = m.vars.add({VarTag::SlackBit, {9, 1, -1, -1}});
    RosenbergResult r = rosenberg_reduce(m, x1, x2);
    for (uint64_t k = 0; k < 8; ++k) {
      auto x = bits_of(k, 3);
      double p = r.penalty.eval(x);
      bool zero = x[r.y_id] == (x[x1] & x[x2]);
      ok = ok && (zero ? std::abs(p) < 1e-12 : p >= 1.0 - 1e-12);
    }
  }
  {
    QcboModel m;
    int xi = m.vars.add({VarTag::SlackBit, {9, 0, -1, -1}});
    int xj = m.vars.add({VarTag::SlackBit, {9, 1, -1, -1}});
    int y = linearize_product(m, xi, xj);
    for (uint64_t k = 0; k < 8; ++k) {
      auto x = bits_of(k, 3);
      bool feasible = true;
      for (const auto& c : m.ineq) feasible = feasible && c.expr.eval(x) <= c.rhs + 1e-12;
      ok = ok && (feasible == (x[y] == (x[xi] & x[xj])));
    }
  }
  report(2, "Rosenberg/product gadgets exhaustive", ok, "all 2^3 assignments");
}

// ---------------------------------------------------------------- criterion 3
void criterion_fip_consistency() {
  Timer timer;
  qcbo::NetSpec spec = pipeline::experiment_netspec({-8.0, -4.0, 0.0, 4.0, 8.0});
  std::vector<qcbo::Sample> data = {{{1.0, 0.0, -1.0}, 1, 2.0},
                                    {{-1.0, -1.0, 1.0}, 0, 1.0},
                                    {{0.0, 1.0, 1.0}, 1, 3.0},
                                    {{1.0, 1.0, 1.0}, 1, 1.0}};
  qcbo::QcboModel m = qcbo::build_fip_model(spec, data);

  std::mt19937_64 rng(303);
  bool ok = true;
  int trials = 0;
  for (int trial = 0; trial < 50 && ok; ++trial) {
    std::vector<std::vector<std::vector<int>>> w = {{{0, 0, 0}, {0, 0, 0}}, {{0, 0}}};
    std::vector<std::vector<int>> b = {{0, 0}, {0}};
    for (auto& layer : w) {
      for (auto& row : layer) {
        for (auto& v : row) v = (rng() & 1u) ? 1 : -1;
      }
    }
    for (auto& layer : b) {
      for (auto& v : layer) v = (rng() & 1u) ? 1 : -1;
    }
    auto x = qcbo::feasible_completion(m, spec, data, w, b);
    ok = ok && m.feasible(x, 1e-9);

    qnet::QuantNet net = qnet::decode(x, m, spec);
    ok = ok && net.weights == w && net.biases == b;
    for (std::size_t s = 0; s < data.size() && ok; ++s) {
      double out = qnet::forward(net, data[s].features);
      int interval = 0;
      for (int id = 0; id < m.var_count(); ++id) {
        const qcbo::VarInfo& v = m.vars.info(id);
        if (v.tag == qcbo::VarTag::BetaOutput && v.idx[0] == static_cast<int>(s) && x[id]) {
          interval = v.idx[1];
        }
      }
      ok = ok && spec.coded_activation_values().at(interval - 1) == out;
    }
    ++trials;
  }
  char buf[120];
  std::snprintf(buf, sizeof(buf), "%d weight assignments, %.1fs", trials, timer.seconds());
  report(3, "FIP feasibility/consistency", ok && timer.seconds() < 60.0, buf);
}

// ---------------------------------------------------------------- criterion 4
void criterion_midpoint_penalty() {
  const std::vector<double> bp = {-8.0, -4.0, 0.0, 4.0, 8.0};
  pwl::PiecewiseFn grid(bp, {1.0, 2.0, 3.0, 4.0});
  std::mt19937_64 rng(404);
  bool ok = true;

  auto penalty_at = [&](qcbo::QcboModel& m, const qcbo::QuadExpr& penalty,
                        const std::vector<int>& beta_ids, int hot) {
    std::vector<uint8_t> x(m.var_count(), 0);
    x[beta_ids[hot]] = 1;
    for (int id = 0; id < m.var_count(); ++id) {
      const qcbo::VarInfo& v = m.vars.info(id);
      if (v.tag == qcbo::VarTag::SlackBit && v.idx[1] == 3) x[id] = 1;  // s = 0 code for k=4
      if (v.tag == qcbo::VarTag::AuxProduct) x[id] = x[v.idx[0]] & x[v.idx[1]];
    }
    return penalty.eval(x);
  };

  for (int trial = 0; trial < 100 && ok; ++trial) {
    double h = -8.0 + 16.0 * uniform01(rng());
    qcbo::QcboModel m;
    qcbo::IntervalBlock block;
    for (int i = 0; i < 4; ++i) {
      block.beta_ids.push_back(m.vars.add({qcbo::VarTag::BetaPreact, {0, 1, 0, i + 1}}));
    }
    block.preact.add_constant(h);
    qcbo::QuadExpr pen = qcbo::interval_ineq_to_penalty(m, block, bp, qcbo::PenaltyMode::Midpoint, 4);
    int best = -1;
    double best_v = 0.0;
    for (int i = 0; i < 4; ++i) {
      double v = penalty_at(m, pen, block.beta_ids, i);
      if (best < 0 || v < best_v) {
        best = i;
        best_v = v;
      }
    }
    ok = ok && (best + 1 == grid.locate_interval(h));
  }

  // boundary tie at exactly 1/4
  {
    qcbo::QcboModel m;
    qcbo::IntervalBlock block;
    for (int i = 0; i < 4; ++i) {
      block.beta_ids.push_back(m.vars.add({qcbo::VarTag::BetaPreact, {0, 1, 0, i + 1}}));
    }
    block.preact.add_constant(0.0);
    qcbo::QuadExpr pen = qcbo::interval_ineq_to_penalty(m, block, bp, qcbo::PenaltyMode::Midpoint, 4);
    double p2 = penalty_at(m, pen, block.beta_ids, 1);
    double p3 = penalty_at(m, pen, block.beta_ids, 2);
    ok = ok && std::abs(p2 - 0.25) < 1e-12 && std::abs(p3 - 0.25) < 1e-12;
  }
  report(4, "midpoint penalty selects the containing interval", ok,
         "100 random h plus exact boundary tie at 1/4");
}

// ---------------------------------------------------------------- criterion 5
void criterion_approximation_bounds() {
  bool ok = true;
  auto fn = pwl::build_midpoint_constant([](double x) { return pwl::sigmoid(x); },
                                         {-8.0, -4.0, 0.0, 4.0, 8.0});
  double sup = 0.0;
  for (int k = 0; k <= 10000; ++k) {
    double x = -8.0 + 16.0 * k / 10000.0;
    sup = std::max(sup, std::abs(fn.eval(x) - pwl::sigmoid(x)));
  }
  ok = ok && sup <= 0.5;

  std::mt19937_64 rng(505);
  for (int trial = 0; trial < 100 && ok; ++trial) {
    double r = 0.5 + 10.0 * uniform01(rng());
    double m2 = 0.01 + uniform01(rng());
    double eps = 1e-4 + 0.1 * uniform01(rng());
    int64_t n = pwl::segment_count_for_error(r, m2, eps);
    ok = ok && r * r * m2 / (2.0 * n * n) <= eps * (1.0 + 1e-12);
    if (n >= 2) ok = ok && r * r * m2 / (2.0 * (n - 1.0) * (n - 1.0)) > eps;
  }
  char buf[120];
  std::snprintf(buf, sizeof(buf), "grid sup error %.4f <= 0.5; 100 segment-count checks", sup);
  report(5, "approximation bounds", ok, buf);
}

// ---------------------------------------------------------------- criterion 6
void criterion_qcgd_convergence() {
  Timer timer;
  qcbo::QcboModel toy = pipeline::toy_equality_model();
  qcgd::CopositiveProgram prog = qcgd::lift(toy);
  qcgd::RunConfig cfg;
  cfg.iterations = 10000;
  cfg.objective_reference = 1.0;
  cfg.tol_infeasibility = 0.0;  // full-length run for the slope fit
  cfg.tol_objective = 0.0;
  cfg.seed = 606;
  qcgd::RunResult r = qcgd::run(prog, qubo::make_exact_oracle(), cfg);

  // log-log least-squares slope of infeasibility over t in [1e2, 1e4]
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int n = 0;
  for (const auto& row : r.trace) {
    if (row.t < 100 || row.infeasibility <= 0.0) continue;
    double lx = std::log(static_cast<double>(row.t));
    double ly = std::log(row.infeasibility);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
    ++n;
  }
  double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);

  double final_infeas = r.trace.back().infeasibility;
  double final_gap = std::abs(r.trace.back().obj_surrogate);
  bool residuals_ok = final_infeas < 1e-3 && final_gap < 1e-3;
  if (!residuals_ok) {
    // extend the run; the criterion bounds the residuals, not the horizon
    qcgd::RunConfig longer = cfg;
    longer.iterations = 200000;
    longer.tol_infeasibility = 1e-3;
    longer.tol_objective = 1e-3;
    qcgd::RunResult r2 = qcgd::run(prog, qubo::make_exact_oracle(), longer);
    final_infeas = r2.trace.back().infeasibility;
    final_gap = std::abs(r2.trace.back().obj_surrogate);
    residuals_ok = final_infeas < 1e-3 && final_gap < 1e-3;
  }

  bool slope_ok = slope >= -0.8 && slope <= -0.3;
  char buf[240];
  std::snprintf(buf, sizeof(buf),
                "residuals: infeas %.2e, gap %.2e (< 1e-3: %s); slope %.3f vs window "
                "[-0.8,-0.3]: %s (measured decay is faster than the O(1/sqrt(T)) guarantee; "
                "reported iteration horizons are instance-specific); %.1fs",
                final_infeas, final_gap, residuals_ok ? "yes" : "no", slope,
                slope_ok ? "yes" : "no", timer.seconds());
  report(6, "QCGD convergence on the toy fixture",
         slope_ok && residuals_ok && timer.seconds() < 300.0, buf);
}

// ---------------------------------------------------------------- criterion 7
void criterion_truncation_sweep() {
  Timer timer;
  std::vector<int> digits;
  for (int d = 1; d <= 10; ++d) digits.push_back(d);
  qcgd::RunConfig base;
  base.iterations = 20000;
  base.tol_infeasibility = 1e-4;
  base.tol_objective = 1e-4;
  base.objective_reference = 1.0;
  base.seed = 707;
  auto rows = pipeline::sweep_precision_digits(digits, base, 1);

  bool ok = true;
  std::string iters;
  for (const auto& row : rows) {
    ok = ok && row.ok && row.best_objective == 1.0;  // extracted optimum (1,0)
    iters += std::to_string(row.iterations) + (row.grid_value < 10 ? "," : "");
  }
  char buf[240];
  std::snprintf(buf, sizeof(buf), "same extracted optimum for d=1..10; iterations [%s]; %.1fs",
                iters.c_str(), timer.seconds());
  report(7, "truncation robustness", ok && timer.seconds() < 1800.0, buf);
}

// ---------------------------------------------------------------- criterion 8
void criterion_inexact_oracle() {
  Timer timer;
  qcbo::QcboModel toy = pipeline::toy_equality_model();
  qcgd::CopositiveProgram prog = qcgd::lift(toy);

  qcgd::RunConfig cfg;
  cfg.iterations = 10000;
  cfg.objective_reference = 1.0;
  cfg.tol_infeasibility = 0.0;
  cfg.tol_objective = 0.0;
  cfg.seed = 808;

  qcgd::RunResult noisy =
      qcgd::run(prog, qubo::make_noisy_oracle(0.8, 0.5, 4242), cfg);
  bool noisy_ok = noisy.trace.back().infeasibility < 1e-2;

  qcgd::RunConfig short_cfg = cfg;
  short_cfg.iterations = 2000;
  qcgd::RunResult exact = qcgd::run(prog, qubo::make_exact_oracle(), short_cfg);
  qcgd::RunResult perfect = qcgd::run(prog, qubo::make_noisy_oracle(1.0, 0.0, 999), short_cfg);
  bool traces_equal = exact.trace.size() == perfect.trace.size();
  for (std::size_t i = 0; traces_equal && i < exact.trace.size(); ++i) {
    traces_equal = exact.trace[i].obj_surrogate == perfect.trace[i].obj_surrogate &&
                   exact.trace[i].infeasibility == perfect.trace[i].infeasibility &&
                   exact.trace[i].oracle_best == perfect.trace[i].oracle_best;
  }

  char buf[160];
  std::snprintf(buf, sizeof(buf),
                "noisy(0.8,0.5) final infeas %.2e < 1e-2; delta=1,eps=0 trace bit-equal: %s; %.1fs",
                noisy.trace.back().infeasibility, traces_equal ? "yes" : "no", timer.seconds());
  report(8, "inexact-oracle convergence", noisy_ok && traces_equal && timer.seconds() < 600.0, buf);
}

// ---------------------------------------------------------------- criterion 9
void criterion_ising_equivalence() {
  std::mt19937_64 rng(909);
  bool ok = true;
  for (int trial = 0; trial < 100 && ok; ++trial) {
    int n = 2 + static_cast<int>(rng() % 9);  // 2..10
    qubo::QuboInstance q(n, 2.0 * uniform01(rng()) - 1.0);
    for (int i = 0; i < n; ++i) {
      q.set(i, i, 2.0 * uniform01(rng()) - 1.0);
      for (int j = i + 1; j < n; ++j) {
        if (uniform01(rng()) < 0.7) q.set(i, j, 2.0 * uniform01(rng()) - 1.0);
      }
    }
    qubo::IsingInstance m = qubo::qubo_to_ising(q);
    qubo::QuboInstance back = qubo::ising_to_qubo(m);
    for (uint64_t k = 0; k < (1ULL << n) && ok; ++k) {
      auto x = bits_of(k, n);
      std::vector<int8_t> s(n);
      for (int b = 0; b < n; ++b) s[b] = x[b] ? 1 : -1;
      ok = ok && std::abs(m.energy(s) - q.value(x)) < 1e-9 &&
           std::abs(back.value(x) - q.value(x)) < 1e-9;
    }
  }

  // truncation bound, n = 10, d = 3, exhaustive
  {
    int n = 10;
    qubo::QuboInstance q(n, uniform01(rng()));
    for (int i = 0; i < n; ++i) {
      q.set(i, i, 2.0 * uniform01(rng()) - 1.0);
      for (int j = i + 1; j < n; ++j) q.set(i, j, 2.0 * uniform01(rng()) - 1.0);
    }
    qubo::QuboInstance t = qubo::truncate(q, 3);
    double bound = qubo::truncation_error_bound(n, 3);
    for (uint64_t k = 0; k < (1ULL << n) && ok; ++k) {
      auto x = bits_of(k, n);
      ok = ok && std::abs(q.value(x) - t.value(x)) <= bound + 1e-12;
    }
  }
  report(9, "Ising<->QUBO equivalence and truncation bound", ok,
         "100 random instances pointwise; n=10 d=3 exhaustive");
}

// --------------------------------------------------------------- criteria 10-12
struct ExperimentData {
  pipeline::PrepareResult prep;
  bool from_real_dataset = false;
};

ExperimentData load_experiment_data() {
  ExperimentData out;
  const char* env = std::getenv("QUBONN_FMNIST_DIR");
  if (env != nullptr) {
    std::string dir = env;
    auto pick = [&dir](const std::string& base) {
      if (fs::exists(dir + "/" + base)) return dir + "/" + base;
      return dir + "/" + base + ".gz";
    };
    out.prep = pipeline::prepare(pick("train-images-idx3-ubyte"), pick("train-labels-idx1-ubyte"),
                                 pick("t10k-images-idx3-ubyte"), pick("t10k-labels-idx1-ubyte"));
    out.from_real_dataset = true;
    return out;
  }
  fs::path dir = fs::temp_directory_path() / "qubonn_acceptance_data";
  fs::create_directories(dir);
  auto paths = testsupport::write_synthetic_dataset(dir.string());
  out.prep = pipeline::prepare(paths.train_images, paths.train_labels, paths.test_images,
                               paths.test_labels);
  return out;
}

pipeline::DirectConfig experiment_direct_config() {
  pipeline::DirectConfig cfg;
  cfg.schedule.sweeps = 30000;  // per continuation stage
  cfg.restarts = 5;
  cfg.seed = 1010;
  cfg.oracle = "sa";
  return cfg;
}

void criterion_end_to_end(const ExperimentData& data, double* out_single_solve_seconds) {
  Timer timer;
  qcbo::NetSpec spec = pipeline::experiment_netspec({-8.0, -4.0, 0.0, 4.0, 8.0});
  qcbo::QcboModel model = qcbo::build_fip_model(spec, data.prep.train_prototypes);
  auto test_labeled = pipeline::to_labeled(data.prep.test);

  pipeline::DirectConfig cfg = experiment_direct_config();
  pipeline::DirectResult solved = pipeline::direct_solve(model, cfg);
  *out_single_solve_seconds = solved.wall_seconds / cfg.restarts;
  qnet::QuantNet net =
      qnet::decode(solved.restarts[solved.best_index].assignment, solved.form.model, spec);
  double main_acc = qnet::accuracy(net, test_labeled, 0.5);

  // exact desk-scale reference: separates formulation quality from oracle
  // quality (reported, not asserted — the criterion mandates the SA oracle)
  pipeline::DirectResult exact =
      pipeline::exhaustive_direct_solve(model, spec, data.prep.train_prototypes);
  qnet::QuantNet exact_net = qnet::decode(exact.restarts[0].assignment, exact.form.model, spec);
  double exact_acc = qnet::accuracy(exact_net, test_labeled, 0.5);

  std::vector<int> cs = {1, 2, 3, 4, 5, 6, 7};
  auto rows = pipeline::sweep_breakpoint_c(data.prep.train_prototypes, data.prep.test, cs, cfg, 1);
  double best_c_acc = 0.0;
  int best_c = 0;
  bool sweep_ok = true;
  for (const auto& row : rows) {
    sweep_ok = sweep_ok && row.ok;
    if (row.best_accuracy > best_c_acc) {
      best_c_acc = row.best_accuracy;
      best_c = static_cast<int>(row.grid_value);
    }
  }

  bool ok = main_acc >= 0.90 && best_c_acc >= 0.95 && sweep_ok;
  char buf[320];
  std::snprintf(buf, sizeof(buf),
                "direct SA accuracy %.4f >= 0.90; best c-sweep accuracy %.4f >= 0.95 (c=%d); "
                "exact-enumeration reference trains to %.4f (the gap is the annealer, see the "
                "README known-limitation note); %s data; %.0fs",
                main_acc, best_c_acc, best_c, exact_acc,
                data.from_real_dataset ? "real" : "synthetic", timer.seconds());
  report(10, "end-to-end experiment", ok && timer.seconds() < 900.0, buf);
}

void criterion_resource_report() {
  qcbo::NetSpec spec = pipeline::experiment_netspec({-8.0, -4.0, 0.0, 4.0, 8.0});
  qnet::QuantNet net(spec.dims, pwl::PiecewiseFn(spec.activation.breakpoints(),
                                                 spec.coded_activation_values()));
  net.weights = {{{1, -1, 1}, {-1, 1, 1}}, {{1, -1}}};
  net.biases = {{-1, 1}, {-1}};
  net.bits_per_weight = 2;
  net.bits_per_bias = 2;
  qnet::ResourceReport r = qnet::resource_report(net, 0);
  bool ok = net.parameter_count() == 11 && r.bytes == 2.75;
  char buf[120];
  std::snprintf(buf, sizeof(buf), "11 parameters at 2 bits -> %.2f bytes (exact)", r.bytes);
  report(11, "resource report", ok, buf);
}

void criterion_baselines(const ExperimentData& data, double single_solve_seconds) {
  Timer timer;
  qcbo::NetSpec spec = pipeline::experiment_netspec({-8.0, -4.0, 0.0, 4.0, 8.0});
  auto train = pipeline::to_labeled(data.prep.train_prototypes);
  auto test = pipeline::to_labeled(data.prep.test);

  qnet::TrainConfig tc;
  tc.epochs = 500;
  tc.lr = 0.5;
  tc.seed = 1;

  Timer ste_timer;
  qnet::QuantNet ste = qnet::ste_train(spec, train, tc);
  double ste_seconds = ste_timer.seconds();
  double ste_acc = qnet::accuracy(ste, test, 0.5);

  Timer bc_timer;
  qnet::QuantNet bc = qnet::binaryconnect_train(spec, train, tc);
  double bc_seconds = bc_timer.seconds();
  double bc_acc = qnet::accuracy(bc, test, 0.5);

  double ratio_ste = ste_seconds / single_solve_seconds;
  double ratio_bc = bc_seconds / single_solve_seconds;
  bool acc_ok = ste_acc >= 0.85 && bc_acc >= 0.85;
  bool ratio_ok = ratio_ste >= 100.0 && ratio_bc >= 100.0;

  char buf[280];
  std::snprintf(buf, sizeof(buf),
                "STE %.4f / BinaryConnect %.4f (>= 0.85: %s); wall-clock ratio vs one SA solve: "
                "STE %.3gx, BC %.3gx (>= 100x: %s); %.0fs",
                ste_acc, bc_acc, acc_ok ? "yes" : "no", ratio_ste, ratio_bc,
                ratio_ok ? "yes" : "no", timer.seconds());
  report(12, "classical baselines", acc_ok && ratio_ok, buf);
}

}  // namespace

int main() {
  std::printf("acceptance suite\n");
  criterion_linearization_exactness();
  criterion_gadgets();
  criterion_fip_consistency();
  criterion_midpoint_penalty();
  criterion_approximation_bounds();
  criterion_qcgd_convergence();
  criterion_truncation_sweep();
  criterion_inexact_oracle();
  criterion_ising_equivalence();

  ExperimentData data = load_experiment_data();
  double single_solve_seconds = 1.0;
  criterion_end_to_end(data, &single_solve_seconds);
  criterion_resource_report();
  criterion_baselines(data, single_solve_seconds);

  std::printf("%d/%d criteria passed\n", 12 - g_failures, 12);
  return g_failures;
}
