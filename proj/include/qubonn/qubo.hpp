#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <limits>
#include <string>
#include <tuple>
#include <vector>

namespace qubonn::qubo {

/// QUBO objective f(x) = sum_{i<=j} q_ij x_i x_j + offset over x in {0,1}^n.
/// Coefficients are stored upper-triangular; the diagonal carries the linear
/// part (x_i^2 = x_i).
class QuboInstance {
 public:
  explicit QuboInstance(int n, double offset = 0.0);

  int size() const { return n_; }
  double offset() const { return offset_; }
  void set_offset(double v) { offset_ = v; }

  double coeff(int i, int j) const { return q_[index(i, j)]; }
  void set(int i, int j, double c) { q_[index(i, j)] = c; }
  void add(int i, int j, double c) { q_[index(i, j)] += c; }

  double value(const std::vector<uint8_t>& x) const;
  double max_abs_coeff() const;

  /// Frobenius norm of the coefficient difference, each unordered pair
  /// counted once (upper-triangular storage).
  static double coeff_distance(const QuboInstance& a, const QuboInstance& b);

  /// (i, j, coeff) for all nonzero stored coefficients, i <= j.
  std::vector<std::tuple<int, int, double>> nonzeros() const;

  std::string to_json() const;
  static QuboInstance from_json(const std::string& text);

 private:
  std::size_t index(int i, int j) const;

  int n_;
  double offset_;
  std::vector<double> q_;  // upper-triangular row-major
};

/// Ising energy E(s) = -sum_{i<j} J_ij s_i s_j - sum_i h_i s_i + constant
/// over spins s in {-1,+1}^n.
class IsingInstance {
 public:
  explicit IsingInstance(int n, double constant = 0.0);

  int size() const { return n_; }
  double constant() const { return constant_; }
  void set_constant(double v) { constant_ = v; }
  double coupling(int i, int j) const { return j_[pair_index(i, j)]; }
  void set_coupling(int i, int j, double v) { j_[pair_index(i, j)] = v; }
  double field(int i) const { return h_[i]; }
  void set_field(int i, double v) { h_[i] = v; }

  double energy(const std::vector<int8_t>& spins) const;

 private:
  std::size_t pair_index(int i, int j) const;

  int n_;
  double constant_;
  std::vector<double> j_;  // strict upper-triangular couplings
  std::vector<double> h_;
};

/// Exact maps under s_i = 2 x_i - 1; energies agree pointwise, constants
/// included.
IsingInstance qubo_to_ising(const QuboInstance& q);
QuboInstance ising_to_qubo(const IsingInstance& m);

struct BruteForceResult {
  std::vector<uint8_t> best;
  double best_value = 0.0;
  // smallest objective value strictly greater than best_value;
  // +inf when the objective is constant
  double second_value = std::numeric_limits<double>::infinity();
};

/// Exhaustive minimization. Ties go to the lexicographically smallest bit
/// vector. Refuses instances above `cap` variables.
BruteForceResult brute_force_solve(const QuboInstance& q, int cap = 26);

struct OracleSample {
  std::vector<uint8_t> assignment;
  double objective = 0.0;
  uint64_t seed = 0;
  int sweeps = 0;
  std::string oracle;
};

struct AnnealSchedule {
  double t_init = 0.0;  // 0 = auto (max |coefficient|)
  double t_final = 1e-3;
  int sweeps = 0;       // 0 = auto (100 * n)
};

/// Single-bit-flip Metropolis annealing with geometric cooling.
/// Deterministic given (instance, schedule, seed); the returned objective is
/// re-evaluated from scratch on the best assignment seen. An initial
/// assignment may be supplied (warm start); by default the start is drawn
/// from the seed.
OracleSample sa_solve(const QuboInstance& q, const AnnealSchedule& schedule, uint64_t seed,
                      const std::vector<uint8_t>* initial = nullptr);

/// c = a + factor * b over matching variable spaces.
QuboInstance combine(const QuboInstance& a, const QuboInstance& b, double factor);

using OracleFn = std::function<OracleSample(const QuboInstance&, uint64_t seed)>;

OracleFn make_exact_oracle(int cap = 26);
OracleFn make_sa_oracle(AnnealSchedule schedule = {});

/// Runs the oracle `m` times with seeds derived from `seed`, returns the
/// minimum-objective sample (ties by lexicographic assignment).
OracleSample best_of(const OracleFn& oracle, const QuboInstance& q, int m, uint64_t seed);

/// Wraps an exact solve into a (delta, eps)-inexact oracle: with probability
/// 1-delta the returned sample is the worst assignment within an additive
/// budget xi_t/sqrt(t) of the optimum, where xi_t >= 0 has mean <= eps and
/// t counts calls made through the wrapper. delta=1, eps=0 reproduces the
/// exact oracle output on every call.
OracleFn make_noisy_oracle(double delta, double eps, uint64_t seed, int cap = 26);

/// Every coefficient (and the offset) rounded to `digits` decimal places,
/// half away from zero.
QuboInstance truncate(const QuboInstance& q, int digits);

/// Worst-case |f - f_truncated| over all assignments after truncating to
/// `digits` decimals: per-coefficient error 10^-d/2 times the n(n+1)/2 stored
/// coefficients plus the offset term.
double truncation_error_bound(int n, int digits);

/// Text format: header "p qubo <n> <offset>" then one "i j coeff" line per
/// stored nonzero with 0-based i <= j. Round-trips bit-exactly.
void write_qubo_text(const QuboInstance& q, std::ostream& out);
QuboInstance read_qubo_text(std::istream& in);
void write_qubo_text_file(const QuboInstance& q, const std::string& path);
QuboInstance read_qubo_text_file(const std::string& path);

}  // namespace qubonn::qubo
