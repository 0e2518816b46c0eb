#include "qubonn/qubo.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <random>
#include <sstream>
#include <stdexcept>
#include <tuple>

#include "json.hpp"
#include "qubonn/common.hpp"

namespace qubonn::qubo {

QuboInstance::QuboInstance(int n, double offset) : n_(n), offset_(offset) {
  if (n < 0) {
    throw std::invalid_argument("negative QUBO size");
  }
  q_.assign(static_cast<std::size_t>(n) * (n + 1) / 2, 0.0);
}

std::size_t QuboInstance::index(int i, int j) const {
  if (i > j) std::swap(i, j);
  if (i < 0 || j >= n_) {
    throw std::out_of_range("QUBO index out of range");
  }
  // row-major upper triangle: row i starts at i*n - i(i-1)/2
  return static_cast<std::size_t>(i) * n_ - static_cast<std::size_t>(i) * (i - 1) / 2 +
         (j - i);
}

double QuboInstance::value(const std::vector<uint8_t>& x) const {
  if (static_cast<int>(x.size()) != n_) {
    throw std::invalid_argument("assignment length mismatch");
  }
  double v = offset_;
  for (int i = 0; i < n_; ++i) {
    if (!x[i]) continue;
    v += coeff(i, i);
    for (int j = i + 1; j < n_; ++j) {
      if (x[j]) v += coeff(i, j);
    }
  }
  return v;
}

double QuboInstance::max_abs_coeff() const {
  double m = 0.0;
  for (double c : q_) m = std::max(m, std::abs(c));
  return m;
}

double QuboInstance::coeff_distance(const QuboInstance& a, const QuboInstance& b) {
  if (a.n_ != b.n_) {
    throw std::invalid_argument("size mismatch");
  }
  double s = 0.0;
  for (std::size_t k = 0; k < a.q_.size(); ++k) {
    double d = a.q_[k] - b.q_[k];
    s += d * d;
  }
  return std::sqrt(s);
}

std::vector<std::tuple<int, int, double>> QuboInstance::nonzeros() const {
  std::vector<std::tuple<int, int, double>> out;
  for (int i = 0; i < n_; ++i) {
    for (int j = i; j < n_; ++j) {
      double c = coeff(i, j);
      if (c != 0.0) out.emplace_back(i, j, c);
    }
  }
  return out;
}

std::string QuboInstance::to_json() const {
  nlohmann::json j;
  j["n"] = n_;
  j["offset"] = offset_;
  nlohmann::json terms = nlohmann::json::array();
  for (const auto& [a, b, c] : nonzeros()) {
    terms.push_back({a, b, c});
  }
  j["terms"] = std::move(terms);
  return j.dump();
}

QuboInstance QuboInstance::from_json(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text);
  QuboInstance q(j.at("n").get<int>(), j.at("offset").get<double>());
  for (const auto& t : j.at("terms")) {
    q.add(t.at(0).get<int>(), t.at(1).get<int>(), t.at(2).get<double>());
  }
  return q;
}

IsingInstance::IsingInstance(int n, double constant) : n_(n), constant_(constant) {
  if (n < 0) {
    throw std::invalid_argument("negative Ising size");
  }
  j_.assign(static_cast<std::size_t>(n) * (n > 0 ? n - 1 : 0) / 2, 0.0);
  h_.assign(n, 0.0);
}

std::size_t IsingInstance::pair_index(int i, int j) const {
  if (i > j) std::swap(i, j);
  if (i < 0 || j >= n_ || i == j) {
    throw std::out_of_range("Ising pair index out of range");
  }
  return static_cast<std::size_t>(i) * (n_ - 1) - static_cast<std::size_t>(i) * (i - 1) / 2 +
         (j - i - 1);
}

double IsingInstance::energy(const std::vector<int8_t>& spins) const {
  if (static_cast<int>(spins.size()) != n_) {
    throw std::invalid_argument("spin vector length mismatch");
  }
  double e = constant_;
  for (int i = 0; i < n_; ++i) {
    e -= h_[i] * spins[i];
    for (int j = i + 1; j < n_; ++j) {
      double c = coupling(i, j);
      if (c != 0.0) e -= c * spins[i] * spins[j];
    }
  }
  return e;
}

IsingInstance qubo_to_ising(const QuboInstance& q) {
  const int n = q.size();
  IsingInstance m(n);
  double constant = q.offset();
  for (int i = 0; i < n; ++i) {
    double h = -0.5 * q.coeff(i, i);
    constant += 0.5 * q.coeff(i, i);
    for (int j = i + 1; j < n; ++j) {
      double c = q.coeff(i, j);
      if (c != 0.0) {
        m.set_coupling(i, j, -0.25 * c);
        constant += 0.25 * c;
      }
      h -= 0.25 * c;
    }
    for (int j = 0; j < i; ++j) {
      h -= 0.25 * q.coeff(j, i);
    }
    m.set_field(i, h);
  }
  m.set_constant(constant);
  return m;
}

QuboInstance ising_to_qubo(const IsingInstance& m) {
  const int n = m.size();
  QuboInstance q(n);
  double offset = m.constant();
  for (int i = 0; i < n; ++i) {
    double lin = -2.0 * m.field(i);
    offset += m.field(i);
    for (int j = 0; j < n; ++j) {
      if (j == i) continue;
      lin += 2.0 * m.coupling(std::min(i, j), std::max(i, j));
    }
    q.set(i, i, lin);
    for (int j = i + 1; j < n; ++j) {
      double c = m.coupling(i, j);
      if (c != 0.0) q.set(i, j, -4.0 * c);
      offset -= 0.5 * c;  // each unordered pair visited once per endpoint
    }
    for (int j = 0; j < i; ++j) {
      offset -= 0.5 * m.coupling(j, i);
    }
  }
  q.set_offset(offset);
  return q;
}

namespace {

// true when a is lexicographically smaller than b
bool lex_less(const std::vector<uint8_t>& a, const std::vector<uint8_t>& b) {
  return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end());
}

}  // namespace

BruteForceResult brute_force_solve(const QuboInstance& q, int cap) {
  const int n = q.size();
  if (n > cap) {
    throw std::invalid_argument("instance exceeds brute-force cap of " + std::to_string(cap) +
                                " variables");
  }
  BruteForceResult res;
  std::vector<uint8_t> x(n, 0);
  res.best = x;
  res.best_value = q.value(x);

  if (n == 0) return res;

  // Gray-code walk: one bit flips per step, objective maintained by delta.
  std::vector<double> delta(n);
  for (int i = 0; i < n; ++i) delta[i] = q.coeff(i, i);  // all-zeros start
  double value = res.best_value;
  const uint64_t total = 1ULL << n;
  for (uint64_t k = 1; k < total; ++k) {
    int bit = std::countr_zero(k);
    value += delta[bit];
    int flipped_to = x[bit] ? 0 : 1;
    x[bit] = static_cast<uint8_t>(flipped_to);
    double sign = flipped_to ? 1.0 : -1.0;
    delta[bit] = -delta[bit];
    // delta[j] = (1-2x_j)(q_jj + sum_k q_jk x_k); x_bit just changed by `sign`
    for (int j = 0; j < n; ++j) {
      if (j == bit) continue;
      double c = q.coeff(std::min(j, bit), std::max(j, bit));
      if (c != 0.0) delta[j] += (x[j] ? -1.0 : 1.0) * sign * c;
    }

    if (value < res.best_value) {
      if (res.best_value < res.second_value) res.second_value = res.best_value;
      res.best_value = value;
      res.best = x;
    } else if (value == res.best_value) {
      if (lex_less(x, res.best)) res.best = x;
    } else if (value < res.second_value) {
      res.second_value = value;
    }
  }
  return res;
}

namespace {

struct Adjacency {
  std::vector<std::vector<std::pair<int, double>>> neighbors;
  std::vector<double> diag;

  explicit Adjacency(const QuboInstance& q) {
    const int n = q.size();
    neighbors.resize(n);
    diag.resize(n);
    for (int i = 0; i < n; ++i) diag[i] = q.coeff(i, i);
    for (int i = 0; i < n; ++i) {
      for (int j = i + 1; j < n; ++j) {
        double c = q.coeff(i, j);
        if (c != 0.0) {
          neighbors[i].emplace_back(j, c);
          neighbors[j].emplace_back(i, c);
        }
      }
    }
  }
};

}  // namespace

OracleSample sa_solve(const QuboInstance& q, const AnnealSchedule& schedule, uint64_t seed,
                      const std::vector<uint8_t>* initial) {
  const int n = q.size();
  if (schedule.sweeps < 0 || schedule.t_init < 0.0) {
    throw std::invalid_argument("invalid annealing schedule");
  }
  double t_init = schedule.t_init > 0.0 ? schedule.t_init : std::max(q.max_abs_coeff(), 1e-9);
  double t_final = schedule.t_final;
  int sweeps = schedule.sweeps > 0 ? schedule.sweeps : 100 * std::max(n, 1);
  if (!(t_init > t_final) || !(t_final > 0.0) || sweeps < 1) {
    throw std::invalid_argument("invalid annealing schedule");
  }

  OracleSample out;
  out.seed = seed;
  out.sweeps = sweeps;
  out.oracle = "sa";
  if (n == 0) {
    out.objective = q.offset();
    return out;
  }

  Adjacency adj(q);
  std::mt19937_64 rng(seed);
  std::vector<uint8_t> x(n);
  if (initial != nullptr) {
    if (static_cast<int>(initial->size()) != n) {
      throw std::invalid_argument("warm-start assignment length mismatch");
    }
    x = *initial;
  } else {
    for (int i = 0; i < n; ++i) x[i] = static_cast<uint8_t>(rng() & 1u);
  }

  // delta[i] = objective change if bit i flips
  std::vector<double> delta(n);
  double value = q.value(x);
  for (int i = 0; i < n; ++i) {
    double acc = adj.diag[i];
    for (const auto& [j, c] : adj.neighbors[i]) {
      if (x[j]) acc += c;
    }
    delta[i] = (x[i] ? -1.0 : 1.0) * acc;
  }

  std::vector<uint8_t> best = x;
  double best_value = value;

  const double ratio = sweeps > 1 ? std::pow(t_final / t_init, 1.0 / (sweeps - 1)) : 1.0;
  double temp = t_init;
  for (int sweep = 0; sweep < sweeps; ++sweep) {
    for (int a = 0; a < n; ++a) {
      int i = static_cast<int>(rng() % static_cast<uint64_t>(n));
      double d = delta[i];
      bool accept = d <= 0.0 || uniform01(rng()) < std::exp(-d / temp);
      if (!accept) continue;
      double sign = x[i] ? -1.0 : 1.0;  // change of x_i
      x[i] ^= 1u;
      value += d;
      delta[i] = -delta[i];
      for (const auto& [j, c] : adj.neighbors[i]) {
        delta[j] += (x[j] ? -1.0 : 1.0) * sign * c;
      }
      if (value < best_value) {
        best_value = value;
        best = x;
      }
    }
    temp *= ratio;
  }

  out.assignment = std::move(best);
  out.objective = q.value(out.assignment);
  return out;
}

QuboInstance combine(const QuboInstance& a, const QuboInstance& b, double factor) {
  if (a.size() != b.size()) {
    throw std::invalid_argument("size mismatch");
  }
  QuboInstance out(a.size(), a.offset() + factor * b.offset());
  for (const auto& [i, j, c] : a.nonzeros()) out.add(i, j, c);
  for (const auto& [i, j, c] : b.nonzeros()) out.add(i, j, factor * c);
  return out;
}

OracleFn make_exact_oracle(int cap) {
  return [cap](const QuboInstance& q, uint64_t seed) {
    BruteForceResult r = brute_force_solve(q, cap);
    OracleSample s;
    s.assignment = std::move(r.best);
    s.objective = r.best_value;
    s.seed = seed;
    s.oracle = "exact";
    return s;
  };
}

OracleFn make_sa_oracle(AnnealSchedule schedule) {
  return [schedule](const QuboInstance& q, uint64_t seed) { return sa_solve(q, schedule, seed); };
}

OracleSample best_of(const OracleFn& oracle, const QuboInstance& q, int m, uint64_t seed) {
  if (m < 1) {
    throw std::invalid_argument("sample count must be >= 1");
  }
  OracleSample best;
  bool have = false;
  for (int k = 0; k < m; ++k) {
    OracleSample s = oracle(q, mix_seed(seed, static_cast<uint64_t>(k)));
    if (!have || s.objective < best.objective ||
        (s.objective == best.objective && lex_less(s.assignment, best.assignment))) {
      best = std::move(s);
      have = true;
    }
  }
  return best;
}

OracleFn make_noisy_oracle(double delta, double eps, uint64_t seed, int cap) {
  if (!(delta > 0.0 && delta <= 1.0) || eps < 0.0) {
    throw std::invalid_argument("need delta in (0,1] and eps >= 0");
  }
  auto call_count = std::make_shared<uint64_t>(0);
  auto rng = std::make_shared<std::mt19937_64>(mix_seed(seed, 0x6e6f697379ULL));
  return [delta, eps, call_count, rng, cap](const QuboInstance& q, uint64_t call_seed) {
    ++*call_count;
    const double t = static_cast<double>(*call_count);
    BruteForceResult exact = brute_force_solve(q, cap);

    OracleSample s;
    s.seed = call_seed;
    s.oracle = "noisy";
    s.assignment = exact.best;
    s.objective = exact.best_value;
    if (delta >= 1.0 && eps == 0.0) {
      return s;  // perfect oracle
    }

    bool miss = uniform01((*rng)()) >= delta;
    double xi = eps * 2.0 * uniform01((*rng)());  // mean eps
    double budget = xi / std::sqrt(t);
    if (!miss || budget <= 0.0) {
      return s;
    }

    // worst assignment within the additive budget of the optimum
    const int n = q.size();
    std::vector<uint8_t> x(n, 0), worst = exact.best;
    double worst_value = exact.best_value;
    const uint64_t total = 1ULL << n;
    for (uint64_t k = 0; k < total; ++k) {
      for (int b = 0; b < n; ++b) x[b] = static_cast<uint8_t>((k >> b) & 1u);
      double v = q.value(x);
      if (v <= exact.best_value + budget && v > worst_value) {
        worst_value = v;
        worst = x;
      }
    }
    s.assignment = std::move(worst);
    s.objective = worst_value;
    return s;
  };
}

namespace {

double round_half_away(double v, double scale) {
  return std::round(v * scale) / scale;
}

}  // namespace

QuboInstance truncate(const QuboInstance& q, int digits) {
  if (digits < 1) {
    throw std::invalid_argument("need at least one digit");
  }
  const double scale = std::pow(10.0, digits);
  QuboInstance out(q.size(), round_half_away(q.offset(), scale));
  for (const auto& [i, j, c] : q.nonzeros()) {
    out.set(i, j, round_half_away(c, scale));
  }
  return out;
}

double truncation_error_bound(int n, int digits) {
  double per = 0.5 * std::pow(10.0, -digits);
  double coeff_count = static_cast<double>(n) * (n + 1) / 2.0;
  return coeff_count * per + per;
}

void write_qubo_text(const QuboInstance& q, std::ostream& out) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", q.offset());
  out << "p qubo " << q.size() << ' ' << buf << '\n';
  for (const auto& [i, j, c] : q.nonzeros()) {
    std::snprintf(buf, sizeof(buf), "%.17g", c);
    out << i << ' ' << j << ' ' << buf << '\n';
  }
}

QuboInstance read_qubo_text(std::istream& in) {
  std::string tag, kind;
  int n = 0;
  double offset = 0.0;
  if (!(in >> tag >> kind >> n >> offset) || tag != "p" || kind != "qubo") {
    throw std::runtime_error("bad QUBO text header");
  }
  QuboInstance q(n, offset);
  int i, j;
  double c;
  while (in >> i >> j >> c) {
    if (i > j || i < 0 || j >= n) {
      throw std::runtime_error("bad QUBO term indices");
    }
    q.set(i, j, c);
  }
  return q;
}

void write_qubo_text_file(const QuboInstance& q, const std::string& path) {
  std::ofstream out(path);
  if (!out) {
    throw std::runtime_error("cannot open " + path + " for writing");
  }
  write_qubo_text(q, out);
}

QuboInstance read_qubo_text_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("cannot open " + path);
  }
  return read_qubo_text(in);
}

}  // namespace qubonn::qubo
