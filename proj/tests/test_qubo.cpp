#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>
#include <sstream>

#include "qubonn/common.hpp"
#include "qubonn/qubo.hpp"

using namespace qubonn;
using qubo::IsingInstance;
using qubo::QuboInstance;

namespace {

QuboInstance random_instance(int n, std::mt19937_64& rng, double density = 0.6) {
  QuboInstance q(n, 2.0 * uniform01(rng()) - 1.0);
  for (int i = 0; i < n; ++i) {
    q.set(i, i, 2.0 * uniform01(rng()) - 1.0);
    for (int j = i + 1; j < n; ++j) {
      if (uniform01(rng()) < density) {
        q.set(i, j, 2.0 * uniform01(rng()) - 1.0);
      }
    }
  }
  return q;
}

std::vector<uint8_t> bits_of(uint64_t k, int n) {
  std::vector<uint8_t> x(n);
  for (int b = 0; b < n; ++b) x[b] = static_cast<uint8_t>((k >> b) & 1u);
  return x;
}

}  // namespace

TEST_CASE("single-field ising maps to the expected qubo") {
  IsingInstance m(1);
  m.set_field(0, 1.0);
  CHECK(m.energy({+1}) == doctest::Approx(-1.0));
  CHECK(m.energy({-1}) == doctest::Approx(+1.0));
  QuboInstance q = qubo::ising_to_qubo(m);
  CHECK(q.value({1}) == doctest::Approx(-1.0));
  CHECK(q.value({0}) == doctest::Approx(+1.0));
}

TEST_CASE("zero instance round trips to zero") {
  QuboInstance q(3);
  IsingInstance m = qubo::qubo_to_ising(q);
  QuboInstance back = qubo::ising_to_qubo(m);
  for (uint64_t k = 0; k < 8; ++k) {
    CHECK(back.value(bits_of(k, 3)) == doctest::Approx(0.0));
  }
}

TEST_CASE("ising/qubo equivalence is pointwise under s = 2x - 1") {
  std::mt19937_64 rng(3);
  QuboInstance q = random_instance(6, rng);
  IsingInstance m = qubo::qubo_to_ising(q);
  for (uint64_t k = 0; k < 64; ++k) {
    auto x = bits_of(k, 6);
    std::vector<int8_t> s(6);
    for (int b = 0; b < 6; ++b) s[b] = x[b] ? 1 : -1;
    CHECK(m.energy(s) == doctest::Approx(q.value(x)).epsilon(1e-12));
  }
  QuboInstance back = qubo::ising_to_qubo(m);
  for (uint64_t k = 0; k < 64; ++k) {
    auto x = bits_of(k, 6);
    CHECK(back.value(x) == doctest::Approx(q.value(x)).epsilon(1e-12));
  }
}

TEST_CASE("brute force: lexicographic tie break and second-best") {
  QuboInstance q(2);
  q.set(0, 0, -1.0);
  q.set(1, 1, -1.0);
  q.set(0, 1, 2.0);
  auto r = qubo::brute_force_solve(q);
  CHECK(r.best_value == doctest::Approx(-1.0));
  CHECK(r.best == std::vector<uint8_t>{0, 1});
  CHECK(r.second_value == doctest::Approx(0.0));
}

TEST_CASE("brute force trivial instances") {
  QuboInstance zero(4);
  auto rz = qubo::brute_force_solve(zero);
  CHECK(rz.best_value == 0.0);
  CHECK(rz.best == std::vector<uint8_t>{0, 0, 0, 0});
  CHECK(std::isinf(rz.second_value));

  QuboInstance diag(3);
  for (int i = 0; i < 3; ++i) diag.set(i, i, 1.0);
  auto rd = qubo::brute_force_solve(diag);
  CHECK(rd.best_value == 0.0);
  CHECK(rd.best == std::vector<uint8_t>{0, 0, 0});
  CHECK(rd.second_value == doctest::Approx(1.0));
}

TEST_CASE("brute force matches naive enumeration") {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 20; ++trial) {
    QuboInstance q = random_instance(8, rng);
    auto r = qubo::brute_force_solve(q);
    double best = std::numeric_limits<double>::infinity();
    for (uint64_t k = 0; k < 256; ++k) best = std::min(best, q.value(bits_of(k, 8)));
    CHECK(r.best_value == doctest::Approx(best).epsilon(1e-12));
    CHECK(q.value(r.best) == doctest::Approx(best).epsilon(1e-12));
  }
}

TEST_CASE("brute force refuses oversized instances") {
  QuboInstance q(27);
  CHECK_THROWS_AS(qubo::brute_force_solve(q), std::invalid_argument);
}

TEST_CASE("sa finds the single downhill move") {
  QuboInstance q(1);
  q.set(0, 0, -1.0);
  for (uint64_t seed : {1ULL, 2ULL, 99ULL}) {
    auto s = qubo::sa_solve(q, {1.0, 1e-3, 10}, seed);
    CHECK(s.assignment == std::vector<uint8_t>{1});
    CHECK(s.objective == doctest::Approx(-1.0));
  }
}

TEST_CASE("sa is deterministic given the seed") {
  std::mt19937_64 rng(23);
  QuboInstance q = random_instance(12, rng);
  auto a = qubo::sa_solve(q, {}, 42);
  auto b = qubo::sa_solve(q, {}, 42);
  CHECK(a.assignment == b.assignment);
  CHECK(a.objective == b.objective);
}

TEST_CASE("sa default schedule reaches the optimum on most seeds") {
  std::mt19937_64 rng(31);
  int hits = 0, total = 0;
  for (int inst = 0; inst < 10; ++inst) {
    QuboInstance q = random_instance(10, rng);
    auto exact = qubo::brute_force_solve(q);
    for (int s = 0; s < 10; ++s) {
      auto sample = qubo::sa_solve(q, {}, mix_seed(1000 + inst, s));
      CHECK(sample.objective >= exact.best_value - 1e-9);
      if (sample.objective <= exact.best_value + 1e-9) ++hits;
      ++total;
    }
  }
  CHECK(hits >= static_cast<int>(0.9 * total));
}

TEST_CASE("sa rejects invalid schedules") {
  QuboInstance q(2);
  CHECK_THROWS_AS(qubo::sa_solve(q, {1e-4, 1e-3, 10}, 1), std::invalid_argument);
  CHECK_THROWS_AS(qubo::sa_solve(q, {1.0, 1e-3, -5}, 1), std::invalid_argument);
}

TEST_CASE("best_of with one sample equals a single call") {
  std::mt19937_64 rng(5);
  QuboInstance q = random_instance(8, rng);
  auto oracle = qubo::make_sa_oracle();
  auto one = qubo::best_of(oracle, q, 1, 7);
  auto direct = oracle(q, mix_seed(7, 0));
  CHECK(one.assignment == direct.assignment);
  CHECK(one.objective == direct.objective);
}

TEST_CASE("best_of improves the hit rate") {
  std::mt19937_64 rng(41);
  // weak schedule so single calls miss often
  qubo::AnnealSchedule weak{1.0, 0.5, 3};
  auto oracle = qubo::make_sa_oracle(weak);
  int single_hits = 0, multi_hits = 0;
  const int trials = 60;
  QuboInstance q = random_instance(9, rng);
  auto exact = qubo::brute_force_solve(q);
  for (int t = 0; t < trials; ++t) {
    if (oracle(q, mix_seed(50, t)).objective <= exact.best_value + 1e-9) ++single_hits;
    if (qubo::best_of(oracle, q, 8, mix_seed(60, t)).objective <= exact.best_value + 1e-9) {
      ++multi_hits;
    }
  }
  CHECK(multi_hits >= single_hits);
  CHECK(multi_hits >= static_cast<int>(0.8 * trials));
}

TEST_CASE("noisy oracle with delta=1, eps=0 is exact") {
  std::mt19937_64 rng(53);
  QuboInstance q = random_instance(8, rng);
  auto exact = qubo::brute_force_solve(q);
  auto noisy = qubo::make_noisy_oracle(1.0, 0.0, 99);
  for (int t = 0; t < 20; ++t) {
    auto s = noisy(q, mix_seed(3, t));
    CHECK(s.objective == doctest::Approx(exact.best_value));
    CHECK(s.assignment == exact.best);
  }
}

TEST_CASE("noisy oracle additive term decays and honors the contract") {
  std::mt19937_64 rng(67);
  QuboInstance q = random_instance(8, rng);
  auto exact = qubo::brute_force_solve(q);
  const double delta = 0.5, eps = 0.8;

  // early calls may wander within eps * 2 / sqrt(t); late calls settle
  auto noisy = qubo::make_noisy_oracle(delta, eps, 11);
  double first_gap_bound = 2.0 * eps / std::sqrt(1.0);
  int calls = 1000;
  double mean_gap = 0.0;
  double mean_bound = 0.0;
  for (int t = 1; t <= calls; ++t) {
    auto s = noisy(q, mix_seed(5, t));
    double gap = s.objective - exact.best_value;
    CHECK(gap >= -1e-12);
    CHECK(gap <= first_gap_bound + 1e-12);  // xi_t <= 2 eps, t >= 1
    mean_gap += gap;
    mean_bound += (1.0 - delta) * eps / std::sqrt(static_cast<double>(t));
  }
  mean_gap /= calls;
  mean_bound /= calls;
  // expected gap <= (1-delta) * E[xi]/sqrt(t); allow two standard errors
  double se = first_gap_bound / std::sqrt(static_cast<double>(calls));
  CHECK(mean_gap <= mean_bound + 2.0 * se);
}

TEST_CASE("truncate rounds half away from zero") {
  QuboInstance q(2);
  q.set(0, 0, 0.123456);
  q.set(1, 1, -0.125);
  q.set(0, 1, 0.9999);
  auto t = qubo::truncate(q, 2);
  CHECK(t.coeff(0, 0) == doctest::Approx(0.12));
  CHECK(t.coeff(1, 1) == doctest::Approx(-0.13));
  CHECK(t.coeff(0, 1) == doctest::Approx(1.0));
  CHECK_THROWS_AS(qubo::truncate(q, 0), std::invalid_argument);
}

TEST_CASE("truncation error bound holds exhaustively") {
  std::mt19937_64 rng(71);
  for (int trial = 0; trial < 5; ++trial) {
    QuboInstance q = random_instance(8, rng, 1.0);
    auto t = qubo::truncate(q, 3);
    double bound = qubo::truncation_error_bound(8, 3);
    for (uint64_t k = 0; k < 256; ++k) {
      auto x = bits_of(k, 8);
      CHECK(std::abs(q.value(x) - t.value(x)) <= bound + 1e-12);
    }
  }
}

TEST_CASE("text format round trips bit-exactly") {
  std::mt19937_64 rng(79);
  QuboInstance q(5, 1.0 / 3.0);
  q.set(0, 0, 0.1);
  q.set(1, 3, -std::sqrt(2.0));
  q.set(2, 4, 3.0e-17);
  q.set(4, 4, uniform01(rng()));
  std::stringstream ss;
  qubo::write_qubo_text(q, ss);
  QuboInstance back = qubo::read_qubo_text(ss);
  REQUIRE(back.size() == q.size());
  CHECK(back.offset() == q.offset());
  for (int i = 0; i < 5; ++i) {
    for (int j = i; j < 5; ++j) {
      CHECK(back.coeff(i, j) == q.coeff(i, j));
    }
  }
}

TEST_CASE("qubo json mirrors the instance") {
  std::mt19937_64 rng(83);
  QuboInstance q = random_instance(6, rng);
  QuboInstance back = QuboInstance::from_json(q.to_json());
  for (uint64_t k = 0; k < 64; ++k) {
    auto x = bits_of(k, 6);
    CHECK(back.value(x) == q.value(x));
  }
}
