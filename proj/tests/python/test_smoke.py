"""Smoke tests for the _qubonn extension module."""

import math
import sys

import _qubonn as q


def check(cond, msg):
    if not cond:
        print("FAIL:", msg)
        sys.exit(1)


def main():
    # piecewise surrogate
    fn = q.build_midpoint_constant(q.sigmoid, [-8.0, -4.0, 0.0, 4.0, 8.0])
    check(abs(fn.eval(1.0) - 0.8807970779778823) < 1e-9, "sigmoid surrogate value")
    check(fn.locate_interval(0.0) == 3, "interval convention")
    check(q.segment_count_for_error(8.0, 1.0 / (6.0 * math.sqrt(3.0)), 0.01) == 18,
          "segment count")

    # QUBO oracles
    inst = q.QuboInstance(2, 0.0)
    inst.set(0, 0, -1.0)
    inst.set(1, 1, -1.0)
    inst.set(0, 1, 2.0)
    exact = q.brute_force_solve(inst)
    check(exact.best_value == -1.0 and list(exact.best) == [0, 1], "brute force")
    sample = q.sa_solve(inst, seed=5)
    check(sample.objective >= exact.best_value, "sa lower bounded by optimum")
    trunc = q.truncate(inst, 2)
    check(trunc.coeff(0, 1) == 2.0, "truncate")

    # sample complexity bound
    check(q.sample_complexity([3, 2, 1], 1, 0.1, 0.05, 1.0) == 566, "sample complexity")

    # FIP build -> spin report
    spec = q.NetSpec.experiment([-8.0, -4.0, 0.0, 4.0, 8.0])
    model = q.build_fip_model(spec, [[1.0, 0.0, -1.0]], [1])
    report = q.spin_report(model)
    check(report.per_family["weight_bit"] == 8, "weight bits")
    check(report.per_family["bias_bit"] == 3, "bias bits")

    # penalty-form QUBO from the rosenberg-linearized model
    linem = q.linearize_all(model, "rosenberg")
    qubo, weight = q.penalty_qubo(linem)
    check(qubo.n == linem.var_count + 0 or qubo.n >= model.var_count, "penalty qubo size")
    check(weight > 1.0, "penalty weight")

    # hybrid loop on the toy fixture
    toy = q.toy_unique_model()
    solution, trace, converged = q.qcgd_run(toy, iterations=4000, reference=1.0)
    check(list(solution) == [1, 0], "qcgd extracted optimum")
    check(trace[-1].infeasibility < 1e-2, "qcgd infeasibility")
    check(q.samples_per_iteration(100, 0.5) == 15, "m_t formula")
    check(abs(q.tts_estimate(1e-3, 100, 0.5) - 1.5) < 1e-12, "tts estimate")

    print("python smoke: ok")


if __name__ == "__main__":
    main()
