"""Smoke test for the pydigitrange extension module."""

import math

import pydigitrange as dr


def main():
    m = dr.WeightModel.luroth()
    assert m.p(1) == 0.5
    assert abs(m.tail_sum(5) - 0.2) < 1e-15
    assert abs(m.solve_s_k(2) - 0.6009668516) < 1e-9
    assert m.sample_digit(0.75) == 4

    try:
        dr.WeightModel.power(0.5)
    except ValueError:
        pass
    else:
        raise AssertionError("rho <= 1 accepted")

    spec = dr.WeightModel.from_json('{"kind": "power", "rho": 2.0}')
    assert abs(spec.p(1) - 6 / math.pi**2) < 1e-12

    cyl = dr.cylinder(m, [2, 3])
    assert cyl["left"] == "11/18"
    assert dr.encode_rational(m, "11/18", 2) == [2, 3]
    assert dr.distinct_profile([1, 2, 1, 3]) == [1, 2, 2, 3]

    law = dr.simulate(m, 1000, 50, seed=7)
    assert law["checkpoints"][-1]["checkpoint"] == 1000

    sched = dr.LinearSchedule("1/2", 8)
    word = sched.sample_point(seed=3)
    assert len(word) == sched.total_len(8)
    prof = dr.distinct_profile(word)
    assert all(n <= 2 * d for n, d in enumerate(prof, start=1))

    sub = dr.SublinearSchedule(0.9, 2000)
    word = sub.sample_point(seed=3)
    prof = dr.distinct_profile(word)
    assert all(sub.f(n) <= d <= sub.f(n) + sub.k_n(n) for n, d in enumerate(prof, start=1))

    rec = dr.cylinder_sum_exact([0.5, 0.5], 4, 0.5, "1")
    assert abs(rec["value"] - 3.5) < 1e-12
    chk = dr.change_of_measure_check(m, 4, 0.75, "1", 6)
    assert chk["rel_err"] < 1e-12

    report = dr.verify("quick")
    failed = [c["name"] for c in report["checks"] if not c["passed"]]
    assert not failed, failed
    print("pydigitrange smoke test: ok")


if __name__ == "__main__":
    main()
