"""Smoke test for the Python bindings.

Build and install first:

    pip install maturin
    maturin build --release -m crates/py/Cargo.toml -o target/wheels
    pip install --force-reinstall target/wheels/anneal_cert-*.whl
    python python/smoke_test.py
"""

import json
import math

import anneal_cert as ac


def main():
    s = ac.sigma(0.1, 0.1, 100, 0.5)
    assert abs(s - 0.8982) <= 5e-4, s
    assert ac.sigma(1.0, 1.0, 3, 0.5) == 1.0
    assert ac.min_j(0.1, 0.1, 0.95, 0.5) == 112

    cert = ac.certify(0.3, 0.3, 0.9, 0.05, "min-steps", proposal="mix:0.5,0.02")
    assert cert["confidence"] == cert["sigma"] - cert["tv_bound"]
    print("certificate:", cert)

    try:
        ac.certify(0.1, 0.1, 0.95, 0.01, 0.5)
    except ac.InfeasibleError as e:
        _, k, j, delta = e.args
        assert j == 112 and delta == 0.5
        assert math.isclose(k, 1.2613227034109826e54, rel_tol=1e-15), k
        print("infeasible as expected, k =", k)
    else:
        raise AssertionError("expected InfeasibleError")

    try:
        ac.sigma(0.1, 0.0, 10, 0.5)
    except ValueError as e:
        assert "alpha" in str(e)
    else:
        raise AssertionError("alpha = 0 must be rejected")

    out = ac.run("bumps1d", 6, 0.5, 100_000, seed=7, trace_every=1000)
    assert out["best_value"] >= 0.95, out["best_value"]
    again = ac.run("bumps1d", 6, 0.5, 100_000, seed=7, trace_every=1000)
    assert out == again
    print("run: best", out["best_theta"], out["best_value"], "trace rows", len(out["trace"]))

    verdict, p, se = ac.is_approx_optimizer("bumps1d", [0.72], 0.05, 0.05)
    assert verdict == "yes", (verdict, p, se)

    report = json.loads(ac.verify("bijection", 1))
    assert report["pass"], report
    assert "bumps1d" in ac.functions()
    print("smoke test passed")


if __name__ == "__main__":
    main()
