"""Smoke test for the levy_action Python extension."""

import math

import levy_action as la


def test_conjugates():
    g = la.Triplet.gaussian(0.0, 1.0)
    assert abs(g.conjugate(3.0) - 4.5) < 1e-10
    p = la.Triplet.compensated_poisson()
    assert abs(p.conjugate(1.0) - (2 * math.log(2) - 1)) < 1e-8
    assert p.log_mgf(1.0) == math.e - 2
    ts = la.Triplet.tempered_stable(1.5, 2.0)
    assert ts.mgf_domain() == (-math.inf, 2.0)
    assert ts.log_mgf(2.5) == math.inf
    z = ts.psi(1.0)
    assert isinstance(z, complex) and z.real < 0


def test_actions_and_minimizer():
    assert la.action_brownian([0.0, 0.5, 1.0, 1.5, 2.0]) == 2.0
    ou = la.Model.brownian("-x", "1", 0.1)
    r = la.minimize(ou, 1.0, n=2000)
    e2 = math.exp(2)
    assert abs(r["action"] - (e2 - 1) / (e2 - 2 + 1 / e2)) < 1e-3
    assert r["el_residual"] < 1e-3 and r["converged"]
    assert len(r["values"]) == 2001
    jumps = la.Model.new("-x", "1", "0.5", la.Triplet.compensated_poisson(), 0.1, n=20)
    line = [k / 20 for k in range(21)]
    assert abs(la.action("general", line, jumps) - la.action("joint", line, jumps)) < 1e-8


def test_simulation_and_monte_carlo():
    m = la.Model.new("-x", "0.5", "1", la.Triplet.compensated_poisson(), 0.2, n=16)
    a = la.simulate(m, seed=4, stream=7)
    assert a == la.simulate(m, seed=4, stream=7)
    assert a != la.simulate(m, seed=4, stream=8)
    bm = la.Model.brownian("0", "1", 0.25, n=1)
    e = la.estimate_event(bm, "terminal>=1", 200_000, seed=1, threads=2)
    lo, hi = e["ci95"]
    assert lo <= la.gaussian_tail(2.0) <= hi
    assert la.estimate_event(bm, "always", 100)["rate_value"] == 0.0
    t = la.rate_table(bm, "terminal>=1", [0.5, 0.25, 0.1], 20_000, seed=2)
    assert all(abs(row["neg_inf_S"] + 0.5) < 1e-9 for row in t["rows"])
    assert la.equivalence_gap(m, 16, 16, 100, 1e-12) == 0.0


def test_errors():
    doc = '{"triplet": {"nu": {"kind": "none"}}, "coefficients": {"b": "x+*2", "sigma": "1", "eta": "0"}, "epsilon": 0.1}'
    try:
        la.Model.from_json(doc)
    except ValueError as err:
        assert "offset 2" in str(err)
    else:
        raise AssertionError("malformed expression accepted")
    try:
        la.Triplet.tempered_stable(2.5, 1.0)
    except ValueError:
        pass
    else:
        raise AssertionError("alpha outside (1, 2) accepted")


if __name__ == "__main__":
    for name, fn in list(globals().items()):
        if name.startswith("test_"):
            fn()
            print(f"ok {name}")
