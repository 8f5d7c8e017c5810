"""Smoke test for the cuspforge extension module."""

import json
import sys
import tempfile
from pathlib import Path

import cuspforge


def close(pair, re, im, tol=1e-30):
    return abs(float(pair[0]) - re) < tol and abs(float(pair[1]) - im) < tol


def main():
    assert "whitehead" in cuspforge.Triangulation.fixture_names()

    wh = cuspforge.Triangulation.load("whitehead")
    assert wh.n_tet == 4 and len(wh.cusp_names) == 2
    assert cuspforge.Triangulation.from_json(wh.to_json()).to_json() == wh.to_json()
    a, b, sign = wh.meridian_monomial(0)
    assert len(a) == len(b) == 4 and sign in (-1, 1)
    assert len(wh.edge_equations()) == 4

    try:
        cuspforge.Triangulation.from_json('{"name": "x", "bogus": 1}')
    except cuspforge.ParseError:
        pass
    else:
        raise AssertionError("unknown key accepted")

    res = cuspforge.solve_complete(wh)
    assert res.geometric and res.residual < 1e-60
    assert all(close(z, 0.0, 1.0) for z in res.shapes.decimal())
    tau = cuspforge.cusp_parameter(wh, res, wh.cusp_names[0])
    assert close(tau, -2.0, 2.0), tau
    assert json.loads(res.to_json())["precision_bits"] == 256

    assert cuspforge.algdep(tau[0] + "," + tau[1]) == [8, 4, 1]
    field = cuspforge.recognize("-2+2i")
    assert field == {"minpoly": [8, 4, 1], "field": "GaussianRational", "rigid_compatible": True, "flagged": False}
    assert cuspforge.classify([1, 1, 1])["field"] == "EisensteinRational"
    assert cuspforge.recognize("0.5")["flagged"]

    ev = cuspforge.isolation_verdict(wh, res, 0)
    assert ev["verdict"] == "NotIsolated", ev

    again = cuspforge.Shapes([re + "," + im for re, im in res.shapes.decimal()], precision_bits=512)
    assert again.precision_bits == 512 and all(abs(complex(*v) - 1j) < 1e-12 for v in again.values)
    assert cuspforge.Shapes([0.5 + 0.8j], precision_bits=128).values[0] == (0.5, 0.8)

    filled = cuspforge.solve_filled(wh, [None, (1, 1)])
    assert filled.geometric
    try:
        cuspforge.solve_filled(wh, [None, (1, -1)])
    except cuspforge.SolveError:
        pass
    else:
        raise AssertionError("trefoil filling solved")

    c = cuspforge.cusp_parameter_from_traces(2, 2, -2, "1+1i", "1+1i")
    assert close(c, -1.0, -2.0), c

    with tempfile.TemporaryDirectory() as out:
        reports = cuspforge.screen(["whitehead", "berge", "no/such.json"], parallelism=2, out=out)
        assert [r["verdict"] for r in reports[:2]] == ["RigidFieldButNotIsolated"] * 2
        assert reports[2]["parse_failure"] is True
        assert all(r["provenance"]["tag"] == cuspforge.PROVENANCE_TAG for r in reports)
        assert (Path(out) / "screen.csv").read_text().count(cuspforge.PROVENANCE_TAG) >= 3

    fills = cuspforge.fill_and_screen(wh, "c2", [(1, 1), (1, 2)])
    assert fills[0]["cusps"][0]["field"] == "EisensteinRational"
    assert fills[1]["cusps"][0]["field"] == "NonQuadratic(4)"

    print("smoke test ok")
    return 0


if __name__ == "__main__":
    sys.exit(main())
