import math

import numpy as np
import pytest

from gapflow.direct import QPotential
from gapflow.subordinacy import (
    C_MINUS,
    C_PLUS,
    epsilon_of_L,
    jl_ratio_check,
    log_epsilon_of_L,
    measure_bound_check,
    partial_norms,
)

ZERO = QPotential.zero()
ONE = QPotential.constant(1.0)
COS = QPotential.cosine(0.05)
QP2 = QPotential((1.0, math.sqrt(2.0)), {(1, 0): 0.05, (-1, 0): 0.05, (0, 1): 0.03, (0, -1): 0.03})
XIS = list(np.exp(2j * np.pi * (np.arange(8) + 0.5) / 8))


def test_band():
    assert C_MINUS * C_PLUS == pytest.approx(1.0, abs=1e-14)


def test_free_norms():
    Ls = np.array([1.0, 10.0, 100.0])
    for nm in partial_norms(ZERO, 0.7, XIS[:3], Ls):
        assert np.allclose(nm.n_plus, np.sqrt(Ls), rtol=1e-12)
        assert np.allclose(nm.n_minus, np.sqrt(Ls), rtol=1e-12)
        assert np.allclose(epsilon_of_L(nm), 1 / (2 * Ls), rtol=1e-12)


def test_norm_growth_in_gap():
    lam = 0.5
    Ls = np.linspace(20, 60, 5)
    nm = partial_norms(ONE, lam, 1.0, Ls)
    slope = np.polyfit(Ls, nm.log_n_plus, 1)[0]
    assert slope == pytest.approx(math.sqrt(1 - lam**2), rel=0.05)
    le = log_epsilon_of_L(nm)
    assert np.all(np.diff(le) < 0)
    assert np.polyfit(Ls, le, 1)[0] < -1.0


def test_product_at_least_L():
    Ls = np.array([0.5, 5.0, 50.0, 500.0])
    for p, lam in ((ONE, 2.0), (ONE, 0.3), (COS, 0.2), (COS, 1.1)):
        for nm in partial_norms(p, lam, XIS, Ls):
            assert np.all(nm.log_product >= np.log(Ls) - 1e-12)
            assert np.all(np.diff(log_epsilon_of_L(nm)) < 0)


def test_bad_xi():
    with pytest.raises(ValueError):
        partial_norms(ZERO, 0.0, 1.1, [1.0])


def test_jl_free():
    rep = jl_ratio_check(ZERO, 0.3, XIS, [10.0])
    # s_+ = 0 and n_+ = n_-: every ratio is exactly 1 (resolved rows only)
    assert rep["verdict"] == "pass"
    assert all(r["ratio"] == pytest.approx(1.0, abs=1e-12) for r in rep["rows"])


@pytest.mark.parametrize("lam", [0.5, 2.0])
def test_jl_constant(lam):
    rep = jl_ratio_check(ONE, lam, XIS, [10.0, 100.0, 1000.0])
    assert rep["verdict"] == "pass"
    assert all(r["status"] == "pass" for r in rep["rows"])


def test_jl_quasiperiodic():
    rep = jl_ratio_check(COS, 0.2, XIS, [10.0, 100.0, 1000.0])
    assert rep["verdict"] == "pass"
    assert all(r["status"] == "pass" for r in rep["rows"])


def test_measure_free():
    rep = measure_bound_check(ZERO, 0.0, [0.1])
    assert rep["rows"][0]["status"] == "pass"
    assert rep["rows"][0]["im_M"] == pytest.approx(1.0, abs=1e-12)


def test_measure_constant():
    rep = measure_bound_check(ONE, 2.0, [1e-1, 1e-2, 1e-3])
    assert rep["verdict"] == "pass" and len(rep["rows"]) == 3


def test_measure_quasiperiodic():
    rng = np.random.default_rng(5)
    lams = [lam for lam in rng.uniform(-1.5, 1.5, 12) if not any(abs(lam - c) < 0.06 for c in (0.31, -0.31))][:5]
    for lam in lams:
        assert measure_bound_check(COS, float(lam), [1e-1, 1e-2])["verdict"] == "pass"


def test_jl_two_frequency():
    # Weyl-disk route: every row must be resolved, none inconclusive
    rep = jl_ratio_check(QP2, 0.2, XIS, [10.0, 100.0, 1000.0])
    assert [r["status"] for r in rep["rows"]] == ["pass"] * 24


def test_measure_two_frequency():
    assert measure_bound_check(QP2, 1.3, [1e-1, 1e-2, 1e-3])["verdict"] == "pass"
