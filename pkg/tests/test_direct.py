import math

import numpy as np
import pytest
from scipy.linalg import expm

from gapflow.direct import (
    QPotential,
    floquet_checks,
    gamma_exact,
    gap_decay_fit,
    gap_distance_shape,
    hill_eigenvalues,
    ids_and_gaps,
    label_search,
    lyapunov,
    rotation_number,
    transfer,
    weyl_disk_schur,
)

ZERO = QPotential.zero()
ONE = QPotential.constant(1.0)
COS = QPotential.cosine(0.05)
QP2 = QPotential((1.0, math.sqrt(2.0)), {(1, 0): 0.05, (-1, 0): 0.05, (0, 1): 0.03, (0, -1): 0.03})


def test_free_transfer():
    for lam in (-1.3, 0.0, 2.2):
        T = transfer(ZERO, lam, 7.5).matrix
        assert np.max(np.abs(T - np.diag([np.exp(-1j * lam * 7.5), np.exp(1j * lam * 7.5)]))) <= 1e-12


@pytest.mark.parametrize("lam", [0.0, 0.5, 2.0])
def test_constant_transfer_matches_expm(lam):
    c, x = 1.0, 3.0
    M = np.array([[-1j * lam, 1j * c], [-1j * c, 1j * lam]])
    T = transfer(ONE, lam, x).matrix
    E = expm(x * M)
    assert np.max(np.abs(T - E)) <= 1e-10 * max(1.0, np.abs(E).max())


def test_det_and_su11():
    for theta in (0.0, 0.37):
        t = transfer(COS, 0.4, 50.0, theta=[theta])
        assert abs(t.det() - 1) <= 1e-9
        assert t.su11_defect() <= 1e-9 * 50


def test_su11_growth_at_most_linear():
    # 2.0 lies in the spectrum, 0.7 in a gap where the defect is measured relative to |T|^2
    defects = [transfer(QP2, 2.0, L).su11_defect() for L in (10.0, 100.0, 1000.0)]
    assert all(d <= 1e-9 * L for d, L in zip(defects, (10.0, 100.0, 1000.0)))
    for L in (10.0, 100.0, 1000.0):
        t = transfer(QP2, 0.7, L)
        assert t.su11_defect() * math.exp(-2 * t.log_norm) <= 1e-9 * L


def test_cocycle():
    theta = np.array([0.1, 0.25])
    x, y = 3.0, 4.5
    full = transfer(QP2, 0.8 + 0.1j, x + y, theta, h=0.0075).matrix
    first = transfer(QP2, 0.8 + 0.1j, x, theta, h=0.0075).matrix
    second = transfer(QP2, 0.8 + 0.1j, y, theta + x * np.asarray(QP2.omega) / (2 * math.pi), h=0.0075).matrix
    assert np.max(np.abs(full - second @ first)) <= 1e-8


def test_lyapunov_examples():
    assert abs(lyapunov(ZERO, 0.7, 100.0, samples=4)) <= 1e-12
    assert gamma_exact(ONE, 0.0) == pytest.approx(1.0, abs=1e-12)
    for d in (0.01, 0.1):
        assert gamma_exact(ONE, 0.3 + 1j * d) >= d
        assert gamma_exact(COS, 0.3 + 1j * d) >= d


def test_rotation_number_examples():
    for lam in (-1.5, 0.0, 0.8):
        assert rotation_number(ZERO, lam, 50.0) == pytest.approx(lam, abs=1e-9)
    assert rotation_number(ONE, 2.0, 100.0) == pytest.approx(math.sqrt(3), abs=1e-9)
    for lam in (-0.5, 0.0, 0.7):
        assert rotation_number(ONE, lam, 100.0) == pytest.approx(0.0, abs=1e-9)


def test_rotation_monotone():
    lam = np.linspace(-1.2, 1.2, 41)
    rho = [rotation_number(COS, v, 200.0) for v in lam]
    assert np.all(np.diff(rho) >= -1e-12)


def test_constant_single_gap():
    scan = ids_and_gaps(ONE, np.linspace(-2, 2, 81), L=100.0)
    assert len(scan.gaps) == 1
    g = scan.gaps[0]
    assert g.label == (0,) and g.lo == pytest.approx(-1.0, abs=1e-9) and g.hi == pytest.approx(1.0, abs=1e-9)


def test_cosine_gap_labels():
    scan = ids_and_gaps(COS, np.linspace(-2.2, 2.2, 221), L=200.0, min_size=1e-10)
    labels = sorted(g.label[0] for g in scan.gaps)
    assert labels == [-5, -3, -1, 1, 3, 5]
    for g in scan.gaps:
        assert g.distance_to_label(COS.omega) <= 0.05
    fit = gap_decay_fit([g for g in scan.gaps if any(g.label)])
    assert fit.slope < 0 and fit.r > 0
    assert gap_distance_shape(list(scan.gaps), 1.0)["holds"]


def test_gamma_vanishes_on_spectrum():
    for lam in (0.0, 0.5, 1.2):
        assert gamma_exact(COS, lam) <= 1e-9


def test_hill_eigenvalues_constant():
    ev = hill_eigenvalues(COS, 1.0)
    assert np.all(np.diff(ev) >= 0)


def test_label_search():
    w = COS.omega
    k, amb = label_search(0.5 * 3 * w[0], w)
    assert k == (3,) and not amb


def test_weyl_disks_examples():
    d = weyl_disk_schur(ZERO, 1j, [5.0, 10.0, 20.0])
    assert abs(d.estimate) <= 1e-12 and d.nested() and d.radii[-1] <= 1e-12
    d = weyl_disk_schur(ONE, 1j, [5.0, 10.0, 20.0, 40.0])
    assert abs(d.estimate - 1j * (1 - math.sqrt(2))) <= 1e-10
    assert d.nested()
    d = weyl_disk_schur(QP2, 0.3 + 0.05j, np.linspace(50, 400, 8))
    assert d.nested()
    assert np.all(np.diff(d.radii) <= 0)


def test_floquet_free():
    for y in (1.0, 10.0):
        assert gamma_exact(ZERO, 1j * y) == pytest.approx(y, abs=1e-12)


def test_floquet_checks_constant():
    rep = floquet_checks(ONE, thouless_points=(0.0,), holder_points=0)
    assert rep["asymptotics"]["holds"]
    row = rep["thouless"][0]
    assert row["gamma"] == pytest.approx(1.0, abs=1e-12)
    assert row["error"] <= 1e-3


def test_holder_exponents():
    rep = floquet_checks(COS, ys=(5.0, 10.0), thouless_points=(), holder_points=10, holder_window=(-1.5, 1.5))
    assert len(rep["holder"]["points"]) == 10
    assert 0.4 <= rep["holder"]["min"] and rep["holder"]["max"] <= 1.1


def test_json_round_trip():
    assert QPotential.from_json(QP2.to_json()) == QP2
