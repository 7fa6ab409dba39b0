import math

import numpy as np
import pytest

from gapflow.abel import (
    abel_character,
    abel_character_dense,
    abel_rotation,
    build_curve,
    lagrange_frequencies,
    linearization_fit,
    linearize_trajectories,
    rotation_frequencies,
    translation_frequencies,
)
from gapflow.dubrovin import rotate_phases
from gapflow.spectral import EDGE, Divisor, GapSet, SpectralDataError

SYM2 = GapSet(((-3.0, -1.0), (1.0, 3.0)))
THREE = GapSet(((-2.0, -1.5), (-0.4, 0.3), (1.2, 1.8)))


def test_genus_zero_curve(one_gap):
    h = build_curve(one_gap)
    assert h.genus == 0 and h.holo.size == 0
    f = translation_frequencies(h)
    assert f.eta.size == 0 and f.eta1.size == 0


def test_a_normalization():
    for g in (SYM2, THREE):
        h = build_curve(g)
        assert np.max(np.abs(h.periods_A - np.eye(h.genus))) <= 1e-10


def test_symmetric_b_period_imaginary():
    h = build_curve(SYM2)
    assert abs(h.periods_B[0, 0].real) <= 1e-10 and h.periods_B[0, 0].imag > 0


def test_riemann_relations():
    B = build_curve(THREE).periods_B
    assert np.max(np.abs(B - B.T)) <= 1e-9
    assert np.all(np.linalg.eigvalsh(B.imag) > 0)


def test_character_at_left_edges():
    h = build_curve(THREE)
    D = Divisor(tuple(THREE.a), (EDGE,) * 3)
    assert np.all(abel_character(D, h) == 0.0)
    assert abel_rotation(D, h) == 0.0


def test_character_dense_oracle():
    h = build_curve(THREE)
    for mu, eps in (((-1.75, 0.3, 1.3), (1, EDGE, -1)), ((-1.6, -0.1, 1.7), (-1, 1, 1))):
        D = Divisor(mu, eps)
        ch = abel_character(D, h)
        for kk, k in enumerate(h.cycles):
            diff = ch[kk] - abel_character_dense(D, h, k)
            assert abs(diff - round(diff)) <= 1e-8


def test_sign_flip_negates():
    h = build_curve(THREE)
    D = Divisor((-1.8, 0.1, 1.4), (1, -1, 1))
    F = Divisor(D.mu, tuple(-e for e in D.eps))
    s = abel_character(D, h) + abel_character(F, h)
    assert np.max(np.abs(s - np.round(s))) <= 1e-12
    r = abel_rotation(D, h) + abel_rotation(F, h)
    assert abs(r - round(r)) <= 1e-12


def test_edge_gluing():
    h = build_curve(THREE)
    a = abel_character(Divisor((-2.0, 0.0, 1.2), (1, 1, 1)), h)
    b = abel_character(Divisor((-2.0, 0.0, 1.2), (-1, 1, -1)), h)
    d = a - b
    assert np.max(np.abs(d - np.round(d))) <= 1e-12


def test_rotation_tracks_beta(one_gap):
    h = build_curve(one_gap)
    y0 = np.array([math.pi / 2])
    betas = np.linspace(0, 3, 16)
    vals = [abel_rotation(rotate_phases(y0, one_gap, b), h) for b in betas]
    fit = linearization_fit(np.array(vals), betas)
    assert fit.max_residual <= 1e-8
    assert abs(fit.slopes[0]) == pytest.approx(1 / (2 * math.pi), abs=1e-10)


def test_frequency_scaling():
    f1 = translation_frequencies(build_curve(THREE))
    sigma = 1.7
    f2 = translation_frequencies(build_curve(THREE.scaled(sigma)))
    assert np.allclose(f2.eta, sigma * f1.eta, rtol=1e-9, atol=0)
    assert np.allclose(f2.eta1, sigma**2 * f1.eta1, rtol=1e-9, atol=0)


def test_frequencies_two_ways():
    h = build_curve(THREE)
    a, b = translation_frequencies(h), lagrange_frequencies(h)
    assert np.allclose(a.eta, b.eta, atol=1e-9) and np.allclose(a.eta1, b.eta1, atol=1e-9)
    assert a.theta0 == pytest.approx(b.theta0, abs=1e-9) and a.theta1 == pytest.approx(b.theta1, abs=1e-9)


def test_rotation_frequencies_one_gap(one_gap):
    th0, th1 = rotation_frequencies(one_gap)
    assert abs(th0) <= 1e-8 and th1 == pytest.approx(1 / math.pi, abs=1e-6)
    th0, _ = rotation_frequencies(GapSet(((0.0, 2.0),)))
    assert abs(th0) == pytest.approx(1 / math.pi, abs=1e-6)


def test_linearization_fit_examples():
    fit = linearization_fit(np.full((10, 2), 0.3), np.arange(10.0))
    assert np.max(np.abs(fit.slopes)) <= 1e-15 and fit.max_residual <= 1e-15
    with pytest.raises(ValueError):
        linearization_fit(np.zeros(5), np.arange(5.0))
    with pytest.raises(ValueError):
        linearization_fit(np.array([0.0, 0.5, 0.0, 0.5, 0.0, 0.5, 0.0, 0.5]), np.arange(8.0))


@pytest.mark.parametrize("g", [SYM2, THREE], ids=["genus1", "genus2"])
def test_trajectories_linearize(g):
    y0 = np.linspace(0.4, 2.2, len(g))
    out = linearize_trajectories(g, y0, np.linspace(0, 2, 41), np.linspace(0, 0.5, 41))
    for flow in ("x", "t"):
        assert out[flow]["max_residual"] <= 1e-8
        assert out[flow]["slope_error"] <= 1e-8


def test_mismatched_curve(one_gap):
    with pytest.raises(SpectralDataError):
        abel_rotation(np.array([0.3]), build_curve(THREE), one_gap)
