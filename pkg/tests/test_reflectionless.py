import math

import numpy as np
import pytest

from gapflow.reflectionless import (
    PoleError,
    SchurPair,
    constant_divisor,
    constant_family,
    divisor_from_schur,
    herglotz_check,
    m_and_borel,
    reconstruct_field,
    resolvent_chi,
    resolvent_from_pair,
    resolvent_product,
    riccati_residuals,
    trace_scalars,
    zero_pair,
)
from gapflow.spectral import EDGE, Divisor, GapSet, SpectralDataError

from conftest import random_gapset

SQ2 = math.sqrt(2.0)


def test_resolvent_zero_gaps():
    z = np.array([1j, 2 + 0.5j, -3 + 1e-3j])
    assert np.all(resolvent_product(z, GapSet(()), Divisor((), ())) == 1j)


def test_resolvent_edge_divisor(one_gap):
    R = complex(resolvent_product(1j, one_gap, Divisor((1.0,), (EDGE,))))
    assert abs(R - (-1 + 1j) / SQ2) <= 1e-14


def test_resolvent_matches_chi_representation(one_gap):
    D = Divisor((0.0,), (1,))
    R = complex(resolvent_product(10j, one_gap, D))
    assert abs(R - resolvent_chi(10j, one_gap, D)) <= 1e-10


def test_resolvent_chi_two_gaps(two_gap):
    D = Divisor((-1.3, 1.8), (1, -1))
    for z in (0.5j, 1.5 + 0.2j, -4 + 2j):
        assert abs(complex(resolvent_product(z, two_gap, D)) - resolvent_chi(z, two_gap, D)) <= 1e-10


def test_resolvent_branch_point_is_nonfinite(one_gap):
    R = resolvent_product(np.array([-1.0 + 0j]), one_gap, Divisor((0.5,), (1,)))
    assert not np.isfinite(R[0])


def test_resolvent_real_and_increasing_on_gaps(rng):
    g = random_gapset(rng, 3)
    D = Divisor(tuple(0.5 * (a + b) for a, b in g.gaps), (1, -1, 1))
    for a, b in g.gaps:
        xs = np.linspace(a, b, 203)[1:-1] + 0j
        R = resolvent_product(xs, g, D)
        assert np.max(np.abs(R.imag)) <= 1e-12
        assert np.all(np.diff(R.real) > 0)


def test_resolvent_normalization(two_gap):
    D = Divisor((-1.5, 1.5), (1, 1))
    ys = np.array([1e2, 1e3, 1e4])
    dev = np.abs(resolvent_product(1j * ys, two_gap, D) - 1j) * ys
    assert np.all(dev <= 10.0)


def test_herglotz_random(rng):
    for n in (1, 2, 3):
        g = random_gapset(rng, n)
        D = Divisor(tuple(rng.uniform(a, b) for a, b in g.gaps), tuple(int(s) for s in rng.choice([-1, 1], n)))
        zs = rng.uniform(-6, 6, 1000) + 1j * 10 ** rng.uniform(-4, 1, 1000)
        assert herglotz_check(g, D, zs) > 0


def test_trace_scalars_examples(one_gap):
    assert trace_scalars(Divisor((), ()), GapSet(())) == (0.0, 0.0)
    assert trace_scalars(Divisor((1.0,), (EDGE,)), one_gap) == (-2.0, 0.0)
    assert trace_scalars(Divisor((2.0,), (EDGE,)), GapSet(((0.0, 2.0),))) == (-2.0, -4.0)


def test_reconstruct_examples(one_gap):
    one, zero = Divisor((1.0,), (EDGE,)), Divisor((0.0,), (1,))
    assert reconstruct_field(one, zero, one_gap) == 1 + 0j
    assert reconstruct_field(zero, one, one_gap) == 1j
    assert reconstruct_field(Divisor((), ()), Divisor((), ()), GapSet(())) == 0j


def test_reconstruct_constant_family():
    for c in (0.5, 1.0, 2.0):
        for beta in (0.0, math.pi / 4, math.pi / 2, 2.0):
            g, D = constant_divisor(c, beta)
            _, Drot = constant_divisor(c, beta - math.pi / 2)
            assert abs(reconstruct_field(D, Drot, g) - c * np.exp(1j * beta)) <= 1e-12


def test_divisor_from_schur_examples(one_gap):
    D = divisor_from_schur(constant_family(1.0, 0.0), one_gap)
    assert D.mu == (1.0,) and D.eps == (EDGE,)
    D = divisor_from_schur(constant_family(1.0, math.pi / 2), one_gap)
    assert D.mu[0] == pytest.approx(0.0, abs=1e-12) and D.eps == (1,)


def test_divisor_from_schur_positive_resolvent(one_gap):
    # s_+ = s_- = 0 gives R = i, which is never real on a gap; a pair with R > 0 on the gap:
    # mu at the left edge reproduces the "R > 0 throughout" rule
    D = divisor_from_schur(constant_family(1.0, math.pi), one_gap)
    assert D.mu == (-1.0,) and D.eps == (EDGE,)


def test_divisor_from_schur_round_trip():
    for beta in (0.3, 1.2, 2.5, -0.7):
        g, D = constant_divisor(1.5, beta)
        D2 = divisor_from_schur(constant_family(1.5, beta), g)
        assert abs(D2.mu[0] - D.mu[0]) <= 1e-12 and D2.eps == D.eps


def test_divisor_from_schur_rejects_non_reflectionless(one_gap):
    pair = SchurPair(lambda z, x, t: 0.3 * np.ones_like(z), lambda z, x, t: 0.1j * np.ones_like(z))
    with pytest.raises(SpectralDataError):
        divisor_from_schur(pair, one_gap)


def test_m_and_borel_examples():
    mp, mm, M = m_and_borel(zero_pair(), 1j)
    assert (mp, mm, M) == (1j, 1j, 1j)
    pair = constant_family(1.0, 0.0)
    assert abs(complex(pair.splus(1j)) - 1j * (1 - SQ2)) <= 1e-15
    mp, mm, M = m_and_borel(pair, 1j)
    assert abs(mp - (1 + 1j) / SQ2) <= 1e-14 and abs(mm - (1 + 1j) / SQ2) <= 1e-14
    assert abs(M - 1j / SQ2) <= 1e-14
    g, D = constant_divisor(1.0, 0.0)
    assert abs(-2 / (mp + mm) - complex(resolvent_product(1j, g, D))) <= 1e-10


def test_m_pole():
    pole = SchurPair(lambda z, x, t: np.ones_like(z), lambda z, x, t: np.zeros_like(z))
    with pytest.raises(PoleError):
        m_and_borel(pole, 1j)


def test_resolvent_routes_agree(rng):
    for _ in range(5):
        c, beta = rng.uniform(0.3, 2), rng.uniform(-3, 3)
        g, D = constant_divisor(c, beta)
        pair = constant_family(c, beta)
        zs = rng.uniform(-3, 3, 20) + 1j * rng.uniform(0.01, 3, 20)
        assert np.max(np.abs(resolvent_from_pair(pair, zs) - resolvent_product(zs, g, D))) <= 1e-10


def test_riccati_residuals():
    assert riccati_residuals(zero_pair(), 0.7 + 0.2j) == 0.0
    for c, beta in ((1.0, 0.0), (0.5, 1.0), (2.0, -0.4)):
        pair = constant_family(c, beta)
        for z in (1j, 0.3 + 0.5j, -2 + 0.1j):
            assert riccati_residuals(pair, z, "space", x=0.3) <= 1e-10
            assert riccati_residuals(pair, z, "time", t=0.2) <= 1e-8 * max(1.0, c**3)


def test_reflectionless_boundary_values():
    pair = constant_family(1.0, 0.4)
    xi = np.array([-3.0, -1.5, 1.2, 2.5])
    gap = [abs(np.conj(pair.splus(xi + 1j * e)) - pair.sminus(xi + 1j * e)).max() for e in (1e-2, 1e-4, 1e-6)]
    assert gap[0] > gap[1] > gap[2] and gap[2] <= 1e-5
