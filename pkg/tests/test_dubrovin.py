import math

import numpy as np
import pytest

from gapflow.dubrovin import (
    CALIBRATED,
    PRINTED,
    FlowState,
    calibrate_time_field,
    evolve,
    field_on_grid,
    field_psi,
    field_rotation,
    field_xi,
    rate_xi,
    second_trace_residual,
    t_trajectory,
    weight_W,
    x_trajectory,
)
from gapflow.spectral import EDGE, Divisor, GapSet, PhaseVector, SpectralDataError, divisor_to_phases, phases_to_divisor

from conftest import random_gapset


def _y(D, g):
    return divisor_to_phases(D, g).as_array()


def test_weight_examples(one_gap, two_gap):
    assert weight_W(0, Divisor((0.3,), (1,)), one_gap) == 1.0
    assert weight_W(0, Divisor((-1.5, 1.5), (1, 1)), two_gap) == pytest.approx(0.98601, abs=5e-6)
    assert weight_W(0, Divisor((-1.5, 2.0), (1, EDGE)), two_gap) == pytest.approx(0.84515, abs=5e-6)


def test_rotation_field(one_gap, two_gap, rng):
    for y in rng.uniform(0, math.pi, 5):
        assert field_rotation(np.array([y]), one_gap)[0] == -0.5
    y = _y(Divisor((-1.5, 1.5), (1, 1)), two_gap)
    rate = field_rotation(y, two_gap)[0]
    assert rate == pytest.approx(-0.5 * weight_W(0, Divisor((-1.5, 1.5), (1, 1)), two_gap), abs=1e-15)
    assert rate == pytest.approx(-0.49300, abs=1e-5)
    g = random_gapset(rng, 4)
    for _ in range(20):
        assert np.all(field_rotation(rng.uniform(0, math.pi, 4), g) < 0)


def test_psi_field(rng):
    sym, shifted = GapSet(((-0.7, 0.7),)), GapSet(((0.0, 2.0),))
    for y in rng.uniform(0, math.pi, 5):
        assert abs(field_psi(np.array([y]), sym)[0]) <= 1e-15
        assert field_psi(np.array([y]), shifted)[0] == pytest.approx(1.0, abs=1e-14)
    assert field_psi(np.zeros(0), GapSet(())).size == 0


def test_xi_field(one_gap):
    for mu in (0.0, 0.5):
        y = _y(Divisor((mu,), (1,)), one_gap)
        assert field_xi(y, one_gap, CALIBRATED)[0] == pytest.approx(1.0, abs=1e-14)
    assert field_xi(np.zeros(0), GapSet(()), CALIBRATED).size == 0


def test_printed_field_mismatch(one_gap):
    y = np.array([math.pi / 2])  # mu = 1
    assert rate_xi(y, one_gap, PRINTED)[0] == pytest.approx(2.5, abs=1e-14)
    with pytest.raises(SpectralDataError):
        field_xi(y, one_gap, PRINTED)
    rows = [dict(r) for r in calibrate_time_field(one_gap).table]
    assert all(r["printed_rate_at_mu_b"] == pytest.approx(2.5) and r["oracle_rate"] == 1.0 for r in rows)


@pytest.mark.parametrize("c", [1.0, 0.5])
def test_calibration(c):
    conv = calibrate_time_field(GapSet(((-c, c),)))
    assert (conv.sign_s, conv.kappa_t) == (1, 2.0)
    rows = [dict(r) for r in conv.table]
    assert len(rows) == 6
    hit = [r for r in rows if r["sign_s"] == 1 and r["kappa_t"] == 2.0][0]
    assert hit["max_phase_error"] <= 1e-8


def test_calibrated_t_flow_follows_oracle():
    for c in (0.5, 1.0, 2.0):
        g = GapSet(((-c, c),))
        ts = np.linspace(0, 1 / c**2, 21)
        ys = t_trajectory(np.array([math.pi / 2]), g, ts)
        mu = -c + 2 * c * np.sin(ys[:, 0]) ** 2
        assert np.max(np.abs(mu - c * np.cos(2 * c * c * ts))) <= 1e-8 * c


def test_evolve_examples(one_gap):
    s = evolve(FlowState(PhaseVector((math.pi / 2,)), one_gap), dbeta=math.pi)
    assert abs(s.y.y[0]) <= 1e-12
    assert phases_to_divisor(s.y, one_gap).mu[0] == pytest.approx(-1.0, abs=1e-12)
    g = GapSet(((0.0, 2.0),))
    s = evolve(FlowState(PhaseVector((0.4,)), g), dx=1.0)
    assert s.y.y[0] == pytest.approx(1.4, abs=1e-12)
    s0 = FlowState(PhaseVector((0.4,)), g)
    assert evolve(s0).y == s0.y


def test_rotation_periodicity(one_gap):
    s0 = FlowState(PhaseVector((1.1,)), one_gap)
    s = evolve(s0, dbeta=2 * math.pi)
    assert s.y.y[0] == pytest.approx(1.1 - math.pi, abs=1e-12)
    D0, D1 = phases_to_divisor(s0.y, one_gap), phases_to_divisor(s.y, one_gap)
    assert D1.mu[0] == pytest.approx(D0.mu[0], abs=1e-12) and D1.eps == D0.eps


@pytest.mark.parametrize("n", [1, 2, 3])
def test_flow_commutation(rng, n):
    tol = 1e-11
    g = random_gapset(rng, n)
    s0 = FlowState(PhaseVector(tuple(rng.uniform(0, math.pi, n))), g)
    a = evolve(evolve(s0, dt=0.2, tol=tol), dx=0.7, tol=tol)
    b = evolve(evolve(s0, dx=0.7, tol=tol), dt=0.2, tol=tol)
    assert np.max(np.abs(a.y.as_array() - b.y.as_array())) <= 10 * tol
    c = evolve(evolve(s0, dbeta=0.9, tol=tol), dx=0.7, tol=tol)
    d = evolve(evolve(s0, dx=0.7, tol=tol), dbeta=0.9, tol=tol)
    assert np.max(np.abs(c.y.as_array() - d.y.as_array())) <= 10 * tol


def test_edge_regularity(two_gap):
    ys = x_trajectory(np.array([0.0, math.pi / 2]), two_gap, np.linspace(0, 3, 61))
    rates = np.array([field_rotation(y, two_gap) for y in ys])
    assert np.all(np.isfinite(ys)) and np.all(np.abs(rates) > 0.25)


def test_second_trace_formula(two_gap):
    assert second_trace_residual(np.array([0.3, 1.1]), two_gap, np.linspace(-1, 1, 9)) <= 1e-6


def test_field_constant_family(one_gap):
    xs = np.linspace(-3, 3, 13)
    u = field_on_grid(np.array([math.pi / 2]), one_gap, xs, 0.0)
    assert np.max(np.abs(u - 1.0)) <= 1e-12
    u = field_on_grid(np.array([math.pi / 2]), one_gap, xs, 0.3)
    assert np.max(np.abs(u - np.exp(-0.6j))) <= 1e-10
