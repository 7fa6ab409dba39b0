import math

import numpy as np
import pytest

from gapflow.nls import (
    FieldGrid,
    SimulationError,
    almost_period_search,
    compare_trajectories,
    constant_oracle,
    energy,
    mass,
    periodic_grid,
    periodize,
    plane_wave,
    split_step_evolve,
)


def test_constant_oracle_examples():
    assert constant_oracle(1, 0, 0) == 1
    assert abs(constant_oracle(1, 0, math.pi / 2) + 1) <= 1e-15
    assert abs(constant_oracle(2, math.pi, 0) + 2) <= 1e-15


def test_zero_stays_zero():
    x = periodic_grid(10.0, 64)
    fg = split_step_evolve(np.zeros(64, complex), x, 0.01, 1.0)
    assert np.all(fg.u == 0)


@pytest.mark.parametrize("order", [2, 4])
def test_constant_solution(order):
    x = periodic_grid(10.0, 64)
    for c in (0.5, 1.0, 1.5):
        fg = split_step_evolve(np.full(64, c, complex), x, 0.01, 1.0, order=order)
        assert np.max(np.abs(fg.u[-1] - constant_oracle(c, 0.0, 1.0))) <= 1e-10


def test_plane_wave():
    L = 2 * math.pi * 4
    x = periodic_grid(L, 128)
    k = 3 * 2 * math.pi / L
    fg = split_step_evolve(plane_wave(0.8, k, x, 0.0), x, 0.005, 1.0, order=4)
    assert np.max(np.abs(fg.u[-1] - plane_wave(0.8, k, x, 1.0))) <= 1e-8


def test_mass_and_energy_conserved():
    x = periodic_grid(40.0, 512)
    u0 = (1 + 0.3 * np.cos(2 * math.pi * x / 20)) * np.exp(1j * 2 * math.pi * x / 40)
    fg = split_step_evolve(u0, x, 1e-3, 1.0, 0.25, order=4)
    dx = x[1] - x[0]
    m = [mass(u, dx) for u in fg.u]
    e = [energy(u, dx) for u in fg.u]
    assert max(m) - min(m) <= 1e-10 * max(m)
    assert max(e) - min(e) <= 1e-9 * max(abs(v) for v in e)
    assert fg.t.size == 5


def test_blow_up_detected():
    x = periodic_grid(10.0, 64)
    with pytest.raises(SimulationError):
        split_step_evolve(np.full(64, 50.0, complex) * (1 + 0.1 * np.cos(x)), x, 0.5, 5.0)


def test_compare_examples():
    x = periodic_grid(10.0, 64)
    a = FieldGrid(x, [0.0, 1.0], np.ones((2, 64)))
    cmp_ = compare_trajectories(a, a)
    assert (cmp_.sup_error, cmp_.l2_error) == (0.0, 0.0)
    fg = split_step_evolve(np.ones(64, complex), x, 0.01, 1.0, 0.5)
    ref = FieldGrid(x, fg.t, np.array([np.full(64, constant_oracle(1, 0, t)) for t in fg.t]))
    assert compare_trajectories(fg, ref).sup_error <= 1e-10
    with pytest.raises(ValueError):
        compare_trajectories(a, FieldGrid(x[:32], [0.0, 1.0], np.ones((2, 32))))


def test_field_grid_bytes_round_trip(tmp_path):
    x = periodic_grid(5.0, 8)
    fg = FieldGrid(x, [0.0, 0.5], np.arange(16).reshape(2, 8) * (1 + 2j))
    data = fg.to_bytes()
    assert data[:4] == b"GFLD" and len(data) == 16 + 8 * 8 + 2 * 8 + 16 * 16
    back = FieldGrid.from_bytes(data)
    assert np.array_equal(back.u, fg.u) and np.array_equal(back.x, fg.x) and np.array_equal(back.t, fg.t)
    fg.write_csv(tmp_path / "f.csv")
    assert (tmp_path / "f.csv").read_text().splitlines()[0] == "t,x,re,im"


def test_periodize_keeps_interior():
    f = lambda s: np.exp(1j * math.sqrt(2) * s)  # noqa: E731
    x, u = periodize(f, 40.0, 1024, 4.0)
    inner = np.abs(x) < 15
    assert np.max(np.abs(u[inner] - f(x[inner]))) == 0.0
    # continuity across the seam: the spectrum decays fast
    assert np.max(np.abs(np.fft.fft(u))[400:624]) / np.max(np.abs(np.fft.fft(u))) <= 1e-8


def test_almost_periods_periodic():
    dx = 0.01
    x = np.arange(0, 40, dx)
    ap = almost_period_search(np.exp(1j * 2 * math.pi * x / 2.5), dx, 1e-6)
    assert ap.periods.size > 0
    assert np.allclose(ap.periods / 2.5, np.round(ap.periods / 2.5), atol=1e-9)


def test_almost_periods_constant():
    ap = almost_period_search(np.full(100, 2 + 1j), 0.1, 1e-12)
    assert ap.periods.size == 50


def test_almost_periods_two_frequencies():
    dx = 0.01
    x = np.arange(0, 200, dx)
    ap = almost_period_search(np.exp(1j * x) + np.exp(1j * math.sqrt(2) * x), dx, 0.1)
    assert ap.periods.size > 0 and ap.conclusive
    assert ap.max_gap < 100
