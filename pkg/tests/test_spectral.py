import math

import numpy as np
import pytest

from gapflow.spectral import (
    EDGE,
    Divisor,
    GapSet,
    PhaseVector,
    SpectralDataError,
    comparability_constants,
    craig_report,
    divisor_to_phases,
    homogeneity_estimate,
    phases_to_divisor,
    synthetic_family,
)

from conftest import random_gapset


def test_phases_to_divisor_examples(one_gap):
    D = phases_to_divisor([0.0], one_gap)
    assert D.mu == (-1.0,) and D.eps == (EDGE,)
    D = phases_to_divisor([math.pi / 4], one_gap)
    assert D.mu[0] == pytest.approx(0.0, abs=1e-15) and D.eps == (1,)
    D = phases_to_divisor([3 * math.pi / 4], GapSet(((0.0, 2.0),)))
    assert D.mu[0] == pytest.approx(1.0, abs=1e-15) and D.eps == (-1,)


def test_divisor_to_phases_examples(one_gap):
    assert divisor_to_phases(Divisor((0.0,), (1,)), one_gap).y[0] == pytest.approx(math.pi / 4)
    assert divisor_to_phases(Divisor((0.0,), (-1,)), one_gap).y[0] == pytest.approx(3 * math.pi / 4)
    assert divisor_to_phases(Divisor((1.0,), (EDGE,)), one_gap).y[0] == pytest.approx(math.pi / 2)


def test_length_mismatch(one_gap):
    with pytest.raises(SpectralDataError):
        phases_to_divisor([0.1, 0.2], one_gap)


def test_divisor_outside_gap(one_gap):
    with pytest.raises(SpectralDataError):
        divisor_to_phases(Divisor((1.5,), (1,)), one_gap)


def test_round_trip(rng):
    for n in (1, 2, 3, 5):
        g = random_gapset(rng, n)
        y = rng.uniform(0, math.pi, n)
        D = phases_to_divisor(PhaseVector(tuple(y)), g)
        D2 = phases_to_divisor(divisor_to_phases(D, g), g)
        assert np.max(np.abs(np.subtract(D.mu, D2.mu))) <= 1e-12
        assert D.eps == D2.eps


def test_comparability_constants(one_gap, two_gap):
    assert comparability_constants(one_gap).tolist() == [1.0]
    C = comparability_constants(two_gap)
    # the single factor sqrt((z + 1)/(z + 2)) is largest at z = 2
    assert C[1] == pytest.approx(math.sqrt(1.5), rel=1e-12)
    assert C[0] == pytest.approx(C[1], rel=1e-12)


def test_comparability_at_least_one(rng):
    for n in (2, 3, 4):
        assert np.all(comparability_constants(random_gapset(rng, n)) >= 1.0)


def test_craig_single_gap(one_gap):
    assert craig_report(one_gap, 0.5).satisfied


def test_craig_bad_delta(one_gap):
    with pytest.raises(SpectralDataError):
        craig_report(one_gap, 0.0)


def test_craig_families():
    rep = craig_report(synthetic_family("exponential", 30), 0.25)
    assert rep.satisfied
    js = rep.to_json()
    assert js["satisfied"] is True
    rep = craig_report(synthetic_family("power", 400), 0.25)
    assert not rep.satisfied


def test_homogeneity_examples(one_gap):
    assert homogeneity_estimate(GapSet(()), (-3.0, 3.0)) == 1.0
    assert homogeneity_estimate(one_gap, (-3.0, 3.0), h_max=2.0) == pytest.approx(0.5, abs=1e-12)
    far = GapSet(((-20.0, -19.0), (19.0, 20.0)))
    assert homogeneity_estimate(far, (-25.0, 25.0)) >= 0.5 - 1e-12


def test_homogeneity_monotone_in_width():
    vals = [homogeneity_estimate(GapSet(((-w, w), (4 - w, 4 + w))), (-6.0, 10.0)) for w in (0.2, 0.5, 1.0, 1.5)]
    assert all(a >= b - 1e-12 for a, b in zip(vals, vals[1:]))


def test_homogeneity_empty_window():
    with pytest.raises(SpectralDataError):
        homogeneity_estimate(GapSet(((-5.0, 5.0),)), (-1.0, 1.0))


def test_gapset_validation():
    with pytest.raises(SpectralDataError):
        GapSet(((0.0, 1.0), (0.5, 2.0)))
    with pytest.raises(SpectralDataError):
        GapSet(((1.0, 0.0),))


def test_gapset_json_round_trip(two_gap):
    assert GapSet.from_json(two_gap.to_json()) == two_gap
