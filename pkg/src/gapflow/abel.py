"""Abel map, normalized differentials and frequencies for finitely many gaps.

Conventions.  w(z) = prod_k sqrt(z - a_k) sqrt(z - b_k) with principal roots, so
w(x) > 0 for x above all gaps and, on gap k, w(x + i0) = i s_k |w(x)| with
s_k = (-1)^(number of gaps to the right of k).

For F a union of bands, the harmonic measure omega(., F) is real-analytic across
the gaps and its x-derivative there is s_k P_F(x) / |w(x)| for a polynomial P_F of
degree < n (n = number of gaps).  P_F is fixed by the jumps of omega across each
gap, which are the differences of the 0/1 band values of F.

In the phase variable (mu = a + gamma sin^2 u) the gap-j contribution of the Abel
sums becomes the smooth integral int_0^{y_j} s_j P_F(mu(u)) / r_j(mu(u)) du with
r_j(x) = prod_{l != j} sqrt(|(x - a_l)(x - b_l)|).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .spectral import Divisor, GapSet, PhaseVector, SpectralDataError, divisor_to_phases


class QuadratureError(RuntimeError):
    """Raised when a regularized integral fails its own tail check."""


# ---------------------------------------------------------------------------
# primitives


def _w(z: np.ndarray, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    z = np.asarray(z, dtype=complex)
    out = np.ones_like(z)
    for ak, bk in zip(a, b):
        out = out * np.sqrt(z - ak) * np.sqrt(z - bk)
    return out


def _w_band(x: np.ndarray, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Real boundary value of w on the bands (taken from the upper half-plane)."""
    return _w(np.asarray(x, dtype=float) + 0j, a, b).real


def gap_signs(g: GapSet) -> np.ndarray:
    n = len(g)
    return np.array([(-1.0) ** (n - 1 - k) for k in range(n)])


def _cheb(n: int) -> tuple[np.ndarray, float]:
    """Gauss-Chebyshev nodes on (-1, 1) for int f / sqrt(1 - t^2) (weight pi/n each)."""
    t = np.cos((2 * np.arange(1, n + 1) - 1) * math.pi / (2 * n))
    return t, math.pi / n


def _gap_moments(g: GapSet, deg: int, nodes: int) -> np.ndarray:
    """M[k, i] = int_{gap k} x^i / |w(x)| dx."""
    a, b = g.a, g.b
    t, wt = _cheb(nodes)
    M = np.empty((len(g), deg + 1))
    for k in range(len(g)):
        x = 0.5 * (a[k] + b[k]) + 0.5 * (b[k] - a[k]) * t
        rest = np.ones_like(x)
        for l in range(len(g)):
            if l != k:
                rest *= np.sqrt(np.abs((x - a[l]) * (x - b[l])))
        M[k] = wt * (x[None, :] ** np.arange(deg + 1)[:, None] / rest).sum(axis=1)
    return M


def _band_integral(coef: np.ndarray, lo: float, hi: float, a: np.ndarray, b: np.ndarray, nodes: int) -> float:
    """int_lo^hi poly(x) / w(x) dx over a bounded band (lo, hi are gap edges)."""
    t, wt = _cheb(nodes)
    x = 0.5 * (lo + hi) + 0.5 * (hi - lo) * t
    w = _w_band(x, a, b)
    # |w| = sqrt((x - lo)(hi - x)) * smooth, so multiply that factor back in
    edge = np.sqrt((x - lo) * (hi - x))
    return float(wt * np.sum(np.polyval(coef[::-1], x) * edge / w))


def _band_edges(g: GapSet) -> list[tuple[float, float]]:
    """Bounded bands, band i lying between gap i and gap i + 1."""
    return [(g.gaps[i][1], g.gaps[i + 1][0]) for i in range(len(g) - 1)]


def _span_bands(g: GapSet, k: int) -> range:
    """Indices of bounded bands between the reference gap and gap k."""
    r = g.reference_index
    return range(min(r, k), max(r, k))


# ---------------------------------------------------------------------------
# curve data


@dataclass(frozen=True)
class HyperellipticData:
    g: GapSet
    branch_points: np.ndarray
    cycles: tuple[int, ...]
    nodes: int
    holo: np.ndarray
    periods_A: np.ndarray
    periods_B: np.ndarray
    condition: float
    harmonic: dict = field(compare=False, repr=False)

    @property
    def genus(self) -> int:
        return len(self.cycles)

    def harmonic_poly(self, key) -> np.ndarray:
        return self.harmonic[key]


def harmonic_polynomial(g: GapSet, jumps: np.ndarray, nodes: int = 96) -> np.ndarray:
    """Coefficients p_0..p_{n-1} with s_k int_{gap k} P/|w| = jumps[k]."""
    n = len(g)
    M = _gap_moments(g, n - 1, nodes) * gap_signs(g)[:, None]
    return np.linalg.solve(M, np.asarray(jumps, dtype=float))


def _jumps_for_generator(g: GapSet, k: int) -> np.ndarray:
    r = g.reference_index
    j = np.zeros(len(g))
    if k > r:
        j[r], j[k] = 1.0, -1.0
    else:
        j[k], j[r] = 1.0, -1.0
    return j


def _jumps_infinity(g: GapSet) -> np.ndarray:
    j = np.zeros(len(g))
    j[g.reference_index] = 1.0
    return j


def build_curve(g: GapSet, nodes: int = 96, cond_max: float = 1e12) -> HyperellipticData:
    """Normalized holomorphic differentials, period matrices and harmonic-measure data.

    Differential k is i P_k(z)/w(z) dz with P_k real of degree < n - 1; the A-cycle
    around gap j (twice the gap integral) of differential k is delta_jk.  B_j runs
    twice over the bands between the reference gap and gap j.
    """
    n = len(g)
    if n == 0:
        raise SpectralDataError("need at least one gap")
    r = g.reference_index
    cycles = tuple(k for k in range(n) if k != r)
    a, b = g.a, g.b
    harmonic = {"inf": harmonic_polynomial(g, _jumps_infinity(g), nodes)}
    for k in cycles:
        harmonic[k] = harmonic_polynomial(g, _jumps_for_generator(g, k), nodes)
    gn = len(cycles)
    if gn == 0:
        return HyperellipticData(
            g, np.sort(np.concatenate([a, b])), cycles, nodes, np.zeros((0, 0)), np.zeros((0, 0)),
            np.zeros((0, 0)), 1.0, harmonic,
        )
    M = _gap_moments(g, gn - 1, nodes) * gap_signs(g)[:, None]
    # A-period of i x^i / w over gap j: 2 int i x^i / (i s_j |w|) = 2 s_j int x^i / |w|
    Araw = 2.0 * M[list(cycles)]
    cond = float(np.linalg.cond(Araw))
    if not np.isfinite(cond) or cond > cond_max:
        raise SpectralDataError(f"normalization system is ill-conditioned (cond = {cond:.3g})")
    holo = np.linalg.solve(Araw, np.eye(gn))  # column k = coefficients of P_k
    periods_A = Araw @ holo
    bands = _band_edges(g)
    B = np.empty((gn, gn), dtype=complex)
    for jj, j in enumerate(cycles):
        for kk in range(gn):
            tot = sum(_band_integral(holo[:, kk], *bands[i], a, b, nodes) for i in _span_bands(g, j))
            B[jj, kk] = 2j * tot
    # orient each B-cycle so that it crosses its A-cycle positively (Im B_jj > 0)
    B = B * np.sign(B.imag.diagonal())[:, None]
    return HyperellipticData(g, np.sort(np.concatenate([a, b])), cycles, nodes, holo, periods_A, B, cond, harmonic)


# ---------------------------------------------------------------------------
# Abel map


@dataclass(frozen=True)
class AbelImage:
    character: np.ndarray
    rotation: float

    def to_json(self) -> dict:
        return {"character": [float(v) for v in self.character], "rotation": float(self.rotation)}


_GL = np.polynomial.legendre.leggauss(48)


def _phase_integrals(y: np.ndarray, g: GapSet, coef: np.ndarray) -> np.ndarray:
    """Per-gap int_0^{y_j} s_j P(mu(u)) / r_j(mu(u)) du, y_j reduced to [0, pi)."""
    a, b, s = g.a, g.b, gap_signs(g)
    n = len(g)
    y = np.mod(np.asarray(y, dtype=float), math.pi)
    t, wt = _GL
    out = np.empty(n)
    for j in range(n):
        if y[j] == 0.0:
            out[j] = 0.0
            continue
        u = 0.5 * y[j] * (t + 1.0)
        x = a[j] + (b[j] - a[j]) * np.sin(u) ** 2
        rest = np.ones_like(x)
        for l in range(n):
            if l != j:
                rest *= np.sqrt(np.abs((x - a[l]) * (x - b[l])))
        out[j] = 0.5 * y[j] * np.sum(wt * s[j] * np.polyval(coef[::-1], x) / rest)
    return out


def _phases(D: Divisor | PhaseVector | np.ndarray, g: GapSet) -> np.ndarray:
    if isinstance(D, Divisor):
        return divisor_to_phases(D, g).as_array()
    if isinstance(D, PhaseVector):
        return D.as_array()
    y = np.asarray(D, dtype=float)
    if y.shape != (len(g),):
        raise SpectralDataError(f"divisor of length {y.size} for {len(g)} gaps")
    return y


def abel_character(D: Divisor | PhaseVector | np.ndarray, h: HyperellipticData) -> np.ndarray:
    """A_c(l_k) for every generator k (mod 1)."""
    y = _phases(D, h.g)
    return np.array([np.mod(np.sum(_phase_integrals(y, h.g, h.harmonic[k])), 1.0) for k in h.cycles])


def abel_rotation(D: Divisor | PhaseVector | np.ndarray, h: HyperellipticData, g: GapSet | None = None) -> float:
    g = h.g if g is None else g
    if g != h.g:
        raise SpectralDataError("curve was built on a different gap set")
    y = _phases(D, g)
    return float(np.mod(-np.sum(_phase_integrals(y, g, h.harmonic["inf"])), 1.0))


def abel_map(D, h: HyperellipticData) -> AbelImage:
    return AbelImage(abel_character(D, h), abel_rotation(D, h))


def _unwrapped(D, h: HyperellipticData) -> np.ndarray:
    """Character and rotation coordinates before reduction mod 1."""
    y = _phases(D, h.g)
    ch = [np.sum(_phase_integrals(y, h.g, h.harmonic[k])) for k in h.cycles]
    return np.array(ch + [-np.sum(_phase_integrals(y, h.g, h.harmonic["inf"]))])


def abel_character_dense(D: Divisor, h: HyperellipticData, k: int) -> float:
    """Independent oracle for one generator: adaptive quadrature in mu (with 1/sqrt weights)."""
    from scipy.integrate import quad

    g = h.g
    D.validate(g)
    coef, s = h.harmonic[k], gap_signs(g)
    a, b = g.a, g.b
    tot = 0.0
    for j, (m, e) in enumerate(zip(D.mu, D.eps)):
        if m <= a[j]:
            continue

        def dens(x, j=j):
            rest = np.prod([math.sqrt(abs((x - a[l]) * (x - b[l]))) for l in range(len(g)) if l != j])
            return s[j] * np.polyval(coef[::-1], x) / rest

        # the 1/sqrt edge factors go into the algebraic weight of quad
        if m >= b[j]:
            val = quad(dens, a[j], b[j], weight="alg", wvar=(-0.5, -0.5), epsabs=1e-14, epsrel=1e-13)[0]
        else:
            val = quad(lambda x, j=j: dens(x) / math.sqrt(b[j] - x), a[j], m, weight="alg", wvar=(-0.5, 0.0),
                       epsabs=1e-14, epsrel=1e-13)[0]
        sign = 1.0 if e >= 0 else -1.0
        tot += 0.5 * sign * val
    return float(np.mod(tot, 1.0))


# ---------------------------------------------------------------------------
# frequencies


@dataclass(frozen=True)
class FrequencyData:
    eta: np.ndarray
    eta1: np.ndarray
    theta0: float
    theta1: float
    tail: dict = field(default_factory=dict, compare=False)

    def to_json(self) -> dict:
        return {
            "eta": [float(v) for v in self.eta],
            "eta1": [float(v) for v in self.eta1],
            "theta0": self.theta0,
            "theta1": self.theta1,
            "tail": self.tail,
        }


def _power_sums(g: GapSet) -> tuple[float, float]:
    a, b = g.a, g.b
    return float(np.sum(a + b)), float(np.sum(a * a + b * b))


def closed_form_slopes(coef: np.ndarray, g: GapSet, kappa_t: float = 2.0) -> tuple[float, float]:
    """(d/dx, d/dt) of sum_j int_0^{y_j} s_j P/r_j along the Dubrovin flows.

    Lagrange interpolation collapses the sum over divisor points to constants:
    d/dx = p_{n-1} A1/2 + p_{n-2},  d/dt = kappa_t (p_{n-1}(A2/4 + A1^2/8) + p_{n-2} A1/2 + p_{n-3}),
    A1 = sum(a + b), A2 = sum(a^2 + b^2).
    """
    n = len(g)
    A1, A2 = _power_sums(g)
    p = lambda i: float(coef[i]) if 0 <= i < len(coef) else 0.0  # noqa: E731
    dx = p(n - 1) * 0.5 * A1 + p(n - 2)
    dt = kappa_t * (p(n - 1) * (0.25 * A2 + A1 * A1 / 8.0) + p(n - 2) * 0.5 * A1 + p(n - 3))
    return dx, dt


def _second_kind(g: GapSet, order: int, nodes: int) -> np.ndarray:
    """Q_0 (monic, degree n) or Q_1 (leading 2, degree n + 1, no constant term of Q_1/w at infinity).

    Both have vanishing integrals over every gap, i.e. the differentials Q/w dz
    have zero A-periods around all gaps.
    """
    n = len(g)
    s = gap_signs(g)
    deg = n + order
    M = _gap_moments(g, deg, nodes) * s[:, None]
    lead = 1.0 if order == 0 else 2.0
    if order == 0:
        sol = np.linalg.solve(M[:, :n], -lead * M[:, n])
        return np.concatenate([sol, [lead]])
    # 1/w = x^{-n} (1 + A1/(2x) + ...), so Q_1/w = 2x + (q_n + A1) + O(1/x)
    A1, _ = _power_sums(g)
    rows = np.vstack([M[:, : n + 1], np.eye(1, n + 1, n)])
    rhs = np.concatenate([-lead * M[:, n + 1], [-A1]])
    sol = np.linalg.solve(rows, rhs)
    return np.concatenate([sol, [lead]])


def _inv_w_series(g: GapSet, terms: int) -> np.ndarray:
    """c_m with 1/w(x) = x^{-n} sum_m c_m x^{-m} for large x."""
    # log(1/w) = -n log x - 1/2 sum_k [log(1 - a_k/x) + log(1 - b_k/x)]
    e = np.concatenate([g.a, g.b])
    L = np.zeros(terms)
    for m in range(1, terms):
        L[m] = 0.5 * np.sum(e**m) / m
    c = np.zeros(terms)
    c[0] = 1.0
    for m in range(1, terms):  # exp of a power series
        c[m] = sum(k * L[k] * c[m - k] for k in range(1, m + 1)) / m
    return c


def _regularized_tail(coef: np.ndarray, g: GapSet, nodes: int) -> tuple[float, float]:
    """lim_X [int_{b_last}^X Q/w - polynomial growth] and a tail-size estimate."""
    n = len(g)
    deg = len(coef) - 1
    a, b = g.a, g.b
    lo = float(b[-1])
    R = 10.0 * max(1.0, float(np.max(np.abs(np.concatenate([a, b]))))) + 10.0
    terms = 40
    c = _inv_w_series(g, terms)
    # Q/w = sum_m d_m x^{deg - n - m}
    d = np.array([sum(coef[deg - i] * c[m - i] for i in range(0, min(m, deg) + 1)) for m in range(terms)])
    # finite part: substitute x = lo + v^2 to absorb the edge root, then Gauss-Legendre
    t, wt = np.polynomial.legendre.leggauss(nodes)
    vmax = math.sqrt(R - lo)
    v = 0.5 * vmax * (t + 1.0)
    x = lo + v * v
    edge = np.sqrt(x - lo)
    body = np.polyval(coef[::-1], x) / _w_band(x, a, b)
    # int f dx = int f 2 v dv, with f ~ 1/sqrt(x - lo) near the edge; 2 v f = 2 edge f is smooth
    finite = float(0.5 * vmax * np.sum(wt * 2.0 * edge * body))
    for m in range(terms):
        if deg - n - m == -1 and abs(d[m]) > 1e-12 * max(1.0, abs(d[0])):
            raise QuadratureError(f"log term at infinity (coefficient {d[m]:.3g})")
    # lim [int_lo^X Q/w - sum_{p>=0} d x^{p+1}/(p+1)] = finite - (growth at R) + decaying tail
    grow_R = sum(d[m] * R ** (deg - n - m + 1) / (deg - n - m + 1) for m in range(terms) if deg - n - m >= 0)
    decay = sum(-d[m] * R ** (deg - n - m + 1) / (deg - n - m + 1) for m in range(terms) if deg - n - m <= -2)
    last = abs(d[-1] * R ** (deg - n - terms + 2))
    return finite - grow_R + decay, last


def translation_frequencies(h: HyperellipticData, g: GapSet | None = None, kappa_t: float = 2.0) -> FrequencyData:
    """eta, eta1 from the second-kind differentials; theta0, theta1 via rotation_frequencies.

    eta_k = (1/pi) int_{E_k} Q_0/w,  eta1_k = (kappa_t/pi) int_{E_k} Q_1/w with E_k the
    bands enclosed by the generator l_k (half of the B-type period over that stretch),
    oriented from the reference gap toward gap k.
    """
    g = h.g if g is None else g
    nodes = h.nodes
    Q0 = _second_kind(g, 0, nodes)
    Q1 = _second_kind(g, 1, nodes)
    a, b = g.a, g.b
    bands = _band_edges(g)
    eta, eta1 = [], []
    for k in h.cycles:
        i0 = sum(_band_integral(Q0, *bands[i], a, b, nodes) for i in _span_bands(g, k))
        i1 = sum(_band_integral(Q1, *bands[i], a, b, nodes) for i in _span_bands(g, k))
        eta.append(-i0 / math.pi)
        eta1.append(-kappa_t * i1 / math.pi)
    th0, th1, tail = _rotation_parts(g, Q0, Q1, nodes, kappa_t)
    return FrequencyData(np.array(eta), np.array(eta1), th0, th1, tail)


def _rotation_parts(g: GapSet, Q0: np.ndarray, Q1: np.ndarray, nodes: int, kappa_t: float):
    a, b = g.a, g.b
    bands = _band_edges(g)
    r = g.reference_index
    inner0 = sum(_band_integral(Q0, *bands[i], a, b, nodes) for i in range(r, len(g) - 1))
    inner1 = sum(_band_integral(Q1, *bands[i], a, b, nodes) for i in range(r, len(g) - 1))
    t0, e0 = _regularized_tail(Q0, g, 4 * nodes)
    t1, e1 = _regularized_tail(Q1, g, 4 * nodes)
    theta0 = -(inner0 + t0) / math.pi
    theta1 = -kappa_t * (inner1 + t1) / math.pi
    return theta0, theta1, {"theta0_tail": e0, "theta1_tail": e1}


def rotation_frequencies(g: GapSet, nodes: int = 96, kappa_t: float = 2.0) -> tuple[float, float]:
    """(theta0, theta1): regularized integrals of Q_0/w and Q_1/w from xi* to +infinity."""
    Q0 = _second_kind(g, 0, nodes)
    Q1 = _second_kind(g, 1, nodes)
    th0, th1, tail = _rotation_parts(g, Q0, Q1, nodes, kappa_t)
    if max(tail.values()) > 1e-10:
        raise QuadratureError(f"regularization tail too large: {tail}")
    return th0, th1


def lagrange_frequencies(h: HyperellipticData, kappa_t: float = 2.0) -> FrequencyData:
    """Same quantities from the harmonic-measure polynomials (closed-form slopes)."""
    g = h.g
    eta, eta1 = [], []
    for k in h.cycles:
        dx, dt = closed_form_slopes(h.harmonic[k], g, kappa_t)
        eta.append(dx)
        eta1.append(dt)
    dx, dt = closed_form_slopes(h.harmonic["inf"], g, kappa_t)
    # A_r carries a minus sign, and tau ~ exp(-2 pi i (theta0 x + theta1 t))
    return FrequencyData(np.array(eta), np.array(eta1), dx, dt)


# ---------------------------------------------------------------------------
# fitting


@dataclass(frozen=True)
class LinearFit:
    slopes: np.ndarray
    intercepts: np.ndarray
    residuals: np.ndarray

    @property
    def max_residual(self) -> float:
        return float(np.max(self.residuals)) if self.residuals.size else 0.0


def linearization_fit(values: np.ndarray, clocks: np.ndarray, min_samples: int = 8) -> LinearFit:
    """Affine least-squares fit of each column of values (mod 1) against clocks.

    Columns are unwrapped with period 1 in clock order; a step of 1/2 or more
    between consecutive samples is ambiguous and rejected.
    """
    values = np.asarray(values, dtype=float)
    if values.ndim == 1:
        values = values[:, None]
    clocks = np.asarray(clocks, dtype=float)
    if clocks.size < min_samples:
        raise ValueError(f"need at least {min_samples} samples, got {clocks.size}")
    order = np.argsort(clocks)
    c = clocks[order]
    v = values[order]
    steps = np.diff(v, axis=0)
    steps = steps - np.round(steps)
    if np.any(np.abs(steps) >= 0.45):
        raise ValueError("unwrap ambiguity: sample the trajectory more finely")
    un = np.vstack([v[:1], v[:1] + np.cumsum(steps, axis=0)])
    X = np.column_stack([c, np.ones_like(c)])
    coef, *_ = np.linalg.lstsq(X, un, rcond=None)
    res = np.max(np.abs(un - X @ coef), axis=0)
    return LinearFit(coef[0], coef[1], res)


def linearize_trajectories(g: GapSet, y0, xs, ts, nodes: int = 96, kappa_t: float = 2.0, tol: float = 1e-12) -> dict:
    """Abel images along the x- and t-flows from y0, affine fits, and the predicted slopes.

    The character columns should move with slopes eta (in x) and eta1 (in t);
    the rotation column with -theta0 and -theta1.
    """
    from .dubrovin import CALIBRATED, TimeConvention, t_trajectory, x_trajectory

    conv = CALIBRATED if kappa_t == CALIBRATED.kappa_t else TimeConvention(CALIBRATED.sign_s, kappa_t, True)
    h = build_curve(g, nodes)
    freq = translation_frequencies(h, g, kappa_t)
    out = {"frequencies": freq.to_json()}
    for name, clocks, traj, pred in (
        ("x", xs, lambda c: x_trajectory(y0, g, c, tol), np.append(freq.eta, -freq.theta0)),
        ("t", ts, lambda c: t_trajectory(y0, g, c, conv, tol), np.append(freq.eta1, -freq.theta1)),
    ):
        clocks = np.asarray(clocks, dtype=float)
        ys = traj(clocks)
        vals = np.array([np.append(abel_character(y, h), abel_rotation(y, h, g)) for y in ys])
        fit = linearization_fit(vals, clocks)
        out[name] = {
            "slopes": fit.slopes.tolist(),
            "predicted": pred.tolist(),
            "max_residual": fit.max_residual,
            "slope_error": float(np.max(np.abs(fit.slopes - pred))),
        }
    return out
