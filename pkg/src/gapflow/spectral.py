"""Finite-gap spectra, Dirichlet divisors and phase coordinates.

The spectrum is E = R minus a finite union of open gaps (a_j, b_j).  A
divisor carries one point mu_j in the closed gap together with a sheet sign
eps_j; at a gap edge the two sheets are glued and the sign is stored as 0.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

EDGE = 0  # sign value used for divisor points sitting on a gap edge


class SpectralDataError(ValueError):
    """Raised for malformed gap sets, divisors or phase vectors."""


@dataclass(frozen=True)
class GapSet:
    gaps: tuple[tuple[float, float], ...]
    reference_index: int = 0
    labels: tuple[tuple[int, ...], ...] | None = None

    def __post_init__(self) -> None:
        gaps = tuple((float(a), float(b)) for a, b in self.gaps)
        object.__setattr__(self, "gaps", gaps)
        for a, b in gaps:
            if not (math.isfinite(a) and math.isfinite(b)) or not a < b:
                raise SpectralDataError(f"gap ({a}, {b}) is not a proper interval")
        for (a0, b0), (a1, b1) in zip(gaps, gaps[1:]):
            if not b0 < a1:
                raise SpectralDataError("gaps must be disjoint, sorted and separated by bands")
        if gaps and not 0 <= self.reference_index < len(gaps):
            raise SpectralDataError(f"reference_index {self.reference_index} out of range")
        if self.labels is not None:
            labels = tuple(tuple(int(v) for v in k) for k in self.labels)
            if len(labels) != len(gaps):
                raise SpectralDataError("one label per gap required")
            object.__setattr__(self, "labels", labels)

    # -- basic geometry -------------------------------------------------
    def __len__(self) -> int:
        return len(self.gaps)

    @property
    def a(self) -> np.ndarray:
        return np.array([g[0] for g in self.gaps], dtype=float)

    @property
    def b(self) -> np.ndarray:
        return np.array([g[1] for g in self.gaps], dtype=float)

    @property
    def lengths(self) -> np.ndarray:
        return self.b - self.a

    @property
    def genus(self) -> int:
        """Number of independent character coordinates (gaps minus one)."""
        return max(len(self.gaps) - 1, 0)

    @property
    def xi_star(self) -> float:
        """Normalization point: midpoint of the reference gap."""
        a, b = self.gaps[self.reference_index]
        return 0.5 * (a + b)

    def distance(self, j: int, k: int) -> float:
        """eta_jk, the distance between gaps j and k."""
        if j == k:
            return 0.0
        (a0, b0), (a1, b1) = self.gaps[j], self.gaps[k]
        return a1 - b0 if b0 < a1 else a0 - b1

    def distance_matrix(self) -> np.ndarray:
        a, b = self.a, self.b
        d = np.maximum(a[None, :] - b[:, None], a[:, None] - b[None, :])
        np.fill_diagonal(d, 0.0)
        return d

    def contains(self, lam: float) -> bool:
        """True when lam lies in the spectrum E (closed set)."""
        return not any(a < lam < b for a, b in self.gaps)

    def shifted(self, omega: float) -> "GapSet":
        return GapSet(tuple((a + omega, b + omega) for a, b in self.gaps), self.reference_index, self.labels)

    def scaled(self, sigma: float) -> "GapSet":
        return GapSet(tuple((sigma * a, sigma * b) for a, b in self.gaps), self.reference_index, self.labels)

    # -- serialization --------------------------------------------------
    def to_json(self) -> dict:
        out: dict = {"gaps": [list(g) for g in self.gaps], "reference_index": self.reference_index}
        if self.labels is not None:
            out["labels"] = [list(k) for k in self.labels]
        return out

    @classmethod
    def from_json(cls, data: dict | str) -> "GapSet":
        if isinstance(data, str):
            data = json.loads(data)
        labels = data.get("labels")
        return cls(
            tuple(tuple(g) for g in data["gaps"]),
            int(data.get("reference_index", 0)),
            tuple(tuple(k) for k in labels) if labels is not None else None,
        )


@dataclass(frozen=True)
class Divisor:
    mu: tuple[float, ...]
    eps: tuple[int, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "mu", tuple(float(m) for m in self.mu))
        object.__setattr__(self, "eps", tuple(int(e) for e in self.eps))
        if len(self.mu) != len(self.eps):
            raise SpectralDataError("mu and eps must have equal length")
        if any(e not in (-1, 0, 1) for e in self.eps):
            raise SpectralDataError("signs must be -1, +1 or 0 (edge)")

    def __len__(self) -> int:
        return len(self.mu)

    def validate(self, g: GapSet, tol: float = 1e-12) -> None:
        if len(self) != len(g):
            raise SpectralDataError(f"divisor has {len(self)} points for {len(g)} gaps")
        for (a, b), m, e in zip(g.gaps, self.mu, self.eps):
            scale = tol * max(1.0, abs(a), abs(b))
            if m < a - scale or m > b + scale:
                raise SpectralDataError(f"mu = {m} outside [{a}, {b}]")
            at_edge = abs(m - a) <= scale or abs(m - b) <= scale
            if e == EDGE and not at_edge:
                raise SpectralDataError(f"interior point mu = {m} needs a sign")


@dataclass(frozen=True)
class PhaseVector:
    y: tuple[float, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "y", tuple(float(v) for v in self.y))

    def __len__(self) -> int:
        return len(self.y)

    def as_array(self) -> np.ndarray:
        return np.asarray(self.y, dtype=float)


def _edge_tol(gamma: float) -> float:
    return 4e-16 * gamma


def phases_to_divisor(y: PhaseVector | Sequence[float], g: GapSet) -> Divisor:
    """mu_j = a_j + gamma_j sin^2(y_j), eps_j = sgn sin(2 y_j)."""
    yv = np.asarray(y.y if isinstance(y, PhaseVector) else y, dtype=float)
    if yv.shape != (len(g),):
        raise SpectralDataError(f"phase vector of length {yv.size} for {len(g)} gaps")
    mus, signs = [], []
    for (a, b), yj in zip(g.gaps, yv):
        gamma = b - a
        s, c = math.sin(yj), math.cos(yj)
        # distance to the nearer edge, computed without cancellation
        lo, hi = gamma * s * s, gamma * c * c
        if lo <= _edge_tol(gamma) * 4 or abs(s) < 1e-15:
            mus.append(a)
            signs.append(EDGE)
        elif hi <= _edge_tol(gamma) * 4 or abs(c) < 1e-15:
            mus.append(b)
            signs.append(EDGE)
        else:
            mus.append(a + lo if lo <= hi else b - hi)
            signs.append(1 if s * c > 0 else -1)
    return Divisor(tuple(mus), tuple(signs))


def divisor_to_phases(D: Divisor, g: GapSet) -> PhaseVector:
    """Inverse of phases_to_divisor with every y_j in [0, pi)."""
    D.validate(g)
    ys = []
    for (a, b), m, e in zip(g.gaps, D.mu, D.eps):
        m = min(max(m, a), b)
        base = math.atan2(math.sqrt(m - a), math.sqrt(b - m))  # in [0, pi/2]
        if e == -1 and 0.0 < base < 0.5 * math.pi:
            base = math.pi - base
        ys.append(base)
    return PhaseVector(tuple(ys))


# ---------------------------------------------------------------------------
# comparability constants and Craig-type diagnostics


def _chebyshev_points(a: float, b: float, n: int) -> np.ndarray:
    k = np.arange(n)
    t = np.cos((2 * k + 1) * np.pi / (2 * n))
    return 0.5 * (a + b) + 0.5 * (b - a) * t


def comparability_constants(g: GapSet, grid: int = 256) -> np.ndarray:
    """C_j = sup over z in G_j of the square-rooted two-sided product.

    Gaps to the left contribute (a_k - z)/(b_k - z), gaps to the right
    (b_k - z)/(a_k - z); every factor exceeds one on G_j, so C_j >= 1.
    """
    a, b = g.a, g.b
    out = np.ones(len(g))
    for j in range(len(g)):
        z = np.concatenate([[a[j]], _chebyshev_points(a[j], b[j], grid), [b[j]]])[:, None]
        left, right = slice(0, j), slice(j + 1, len(g))
        logp = np.log((z - a[left]) / (z - b[left])).sum(axis=1)
        logp += np.log((b[right] - z) / (a[right] - z)).sum(axis=1)
        out[j] = math.exp(0.5 * float(np.max(logp)))
    return out


@dataclass(frozen=True)
class CraigReport:
    sums: tuple[float, float, float]
    history: tuple[tuple[int, float, float, float], ...]
    verdicts: tuple[str, str, str]
    tail_slopes: tuple[float, float, float]
    tail_bound: float | None
    delta: float

    @property
    def satisfied(self) -> bool:
        return all(v in ("satisfied", "converged") for v in self.verdicts)

    def to_json(self) -> dict:
        return {
            "sums": list(self.sums),
            "history": [list(h) for h in self.history],
            "verdicts": list(self.verdicts),
            "tail_slopes": list(self.tail_slopes),
            "tail_bound": self.tail_bound,
            "delta": self.delta,
            "satisfied": self.satisfied,
        }


def _craig_rows(g: GapSet, delta: float, C: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Per-gap terms: summand of the first condition, row sums of the second, row maxima of the third."""
    n = len(g)
    gam = g.lengths
    eta = g.distance_matrix()
    r = g.reference_index
    sq = np.sqrt(gam)
    t1 = (1.0 + eta[:, r]) * C * sq
    if n == 1:
        return t1, np.zeros(1), np.zeros(1)
    off = ~np.eye(n, dtype=bool)
    inv_eta = np.where(off, 1.0 / np.where(off, eta, 1.0), 0.0)
    row2 = (C**3 * (1.0 + eta[r, :] ** 2) * sq)[:, None] * (C**2 * sq)[None, :] * inv_eta
    row3 = (gam ** (0.5 - delta))[:, None] * sq[None, :] * inv_eta
    return t1, row2.sum(axis=1), row3.max(axis=1)


def _truncate(g: GapSet, m: int) -> GapSet:
    """Keep the gaps whose index lies within m of the reference gap."""
    r = g.reference_index
    lo, hi = max(0, r - m), min(len(g), r + m + 1)
    return GapSet(g.gaps[lo:hi], r - lo)


def _tail_bound(model: dict | None, n_kept: int) -> float | None:
    """Analytic tail of sum_{|k|>N} (1 + s|k|) C gamma_k^{1/2} under a decay model.

    model = {"kind": "exponential", "rate": r, "amplitude": A, "spacing": s, "C": Cmax}
    means gamma_k <= A exp(-r|k|); "power" uses gamma_k <= A |k|^{-p}.
    """
    if not model:
        return None
    amp = float(model.get("amplitude", 1.0))
    s = float(model.get("spacing", 1.0))
    cmax = float(model.get("C", 1.0))
    N = n_kept
    if model["kind"] == "exponential":
        q = math.exp(-0.5 * float(model["rate"]))
        geo = q ** (N + 1) / (1 - q)
        lin = q ** (N + 1) * ((N + 1) - N * q) / (1 - q) ** 2
        return 2 * cmax * math.sqrt(amp) * (geo + s * lin)
    if model["kind"] == "power":
        p = 0.5 * float(model["exponent"])
        if p <= 2.0:
            return math.inf
        return 2 * cmax * math.sqrt(amp) * (N ** (1 - p) / (p - 1) + s * N ** (2 - p) / (p - 2))
    raise SpectralDataError(f"unknown tail model {model['kind']!r}")


def _loglog_slope(idx: np.ndarray, vals: np.ndarray) -> float:
    keep = vals > 0
    if keep.sum() < 3:
        return -math.inf
    return float(np.polyfit(np.log(idx[keep]), np.log(vals[keep]), 1)[0])


def _log_growth(idx: np.ndarray, vals: np.ndarray) -> float:
    """Coefficient beta of a fit vals ~ alpha + beta log(idx), relative to the mean value."""
    if idx.size < 3:
        return -math.inf
    beta = float(np.polyfit(np.log(idx), vals, 1)[0])
    return beta / max(float(np.mean(np.abs(vals))), 1e-300)


def craig_report(g: GapSet, delta: float, tail_model: dict | None = None, levels: int = 4) -> CraigReport:
    """Partial sums of the three Craig-type conditions with convergence diagnostics.

    The sums are evaluated on nested truncations around the reference gap.  The
    verdicts look at the per-gap terms on the outer half of the inner window
    (index distance N/4..N/2 from the reference, away from truncation effects):
    the first series is "converged" when its terms decay faster than |k|^-1.1,
    the two suprema when their row values do not grow along the family (a fit
    alpha + beta log|k| with beta <= 0).  Logarithmic growth, as for power-law
    gap lengths in the second condition, only shows once the outer window sits
    past the minimum of the row sums; a few hundred gaps per side suffice.
    """
    if not delta > 0:
        raise SpectralDataError("delta must be positive")
    n = len(g)
    if n <= 1:
        s1 = float(_craig_rows(g, delta, comparability_constants(g))[0].sum()) if n else 0.0
        return CraigReport((s1, 0.0, 0.0), ((n, s1, 0.0, 0.0),), ("satisfied",) * 3, (0.0, 0.0, 0.0), 0.0, delta)
    r = g.reference_index
    m_full = max(r, n - 1 - r)
    history = []
    for m in sorted({max(1, m_full >> k) for k in range(levels)}):
        sub = _truncate(g, m)
        t1, row2, row3 = _craig_rows(sub, delta, comparability_constants(sub))
        history.append((m, float(t1.sum()), float(row2.max()), float(row3.max())))
    t1, row2, row3 = _craig_rows(g, delta, comparability_constants(g))
    dist = np.abs(np.arange(n) - r)
    outer = (dist >= max(2, m_full // 4)) & (dist <= max(4, m_full // 2))
    d_out = dist[outer].astype(float)
    slopes = (
        _loglog_slope(d_out, t1[outer]),
        _log_growth(d_out, row2[outer]),
        _log_growth(d_out, row3[outer]),
    )
    verdicts = (
        "converged" if slopes[0] < -1.1 else "diverging",
        "converged" if slopes[1] <= 0.0 else "diverging",
        "converged" if slopes[2] <= 0.0 else "diverging",
    )
    return CraigReport(history[-1][1:], tuple(history), verdicts, slopes, _tail_bound(tail_model, m_full), delta)


# ---------------------------------------------------------------------------
# homogeneity


def _measure_in_E(g: GapSet, lo: float, hi: float) -> float:
    """|E cap (lo, hi)| by exact interval arithmetic."""
    removed = 0.0
    for a, b in g.gaps:
        removed += max(0.0, min(b, hi) - max(a, lo))
    return (hi - lo) - removed


def homogeneity_estimate(
    g: GapSet,
    window: tuple[float, float],
    grid: int = 2001,
    h_min: float | None = None,
    h_max: float | None = None,
) -> float:
    """Minimum of |E cap (lam-h, lam+h)|/(2h) over sampled lam in E cap window and dyadic h."""
    lo, hi = float(window[0]), float(window[1])
    if not lo < hi:
        raise SpectralDataError("window must have positive length")
    lam = np.linspace(lo, hi, grid)
    edges = [e for ab in g.gaps for e in ab if lo <= e <= hi]
    lam = np.concatenate([lam, np.asarray(edges, dtype=float)])
    in_E = np.array([g.contains(float(v)) for v in lam])
    lam = lam[in_E]
    if lam.size == 0:
        raise SpectralDataError("window does not meet the spectrum")
    width = hi - lo
    h_max = width if h_max is None else h_max
    h_min = width * 2.0**-14 if h_min is None else h_min
    hs = h_max * 2.0 ** -np.arange(0, int(math.ceil(math.log2(h_max / h_min))) + 1)
    a, b = g.a, g.b
    best = 1.0
    for h in hs:
        lo_i, hi_i = lam - h, lam + h
        if len(g):
            cut = np.clip(np.minimum(b[None, :], hi_i[:, None]) - np.maximum(a[None, :], lo_i[:, None]), 0.0, None)
            frac = (2 * h - cut.sum(axis=1)) / (2 * h)
        else:
            frac = np.ones_like(lam)
        best = min(best, float(frac.min()))
    return best


def gapset_from_centers(centers: Iterable[float], lengths: Iterable[float], reference_index: int = 0) -> GapSet:
    pairs = sorted((c - 0.5 * l, c + 0.5 * l) for c, l in zip(centers, lengths))
    return GapSet(tuple(pairs), reference_index)


def synthetic_family(kind: str, n: int) -> GapSet:
    """Gaps centred at k in [-n, n] with gamma_k = exp(-|k|) or 1/(1+k^2)."""
    ks = np.arange(-n, n + 1)
    if kind == "exponential":
        lengths = np.exp(-np.abs(ks))
    elif kind == "power":
        lengths = 1.0 / (1.0 + ks.astype(float) ** 2)
    else:
        raise SpectralDataError(f"unknown family {kind!r}")
    return gapset_from_centers(ks.astype(float), lengths, reference_index=n)
