"""Transfer matrices, Lyapunov exponent, rotation number, gaps and Weyl disks.

Potentials are phi(x, theta) = sum_n phi_hat(n) exp(2 pi i <n, theta>) exp(i <n, omega> x),
i.e. omega is an angular frequency vector and theta lives on R^d / Z^d.  With this
normalization gap k sits near <k, omega>/2 and the rotation number on it is exactly
<k, omega>/2.

The first-order system is f' = [[-iz, i phi], [-i conj(phi), iz]] f; T(z, x, theta)
is its fundamental matrix at x with T(z, 0, theta) = I.  For real z,
T* j T = j with j = diag(-1, 1).
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field

import numpy as np

from . import _backend

GAUSS = (0.5 - math.sqrt(3.0) / 6.0, 0.5 + math.sqrt(3.0) / 6.0)
J = np.diag([-1.0, 1.0]).astype(complex)


class NumericalError(RuntimeError):
    """Loss of accuracy detected by an internal consistency check."""


# ---------------------------------------------------------------------------
# potentials


@dataclass(frozen=True)
class QPotential:
    omega: tuple[float, ...]
    fourier: dict = field(default_factory=dict)
    width: float = 0.0
    dioph: tuple[float, float] | None = None

    def __post_init__(self) -> None:
        omega = tuple(float(w) for w in self.omega)
        if not omega:
            raise ValueError("frequency vector must have at least one component")
        object.__setattr__(self, "omega", omega)
        four = {}
        for n, c in dict(self.fourier).items():
            key = (int(n),) if np.isscalar(n) else tuple(int(v) for v in n)
            if len(key) != len(omega):
                raise ValueError(f"mode {key} does not match dimension {len(omega)}")
            if c != 0:
                four[key] = complex(c)
        object.__setattr__(self, "fourier", four)
        keys = sorted(four)
        cache = (np.array(keys, dtype=float).reshape(-1, len(omega)), np.array([four[k] for k in keys], dtype=complex))
        object.__setattr__(self, "_cache", cache)

    def __hash__(self) -> int:
        return hash((self.omega, tuple(sorted(self.fourier.items(), key=lambda kv: kv[0]))))

    @property
    def d(self) -> int:
        return len(self.omega)

    @property
    def modes(self) -> np.ndarray:
        return self._cache[0]

    @property
    def coeffs(self) -> np.ndarray:
        return self._cache[1]

    @property
    def sup_bound(self) -> float:
        return float(np.sum(np.abs(self.coeffs)))

    def strip_norm(self, h: float | None = None) -> float:
        """sum |phi_hat(n)| exp(2 pi h |n|) with |n| the l1 length."""
        h = self.width if h is None else h
        if not self.fourier:
            return 0.0
        return float(np.sum(np.abs(self.coeffs) * np.exp(2 * math.pi * h * np.abs(self.modes).sum(axis=1))))

    @property
    def period(self) -> float | None:
        """Exact period for d = 1 (any positive multiple works for a constant)."""
        if self.d == 1 and self.omega[0] != 0:
            return 2 * math.pi / abs(self.omega[0])
        return None

    def __call__(self, x, theta=None) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        theta = np.zeros(self.d) if theta is None else np.asarray(theta, dtype=float).reshape(self.d)
        if not self.fourier:
            return np.zeros(x.shape, dtype=complex)
        modes, coef = self._cache
        ph = 2 * math.pi * (modes @ theta)
        freq = modes @ np.asarray(self.omega)
        out = np.zeros(x.size, dtype=complex)
        flat = x.ravel()
        for f, p, c in zip(freq, ph, coef):
            out += c * np.exp(1j * (f * flat + p))
        return out.reshape(x.shape)

    def shift_theta(self, theta, x: float) -> np.ndarray:
        theta = np.zeros(self.d) if theta is None else np.asarray(theta, dtype=float).reshape(self.d)
        return np.mod(theta + np.asarray(self.omega) * x / (2 * math.pi), 1.0)

    def rationally_independent(self, kmax: int = 50, tol: float = 1e-10) -> bool:
        if self.d == 1:
            return self.omega[0] != 0.0
        w = np.asarray(self.omega)
        for k in itertools.product(range(-kmax, kmax + 1), repeat=self.d):
            if any(k) and abs(np.dot(k, w)) < tol * max(1.0, float(np.abs(w).max())):
                return False
        return True

    # -- serialization
    def to_json(self) -> dict:
        return {
            "omega": list(self.omega),
            "fourier": [{"n": list(k), "re": v.real, "im": v.imag} for k, v in sorted(self.fourier.items())],
            "width": self.width,
            "dioph": list(self.dioph) if self.dioph else None,
        }

    @classmethod
    def from_json(cls, data: dict | str) -> "QPotential":
        if isinstance(data, str):
            data = json.loads(data)
        four = {tuple(r["n"]): complex(r.get("re", 0.0), r.get("im", 0.0)) for r in data.get("fourier", [])}
        dio = data.get("dioph")
        return cls(tuple(data["omega"]), four, float(data.get("width", 0.0)), tuple(dio) if dio else None)

    # -- standard samples
    @classmethod
    def zero(cls) -> "QPotential":
        return cls((1.0,), {})

    @classmethod
    def constant(cls, c: complex) -> "QPotential":
        return cls((1.0,), {(0,): c})

    @classmethod
    def cosine(cls, eps0: float, omega: float = (math.sqrt(5) - 1) / 2, width: float = 0.5) -> "QPotential":
        """2 eps0 cos(omega x + 2 pi theta)."""
        return cls((omega,), {(1,): eps0, (-1,): eps0}, width, (0.3, 1.0))


def golden_mean() -> float:
    return (math.sqrt(5.0) - 1.0) / 2.0


# ---------------------------------------------------------------------------
# transfer matrices


@dataclass(frozen=True)
class TransferMatrix:
    """T = exp(log_scale) * scaled."""

    scaled: np.ndarray
    log_scale: float
    theta: np.ndarray
    x: float
    z: complex

    @property
    def matrix(self) -> np.ndarray:
        return self.scaled * math.exp(self.log_scale)

    @property
    def log_norm(self) -> float:
        return float(np.log(np.linalg.norm(self.scaled, 2)) + self.log_scale)

    def det(self) -> complex:
        return complex(np.linalg.det(self.scaled) * math.exp(2 * self.log_scale))

    def su11_defect(self) -> float:
        T = self.matrix
        return float(np.linalg.norm(T.conj().T @ J @ T - J, 2))

    def su11_relative_defect(self) -> float:
        """|T*JT - J| / max(1, |T|^2), evaluated without forming T."""
        S = self.scaled
        n2 = float(np.linalg.norm(S, 2)) ** 2
        if 2 * self.log_scale + math.log(n2) <= 0:
            return self.su11_defect()
        return float(np.linalg.norm(S.conj().T @ J @ S - J * math.exp(-2 * self.log_scale), 2)) / n2


def default_step(p: QPotential, z: complex, h: float | None = None) -> float:
    if h is not None:
        return float(h)
    scale = abs(complex(z)) + p.sup_bound + float(np.max(np.abs(p.omega)))
    return min(0.02, 0.25 / max(scale, 1e-12))


def node_samples(p: QPotential, x0: float, h: float, n: int, theta=None) -> np.ndarray:
    base = x0 + h * np.arange(n)
    nodes = np.stack([base + GAUSS[0] * h, base + GAUSS[1] * h], axis=1)
    return np.ascontiguousarray(p(nodes, theta))


@dataclass(frozen=True)
class Propagation:
    """Raw kernel output at checkpoints x_c (transfer from 0 to x_c)."""

    x: np.ndarray
    T: np.ndarray
    S: np.ndarray
    wind: np.ndarray
    logmax: np.ndarray
    lognorm2: np.ndarray
    h: float


def propagate(
    p: QPotential,
    z: complex,
    xs,
    theta=None,
    h: float | None = None,
    xis=(),
    backend: str | None = None,
) -> Propagation:
    """Integrate from 0 to every x in xs (all of one sign), sharing one pass.

    The step is L/n for the farthest checkpoint L; the others are rounded to the
    nearest step, so pass h dividing them when exact positions matter.
    """
    xs = np.atleast_1d(np.asarray(xs, dtype=float))
    if xs.size == 0:
        raise ValueError("no checkpoints")
    sign = -1.0 if np.any(xs < 0) else 1.0
    if np.any(sign * xs < 0):
        raise ValueError("checkpoints must share one sign")
    L = float(np.max(np.abs(xs)))
    h0 = default_step(p, z, h)
    n = max(1, int(math.ceil(L / h0 - 1e-9))) if L > 0 else 0
    hh = L / n if n else h0
    cps = np.rint(np.abs(xs) / hh).astype(np.int64) if n else np.zeros(xs.size, dtype=np.int64)
    order = np.argsort(cps, kind="stable")
    phi = node_samples(p, 0.0, sign * hh, n, theta) if n else np.zeros((0, 2), dtype=complex)
    T, S, w, m, nr = _backend.propagate(phi, sign * hh, z, np.asarray(xis, dtype=complex), cps[order], backend)
    inv = np.empty_like(order)
    inv[order] = np.arange(order.size)
    return Propagation(xs, T[inv], S[inv], w[inv], m[inv], nr[inv], sign * hh)


def transfer(p: QPotential, z: complex, x: float, theta=None, h: float | None = None, backend=None) -> TransferMatrix:
    pr = propagate(p, z, [x], theta, h, backend=backend)
    th = np.zeros(p.d) if theta is None else np.asarray(theta, dtype=float)
    return TransferMatrix(pr.T[0], float(pr.S[0]), th, float(x), complex(z))


def theta_samples(d: int, n: int = 32, seed: int = 0) -> np.ndarray:
    """Low-discrepancy points of the d-torus (unscrambled Sobol, first point 0)."""
    from scipy.stats import qmc

    if n & (n - 1) == 0:
        return qmc.Sobol(d, scramble=False, seed=seed).random_base2(int(math.log2(n)))
    return qmc.Sobol(d, scramble=False, seed=seed).random(n)


def lyapunov(p: QPotential, z: complex, L: float, samples: int = 32, h=None, threads=None) -> float:
    """(1/L) * mean over theta of log ||T(z, L, theta)||."""
    if L <= 0 or samples <= 0:
        raise ValueError("L and samples must be positive")
    thetas = [None] if not p.fourier or p.period is not None and samples == 1 else list(theta_samples(p.d, samples))
    vals = _backend.parallel_map(lambda th: transfer(p, z, L, th, h).log_norm, thetas, threads)
    return float(np.mean(vals)) / L


def lyapunov_difference(p: QPotential, z: complex, L: float, theta=None, h=None) -> float:
    """(log||T(2L)|| - log||T(L)||)/L; cancels the O(1/L) offset of the plain estimate."""
    pr = propagate(p, z, [L, 2 * L], theta, h)
    ln = [np.log(np.linalg.norm(t, 2)) + s for t, s in zip(pr.T, pr.S)]
    return float((ln[1] - ln[0]) / L)


# ---------------------------------------------------------------------------
# rotation number and Floquet data (d = 1 is periodic)


def discriminant(p: QPotential, lam: float, theta=None, h=None) -> float:
    P = p.period
    if P is None:
        raise ValueError("discriminant needs a periodic (d = 1) potential")
    t = transfer(p, lam, P, theta, h)
    return float((np.trace(t.scaled) * math.exp(t.log_scale)).real)


def _floquet_angle(mono: np.ndarray) -> float:
    """Angle in [0, pi] with Delta/2 = cos(angle); eigenvalue phases stay accurate at closed gaps, arccos does not."""
    disc = float(np.trace(mono).real)
    if abs(disc) >= 2.0:
        return 0.0 if disc > 0 else math.pi
    ev = np.linalg.eigvals(mono)
    return float(np.mean(np.abs(np.angle(ev))))


def _snap(rho: float, c: float, P: float) -> float:
    m = math.floor(rho * P / (2 * math.pi))
    cands = [(2 * math.pi * mm + s * c) / P for mm in (m - 1, m, m + 1, m + 2) for s in (1, -1)]
    return min(cands, key=lambda v: abs(v - rho))


def rotation_number(p: QPotential, lam: float, L: float, theta=None, h=None, snap: bool = True) -> float:
    """Winding rate of the real solution f(0) = (1, 1), oriented so that rho(lam) = lam for phi = 0.

    For periodic potentials the estimate is snapped to the exact value
    (2 pi m +- arccos(Delta/2))/P nearest to it.
    """
    P = p.period
    if P is not None and snap:
        nper = max(1, int(round(L / P)))
        hp = P / math.ceil(P / default_step(p, lam, h))  # whole number of steps per period
        pr = propagate(p, lam, [P, nper * P], theta, hp)
        return _snap(-float(pr.wind[1]) / (nper * P), _floquet_angle(pr.T[0] * math.exp(pr.S[0])), P)
    pr = propagate(p, lam, [L], theta, h)
    return -float(pr.wind[0]) / L


def ids(p: QPotential, lam: float, L: float, **kw) -> float:
    return rotation_number(p, lam, L, **kw) / math.pi


# ---------------------------------------------------------------------------
# gaps


@dataclass(frozen=True)
class GapRecord:
    lo: float
    hi: float
    label: tuple[int, ...]
    rho: float
    ambiguous: bool = False

    @property
    def size(self) -> float:
        return self.hi - self.lo

    @property
    def center(self) -> float:
        return 0.5 * (self.lo + self.hi)

    def distance_to_label(self, omega) -> float:
        """Distance of the gap interval to <k, omega>/2."""
        target = 0.5 * float(np.dot(self.label, omega))
        return max(0.0, self.lo - target, target - self.hi)

    def to_json(self) -> dict:
        return {"lo": self.lo, "hi": self.hi, "label": list(self.label), "size": self.size, "rho": self.rho,
                "ambiguous": self.ambiguous}


@dataclass(frozen=True)
class GapScan:
    lam: np.ndarray
    rho: np.ndarray
    gamma: np.ndarray
    gaps: tuple[GapRecord, ...]
    method: str

    def rows(self):
        for lam, rho, gam in zip(self.lam, self.rho, self.gamma):
            g = next((gp for gp in self.gaps if gp.lo < lam < gp.hi), None)
            yield lam, gam, rho, g is not None, "" if g is None else ";".join(map(str, g.label))


def label_search(rho: float, omega, kmax: int = 8, tol: float = 1e-6) -> tuple[tuple[int, ...], bool]:
    """k with |2 rho - <k, omega>| minimal over |k|_inf <= kmax; flags ties within tol."""
    w = np.asarray(omega, dtype=float)
    best, best_err, ambiguous = None, math.inf, False
    cands = sorted(itertools.product(range(-kmax, kmax + 1), repeat=w.size), key=lambda k: (sum(map(abs, k)), k))
    for k in cands:
        err = abs(2 * rho - float(np.dot(k, w)))
        if err < best_err - tol:
            best, best_err, ambiguous = k, err, False
        elif abs(err - best_err) <= tol:
            ambiguous = True
    return tuple(best), ambiguous


def hill_eigenvalues(p: QPotential, lam_max: float, extra: int = 40) -> np.ndarray:
    """Periodic and antiperiodic eigenvalues of [[i d/dx, phi], [conj(phi), -i d/dx]] (d = 1).

    Galerkin in the modes exp(i m omega x / 2), |m| <= M; phi's mode n couples m to
    m + 2n, so even m (periodic) and odd m (antiperiodic) separate.  Eigenvalues of
    the truncated Hermitian matrix in [-lam_max, lam_max] are converged once M
    exceeds 2 lam_max / omega by a margin.  They are the band edges, closed gaps
    appearing as (numerically) double eigenvalues.
    """
    if p.d != 1:
        raise ValueError("Hill discretization needs d = 1")
    w = abs(p.omega[0])
    M = int(math.ceil(2 * (lam_max + p.sup_bound) / w)) + extra
    out = []
    for parity in (0, 1):
        ms = np.array([m for m in range(-M, M + 1) if (m - parity) % 2 == 0])
        q = ms * w / 2 * np.sign(p.omega[0])
        n = ms.size
        Phi = np.zeros((n, n), dtype=complex)
        idx = {m: i for i, m in enumerate(ms)}
        for (mode,), c in p.fourier.items():
            for i, m in enumerate(ms):
                j = idx.get(m - 2 * mode)
                if j is not None:
                    Phi[i, j] += c
        H = np.block([[np.diag(-q).astype(complex), Phi], [Phi.conj().T, np.diag(q).astype(complex)]])
        out.append(np.linalg.eigvalsh(H))
    ev = np.sort(np.concatenate(out))
    return ev[np.abs(ev) <= lam_max]


def ids_and_gaps(
    p: QPotential,
    lam_grid,
    L: float = 200.0,
    kmax: int = 8,
    h: float | None = None,
    min_size: float = 0.0,
    threads: int | None = None,
    closed_tol: float = 1e-12,
) -> GapScan:
    """Gap intervals with labels.

    d = 1 (periodic): edges are the periodic/antiperiodic eigenvalues from
    hill_eigenvalues, so gaps far below the grid spacing are found and their
    edges are accurate to rounding; pairs closer than closed_tol count as closed.
    The discriminant |Delta| > 2 tells gaps from bands between consecutive
    eigenvalues.  d >= 2: plateaus of rho on the grid where the finite-L
    Lyapunov exponent is positive.
    """
    lam = np.asarray(lam_grid, dtype=float)
    P = p.period
    rho = np.array(_backend.parallel_map(lambda l: rotation_number(p, l, L, h=h), lam, threads))
    if P is None:
        gam = np.array(_backend.parallel_map(lambda l: lyapunov_difference(p, l, L, h=h), lam, threads))
        return GapScan(lam, rho, gam, _plateau_gaps(p, lam, rho, gam, L, kmax), "plateau")
    disc = np.array(_backend.parallel_map(lambda l: discriminant(p, l, h=h), lam, threads))
    gam = np.array([math.acosh(abs(d) / 2) / P if abs(d) > 2 else 0.0 for d in disc])
    margin = 2.0
    ev = hill_eigenvalues(p, max(abs(lam[0]), abs(lam[-1])) + margin)
    w = abs(p.omega[0])
    gaps = []
    for lo, hi in zip(ev[:-1], ev[1:]):
        size = hi - lo
        if size <= closed_tol * max(1.0, abs(lo)):
            continue  # double eigenvalue: closed gap
        if hi < lam[0] or lo > lam[-1] or size <= min_size:
            continue
        # bands have length of order omega; short intervals are always gaps
        if size > 1e-3 * w and abs(discriminant(p, 0.5 * (lo + hi), h=h)) <= 2.0:
            continue
        r = rotation_number(p, 0.5 * (lo + hi), L, h=h)
        k, amb = label_search(r, p.omega, kmax)
        gaps.append(GapRecord(float(lo), float(hi), k, r, amb))
    return GapScan(lam, rho, gam, tuple(gaps), "floquet")


def _plateau_gaps(p, lam, rho, gam, L, kmax) -> tuple[GapRecord, ...]:
    thresh = 4.0 * math.log(max(L, 2.0)) / L
    inside = gam > thresh
    gaps = []
    i = 0
    while i < lam.size:
        if inside[i]:
            j = i
            while j + 1 < lam.size and inside[j + 1]:
                j += 1
            r = float(np.median(rho[i : j + 1]))
            k, amb = label_search(r, p.omega, kmax)
            lo = lam[i - 1] if i > 0 else lam[i]
            hi = lam[j + 1] if j + 1 < lam.size else lam[j]
            gaps.append(GapRecord(float(lo), float(hi), k, r, amb))
            i = j + 1
        else:
            i += 1
    return tuple(gaps)


@dataclass(frozen=True)
class DecayFit:
    slope: float
    intercept: float
    r: float
    points: int


def gap_decay_fit(gaps) -> DecayFit:
    """Least-squares fit of log|G_k| against |k|; r = -slope/(2 pi)."""
    ks = np.array([sum(abs(v) for v in g.label) for g in gaps], dtype=float)
    ls = np.log(np.array([g.size for g in gaps]))
    if np.unique(ks).size < 2:
        raise ValueError("need gaps with at least two distinct |k|")
    slope, icpt = np.polyfit(ks, ls, 1)
    return DecayFit(float(slope), float(icpt), float(-slope / (2 * math.pi)), int(ks.size))


def gap_distance_shape(gaps, tau: float) -> dict:
    """Fit C in dist(G_k, G_k') >= C |k - k'|^(-2 tau) on nearest-label pairs, then test all pairs."""
    rows = []
    for g1, g2 in itertools.combinations(gaps, 2):
        dk = sum(abs(a - b) for a, b in zip(g1.label, g2.label))
        dist = max(g2.lo - g1.hi, g1.lo - g2.hi)
        rows.append((dk, dist))
    if not rows:
        return {"C": None, "holds": True, "pairs": 0}
    dmin = min(dk for dk, _ in rows)
    C = min(dist * dk ** (2 * tau) for dk, dist in rows if dk == dmin)
    worst = min(dist * dk ** (2 * tau) / C for dk, dist in rows)
    return {"C": C, "holds": bool(worst >= 1.0 - 1e-12 and C > 0), "worst_ratio": worst, "pairs": len(rows)}


# ---------------------------------------------------------------------------
# Weyl disks and Schur functions


@dataclass(frozen=True)
class WeylDisks:
    ells: np.ndarray
    centers: np.ndarray
    radii: np.ndarray
    side: str

    @property
    def estimate(self) -> complex:
        return complex(self.centers[-1])

    @property
    def error(self) -> float:
        return float(self.radii[-1])

    def nested(self, rtol: float = 1e-9) -> bool:
        c, r = self.centers, self.radii
        # centres are only known to rounding once the radii drop below it
        floor = 8 * np.finfo(float).eps * np.maximum(1.0, np.abs(c[1:]))
        return bool(np.all(np.abs(np.diff(c)) + r[1:] <= r[:-1] * (1 + rtol) + floor))


def weyl_disk_schur(p: QPotential, z: complex, ells, side: str = "+", theta=None, h=None) -> WeylDisks:
    """Disks D(z, l) containing s_+(z) (side '+') or s_-(z) (side '-').

    '+': initial vectors (w, 1) whose solution has |f2| >= |f1| at l.
    '-': initial vectors (1, w) whose solution, run to -l, has |f1| >= |f2| there.
    """
    if complex(z).imag <= 0:
        raise ValueError("Weyl disks need Im z > 0")
    ells = np.sort(np.asarray(ells, dtype=float))
    sgn = 1.0 if side == "+" else -1.0
    pr = propagate(p, z, sgn * ells, theta, h)
    centers, radii = [], []
    for T, S in zip(pr.T, pr.S):
        H = T.conj().T @ J @ T
        if side == "+":
            centers.append(-H[0, 1] / H[0, 0])
            radii.append(math.exp(-2 * S) / abs(H[0, 0].real))
        else:
            centers.append(-H[1, 0] / H[1, 1])
            radii.append(math.exp(-2 * S) / abs(H[1, 1].real))
    wd = WeylDisks(ells, np.array(centers), np.array(radii), side)
    if not wd.nested(1e-6):
        raise NumericalError(f"Weyl disks not nested: radii {wd.radii}")
    return wd


def floquet_schur(p: QPotential, z: complex, theta=None, h=None) -> tuple[complex, complex]:
    """Exact (s_+, s_-) for a periodic potential from the monodromy eigenvectors."""
    P = p.period
    if P is None:
        raise ValueError("needs a periodic potential")
    t = transfer(p, z, P, theta, h)
    vals, vecs = np.linalg.eig(t.scaled)
    order = np.argsort(np.abs(vals))
    if abs(vals[order[0]]) >= abs(vals[order[1]]) * (1 - 1e-12):
        raise NumericalError("monodromy is not hyperbolic at this z")
    dec, grow = vecs[:, order[0]], vecs[:, order[1]]
    return complex(dec[0] / dec[1]), complex(grow[1] / grow[0])


def schur_functions(p: QPotential, z: complex, theta=None, ell: float | None = None, h=None) -> tuple[complex, complex, float]:
    """(s_+, s_-, error bar): exact for d = 1, otherwise from Weyl disks of length ell."""
    if p.period is not None:
        sp, sm = floquet_schur(p, z, theta, h)
        return sp, sm, 0.0
    ell = ell or 40.0 / max(complex(z).imag, 1e-3)
    ells = np.linspace(ell / 4, ell, 4)
    dp = weyl_disk_schur(p, z, ells, "+", theta, h)
    dm = weyl_disk_schur(p, z, ells, "-", theta, h)
    return dp.estimate, dm.estimate, max(dp.error, dm.error)


# ---------------------------------------------------------------------------
# Floquet exponent checks


def _log_integral_tail(U: float, delta: float) -> float:
    """int_U^inf log(1 + delta^2/u^2) du."""
    return math.pi * delta - U * math.log1p(delta**2 / U**2) - 2 * delta * math.atan(U / delta)


def _log_kernel_primitive(u: np.ndarray, delta: float) -> np.ndarray:
    """Antiderivative of log(1 + delta^2/u^2), zero at u = 0."""
    u = np.asarray(u, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        a = np.where(u == 0, 0.0, u * np.log1p(delta**2 / np.where(u == 0, 1.0, u) ** 2))
    return a + 2 * delta * np.arctan(u / delta)


def _edge_points(p: QPotential, lo: float, hi: float, min_gap: float = 1e-8) -> list[float]:
    """Edges of open gaps inside (lo, hi) for periodic potentials; empty otherwise."""
    if p.period is None:
        return []
    ev = hill_eigenvalues(p, max(abs(lo), abs(hi)) + 1.0)
    pts = []
    for a, b in zip(ev[:-1], ev[1:]):
        if b - a > min_gap and abs(discriminant(p, 0.5 * (a + b))) > 2.0:
            pts += [float(a), float(b)]
    return [x for x in pts if lo < x < hi]


def _graded_grid(breaks: list[float], n: int) -> np.ndarray:
    """Nodes clustered like Chebyshev points toward every break, about n in total."""
    total = breaks[-1] - breaks[0]
    pieces = []
    for a, b in zip(breaks[:-1], breaks[1:]):
        m = max(48, int(round(n * (b - a) / total)))
        pieces.append(a + (b - a) * 0.5 * (1 - np.cos(np.pi * np.arange(m + 1) / m)))
    return np.unique(np.concatenate(pieces))


def thouless_rhs(p: QPotential, lam: float, delta: float, span: float = 40.0, n: int = 1201, L: float = 400.0,
                 h=None, threads=None) -> float:
    """int 1/2 log(1 + delta^2/(l - lam)^2) dN(l) with N = rho/pi, free tails beyond the window.

    dN is taken constant on each cell and the kernel integrated exactly there,
    which absorbs the log singularity at l = lam.  For periodic potentials the
    nodes cluster at the band edges, where N has square-root behaviour.
    """
    lo, hi = lam - span, lam + span
    breaks = sorted({lo, hi, float(lam), *_edge_points(p, lo, hi)})
    grid = _graded_grid(breaks, n)
    rho = np.array(_backend.parallel_map(lambda l: rotation_number(p, l, L, h=h), grid, threads))
    G = _log_kernel_primitive(grid - lam, delta)
    body = float(np.sum(np.diff(rho) / np.diff(grid) * 0.5 * np.diff(G)) / math.pi)
    tail = 2 * 0.5 * _log_integral_tail(span, delta) / math.pi
    return body + tail


def gamma_exact(p: QPotential, z: complex, L: float = 200.0, theta=None, h=None) -> float:
    """Lyapunov exponent: monodromy eigenvalue for d = 1, two-length difference otherwise."""
    if p.period is not None:
        t = transfer(p, z, p.period, theta, h)
        ev = np.abs(np.linalg.eigvals(t.scaled))
        return float((math.log(ev.max()) + t.log_scale) / p.period)
    return lyapunov_difference(p, z, L, theta, h)


def floquet_checks(
    p: QPotential,
    ys=(5.0, 10.0, 20.0, 40.0, 80.0),
    thouless_points=(0.0,),
    delta: float = 1.0,
    holder_points: int = 10,
    holder_window: tuple[float, float] = (-1.5, 1.5),
    seed: int = 0,
    L: float = 400.0,
    threads=None,
) -> dict:
    """Report on w(iy) asymptotics, the Thouless identity and local IDS moduli."""
    ys = np.asarray(ys, dtype=float)
    dev = np.array([abs(gamma_exact(p, 1j * y, L) - y) for y in ys])
    scaled = dev * ys
    half = max(1, ys.size // 2)
    C = float(np.max(scaled[:half]))
    asym = {
        "y": ys.tolist(),
        "abs_gamma_minus_y": dev.tolist(),
        "C": C,
        "holds": bool(np.all(scaled[half:] <= 1.05 * C + 1e-12)),
    }
    thou = []
    for lam in thouless_points:
        g0 = gamma_exact(p, lam, L)
        gd = gamma_exact(p, lam + 1j * delta, L)
        rhs = thouless_rhs(p, lam, delta, L=L, threads=threads)
        thou.append({"lam": lam, "gamma": g0, "gamma_shifted": gd, "integral": rhs, "predicted_gamma": gd - rhs,
                     "error": abs(gd - rhs - g0)})
    rng = np.random.default_rng(seed)
    hold = []
    tries = 0
    eps = np.logspace(-4, -2, 5)
    while len(hold) < holder_points and tries < 50 * holder_points:
        tries += 1
        lam = float(rng.uniform(*holder_window))
        if gamma_exact(p, lam, L) > 1e-9:
            continue  # in a gap
        dN = np.array([(rotation_number(p, lam + e, L) - rotation_number(p, lam - e, L)) / math.pi for e in eps])
        if np.any(dN <= 0):
            continue
        slope = float(np.polyfit(np.log(eps), np.log(dN), 1)[0])
        hold.append({"lam": lam, "exponent": slope})
    exps = [r["exponent"] for r in hold]
    return {
        "asymptotics": asym,
        "thouless": thou,
        "holder": {"points": hold, "min": min(exps) if exps else None, "max": max(exps) if exps else None},
    }
