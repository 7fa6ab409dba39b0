"""One averaging step at a gap edge and the resulting gap-length certificate.

Near the left edge lam of a gap the cocycle is assumed reduced to the
parabolic constant A = 1/2 [[i z, -i z], [i z, -i z]] (z = zeta > 0) by a
quasiperiodic B(theta) in SU(1,1).  Moving the energy to lam + Delta adds
Delta P(theta) with P = B^{-1} diag(-i, i) B.  Solving

    d_omega Y - [A, Y] = Delta (P - [P])

and conjugating by X = exp(Y) leaves A~ + Delta^2 P~ with A~ = A + Delta [P];
the sign of d(Delta) = det A~ decides whether lam + Delta is in the spectrum.

Fourier modes are exp(i <n, theta>) and |n| is the l1 length, so
||F||_r = sum_n ||F^(n)|| exp(|n| r) with the operator norm on coefficients.
The right edge is handled by the reflection z -> -z, which maps A to -A;
every formula below then holds with zeta replaced by -zeta.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

SU11_TOL = 1e-8


class ModelError(ValueError):
    """The data do not describe an SU(1,1) conjugation."""


class SmallDivisorError(ArithmeticError):
    def __init__(self, n, value, floor):
        self.n = tuple(int(v) for v in n)
        self.value = float(value)
        self.floor = float(floor)
        super().__init__(f"|<n, omega>| = {value:.3e} below the floor {floor:.3e} at n = {self.n}")


def d_tau(tau: float) -> float:
    """D_tau = 2^(3 tau + 8) Gamma(3 tau + 1)."""
    return 2.0 ** (3 * tau + 8) * math.gamma(3 * tau + 1)


def _opnorm(C: np.ndarray) -> np.ndarray:
    """Spectral norms of a stack of 2x2 matrices."""
    s = np.sum(np.abs(C) ** 2, axis=(-2, -1))
    det = C[..., 0, 0] * C[..., 1, 1] - C[..., 0, 1] * C[..., 1, 0]
    return np.sqrt(0.5 * (s + np.sqrt(np.maximum(s * s - 4 * np.abs(det) ** 2, 0.0))))


@dataclass(frozen=True)
class MatrixSeries:
    """Finite Fourier series of a 2x2 matrix function on T^d."""

    modes: np.ndarray  # (K, d) integers
    coefs: np.ndarray  # (K, 2, 2) complex

    @property
    def d(self) -> int:
        return self.modes.shape[1]

    @property
    def degree(self) -> int:
        return int(np.max(np.abs(self.modes).sum(axis=1))) if len(self.modes) else 0

    def norm(self, r: float = 0.0) -> float:
        if not len(self.modes):
            return 0.0
        return float(np.sum(_opnorm(self.coefs) * np.exp(np.abs(self.modes).sum(axis=1) * r)))

    def mean(self) -> np.ndarray:
        hit = np.all(self.modes == 0, axis=1)
        return self.coefs[hit].sum(axis=0) if np.any(hit) else np.zeros((2, 2), dtype=complex)

    def coefficient(self, n) -> np.ndarray:
        hit = np.all(self.modes == np.asarray(n), axis=1)
        return self.coefs[hit].sum(axis=0) if np.any(hit) else np.zeros((2, 2), dtype=complex)

    def on_grid(self, ng: int) -> np.ndarray:
        """Values at theta_k = 2 pi k / ng, shape (ng,)*d + (2, 2)."""
        if ng <= 2 * self.degree:
            raise ValueError(f"grid of {ng} points aliases degree {self.degree}")
        C = np.zeros((ng,) * self.d + (2, 2), dtype=complex)
        idx = tuple((self.modes % ng).T)
        np.add.at(C, idx, self.coefs)
        axes = tuple(range(self.d))
        return np.fft.ifftn(C, axes=axes) * ng**self.d

    def derivative(self, omega) -> "MatrixSeries":
        k = self.modes @ np.asarray(omega, dtype=float)
        return MatrixSeries(self.modes, 1j * k[:, None, None] * self.coefs)

    def truncated(self, N: int) -> tuple["MatrixSeries", float]:
        """Modes with |n| <= N, and the operator-norm mass of the rest."""
        keep = np.abs(self.modes).sum(axis=1) <= N
        tail = float(np.sum(_opnorm(self.coefs[~keep]))) if np.any(~keep) else 0.0
        return MatrixSeries(self.modes[keep], self.coefs[keep]), tail

    @classmethod
    def from_grid(cls, values: np.ndarray, d: int, drop: float = 0.0) -> "MatrixSeries":
        ng = values.shape[0]
        axes = tuple(range(d))
        C = np.fft.fftn(values, axes=axes) / ng**d
        grid = np.stack(np.meshgrid(*([np.fft.fftfreq(ng, 1.0 / ng).astype(int)] * d), indexing="ij"), -1)
        modes = grid.reshape(-1, d)
        coefs = C.reshape(-1, 2, 2)
        keep = _opnorm(coefs) > drop
        return cls(modes[keep], coefs[keep])


def _scalar_series(coef: dict, d: int) -> tuple[np.ndarray, np.ndarray]:
    modes, vals = [], []
    for n, c in coef.items():
        n = (int(n),) if np.isscalar(n) else tuple(int(v) for v in n)
        if len(n) != d:
            raise ModelError(f"mode {n} does not match dimension {d}")
        modes.append(n)
        vals.append(complex(c))
    return np.asarray(modes, dtype=int).reshape(-1, d), np.asarray(vals, dtype=complex)


def _scalar_on_grid(modes, vals, d, ng) -> np.ndarray:
    C = np.zeros((ng,) * d, dtype=complex)
    np.add.at(C, tuple((modes % ng).T), vals)
    return np.fft.ifftn(C) * ng**d


@dataclass(frozen=True)
class ParabolicModel:
    """zeta, B = [[b11, b12], [conj b12, conj b11]] as Fourier coefficients, omega in DC(kappa, tau), strip R."""

    zeta: float
    omega: tuple[float, ...]
    b11: dict
    b12: dict
    kappa: float
    tau: float
    R: float
    _B: MatrixSeries = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        omega = tuple(float(w) for w in np.atleast_1d(self.omega))
        object.__setattr__(self, "omega", omega)
        if not self.zeta > 0:
            raise ModelError("zeta must be positive")
        if not (self.kappa > 0 and self.tau >= 0 and self.R > 0):
            raise ModelError("need kappa > 0, tau >= 0, R > 0")
        d = len(omega)
        m11, v11 = _scalar_series(self.b11, d)
        m12, v12 = _scalar_series(self.b12, d)
        # B^(n) = [[b11^(n), b12^(n)], [conj b12^(-n), conj b11^(-n)]]
        rows = {}
        for n, c in zip(map(tuple, m11), v11):
            rows.setdefault(n, np.zeros((2, 2), dtype=complex))[0, 0] += c
            rows.setdefault(tuple(-v for v in n), np.zeros((2, 2), dtype=complex))[1, 1] += np.conj(c)
        for n, c in zip(map(tuple, m12), v12):
            rows.setdefault(n, np.zeros((2, 2), dtype=complex))[0, 1] += c
            rows.setdefault(tuple(-v for v in n), np.zeros((2, 2), dtype=complex))[1, 0] += np.conj(c)
        keys = sorted(rows)
        B = MatrixSeries(np.asarray(keys, dtype=int).reshape(-1, d), np.asarray([rows[k] for k in keys]).reshape(-1, 2, 2))
        object.__setattr__(self, "_B", B)
        vals = B.on_grid(self.grid_size())
        det = vals[..., 0, 0] * vals[..., 1, 1] - vals[..., 0, 1] * vals[..., 1, 0]
        defect = float(np.max(np.abs(det - 1.0)))
        if defect > SU11_TOL:
            raise ModelError(f"|b11|^2 - |b12|^2 deviates from 1 by {defect:.2e} on the sampling grid")

    @property
    def d(self) -> int:
        return len(self.omega)

    @property
    def B(self) -> MatrixSeries:
        return self._B

    def grid_size(self, degree: int | None = None) -> int:
        deg = self._B.degree if degree is None else degree
        return max(8, 2 * deg + 2)

    def norm_B(self, r: float | None = None) -> float:
        return self._B.norm(self.R if r is None else r)

    def delta_bound(self) -> float:
        """|Delta| below D_tau^-1 kappa^3 R^(3 tau + 1) ||B||_R^-2 makes the step admissible."""
        return self.kappa**3 * self.R ** (3 * self.tau + 1) / (d_tau(self.tau) * self.norm_B() ** 2)

    def to_json(self) -> dict:
        enc = lambda c: [[list(k) if isinstance(k, tuple) else [int(k)], [complex(v).real, complex(v).imag]] for k, v in c.items()]
        return {"zeta": self.zeta, "omega": list(self.omega), "b11": enc(self.b11), "b12": enc(self.b12),
                "kappa": self.kappa, "tau": self.tau, "R": self.R}

    @classmethod
    def from_json(cls, obj: dict) -> "ParabolicModel":
        dec = lambda rows: {tuple(int(v) for v in n): complex(c[0], c[1]) for n, c in rows}
        return cls(float(obj["zeta"]), tuple(obj["omega"]), dec(obj["b11"]), dec(obj["b12"]),
                   float(obj["kappa"]), float(obj["tau"]), float(obj["R"]))

    @classmethod
    def identity(cls, zeta: float, omega=(1.0,), kappa: float = 1.0, tau: float = 0.0, R: float = 1.0) -> "ParabolicModel":
        d = len(np.atleast_1d(omega))
        return cls(zeta, tuple(np.atleast_1d(omega)), {(0,) * d: 1.0}, {}, kappa, tau, R)

    @classmethod
    def hyperbolic(cls, zeta: float, r: float, **kw) -> "ParabolicModel":
        omega = kw.pop("omega", (1.0,))
        d = len(np.atleast_1d(omega))
        return cls(zeta, tuple(np.atleast_1d(omega)), {(0,) * d: math.cosh(r)}, {(0,) * d: math.sinh(r)}, kw.get("kappa", 1.0),
                   kw.get("tau", 0.0), kw.get("R", 1.0))

    @classmethod
    def random(cls, rng: np.random.Generator, zeta: float = 0.1, omega=(1.0,), factors: int = 2, max_mode: int = 2,
               strength: float = 0.4, kappa: float = 1.0, tau: float = 0.0, R: float = 1.0) -> "ParabolicModel":
        """Product C_0 D(n_1) C_1 ... D(n_k) C_k of constant SU(1,1) factors and diagonal rotations exp(+-i<n, theta>)."""
        omega = tuple(np.atleast_1d(omega))
        d = len(omega)

        def const():
            r = strength * rng.standard_normal()
            a, b = rng.uniform(0, 2 * np.pi, 2)
            return np.array([[math.cosh(r) * np.exp(1j * a), math.sinh(r) * np.exp(1j * b)],
                             [math.sinh(r) * np.exp(-1j * b), math.cosh(r) * np.exp(-1j * a)]])

        ns = [rng.integers(-max_mode, max_mode + 1, d) for _ in range(factors)]
        deg = sum(int(np.abs(n).sum()) for n in ns)
        ng = max(8, 2 * deg + 2)
        th = np.stack(np.meshgrid(*([2 * np.pi * np.arange(ng) / ng] * d), indexing="ij"), -1)
        M = np.broadcast_to(const(), th.shape[:-1] + (2, 2)).copy()
        for n in ns:
            ph = th @ n
            D = np.zeros(th.shape[:-1] + (2, 2), dtype=complex)
            D[..., 0, 0] = np.exp(1j * ph)
            D[..., 1, 1] = np.exp(-1j * ph)
            M = M @ D @ const()
        S = MatrixSeries.from_grid(M, d, drop=1e-15)
        b11 = {tuple(int(v) for v in n): complex(c[0, 0]) for n, c in zip(S.modes, S.coefs) if abs(c[0, 0]) > 1e-15}
        b12 = {tuple(int(v) for v in n): complex(c[0, 1]) for n, c in zip(S.modes, S.coefs) if abs(c[0, 1]) > 1e-15}
        return cls(zeta, omega, b11, b12, kappa, tau, R)


def parabolic_matrix(zeta: float, edge: str = "left") -> np.ndarray:
    z = _signed(zeta, edge)
    return 0.5 * np.array([[1j * z, -1j * z], [1j * z, -1j * z]])


def _signed(zeta: float, edge: str) -> float:
    if edge not in ("left", "right"):
        raise ValueError("edge is 'left' or 'right'")
    return zeta if edge == "left" else -zeta


def perturbation_from_conjugation(m: ParabolicModel) -> MatrixSeries:
    """P = B^-1 diag(-i, i) B: diagonal -+i(|b11|^2 + |b12|^2), P12 = -2i conj(b11) b12, P21 = 2i b11 conj(b12)."""
    d = m.d
    ng = m.grid_size(2 * m.B.degree)
    m11, v11 = _scalar_series(m.b11, d)
    m12, v12 = _scalar_series(m.b12, d)
    b11 = _scalar_on_grid(m11, v11, d, ng)
    b12 = _scalar_on_grid(m12, v12, d, ng)
    if np.max(np.abs(np.abs(b11) ** 2 - np.abs(b12) ** 2 - 1.0)) > SU11_TOL:
        raise ModelError("B is not in SU(1,1) on the grid")
    s = np.abs(b11) ** 2 + np.abs(b12) ** 2
    P = np.empty(b11.shape + (2, 2), dtype=complex)
    P[..., 0, 0] = -1j * s
    P[..., 0, 1] = -2j * np.conj(b11) * b12
    P[..., 1, 0] = 2j * b11 * np.conj(b12)
    P[..., 1, 1] = 1j * s
    # quadratic in B, so this grid reproduces the convolution exactly
    return MatrixSeries.from_grid(P, d, drop=1e-16)


def _lattice(d: int, N: int) -> np.ndarray:
    pts = np.array(list(itertools.product(range(-N, N + 1), repeat=d)), dtype=int).reshape(-1, d)
    l1 = np.abs(pts).sum(axis=1)
    return pts[(l1 > 0) & (l1 <= N)]


def homological_coefficients(k, zeta: float, delta: float, P11, P12, P21):
    """Y^(n) for the mode with frequency k = <n, omega> from P^(n); returns (Y11, Y12, Y21), Y22 = -Y11."""
    k = np.asarray(k, dtype=float)
    z = zeta
    c = 1j * delta / (2 * k**3)
    Y11 = c * ((-2 * k**2 + 2 * z**2) * P11 + (k * z + z**2) * P12 + (k * z - z**2) * P21)
    Y12 = c * (-2 * z * (k + z) * P11 - (2 * k**2 + 2 * k * z + z**2) * P12 + z**2 * P21)
    Y21 = c * (-2 * z * (k - z) * P11 + z**2 * P12 + (2 * z * k - 2 * k**2 - z**2) * P21)
    return Y11, Y12, Y21


@dataclass(frozen=True)
class HomologicalSolution:
    Y: MatrixSeries
    residual: float
    relative_residual: float
    tail: float
    N: int
    floor: float


def homological_solve(m: ParabolicModel, P: MatrixSeries, delta: float, N: int = 64, edge: str = "left",
                      enforce_smallness: bool = True) -> HomologicalSolution:
    """Solve d_omega Y - [A, Y] = Delta (P - [P]) over 0 < |n| <= N.

    The residual is evaluated pointwise on a grid fine enough for both Y and P,
    so modes of P beyond N show up in it.  enforce_smallness=False skips the
    admissibility bound on Delta (the equation itself is linear in Delta).
    """
    if enforce_smallness and abs(delta) >= m.delta_bound():
        raise ModelError(f"|Delta| = {abs(delta):.3e} violates the bound {m.delta_bound():.3e}")
    if P.d != m.d:
        raise ModelError("P and the model live on different tori")
    z = _signed(m.zeta, edge)
    omega = np.asarray(m.omega)
    floor = m.kappa / (2.0 * N**m.tau)
    Pt, tail = P.truncated(N)
    nz = ~np.all(Pt.modes == 0, axis=1) & (_opnorm(Pt.coefs) > 0)
    modes, coefs = Pt.modes[nz], Pt.coefs[nz]
    k = modes @ omega
    if len(k):
        bad = int(np.argmin(np.abs(k)))
        if abs(k[bad]) < floor:
            raise SmallDivisorError(modes[bad], k[bad], floor)
    Y11, Y12, Y21 = homological_coefficients(k, z, delta, coefs[:, 0, 0], coefs[:, 0, 1], coefs[:, 1, 0])
    Yc = np.empty((len(k), 2, 2), dtype=complex)
    Yc[:, 0, 0], Yc[:, 0, 1], Yc[:, 1, 0], Yc[:, 1, 1] = Y11, Y12, Y21, -Y11
    Y = MatrixSeries(modes.reshape(-1, m.d), Yc)
    ng = m.grid_size(max(Y.degree, P.degree))
    A = parabolic_matrix(m.zeta, edge)
    Yg = Y.on_grid(ng) if len(k) else np.zeros((ng,) * m.d + (2, 2), dtype=complex)
    dYg = Y.derivative(omega).on_grid(ng) if len(k) else np.zeros_like(Yg)
    Pg = P.on_grid(ng)
    res = dYg - (A @ Yg - Yg @ A) - delta * (Pg - P.mean())
    residual = float(np.max(np.abs(res)))
    scale = abs(delta) * float(np.max(np.abs(Pg - P.mean())))
    return HomologicalSolution(Y, residual, residual / scale if scale > 0 else residual, tail, N, floor)


@dataclass(frozen=True)
class DeterminantReport:
    delta: float
    d_factorized: float
    d_direct: float
    denominator: float
    mean_S: float
    mean_c: complex
    A_tilde: np.ndarray

    @property
    def difference(self) -> float:
        return abs(self.d_factorized - self.d_direct)

    def to_json(self) -> dict:
        return {"delta": self.delta, "d_factorized": self.d_factorized, "d_direct": self.d_direct,
                "difference": self.difference, "denominator": self.denominator}


def averaged_determinant(m: ParabolicModel, delta: float, P: MatrixSeries | None = None, edge: str = "left") -> DeterminantReport:
    """d(Delta) = det(A + Delta [P]) two ways.

    With S = [|b11|^2 + |b12|^2], c = [b11 conj b12] and den = S^2 - 4|c|^2,
    d(Delta) = Delta den (Delta - zeta (S + 2 Re c) / den).
    """
    P = perturbation_from_conjugation(m) if P is None else P
    Pm = P.mean()
    S = float((1j * Pm[0, 0]).real)
    c = complex(Pm[1, 0] / 2j)
    den = S * S - 4 * abs(c) ** 2
    if den < 1 - 1e-8:
        raise ModelError(f"denominator {den:.6g} < 1")
    z = _signed(m.zeta, edge)
    At = parabolic_matrix(m.zeta, edge) + delta * Pm
    direct = At[0, 0] * At[1, 1] - At[0, 1] * At[1, 0]
    if abs(direct.imag) > 1e-10 * (1 + abs(direct)):
        raise ModelError("det of the averaged matrix is not real")
    fact = delta * den * (delta - z * (S + 2 * c.real) / den)
    return DeterminantReport(float(delta), float(fact), float(direct.real), den, S, c, At)


@dataclass(frozen=True)
class AveragedModel:
    A_tilde: np.ndarray
    delta: float
    d: float
    Y: MatrixSeries
    residual: float
    mean_P: np.ndarray


def average(m: ParabolicModel, delta: float, N: int = 64, edge: str = "left", enforce_smallness: bool = True) -> AveragedModel:
    P = perturbation_from_conjugation(m)
    sol = homological_solve(m, P, delta, N, edge, enforce_smallness)
    det = averaged_determinant(m, delta, P, edge)
    return AveragedModel(det.A_tilde, delta, det.d_direct, sol.Y, sol.residual, P.mean())


def _expm2(Y: np.ndarray, dY: np.ndarray | None = None):
    """exp of traceless 2x2 stacks and, optionally, its directional derivative along dY."""
    q2 = Y[..., 0, 0] ** 2 + Y[..., 0, 1] * Y[..., 1, 0]
    q = np.sqrt(q2.astype(complex))
    small = np.abs(q2) < 1e-8
    qs = np.where(small, 1.0, q)
    ch = np.where(small, 1 + q2 / 2 + q2**2 / 24, np.cosh(qs))
    sh = np.where(small, 1 + q2 / 6 + q2**2 / 120, np.sinh(qs) / qs)
    I = np.eye(2)
    X = ch[..., None, None] * I + sh[..., None, None] * Y
    if dY is None:
        return X
    dq2 = 2 * Y[..., 0, 0] * dY[..., 0, 0] + dY[..., 0, 1] * Y[..., 1, 0] + Y[..., 0, 1] * dY[..., 1, 0]
    # d cosh(q) / d(q^2) = sinh(q) / (2q); d (sinh q / q) / d(q^2) = (cosh q - sinh q / q) / (2 q^2)
    dch = 0.5 * sh
    dsh = np.where(small, 1 / 6 + q2 / 60, (ch - sh) / (2 * np.where(small, 1.0, q2)))
    dX = (dch * dq2)[..., None, None] * I + (dsh * dq2)[..., None, None] * Y + sh[..., None, None] * dY
    return X, dX


def conjugation_check(m: ParabolicModel, delta: float, N: int = 64, edge: str = "left",
                      enforce_smallness: bool = True) -> dict:
    """X = exp(Y) turns A + Delta P into A~ + Delta^2 P~; compares ||X - id||, ||P~|| with their bounds at r = R/2."""
    P = perturbation_from_conjugation(m)
    sol = homological_solve(m, P, delta, N, edge, enforce_smallness)
    A = parabolic_matrix(m.zeta, edge)
    At = A + delta * P.mean()
    deg = max(sol.Y.degree, P.degree)
    ng = max(64, 4 * deg + 2)
    Yg = sol.Y.on_grid(ng) if len(sol.Y.modes) else np.zeros((ng,) * m.d + (2, 2), dtype=complex)
    dYg = sol.Y.derivative(m.omega).on_grid(ng) if len(sol.Y.modes) else np.zeros_like(Yg)
    X, dX = _expm2(Yg, dYg)
    Xi = np.empty_like(X)
    Xi[..., 0, 0], Xi[..., 1, 1] = X[..., 1, 1], X[..., 0, 0]
    Xi[..., 0, 1], Xi[..., 1, 0] = -X[..., 0, 1], -X[..., 1, 0]
    M = A + delta * P.on_grid(ng)
    new = Xi @ M @ X - Xi @ dX
    Ptil = MatrixSeries.from_grid((new - At) / delta**2, m.d)
    Xm = MatrixSeries.from_grid(X - np.eye(2), m.d)
    r = m.R / 2
    D, nB = d_tau(m.tau), m.norm_B()
    x_bound = 2 * D * m.kappa**-3 * m.R ** -(3 * m.tau + 1) * abs(delta) * nB**2
    p_bound = D**2 * m.kappa**-6 * m.R ** (-2 * (3 * m.tau + 1)) * nB**4
    roundoff = 1e-15 * float(np.max(np.abs(M))) / delta**2 * ng**m.d
    x_norm, p_norm = Xm.norm(r), Ptil.norm(r)
    return {"delta": delta, "x_minus_id": x_norm, "x_bound": x_bound, "p_tilde": p_norm, "p_bound": p_bound,
            "roundoff_floor": roundoff, "residual": sol.residual,
            "holds": bool(x_norm <= x_bound and p_norm <= p_bound + roundoff)}


def certificate_hypothesis(norm_B: float, zeta: float, kappa: float, tau: float, R: float, nu: float) -> tuple[float, float, bool]:
    """(lhs, rhs, lhs < rhs) for ||B||_R^4 zeta^nu < 2^-6 D_tau^-2 kappa^6 R^(2(3 tau + 1))."""
    if not 0 < nu < 0.25:
        raise ValueError(f"nu = {nu} outside (0, 1/4)")
    lhs = norm_B**4 * zeta**nu
    rhs = 2.0**-6 * d_tau(tau) ** -2 * kappa**6 * R ** (2 * (3 * tau + 1))
    return lhs, rhs, lhs < rhs


def gap_upper_bound_certificate(m: ParabolicModel, nu: float, R: float | None = None, edge: str = "left") -> dict:
    """Certify |G| <= zeta^(1 - nu) when the smallness hypothesis holds; otherwise verdict 'no certificate'."""
    R = m.R if R is None else float(R)
    nB = m.norm_B(R)
    lhs, rhs, ok = certificate_hypothesis(nB, m.zeta, m.kappa, m.tau, R, nu)
    out = {"edge": edge, "nu": nu, "R": R, "norm_B": nB, "D_tau": d_tau(m.tau), "lhs": lhs, "rhs": rhs,
           "hypothesis": ok}
    if not ok:
        out["verdict"] = "no certificate"
        return out
    delta = m.zeta ** (1 - nu)
    step = delta if edge == "left" else -delta
    det = averaged_determinant(m, step, edge=edge)
    dval = det.d_direct
    u2 = 8 * (m.zeta + delta * nB**2) / math.sqrt(dval) if dval > 0 else math.inf
    disp = delta**2 * u2 * d_tau(m.tau) ** 2 * m.kappa**-6 * R ** (-2 * (3 * m.tau + 1)) * nB**4
    checks = {
        "d_lower": dval >= 0.25 * delta**2,
        "displacement": disp <= 0.25 * delta,
        "rotation_positive": dval > 0 and math.sqrt(dval) - disp >= 0.25 * delta,
    }
    out.update(delta=delta, d=dval, d_factorized=det.d_factorized, U_norm2_bound=u2, displacement=disp,
               checks=checks, bound=delta)
    out["verdict"] = "certified" if all(checks.values()) else "inconsistent"
    return out
