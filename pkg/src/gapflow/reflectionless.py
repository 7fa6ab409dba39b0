"""Schur functions, m-functions and the diagonal resolvent of reflectionless Dirac operators.

Conventions.  The operator is Lambda_phi = diag(i, -i) d/dx + [[0, phi], [conj(phi), 0]]
and its eigenvalue equation reads f' = [[-iz, i phi], [-i conj(phi), iz]] f.
s_+ is f_1/f_2 for the solution square integrable at +infinity, s_- is f_2/f_1
for the one square integrable at -infinity.  m_+- = i(1 + s_+-)/(1 - s_+-) and
R = -2/(m_+ + m_-) is normalized so that R(iy) -> i.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import integrate

from .spectral import EDGE, Divisor, GapSet, SpectralDataError

ComplexFn = Callable[..., np.ndarray]


class PoleError(ArithmeticError):
    """Evaluation hit a pole (s = 1 or a branch point carrying no divisor point)."""


def _sqrt_pair(z: np.ndarray, a: float, b: float) -> np.ndarray:
    """sqrt(z - a) sqrt(z - b) with principal branches: analytic off [a, b], ~ z at infinity."""
    return np.sqrt(z - a) * np.sqrt(z - b)


def schur_zero_potential(z: np.ndarray | complex) -> np.ndarray:
    return np.zeros_like(np.asarray(z, dtype=complex))


def s0(z: np.ndarray | complex, c: float) -> np.ndarray:
    """z/c - sqrt(z^2/c^2 - 1) with the root ~ z/c at infinity; equals e^{-i alpha} on the gap at c cos(alpha)."""
    z = np.asarray(z, dtype=complex)
    return (z - _sqrt_pair(z, -c, c)) / c


@dataclass(frozen=True)
class SchurPair:
    """A pair s_+-(z; x, t) with the potential it belongs to (when known).

    s_plus and s_minus take (z, x, t); potential takes (x, t).  ``params``
    records closed-form family parameters for reports.
    """

    s_plus: ComplexFn
    s_minus: ComplexFn
    potential: Callable[[float, float], complex] | None = None
    params: dict = field(default_factory=dict)

    def splus(self, z, x: float = 0.0, t: float = 0.0) -> np.ndarray:
        return np.asarray(self.s_plus(np.asarray(z, dtype=complex), x, t), dtype=complex)

    def sminus(self, z, x: float = 0.0, t: float = 0.0) -> np.ndarray:
        return np.asarray(self.s_minus(np.asarray(z, dtype=complex), x, t), dtype=complex)

    @classmethod
    def from_samples(cls, z: np.ndarray, s_plus: np.ndarray, s_minus: np.ndarray) -> "SchurPair":
        """Pair known on a grid of real parts at fixed height (linear interpolation in Re z)."""
        z = np.asarray(z, dtype=complex)
        order = np.argsort(z.real)
        xr = z.real[order]
        sp, sm = np.asarray(s_plus, dtype=complex)[order], np.asarray(s_minus, dtype=complex)[order]

        def interp(vals):
            def fn(q, x=0.0, t=0.0):
                q = np.asarray(q, dtype=complex).real
                return np.interp(q, xr, vals.real) + 1j * np.interp(q, xr, vals.imag)

            return fn

        return cls(interp(sp), interp(sm), None, {"kind": "sampled", "n": int(z.size)})


def constant_family(c: float, beta: float = 0.0, omega: float = 0.0) -> SchurPair:
    """Schur pair of the plane wave phi(x, t) = c exp(i(beta - 2 omega x - (4 omega^2 + 2 c^2) t)).

    omega = 0 gives the constant solutions c e^{i beta} e^{-2 i c^2 t}; the
    spectrum is R minus the gap (omega - c, omega + c).
    """
    if c <= 0:
        raise SpectralDataError("amplitude c must be positive")

    def phase(x, t):
        return beta - 2.0 * omega * x - (4.0 * omega**2 + 2.0 * c**2) * t

    def sp(z, x=0.0, t=0.0):
        return np.exp(1j * phase(x, t)) * s0(np.asarray(z) - omega, c)

    def sm(z, x=0.0, t=0.0):
        return np.exp(-1j * phase(x, t)) * s0(np.asarray(z) - omega, c)

    def pot(x, t=0.0):
        return c * np.exp(1j * phase(x, t))

    return SchurPair(sp, sm, pot, {"kind": "constant", "c": c, "beta": beta, "omega": omega})


def zero_pair() -> SchurPair:
    def zero(z, x=0.0, t=0.0):
        return schur_zero_potential(z)

    return SchurPair(zero, zero, lambda x, t=0.0: 0j, {"kind": "zero"})


# ---------------------------------------------------------------------------
# resolvent


def resolvent_product(z, g: GapSet, D: Divisor) -> np.ndarray:
    """R(z) = i prod_j (z - mu_j) / (sqrt(z - a_j) sqrt(z - b_j)).

    Pairing the two roots of each gap gives a factor analytic off [a_j, b_j]
    that tends to 1 at infinity, so no branch tracking is needed; on a gap the
    factor is real and R is real and increasing there.  The sheet signs do not
    enter (R is single valued on the domain).  At a branch point without a
    divisor point the value is non-finite.
    """
    D.validate(g)
    z = np.asarray(z, dtype=complex)
    out = np.full(z.shape, 1j, dtype=complex)
    with np.errstate(divide="ignore", invalid="ignore"):
        for (a, b), mu in zip(g.gaps, D.mu):
            if mu == a:
                out = out * np.sqrt(z - a) / np.sqrt(z - b)
            elif mu == b:
                out = out * np.sqrt(z - b) / np.sqrt(z - a)
            else:
                out = out * (z - mu) / _sqrt_pair(z, a, b)
    out = np.where(np.isfinite(out), out, complex(np.inf, np.inf))
    return out


def resolvent_chi(z: complex, g: GapSet, D: Divisor) -> complex:
    """Exponential Herglotz representation R = i exp(int chi(xi)/(xi - z) d xi).

    chi = 1/2 on (a_j, mu_j) and -1/2 on (mu_j, b_j); integrals by adaptive quadrature.
    """
    D.validate(g)
    z = complex(z)
    total = 0j
    for (a, b), mu in zip(g.gaps, D.mu):
        for lo, hi, w in ((a, mu, 0.5), (mu, b, -0.5)):
            if hi <= lo:
                continue
            re = integrate.quad(lambda s: ((s - z) ** -1).real, lo, hi, epsabs=1e-14, epsrel=1e-13, limit=200)[0]
            im = integrate.quad(lambda s: ((s - z) ** -1).imag, lo, hi, epsabs=1e-14, epsrel=1e-13, limit=200)[0]
            total += w * complex(re, im)
    return 1j * complex(np.exp(total))


def resolvent_from_pair(pair: SchurPair, z, x: float = 0.0, t: float = 0.0) -> np.ndarray:
    """R = i (1 - s_+)(1 - s_-)/(1 - s_+ s_-)."""
    sp, sm = pair.splus(z, x, t), pair.sminus(z, x, t)
    return 1j * (1 - sp) * (1 - sm) / (1 - sp * sm)


def trace_scalars(D: Divisor, g: GapSet) -> tuple[float, float]:
    """Q1 = sum(a + b - 2 mu), Q2 = sum(a^2 + b^2 - 2 mu^2)."""
    if len(D) != len(g):
        raise SpectralDataError("divisor and gap set differ in length")
    mu = np.asarray(D.mu, dtype=float)
    a, b = g.a, g.b
    return float(np.sum(a + b - 2 * mu)), float(np.sum(a * a + b * b - 2 * mu * mu))


def reconstruct_field(D: Divisor, D_rot: Divisor, g: GapSet) -> complex:
    """phi = -Q1(D)/2 + i (-Q1(D_rot)/2), D_rot being the divisor of -i phi."""
    D.validate(g)
    D_rot.validate(g)
    return complex(-0.5 * trace_scalars(D, g)[0], -0.5 * trace_scalars(D_rot, g)[0])


def divisor_from_schur(pair: SchurPair, g: GapSet, grid: int = 257, x: float = 0.0, t: float = 0.0) -> Divisor:
    """Locate mu_j as the zero of R on (a_j, b_j) and read eps_j from which s equals 1 there."""
    mus, signs = [], []
    for a, b in g.gaps:
        xs = np.linspace(a, b, grid + 2)[1:-1]
        r = resolvent_from_pair(pair, xs + 0j, x, t)
        if np.max(np.abs(r.imag)) > 1e-8 * max(1.0, float(np.max(np.abs(r.real)))):
            raise SpectralDataError("R is not real on the gap; Schur data is not reflectionless there")
        rr = r.real
        if np.all(rr > 0):
            mus.append(a)
            signs.append(EDGE)
            continue
        if np.all(rr < 0):
            mus.append(b)
            signs.append(EDGE)
            continue
        if np.any(np.diff(np.sign(rr)) < 0):
            raise SpectralDataError("R is not increasing on the gap")
        k = int(np.argmax(rr >= 0))
        if rr[k] == 0.0:
            root = float(xs[k])
        else:
            f = lambda s: float(resolvent_from_pair(pair, complex(s), x, t).real)  # noqa: E731
            root = _bisect(f, float(xs[k - 1]), float(xs[k]), 1e-13 * (b - a))
        mus.append(root)
        dp = abs(1 - complex(pair.splus(root + 0j, x, t)))
        dm = abs(1 - complex(pair.sminus(root + 0j, x, t)))
        signs.append(1 if dp <= dm else -1)
    return Divisor(tuple(mus), tuple(signs))


def _bisect(f, lo: float, hi: float, tol: float) -> float:
    flo = f(lo)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        fm = f(mid)
        if (fm < 0) == (flo < 0):
            lo, flo = mid, fm
        else:
            hi = mid
        if hi - lo <= tol:
            break
    return 0.5 * (lo + hi)


def m_and_borel(pair: SchurPair, z, x: float = 0.0, t: float = 0.0) -> tuple[complex, complex, complex]:
    """(m_+, m_-, M) with m = i(1 + s)/(1 - s) and M = (m_+ m_- - 1)/(m_+ + m_-)."""
    sp, sm = complex(pair.splus(z, x, t)), complex(pair.sminus(z, x, t))
    if sp == 1 or sm == 1:
        raise PoleError("Schur function equals 1")
    mp = 1j * (1 + sp) / (1 - sp)
    mm = 1j * (1 + sm) / (1 - sm)
    return mp, mm, (mp * mm - 1) / (mp + mm)


def m_from_schur(s: complex) -> complex:
    if s == 1:
        raise PoleError("Schur function equals 1")
    return 1j * (1 + s) / (1 - s)


def lax_time_matrix(z: complex, phi: complex, dphi: complex, kappa_t: float = 2.0) -> np.ndarray:
    """Time part V of the Lax pair; kappa_t = 2 reproduces i u_t = -u_xx + 2|u|^2 u."""
    k = kappa_t / 2.0
    return k * np.array(
        [
            [-2j * z * z - 1j * abs(phi) ** 2, 2j * phi * z - dphi],
            [-2j * np.conj(phi) * z - np.conj(dphi), 2j * z * z + 1j * abs(phi) ** 2],
        ]
    )


def riccati_residuals(
    pair: SchurPair,
    z: complex,
    flow: str = "space",
    x: float = 0.0,
    t: float = 0.0,
    kappa_t: float = 2.0,
    h: float = 1e-4,
) -> float:
    """|LHS - RHS| of the Riccati equation obeyed by s_+ along x or t.

    space: s' = i conj(phi) s^2 - 2iz s + i phi.
    time:  s_t = V12 + (V11 - V22) s - V21 s^2 with V the Lax time matrix.
    Derivatives of s and phi use fourth-order central differences.
    """
    if pair.potential is None:
        raise SpectralDataError("Riccati residuals need the potential")
    phi = complex(pair.potential(x, t))

    def d(fn, var):
        if var == "x":
            pts = [fn(x + k * h, t) for k in (-2, -1, 1, 2)]
        else:
            pts = [fn(x, t + k * h) for k in (-2, -1, 1, 2)]
        return (pts[0] - 8 * pts[1] + 8 * pts[2] - pts[3]) / (12 * h)

    s = complex(pair.splus(z, x, t))
    if flow == "space":
        ds = d(lambda xx, tt: complex(pair.splus(z, xx, tt)), "x")
        rhs = 1j * np.conj(phi) * s * s - 2j * z * s + 1j * phi
        return float(abs(ds - rhs))
    if flow == "time":
        dphi = d(lambda xx, tt: complex(pair.potential(xx, tt)), "x")
        V = lax_time_matrix(z, phi, dphi, kappa_t)
        ds = d(lambda xx, tt: complex(pair.splus(z, xx, tt)), "t")
        rhs = V[0, 1] + (V[0, 0] - V[1, 1]) * s - V[1, 0] * s * s
        return float(abs(ds - rhs))
    raise ValueError(f"unknown flow {flow!r}")


def herglotz_check(g: GapSet, D: Divisor, zs: np.ndarray) -> float:
    """Minimum of Im R over the sample points (positive for a Herglotz function)."""
    return float(np.min(resolvent_product(zs, g, D).imag))


def constant_divisor(c: float, beta: float, omega: float = 0.0) -> tuple[GapSet, Divisor]:
    """Gap set and divisor of c e^{i beta} e^{-2 i omega x} at x = 0: mu = omega + c cos(beta), eps = sgn sin(beta)."""
    g = GapSet(((omega - c, omega + c),))
    mu = omega + c * math.cos(beta)
    sb = math.sin(beta)
    if abs(sb) < 1e-15:
        mu = omega + (c if math.cos(beta) > 0 else -c)
        eps = EDGE
    else:
        eps = 1 if sb > 0 else -1
    return g, Divisor((mu,), (eps,))
