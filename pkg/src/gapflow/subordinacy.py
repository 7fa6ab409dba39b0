"""Partial norms, the epsilon(xi, L) duality, and the Jitomirskaya-Last two-sided bound.

For real lam the transfer matrix is T = [[A, B], [conj(B), conj(A)]], and
n_+- = ||A +- xi B||_L are L^2 norms over [0, L].  epsilon(xi, L) solves
2 epsilon n_+ n_- = 1.  With s = s_+(lam + i epsilon) and F = (1 + xi s)/(1 - xi s)
the ratio |F| n_+/n_- stays within [3 - sqrt 8, 3 + sqrt 8].
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .direct import NumericalError, QPotential, floquet_schur, propagate, weyl_disk_schur

C_MINUS = 3.0 - math.sqrt(8.0)
C_PLUS = 3.0 + math.sqrt(8.0)


@dataclass(frozen=True)
class PartialNorms:
    """Norms kept as logarithms (they overflow in gaps)."""

    L: np.ndarray
    xi: complex
    log_n_plus: np.ndarray
    log_n_minus: np.ndarray

    @property
    def n_plus(self) -> np.ndarray:
        return np.exp(self.log_n_plus)

    @property
    def n_minus(self) -> np.ndarray:
        return np.exp(self.log_n_minus)

    @property
    def log_product(self) -> np.ndarray:
        return self.log_n_plus + self.log_n_minus


def partial_norms(p: QPotential, lam: float, xi: complex | list, L, theta=None, h=None) -> PartialNorms | list:
    """n_+-(L) for one or several unimodular xi, all L sharing one integration pass."""
    many = isinstance(xi, (list, tuple, np.ndarray))
    xis = np.atleast_1d(np.asarray(xi, dtype=complex))
    if np.any(np.abs(np.abs(xis) - 1.0) > 1e-12):
        raise ValueError("xi must be unimodular")
    Ls = np.atleast_1d(np.asarray(L, dtype=float))
    if np.any(Ls <= 0):
        raise ValueError("lengths must be positive")
    hh = h
    if hh is None:
        # a step dividing every requested length keeps the norms exact on the grid
        hh = float(np.min(Ls)) / math.ceil(float(np.min(Ls)) / 0.01)
    pr = propagate(p, float(lam), Ls, theta, hh, xis)
    out = [PartialNorms(Ls, complex(x), 0.5 * pr.lognorm2[:, j, 0], 0.5 * pr.lognorm2[:, j, 1]) for j, x in enumerate(xis)]
    return out if many else out[0]


def log_epsilon_of_L(norms: PartialNorms) -> np.ndarray:
    return -math.log(2.0) - norms.log_product


def epsilon_of_L(norms: PartialNorms) -> np.ndarray:
    """1/(2 n_+ n_-); underflows to 0 deep in gaps (use log_epsilon_of_L there)."""
    return np.exp(log_epsilon_of_L(norms))


def schur_plus(p: QPotential, z: complex, theta=None, ell=None) -> tuple[complex, float]:
    """s_+(z) and its error bar; z may be real (limit from above) for periodic potentials."""
    if p.period is not None:
        return floquet_schur(p, z, theta)[0], 0.0
    if complex(z).imag <= 0:
        raise NumericalError("Weyl disks need Im z > 0")
    ell = ell or min(1.0e5, 10.0 / complex(z).imag)
    d = weyl_disk_schur(p, z, np.linspace(ell / 4, ell, 4), "+", theta)
    return d.estimate, d.error


def schur_minus(p: QPotential, z: complex, theta=None, ell=None) -> tuple[complex, float]:
    if p.period is not None:
        return floquet_schur(p, z, theta)[1], 0.0
    if complex(z).imag <= 0:
        raise NumericalError("Weyl disks need Im z > 0")
    ell = ell or min(1.0e5, 10.0 / complex(z).imag)
    d = weyl_disk_schur(p, z, np.linspace(ell / 4, ell, 4), "-", theta)
    return d.estimate, d.error


def jl_ratio_check(p: QPotential, lam: float, xis, Ls, theta=None, resolve: float = 1e-6) -> dict:
    """Rows (xi, L, epsilon, ratio, inside) for every pair; unresolved Schur values are inconclusive."""
    rows = []
    norms = partial_norms(p, lam, list(np.atleast_1d(xis)), Ls, theta)
    for nm in norms:
        leps = log_epsilon_of_L(nm)
        for L, le, lp, lm in zip(nm.L, leps, nm.log_n_plus, nm.log_n_minus):
            eps = math.exp(le) if le > -700 else 0.0
            row = {"xi": [nm.xi.real, nm.xi.imag], "L": float(L), "log_epsilon": float(le)}
            try:
                s, err = schur_plus(p, complex(lam, eps), theta)
            except NumericalError as exc:
                row.update(status="inconclusive", reason=str(exc))
                rows.append(row)
                continue
            if err > resolve:
                row.update(status="inconclusive", reason=f"Weyl radius {err:.2e}")
                rows.append(row)
                continue
            F = (1 + nm.xi * s) / (1 - nm.xi * s)
            ratio = abs(F) * math.exp(lp - lm)
            inside = C_MINUS * (1 - 1e-9) <= ratio <= C_PLUS * (1 + 1e-9)
            row.update(status="pass" if inside else "fail", ratio=ratio, abs_F=abs(F), schur=[s.real, s.imag])
            rows.append(row)
    verdict = "fail" if any(r["status"] == "fail" for r in rows) else (
        "pass" if any(r["status"] == "pass" for r in rows) else "inconclusive")
    return {"lam": lam, "band": [C_MINUS, C_PLUS], "rows": rows, "verdict": verdict}


def borel_M(sp: complex, sm: complex) -> complex:
    mp = 1j * (1 + sp) / (1 - sp)
    mm = 1j * (1 + sm) / (1 - sm)
    return (mp * mm - 1) / (mp + mm)


def measure_bound_check(p: QPotential, lam: float, eps_grid, theta=None) -> dict:
    """Im M(lam + i eps) <= 2 (3 + sqrt 8) sup_{0 <= x <= 1/(2 eps)} ||T(lam, x)||^2 for each eps."""
    eps_grid = np.sort(np.atleast_1d(np.asarray(eps_grid, dtype=float)))
    xs = 1.0 / (2.0 * eps_grid)
    hh = float(np.min(xs)) / math.ceil(float(np.min(xs)) / 0.01)
    pr = propagate(p, float(lam), xs, theta, min(hh, 0.01))
    rows = []
    for eps, lm in zip(eps_grid, pr.logmax):
        z = complex(lam, eps)
        try:
            sp, ep = schur_plus(p, z, theta)
            sm, em = schur_minus(p, z, theta)
        except NumericalError as exc:
            rows.append({"eps": float(eps), "status": "inconclusive", "reason": str(exc)})
            continue
        M = borel_M(sp, sm)
        rhs_log = math.log(2 * C_PLUS) + 2 * float(lm)
        ok = M.imag <= 0 or math.log(M.imag) <= rhs_log + 1e-12
        rows.append({"eps": float(eps), "im_M": M.imag, "log_rhs": rhs_log, "schur_error": max(ep, em),
                     "status": "pass" if ok else "fail"})
    verdict = "fail" if any(r["status"] == "fail" for r in rows) else "pass"
    return {"lam": lam, "rows": rows, "verdict": verdict}
