"""Pure numpy transfer-matrix propagation, used when the compiled kernel is unavailable.

propagate(phi, h, z, xis, checkpoints) integrates f' = A(x) f,
A = [[-iz, i phi], [-i conj(phi), iz]], with the fourth-order Magnus step

    Omega_k = h/2 (A1 + A2) + sqrt(3) h^2/12 [A2, A1]

at the two Gauss nodes of each step (phi[k, 0], phi[k, 1] are the samples
there) and returns, at every checkpoint c (a number of steps):

    T       scaled fundamental matrix, T(x_c) = exp(S) * T
    S       log scale
    wind    accumulated arg increments of the first entry of T(x) (1, 1)^T
    logmax  log of max_{x <= x_c} ||T(x)||_2 over the step nodes
    norms   log int_0^{x_c} |A +- xi B|^2 (trapezoid), A = T_11, B = T_12

The step matrices are computed for all steps at once and multiplied
with a Hillis-Steele prefix scan inside chunks; the running product is
renormalized between chunks.
"""

from __future__ import annotations

import math

import numpy as np

SQ3_12 = math.sqrt(3.0) / 12.0


def step_matrices(phi: np.ndarray, h: float, z: complex) -> np.ndarray:
    p1, p2 = phi[:, 0], phi[:, 1]
    iz = 1j * z
    b1, b2 = 1j * p1, 1j * p2
    c1, c2 = -1j * np.conj(p1), -1j * np.conj(p2)
    k2 = SQ3_12 * h * h
    o11 = -h * iz + k2 * (b2 * c1 - b1 * c2)
    o12 = 0.5 * h * (b1 + b2) + k2 * 2.0 * iz * (b2 - b1)
    o21 = 0.5 * h * (c1 + c2) - k2 * 2.0 * iz * (c2 - c1)
    q2 = o11 * o11 + o12 * o21
    q = np.sqrt(q2)
    small = np.abs(q2) < 1e-6
    qs = np.where(small, 1.0, q)
    ch = np.where(small, 1.0 + q2 * (0.5 + q2 * (1 / 24 + q2 / 720)), np.cosh(qs))
    shc = np.where(small, 1.0 + q2 * (1 / 6 + q2 * (1 / 120 + q2 / 5040)), np.sinh(qs) / qs)
    E = np.empty((phi.shape[0], 2, 2), dtype=complex)
    E[:, 0, 0] = ch + shc * o11
    E[:, 0, 1] = shc * o12
    E[:, 1, 0] = shc * o21
    E[:, 1, 1] = ch - shc * o11
    return E


def _prefix(E: np.ndarray) -> np.ndarray:
    """P[k] = E[k] E[k-1] ... E[0]."""
    P = E.copy()
    d = 1
    while d < P.shape[0]:
        P[d:] = P[d:] @ P[:-d]
        d *= 2
    return P


def _opnorm(T: np.ndarray) -> np.ndarray:
    s = np.sum(np.abs(T) ** 2, axis=(-2, -1))
    det = T[..., 0, 0] * T[..., 1, 1] - T[..., 0, 1] * T[..., 1, 0]
    return np.sqrt(0.5 * (s + np.sqrt(np.maximum(s * s - 4 * np.abs(det) ** 2, 0.0))))


def propagate(phi, h: float, z: complex, xis, checkpoints):
    phi = np.ascontiguousarray(phi, dtype=complex)
    xis = np.asarray(xis, dtype=complex)
    cps = np.asarray(checkpoints, dtype=np.int64)
    n = phi.shape[0]
    if np.any(np.diff(cps) < 0) or (cps.size and (cps[0] < 0 or cps[-1] > n)):
        raise ValueError("checkpoints must be sorted step counts within range")
    ncp, nxi = cps.size, xis.size
    T_out = np.empty((ncp, 2, 2), dtype=complex)
    S_out, w_out, m_out = np.empty(ncp), np.empty(ncp), np.empty(ncp)
    n_out = np.empty((ncp, nxi, 2))
    amax = abs(h) * (abs(z) + (np.max(np.abs(phi)) if n else 0.0)) + 1e-300
    chunk = int(max(1, min(1024, 20.0 / amax)))
    T = np.eye(2, dtype=complex)
    S = 0.0
    wind = 0.0
    logmax = 0.0
    acc = np.zeros((nxi, 2))
    hw = 0.5 * abs(h)

    def integrand(Ts):
        A, B = Ts[..., 0, 0], Ts[..., 0, 1]
        return np.stack([np.abs(A[..., None] + xis * B[..., None]) ** 2, np.abs(A[..., None] - xis * B[..., None]) ** 2], -1)

    prev = integrand(T)
    v_old = T[0, 0] + T[0, 1]
    ci = 0

    def record(Tc, Sc, wc, mc, ac):
        nonlocal ci
        T_out[ci] = Tc
        S_out[ci] = Sc
        w_out[ci] = wc
        m_out[ci] = mc
        with np.errstate(divide="ignore"):
            n_out[ci] = np.where(ac > 0, np.log(np.where(ac > 0, ac, 1.0)) + 2 * Sc, -np.inf)
        ci += 1

    while ci < ncp and cps[ci] == 0:
        record(T, 0.0, 0.0, 0.0, acc)
    for start in range(0, n, chunk):
        stop = min(n, start + chunk)
        P = _prefix(step_matrices(phi[start:stop], h, z)) @ T
        v = P[:, 0, 0] + P[:, 0, 1]
        steps = np.angle(v * np.conj(np.concatenate([[v_old], v[:-1]])))
        cw = wind + np.cumsum(steps)
        cm = np.maximum.accumulate(np.maximum(np.log(_opnorm(P)) + S, logmax))
        f = integrand(P)
        fprev = np.concatenate([prev[None], f[:-1]])
        cacc = acc + np.cumsum(hw * (fprev + f), axis=0)
        while ci < ncp and cps[ci] <= stop:
            i = cps[ci] - start - 1
            record(P[i], S, cw[i], cm[i], cacc[i])
        T, wind, logmax, acc, prev, v_old = P[-1], cw[-1], cm[-1], cacc[-1], f[-1], v[-1]
        nrm = float(_opnorm(T))
        if nrm > 1e50:
            T = T / nrm
            v_old = v_old / nrm
            acc = acc / nrm**2
            prev = prev / nrm**2
            S += math.log(nrm)
    return T_out, S_out, w_out, m_out, n_out
