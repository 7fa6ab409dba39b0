# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled transfer-matrix propagation (fourth-order Magnus, Gauss nodes).

See _fallback.propagate for the reference semantics; both return the same arrays.
"""

from libc.math cimport atan2, cos, exp, hypot, log, sin, sqrt, INFINITY

import numpy as np

cdef double RESCALE = 1e100
cdef double SQ3_12 = 0.14433756729740643  # sqrt(3) / 12


cdef inline double complex _mk(double re, double im) noexcept nogil:
    return re + im * 1j


cdef inline double complex _csqrt(double complex w) noexcept nogil:
    cdef double r = hypot(w.real, w.imag)
    cdef double re, im
    if r == 0.0:
        return 0.0
    if w.real >= 0.0:
        re = sqrt(0.5 * (r + w.real))
        im = 0.5 * w.imag / re
    else:
        im = sqrt(0.5 * (r - w.real))
        if w.imag < 0.0:
            im = -im
        re = 0.5 * w.imag / im
    return _mk(re, im)


cdef inline double complex _cexp(double complex w) noexcept nogil:
    cdef double e = exp(w.real)
    return _mk(e * cos(w.imag), e * sin(w.imag))


cdef inline double _abs2(double complex w) noexcept nogil:
    return w.real * w.real + w.imag * w.imag


cdef inline double _opnorm2(double complex a, double complex b, double complex c, double complex d) noexcept nogil:
    """Squared spectral norm of [[a, b], [c, d]]."""
    cdef double s = _abs2(a) + _abs2(b) + _abs2(c) + _abs2(d)
    cdef double complex det = a * d - b * c
    cdef double disc = s * s - 4.0 * _abs2(det)
    if disc < 0.0:
        disc = 0.0
    return 0.5 * (s + sqrt(disc))


cdef inline void _step(double complex z, double complex p1, double complex p2, double h,
                       double complex *e11, double complex *e12,
                       double complex *e21, double complex *e22) noexcept nogil:
    # A(x) = [[-iz, i phi], [-i conj(phi), iz]] at the two Gauss nodes
    cdef double complex iz = z * 1j
    cdef double complex b1 = p1 * 1j, b2 = p2 * 1j
    cdef double complex c1 = -(p1.conjugate()) * 1j, c2 = -(p2.conjugate()) * 1j
    # Omega = h/2 (A1 + A2) + sqrt(3) h^2 / 12 [A2, A1]
    cdef double complex com11 = b2 * c1 - b1 * c2
    cdef double complex com12 = 2.0 * iz * (b2 - b1)
    cdef double complex com21 = -2.0 * iz * (c2 - c1)
    cdef double k2 = SQ3_12 * h * h
    cdef double complex o11 = 0.5 * h * (-2.0 * iz) + k2 * com11
    cdef double complex o12 = 0.5 * h * (b1 + b2) + k2 * com12
    cdef double complex o21 = 0.5 * h * (c1 + c2) + k2 * com21
    cdef double complex q2 = o11 * o11 + o12 * o21
    cdef double complex ch, shc, q, eq, emq
    if _abs2(q2) < 1e-12:
        ch = 1.0 + q2 * (0.5 + q2 * (1.0 / 24.0 + q2 / 720.0))
        shc = 1.0 + q2 * (1.0 / 6.0 + q2 * (1.0 / 120.0 + q2 / 5040.0))
    else:
        q = _csqrt(q2)
        eq = _cexp(q)
        emq = 1.0 / eq
        ch = 0.5 * (eq + emq)
        shc = 0.5 * (eq - emq) / q
    e11[0] = ch + shc * o11
    e12[0] = shc * o12
    e21[0] = shc * o21
    e22[0] = ch - shc * o11


cdef void _propagate(const double complex[:, ::1] phi, double h, double complex z,
                     const double complex[::1] xis, const long long[::1] cps,
                     double complex[:, :, ::1] T_out, double[::1] S_out, double[::1] wind_out,
                     double[::1] logmax_out, double[:, :, ::1] norm_out) noexcept nogil:
    cdef Py_ssize_t n = phi.shape[0], nxi = xis.shape[0], ncp = cps.shape[0]
    cdef Py_ssize_t k, j, ci = 0
    cdef double complex t11 = 1.0, t12 = 0.0, t21 = 0.0, t22 = 1.0
    cdef double complex e11, e12, e21, e22, u11, u12, u21, u22, v_old, v_new, r
    cdef double S = 0.0, wind = 0.0, logmax = 0.0, nrm, scale, hw = 0.5 * (h if h > 0 else -h)
    cdef double fp, fm
    # trapezoid accumulators (in units of exp(2 S)) and previous integrand values
    cdef double acc[64]
    cdef double prev[64]
    for j in range(nxi):
        acc[2 * j] = 0.0
        acc[2 * j + 1] = 0.0
        prev[2 * j] = _abs2(t11 + xis[j] * t12)
        prev[2 * j + 1] = _abs2(t11 - xis[j] * t12)
    while ci < ncp and cps[ci] == 0:
        T_out[ci, 0, 0] = t11
        T_out[ci, 0, 1] = t12
        T_out[ci, 1, 0] = t21
        T_out[ci, 1, 1] = t22
        S_out[ci] = 0.0
        wind_out[ci] = 0.0
        logmax_out[ci] = 0.0
        for j in range(nxi):
            norm_out[ci, j, 0] = -INFINITY
            norm_out[ci, j, 1] = -INFINITY
        ci += 1
    v_old = t11 + t12
    for k in range(n):
        _step(z, phi[k, 0], phi[k, 1], h, &e11, &e12, &e21, &e22)
        u11 = e11 * t11 + e12 * t21
        u12 = e11 * t12 + e12 * t22
        u21 = e21 * t11 + e22 * t21
        u22 = e21 * t12 + e22 * t22
        t11 = u11
        t12 = u12
        t21 = u21
        t22 = u22
        v_new = t11 + t12
        r = v_new * v_old.conjugate()
        wind += atan2(r.imag, r.real)
        v_old = v_new
        nrm = _opnorm2(t11, t12, t21, t22)
        if 0.5 * log(nrm) + S > logmax:
            logmax = 0.5 * log(nrm) + S
        for j in range(nxi):
            fp = _abs2(t11 + xis[j] * t12)
            fm = _abs2(t11 - xis[j] * t12)
            acc[2 * j] += hw * (prev[2 * j] + fp)
            acc[2 * j + 1] += hw * (prev[2 * j + 1] + fm)
            prev[2 * j] = fp
            prev[2 * j + 1] = fm
        if nrm > RESCALE:
            scale = 1.0 / sqrt(nrm)
            t11 = t11 * scale
            t12 = t12 * scale
            t21 = t21 * scale
            t22 = t22 * scale
            v_old = v_old * scale
            S += 0.5 * log(nrm)
            for j in range(2 * nxi):
                acc[j] *= scale * scale
                prev[j] *= scale * scale
        while ci < ncp and cps[ci] == k + 1:
            T_out[ci, 0, 0] = t11
            T_out[ci, 0, 1] = t12
            T_out[ci, 1, 0] = t21
            T_out[ci, 1, 1] = t22
            S_out[ci] = S
            wind_out[ci] = wind
            logmax_out[ci] = logmax
            for j in range(nxi):
                norm_out[ci, j, 0] = log(acc[2 * j]) + 2.0 * S if acc[2 * j] > 0 else -INFINITY
                norm_out[ci, j, 1] = log(acc[2 * j + 1]) + 2.0 * S if acc[2 * j + 1] > 0 else -INFINITY
            ci += 1


MAX_XI = 32


def propagate(phi, double h, double complex z, xis, checkpoints):
    """Compiled counterpart of _fallback.propagate."""
    cdef const double complex[:, ::1] phiv = np.ascontiguousarray(phi, dtype=np.complex128)
    cdef const double complex[::1] xiv = np.ascontiguousarray(xis, dtype=np.complex128)
    cdef const long long[::1] cpv = np.ascontiguousarray(checkpoints, dtype=np.int64)
    if xiv.shape[0] > MAX_XI:
        raise ValueError(f"at most {MAX_XI} xi values per call")
    ncp = cpv.shape[0]
    T = np.empty((ncp, 2, 2), dtype=np.complex128)
    S = np.empty(ncp)
    wind = np.empty(ncp)
    logmax = np.empty(ncp)
    norms = np.empty((ncp, xiv.shape[0], 2))
    cdef double complex[:, :, ::1] Tv = T
    cdef double[::1] Sv = S, wv = wind, lv = logmax
    cdef double[:, :, ::1] nv = norms
    with nogil:
        _propagate(phiv, h, z, xiv, cpv, Tv, Sv, wv, lv, nv)
    return T, S, wind, logmax, norms
