# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled spectral-moment integrator (see ``_kernels_py`` for the reference)."""

import numpy as np
cimport numpy as cnp
from libc.math cimport tan, cos, fabs, M_PI
from libc.stdlib cimport malloc, free

cnp.import_array()

cdef enum:
    NCOMP = 9

cdef double XGK[8]
cdef double WGK[8]
cdef double WG[4]
XGK[:] = [0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
          0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
          0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
          0.207784955007898467600689403773245, 0.0]
WGK[:] = [0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
          0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
          0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
          0.204432940075298892414161999234649, 0.209482141084727828012999174891714]
WG[:] = [0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
         0.381830050505118944950369775488975, 0.417959183673469387755102040816327]


cdef struct Params:
    double center, half_width, omega_a, delta, kappa, kappa_l, g2, gamma_atom, omega_s


cdef inline double complex _refl(double x, Params* p) nogil:
    cdef double complex atom = -1j * (x - p.omega_a) + p.gamma_atom
    cdef double complex cav = -1j * (x - p.omega_a + p.delta) + p.kappa
    return -1.0 + 2.0 * p.kappa_l * atom / (cav * atom + p.g2)


cdef inline void _eval(double theta, Params* p, double* f) nogil:
    cdef double c = cos(theta)
    cdef double w = (2.0 / M_PI) * c * c
    cdef double x = p.center + p.half_width * tan(theta)
    cdef double complex r1 = _refl(x, p)
    cdef double complex r2 = _refl(x - p.omega_s, p)
    cdef double complex c12 = r1 * r2.conjugate()
    f[0] = w
    f[1] = w * r1.real
    f[2] = w * r1.imag
    f[3] = w * r2.real
    f[4] = w * r2.imag
    f[5] = w * (r1.real * r1.real + r1.imag * r1.imag)
    f[6] = w * (r2.real * r2.real + r2.imag * r2.imag)
    f[7] = w * c12.real
    f[8] = w * c12.imag


cdef double _panel(double lo, double hi, Params* p, double* out) nogil:
    cdef double mid = 0.5 * (lo + hi)
    cdef double rad = 0.5 * (hi - lo)
    cdef double kron[NCOMP]
    cdef double gauss[NCOMP]
    cdef double f1[NCOMP]
    cdef double f2[NCOMP]
    cdef int j, c
    cdef double err = 0.0, d
    _eval(mid, p, f1)
    for c in range(NCOMP):
        kron[c] = WGK[7] * f1[c]
        gauss[c] = WG[3] * f1[c]
    for j in range(7):
        _eval(mid - rad * XGK[j], p, f1)
        _eval(mid + rad * XGK[j], p, f2)
        for c in range(NCOMP):
            kron[c] += WGK[j] * (f1[c] + f2[c])
            if j % 2 == 1:
                gauss[c] += WG[j // 2] * (f1[c] + f2[c])
    for c in range(NCOMP):
        out[c] = rad * kron[c]
        d = fabs(rad * (kron[c] - gauss[c]))
        if d > err:
            err = d
    return err


def spectral_moments(double center, double half_width, double omega_a, double delta,
                     double kappa, double kappa_l, double g, double gamma_atom,
                     double omega_s, breakpoints, double rtol, double atol, int limit):
    """Integrate the nine reflection moments against the squared spectrum.

    Returns ``(values, error_estimate, n_panels, converged)`` with the same
    layout as the pure-Python backend.
    """
    cdef double[::1] edges = np.ascontiguousarray(breakpoints, dtype=np.float64)
    cdef int n0 = edges.shape[0] - 1
    if limit < n0:
        limit = n0
    cdef Params p
    p.center = center
    p.half_width = half_width
    p.omega_a = omega_a
    p.delta = delta
    p.kappa = kappa
    p.kappa_l = kappa_l
    p.g2 = g * g
    p.gamma_atom = gamma_atom
    p.omega_s = omega_s

    cdef double* los = <double*> malloc(limit * sizeof(double))
    cdef double* his = <double*> malloc(limit * sizeof(double))
    cdef double* errs = <double*> malloc(limit * sizeof(double))
    cdef double* vals = <double*> malloc(limit * NCOMP * sizeof(double))
    if los == NULL or his == NULL or errs == NULL or vals == NULL:
        free(los); free(his); free(errs); free(vals)
        raise MemoryError()

    cdef int n = 0, k, i, c
    cdef double total[NCOMP]
    cdef double left[NCOMP]
    cdef double right[NCOMP]
    cdef double err = 0.0, el, er, tol, big, mid, lo, hi
    cdef bint converged = False
    try:
        with nogil:
            for c in range(NCOMP):
                total[c] = 0.0
            for i in range(n0):
                los[i] = edges[i]
                his[i] = edges[i + 1]
                errs[i] = _panel(los[i], his[i], &p, &vals[i * NCOMP])
                err += errs[i]
                for c in range(NCOMP):
                    total[c] += vals[i * NCOMP + c]
            n = n0
            while True:
                big = 0.0
                for c in range(NCOMP):
                    if fabs(total[c]) > big:
                        big = fabs(total[c])
                tol = rtol * big
                if tol < atol:
                    tol = atol
                if err <= tol:
                    converged = True
                    break
                if n >= limit:
                    break
                k = 0
                for i in range(1, n):
                    if errs[i] > errs[k]:
                        k = i
                lo = los[k]
                hi = his[k]
                mid = 0.5 * (lo + hi)
                el = _panel(lo, mid, &p, left)
                er = _panel(mid, hi, &p, right)
                err += el + er - errs[k]
                for c in range(NCOMP):
                    total[c] += left[c] + right[c] - vals[k * NCOMP + c]
                    vals[k * NCOMP + c] = left[c]
                    vals[n * NCOMP + c] = right[c]
                his[k] = mid
                errs[k] = el
                los[n] = mid
                his[n] = hi
                errs[n] = er
                n += 1
            err = 0.0
            for c in range(NCOMP):
                total[c] = 0.0
            for i in range(n):
                err += errs[i]
                for c in range(NCOMP):
                    total[c] += vals[i * NCOMP + c]
        out = np.empty(NCOMP)
        for c in range(NCOMP):
            out[c] = total[c]
        return out, err, n, bool(converged)
    finally:
        free(los)
        free(his)
        free(errs)
        free(vals)
