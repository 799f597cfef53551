# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Cyclic complex Jacobi rotations over a stack of Hermitian matrices.

Compiled twin of :mod:`specgap._jacobi_py`; both implement the same
rotation sequence so results agree to rounding.
"""
from libc.math cimport sqrt, fabs, hypot

# off-diagonal magnitude, relative to the convergence threshold, treated as zero
cdef double NEGLIGIBLE = 1e-100


cdef inline double _offnorm(double complex[:, :, ::1] a, Py_ssize_t b, Py_ssize_t n) noexcept nogil:
    cdef Py_ssize_t p, q
    cdef double acc = 0.0
    cdef double complex z
    for p in range(n - 1):
        for q in range(p + 1, n):
            z = a[b, p, q]
            acc += z.real * z.real + z.imag * z.imag
    return sqrt(2.0 * acc)


cdef void _solve_one(double complex[:, :, ::1] a, double complex[:, :, ::1] v,
                     Py_ssize_t b, Py_ssize_t n, double thresh, int max_sweeps,
                     double* off_out, int* sweeps_out) noexcept nogil:
    cdef int sweep
    cdef Py_ssize_t p, q, r
    cdef double off, g, tau, t, c, s, app, aqq
    # entries this far below the tolerance are set to zero rather than rotated:
    # their phase is too imprecise to build a unitary rotation from
    cdef double drop = thresh * NEGLIGIBLE
    # entries below thresh / n cannot hold the off-norm above thresh; rotating
    # them inside near-degenerate clusters only slows convergence
    cdef double skip = thresh / n
    cdef double complex x, e, ec, ce, se, cec, sec, u, w

    off = _offnorm(a, b, n)
    sweep = 0
    while off > thresh and sweep < max_sweeps:
        for p in range(n - 1):
            for q in range(p + 1, n):
                x = a[b, p, q]
                g = hypot(x.real, x.imag)
                if g <= drop:
                    a[b, p, q] = 0.0
                    a[b, q, p] = 0.0
                    continue
                if g <= skip:
                    continue
                app = a[b, p, p].real
                aqq = a[b, q, q].real
                tau = (aqq - app) / (2.0 * g)
                if fabs(tau) > 1e150:
                    t = 0.5 / tau
                elif tau >= 0.0:
                    t = 1.0 / (tau + sqrt(1.0 + tau * tau))
                else:
                    t = -1.0 / (-tau + sqrt(1.0 + tau * tau))
                c = 1.0 / sqrt(1.0 + t * t)
                s = t * c
                # componentwise: complex division by g would square it and underflow
                e = x.real / g + 1j * (x.imag / g)
                ec = e.conjugate()
                ce = c * e
                se = s * e
                cec = c * ec
                sec = s * ec
                # A <- A W
                for r in range(n):
                    u = a[b, r, p]
                    w = a[b, r, q]
                    a[b, r, p] = ce * u - s * w
                    a[b, r, q] = se * u + c * w
                # A <- W^H A
                for r in range(n):
                    u = a[b, p, r]
                    w = a[b, q, r]
                    a[b, p, r] = cec * u - s * w
                    a[b, q, r] = sec * u + c * w
                a[b, p, p] = app - t * g
                a[b, q, q] = aqq + t * g
                a[b, p, q] = 0.0
                a[b, q, p] = 0.0
                # V <- V W
                for r in range(n):
                    u = v[b, r, p]
                    w = v[b, r, q]
                    v[b, r, p] = ce * u - s * w
                    v[b, r, q] = se * u + c * w
        sweep += 1
        off = _offnorm(a, b, n)
    off_out[0] = off
    sweeps_out[0] = sweep


def jacobi_batch(double complex[:, :, ::1] a, double complex[:, :, ::1] v,
                 double[::1] thresh, int max_sweeps,
                 double[::1] offnorm, int[::1] sweeps):
    """Diagonalise every ``a[b]`` in place, accumulating rotations into ``v[b]``.

    ``thresh[b]`` is the absolute off-diagonal Frobenius norm at which
    matrix ``b`` counts as converged.
    """
    cdef Py_ssize_t b
    cdef Py_ssize_t nb = a.shape[0]
    cdef Py_ssize_t n = a.shape[1]
    with nogil:
        for b in range(nb):
            _solve_one(a, v, b, n, thresh[b], max_sweeps, &offnorm[b], &sweeps[b])
