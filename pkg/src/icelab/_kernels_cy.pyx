# cython: boundscheck=False, wraparound=False, cdivision=True
"""Cython implementation of the hot GGD kernels (see ``_kernels_py`` for the
reference semantics)."""

import numpy as np

cimport numpy as cnp
from libc.math cimport pow, sqrt

cnp.import_array()

BACKEND = "cython"

cdef double R2_FLOOR = 1e-24
cdef double R_FLOOR = 1e-12


def ggd_eval(s, double alpha, double cx, double cy, bint want_psi):
    """Fused complex-GGD score/density sums; same contract as the NumPy backend."""
    cdef cnp.ndarray[cnp.complex128_t, ndim=1] sv = np.ascontiguousarray(s, dtype=np.complex128)
    cdef Py_ssize_t n = sv.shape[0]
    cdef cnp.ndarray[cnp.complex128_t, ndim=1] psic
    cdef double x, y, r2, scale, q, qa, fac
    cdef double sum_qalpha = 0.0
    cdef double acc_re = 0.0, acc_im = 0.0
    cdef double pr, pi
    cdef Py_ssize_t i
    cdef int n_clamped = 0

    if want_psi:
        psic = np.empty(n, dtype=np.complex128)
    else:
        psic = np.empty(0, dtype=np.complex128)

    for i in range(n):
        x = sv[i].real
        y = sv[i].imag
        if alpha < 1.0:
            r2 = x * x + y * y
            if r2 < R2_FLOOR:
                n_clamped += 1
                if r2 == 0.0:
                    x = R_FLOOR
                    y = 0.0
                else:
                    scale = R_FLOOR / sqrt(r2)
                    x *= scale
                    y *= scale
        q = cx * x * x + cy * y * y
        qa = pow(q, alpha)
        sum_qalpha += qa
        if want_psi:
            fac = alpha * pow(q, alpha - 1.0)
            pr = fac * cx * x
            pi = -fac * cy * y
            psic[i].real = pr
            psic[i].imag = pi
            # s_eff * psi_conj
            acc_re += x * pr - y * pi
            acc_im += x * pi + y * pr

    if want_psi:
        return psic, sum_qalpha, complex(acc_re, acc_im), n_clamped
    return None, sum_qalpha, 0j, n_clamped
