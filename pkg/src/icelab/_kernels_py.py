"""Pure-NumPy implementation of the hot GGD kernels.

Semantics here are the reference; the Cython backend in ``_kernels_cy.pyx``
must match bit-for-bit up to floating-point reassociation.
"""

import numpy as np

BACKEND = "python"

#: Points with |s|^2 below this are pushed out to |s| = 1e-12 before the
#: score/density is evaluated (only matters for shape < 1 where the score
#: is singular at the origin).
R2_FLOOR = 1e-24
R_FLOOR = 1e-12


def ggd_eval(s, alpha, cx, cy, want_psi):
    """Fused evaluation of the complex GGD score and density sums.

    Parameters
    ----------
    s : complex ndarray
        Sample points.
    alpha : float
        Shape parameter.
    cx, cy : float
        Quadratic-form coefficients of the log-density,
        ``q = cx*Re(s)^2 + cy*Im(s)^2`` (they absorb variance and
        circularity).
    want_psi : bool
        Whether to materialise the conjugated score array.

    Returns
    -------
    psi_conj : complex ndarray or None
        ``conj(psi(s))`` per sample, where ``psi = -d log p / d s*``.
    sum_qalpha : float
        ``sum(q**alpha)``; the log-density is ``N*logC - sum_qalpha``.
    sum_s_psiconj : complex
        ``sum(s * conj(psi(s)))``.
    n_clamped : int
        Number of near-origin points that were clamped.
    """
    s = np.ascontiguousarray(s, dtype=np.complex128)
    x = s.real.copy()
    y = s.imag.copy()
    n_clamped = 0
    if alpha < 1.0:
        r2 = x * x + y * y
        bad = r2 < R2_FLOOR
        n_clamped = int(bad.sum())
        if n_clamped:
            zero = r2 == 0.0
            scale = np.where(zero, 0.0, R_FLOOR / np.sqrt(np.maximum(r2, 1e-300)))
            x = np.where(bad, np.where(zero, R_FLOOR, x * scale), x)
            y = np.where(bad, y * scale, y)
    q = cx * x * x + cy * y * y
    qa = q**alpha
    sum_qalpha = float(qa.sum())
    if not want_psi:
        return None, sum_qalpha, 0.0 + 0.0j, n_clamped
    with np.errstate(divide="ignore"):
        fac = alpha * q ** (alpha - 1.0)
    psi_conj = fac * (cx * x - 1j * (cy * y))
    s_eff = x + 1j * y
    sum_s_psiconj = complex(np.dot(s_eff, psi_conj))
    return psi_conj, sum_qalpha, sum_s_psiconj, n_clamped
