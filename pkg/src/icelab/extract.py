"""Maximum-likelihood extraction algorithms.

Single-block extraction with a Gaussian-background quasi-likelihood (ogice),
its non-Gaussian-background variant over the full likelihood (ngice), and
the block-wise/shared-parameter variants for piecewise mixtures (bice,
bogice_cmv, bogice_csv).

All gradient-ascent loops maximize a scale-invariant contrast: the
per-block extracted signal is rescaled to the model variance before the
source log-density is evaluated, which keeps the nonlinearity operating at
its design scale and removes the scaling ambiguity from the search.  Under
the orthogonal constraint the Gaussian-background terms of the likelihood
reduce to a constant, so the tracked contrast is the mean source
log-density (plus the background log-density for ngice); backtracking line
searches guarantee a non-decreasing contrast trace.
"""

from dataclasses import dataclass, field

import numpy as np

from ._util import as_generator, crandn
from .csignal import (
    DependentBgSpec,
    GaussianBg,
    GgdSpec,
    dependent_bg_kappa_diag,
    ggd_contrast,
    ggd_kappa_bar,
    ggd_mean_logpdf,
)

#: Smallest backtracking step before a line search gives up.
_MIN_STEP = 1e-12


class DataDegenerateError(ValueError):
    """Sample covariance too ill-conditioned to run the extraction."""


@dataclass(frozen=True)
class ExtractOptions:
    """Iteration controls shared by all extraction algorithms.

    ``nonlinearity`` is the assumed source model (a GgdSpec, or one per
    block for the piecewise algorithms); its score is the nonlinearity and
    its log-density is the line-search objective.  Defaults to the
    unit-variance circular GGD with shape 2.
    """

    max_iter: int = 1000
    tol: float = 1e-6
    step: float = 0.5
    nonlinearity: object = None

    def __post_init__(self):
        if self.tol <= 0 or self.max_iter < 1 or self.step <= 0:
            raise ValueError("tol and step must be positive and max_iter >= 1")

    def sources(self, n_blocks):
        nl = self.nonlinearity
        if nl is None:
            nl = GgdSpec(2.0, 0.0, 1.0)
        if isinstance(nl, GgdSpec):
            return [nl] * n_blocks
        nl = list(nl)
        if len(nl) != n_blocks:
            raise ValueError("need one source model per block")
        return nl


@dataclass(frozen=True)
class ExtractionResult:
    w_per_block: tuple
    a_per_block: tuple
    extracted: tuple
    iterations: int
    converged: bool
    contrast_trace: tuple

    @property
    def w(self):
        return self.w_per_block[0]

    @property
    def a(self):
        return self.a_per_block[0]


def _sample_cov(x):
    n = x.shape[1]
    if n <= x.shape[0]:
        raise DataDegenerateError("need more samples than channels")
    c = x @ x.conj().T / n
    if np.linalg.cond(c) > 1e12:
        raise DataDegenerateError("sample covariance is numerically singular")
    return c


def _gradient_ascent(theta0, grad_fn, objective, project, opts, precond=None):
    """Backtracking gradient ascent with a grow-on-success step.

    ``project`` canonicalizes a candidate point (scale normalization);
    ``objective`` and ``grad_fn`` both receive projected points; ``precond``
    optionally maps the gradient to a better-conditioned ascent direction
    (convergence is still measured on the raw gradient norm, and the line
    search guarantees a non-decreasing trace).
    """
    theta = project(theta0)
    obj = objective(theta)
    trace = [float(obj)]
    mu = opts.step
    converged = False
    it = 0
    prev_grad = None
    prev_pgrad = None
    prev_dir = None
    for it in range(1, opts.max_iter + 1):
        grad = grad_fn(theta)
        if np.linalg.norm(grad) < opts.tol:
            converged = True
            break
        pgrad = grad if precond is None else precond(grad)
        direction = pgrad
        if prev_grad is not None:
            # Polak-Ribiere momentum, reset whenever the combined direction
            # stops being an ascent direction
            denom = np.real(np.vdot(prev_pgrad, prev_grad))
            if denom > 0:
                beta = max(0.0, np.real(np.vdot(pgrad, grad - prev_grad)) / denom)
                direction = pgrad + beta * prev_dir
        if np.real(np.vdot(direction, grad)) <= 0:
            direction = pgrad
        if np.real(np.vdot(direction, grad)) <= 0:
            direction = grad
        accepted = None
        backtracked = False
        while mu > _MIN_STEP:
            cand = project(theta + mu * direction)
            cand_obj = objective(cand)
            if np.isfinite(cand_obj) and cand_obj > obj:
                accepted = (cand, cand_obj)
                break
            mu /= 2.0
            backtracked = True
        if accepted is None:
            break
        step_norm = np.linalg.norm(accepted[0] - theta)
        theta, obj = accepted
        trace.append(float(obj))
        prev_grad, prev_pgrad, prev_dir = grad, pgrad, direction
        if step_norm < opts.tol:
            converged = True
            break
        if not backtracked:
            mu *= 2.0
    return theta, it, converged, trace


def ogice(x, opts=None, init_w=None):
    """Orthogonally constrained one-source extraction, Gaussian background.

    Ascends the sample mean of the source log-density of the
    variance-matched extracted signal; the mixing vector is tied to the
    separating vector through the sample covariance,
    a = C w / (w^H C w).  The ascent direction is
    a * Re(nu) - E[x conj(psi(s))] with nu = E[s conj(psi(s))], which is the
    Wirtinger gradient of the contrast; iteration stops when its norm drops
    below ``tol``.
    """
    opts = opts or ExtractOptions()
    src = opts.sources(1)[0]
    x = np.asarray(x, dtype=complex)
    d, n = x.shape
    cov = _sample_cov(x)
    w = np.zeros(d, dtype=complex) if init_w is None else np.asarray(init_w, dtype=complex).copy()
    if init_w is None:
        w[0] = 1.0

    def normalize(v):
        scale = np.real(np.vdot(v, cov @ v))
        if scale <= 0:
            raise DataDegenerateError("degenerate separating vector")
        return v * np.sqrt(src.variance / scale)

    def contrast(v):
        return ggd_mean_logpdf(src, v.conj() @ x)

    def gradient(v):
        s_hat = v.conj() @ x
        psi_conj, _, nu = ggd_contrast(src, s_hat)
        m_vec = x @ psi_conj / n
        a_vec = cov @ v / np.real(np.vdot(v, cov @ v))
        return a_vec * nu.real - m_vec

    cov_inv = np.linalg.inv(cov)
    w, it, converged, trace = _gradient_ascent(
        w, gradient, contrast, normalize, opts, precond=lambda grd: cov_inv @ grd
    )
    a_vec = cov @ w / np.real(np.vdot(w, cov @ w))
    return ExtractionResult(
        w_per_block=(w,),
        a_per_block=(a_vec,),
        extracted=(w.conj() @ x,),
        iterations=it,
        converged=converged,
        contrast_trace=tuple(trace),
    )


def _ngice_precond(src, bg_model, d):
    """Fisher-scoring direction for the (g, h) ascent: the inverse of the
    model information [[sigma^2 kappa_z, -I], [-I, kappa_s C_z]] built from
    the assumed source and background models (identity fallback when the
    model sits at the Gaussian boundary)."""
    k = d - 1
    if isinstance(bg_model, DependentBgSpec):
        kappa_z = dependent_bg_kappa_diag(bg_model) * np.eye(k)
        cov_z = np.eye(k)
    elif isinstance(bg_model, GaussianBg):
        cov_z = np.asarray(bg_model.cov, dtype=complex)
        kappa_z = np.linalg.inv(cov_z)
    else:
        return None
    kappa_s = ggd_kappa_bar(src) / src.variance
    eye = np.eye(k)
    fim = np.zeros((2 * k, 2 * k), dtype=complex)
    fim[:k, :k] = src.variance * kappa_z
    fim[:k, k:] = -eye
    fim[k:, :k] = -eye
    fim[k:, k:] = kappa_s * cov_z
    w = np.linalg.eigvalsh(fim)
    if w[0] <= 1e-10 * max(w[-1], 0.0):
        return None
    fim_inv = np.linalg.inv(fim)
    return lambda grad: fim_inv @ grad


def _init_gh(x, cov, init_w):
    """Map an initial separating vector to the reduced (g, h) coordinates
    of the gamma = 1 parameterization."""
    v = np.asarray(init_w, dtype=complex)
    a0 = cov @ v / np.real(np.vdot(v, cov @ v))
    if abs(a0[0]) < 1e-10:
        raise DataDegenerateError("initial mixing vector has no first component")
    g = a0[1:] / a0[0]
    c_conj = np.conj(v[0]) + v[1:].conj() @ g
    h = np.zeros_like(g) if abs(c_conj) < 1e-8 else v[1:] / np.conj(c_conj)
    return g, h


def ngice(x, opts=None, init_w=None, bg_model=None):
    """One-source extraction with a known (possibly non-Gaussian) background.

    Jointly ascends the full log-likelihood over the reduced coordinates
    (g, h) of the gamma = 1 parameterization, where
    s_hat = (1 - h^H g) x_1 + h^H x_2 and z_hat = g x_1 - x_2; ``bg_model``
    supplies the background score and log-density (its determinant term is
    constant under this scale fix).
    """
    if bg_model is None:
        raise ValueError("ngice needs a background model with score and logpdf")
    opts = opts or ExtractOptions()
    src = opts.sources(1)[0]
    x = np.asarray(x, dtype=complex)
    d, n = x.shape
    cov = _sample_cov(x)
    if init_w is None:
        init_w = np.eye(d, dtype=complex)[:, 0]
    g, h = _init_gh(x, cov, init_w)
    x1 = x[0]
    x2 = x[1:]

    def unpack(theta):
        return theta[: d - 1], theta[d - 1 :]

    def s_z_of(theta):
        g_c, h_c = unpack(theta)
        beta_conj = 1.0 - np.vdot(h_c, g_c)
        s_hat = beta_conj * x1 + h_c.conj() @ x2
        z_hat = g_c[:, None] * x1[None, :] - x2
        return s_hat, z_hat

    def contrast(theta):
        s_hat, z_hat = s_z_of(theta)
        return ggd_mean_logpdf(src, s_hat) + float(np.mean(bg_model.logpdf(z_hat)))

    def gradient(theta):
        g_c, h_c = unpack(theta)
        s_hat, z_hat = s_z_of(theta)
        psi_s_conj, _, _ = ggd_contrast(src, s_hat)
        psi_s = psi_s_conj.conj()
        psi_z = bg_model.score(z_hat)
        grad_g = np.mean(psi_s * x1.conj()) * h_c - (psi_z @ x1.conj()) / n
        grad_h = g_c * np.mean(psi_s_conj * x1) - (x2 @ psi_s_conj) / n
        return np.concatenate([grad_g, grad_h])

    theta = np.concatenate([g, h])
    theta, it, converged, trace = _gradient_ascent(
        theta, gradient, contrast, lambda t: t, opts, precond=_ngice_precond(src, bg_model, d)
    )
    g, h = unpack(theta)
    beta = np.conj(1.0 - np.vdot(h, g))
    w = np.concatenate([[beta], h])
    a_vec = np.concatenate([[1.0], g])
    return ExtractionResult(
        w_per_block=(w,),
        a_per_block=(a_vec,),
        extracted=(w.conj() @ x,),
        iterations=it,
        converged=converged,
        contrast_trace=tuple(trace),
    )


def bice(blocks, opts=None, init_w_per_block=None):
    """Independent per-block extraction: ogice applied to each block."""
    opts = opts or ExtractOptions()
    blocks = [np.asarray(b, dtype=complex) for b in blocks]
    srcs = opts.sources(len(blocks))
    if init_w_per_block is None:
        init_w_per_block = [None] * len(blocks)
    results = []
    for xm, src, w0 in zip(blocks, srcs, init_w_per_block):
        sub_opts = ExtractOptions(opts.max_iter, opts.tol, opts.step, src)
        results.append(ogice(xm, sub_opts, w0))
    return ExtractionResult(
        w_per_block=tuple(r.w_per_block[0] for r in results),
        a_per_block=tuple(r.a_per_block[0] for r in results),
        extracted=tuple(r.extracted[0] for r in results),
        iterations=max(r.iterations for r in results),
        converged=all(r.converged for r in results),
        contrast_trace=tuple(r.contrast_trace for r in results),
    )


def bogice_cmv(blocks, opts=None, init_a=None):
    """Shared-mixing-vector extraction across blocks.

    The shared mixing vector a is the free parameter; each block's
    separating vector is tied through its sample covariance,
    w_m = C_m^{-1} a / (a^H C_m^{-1} a), and the summed variance-matched
    contrasts are ascended over a.  A single block reduces to ogice.
    """
    opts = opts or ExtractOptions()
    blocks = [np.asarray(b, dtype=complex) for b in blocks]
    m = len(blocks)
    srcs = opts.sources(m)
    if m == 1:
        # single block: the model coincides with plain extraction, and the
        # initial mixing vector doubles as the initial separating vector
        sub_opts = ExtractOptions(opts.max_iter, opts.tol, opts.step, srcs[0])
        return ogice(blocks[0], sub_opts, init_a)
    covs = [_sample_cov(b) for b in blocks]
    inv_covs = [np.linalg.inv(c) for c in covs]
    ns = [b.shape[1] for b in blocks]
    d = blocks[0].shape[0]
    if init_a is None:
        a = np.zeros(d, dtype=complex)
        a[0] = 1.0
    else:
        a = np.asarray(init_a, dtype=complex).copy()
    a /= np.linalg.norm(a)

    def block_pipe(a_vec, i):
        u = inv_covs[i] @ a_vec
        quad = np.real(np.vdot(a_vec, u))
        w_i = u / quad
        sigma_hat = 1.0 / np.sqrt(quad)
        s_hat = w_i.conj() @ blocks[i]
        t_hat = s_hat * (np.sqrt(srcs[i].variance) / sigma_hat)
        return u, quad, w_i, sigma_hat, t_hat

    def contrast(a_vec):
        total = 0.0
        for i in range(m):
            _, _, _, _, t_hat = block_pipe(a_vec, i)
            total += ggd_mean_logpdf(srcs[i], t_hat)
        return total

    def gradient(a_vec):
        grad = np.zeros(d, dtype=complex)
        for i in range(m):
            u, quad, w_i, sigma_hat, t_hat = block_pipe(a_vec, i)
            psi_conj, _, nu = ggd_contrast(srcs[i], t_hat)
            m_vec = inv_covs[i] @ (blocks[i] @ psi_conj) / ns[i]
            grad += w_i * nu.real - np.sqrt(srcs[i].variance) * sigma_hat * m_vec
        return grad

    metric_inv = np.linalg.inv(sum(inv_covs))
    a, it, converged, trace = _gradient_ascent(
        a,
        gradient,
        contrast,
        lambda v: v / np.linalg.norm(v),
        opts,
        precond=lambda grd: metric_inv @ grd,
    )
    w_list = []
    s_list = []
    for i in range(m):
        _, _, w_i, _, _ = block_pipe(a, i)
        w_list.append(w_i)
        s_list.append(w_i.conj() @ blocks[i])
    return ExtractionResult(
        w_per_block=tuple(w_list),
        a_per_block=(a,) * m,
        extracted=tuple(s_list),
        iterations=it,
        converged=converged,
        contrast_trace=tuple(trace),
    )


def bogice_csv(blocks, opts=None, init_w=None):
    """Shared-separating-vector extraction across blocks.

    The shared separating vector w is the free parameter; each block's
    mixing vector is tied through a_m = C_m w / (w^H C_m w), and the summed
    variance-matched contrasts are ascended over w.  (Under the orthogonal
    constraint the per-block determinant and Gaussian background terms of
    the likelihood collapse into the variance normalization.)  A single
    block reduces to ogice.
    """
    opts = opts or ExtractOptions()
    blocks = [np.asarray(b, dtype=complex) for b in blocks]
    m = len(blocks)
    srcs = opts.sources(m)
    if m == 1:
        sub_opts = ExtractOptions(opts.max_iter, opts.tol, opts.step, srcs[0])
        return ogice(blocks[0], sub_opts, init_w)
    covs = [_sample_cov(b) for b in blocks]
    ns = [b.shape[1] for b in blocks]
    d = blocks[0].shape[0]
    if init_w is None:
        w = np.zeros(d, dtype=complex)
        w[0] = 1.0
    else:
        w = np.asarray(init_w, dtype=complex).copy()
    w /= np.linalg.norm(w)

    def block_pipe(w_vec, i):
        cw = covs[i] @ w_vec
        quad = np.real(np.vdot(w_vec, cw))
        a_i = cw / quad
        sigma_hat = np.sqrt(quad)
        s_hat = w_vec.conj() @ blocks[i]
        t_hat = s_hat * (np.sqrt(srcs[i].variance) / sigma_hat)
        return a_i, sigma_hat, t_hat

    def contrast(w_vec):
        total = 0.0
        for i in range(m):
            _, _, t_hat = block_pipe(w_vec, i)
            total += ggd_mean_logpdf(srcs[i], t_hat)
        return total

    def gradient(w_vec):
        grad = np.zeros(d, dtype=complex)
        for i in range(m):
            a_i, sigma_hat, t_hat = block_pipe(w_vec, i)
            psi_conj, _, nu = ggd_contrast(srcs[i], t_hat)
            m_vec = blocks[i] @ psi_conj / ns[i]
            grad += a_i * nu.real - (np.sqrt(srcs[i].variance) / sigma_hat) * m_vec
        return grad

    metric_inv = np.linalg.inv(sum(covs))
    w, it, converged, trace = _gradient_ascent(
        w,
        gradient,
        contrast,
        lambda v: v / np.linalg.norm(v),
        opts,
        precond=lambda grd: metric_inv @ grd,
    )
    a_list = []
    s_list = []
    for i in range(m):
        a_i, _, _ = block_pipe(w, i)
        a_list.append(a_i)
        s_list.append(w.conj() @ blocks[i])
    return ExtractionResult(
        w_per_block=(w,) * m,
        a_per_block=tuple(a_list),
        extracted=tuple(s_list),
        iterations=it,
        converged=converged,
        contrast_trace=tuple(trace),
    )


def perturbed_init(a_true, eps, seed):
    """Randomly perturbed copy of a vector: a + eps * ||a|| * v with v a
    uniformly random unit direction.  The relative deviation is exactly
    ``eps``."""
    if eps < 0:
        raise ValueError("eps must be nonnegative")
    a_true = np.asarray(a_true, dtype=complex)
    if eps == 0:
        return a_true.copy()
    rng = as_generator(seed)
    v = crandn(rng, a_true.size)
    v /= np.linalg.norm(v)
    return a_true + eps * np.linalg.norm(a_true) * v
