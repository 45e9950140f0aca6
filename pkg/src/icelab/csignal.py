"""Complex random-signal models.

Generalized-Gaussian sources with controlled circularity, a radially
symmetric dependent background family, their analytic score functions under
the Wirtinger convention ``psi = -d log p / d s*``, and the scalar/matrix
statistics (kappa, sigma^2, kappa_bar, kappa_z) consumed by the Fisher
information assembly.
"""

import warnings
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.special import gammaln

from ._kernels import ggd_eval
from ._util import as_generator, crandn, hermitize, is_hermitian_pd, pd_inverse


class SingularPointError(ValueError):
    """Score requested at a point where it is singular (origin, shape < 1)."""


class UnsupportedSpecError(ValueError):
    """Signal description outside the supported family."""


@dataclass(frozen=True)
class GgdSpec:
    """Complex generalized-Gaussian source description.

    The density on C (variance ``variance``, circularity coefficient
    ``circ`` = |E[s^2]| / E[|s|^2]) is, with ``rho = G(2/a)/G(1/a)`` and
    ``x = Re s``, ``y = Im s``::

        p(s) = C * exp(-(rho/variance * (x^2/(1+circ) + y^2/(1-circ)))**alpha)

    ``alpha = 1, circ = 0`` is the circular Gaussian.  ``circ = 1`` is
    degenerate (support collapses onto the real axis) and is rejected by the
    samplers and density evaluators.
    """

    alpha: float
    circ: float = 0.0
    variance: float = 1.0

    def __post_init__(self):
        if not self.alpha > 0:
            raise UnsupportedSpecError(f"shape must be positive, got {self.alpha}")
        if not 0.0 <= self.circ <= 1.0:
            raise UnsupportedSpecError(f"circularity must lie in [0, 1], got {self.circ}")
        if not self.variance > 0:
            raise UnsupportedSpecError(f"variance must be positive, got {self.variance}")

    @property
    def rho(self):
        return _ggd_consts(self.alpha, self.circ, self.variance)[0]

    def _coeffs(self):
        _, cx, cy, _ = _ggd_consts(self.alpha, self.circ, self.variance)
        return cx, cy

    @property
    def log_norm(self):
        """log of the density normalization constant."""
        return _ggd_consts(self.alpha, self.circ, self.variance)[3]

    # Convenience handles used by the extraction algorithms.
    def score(self, s):
        return ggd_score(self, s)

    def logpdf(self, s):
        return ggd_logpdf(self, s)


@lru_cache(maxsize=256)
def _ggd_consts(alpha, circ, variance):
    """(rho, cx, cy, log_norm) of a GGD parameter triple."""
    if circ >= 1.0:
        raise UnsupportedSpecError("circ = 1 is degenerate (purely real support)")
    rho = float(np.exp(gammaln(2.0 / alpha) - gammaln(1.0 / alpha)))
    cx = rho / (variance * (1.0 + circ))
    cy = rho / (variance * (1.0 - circ))
    log_norm = float(
        np.log(alpha)
        + gammaln(2.0 / alpha)
        - 2.0 * gammaln(1.0 / alpha)
        - np.log(np.pi)
        - 0.5 * np.log1p(-circ * circ)
        - np.log(variance)
    )
    return rho, cx, cy, log_norm


def sample_ggd(spec, n, seed):
    """Draw ``n`` i.i.d. samples from the complex GGD.

    A circular draw is produced by the exact radius transform
    ``r = (t**(1/alpha) / rho)**0.5`` with ``t ~ Gamma(1/alpha)`` and a
    uniform phase; circularity is then imposed by the real-linear map
    ``s = a*v + b*conj(v)`` with ``a^2 + b^2 = variance`` and
    ``2ab = circ*variance``, which reproduces the target density exactly.
    """
    if n < 1:
        raise ValueError("need at least one sample")
    if spec.circ >= 1.0:
        raise UnsupportedSpecError("circ = 1 is degenerate (purely real support)")
    rng = as_generator(seed)
    t = rng.gamma(1.0 / spec.alpha, 1.0, size=n)
    r = np.sqrt(t ** (1.0 / spec.alpha) / spec.rho)
    phase = rng.uniform(0.0, 2.0 * np.pi, size=n)
    v = r * np.exp(1j * phase)
    sd = np.sqrt(spec.variance)
    a = sd * (np.sqrt(1.0 + spec.circ) + np.sqrt(1.0 - spec.circ)) / 2.0
    b = sd * (np.sqrt(1.0 + spec.circ) - np.sqrt(1.0 - spec.circ)) / 2.0
    return a * v + b * np.conj(v)


def ggd_score(spec, s):
    """Score ``psi(s) = -d log p / d s*`` of the complex GGD.

    Vectorized over ``s``.  For shape < 1 the score is singular at the
    origin: a scalar query at exactly zero raises; array inputs are clamped
    to |s| = 1e-12 with a warning.
    """
    cx, cy = spec._coeffs()
    scalar = np.isscalar(s) or np.ndim(s) == 0
    arr = np.atleast_1d(np.asarray(s, dtype=complex)).ravel()
    if scalar and spec.alpha < 1.0 and arr[0] == 0:
        raise SingularPointError("score of a shape<1 GGD is singular at the origin")
    psi_conj, _, _, n_clamped = ggd_eval(arr, spec.alpha, cx, cy, True)
    if n_clamped:
        warnings.warn(
            f"clamped {n_clamped} near-origin point(s) to |s|=1e-12 in shape<1 score",
            RuntimeWarning,
            stacklevel=2,
        )
    psi = np.conj(psi_conj)
    if scalar:
        return complex(psi[0])
    return psi.reshape(np.shape(s))


def ggd_logpdf(spec, s):
    """Log-density of the complex GGD, vectorized over ``s``."""
    cx, cy = spec._coeffs()
    x = np.real(s)
    y = np.imag(s)
    q = cx * x * x + cy * y * y
    return spec.log_norm - q**spec.alpha


def ggd_contrast(spec, s):
    """Fused quantities for one extraction iteration.

    Returns ``(psi_conj, mean_logpdf, nu_hat)`` where ``nu_hat`` is the
    sample mean of ``s * conj(psi(s))`` (the Stein identity gives
    ``E[s psi*(s)] = 1`` at the true model).
    """
    cx, cy = spec._coeffs()
    arr = np.ascontiguousarray(s, dtype=np.complex128)
    psi_conj, sum_qalpha, sum_spc, _ = ggd_eval(arr, spec.alpha, cx, cy, True)
    n = arr.size
    mean_logpdf = spec.log_norm - sum_qalpha / n
    return psi_conj, mean_logpdf, sum_spc / n


def ggd_mean_logpdf(spec, s):
    cx, cy = spec._coeffs()
    arr = np.ascontiguousarray(s, dtype=np.complex128)
    _, sum_qalpha, _, _ = ggd_eval(arr, spec.alpha, cx, cy, False)
    return spec.log_norm - sum_qalpha / arr.size


def ggd_kappa_bar(spec):
    """Normalized score power ``kappa_bar = E[|psi|^2] * E[|s|^2]``.

    Closed form ``alpha^2 G(2/alpha) / ((1 - circ^2) G(1/alpha)^2)``; equals
    1 exactly for the circular Gaussian and exceeds 1 otherwise.
    """
    a, g = spec.alpha, spec.circ
    if g >= 1.0:
        raise UnsupportedSpecError("circ = 1 is degenerate")
    return a * a * np.exp(gammaln(2.0 / a) - 2.0 * gammaln(1.0 / a)) / (1.0 - g * g)


@dataclass(frozen=True)
class DependentBgSpec:
    """Radially symmetric dependent background on C^dim.

    Joint density ``p(z) ~ exp(-(lam * sum_i |z_i|^2)**alpha)`` where ``lam``
    is fixed so every coordinate has unit variance.  ``alpha = 1`` is the
    circular Gaussian CN(0, I); any other shape gives coordinates that are
    uncorrelated but dependent.
    """

    alpha: float
    dim: int

    def __post_init__(self):
        if not self.alpha > 0:
            raise ValueError(f"shape must be positive, got {self.alpha}")
        if self.dim < 1:
            raise ValueError(f"dim must be >= 1, got {self.dim}")

    @property
    def lam(self):
        """Unit-marginal-variance scale: G((K+1)/a) / (K G(K/a)), K = dim."""
        k, a = self.dim, self.alpha
        return np.exp(gammaln((k + 1.0) / a) - gammaln(k / a)) / k

    @property
    def log_norm(self):
        k, a = self.dim, self.alpha
        return gammaln(k) + np.log(a) + k * np.log(self.lam) - k * np.log(np.pi) - gammaln(k / a)

    def score(self, z):
        return dependent_bg_score(self, z)

    def logpdf(self, z):
        return dependent_bg_logpdf(self, z)

    def sample(self, n, seed):
        return sample_dependent_bg(self, n, seed)


def sample_dependent_bg(spec, n, seed):
    """Draw ``n`` i.i.d. columns from the dependent background density.

    Radius-direction factorization: the direction is uniform on the complex
    unit sphere and ``(lam r^2)**alpha ~ Gamma(dim/alpha)``, which inverts
    the radial density exactly.
    """
    rng = as_generator(seed)
    k = spec.dim
    t = rng.gamma(k / spec.alpha, 1.0, size=n)
    r = np.sqrt(t ** (1.0 / spec.alpha) / spec.lam)
    w = crandn(rng, k, n)
    w /= np.linalg.norm(w, axis=0, keepdims=True)
    return r[None, :] * w


def dependent_bg_score(spec, z):
    """Score ``psi_z(z) = -d log p / d z*`` of the dependent background.

    ``z`` may be a single vector (dim,) or a matrix of columns (dim, n).
    """
    z = np.asarray(z, dtype=complex)
    single = z.ndim == 1
    zz = z[:, None] if single else z
    r2 = np.sum(np.abs(zz) ** 2, axis=0)
    if spec.alpha < 1.0:
        if np.any(r2 == 0.0):
            raise SingularPointError("score of a shape<1 background is singular at 0")
        r2 = np.maximum(r2, 1e-24)
    lam = spec.lam
    with np.errstate(divide="ignore"):
        fac = spec.alpha * (lam * r2) ** (spec.alpha - 1.0) * lam
    psi = fac[None, :] * zz
    return psi[:, 0] if single else psi


def dependent_bg_logpdf(spec, z):
    z = np.asarray(z, dtype=complex)
    zz = z[:, None] if z.ndim == 1 else z
    r2 = np.sum(np.abs(zz) ** 2, axis=0)
    out = spec.log_norm - (spec.lam * r2) ** spec.alpha
    return float(out[0]) if z.ndim == 1 else out


def dependent_bg_kappa_diag(spec):
    """Closed-form diagonal of ``kappa_z = E[psi_z psi_z^H]`` for this family.

    By radial symmetry ``kappa_z = omega * I`` with
    ``omega = (alpha^2 lam / K) * G(K/alpha + 2 - 1/alpha) / G(K/alpha)``.
    Used as an independent cross-check of the Monte Carlo estimates.
    """
    k, a = spec.dim, spec.alpha
    return a * a * spec.lam / k * np.exp(gammaln(k / a + 2.0 - 1.0 / a) - gammaln(k / a))


def empirical_kappa_z(score, samples):
    """Sample estimate of ``kappa_z = E[psi_z(z) psi_z(z)^H]``.

    ``score`` maps a (dim, n) matrix of columns to the per-column scores;
    the result is symmetrized so it is Hermitian by construction.
    """
    z = np.asarray(samples, dtype=complex)
    if z.ndim == 1:
        z = z[:, None]
    psi = score(z)
    k = psi @ psi.conj().T / z.shape[1]
    return hermitize(k)


@dataclass(frozen=True)
class SourceStats:
    """Scalar moments of a source of interest."""

    kappa: float
    sigma2: float
    kappa_bar: float
    pseudo_moment: complex  # E[s^2]
    score_pseudo: complex  # E[(psi*)^2]
    provenance: str = "closed-form"


@dataclass(frozen=True)
class BgStats:
    """Matrix statistics of a background vector."""

    cov: np.ndarray
    kappa_z: np.ndarray
    pseudo_score: np.ndarray  # E[psi_z psi_z^T]
    provenance: str = "closed-form"
    stderr: float = 0.0

    def __post_init__(self):
        for name in ("cov", "kappa_z"):
            if not is_hermitian_pd(getattr(self, name)):
                raise ValueError(f"{name} must be Hermitian positive definite")


def source_stats(spec):
    """Closed-form SourceStats of a GGD source.

    ``E[s^2] = circ * variance`` (real, by the sampler's axis convention) and
    ``E[(psi*)^2] = -circ * kappa_bar / variance``.
    """
    kb = ggd_kappa_bar(spec)
    s2 = spec.variance
    return SourceStats(
        kappa=kb / s2,
        sigma2=s2,
        kappa_bar=kb,
        pseudo_moment=spec.circ * s2,
        score_pseudo=-spec.circ * kb / s2,
    )


def bg_stats_gaussian(cov):
    """Stats of a circular Gaussian background: ``kappa_z = cov^-1``."""
    cov = np.asarray(cov, dtype=complex)
    if not is_hermitian_pd(cov):
        raise ValueError("covariance must be Hermitian positive definite")
    inv, ok = pd_inverse(cov)
    if not ok:
        raise ValueError("covariance is numerically singular")
    zeros = np.zeros_like(cov)
    return BgStats(cov=hermitize(cov), kappa_z=inv, pseudo_score=zeros)


def bg_stats_dependent(spec, n_samples=1_000_000, seed=0):
    """Monte Carlo stats of the dependent background (kappa_z has no reused
    closed form in the bound pathway; the standard error of its entries is
    recorded)."""
    z = sample_dependent_bg(spec, n_samples, seed)
    psi = dependent_bg_score(spec, z)
    kz = hermitize(psi @ psi.conj().T / n_samples)
    outer = np.abs(psi) ** 2
    stderr = float(np.sqrt(np.max(np.var(outer, axis=1)) / n_samples))
    pseudo = psi @ psi.T / n_samples
    return BgStats(
        cov=np.eye(spec.dim, dtype=complex),
        kappa_z=kz,
        pseudo_score=pseudo,
        provenance=f"monte-carlo(n={n_samples})",
        stderr=stderr,
    )


@dataclass(frozen=True)
class GaussianBg:
    """Circular Gaussian background model handle (score + log-density)."""

    cov: np.ndarray
    _inv: np.ndarray = field(init=False, repr=False)
    _logdet: float = field(init=False, repr=False)

    def __post_init__(self):
        cov = np.asarray(self.cov, dtype=complex)
        if not is_hermitian_pd(cov):
            raise ValueError("covariance must be Hermitian positive definite")
        inv, _ = pd_inverse(cov)
        sign, logdet = np.linalg.slogdet(cov)
        object.__setattr__(self, "_inv", inv)
        object.__setattr__(self, "_logdet", float(np.log(sign.real) + logdet) if sign != 1 else float(logdet))

    @property
    def dim(self):
        return self.cov.shape[0]

    def score(self, z):
        return self._inv @ np.asarray(z, dtype=complex)

    def logpdf(self, z):
        z = np.asarray(z, dtype=complex)
        zz = z[:, None] if z.ndim == 1 else z
        quad = np.einsum("in,ij,jn->n", zz.conj(), self._inv, zz).real
        out = -quad - self.dim * np.log(np.pi) - self._logdet
        return float(out[0]) if z.ndim == 1 else out

    def sample(self, n, seed):
        rng = as_generator(seed)
        root = np.linalg.cholesky(hermitize(np.asarray(self.cov, dtype=complex)))
        return root @ crandn(rng, self.dim, n)
