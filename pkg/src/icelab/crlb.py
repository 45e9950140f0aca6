"""Fisher information and Cramér-Rao-induced ISR bounds.

For the complex parameter vector theta the Fisher information is assembled
in the doubled form J = [[F, P], [P*, F*]] with
F = E[dL/dtheta* (dL/dtheta*)^H] and P = E[dL/dtheta* (dL/dtheta*)^T]
(Wirtinger derivatives).  Evaluated at the separation point (h = 0, and
g = 0 for the shared-separating-vector model) the per-sample gradients of
the extraction log-likelihood are

    dL/dg*  = -psi_z(z) s*,        dL/dh* = conj(psi_s(s)) z,

which gives the single-block closed form
F = [[sigma_s^2 kappa_z, -I], [-I, kappa_s C_z]] in (g, h) layout, and the
corresponding block-arrow structures for the shared-mixing-vector (CMV) and
shared-separating-vector (CSV) piecewise models.

Every bound here divides a trace of C_z against the h-block of the inverse
information; a bound is *unidentifiable* (reported, not raised, as value
+inf) when the required inner matrix sum is singular.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from ._util import PD_RTOL, as_generator, hermitize, is_hermitian_pd, pd_inverse, pd_sqrt
from .csignal import (
    BgStats,
    DependentBgSpec,
    GaussianBg,
    SourceStats,
    bg_stats_gaussian,
    dependent_bg_score,
    ggd_score,
    sample_dependent_bg,
    sample_ggd,
    source_stats,
)
from .mixmodel import IceParams, ice_demixing, ice_mixing

FIM_FAMILIES = ("ice", "cmv", "csv")


class UnidentifiableError(ValueError):
    """Requested a CRLB matrix that does not exist (Gaussian-boundary case)."""


class WrongSpecialCaseError(ValueError):
    """Inputs violate the regime a special-case bound is derived for."""


@dataclass(frozen=True)
class FimBlocks:
    """(F, P) partition of a complex Fisher information matrix."""

    F: np.ndarray
    P: np.ndarray
    param_layout: tuple  # ((name, start, stop), ...)

    def slice_of(self, name):
        for nm, a, b in self.param_layout:
            if nm == name:
                return slice(a, b)
        raise KeyError(name)

    @property
    def full(self):
        """Doubled matrix [[F, P], [P*, F*]]."""
        top = np.concatenate((self.F, self.P), axis=1)
        bot = np.concatenate((self.P.conj(), self.F.conj()), axis=1)
        return np.concatenate((top, bot), axis=0)


@dataclass(frozen=True)
class CribReport:
    """A computed expected-ISR lower bound (linear scale) with context."""

    model: str
    value: float
    identifiable: bool
    n_total: int
    n_block: int
    terms: dict = field(default_factory=dict)
    notes: str = ""

    @property
    def value_db(self):
        if not self.identifiable or self.value <= 0:
            return math.inf if not self.identifiable else -math.inf
        return 10.0 * math.log10(self.value)

    def to_dict(self):
        def scrub(x):
            if isinstance(x, float) and not math.isfinite(x):
                return None
            if isinstance(x, (list, tuple)):
                return [scrub(v) for v in x]
            if isinstance(x, dict):
                return {k: scrub(v) for k, v in x.items()}
            if isinstance(x, np.ndarray):
                return scrub(x.tolist())
            if isinstance(x, np.bool_):
                return bool(x)
            if isinstance(x, (np.floating, np.integer)):
                return scrub(float(x))
            return x

        return {
            "model": self.model,
            "value": scrub(self.value),
            "value_db": scrub(self.value_db),
            "identifiable": self.identifiable,
            "n_total": self.n_total,
            "n_block": self.n_block,
            "terms": scrub(self.terms),
            "notes": self.notes,
        }


def _as_bg_stats(bg):
    if isinstance(bg, BgStats):
        return bg
    return bg_stats_gaussian(np.asarray(bg, dtype=complex))


# ---------------------------------------------------------------------------
# FIM assembly (per-sample, summed over blocks)

def fim_ice(src, bg):
    """Single-block information blocks in (g, h) layout."""
    bgs = _as_bg_stats(bg)
    k = bgs.cov.shape[0]
    eye = np.eye(k)
    f = np.zeros((2 * k, 2 * k), dtype=complex)
    f[:k, :k] = src.sigma2 * bgs.kappa_z
    f[:k, k:] = -eye
    f[k:, :k] = -eye
    f[k:, k:] = src.kappa * bgs.cov
    p = np.zeros_like(f)
    p[:k, :k] = bgs.pseudo_score * np.conj(src.pseudo_moment)
    # P_hh = E[(psi_s*)^2] E[z z^T] vanishes for the circular backgrounds
    # supported here.
    layout = (("g", 0, k), ("h", k, 2 * k))
    return FimBlocks(f, p, layout)


def fim_cmv(block_stats):
    """Shared-g information blocks in (g, h^1..h^M) layout."""
    stats = [(s, _as_bg_stats(b)) for s, b in block_stats]
    k = stats[0][1].cov.shape[0]
    m = len(stats)
    p_dim = (m + 1) * k
    eye = np.eye(k)
    f = np.zeros((p_dim, p_dim), dtype=complex)
    p = np.zeros_like(f)
    f[:k, :k] = sum(s.sigma2 * b.kappa_z for s, b in stats)
    p[:k, :k] = sum(b.pseudo_score * np.conj(s.pseudo_moment) for s, b in stats)
    layout = [("g", 0, k)]
    for i, (s, b) in enumerate(stats):
        sl = slice((i + 1) * k, (i + 2) * k)
        f[:k, sl] = -eye
        f[sl, :k] = -eye
        f[sl, sl] = s.kappa * b.cov
        layout.append((f"h{i}", sl.start, sl.stop))
    return FimBlocks(f, p, tuple(layout))


def fim_csv(block_stats):
    """Shared-h information blocks in (g^1..g^M, h) layout."""
    stats = [(s, _as_bg_stats(b)) for s, b in block_stats]
    k = stats[0][1].cov.shape[0]
    m = len(stats)
    p_dim = (m + 1) * k
    eye = np.eye(k)
    f = np.zeros((p_dim, p_dim), dtype=complex)
    p = np.zeros_like(f)
    hsl = slice(m * k, (m + 1) * k)
    layout = []
    for i, (s, b) in enumerate(stats):
        sl = slice(i * k, (i + 1) * k)
        f[sl, sl] = s.sigma2 * b.kappa_z
        f[sl, hsl] = -eye
        f[hsl, sl] = -eye
        p[sl, sl] = b.pseudo_score * np.conj(s.pseudo_moment)
        layout.append((f"g{i}", sl.start, sl.stop))
    f[hsl, hsl] = sum(s.kappa * b.cov for s, b in stats)
    layout.append(("h", hsl.start, hsl.stop))
    return FimBlocks(f, p, tuple(layout))


def _draw_block(soi, bg, n, rng):
    """Draw (s, z, psi_s, psi_z) for one block's source/background specs."""
    rs, rz = rng.spawn(2)
    s = sample_ggd(soi, n, rs)
    psi_s = ggd_score(soi, s)
    if isinstance(bg, DependentBgSpec):
        z = sample_dependent_bg(bg, n, rz)
        psi_z = dependent_bg_score(bg, z)
    else:
        gb = bg if isinstance(bg, GaussianBg) else GaussianBg(np.asarray(bg, dtype=complex))
        z = gb.sample(n, rz)
        psi_z = gb.score(z)
    return s, z, psi_s, psi_z


def fim_empirical(family, blocks, n_samples, seed, chunk=250_000):
    """Monte Carlo estimate of (F, P) from the analytic score gradients.

    ``blocks`` is a list of (GgdSpec, background) pairs where the background
    is a covariance matrix, a GaussianBg, or a DependentBgSpec.  The estimate
    converges to fim_ice / fim_cmv / fim_csv as ``n_samples`` grows.
    """
    if family not in FIM_FAMILIES:
        raise ValueError(f"family must be one of {FIM_FAMILIES}")
    blocks = list(blocks)
    if family == "ice" and len(blocks) != 1:
        raise ValueError("ice family takes exactly one block")
    m = len(blocks)
    k = (
        blocks[0][1].dim
        if isinstance(blocks[0][1], (DependentBgSpec, GaussianBg))
        else np.asarray(blocks[0][1]).shape[0]
    )
    p_dim = 2 * k if family == "ice" else (m + 1) * k
    f = np.zeros((p_dim, p_dim), dtype=complex)
    p = np.zeros_like(f)
    rng = as_generator(seed)
    block_rngs = rng.spawn(m)

    for i, (soi, bg) in enumerate(blocks):
        if family in ("ice", "cmv"):
            g_sl = slice(0, k)
            h_sl = slice((i + 1) * k, (i + 2) * k) if family == "cmv" else slice(k, 2 * k)
        else:
            g_sl = slice(i * k, (i + 1) * k)
            h_sl = slice(m * k, (m + 1) * k)
        remaining = n_samples
        crng = block_rngs[i]
        while remaining > 0:
            n = min(chunk, remaining)
            remaining -= n
            s, z, psi_s, psi_z = _draw_block(soi, bg, n, crng)
            grad = np.empty((2 * k, n), dtype=complex)
            grad[:k] = -psi_z * s.conj()[None, :]
            grad[k:] = psi_s.conj()[None, :] * z
            gram_h = grad @ grad.conj().T
            gram_t = grad @ grad.T
            for (sl_a, ra), (sl_b, rb) in (
                ((g_sl, slice(0, k)), (g_sl, slice(0, k))),
                ((g_sl, slice(0, k)), (h_sl, slice(k, 2 * k))),
                ((h_sl, slice(k, 2 * k)), (g_sl, slice(0, k))),
                ((h_sl, slice(k, 2 * k)), (h_sl, slice(k, 2 * k))),
            ):
                f[sl_a, sl_b] += gram_h[ra, rb] / n_samples
                p[sl_a, sl_b] += gram_t[ra, rb] / n_samples

    if family == "ice":
        layout = (("g", 0, k), ("h", k, 2 * k))
    elif family == "cmv":
        layout = tuple([("g", 0, k)] + [(f"h{i}", (i + 1) * k, (i + 2) * k) for i in range(m)])
    else:
        layout = tuple([(f"g{i}", i * k, (i + 1) * k) for i in range(m)] + [("h", m * k, (m + 1) * k)])
    return FimBlocks(f, p, layout)


# ---------------------------------------------------------------------------
# Closed-form bounds

def _report(model, value, identifiable, n_total, n_block, terms, notes=""):
    return CribReport(
        model=model,
        value=float(value) if identifiable else math.inf,
        identifiable=bool(identifiable),
        n_total=int(n_total),
        n_block=int(n_block),
        terms=terms,
        notes=notes,
    )


def crlb_h_gauss(src, c_z):
    """CRLB matrix of the separating coefficients with Gaussian background:
    sigma_s^2 / (kappa_s sigma_s^2 - 1) * C_z^{-1} (per observation)."""
    if src.kappa_bar <= 1.0:
        raise UnidentifiableError("kappa_bar <= 1: Gaussian-boundary source")
    inv, ok = pd_inverse(np.asarray(c_z, dtype=complex))
    if not ok:
        raise ValueError("C_z is numerically singular")
    return src.sigma2 / (src.kappa_bar - 1.0) * inv


def crib_ice_gauss(d, n_total, kappa_bar):
    """Expected-ISR bound (d - 1) / (N (kappa_bar - 1)), Gaussian background."""
    if d < 2 or n_total < 1:
        raise ValueError("need d >= 2 and N >= 1")
    ok = kappa_bar > 1.0
    value = (d - 1) / (n_total * (kappa_bar - 1.0)) if ok else math.inf
    return _report(
        "ICE-gauss", value, ok, n_total, n_total, {"kappa_bar": kappa_bar, "d": d}
    )


def crib_ice_circular(src, kappa_z_tilde, n_total):
    """Expected-ISR bound with a circular (possibly non-Gaussian) background.

    ``kappa_z_tilde`` is the score-power matrix of the decorrelated,
    unit-scaled background.  With eigenvalues omega_j the bound is
    (1/N) sum_j omega_j / (kappa_bar omega_j - 1).
    """
    kzt = hermitize(np.asarray(kappa_z_tilde, dtype=complex))
    if not is_hermitian_pd(kzt):
        raise ValueError("kappa_z_tilde must be Hermitian positive definite")
    omega = np.linalg.eigvalsh(kzt)[::-1]
    kb = src.kappa_bar
    denoms = kb * omega - 1.0
    ok = bool(np.all(denoms > 0.0))
    per_term = [float(w / d) if d > 0 else math.inf for w, d in zip(omega, denoms)]
    value = float(np.sum(omega / denoms)) / n_total if ok else math.inf
    terms = {
        "omega": [float(w) for w in omega],
        "per_eigenvalue": per_term,
        "identifiable_per_term": [bool(dn > 0) for dn in denoms],
        "kappa_bar": kb,
    }
    return _report("ICE-circular", value, ok, n_total, n_total, terms)


def crib_bice(block_stats, d, n_per_block):
    """Block-independent extraction bound
    (1/N_b) (d-1)/sum(sigma^2) * sum_m sigma_m^2/(kappa_bar_m - 1)."""
    stats = list(block_stats)
    sig = np.array([s.sigma2 for s in stats])
    kb = np.array([s.kappa_bar for s in stats])
    ok = bool(np.all(kb > 1.0))
    per_block = [float(s2 / (k - 1.0)) if k > 1 else math.inf for s2, k in zip(sig, kb)]
    value = (d - 1) / (n_per_block * sig.sum()) * sum(per_block) if ok else math.inf
    terms = {"per_block": per_block, "kappa_bar": kb.tolist()}
    return _report("BICE", value, ok, len(stats) * n_per_block, n_per_block, terms)


def _unpack(block_stats):
    stats, covs = [], []
    for s, c in block_stats:
        stats.append(s)
        covs.append(np.asarray(c, dtype=complex))
    return stats, covs


def crib_cmv(block_stats, n_per_block):
    """Shared-mixing-vector bound.

    (1/(N_b sum sigma^2)) * sum_m (1/kappa_m) tr(I + S^{-1} (1/kappa_m) C_m^{-1})
    with S = sum_i (kappa_bar_i - 1)/kappa_i * C_i^{-1}.
    """
    stats, covs = _unpack(block_stats)
    k = covs[0].shape[0]
    inv_covs = []
    for c in covs:
        inv, ok = pd_inverse(c)
        if not ok:
            raise ValueError("a block covariance is numerically singular")
        inv_covs.append(inv)
    s_mat = sum(
        (st.kappa_bar - 1.0) / st.kappa * ic for st, ic in zip(stats, inv_covs)
    )
    s_inv, ok = pd_inverse(s_mat)
    sig_sum = sum(st.sigma2 for st in stats)
    n_total = len(stats) * n_per_block
    if not ok:
        return _report("CMV", math.inf, False, n_total, n_per_block, {"inner_singular": True})
    per_block = []
    total = 0.0
    for st, ic in zip(stats, inv_covs):
        term = (
            1.0
            / st.kappa
            * np.trace(np.eye(k) + s_inv @ (ic / st.kappa)).real
        )
        per_block.append(float(term))
        total += term
    value = total / (n_per_block * sig_sum)
    return _report("CMV", value, True, n_total, n_per_block, {"per_block": per_block})


def crib_csv(block_stats, n_per_block):
    """Shared-separating-vector bound
    (1/(N_b sum sigma^2)) tr((sum_m (kappa_bar_m-1)/sigma_m^2 C_m)^{-1} sum_m C_m)."""
    stats, covs = _unpack(block_stats)
    inner = sum((st.kappa_bar - 1.0) / st.sigma2 * c for st, c in zip(stats, covs))
    inner_inv, ok = pd_inverse(inner)
    sig_sum = sum(st.sigma2 for st in stats)
    n_total = len(stats) * n_per_block
    if not ok:
        return _report("CSV", math.inf, False, n_total, n_per_block, {"inner_singular": True})
    cov_sum = sum(covs)
    value = np.trace(inner_inv @ cov_sum).real / (n_per_block * sig_sum)
    return _report("CSV", value, True, n_total, n_per_block, {})


def t_factors(block_stats):
    """Trace factors (T_CMV, T_CSV) of the constant-kappa_bar regime.

    T_CMV = tr(sum_m sigma_m^2/sum(sigma^2) (sum_i S_i)^{-1} S_m) with
    S_m = sigma_m^2 C_m^{-1}; T_CSV = (1/sum sigma^2)
    tr((sum_i C_i/sigma_i^2)^{-1} sum_m C_m).

    When the background covariance is the same in every block they reduce to
    T_CMV = (d-1) sum p_m^2 and T_CSV = (d-1) M / (sum sigma^2 sum 1/sigma^2)
    with p_m = sigma_m^2 / sum(sigma^2), so
    (d-1)/M <= T_CMV <= d-1 and T_CSV <= (d-1)/M, with equality at a
    constant variance profile.  (With freely varying per-block covariances
    the inequalities can fail; they are properties of the block-constant
    background regime.)
    """
    stats, covs = _unpack(block_stats)
    kb = np.array([s.kappa_bar for s in stats])
    if np.max(np.abs(kb - kb[0])) > 1e-9 * max(1.0, abs(kb[0])):
        raise WrongSpecialCaseError("t_factors requires constant kappa_bar across blocks")
    sig = np.array([s.sigma2 for s in stats])
    sig_sum = sig.sum()
    s_mats = []
    for s2, c in zip(sig, covs):
        inv, ok = pd_inverse(c)
        if not ok:
            raise ValueError("a block covariance is numerically singular")
        s_mats.append(s2 * inv)
    s_sum_inv, ok = pd_inverse(sum(s_mats))
    if not ok:
        raise ValueError("sum of S_m is numerically singular")
    t_cmv = sum(
        (s2 / sig_sum) * np.trace(s_sum_inv @ sm).real for s2, sm in zip(sig, s_mats)
    )
    weighted = sum(c / s2 for s2, c in zip(sig, covs))
    w_inv, ok = pd_inverse(weighted)
    if not ok:
        raise ValueError("weighted covariance sum is numerically singular")
    t_csv = np.trace(w_inv @ sum(covs)).real / sig_sum
    return float(t_cmv), float(t_csv)


def crib_special_allbutone_gaussian(block_stats, k_index, n_per_block):
    """Bounds when every block's source is circular Gaussian except one.

    Returns (cmv_report, csv_report).  The shared-parameter models stay
    identifiable from the single non-Gaussian block; the block-independent
    bound does not exist in this regime.
    """
    stats, covs = _unpack(block_stats)
    m = len(stats)
    if not 0 <= k_index < m:
        raise WrongSpecialCaseError("k_index out of range")
    for i, st in enumerate(stats):
        if i == k_index:
            continue
        if abs(st.kappa_bar - 1.0) > 1e-9:
            raise WrongSpecialCaseError("all blocks but k must be circular Gaussian")
    st_k = stats[k_index]
    n_total = m * n_per_block
    sig_sum = sum(st.sigma2 for st in stats)
    identifiable = st_k.kappa_bar > 1.0
    if not identifiable:
        bad = _report("CMV-allbutone", math.inf, False, n_total, n_per_block, {})
        return bad, _report("CSV-allbutone", math.inf, False, n_total, n_per_block, {})

    inv_covs = [pd_inverse(c)[0] for c in covs]
    c_k = covs[k_index]
    lead = st_k.kappa / (st_k.kappa_bar - 1.0)
    tr_sum = sum(
        np.trace(np.eye(c_k.shape[0]) / st.kappa).real
        + lead / (st.kappa**2) * np.trace(c_k @ ic).real
        for st, ic in zip(stats, inv_covs)
    )
    cmv_value = tr_sum / (n_per_block * sig_sum)
    cmv = _report(
        "CMV-allbutone",
        cmv_value,
        True,
        n_total,
        n_per_block,
        {"k": k_index, "kappa_bar_k": st_k.kappa_bar},
    )
    inv_ck, ok = pd_inverse(c_k)
    csv_value = (
        st_k.sigma2
        / (st_k.kappa_bar - 1.0)
        * np.trace(inv_ck @ sum(covs)).real
        / (n_per_block * sig_sum)
    )
    csv = _report(
        "CSV-allbutone",
        csv_value,
        ok,
        n_total,
        n_per_block,
        {"k": k_index, "kappa_bar_k": st_k.kappa_bar},
    )
    return cmv, csv


def crib_special_vanishing_bg(block_stats, k_index, t_matrix, n_per_block):
    """Shared-mixing-vector bound with a vanishing background on block k.

    The k-th block's background covariance is constructed as
    C_k = (kappa_bar_k - 1)/kappa_k * T, which keeps the inner
    identifiability sum equal to T^{-1} however close the k-th source is to
    Gaussian; every other block's source is circular Gaussian.  The
    kappa_bar of block k is treated as a free parameter of the construction
    (the strictly all-Gaussian reading would make the constructed covariance
    zero), which is flagged in the notes.  The block-independent and
    shared-separating-vector bounds do not exist here and are flagged
    unidentifiable in the terms.
    """
    t_matrix = np.asarray(t_matrix, dtype=complex)
    if not is_hermitian_pd(t_matrix):
        raise ValueError("T must be Hermitian positive definite")
    stats, covs = _unpack(block_stats)
    m = len(stats)
    if not 0 <= k_index < m:
        raise WrongSpecialCaseError("k_index out of range")
    for i, st in enumerate(stats):
        if i != k_index and abs(st.kappa_bar - 1.0) > 1e-9:
            raise WrongSpecialCaseError("blocks other than k must be circular Gaussian")
    st_k = stats[k_index]
    n_total = m * n_per_block
    notes = (
        "kappa_bar of block k treated as a free parameter; the strictly "
        "all-Gaussian limit is not identifiable"
    )
    extra = {"bice_identifiable": False, "csv_identifiable": False, "k": k_index}
    if st_k.kappa_bar <= 1.0:
        return _report("CMV-vanishing-bg", math.inf, False, n_total, n_per_block, extra, notes)
    constructed = [
        ((st_k.kappa_bar - 1.0) / st_k.kappa * t_matrix) if i == k_index else c
        for i, c in enumerate(covs)
    ]
    general = crib_cmv(list(zip(stats, constructed)), n_per_block)
    terms = dict(general.terms)
    terms.update(extra)
    return _report(
        "CMV-vanishing-bg",
        general.value,
        general.identifiable,
        n_total,
        n_per_block,
        terms,
        notes,
    )


# ---------------------------------------------------------------------------
# Brute-force oracle: numeric full-FIM inversion + ISR trace

def crib_brute_force(family, block_stats, n_per_block):
    """Bound via numeric inversion of the doubled FIM.

    Assembles [[F, P], [P*, F*]] from the per-block statistics, inverts it
    numerically, extracts the diagonal blocks corresponding to the
    separating coefficients, and applies the ISR trace weighting
    (1/sum sigma^2) sum_m tr(C_m CRLB(h^m)).  Independent of the hand-derived
    closed forms.
    """
    stats = [(s, _as_bg_stats(b)) for s, b in block_stats]
    m = len(stats)
    sig_sum = sum(s.sigma2 for s, _ in stats)

    def h_block(fim, name):
        j_inv = np.linalg.inv(fim.full)
        sl = fim.slice_of(name)
        return j_inv[sl, sl] / n_per_block

    if family == "bice":
        total = 0.0
        for s, b in stats:
            fim = fim_ice(s, b)
            total += np.trace(b.cov @ h_block(fim, "h")).real
        return total / sig_sum
    if family == "ice":
        if m != 1:
            raise ValueError("ice family takes exactly one block")
        s, b = stats[0]
        fim = fim_ice(s, b)
        return np.trace(b.cov @ h_block(fim, "h")).real / sig_sum
    if family == "cmv":
        fim = fim_cmv([(s, b) for s, b in stats])
        j_inv = np.linalg.inv(fim.full)
        total = 0.0
        for i, (s, b) in enumerate(stats):
            sl = fim.slice_of(f"h{i}")
            total += np.trace(b.cov @ j_inv[sl, sl]).real / n_per_block
        return total / sig_sum
    if family == "csv":
        fim = fim_csv([(s, b) for s, b in stats])
        j_inv = np.linalg.inv(fim.full)
        sl = fim.slice_of("h")
        crlb_h = j_inv[sl, sl] / n_per_block
        total = sum(np.trace(b.cov @ crlb_h).real for _, b in stats)
        return total / sig_sum
    raise ValueError(f"unknown family {family!r}")


# ---------------------------------------------------------------------------
# Equivariance diagnostic

def _free_param_grads(params, x, psi_s, psi_z):
    """Per-sample Wirtinger gradients of the extraction log-likelihood with
    respect to the free pair theta = [a; w], at the true parameter point."""
    d = params.d
    n = x.shape[1]
    gamma, h = params.gamma, params.h
    beta = params.beta
    x1 = x[0]
    x2 = x[1:]
    grad = np.empty((2 * d, n), dtype=complex)
    # d/da*: [sum_j psi_zj x2j* + conj((d-2)/gamma) + beta ; -psi_z x1* + h]
    grad[0] = np.sum(psi_z * x2.conj(), axis=0) + np.conj((d - 2) / gamma) + beta
    grad[1:d] = -psi_z * x1.conj()[None, :] + h[:, None]
    # d/dw*: -conj(psi_s) x + a  (det factor beta* gamma + h^H g = 1 at truth)
    grad[d:] = -psi_s.conj()[None, :] * x + params.a[:, None]
    return grad


def equivariance_check(params, src_spec, bg, n_samples, seed):
    """Empirical check that the FIM transported from ``params`` to the
    identity coordinates matches the FIM estimated at the identity point.

    Both estimates share the same source/background draws, the parameter
    pair is theta = [a; w], and the transported matrix is K^H F_hat K with
    K = diag(A_ICE, W_ICE^H).  The deviation is the relative Frobenius
    distance over every block touching the separating-vector coordinates
    (the w rows/columns), which is the part of the information matrix the
    ISR bound rests on; the mixing-vector self-block carries
    coordinate-dependent information about the background rows and is not
    equivariant at finite mixing.  The deviation vanishes identically at the
    identity point and decays like 1/sqrt(n_samples) elsewhere.
    """
    rng = as_generator(seed)
    d = params.d
    eye_params = IceParams(1.0 + 0.0j, np.zeros(d - 1), np.zeros(d - 1))

    s, z, psi_s, psi_z = _draw_block(src_spec, bg, n_samples, rng)

    def transported(p):
        a_mat = ice_mixing(p)
        w_mat = ice_demixing(p)
        x = a_mat @ np.concatenate((s[None, :], z), axis=0)
        grad = _free_param_grads(p, x, psi_s, psi_z)
        f_hat = grad @ grad.conj().T / n_samples
        # gradients transform by K^H under theta = K theta_q
        k_mat = np.zeros((2 * d, 2 * d), dtype=complex)
        k_mat[:d, :d] = a_mat
        k_mat[d:, d:] = w_mat.conj().T
        return k_mat.conj().T @ f_hat @ k_mat

    f_q = transported(params)
    f_i = transported(eye_params)
    mask = np.zeros((2 * d, 2 * d), dtype=bool)
    mask[d:, :] = True
    mask[:, d:] = True
    num = np.linalg.norm((f_q - f_i)[mask])
    den = np.linalg.norm(f_i[mask])
    return float(num / den)


# ---------------------------------------------------------------------------
# Helpers used by scenario configuration

def kappa_z_tilde_from(bg_stats):
    """Score power of the whitened background: C^{1/2} kappa_z C^{1/2}."""
    root, _ = pd_sqrt(bg_stats.cov)
    return hermitize(root @ bg_stats.kappa_z @ root)
