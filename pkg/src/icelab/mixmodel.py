"""ICE mixing algebra and its piecewise CMV/CSV extensions.

One-source extraction re-parameterizes a nonsingular mixing matrix A as

    A_ICE = [[gamma, h^H], [g, (g h^H - I)/gamma]],
    W_ICE = A_ICE^{-1} = [[conj(beta), h^H], [g, -gamma I]],

with ``conj(beta) * gamma = 1 - h^H g``.  The first column ``a = [gamma; g]``
is the mixing vector of the source of interest; the first row of W_ICE is
``w^H`` with ``w = [beta; h]`` the separating vector.  Piecewise models share
``(gamma, g)`` across blocks (constant mixing vector, CMV) or ``(beta, h)``
(constant separating vector, CSV).
"""

import json
from dataclasses import dataclass, field

import numpy as np

from ._util import as_generator, complex_to_pairs, crandn, hermitize, pairs_to_complex
from .csignal import DependentBgSpec, GgdSpec, sample_dependent_bg, sample_ggd

SHARING_MODES = ("independent", "cmv", "csv")

#: Condition-number threshold above which a drawn mixing matrix is rejected.
COND_LIMIT = 1e12


class SingularParameterizationError(ValueError):
    """gamma = 0 makes the ICE parameterization singular."""


class DegenerateBlockError(ValueError):
    """A CSV block with 1 - h^H g^m = 0 has a singular mixing matrix."""


@dataclass(frozen=True)
class IceParams:
    """ICE mixing parameter set (gamma, g, h); beta is derived."""

    gamma: complex
    g: np.ndarray
    h: np.ndarray

    def __post_init__(self):
        if self.gamma == 0:
            raise SingularParameterizationError("gamma must be nonzero")
        object.__setattr__(self, "g", np.asarray(self.g, dtype=complex))
        object.__setattr__(self, "h", np.asarray(self.h, dtype=complex))
        if self.g.shape != self.h.shape or self.g.ndim != 1:
            raise ValueError("g and h must be 1-d arrays of equal length")

    @property
    def d(self):
        return self.g.size + 1

    @property
    def beta(self):
        return np.conj((1.0 - np.vdot(self.h, self.g)) / self.gamma)

    @property
    def a(self):
        """Mixing vector of the source of interest, first column of A_ICE."""
        return np.concatenate(([self.gamma], self.g))

    @property
    def w(self):
        """Separating vector; w^H is the first row of W_ICE."""
        return np.concatenate(([self.beta], self.h))


def ice_mixing(params):
    """Assemble the d x d mixing matrix A_ICE."""
    g, h, gamma = params.g, params.h, params.gamma
    d = params.d
    a = np.empty((d, d), dtype=complex)
    a[0, 0] = gamma
    a[0, 1:] = h.conj()
    a[1:, 0] = g
    a[1:, 1:] = (np.outer(g, h.conj()) - np.eye(d - 1)) / gamma
    return a


def ice_demixing(params):
    """Assemble W_ICE = A_ICE^{-1} in closed form."""
    g, h, gamma = params.g, params.h, params.gamma
    d = params.d
    w = np.empty((d, d), dtype=complex)
    w[0, 0] = np.conj(params.beta)
    w[0, 1:] = h.conj()
    w[1:, 0] = g
    w[1:, 1:] = -gamma * np.eye(d - 1)
    return w


def ice_background_rows(params):
    """B = rows 2..d of W_ICE; B x recovers the background z."""
    return np.concatenate((params.g[:, None], -params.gamma * np.eye(params.d - 1)), axis=1)


def csv_gamma(h, g_m):
    """Dependent gamma^m = 1 - h^H g^m of a CSV block (beta = 1 scaling)."""
    val = 1.0 - np.vdot(h, g_m)
    if val == 0:
        raise DegenerateBlockError("1 - h^H g^m = 0: block mixing matrix is singular")
    return complex(val)


@dataclass(frozen=True)
class ModelBlock:
    """One block: ICE parameters, SOI model, background description.

    ``bg_cov`` is the covariance of the background z in ICE coordinates.
    When ``bg_model`` is set the block's background is drawn from that
    dependent family instead of a circular Gaussian (its covariance is the
    identity, which ``bg_cov`` must then equal).
    """

    ice: IceParams
    soi: GgdSpec
    bg_cov: np.ndarray
    bg_model: DependentBgSpec | None = None

    def __post_init__(self):
        cov = np.asarray(self.bg_cov, dtype=complex)
        object.__setattr__(self, "bg_cov", cov)
        if cov.shape != (self.ice.d - 1, self.ice.d - 1):
            raise ValueError("bg_cov shape does not match the block dimension")
        if self.bg_model is not None and not np.allclose(cov, np.eye(self.ice.d - 1)):
            raise ValueError("a dependent background has identity covariance")


@dataclass(frozen=True)
class PiecewiseModel:
    """M blocks plus a sharing mode and per-block sample count."""

    blocks: tuple
    sharing: str
    n_per_block: int

    def __post_init__(self):
        object.__setattr__(self, "blocks", tuple(self.blocks))
        if self.sharing not in SHARING_MODES:
            raise ValueError(f"sharing must be one of {SHARING_MODES}")
        if len(self.blocks) < 1:
            raise ValueError("need at least one block")
        if self.n_per_block < 1:
            raise ValueError("n_per_block must be positive")
        d = self.blocks[0].ice.d
        if any(b.ice.d != d for b in self.blocks):
            raise ValueError("all blocks must have the same dimension")
        first = self.blocks[0].ice
        if self.sharing == "cmv":
            for b in self.blocks:
                if b.ice.gamma != first.gamma or not np.array_equal(b.ice.g, first.g):
                    raise ValueError("cmv blocks must share (gamma, g) exactly")
        elif self.sharing == "csv":
            for b in self.blocks:
                if not np.array_equal(b.ice.h, first.h):
                    raise ValueError("csv blocks must share h exactly")
                # beta is derived through a complex division, so allow
                # last-ulp noise
                if abs(b.ice.beta - first.beta) > 1e-12 * max(1.0, abs(first.beta)):
                    raise ValueError("csv blocks must share beta")

    @property
    def d(self):
        return self.blocks[0].ice.d

    @property
    def n_blocks(self):
        return len(self.blocks)

    @property
    def n_total(self):
        return self.n_per_block * len(self.blocks)


@dataclass(frozen=True)
class Dataset:
    """Synthesized observations with their generating ground truth."""

    observations: np.ndarray  # d x (M * n_per_block)
    model: PiecewiseModel
    sources: tuple  # per-block SOI samples
    backgrounds: tuple  # per-block background samples

    def block(self, m):
        nb = self.model.n_per_block
        return self.observations[:, m * nb : (m + 1) * nb]

    @property
    def blocks(self):
        return [self.block(m) for m in range(self.model.n_blocks)]


def _convert_gamma_one(a_raw):
    """Scale a raw mixing column so its first entry (gamma) is 1."""
    gamma_raw = a_raw[0]
    if abs(gamma_raw) < 1e-12:
        raise np.linalg.LinAlgError("gamma too small")
    a = a_raw / gamma_raw
    return a[1:]


def _bg_cov_from(bg, m, d, a2_raw, bmat):
    """Resolve a block's background description into (cov, bg_model)."""
    if isinstance(bg, str) and bg == "mixing":
        t = bmat @ a2_raw
        return hermitize(t @ t.conj().T), None
    if isinstance(bg, DependentBgSpec):
        if bg.dim != d - 1:
            raise ValueError("dependent background dimension must be d - 1")
        return np.eye(d - 1, dtype=complex), bg
    if isinstance(bg, (list, tuple)):
        return np.asarray(bg[m], dtype=complex), None
    return np.asarray(bg, dtype=complex), None


def random_model(d, n_blocks, sharing, soi, bg="mixing", seed=None, max_tries=100):
    """Draw a random piecewise model with CN(0,1) mixing.

    Each block's mixing matrix starts from i.i.d. CN(0,1) entries and is
    converted to ICE coordinates under the sharing mode's scale fix
    (gamma = 1 for independent/cmv, beta = 1 for csv); the shared parameter
    is copied from block 1.  ``bg="mixing"`` derives each block's background
    covariance from the raw draw, so the observations are distributed
    exactly as raw-mixed unit-variance independent Gaussians; alternatively
    pass an explicit covariance (or one per block) or a DependentBgSpec.

    ``soi`` is a GgdSpec or a per-block sequence of them.
    """
    if d < 2 or n_blocks < 1:
        raise ValueError("need d >= 2 and n_blocks >= 1")
    if sharing not in SHARING_MODES:
        raise ValueError(f"sharing must be one of {SHARING_MODES}")
    soi_list = list(soi) if isinstance(soi, (list, tuple)) else [soi] * n_blocks
    if len(soi_list) != n_blocks:
        raise ValueError("per-block soi list must have n_blocks entries")
    rng = as_generator(seed)

    def draw_full():
        for _ in range(max_tries):
            a = crandn(rng, d, d)
            if np.linalg.cond(a) < COND_LIMIT:
                return a
        raise RuntimeError(f"no well-conditioned draw in {max_tries} attempts")

    blocks = []
    if sharing in ("independent", "cmv"):
        shared_g = None
        for m in range(n_blocks):
            for _ in range(max_tries):
                raw = draw_full()
                try:
                    if sharing == "cmv" and m > 0:
                        g = shared_g
                        composed = np.concatenate(
                            (np.concatenate(([1.0], g))[:, None], raw[:, 1:]), axis=1
                        )
                    else:
                        g = _convert_gamma_one(raw[:, 0])
                        composed = np.concatenate(
                            (np.concatenate(([1.0], g))[:, None], raw[:, 1:]), axis=1
                        )
                    if np.linalg.cond(composed) > COND_LIMIT:
                        raise np.linalg.LinAlgError("composed matrix ill-conditioned")
                    w_row = np.linalg.inv(composed)[0, :]
                except np.linalg.LinAlgError:
                    continue
                h = w_row.conj()[1:]
                params = IceParams(1.0 + 0.0j, g, h)
                bmat = ice_background_rows(params)
                cov, bgm = _bg_cov_from(bg, m, d, raw[:, 1:], bmat)
                blocks.append(ModelBlock(params, soi_list[m], cov, bgm))
                if m == 0:
                    shared_g = g
                break
            else:
                raise RuntimeError(f"no valid block after {max_tries} attempts")
    else:  # csv
        shared_h = None
        for m in range(n_blocks):
            for _ in range(max_tries):
                raw = draw_full()
                if m == 0:
                    w_raw = np.linalg.inv(raw)[0, :].conj()
                    if abs(w_raw[0]) < 1e-12:
                        continue
                    shared_h = (w_raw / w_raw[0])[1:]
                w = np.concatenate(([1.0], shared_h))
                denom = np.vdot(w, raw[:, 0])
                if abs(denom) < 1e-12:
                    continue
                g_m = raw[1:, 0] / denom
                try:
                    gamma_m = csv_gamma(shared_h, g_m)
                except DegenerateBlockError:
                    continue
                params = IceParams(gamma_m, g_m, shared_h)
                bmat = ice_background_rows(params)
                cov, bgm = _bg_cov_from(bg, m, d, raw[:, 1:], bmat)
                blocks.append(ModelBlock(params, soi_list[m], cov, bgm))
                break
            else:
                raise RuntimeError(f"no valid block after {max_tries} attempts")

    return blocks


def make_model(blocks, sharing, n_per_block):
    return PiecewiseModel(tuple(blocks), sharing, n_per_block)


def synthesize(model, seed):
    """Draw sources per block and mix them: x^m = A_ICE^m [s^m; z^m]."""
    rng = as_generator(seed)
    seeds = rng.spawn(2 * model.n_blocks) if hasattr(rng, "spawn") else None
    obs = []
    sources = []
    backgrounds = []
    for m, blk in enumerate(model.blocks):
        rs = seeds[2 * m] if seeds is not None else rng
        rz = seeds[2 * m + 1] if seeds is not None else rng
        s = sample_ggd(blk.soi, model.n_per_block, rs)
        if blk.bg_model is not None:
            z = sample_dependent_bg(blk.bg_model, model.n_per_block, rz)
        else:
            root = np.linalg.cholesky(hermitize(blk.bg_cov))
            z = root @ crandn(as_generator(rz), blk.ice.d - 1, model.n_per_block)
        x = ice_mixing(blk.ice) @ np.concatenate((s[None, :], z), axis=0)
        obs.append(x)
        sources.append(s)
        backgrounds.append(z)
    return Dataset(np.concatenate(obs, axis=1), model, tuple(sources), tuple(backgrounds))


# ---------------------------------------------------------------------------
# JSON serialization (complex numbers as [re, im] pairs)

def _block_to_dict(blk):
    return {
        "gamma": [blk.ice.gamma.real, blk.ice.gamma.imag],
        "g": complex_to_pairs(blk.ice.g),
        "h": complex_to_pairs(blk.ice.h),
        "soi": {"alpha": blk.soi.alpha, "circ": blk.soi.circ, "variance": blk.soi.variance},
        "bg_cov": complex_to_pairs(blk.bg_cov),
        "bg_model": None
        if blk.bg_model is None
        else {"alpha": blk.bg_model.alpha, "dim": blk.bg_model.dim},
    }


def _block_from_dict(d):
    ice = IceParams(
        complex(d["gamma"][0], d["gamma"][1]), pairs_to_complex(d["g"]), pairs_to_complex(d["h"])
    )
    soi = GgdSpec(**d["soi"])
    bgm = None if d["bg_model"] is None else DependentBgSpec(**d["bg_model"])
    return ModelBlock(ice, soi, pairs_to_complex(d["bg_cov"]), bgm)


def model_to_json(model, indent=None):
    doc = {
        "sharing": model.sharing,
        "n_per_block": model.n_per_block,
        "blocks": [_block_to_dict(b) for b in model.blocks],
    }
    return json.dumps(doc, indent=indent, sort_keys=True)


def model_from_json(text):
    doc = json.loads(text)
    blocks = tuple(_block_from_dict(b) for b in doc["blocks"])
    return PiecewiseModel(blocks, doc["sharing"], doc["n_per_block"])


def dataset_to_json(ds, indent=None):
    doc = {
        "model": json.loads(model_to_json(ds.model)),
        "observations": complex_to_pairs(ds.observations),
        "sources": [complex_to_pairs(s) for s in ds.sources],
        "backgrounds": [complex_to_pairs(z) for z in ds.backgrounds],
    }
    return json.dumps(doc, indent=indent, sort_keys=True)


def dataset_from_json(text):
    doc = json.loads(text)
    model = model_from_json(json.dumps(doc["model"]))
    return Dataset(
        pairs_to_complex(doc["observations"]),
        model,
        tuple(pairs_to_complex(s) for s in doc["sources"]),
        tuple(pairs_to_complex(z) for z in doc["backgrounds"]),
    )
