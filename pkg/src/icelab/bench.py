"""Monte Carlo harness: trial orchestration, exact ISR evaluation against
ground truth, trimmed-mean aggregation, and bound attachment."""

import hashlib
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .crlb import (
    CribReport,
    crib_bice,
    crib_cmv,
    crib_csv,
    crib_ice_circular,
    crib_ice_gauss,
)
from .csignal import (
    DependentBgSpec,
    GgdSpec,
    dependent_bg_score,
    empirical_kappa_z,
    ggd_kappa_bar,
    sample_dependent_bg,
    source_stats,
)
from .extract import ExtractOptions, bice, bogice_cmv, bogice_csv, ngice, ogice, perturbed_init
from .mixmodel import IceParams, ModelBlock, ice_mixing, make_model, random_model

ALGORITHMS = ("ogice", "ngice", "bice", "bogice_cmv", "bogice_csv")
BG_KINDS = ("mixing", "identity", "dependent")


def isr_exact(w_hat, model_block):
    """Exact interference-to-signal ratio of a separating vector.

    With q1 = w^H a and q2^H = w^H Q the ratio is
    (q2^H C_z q2) / (|q1|^2 sigma_s^2); a vanishing q1 means total failure
    and returns +inf.
    """
    w_hat = np.asarray(w_hat, dtype=complex)
    if not np.any(w_hat):
        raise ValueError("w_hat must be nonzero")
    a = model_block.ice.a
    q_mix = ice_mixing(model_block.ice)
    q1 = np.vdot(w_hat, a)
    q2h = w_hat.conj() @ q_mix[:, 1:]
    num = float(np.real(q2h @ model_block.bg_cov @ q2h.conj()))
    den = abs(q1) ** 2 * model_block.soi.variance
    if den == 0.0:
        return math.inf
    return num / den


def isr_blocks(w_hats, model):
    """Aggregate ISR over blocks: the summed interference powers against the
    summed signal powers."""
    if len(w_hats) != model.n_blocks:
        raise ValueError("need one separating vector per block")
    num = 0.0
    den = 0.0
    for w_hat, blk in zip(w_hats, model.blocks):
        w_hat = np.asarray(w_hat, dtype=complex)
        q_mix = ice_mixing(blk.ice)
        q1 = np.vdot(w_hat, blk.ice.a)
        q2h = w_hat.conj() @ q_mix[:, 1:]
        num += float(np.real(q2h @ blk.bg_cov @ q2h.conj()))
        den += abs(q1) ** 2 * blk.soi.variance
    if den == 0.0:
        return math.inf
    return num / den


def trimmed_mean(values, frac=0.10):
    """Mean after discarding floor(frac*n) smallest and largest values.

    Infinities surviving the trim propagate to the result.
    """
    values = np.asarray(values, dtype=float)
    n = values.size
    if n < 3:
        raise ValueError("need at least 3 values for a trimmed mean")
    k = int(math.floor(frac * n))
    interior = np.sort(values)[k : n - k]
    return float(np.mean(interior))


def db(x):
    if x == 0.0:
        return -math.inf
    if not math.isfinite(x):
        return math.inf
    return 10.0 * math.log10(x)


def rescale_soi(model, c):
    """Re-express the ground truth under the source scaling ambiguity.

    (gamma, g, h, sigma^2, C_z) -> (c gamma, c g, h/conj(c), sigma^2/|c|^2,
    |c|^2 C_z); the observation distribution (and any realized dataset) is
    unchanged, and the exact ISR of any fixed separating vector is invariant.
    """
    if c == 0:
        raise ValueError("c must be nonzero")
    blocks = []
    for blk in model.blocks:
        ice = IceParams(c * blk.ice.gamma, c * blk.ice.g, blk.ice.h / np.conj(c))
        soi = GgdSpec(blk.soi.alpha, blk.soi.circ, blk.soi.variance / abs(c) ** 2)
        blocks.append(ModelBlock(ice, soi, abs(c) ** 2 * blk.bg_cov, blk.bg_model))
    return make_model(blocks, model.sharing, model.n_per_block)


@dataclass(frozen=True)
class ScenarioConfig:
    """One Monte Carlo experiment: model family, signals, algorithm, sizes."""

    scenario_id: str
    d: int
    n_blocks: int
    n_per_block: int
    sharing: str
    algorithm: str
    soi_alpha: float
    soi_circ: float = 0.0
    variances: tuple = ()  # per-block SOI variances; empty = all 1
    bg_kind: str = "mixing"
    bg_alpha: float = 2.0  # shape of the dependent background
    init_eps: float = 0.1
    init_mode: str = "matched"
    n_trials: int = 100
    seed: int = 0
    max_iter: int = 1000
    tol: float = 1e-6
    mc_kappa_samples: int = 200_000

    def __post_init__(self):
        if self.algorithm not in ALGORITHMS:
            raise ValueError(f"algorithm must be one of {ALGORITHMS}")
        if self.init_mode not in ("matched", "beamformer"):
            raise ValueError("init_mode must be 'matched' or 'beamformer'")
        if self.bg_kind not in BG_KINDS:
            raise ValueError(f"bg_kind must be one of {BG_KINDS}")
        if self.variances and len(self.variances) != self.n_blocks:
            raise ValueError("variances must list one value per block")
        if self.variances and len(set(self.variances)) > 1 and self.bg_kind == "mixing":
            raise ValueError(
                "varying-variance scenarios need bg_kind='identity' so the "
                "attached bound is exact"
            )
        if self.bg_kind == "dependent" and self.algorithm not in ("ogice", "ngice"):
            raise ValueError("dependent background is a single-block scenario")
        object.__setattr__(self, "variances", tuple(self.variances))

    @property
    def n_total(self):
        return self.n_blocks * self.n_per_block

    def soi_specs(self):
        var = self.variances or (1.0,) * self.n_blocks
        return [GgdSpec(self.soi_alpha, self.soi_circ, v) for v in var]

    def to_dict(self):
        return asdict(self)

    @property
    def config_hash(self):
        text = json.dumps(self.to_dict(), sort_keys=True)
        return hashlib.sha256(text.encode()).hexdigest()[:16]


@dataclass(frozen=True)
class TrialStats:
    """Per-trial ISRs and their trimmed-mean aggregate for one scenario."""

    scenario_id: str
    isr_linear: tuple
    isr_db: tuple
    trimmed_mean_db: float
    n_trials: int
    n_diverged: int
    crib: CribReport
    config: dict
    config_hash: str
    converged: tuple

    @property
    def trimmed_mean_linear(self):
        return trimmed_mean(self.isr_linear)

    def to_dict(self):
        def scrub(v):
            if isinstance(v, float) and not math.isfinite(v):
                return None
            return v

        return {
            "scenario_id": self.scenario_id,
            "isr_linear": [scrub(v) for v in self.isr_linear],
            "isr_db": [scrub(v) for v in self.isr_db],
            "trimmed_mean_db": scrub(self.trimmed_mean_db),
            "n_trials": self.n_trials,
            "n_diverged": self.n_diverged,
            "crib": self.crib.to_dict(),
            "config": self.config,
            "config_hash": self.config_hash,
            "converged": list(self.converged),
        }

    def to_json(self, indent=None):
        return json.dumps(self.to_dict(), indent=indent, sort_keys=True)

    def to_csv(self):
        lines = ["scenario_id,trial,seed,isr_db,converged"]
        seed = self.config["seed"]
        for i, (v, conv) in enumerate(zip(self.isr_db, self.converged)):
            val = f"{v:.10g}" if math.isfinite(v) else "inf"
            lines.append(f"{self.scenario_id},{i},{seed}:{i},{val},{int(conv)}")
        return "\n".join(lines) + "\n"


def scenario_crib(config):
    """The bound matching the scenario's algorithm and model family."""
    specs = config.soi_specs()
    stats = [source_stats(sp) for sp in specs]
    d, nb, n = config.d, config.n_per_block, config.n_total
    eye = np.eye(d - 1)
    if config.bg_kind == "dependent":
        bg = DependentBgSpec(config.bg_alpha, config.d - 1)
        if config.algorithm == "ngice":
            z = sample_dependent_bg(bg, config.mc_kappa_samples, config.seed + 1)
            kzt = empirical_kappa_z(lambda v: dependent_bg_score(bg, v), z)
            return crib_ice_circular(stats[0], kzt, n)
        return crib_ice_gauss(d, n, stats[0].kappa_bar)
    if config.algorithm in ("ogice", "ngice"):
        return crib_ice_gauss(d, n, stats[0].kappa_bar)
    if config.algorithm == "bice":
        return crib_bice(stats, d, nb)
    block_stats = [(st, eye) for st in stats]
    if config.algorithm == "bogice_cmv":
        return crib_cmv(block_stats, nb)
    return crib_csv(block_stats, nb)


def _trial_seeds(config, index):
    root = np.random.SeedSequence(config.seed)
    return root.spawn(config.n_trials)[index].spawn(3)

def run_trial(config, index):
    """One fully seeded trial: draw model, synthesize, initialize, extract,
    score.  Pure function of (config, index)."""
    seed_model, seed_synth, seed_init = _trial_seeds(config, index)
    specs = config.soi_specs()
    bg_arg = (
        DependentBgSpec(config.bg_alpha, config.d - 1)
        if config.bg_kind == "dependent"
        else ("mixing" if config.bg_kind == "mixing" else np.eye(config.d - 1))
    )
    blocks = random_model(
        config.d,
        config.n_blocks,
        config.sharing,
        specs,
        bg_arg,
        np.random.default_rng(seed_model),
    )
    model = make_model(blocks, config.sharing, config.n_per_block)
    ds_rng = np.random.default_rng(seed_synth)
    from .mixmodel import synthesize

    ds = synthesize(model, ds_rng)
    init_rng = np.random.default_rng(seed_init)
    opts = ExtractOptions(config.max_iter, config.tol, 0.5, specs)

    if config.algorithm in ("ogice", "ngice"):
        x = ds.observations
        # the perturbed true mixing column serves as the initial separating
        # vector, either directly or through the sample-covariance beamformer
        w0 = perturbed_init(model.blocks[0].ice.a, config.init_eps, init_rng)
        if config.init_mode == "beamformer":
            cov = x @ x.conj().T / x.shape[1]
            w0 = np.linalg.solve(cov, w0)
        if config.algorithm == "ogice":
            res = ogice(x, ExtractOptions(config.max_iter, config.tol, 0.5, specs[0]), w0)
        else:
            bg_model = model.blocks[0].bg_model
            if bg_model is None:
                raise ValueError("ngice scenarios need a dependent background")
            res = ngice(x, ExtractOptions(config.max_iter, config.tol, 0.5, specs[0]), w0, bg_model)
        isr = isr_exact(res.w, model.blocks[0])
    elif config.algorithm == "bice":
        inits = [
            perturbed_init(blk.ice.a, config.init_eps, init_rng) for blk in model.blocks
        ]
        res = bice(ds.blocks, opts, inits)
        isr = isr_blocks(res.w_per_block, model)
    elif config.algorithm == "bogice_cmv":
        a0 = perturbed_init(model.blocks[0].ice.a, config.init_eps, init_rng)
        res = bogice_cmv(ds.blocks, opts, a0)
        isr = isr_blocks(res.w_per_block, model)
    else:
        w0 = perturbed_init(model.blocks[0].ice.w, config.init_eps, init_rng)
        res = bogice_csv(ds.blocks, opts, w0)
        isr = isr_blocks(res.w_per_block, model)
    return {"isr": float(isr), "converged": bool(res.converged)}


def run_scenario(config, jobs=None):
    """Run every trial of a scenario and aggregate.

    Per-trial seeds are spawned from the scenario seed by counter, and
    results are assembled in trial order, so the output is identical
    whatever the parallelism (``jobs`` defaults to the ICELAB_JOBS
    environment variable, serial otherwise).
    """
    if jobs is None:
        jobs = int(os.environ.get("ICELAB_JOBS", "1"))
    indices = range(config.n_trials)
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(run_trial, [config] * config.n_trials, indices))
    else:
        rows = [run_trial(config, i) for i in indices]
    isr_linear = tuple(r["isr"] for r in rows)
    converged = tuple(r["converged"] for r in rows)
    isr_db = tuple(db(v) for v in isr_linear)
    n_diverged = sum(
        1 for r in rows if not r["converged"] or not math.isfinite(r["isr"])
    )
    return TrialStats(
        scenario_id=config.scenario_id,
        isr_linear=isr_linear,
        isr_db=isr_db,
        trimmed_mean_db=db(trimmed_mean(isr_linear)),
        n_trials=config.n_trials,
        n_diverged=n_diverged,
        crib=scenario_crib(config),
        config=config.to_dict(),
        config_hash=config.config_hash,
        converged=converged,
    )
