"""icelab: complex blind source extraction models, Cramér-Rao ISR bounds,
maximum-likelihood extraction, and Monte Carlo verification."""

from ._kernels import BACKEND as KERNEL_BACKEND
from .bench import (
    ScenarioConfig,
    TrialStats,
    isr_blocks,
    isr_exact,
    rescale_soi,
    run_scenario,
    trimmed_mean,
)
from .crlb import (
    CribReport,
    FimBlocks,
    crib_bice,
    crib_brute_force,
    crib_cmv,
    crib_csv,
    crib_ice_circular,
    crib_ice_gauss,
    crib_special_allbutone_gaussian,
    crib_special_vanishing_bg,
    crlb_h_gauss,
    equivariance_check,
    fim_cmv,
    fim_csv,
    fim_empirical,
    fim_ice,
    t_factors,
)
from .csignal import (
    BgStats,
    DependentBgSpec,
    GaussianBg,
    GgdSpec,
    SourceStats,
    bg_stats_dependent,
    bg_stats_gaussian,
    dependent_bg_score,
    empirical_kappa_z,
    ggd_kappa_bar,
    ggd_logpdf,
    ggd_score,
    sample_dependent_bg,
    sample_ggd,
    source_stats,
)
from .extract import (
    ExtractOptions,
    ExtractionResult,
    bice,
    bogice_cmv,
    bogice_csv,
    ngice,
    ogice,
    perturbed_init,
)
from .mixmodel import (
    Dataset,
    IceParams,
    ModelBlock,
    PiecewiseModel,
    csv_gamma,
    dataset_from_json,
    dataset_to_json,
    ice_demixing,
    ice_mixing,
    make_model,
    model_from_json,
    model_to_json,
    random_model,
    synthesize,
)
from .presets import PRESETS

__version__ = "0.1.0"
