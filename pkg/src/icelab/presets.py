"""Scenario presets: one per benchmark figure family.

A preset is a sweep along one axis with one or more algorithm series; each
(series, axis point) pair is a fully seeded ScenarioConfig.
"""

from dataclasses import dataclass

from .bench import ScenarioConfig

#: Block variance profiles of the varying-variance experiment (M = 5).
VARIANCE_TYPES = {
    "A": (1.0, 1.0, 1.0, 1.0, 1.0),
    "B": (1.0, 1.0, 2.0, 3.0, 3.0),
    "C": (1.0, 2.0, 3.0, 4.0, 5.0),
    "D": (1.0, 4.0, 9.0, 16.0, 25.0),
}


@dataclass(frozen=True)
class Preset:
    name: str
    axis: str
    axis_values: tuple
    series: tuple  # ((label, (ScenarioConfig, ...)), ...)

    def configs(self):
        for label, cfgs in self.series:
            for value, cfg in zip(self.axis_values, cfgs):
                yield label, value, cfg


def _ogice_sweep(name, axis, values, make_cfg):
    cfgs = tuple(make_cfg(v) for v in values)
    return Preset(name, axis, tuple(values), (("ogice", cfgs),))


def _build_presets():
    presets = {}

    n_values = (500, 1000, 2500, 5000, 10000)
    presets["fig-naN"] = _ogice_sweep(
        "fig-naN",
        "n_total",
        n_values,
        lambda n: ScenarioConfig(
            scenario_id=f"fig-naN-{n}",
            d=5,
            n_blocks=1,
            n_per_block=n,
            sharing="independent",
            algorithm="ogice",
            soi_alpha=2.0,
            n_trials=100,
            seed=101,
        ),
    )

    alpha_values = (0.5, 0.75, 1.0, 1.5, 2.0, 3.0, 4.0)
    presets["fig-naAlpha"] = _ogice_sweep(
        "fig-naAlpha",
        "soi_alpha",
        alpha_values,
        lambda a: ScenarioConfig(
            scenario_id=f"fig-naAlpha-{a}",
            d=5,
            n_blocks=1,
            n_per_block=2500,
            sharing="independent",
            algorithm="ogice",
            soi_alpha=a,
            n_trials=100,
            seed=102,
        ),
    )

    circ_values = (0.0, 0.2, 0.4, 0.6, 0.8, 0.95)
    presets["fig-naCircu"] = _ogice_sweep(
        "fig-naCircu",
        "soi_circ",
        circ_values,
        lambda c: ScenarioConfig(
            scenario_id=f"fig-naCircu-{c}",
            d=5,
            n_blocks=1,
            n_per_block=2500,
            sharing="independent",
            algorithm="ogice",
            soi_alpha=1.0,
            soi_circ=c,
            n_trials=100,
            seed=103,
        ),
    )

    bg_alphas = (0.5, 1.5, 2.0, 3.0)
    series = []
    for alg in ("ogice", "ngice"):
        cfgs = tuple(
            ScenarioConfig(
                scenario_id=f"fig-ng-background-{alg}-{a}",
                d=4,
                n_blocks=1,
                n_per_block=5000,
                sharing="independent",
                algorithm=alg,
                soi_alpha=a + 1.0,
                bg_kind="dependent",
                bg_alpha=a,
                init_mode="beamformer",
                n_trials=100,
                seed=104,
            )
            for a in bg_alphas
        )
        series.append((alg, cfgs))
    presets["fig-ng-background"] = Preset(
        "fig-ng-background", "bg_alpha", bg_alphas, tuple(series)
    )

    m_values = (1, 2, 5, 10)
    for fig, sharing, alg, seed in (
        ("fig-cmvMvar", "cmv", "bogice_cmv", 105),
        ("fig-csvMvar", "csv", "bogice_csv", 106),
    ):
        cfgs = tuple(
            ScenarioConfig(
                scenario_id=f"{fig}-M{m}",
                d=5,
                n_blocks=m,
                n_per_block=5040 // m,
                sharing=sharing,
                algorithm=alg,
                soi_alpha=2.0,
                n_trials=500,
                seed=seed,
            )
            for m in m_values
        )
        presets[fig] = Preset(fig, "n_blocks", m_values, ((alg, cfgs),))

    type_names = tuple(VARIANCE_TYPES)
    for fig, sharing, alg, seed in (
        ("fig-cmvSvar", "cmv", "bogice_cmv", 107),
        ("fig-csvSvar", "csv", "bogice_csv", 108),
    ):
        cfgs = tuple(
            ScenarioConfig(
                scenario_id=f"{fig}-{t}",
                d=5,
                n_blocks=5,
                n_per_block=1000,
                sharing=sharing,
                algorithm=alg,
                soi_alpha=2.0,
                variances=VARIANCE_TYPES[t],
                bg_kind="identity",
                n_trials=500,
                seed=seed,
            )
            for t in type_names
        )
        presets[fig] = Preset(fig, "variance_type", type_names, ((alg, cfgs),))

    return presets


PRESETS = _build_presets()
