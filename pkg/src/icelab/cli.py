"""Command-line front end: bound calculators, Monte Carlo experiment runner,
FIM validation, and SVG plotting.

Exit codes: 0 success, 1 validation/input error, 2 runtime failure.
"""

import argparse
import dataclasses
import json
import math
import sys
from pathlib import Path

import numpy as np

from .bench import ScenarioConfig, run_scenario
from .crlb import (
    crib_bice,
    crib_cmv,
    crib_csv,
    crib_ice_circular,
    crib_ice_gauss,
    fim_cmv,
    fim_csv,
    fim_empirical,
    fim_ice,
)
from .csignal import (
    BgStats,
    DependentBgSpec,
    GgdSpec,
    SourceStats,
    bg_stats_gaussian,
    dependent_bg_kappa_diag,
    dependent_bg_score,
    empirical_kappa_z,
    sample_dependent_bg,
    source_stats,
)
from .presets import PRESETS
from .svgplot import SvgChart


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        sys.exit(1)


def _source_from_args(args, variance=1.0):
    if args.kappa_bar is not None:
        kb = args.kappa_bar
        return SourceStats(
            kappa=kb / variance,
            sigma2=variance,
            kappa_bar=kb,
            pseudo_moment=0.0,
            score_pseudo=0.0,
            provenance="cli",
        )
    return source_stats(GgdSpec(args.alpha, args.circ, variance))


def _print_report(report, as_json):
    if as_json:
        print(json.dumps(report.to_dict(), sort_keys=True))
        return
    if report.identifiable:
        print(f"model={report.model} value={report.value:.6g} ({report.value_db:.2f} dB)")
    else:
        print(f"model={report.model} unidentifiable")
    print(f"identifiable={report.identifiable} N={report.n_total} N_b={report.n_block}")
    for key, val in report.terms.items():
        print(f"  {key}: {val}")
    if report.notes:
        print(f"  note: {report.notes}")


def cmd_crib(args):
    if args.model == "ice-gauss":
        src = _source_from_args(args)
        report = crib_ice_gauss(args.d, args.n_total, src.kappa_bar)
    elif args.model == "ice-circular":
        src = _source_from_args(args)
        bg = DependentBgSpec(args.bg_alpha, args.d - 1)
        z = sample_dependent_bg(bg, args.mc, args.seed)
        kzt = empirical_kappa_z(lambda v: dependent_bg_score(bg, v), z)
        report = crib_ice_circular(src, kzt, args.n_total)
    else:
        m = args.n_blocks
        if args.variances:
            variances = [float(v) for v in args.variances.split(",")]
            if len(variances) != m:
                raise ValueError("need one variance per block")
        elif args.iid:
            variances = [1.0] * m
        else:
            raise ValueError("piecewise bounds need --iid or --variances")
        n_block = args.n_total // m
        if n_block * m != args.n_total:
            raise ValueError("--N must be divisible by --M")
        stats = [_source_from_args(args, variance=v) for v in variances]
        eye = np.eye(args.d - 1)
        if args.model == "bice":
            report = crib_bice(stats, args.d, n_block)
        elif args.model == "cmv":
            report = crib_cmv([(s, eye) for s in stats], n_block)
        else:
            report = crib_csv([(s, eye) for s in stats], n_block)
    _print_report(report, args.json)
    return 0


def _write(path, text):
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)


def cmd_simulate(args):
    out = Path(args.out)
    runs = []  # (axis, axis_value, label, config)
    if args.preset:
        if args.preset not in PRESETS:
            raise ValueError(
                f"unknown preset {args.preset!r}; available: {', '.join(sorted(PRESETS))}"
            )
        preset = PRESETS[args.preset]
        for label, value, cfg in preset.configs():
            runs.append((preset.axis, value, label, cfg))
        stem = preset.name
    else:
        doc = json.loads(Path(args.config).read_text())
        axis = doc.get("axis", "scenario_id")
        for entry in doc["scenarios"]:
            cfg = ScenarioConfig(**entry)
            runs.append((axis, entry.get(axis, cfg.scenario_id), cfg.algorithm, cfg))
        stem = Path(args.config).stem

    summary = ["axis,axis_value,series,trimmed_mean_db,crib_db,n_diverged,config_hash"]
    for i, (axis, value, label, cfg) in enumerate(runs):
        if args.trials:
            cfg = dataclasses.replace(cfg, n_trials=args.trials)
        if args.seed is not None:
            cfg = dataclasses.replace(cfg, seed=args.seed)
        stats = run_scenario(cfg, jobs=args.jobs)
        doc = {
            "axis": axis,
            "axis_value": value,
            "series": label,
            "stats": stats.to_dict(),
        }
        base = out / f"{stem}--{label}--{i:02d}"
        _write(base.with_suffix(".json"), json.dumps(doc, indent=2, sort_keys=True))
        _write(base.with_suffix(".csv"), stats.to_csv())
        crib_db = stats.crib.value_db
        crib_txt = f"{crib_db:.4f}" if math.isfinite(crib_db) else "inf"
        emp_txt = (
            f"{stats.trimmed_mean_db:.4f}"
            if math.isfinite(stats.trimmed_mean_db)
            else "inf"
        )
        summary.append(
            f"{axis},{value},{label},{emp_txt},{crib_txt},"
            f"{stats.n_diverged},{stats.config_hash}"
        )
        print(summary[-1])
    _write(out / f"{stem}--summary.csv", "\n".join(summary) + "\n")
    return 0


def cmd_validate_fim(args):
    spec = GgdSpec(args.alpha, args.circ)
    k = args.d - 1
    if args.bg == "dependent":
        bg_in = DependentBgSpec(args.bg_alpha, k)
        bg_stats = BgStats(
            cov=np.eye(k),
            kappa_z=dependent_bg_kappa_diag(bg_in) * np.eye(k),
            pseudo_score=np.zeros((k, k)),
        )
    else:
        bg_in = np.eye(k)
        bg_stats = bg_stats_gaussian(np.eye(k))
    m = 1 if args.family == "ice" else args.n_blocks
    blocks = [(spec, bg_in)] * m
    emp = fim_empirical(args.family, blocks, args.samples, args.seed)
    src = source_stats(spec)
    if args.family == "ice":
        closed = fim_ice(src, bg_stats)
    elif args.family == "cmv":
        closed = fim_cmv([(src, bg_stats)] * m)
    else:
        closed = fim_csv([(src, bg_stats)] * m)
    scale = np.linalg.norm(closed.F)
    print(f"family={args.family} d={args.d} M={m} samples={args.samples}")
    worst = 0.0
    for name_a, a0, a1 in closed.param_layout:
        for name_b, b0, b1 in closed.param_layout:
            dev = (
                np.linalg.norm(emp.F[a0:a1, b0:b1] - closed.F[a0:a1, b0:b1]) / scale
            )
            worst = max(worst, dev)
            print(f"  F[{name_a},{name_b}] deviation {dev:.4%}")
    p_dev = np.linalg.norm(emp.P - closed.P) / scale
    worst = max(worst, p_dev)
    print(f"  P deviation {p_dev:.4%}")
    ok = worst <= 0.02
    print(f"{'PASS' if ok else 'FAIL'} (worst {worst:.4%}, tolerance 2%)")
    return 0 if ok else 2


def cmd_plot(args):
    docs = []
    for path in args.results:
        docs.append(json.loads(Path(path).read_text()))
    axes = {d["axis"] for d in docs}
    if len(axes) != 1:
        raise ValueError(f"incompatible results: mixed sweep axes {sorted(axes)}")
    axis = axes.pop()
    series = {}
    order = []
    for d in docs:
        label = d["series"]
        if label not in series:
            series[label] = []
            order.append(label)
        stats = d["stats"]
        crib_db = stats["crib"]["value_db"]
        series[label].append((d["axis_value"], stats["trimmed_mean_db"], crib_db))

    def axis_key(v):
        return v if isinstance(v, (int, float)) else str(v)

    chart = SvgChart(title=args.title or f"ISR vs {axis}", x_label=axis)
    categorical = any(
        not isinstance(pt[0], (int, float)) for pts in series.values() for pt in pts
    )
    cat_map = {}
    if categorical:
        cats = sorted(
            {pt[0] for pts in series.values() for pt in pts}, key=str
        )
        cat_map = {c: i for i, c in enumerate(cats)}
    for label in order:
        pts = sorted(series[label], key=lambda p: axis_key(p[0]) if not categorical else cat_map[p[0]])
        xs = [cat_map[p[0]] if categorical else p[0] for p in pts]
        chart.add_series(label, xs, [p[1] for p in pts])
        chart.add_series(f"{label} bound", xs, [p[2] for p in pts], dashed=True)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(chart.render())
    print(f"wrote {out}")
    return 0


def build_parser():
    parser = _Parser(prog="icelab", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_crib = sub.add_parser("crib", help="evaluate an expected-ISR bound")
    p_crib.add_argument(
        "model", choices=("ice-gauss", "ice-circular", "bice", "cmv", "csv")
    )
    p_crib.add_argument("--d", type=int, required=True)
    p_crib.add_argument("--N", dest="n_total", type=int, required=True)
    p_crib.add_argument("--M", dest="n_blocks", type=int, default=1)
    p_crib.add_argument("--alpha", type=float, default=2.0, help="SOI shape")
    p_crib.add_argument("--circ", type=float, default=0.0, help="SOI circularity")
    p_crib.add_argument("--kappa-bar", type=float, default=None)
    p_crib.add_argument("--iid", action="store_true", help="identical unit-variance blocks")
    p_crib.add_argument("--variances", default="", help="comma list, one per block")
    p_crib.add_argument("--bg-alpha", type=float, default=2.0)
    p_crib.add_argument("--mc", type=int, default=200_000)
    p_crib.add_argument("--seed", type=int, default=0)
    p_crib.add_argument("--json", action="store_true")
    p_crib.set_defaults(func=cmd_crib)

    p_sim = sub.add_parser("simulate", help="run a Monte Carlo scenario sweep")
    group = p_sim.add_mutually_exclusive_group(required=True)
    group.add_argument("--preset", choices=sorted(PRESETS), default=None)
    group.add_argument("--config", default=None, help="JSON scenario file")
    p_sim.add_argument("--out", required=True)
    p_sim.add_argument("--trials", type=int, default=None, help="override trial count")
    p_sim.add_argument("--seed", type=int, default=None, help="override seed")
    p_sim.add_argument("--jobs", type=int, default=None)
    p_sim.set_defaults(func=cmd_simulate)

    p_fim = sub.add_parser("validate-fim", help="empirical vs closed-form FIM")
    p_fim.add_argument("--family", choices=("ice", "cmv", "csv"), required=True)
    p_fim.add_argument("--d", type=int, default=3)
    p_fim.add_argument("--M", dest="n_blocks", type=int, default=2)
    p_fim.add_argument("--alpha", type=float, default=2.0)
    p_fim.add_argument("--circ", type=float, default=0.0)
    p_fim.add_argument("--bg", choices=("gauss", "dependent"), default="gauss")
    p_fim.add_argument("--bg-alpha", type=float, default=2.0)
    p_fim.add_argument("--samples", type=int, default=1_000_000)
    p_fim.add_argument("--seed", type=int, default=0)
    p_fim.set_defaults(func=cmd_validate_fim)

    p_plot = sub.add_parser("plot", help="render result JSONs to SVG")
    p_plot.add_argument("results", nargs="+")
    p_plot.add_argument("--out", required=True)
    p_plot.add_argument("--title", default=None)
    p_plot.set_defaults(func=cmd_plot)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, KeyError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # pragma: no cover - defensive
        print(f"runtime error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
