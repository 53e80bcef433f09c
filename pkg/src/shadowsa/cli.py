"""Command line front end: batch runs driven by a YAML configuration.

Subcommands:

* ``simulate``: sample the configured model at fixed parameters; writes
  the final pattern, a thinned statistics table and figures.
* ``stats``: sufficient statistics of a pattern file, one row per radius.
* ``ssa``: annealed shadow estimation; writes trajectory CSVs, pooled
  quartiles, metadata and figures.
* ``abc-shadow``: posterior sampling shadow chain, same outputs.
* ``analyze``: summary tables and figures from trajectory CSVs.

Every run writes a metadata JSON capturing the configuration, seed and
package version; passing that file back as ``--config`` replays the run.
Exit codes: 0 success, 2 configuration error, 3 runtime contract
violation.
"""

from __future__ import annotations

import argparse
import csv
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .analysis import asymptotic_errors, one_sample_t_test, summarize_samples
from .config import RunConfig, load_config
from .core import ConfigError, ContractViolation
from .io import (
    format_float,
    read_pattern,
    read_trajectory,
    write_metadata,
    write_pattern,
    write_statistics,
    write_trajectory,
)
from .mh import ChainState, PatternChain, mean_statistics
from .models import CandyModel, sufficient_statistics
from .plots import (
    boxplot_figure,
    histogram_figure,
    pattern_figure,
    stats_trace_figure,
    trace_figure,
)
from .shadow import Schedule, ssa_run

OUTDIR_ENV = "SHADOWSA_OUTDIR"


def _resolve_outdir(args, cfg: RunConfig | None) -> Path:
    if getattr(args, "output_dir", None):
        out = args.output_dir
    elif cfg is not None and cfg.output_dir:
        out = str(cfg.base_dir / cfg.output_dir)
    elif os.environ.get(OUTDIR_ENV):
        out = os.environ[OUTDIR_ENV]
    else:
        out = "."
    path = Path(out)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _effective_seed(args, cfg: RunConfig | None) -> int:
    if getattr(args, "seed", None) is not None:
        return args.seed
    return cfg.seed if cfg is not None else 0


def _metadata(command: str, seed: int, cfg: RunConfig | None, outputs, extra=None) -> dict:
    meta = {
        "command": command,
        "version": __version__,
        "seed": seed,
        "outputs": [str(Path(p).name) for p in outputs],
    }
    if cfg is not None:
        resolved = cfg.resolved()
        resolved["seed"] = seed
        meta["config"] = resolved
    if extra:
        meta.update(extra)
    return meta


def _write_csv(path: Path, header, rows) -> Path:
    with path.open("w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(header)
        for row in rows:
            writer.writerow(row)
    return path


def cmd_simulate(args) -> int:
    cfg = load_config(args.config)
    seed = _effective_seed(args, cfg)
    outdir = _resolve_outdir(args, cfg)
    model = cfg.model
    window = cfg.window
    theta = cfg.theta(required=True)
    opts = cfg.simulate_options()

    chain = ChainState.from_model(
        model, window, rng=np.random.default_rng(np.random.SeedSequence(seed))
    )
    out = mean_statistics(
        model,
        theta,
        window,
        n_samples=opts.n_samples,
        steps_between=opts.steps_between,
        burn_in=opts.burn_in,
        chain=chain,
    )
    report_rows = np.array([model.report_statistics(row) for row in out.samples])

    pattern = chain.pattern()
    outputs = [
        write_pattern(outdir / "pattern.csv", pattern),
        write_statistics(outdir / "statistics.csv", report_rows, model.report_names),
    ]
    spines = getattr(model, "spines", None)
    figures = [
        pattern_figure(
            pattern,
            outdir / "pattern.png",
            spines=spines.polylines if spines is not None else None,
        ),
        stats_trace_figure(report_rows, outdir / "stats_trace.png", model.report_names),
    ]
    mean_report = model.report_statistics(out.mean)
    meta = _metadata(
        "simulate",
        seed,
        cfg,
        outputs + figures,
        extra={
            "theta": theta,
            "statistic_names": list(model.report_names),
            "statistic_mean": mean_report,
            "acceptance_rate": chain.acceptance_rate(),
        },
    )
    write_metadata(outdir / "metadata.json", meta)
    pairs = ", ".join(
        f"{name}={format_float(v)}" for name, v in zip(model.report_names, mean_report)
    )
    print(f"simulate: {out.n_samples} samples, mean statistics {pairs}")
    print(f"outputs written to {outdir}")
    return 0


def cmd_stats(args) -> int:
    cfg = load_config(args.config)
    outdir = _resolve_outdir(args, cfg)
    model = cfg.model
    window = cfg.window
    pattern = read_pattern(args.pattern, window)
    radii = cfg.stats_radii()

    header = ["r"] + list(model.report_names)
    rows = []
    base_r = model.r_c if isinstance(model, CandyModel) else model.r
    for r in radii:
        model_r = model if r == base_r else cfg.model_at_radius(r)
        stats = model_r.report_statistics(sufficient_statistics(model_r, pattern))
        rows.append([format_float(r)] + [format_float(v) for v in stats])

    print(",".join(header))
    for row in rows:
        print(",".join(row))
    table = _write_csv(outdir / "statistics.csv", header, rows)
    meta = _metadata(
        "stats",
        cfg.seed,
        cfg,
        [table],
        extra={"pattern_file": str(Path(args.pattern).resolve()), "radii": radii},
    )
    write_metadata(outdir / "metadata.json", meta)
    return 0


def _quartiles_rows(names, thetas: np.ndarray):
    qs = np.quantile(thetas, (0.25, 0.5, 0.75), axis=0)
    return [
        [name, format_float(qs[0, i]), format_float(qs[1, i]), format_float(qs[2, i])]
        for i, name in enumerate(names)
    ]


def _run_shadow(args, annealed: bool) -> int:
    cfg = load_config(args.config)
    seed = _effective_seed(args, cfg)
    outdir = _resolve_outdir(args, cfg)
    model = cfg.model
    window = cfg.window
    prior = cfg.prior
    shadow_cfg = cfg.shadow()
    theta0 = cfg.theta0()
    t_obs = cfg.observed_statistics()
    schedule = cfg.schedule() if annealed else Schedule.constant(1.0)
    chains = args.chains
    if chains < 1:
        raise ConfigError(f"--chains must be at least 1, got {chains}")

    names = list(model.param_names)
    root = np.random.SeedSequence(seed)
    outputs = []
    trajectories = []
    for index, child in enumerate(root.spawn(chains), start=1):
        theta_seq, aux_seq = child.spawn(2)
        aux = PatternChain(model, window, rng=np.random.default_rng(aux_seq))
        trajectory = ssa_run(
            aux,
            t_obs,
            prior,
            shadow_cfg,
            schedule,
            np.random.default_rng(theta_seq),
            theta0=theta0,
            stat_names=names,
        )
        name = "trajectory.csv" if chains == 1 else f"trajectory_chain{index}.csv"
        outputs.append(write_trajectory(outdir / name, trajectory))
        trajectories.append(trajectory)

    pooled = np.vstack([t.thetas for t in trajectories])
    outputs.append(
        _write_csv(
            outdir / "quartiles.csv",
            ["parameter", "q25", "median", "q75"],
            _quartiles_rows(names, pooled),
        )
    )
    first = trajectories[0]
    figures = [
        trace_figure(
            first.iterations,
            first.thetas,
            outdir / "trace.png",
            names=names,
            temperatures=first.temperatures if annealed else None,
        ),
        histogram_figure(pooled, outdir / "hist.png", names=names),
    ]
    command = "ssa" if annealed else "abc-shadow"
    meta = _metadata(
        command,
        seed,
        cfg,
        outputs + figures,
        extra={
            "chains": chains,
            "theta_hat": [t.theta_hat for t in trajectories],
            "accept_rate": [
                t.accepted_inner / t.total_inner for t in trajectories
            ],
            "final_temperature": [t.final_temperature for t in trajectories],
            "parameter_names": names,
        },
    )
    write_metadata(outdir / "metadata.json", meta)
    for index, trajectory in enumerate(trajectories, start=1):
        pairs = ", ".join(
            f"{n}={format_float(v)}" for n, v in zip(names, trajectory.theta_hat)
        )
        print(f"{command} chain {index}: theta_hat {pairs}")
    print(f"outputs written to {outdir}")
    return 0


def cmd_ssa(args) -> int:
    return _run_shadow(args, annealed=True)


def cmd_abc_shadow(args) -> int:
    return _run_shadow(args, annealed=False)


def cmd_analyze(args) -> int:
    if not args.trajectories:
        raise ConfigError("analyze needs at least one trajectory CSV")
    cfg = load_config(args.config) if args.config else None
    outdir = _resolve_outdir(args, cfg)
    tables = [read_trajectory(p) for p in args.trajectories]
    dims = {t.dim for t in tables}
    if len(dims) != 1:
        raise ConfigError(f"trajectory files disagree on dimension: {sorted(dims)}")
    k = dims.pop()
    burn = args.burn
    if burn < 0:
        raise ConfigError("--burn must be nonnegative")
    kept = []
    for path, table in zip(args.trajectories, tables):
        rows = table.thetas[burn:]
        if rows.shape[0] == 0:
            raise ConfigError(f"{path}: no rows left after discarding {burn} burn in rows")
        kept.append(rows)
    pooled = np.vstack(kept)
    names = list(cfg.model.param_names) if cfg is not None else [
        f"theta_{i + 1}" for i in range(k)
    ]
    if len(names) != k:
        raise ConfigError(
            f"configured model has {len(names)} parameters but trajectories have {k}"
        )

    summary = summarize_samples(pooled) if pooled.shape[0] >= 4 else None
    outputs = []
    if summary is not None:
        rows = [
            [
                names[i],
                format_float(summary.mean[i]),
                format_float(summary.std[i]),
                format_float(summary.q25[i]),
                format_float(summary.median[i]),
                format_float(summary.q75[i]),
                format_float(summary.mode[i]),
                format_float(summary.mcse[i]),
            ]
            for i in range(k)
        ]
        header = ["parameter", "mean", "std", "q25", "median", "q75", "mode", "mcse"]
    else:
        qs = np.quantile(pooled, (0.25, 0.5, 0.75), axis=0)
        rows = [
            [
                names[i],
                format_float(pooled[:, i].mean()),
                format_float(qs[0, i]),
                format_float(qs[1, i]),
                format_float(qs[2, i]),
            ]
            for i in range(k)
        ]
        header = ["parameter", "mean", "q25", "median", "q75"]
    outputs.append(_write_csv(outdir / "summary.csv", header, rows))

    box_rows = []
    for index, rows_c in enumerate(kept, start=1):
        for i in range(k):
            for value in rows_c[:, i]:
                box_rows.append([str(index), names[i], format_float(value)])
    outputs.append(
        _write_csv(outdir / "boxplot_data.csv", ["chain", "parameter", "value"], box_rows)
    )

    if args.expected is not None:
        expected = [float(v) for v in args.expected.split(",")]
        if len(expected) != k:
            raise ConfigError(
                f"--expected needs {k} comma separated values, got {len(expected)}"
            )
        t_rows = []
        for i in range(k):
            stat, p_value = one_sample_t_test(pooled[:, i], expected[i])
            t_rows.append(
                [names[i], format_float(expected[i]), format_float(stat), format_float(p_value)]
            )
        outputs.append(
            _write_csv(
                outdir / "ttests.csv", ["parameter", "expected", "t", "p_value"], t_rows
            )
        )

    if args.error_mc is not None:
        if cfg is None:
            raise ConfigError("--error-mc needs --config with model and window blocks")
        theta_hat = np.quantile(pooled, 0.5, axis=0)
        report = asymptotic_errors(
            cfg.model,
            theta_hat,
            cfg.window,
            n_mc=args.error_mc,
            rng=np.random.default_rng(np.random.SeedSequence(_effective_seed(args, cfg))),
        )
        e_rows = [
            [
                names[i],
                format_float(theta_hat[i]),
                format_float(report.sigma[i]),
                format_float(report.sigma_mc[i]),
            ]
            for i in range(k)
        ]
        outputs.append(
            _write_csv(
                outdir / "errors.csv",
                ["parameter", "estimate", "sigma", "sigma_mc"],
                e_rows,
            )
        )
        if report.singular:
            print("warning: information matrix is singular; errors use a pseudoinverse")

    first = tables[0]
    figures = [
        trace_figure(first.iterations, first.thetas, outdir / "trace.png", names=names),
        boxplot_figure(
            [(f"chain {i + 1}", rows_c) for i, rows_c in enumerate(kept)],
            outdir / "boxplot.png",
            names=names,
        ),
        histogram_figure(pooled, outdir / "hist.png", names=names),
    ]
    meta = _metadata(
        "analyze",
        _effective_seed(args, cfg),
        cfg,
        outputs + figures,
        extra={
            "trajectories": [str(Path(p).resolve()) for p in args.trajectories],
            "burn": burn,
            "pooled_samples": int(pooled.shape[0]),
        },
    )
    write_metadata(outdir / "metadata.json", meta)

    width = max(len(h) for h in header)
    print("  ".join(h.ljust(width) for h in header))
    for row in rows:
        print("  ".join(str(v).ljust(width) for v in row))
    print(f"outputs written to {outdir}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="shadowsa",
        description=(
            "Gibbs pattern simulation and shadow chain inference with "
            "intractable normalizing constants"
        ),
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, config_required=True):
        p.add_argument(
            "--config",
            required=config_required,
            help="YAML configuration or metadata JSON from a previous run",
        )
        p.add_argument("--seed", type=int, default=None, help="override the config seed")
        p.add_argument(
            "--output-dir",
            default=None,
            help=f"output directory (default: config, then ${OUTDIR_ENV}, then '.')",
        )

    p = sub.add_parser("simulate", help="sample the model at fixed parameters")
    add_common(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("stats", help="sufficient statistics of a pattern file")
    add_common(p)
    p.add_argument("--pattern", required=True, help="pattern CSV to evaluate")
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("ssa", help="annealed shadow parameter estimation")
    add_common(p)
    p.add_argument("--chains", type=int, default=1, help="independent replicate chains")
    p.set_defaults(func=cmd_ssa)

    p = sub.add_parser("abc-shadow", help="posterior sampling shadow chain")
    add_common(p)
    p.add_argument("--chains", type=int, default=1, help="independent replicate chains")
    p.set_defaults(func=cmd_abc_shadow)

    p = sub.add_parser("analyze", help="summarize trajectory CSVs")
    p.add_argument("trajectories", nargs="+", help="trajectory CSV files")
    add_common(p, config_required=False)
    p.add_argument("--burn", type=int, default=0, help="kept rows to discard per chain")
    p.add_argument(
        "--expected",
        default=None,
        help="comma separated reference values for per component t tests",
    )
    p.add_argument(
        "--error-mc",
        type=int,
        default=None,
        help="Monte Carlo sample size for the asymptotic error report",
    )
    p.set_defaults(func=cmd_analyze)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ContractViolation as exc:
        print(f"contract violation: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
