"""Command-line interface.

Subcommands: ``fuse`` (grid one day), ``validate`` (assess a product
against stations), ``simulate`` (synthetic fixtures), ``sample``
(realizations from a stored precision), ``trends`` (regional bootstrap
trends), ``bench`` (scaling harness), ``config`` (documented key list).

Exit codes: 0 success, 1 input error, 2 numerical failure.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import io as cio
from .bench import bench_vecchia_scaling
from .config import RunConfig, default_config, load_config, render_config_help
from .errors import InputError, NumericalError
from .fusion import concat_instruments, fuse_day, sample_realizations
from .synth import simulate_hierarchical, simulate_gp_field
from .types import Observation, Raster, SpaceTimePoint, SurfaceClass, normalize_point
from .validation import assess_product, match_coincidences, quarterly_bootstrap, regional_trends
from .vecchia import SparsePrecision


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse would exit(2); map usage problems to exit 1
        raise InputError(f"{self.prog}: {message}\n{self.format_usage().rstrip()}")


def _load_cfg(args) -> RunConfig:
    if getattr(args, "config", None):
        return load_config(args.config)
    return default_config()


def _provenance(cfg: RunConfig, command: str, **extra: str) -> dict[str, str]:
    prov = {"format": "colfuse-v1", "command": command, "config_hash": cfg.hash(), "seed": str(cfg.seed)}
    prov.update(extra)
    return prov


def _cmd_fuse(args) -> int:
    cfg = _load_cfg(args)
    obs_path = args.observations or cfg.path("paths.observations")
    if not obs_path:
        raise InputError("fuse: --observations (or paths.observations in the config) is required")
    out_dir = Path(args.output_dir or cfg.path("paths.output") or ".")
    out_dir.mkdir(parents=True, exist_ok=True)

    observations = cio.read_observations(obs_path)
    geometries = None
    if args.geometries:
        entries = cio.read_geometries(args.geometries)
        by_idx = dict(entries)
        if len(by_idx) != len(entries):
            raise InputError(f"{args.geometries}: duplicate observation index")
        missing = [i for i in range(len(observations)) if i not in by_idx]
        if missing:
            raise InputError(f"{args.geometries}: no geometry for observation row {missing[0]}")
        geometries = [by_idx[i] for i in range(len(observations))]
    mask = cio.read_raster(args.mask)

    meta = concat_instruments([observations], [geometries] if geometries is not None else None)
    product = fuse_day(
        meta,
        cfg.grid(),
        mask,
        cfg.params_by_class(),
        cfg.vecchia_m,
        mean_ppm=cfg.mean_ppm,
        ordering_method=cfg.ordering,
        seed=cfg.seed,
        config_hash=cfg.hash(),
    )
    for w in product.warnings:
        print(f"warning: {w}", file=sys.stderr)

    cio.write_cells(out_dir / "cells.csv", product)
    for cls in SurfaceClass:
        prec = product.precision(cls)
        if prec is not None:
            cio.write_precision(out_dir / f"precision_{cls.value}.dok", prec, product.provenance)
        entries = [(e.grid_index, e.geometry) for e in product.cells(cls) if e.geometry is not None]
        if entries:
            cio.write_geometries(out_dir / f"geometry_{cls.value}.txt", entries, product.provenance)
    print(f"fused day {product.day}: {len(product.land)} land cells, {len(product.ocean)} ocean cells")
    return 0


def _cmd_validate(args) -> int:
    cfg = _load_cfg(args)
    out_path = args.output or cfg.path("paths.output")
    if not out_path:
        raise InputError("validate: --output (or paths.output in the config) is required")
    s_v = cfg.get_float("validation.s_v")
    coloc_default = cfg.get_float("validation.colocation_default")

    summaries = {}
    matchups_path = args.matchups or cfg.path("paths.matchups")
    if matchups_path:
        matchups = cio.read_matchups(matchups_path)
        if matchups:
            cls = SurfaceClass.parse(args.surface)
            summaries[cls] = assess_product(
                matchups, validation_error=s_v, colocation_default=coloc_default
            )
    else:
        obs_path = args.observations or cfg.path("paths.observations")
        st_path = args.stations or cfg.path("paths.stations")
        if not (obs_path and st_path):
            raise InputError("validate: provide --matchups, or --observations with --stations")
        observations = cio.read_observations(obs_path)
        stations = cio.read_stations(st_path)
        criteria = cfg.criteria()
        daily_average = cfg.get_bool("validation.daily_average")
        for cls in SurfaceClass:
            subset = [o for o in observations if o.quality_flag and o.surface_class is cls]
            if not subset:
                continue
            matchups = match_coincidences(subset, stations, criteria, daily_average=daily_average)
            if matchups:
                summaries[cls] = assess_product(
                    matchups, validation_error=s_v, colocation_default=coloc_default
                )
    if not summaries:
        print("warning: no coincidences found; writing an empty summary", file=sys.stderr)
    cio.write_summary(out_path, summaries, _provenance(cfg, "validate"))
    for cls, s in summaries.items():
        print(
            f"{cls.value}: bias {s.overall_bias:+.3f} systematic {s.systematic:.3f} "
            f"random {s.random:.3f} ({s.n_obs} obs, {s.n_stations} stations)"
        )
    return 0


def _cmd_simulate(args) -> int:
    cfg = _load_cfg(args)
    out_dir = Path(args.output_dir or cfg.path("paths.output") or ".")
    out_dir.mkdir(parents=True, exist_ok=True)
    if args.kind == "scenario":
        scenario = cfg.scenario()
        matchups, truth = simulate_hierarchical(scenario)
        prov = _provenance(
            cfg,
            "simulate scenario",
            rng="pcg64",
            expected_systematic=cio.format_float(truth.expected_systematic),
            expected_random=cio.format_float(truth.expected_random),
            mu=cio.format_float(scenario.mu),
        )
        cio.write_matchups(out_dir / "matchups.csv", matchups, prov)
        print(f"wrote {len(matchups)} matchups to {out_dir / 'matchups.csv'}")
        return 0

    grid = cfg.grid()
    n_obs = cfg.get_int("gpday.n_obs")
    noise_sd = cfg.get_float("gpday.obs_noise_sd")
    rng = np.random.default_rng(cfg.seed)
    lat = rng.uniform(grid.lat_min, grid.lat_max, n_obs)
    lon = rng.uniform(grid.lon_min, grid.lon_max, n_obs)
    t = rng.uniform(grid.day, grid.day + 1.0, n_obs)
    points = [normalize_point(lat[i], lon[i], t[i]) for i in range(n_obs)]
    params = cfg.kernel_params(SurfaceClass.LAND)
    field = simulate_gp_field(points, params, cfg.mean_ppm, cfg.seed + 1)
    values = field + noise_sd * rng.standard_normal(n_obs)
    observations = [
        Observation(points[i], float(values[i]), noise_sd, 1, True, SurfaceClass.LAND)
        for i in range(n_obs)
    ]
    prov = _provenance(cfg, "simulate gpday", rng="pcg64")
    cio.write_observations(out_dir / "observations.csv", observations, prov)
    mask = Raster(grid.lat_min, grid.lon_min, grid.cell_deg, np.ones((grid.n_lat, grid.n_lon), dtype=int))
    cio.write_raster(out_dir / "mask.raster", mask, prov)
    print(f"wrote {n_obs} observations and an all-land mask to {out_dir}")
    return 0


def _read_mean_file(path) -> np.ndarray:
    values = []
    for no, line in cio._content_lines(path):
        values.append(cio._parse_float(line.strip(), path, no, "mean"))
    if not values:
        raise InputError(f"{path}: no mean values found")
    return np.array(values)


def _cmd_sample(args) -> int:
    cfg = _load_cfg(args)
    precision = cio.read_precision(args.precision)
    if args.cells:
        mean, _ = cio.read_cell_values(args.cells, SurfaceClass.parse(args.surface))
    elif args.mean:
        mean = _read_mean_file(args.mean)
    else:
        raise InputError("sample: provide --cells (with --surface) or --mean")
    seed = args.seed if args.seed is not None else cfg.seed
    draws = sample_realizations(mean, precision, args.count, seed)
    cio.write_realizations(
        args.output, draws, _provenance(cfg, "sample", seed=str(seed), count=str(args.count))
    )
    print(f"wrote {args.count} realizations of dimension {precision.n} to {args.output}")
    return 0


def _cmd_trends(args) -> int:
    cfg = _load_cfg(args)
    observations = cio.read_observations(args.observations)
    regions = cio.read_raster(args.regions)
    kwargs = dict(
        quarter_origin=cfg.get_float("trend.quarter_origin"),
        quarter_days=cfg.get_float("trend.quarter_days"),
        bootstrap=cfg.get_int("trend.bootstrap"),
        seed=cfg.seed,
    )
    rows = regional_trends(observations, regions, **kwargs)
    if not rows:
        print("warning: no region had two populated quarters", file=sys.stderr)
    cio.write_trends(args.output, rows, _provenance(cfg, "trends"))
    if args.quarterly:
        cio.write_quarterly(args.quarterly, quarterly_bootstrap(observations, regions, **kwargs))
    print(f"wrote {len(rows)} region trends to {args.output}")
    return 0


def _parse_sizes(text: str) -> list[int]:
    try:
        sizes = [int(s) for s in text.split(",") if s.strip()]
    except ValueError:
        raise InputError(f"bad size list {text!r}; expected comma-separated integers") from None
    if not sizes:
        raise InputError("size list is empty")
    return sizes


def _cmd_bench(args) -> int:
    cfg = _load_cfg(args)
    params = cfg.kernel_params(SurfaceClass.LAND)
    table = bench_vecchia_scaling(
        _parse_sizes(args.dense_sizes) if args.dense_sizes else [],
        _parse_sizes(args.vecchia_sizes) if args.vecchia_sizes else [],
        args.m if args.m is not None else cfg.vecchia_m,
        params,
        cfg.seed,
        ordering=args.ordering,
        repeats=args.repeats,
    )
    text = table.render()
    print(text)
    if args.output:
        Path(args.output).write_text(text + "\n", encoding="utf-8")
    return 0


def _cmd_config(args) -> int:
    print(render_config_help())
    return 0


def build_parser() -> _Parser:
    parser = _Parser(prog="colfuse", description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", metavar="command")

    p = sub.add_parser("fuse", help="fuse one day of observations onto the configured grid")
    p.add_argument("--config", help="run configuration file")
    p.add_argument("--observations", help="observation CSV")
    p.add_argument("--geometries", help="optional per-observation geometry file")
    p.add_argument("--mask", required=True, help="surface-class raster (1 land, 0 ocean)")
    p.add_argument("--output-dir", help="directory for product files")
    p.set_defaults(handler=_cmd_fuse)

    p = sub.add_parser("validate", help="assess a product against station references")
    p.add_argument("--config", help="run configuration file")
    p.add_argument("--matchups", help="pre-matched coincidence CSV")
    p.add_argument("--surface", default="land", help="class label for --matchups input (default land)")
    p.add_argument("--observations", help="observation CSV (matched against --stations)")
    p.add_argument("--stations", help="station reference CSV")
    p.add_argument("--output", help="summary table output path")
    p.set_defaults(handler=_cmd_validate)

    p = sub.add_parser("simulate", help="generate synthetic fixtures with known truth")
    p.add_argument("--config", help="run configuration file")
    p.add_argument("--kind", choices=("scenario", "gpday"), default="scenario")
    p.add_argument("--output-dir", help="directory for generated files")
    p.set_defaults(handler=_cmd_simulate)

    p = sub.add_parser("sample", help="draw realizations from a stored posterior precision")
    p.add_argument("--config", help="run configuration file")
    p.add_argument("--precision", required=True, help="DOK precision file")
    p.add_argument("--cells", help="product cell table supplying the mean")
    p.add_argument("--surface", default="land", help="class to take from --cells (default land)")
    p.add_argument("--mean", help="plain text mean vector, one value per line")
    p.add_argument("--count", type=int, required=True, help="number of realizations")
    p.add_argument("--seed", type=int, help="sampling seed (default: config seed)")
    p.add_argument("--output", required=True, help="realizations output path")
    p.set_defaults(handler=_cmd_sample)

    p = sub.add_parser("trends", help="regional quarterly bootstrap trends")
    p.add_argument("--config", help="run configuration file")
    p.add_argument("--observations", required=True, help="observation CSV")
    p.add_argument("--regions", required=True, help="region raster (ids > 0)")
    p.add_argument("--output", required=True, help="trend table output path")
    p.add_argument("--quarterly", help="optional quarterly series output path")
    p.set_defaults(handler=_cmd_trends)

    p = sub.add_parser("bench", help="time the dense and sparse paths over problem sizes")
    p.add_argument("--config", help="run configuration file")
    p.add_argument("--dense-sizes", default="200,400,800", help="comma-separated dense sizes ('' to skip)")
    p.add_argument("--vecchia-sizes", default="2000,4000,8000", help="comma-separated sparse sizes")
    p.add_argument("--m", type=int, help="conditioning set size (default: config)")
    p.add_argument("--ordering", default="sorted", choices=("sorted", "maxmin"))
    p.add_argument("--repeats", type=int, default=5)
    p.add_argument("--output", help="also write the table to this path")
    p.set_defaults(handler=_cmd_bench)

    p = sub.add_parser("config", help="print the documented configuration key list")
    p.set_defaults(handler=_cmd_config)

    return parser


def cli_dispatch(argv) -> int:
    """Run one CLI invocation; returns the process exit code."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if not getattr(args, "command", None):
            raise InputError(parser.format_usage().rstrip())
        return args.handler(args)
    except SystemExit as exc:  # argparse --help
        code = exc.code or 0
        return int(code) if isinstance(code, int) else 1
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 2


def main() -> None:
    sys.exit(cli_dispatch(sys.argv[1:]))
if __name__ == "__main__":
    main()
