"""Text file formats: observations, stations, matchups, DOK precision,
rasters, product cells, geometries, realizations, summaries, trends.

All formats are line-oriented UTF-8 text (LF or CRLF).  Lines starting
with ``#`` are comments; writers use them for a provenance block.  Floats
are serialized at 17 significant digits, which round-trips IEEE doubles
bit-identically.  Readers validate eagerly and report the offending line
in every diagnostic.
"""

from __future__ import annotations

import csv
import math
from collections.abc import Iterable, Mapping, Sequence
from pathlib import Path

import numpy as np

from .errors import InputError
from .fusion import DailyProduct, GriddedCellEstimate
from .types import Observation, Raster, SoundingGeometry, SpaceTimePoint, SurfaceClass
from .validation import ErrorSummary, Matchup, QuarterlySeries, StationRecord, TrendRow
from .vecchia import SparsePrecision

OBSERVATION_COLUMNS = ["lat", "lon", "time", "value", "noise_sd", "instrument_id", "quality", "surface"]
STATION_COLUMNS = ["station", "lat", "lon", "time", "value"]
MATCHUP_COLUMNS = ["station", "day", "value", "ref"]
MATCHUP_OPTIONAL = ["model_obs", "model_ref", "prior"]
CELL_COLUMNS = ["surface", "index", "lat", "lon", "time", "value", "sd", "n_contributing", "has_geometry"]


def format_float(x: float) -> str:
    return format(float(x), ".17g")


def _parse_float(text: str, path, line_no: int, column: str) -> float:
    try:
        v = float(text)
    except ValueError:
        raise InputError(f"{path}:{line_no}: column {column!r}: {text!r} is not a number") from None
    if not math.isfinite(v):
        raise InputError(f"{path}:{line_no}: column {column!r}: {text!r} is not finite")
    return v


def _parse_int(text: str, path, line_no: int, column: str) -> int:
    try:
        return int(text)
    except ValueError:
        raise InputError(f"{path}:{line_no}: column {column!r}: {text!r} is not an integer") from None


def _parse_bool(text: str, path, line_no: int, column: str) -> bool:
    t = text.strip().lower()
    if t in ("1", "true"):
        return True
    if t in ("0", "false"):
        return False
    raise InputError(f"{path}:{line_no}: column {column!r}: {text!r} is not a boolean (use 1/0)")


def provenance_lines(provenance: Mapping[str, str] | None) -> list[str]:
    if not provenance:
        return []
    return [f"# {key} = {provenance[key]}" for key in provenance]


def _content_lines(path) -> list[tuple[int, str]]:
    """Non-comment, non-blank lines with their 1-based numbers."""
    raw = Path(path).read_text(encoding="utf-8")
    out = []
    for no, line in enumerate(raw.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        out.append((no, line))
    return out


def _read_csv(path, required: list[str], optional: list[str] | None = None):
    """Header-validated CSV rows as (line_no, dict); header must match exactly."""
    lines = _content_lines(path)
    if not lines:
        raise InputError(f"{path}: file is empty")
    header_no, header_line = lines[0]
    header = next(csv.reader([header_line]))
    allowed = required + (optional or [])
    if header[: len(required)] != required or any(c not in allowed for c in header):
        raise InputError(
            f"{path}:{header_no}: bad header {header!r}; expected columns {required}"
            + (f" with optional {optional}" if optional else "")
        )
    if len(set(header)) != len(header):
        raise InputError(f"{path}:{header_no}: duplicate column in header")
    rows = []
    for no, line in lines[1:]:
        fields = next(csv.reader([line]))
        if len(fields) != len(header):
            raise InputError(f"{path}:{no}: expected {len(header)} fields, got {len(fields)}")
        rows.append((no, dict(zip(header, fields))))
    return header, rows


def _write_lines(path, lines: Iterable[str]) -> None:
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


# ---------------------------------------------------------------------------
# observations


def write_observations(path, observations: Sequence[Observation], provenance=None) -> None:
    lines = provenance_lines(provenance)
    lines.append(",".join(OBSERVATION_COLUMNS))
    for o in observations:
        lines.append(
            ",".join(
                [
                    format_float(o.point.lat),
                    format_float(o.point.lon),
                    format_float(o.point.time),
                    format_float(o.value),
                    format_float(o.noise_sd),
                    str(o.instrument_id),
                    "1" if o.quality_flag else "0",
                    o.surface_class.value,
                ]
            )
        )
    _write_lines(path, lines)


def read_observations(path) -> list[Observation]:
    """Parse an observation CSV; rows violating type invariants are rejected
    with their line number."""
    _, rows = _read_csv(path, OBSERVATION_COLUMNS)
    out = []
    for no, row in rows:
        try:
            point = SpaceTimePoint(
                _parse_float(row["lat"], path, no, "lat"),
                _parse_float(row["lon"], path, no, "lon"),
                _parse_float(row["time"], path, no, "time"),
            )
            obs = Observation(
                point,
                _parse_float(row["value"], path, no, "value"),
                _parse_float(row["noise_sd"], path, no, "noise_sd"),
                _parse_int(row["instrument_id"], path, no, "instrument_id"),
                _parse_bool(row["quality"], path, no, "quality"),
                SurfaceClass.parse(row["surface"]),
            )
        except InputError as exc:
            raise InputError(f"{path}:{no}: {exc}") from None
        out.append(obs)
    return out


# ---------------------------------------------------------------------------
# stations (long format: one row per reference sample)


def write_stations(path, stations: Sequence[StationRecord], provenance=None) -> None:
    has_model = any(s.model_columns is not None for s in stations)
    cols = STATION_COLUMNS + (["model"] if has_model else [])
    lines = provenance_lines(provenance)
    lines.append(",".join(cols))
    for s in stations:
        if has_model and s.model_columns is None:
            raise InputError(f"station {s.station_id} lacks model columns while others have them")
        for k in range(s.times.shape[0]):
            fields = [
                str(s.station_id),
                format_float(s.lat),
                format_float(s.lon),
                format_float(s.times[k]),
                format_float(s.columns[k]),
            ]
            if has_model:
                fields.append(format_float(s.model_columns[k]))
            lines.append(",".join(fields))
    _write_lines(path, lines)


def read_stations(path) -> list[StationRecord]:
    header, rows = _read_csv(path, STATION_COLUMNS, optional=["model"])
    has_model = "model" in header
    acc: dict[int, dict] = {}
    for no, row in rows:
        sid = _parse_int(row["station"], path, no, "station")
        rec = acc.setdefault(sid, {"lat": None, "lon": None, "times": [], "cols": [], "model": []})
        lat = _parse_float(row["lat"], path, no, "lat")
        lon = _parse_float(row["lon"], path, no, "lon")
        if rec["lat"] is None:
            rec["lat"], rec["lon"] = lat, lon
        elif rec["lat"] != lat or rec["lon"] != lon:
            raise InputError(f"{path}:{no}: station {sid} changes location mid-file")
        rec["times"].append(_parse_float(row["time"], path, no, "time"))
        rec["cols"].append(_parse_float(row["value"], path, no, "value"))
        if has_model:
            rec["model"].append(_parse_float(row["model"], path, no, "model"))
    out = []
    for sid in sorted(acc):
        rec = acc[sid]
        try:
            out.append(
                StationRecord(
                    sid,
                    rec["lat"],
                    rec["lon"],
                    np.array(rec["times"]),
                    np.array(rec["cols"]),
                    model_columns=np.array(rec["model"]) if has_model else None,
                )
            )
        except InputError as exc:
            raise InputError(f"{path}: station {sid}: {exc}") from None
    return out


# ---------------------------------------------------------------------------
# matchups


def write_matchups(path, matchups: Sequence[Matchup], provenance=None) -> None:
    has_model = all(m.has_model for m in matchups) and bool(matchups)
    has_prior = all(m.prior_columns is not None for m in matchups) and bool(matchups)
    cols = list(MATCHUP_COLUMNS)
    if has_model:
        cols += ["model_obs", "model_ref"]
    if has_prior:
        cols += ["prior"]
    lines = provenance_lines(provenance)
    lines.append(",".join(cols))
    for m in matchups:
        for i in range(m.n):
            fields = [
                str(m.station_id),
                str(m.day),
                format_float(m.values[i]),
                format_float(m.references[i]),
            ]
            if has_model:
                fields += [format_float(m.model_obs_columns[i]), format_float(m.model_ref_columns[i])]
            if has_prior:
                fields.append(format_float(m.prior_columns[i]))
            lines.append(",".join(fields))
    _write_lines(path, lines)


def read_matchups(path) -> list[Matchup]:
    header, rows = _read_csv(path, MATCHUP_COLUMNS, optional=MATCHUP_OPTIONAL)
    has_model = "model_obs" in header
    if has_model != ("model_ref" in header):
        raise InputError(f"{path}: model_obs and model_ref must appear together")
    has_prior = "prior" in header
    acc: dict[tuple[int, int], dict[str, list[float]]] = {}
    order: list[tuple[int, int]] = []
    for no, row in rows:
        key = (_parse_int(row["station"], path, no, "station"), _parse_int(row["day"], path, no, "day"))
        if key not in acc:
            acc[key] = {"value": [], "ref": [], "model_obs": [], "model_ref": [], "prior": []}
            order.append(key)
        rec = acc[key]
        rec["value"].append(_parse_float(row["value"], path, no, "value"))
        rec["ref"].append(_parse_float(row["ref"], path, no, "ref"))
        if has_model:
            rec["model_obs"].append(_parse_float(row["model_obs"], path, no, "model_obs"))
            rec["model_ref"].append(_parse_float(row["model_ref"], path, no, "model_ref"))
        if has_prior:
            rec["prior"].append(_parse_float(row["prior"], path, no, "prior"))
    out = []
    for key in order:
        rec = acc[key]
        out.append(
            Matchup(
                key[0],
                key[1],
                np.array(rec["value"]),
                np.array(rec["ref"]),
                model_obs_columns=np.array(rec["model_obs"]) if has_model else None,
                model_ref_columns=np.array(rec["model_ref"]) if has_model else None,
                prior_columns=np.array(rec["prior"]) if has_prior else None,
            )
        )
    return out


# ---------------------------------------------------------------------------
# sparse precision (DOK triplet text)


def write_precision(path, precision: SparsePrecision, provenance=None) -> None:
    """Serialize the lower triangle as ``dok v1`` triplets sorted by (row, col)."""
    lines = provenance_lines(provenance)
    lines.append(f"dok v1 {precision.n} {precision.nnz}")
    for r, c, v in zip(precision.rows, precision.cols, precision.values):
        lines.append(f"{r} {c} {format_float(v)}")
    _write_lines(path, lines)


def read_precision(path) -> SparsePrecision:
    lines = _content_lines(path)
    if not lines:
        raise InputError(f"{path}: file is empty")
    head_no, head = lines[0]
    parts = head.split()
    if len(parts) != 4 or parts[0] != "dok" or parts[1] != "v1":
        raise InputError(f"{path}:{head_no}: bad header {head!r}; expected 'dok v1 <n> <nnz>'")
    n = _parse_int(parts[2], path, head_no, "n")
    nnz = _parse_int(parts[3], path, head_no, "nnz")
    if len(lines) - 1 != nnz:
        raise InputError(f"{path}: header promises {nnz} entries, found {len(lines) - 1}")
    rows = np.empty(nnz, dtype=np.intp)
    cols = np.empty(nnz, dtype=np.intp)
    vals = np.empty(nnz, dtype=float)
    seen = set()
    for k, (no, line) in enumerate(lines[1:]):
        fields = line.split()
        if len(fields) != 3:
            raise InputError(f"{path}:{no}: expected 'row col value', got {line!r}")
        r = _parse_int(fields[0], path, no, "row")
        c = _parse_int(fields[1], path, no, "col")
        v = _parse_float(fields[2], path, no, "value")
        if not (0 <= r < n and 0 <= c < n):
            raise InputError(f"{path}:{no}: index ({r}, {c}) out of range for dimension {n}")
        if r < c:
            raise InputError(f"{path}:{no}: upper-triangle entry ({r}, {c}); store row >= col")
        if (r, c) in seen:
            raise InputError(f"{path}:{no}: duplicate entry ({r}, {c})")
        seen.add((r, c))
        rows[k], cols[k], vals[k] = r, c, v
    return SparsePrecision(n, rows, cols, vals)


# ---------------------------------------------------------------------------
# rasters


def write_raster(path, raster: Raster, provenance=None) -> None:
    lines = provenance_lines(provenance)
    lines.append(
        f"raster v1 {raster.n_lat} {raster.n_lon} "
        f"{format_float(raster.lat0)} {format_float(raster.lon0)} {format_float(raster.cell_deg)}"
    )
    for i in range(raster.n_lat):
        lines.append(" ".join(str(int(v)) for v in raster.values[i]))
    _write_lines(path, lines)


def read_raster(path) -> Raster:
    lines = _content_lines(path)
    if not lines:
        raise InputError(f"{path}: file is empty")
    head_no, head = lines[0]
    parts = head.split()
    if len(parts) != 7 or parts[0] != "raster" or parts[1] != "v1":
        raise InputError(
            f"{path}:{head_no}: bad header {head!r}; expected 'raster v1 <nlat> <nlon> <lat0> <lon0> <cell>'"
        )
    n_lat = _parse_int(parts[2], path, head_no, "nlat")
    n_lon = _parse_int(parts[3], path, head_no, "nlon")
    lat0 = _parse_float(parts[4], path, head_no, "lat0")
    lon0 = _parse_float(parts[5], path, head_no, "lon0")
    cell = _parse_float(parts[6], path, head_no, "cell")
    if len(lines) - 1 != n_lat:
        raise InputError(f"{path}: header promises {n_lat} rows, found {len(lines) - 1}")
    values = np.empty((n_lat, n_lon), dtype=np.int64)
    for i, (no, line) in enumerate(lines[1:]):
        fields = line.split()
        if len(fields) != n_lon:
            raise InputError(f"{path}:{no}: expected {n_lon} values, got {len(fields)}")
        values[i] = [_parse_int(f, path, no, f"col{j}") for j, f in enumerate(fields)]
    return Raster(lat0, lon0, cell, values)


# ---------------------------------------------------------------------------
# realizations


def write_realizations(path, realizations: np.ndarray, provenance=None) -> None:
    arr = np.asarray(realizations, dtype=float)
    if arr.ndim != 2:
        raise InputError("realizations must be a (count, n) array")
    lines = provenance_lines(provenance)
    lines.append(f"realizations v1 {arr.shape[0]} {arr.shape[1]}")
    for row in arr:
        lines.append(" ".join(format_float(v) for v in row))
    _write_lines(path, lines)


def read_realizations(path) -> np.ndarray:
    lines = _content_lines(path)
    if not lines:
        raise InputError(f"{path}: file is empty")
    head_no, head = lines[0]
    parts = head.split()
    if len(parts) != 4 or parts[0] != "realizations" or parts[1] != "v1":
        raise InputError(f"{path}:{head_no}: bad header {head!r}; expected 'realizations v1 <count> <n>'")
    count = _parse_int(parts[2], path, head_no, "count")
    n = _parse_int(parts[3], path, head_no, "n")
    if len(lines) - 1 != count:
        raise InputError(f"{path}: header promises {count} rows, found {len(lines) - 1}")
    out = np.empty((count, n))
    for i, (no, line) in enumerate(lines[1:]):
        fields = line.split()
        if len(fields) != n:
            raise InputError(f"{path}:{no}: expected {n} values, got {len(fields)}")
        out[i] = [_parse_float(f, path, no, f"col{j}") for j, f in enumerate(fields)]
    return out


# ---------------------------------------------------------------------------
# product cells and geometries


def write_cells(path, product: DailyProduct, provenance=None) -> None:
    """Cell table for both classes: land block first, then ocean."""
    lines = provenance_lines(provenance if provenance is not None else product.provenance)
    lines.append(",".join(CELL_COLUMNS))
    for cls in (SurfaceClass.LAND, SurfaceClass.OCEAN):
        for est in product.cells(cls):
            lines.append(
                ",".join(
                    [
                        cls.value,
                        str(est.grid_index),
                        format_float(est.center.lat),
                        format_float(est.center.lon),
                        format_float(est.center.time),
                        format_float(est.value),
                        format_float(est.sd),
                        str(est.n_contributing),
                        "1" if est.geometry is not None else "0",
                    ]
                )
            )
    _write_lines(path, lines)


def read_cell_values(path, surface: SurfaceClass) -> tuple[np.ndarray, np.ndarray]:
    """Cell fused values and sds for one class, in file (precision index) order."""
    _, rows = _read_csv(path, CELL_COLUMNS)
    values, sds = [], []
    for no, row in rows:
        if SurfaceClass.parse(row["surface"]) is not surface:
            continue
        values.append(_parse_float(row["value"], path, no, "value"))
        sds.append(_parse_float(row["sd"], path, no, "sd"))
    return np.array(values), np.array(sds)


def write_geometries(path, entries: Sequence[tuple[int, SoundingGeometry]], provenance=None) -> None:
    """Per-cell combined geometries: one line of index, pressure, prior,
    weighting, and row-major averaging kernel."""
    if not entries:
        n_levels = 0
    else:
        n_levels = entries[0][1].n_levels
    lines = provenance_lines(provenance)
    lines.append(f"geom v1 {len(entries)} {n_levels}")
    for idx, g in entries:
        if g.n_levels != n_levels:
            raise InputError("all geometries in one file must share a level count")
        nums = (
            list(g.pressure) + list(g.prior_profile) + list(g.weighting) + list(g.averaging_kernel.ravel())
        )
        lines.append(str(idx) + " " + " ".join(format_float(v) for v in nums))
    _write_lines(path, lines)


def read_geometries(path) -> list[tuple[int, SoundingGeometry]]:
    lines = _content_lines(path)
    if not lines:
        raise InputError(f"{path}: file is empty")
    head_no, head = lines[0]
    parts = head.split()
    if len(parts) != 4 or parts[0] != "geom" or parts[1] != "v1":
        raise InputError(f"{path}:{head_no}: bad header {head!r}; expected 'geom v1 <count> <levels>'")
    count = _parse_int(parts[2], path, head_no, "count")
    levels = _parse_int(parts[3], path, head_no, "levels")
    if len(lines) - 1 != count:
        raise InputError(f"{path}: header promises {count} entries, found {len(lines) - 1}")
    expected = 1 + 3 * levels + levels * levels
    out = []
    for no, line in lines[1:]:
        fields = line.split()
        if len(fields) != expected:
            raise InputError(f"{path}:{no}: expected {expected} fields, got {len(fields)}")
        idx = _parse_int(fields[0], path, no, "index")
        nums = [_parse_float(f, path, no, "geometry") for f in fields[1:]]
        pressure = np.array(nums[:levels])
        prior = np.array(nums[levels : 2 * levels])
        h = np.array(nums[2 * levels : 3 * levels])
        ak = np.array(nums[3 * levels :]).reshape(levels, levels)
        try:
            out.append((idx, SoundingGeometry(pressure, prior, h, ak)))
        except InputError as exc:
            raise InputError(f"{path}:{no}: {exc}") from None
    return out


# ---------------------------------------------------------------------------
# summaries and trends


SUMMARY_COLUMNS = [
    "surface",
    "n_stations",
    "n_days",
    "n_obs",
    "overall_bias",
    "station_bias_std",
    "daily_std",
    "colocation",
    "validation",
    "systematic",
    "random",
    "systematic_clamped",
    "random_clamped",
    "flags",
]


def write_summary(path, summaries: Mapping[SurfaceClass, ErrorSummary], provenance=None) -> None:
    """Machine-readable assessment table mirroring the per-class error columns."""
    lines = provenance_lines(provenance)
    lines.append(",".join(SUMMARY_COLUMNS))
    for cls in (SurfaceClass.LAND, SurfaceClass.OCEAN):
        if cls not in summaries:
            continue
        s = summaries[cls]
        lines.append(
            ",".join(
                [
                    cls.value,
                    str(s.n_stations),
                    str(s.n_days),
                    str(s.n_obs),
                    format_float(s.overall_bias),
                    format_float(s.station_bias_std),
                    format_float(s.daily_std),
                    format_float(s.colocation),
                    format_float(s.validation),
                    format_float(s.systematic),
                    format_float(s.random),
                    "1" if s.systematic_clamped else "0",
                    "1" if s.random_clamped else "0",
                    ";".join(s.flags),
                ]
            )
        )
    _write_lines(path, lines)


def write_trends(path, rows: Sequence[TrendRow], provenance=None) -> None:
    lines = provenance_lines(provenance)
    lines.append("region,n_quarters,intercept,intercept_se,slope,slope_se")
    for r in rows:
        lines.append(
            ",".join(
                [
                    str(r.region),
                    str(r.n_quarters),
                    format_float(r.intercept),
                    format_float(r.intercept_se),
                    format_float(r.slope),
                    format_float(r.slope_se),
                ]
            )
        )
    _write_lines(path, lines)


def write_quarterly(path, series: Sequence[QuarterlySeries], provenance=None) -> None:
    lines = provenance_lines(provenance)
    lines.append("region,quarter,mean,sd,count")
    for s in series:
        for k in range(s.quarters.shape[0]):
            lines.append(
                ",".join(
                    [
                        str(s.region),
                        str(int(s.quarters[k])),
                        format_float(s.means[k]),
                        format_float(s.sds[k]),
                        str(int(s.counts[k])),
                    ]
                )
            )
    _write_lines(path, lines)
