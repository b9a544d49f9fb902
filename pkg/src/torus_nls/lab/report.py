"""Experiment reports and deterministic exporters.

Reports serialize to JSON with sorted keys and shortest round-trip float
encoding; identical config + seed therefore reproduces byte-identical output.
Wall-clock timing lives on the in-memory report only and is written to a
separate run_info.txt, outside the determinism contract.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field as dc_field

import numpy as np

from .. import __version__


def _plain(obj):
    """Recursively convert numpy scalars/arrays and tuples to JSON-safe types."""
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_plain(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, complex):
        return {"re": obj.real, "im": obj.imag}
    if isinstance(obj, float) and not np.isfinite(obj):
        return repr(obj)  # 'nan' / 'inf' as strings; JSON has no literals for them
    return obj


@dataclass
class ExperimentReport:
    """Scalar results, fitted quantities with residuals, and pass/fail flags
    of one scenario run."""

    scenario: str
    config_echo: dict
    seed: int
    results: dict = dc_field(default_factory=dict)
    tables: dict = dc_field(default_factory=dict)   # name -> list of row dicts
    fits: dict = dc_field(default_factory=dict)     # name -> {value, residual, ...}
    flags: dict = dc_field(default_factory=dict)    # name -> bool
    tolerances: dict = dc_field(default_factory=dict)
    grid_meta: dict = dc_field(default_factory=dict)
    wall_clock_s: float = 0.0

    @property
    def passed(self) -> bool:
        return all(self.flags.values())

    def to_json_dict(self) -> dict:
        return _plain(
            {
                "scenario": self.scenario,
                "config": self.config_echo,
                "seed": self.seed,
                "results": self.results,
                "tables": self.tables,
                "fits": self.fits,
                "flags": self.flags,
                "tolerances": self.tolerances,
                "grid_meta": self.grid_meta,
                "versions": {"torus_nls": __version__},
            }
        )

    def save_json(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_json_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")


def write_csv(path, header: list[str], rows) -> None:
    """CSV with repr() floats (shortest decimal that round-trips exactly)."""
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            cells = []
            for h in header:
                v = row[h] if isinstance(row, dict) else row[header.index(h)]
                if isinstance(v, (float, np.floating)):
                    cells.append(repr(float(v)))
                else:
                    cells.append(str(v))
            fh.write(",".join(cells) + "\n")


def read_csv(path) -> list[dict]:
    with open(path) as fh:
        header = fh.readline().strip().split(",")
        rows = []
        for line in fh:
            vals = line.strip().split(",")
            rows.append(dict(zip(header, vals)))
    return rows


def write_manifest(out_dir, entries: dict) -> None:
    with open(os.path.join(out_dir, "manifest.json"), "w") as fh:
        json.dump(_plain(entries), fh, indent=2, sort_keys=True)
        fh.write("\n")


def write_run_info(out_dir, report: ExperimentReport) -> None:
    """Timing and host facts: deliberately outside the deterministic outputs."""
    with open(os.path.join(out_dir, "run_info.txt"), "w") as fh:
        fh.write(f"scenario: {report.scenario}\n")
        fh.write(f"wall_clock_s: {report.wall_clock_s:.3f}\n")


def export(obj, format: str, path) -> None:
    """Write a report, trajectory or field in one of the contract formats.

    csv: trajectory diagnostics (or a report table given as (header, rows));
    json: report document; field_binary: a field or a trajectory's snapshots.
    IO errors surface with the offending path attached.
    """
    from ..evolution import TrajectoryRecord, write_diagnostics_csv
    from ..field import PhysicalField, SpectralField, inverse_transform, save_field

    try:
        if format == "json":
            if isinstance(obj, ExperimentReport):
                obj.save_json(path)
            else:
                with open(path, "w") as fh:
                    json.dump(_plain(obj), fh, indent=2, sort_keys=True)
                    fh.write("\n")
        elif format == "csv":
            if isinstance(obj, TrajectoryRecord):
                write_diagnostics_csv(obj, path)
            else:
                header, rows = obj
                write_csv(path, list(header), rows)
        elif format == "field_binary":
            if isinstance(obj, SpectralField):
                obj = inverse_transform(obj)
            if isinstance(obj, PhysicalField):
                save_field(obj, path)
            elif isinstance(obj, TrajectoryRecord):
                obj.save(path)
            else:
                raise ValueError(f"cannot export {type(obj).__name__} as field_binary")
        else:
            raise ValueError(f"unknown export format {format!r}")
    except OSError as exc:
        raise OSError(f"export to {path} failed: {exc}") from exc


def ols_loglog(xs, ys):
    """OLS fit of log y on log x: slope, intercept, and RMS log residual."""
    lx, ly = np.log(np.asarray(xs, dtype=float)), np.log(np.asarray(ys, dtype=float))
    slope, intercept = np.polyfit(lx, ly, 1)
    resid = ly - (slope * lx + intercept)
    return float(slope), float(intercept), float(np.sqrt(np.mean(resid**2)))
