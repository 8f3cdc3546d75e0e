"""Deterministic CSV/JSON artifacts for pipeline results.

CSV numbers use 12 significant digits.  Every file carries the config
digest and master seed: JSON as top-level keys, CSV as a trailing
``# config_sha256=...,seed=...`` comment line, so the header stays the
first line.
"""

from __future__ import annotations

import json
import math
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .pipeline import AnalysisResult, PreposteriorResult, PriorResult, SweepRow, VoiResult

PRIOR_COLUMNS = (
    "subset", "selected", "wind_kwp", "solar_kwp", "storage_kwh", "wind_capital", "solar_capital",
    "storage_capital", "grid_energy", "carbon", "total_cost", "objective", "emissions_kg",
)
SWEEP_COLUMNS = ("axis_value", "voi_eur_yr", "voi_se", "voo_eur_yr", "voo_se")


def fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if math.isnan(v):
            return "nan"
        out = f"{v:.12g}"
        return "0" if out == "-0" else out
    s = str(v)
    if any(c in s for c in ',"\n'):
        s = '"' + s.replace('"', '""') + '"'
    return s


def provenance_line(digest: str, seed: int) -> str:
    return f"# config_sha256={digest},seed={seed}"


def write_csv(path: str | Path, columns: Sequence[str], rows: Iterable[Mapping], digest: str, seed: int) -> Path:
    path = Path(path)
    lines = [",".join(columns)]
    lines += [",".join(fmt(r[c]) for c in columns) for r in rows]
    lines.append(provenance_line(digest, seed))
    path.write_text("\n".join(lines) + "\n")
    return path


def read_csv(path: str | Path) -> tuple[list[str], list[dict[str, str]]]:
    """Header and rows of an artifact CSV, skipping comment lines."""
    lines = [ln for ln in Path(path).read_text().splitlines() if ln and not ln.startswith("#")]
    header = lines[0].split(",")
    return header, [dict(zip(header, ln.split(","))) for ln in lines[1:]]


def _default(o):
    if isinstance(o, np.integer):
        return int(o)
    if isinstance(o, np.floating):
        return float(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, tuple):
        return list(o)
    raise TypeError(f"not JSON serialisable: {type(o).__name__}")


def write_json(path: str | Path, payload: Mapping, digest: str, seed: int) -> Path:
    path = Path(path)
    doc = {"config_sha256": digest, "seed": seed, **payload}
    path.write_text(json.dumps(doc, indent=1, sort_keys=True, default=_default) + "\n")
    return path


# --------------------------------------------------------------------------
# row builders


def prior_rows(prior: PriorResult) -> list[dict]:
    rows = []
    for key in sorted(prior.reports, key=lambda k: (k != "none", k)):
        rep = prior.reports[key]
        b = rep.breakdown
        rows.append({
            "subset": key,
            "selected": key == prior.selected,
            "wind_kwp": rep.capacities["wind_kwp"],
            "solar_kwp": rep.capacities["solar_kwp"],
            "storage_kwh": rep.storage_total,
            "wind_capital": b["wind_capital"],
            "solar_capital": b["solar_capital"],
            "storage_capital": b["storage_capital"],
            "grid_energy": b["grid_energy"],
            "carbon": b["carbon"],
            "total_cost": b["total"],
            "objective": rep.objective,
            "emissions_kg": b["emissions_kg"],
        })
    return rows


def prior_payload(prior: PriorResult) -> dict:
    return {
        "selected": prior.selected,
        "reports": {k: r.to_dict() for k, r in sorted(prior.reports.items())},
        "reduction_residuals": {k: r.residual for k, r in sorted(prior.reductions.items())},
    }


SCATTER_COLUMNS = ("sample", "technologies", "wind_kwp", "solar_kwp", "storage_kwh", "objective")


def scatter_rows(pre: PreposteriorResult) -> list[dict]:
    rows = []
    for s in pre.samples:
        rep = s.reports[s.best]
        rows.append({
            "sample": s.index,
            "technologies": s.best,
            "wind_kwp": rep.capacities["wind_kwp"],
            "solar_kwp": rep.capacities["solar_kwp"],
            "storage_kwh": rep.storage_total,
            "objective": rep.objective,
        })
    return rows


VOO_SCATTER_COLUMNS = SCATTER_COLUMNS + ("restricted_objective",)


def voo_scatter_rows(result: AnalysisResult) -> list[dict]:
    rows = scatter_rows(result.expanded)
    for row, s in zip(rows, result.expanded.samples):
        row["restricted_objective"] = s.objective(result.prior.selected)
    return rows


def samples_payload(pre: PreposteriorResult) -> dict:
    return {
        "action_set": pre.action_set,
        "samples": [
            {
                "index": s.index,
                "digest": s.digest,
                "theta": s.theta,
                "z": s.z,
                "best": s.best,
                "reports": {k: r.to_dict() for k, r in sorted(s.reports.items())},
            }
            for s in pre.samples
        ],
        "failures": [{"index": s.index, "digest": s.digest, "error": s.error} for s in pre.failures],
    }


def voi_payload(prior: PriorResult, pre: PreposteriorResult, voi: VoiResult) -> dict:
    return {"prior": prior_payload(prior), "voi": voi.to_dict(), "preposterior": samples_payload(pre)}


def analysis_payload(result: AnalysisResult) -> dict:
    return {
        "prior": prior_payload(result.prior),
        "voi": result.voi.to_dict(),
        "voo": result.voo.to_dict(),
        "preposterior": samples_payload(result.expanded),
    }


def sweep_rows(rows: Sequence[SweepRow]) -> list[dict]:
    return [
        {"axis_value": r.axis_value, "voi_eur_yr": r.voi, "voi_se": r.voi_se, "voo_eur_yr": r.voo, "voo_se": r.voo_se}
        for r in rows
    ]
