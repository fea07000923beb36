"""Result files, aggregates and the ECS correlation report."""

from __future__ import annotations

import csv
import json
import math
from collections import defaultdict
from pathlib import Path

import numpy as np
from scipy.stats import spearmanr

from ..errors import ContractError
from .runner import CaseResult, SuiteResult

RESULTS_CSV = "results.csv"
SUMMARY_JSON = "summary.json"
SCATTER_CSV = "ecs_scatter.csv"
TRAJ_DIR = "trajectories"
MIN_CORRELATION_RESULTS = 30

_INT_FIELDS = {"seed", "n_polytopes"}
_STR_FIELDS = {"case_id", "family", "frontend", "backend", "status", "fe_status", "be_status"}


def _fmt(v) -> str:
    if isinstance(v, bool):
        return "1" if v else "0"
    if isinstance(v, float):
        return "" if math.isnan(v) else repr(v)
    if isinstance(v, (np.floating,)):
        return _fmt(float(v))
    return str(v)


def format_row(r: CaseResult) -> list[str]:
    d = r.to_dict()
    return [_fmt(d[c]) for c in CaseResult.columns()]


def write_results_csv(rows, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CaseResult.columns())
        for r in rows:
            w.writerow(format_row(r))


def _parse(name: str, v: str):
    if name in _STR_FIELDS:
        return v
    if name in _INT_FIELDS:
        return int(v)
    if name == "collision":
        return v == "1"
    return math.nan if v == "" else float(v)


def read_results_csv(path) -> list[CaseResult]:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != CaseResult.columns():
            raise ContractError(f"{path}: unexpected columns {reader.fieldnames}")
        return [CaseResult(**{k: _parse(k, v) for k, v in row.items()}) for row in reader]


def _mean(xs) -> float | None:
    xs = [x for x in xs if not math.isnan(x)]
    return float(sum(xs) / len(xs)) if xs else None


def aggregate(rows) -> list[dict]:
    """Per (family, front-end, back-end) rates and means.

    ``collision_rate`` divides by all runs; ``collision_rate_returned`` divides
    by runs that returned a path or trajectory to the validator.
    """
    groups = defaultdict(list)
    for r in rows:
        groups[(r.family, r.frontend, r.backend)].append(r)
    out = []
    for (family, fe, be), rs in sorted(groups.items()):
        n = len(rs)
        ok = [r for r in rs if r.status == "success"]
        returned = [r for r in rs if r.fe_status in ("success", "collision")
                    and (be == "none" or r.be_status == "success")]
        n_col = sum(r.collision for r in rs)
        out.append({
            "family": family, "frontend": fe, "backend": be, "runs": n,
            "successes": len(ok),
            "success_rate": len(ok) / n,
            "fe_success_rate": sum(r.fe_status == "success" for r in rs) / n,
            "collisions": n_col,
            "collision_rate": n_col / n,
            "returned": len(returned),
            "collision_rate_returned": n_col / len(returned) if returned else None,
            "status_counts": {s: sum(r.status == s for r in rs) for s in sorted({r.status for r in rs})},
            "mean_fe_time": _mean([r.fe_time for r in rs]),
            "mean_be_time": _mean([r.be_time for r in rs if r.be_status]),
            "mean_total_time": _mean([r.total_time for r in ok]),
            "mean_duration": _mean([r.duration for r in ok]),
            "mean_sq_jerk": _mean([r.mean_sq_jerk for r in ok]),
        })
    return out


def _spearman(x, y) -> float | None:
    x, y = np.asarray(x, float), np.asarray(y, float)
    if len(x) < 2 or np.all(x == x[0]) or np.all(y == y[0]):
        return None
    return float(spearmanr(x, y).statistic)


def per_map(rows) -> list[dict]:
    """ECS triple with success and failure counts over the planner matrix, per map."""
    maps = {}
    for r in rows:
        m = maps.setdefault(r.case_id, {"map_id": r.case_id, "family": r.family, "d": r.density,
                                        "c": r.clutter, "s": r.structure, "successes": 0, "failures": 0})
        m["successes" if r.status == "success" else "failures"] += 1
    return [maps[k] for k in sorted(maps)]


def correlate_ecs(rows) -> dict:
    """Spearman rank correlation of each ECS component against per-map failure count.

    Maps with an undefined component are dropped. A coefficient is ``None``
    (and listed under ``undefined``) when either column is constant.
    """
    with_ecs = [r for r in rows if not (math.isnan(r.density) or math.isnan(r.clutter)
                                        or math.isnan(r.structure))]
    if len(with_ecs) < MIN_CORRELATION_RESULTS:
        raise ContractError(f"correlation needs >= {MIN_CORRELATION_RESULTS} results with ECS, "
                            f"got {len(with_ecs)}")
    maps = per_map(with_ecs)
    fails = [m["failures"] for m in maps]
    coef = {name: _spearman([m[key] for m in maps], fails)
            for name, key in (("density", "d"), ("clutter", "c"), ("structure", "s"))}
    return {"n_maps": len(maps), "n_results": len(with_ecs), "spearman": coef,
            "undefined": sorted(k for k, v in coef.items() if v is None)}


def write_scatter_csv(rows, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["map_id", "family", "d", "c", "s", "successes", "failures"])
        for m in per_map(rows):
            w.writerow([m["map_id"], m["family"], _fmt(m["d"]), _fmt(m["c"]), _fmt(m["s"]),
                        m["successes"], m["failures"]])


def summarize(rows) -> dict:
    try:
        corr = correlate_ecs(rows)
    except ContractError as e:
        corr = {"error": str(e)}
    return {"n_results": len(rows), "groups": aggregate(rows), "ecs_correlation": corr}


def report_from_csv(out_dir) -> dict:
    """Rebuild summary.json and ecs_scatter.csv from an existing results.csv."""
    out = Path(out_dir)
    rows = read_results_csv(out / RESULTS_CSV)
    summary = summarize(rows)
    (out / SUMMARY_JSON).write_text(json.dumps(summary, indent=2, sort_keys=True))
    write_scatter_csv(rows, out / SCATTER_CSV)
    return summary


def write_report(suite: SuiteResult, out_dir) -> dict:
    """results.csv, summary.json, ecs_scatter.csv and one trajectory JSON per success.

    Aggregates are computed from the written CSV so they are recomputable from it.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_results_csv(suite.results, out / RESULTS_CSV)
    tdir = out / TRAJ_DIR
    tdir.mkdir(exist_ok=True)
    for (case_id, fe, be), traj in sorted(suite.trajectories.items()):
        (tdir / f"{case_id}__{fe}__{be}.json").write_text(json.dumps(traj.to_dict()))
    summary = report_from_csv(out)
    summary["rejected_seeds"] = suite.rejected
    summary["config"] = suite.config.to_dict()
    (out / SUMMARY_JSON).write_text(json.dumps(summary, indent=2, sort_keys=True))
    return summary
