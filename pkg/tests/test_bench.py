import json
import math

import numpy as np
import pytest

from quadbench.bench.config import FamilyConfig, SuiteConfig
from quadbench.bench.report import (RESULTS_CSV, SUMMARY_JSON, aggregate, correlate_ecs, format_row, read_results_csv,
                                    report_from_csv, write_report, write_results_csv)
from quadbench.bench.runner import TIMING_FIELDS, CaseResult, PreparedCase, run_case, run_suite
from quadbench.envgen.scenario import ScenarioCase
from quadbench.errors import ConfigError, ContractError
from quadbench.world import Bounds, PointCloud

EMPTY = {"n_cylinders": 0, "n_ellipsoids": 0, "n_boxes": 0, "n_gates": 0}
SMALL = {"min": [0, 0, 0], "max": [12, 3, 2]}


def _trivial_config(count=10, planners=(("jps", "flatness"),), **kw):
    return SuiteConfig.from_dict({"families": [{"family": "obstacle", "count": count, "spec": EMPTY}],
                                  "planners": [list(p) for p in planners], "bounds": SMALL} | kw)


def _row(case_id, c, status, **kw):
    return CaseResult(case_id=case_id, family="obstacle", seed=0, frontend="jps", backend="flatness",
                      density=kw.pop("d", 0.1), clutter=c, structure=kw.pop("s", 0.5), status=status,
                      fe_status="success", fe_time=0.0, **kw)


def test_status_invariant():
    with pytest.raises(ContractError):
        _row("a", 0.1, "exploded")


def test_empty_maps_all_succeed(tmp_path):
    cfg = _trivial_config(10, (("jps", "flatness"), ("rrt_star", "none")))
    suite = run_suite(cfg)
    assert len(suite.results) == 10 * 2
    assert len({r.case_id for r in suite.results}) == 10
    groups = aggregate(suite.results)
    assert [g["success_rate"] for g in groups] == [1.0, 1.0]
    for r in suite.results:
        # No obstacles: the ECS is undefined and recorded as missing.
        assert math.isnan(r.clutter) and r.density == 0.0
        if r.backend == "none":
            assert r.be_status == "" and math.isnan(r.duration)
    summary = write_report(suite, tmp_path)
    assert len(list((tmp_path / "trajectories").iterdir())) == 10
    assert summary["groups"] == report_from_csv(tmp_path)["groups"]
    assert "error" in summary["ecs_correlation"]


def test_walled_goal_is_infeasible_without_backend_fields():
    b = Bounds((0, 0, 0), (4, 2, 1))
    wall = np.array([[2.0, y, z] for y in np.arange(0, 2.01, 0.05) for z in np.arange(0, 1.01, 0.05)])
    case = ScenarioCase("walled", PointCloud(wall), b, [0.5, 1, 0.5], [3.5, 1, 0.5], {"seed": 0})
    cfg = _trivial_config(1, bounds=b.to_dict())
    prep = PreparedCase.build(case, cfg)
    for fe in ("jps", "rrt_star", "mpl"):
        res, traj = run_case(prep, fe, "flatness", cfg)
        assert res.status in ("infeasible", "timeout") and traj is None
        assert res.be_status == "" and res.n_polytopes == 0 and math.isnan(res.duration)
    assert run_case(prep, "jps", "flatness", cfg)[0].status == "infeasible"


def test_results_csv_roundtrip_and_header_only(tmp_path):
    write_results_csv([], tmp_path / "e.csv")
    assert (tmp_path / "e.csv").read_text() == ",".join(CaseResult.columns()) + "\n"
    assert read_results_csv(tmp_path / "e.csv") == []
    rows = [_row("a", 0.25, "success", duration=3.5, collision=False),
            _row("b", math.nan, "collision", collision=True)]
    write_results_csv(rows, tmp_path / "r.csv")
    back = read_results_csv(tmp_path / "r.csv")
    for r, s in zip(rows, back):
        for k, v in r.to_dict().items():
            w = s.to_dict()[k]
            assert (isinstance(v, float) and math.isnan(v) and math.isnan(w)) or v == w


def test_correlation_of_synthetic_failures_is_perfect():
    rows = []
    for i in range(10):
        c = i / 10
        n_fail = round(10 * c)
        rows += [_row(f"m{i}", c, "timeout" if k < n_fail else "success") for k in range(10)]
    out = correlate_ecs(rows)
    assert out["n_maps"] == 10
    assert out["spearman"]["clutter"] == pytest.approx(1.0)
    # Density and structure are constant here.
    assert out["undefined"] == ["density", "structure"]


def test_correlation_needs_enough_results():
    with pytest.raises(ContractError):
        correlate_ecs([_row("a", 0.1, "success")] * 29)


def test_collision_rates_use_both_denominators():
    rows = [_row("a", 0.1, "collision", collision=True, be_status="success"),
            _row("b", 0.1, "success", be_status="success"),
            _row("c", 0.1, "opt-failure", be_status="opt-failure"),
            _row("d", 0.1, "timeout")]
    rows[3].fe_status = "timeout"
    (g,) = aggregate(rows)
    assert g["collision_rate"] == 0.25
    assert g["collision_rate_returned"] == 0.5
    assert g["success_rate"] == 0.25


def test_summary_is_recomputable_from_csv(tmp_path):
    cfg = _trivial_config(3, (("jps", "none"),))
    write_report(run_suite(cfg), tmp_path)
    first = json.loads((tmp_path / SUMMARY_JSON).read_text())
    again = report_from_csv(tmp_path)
    assert first["groups"] == again["groups"]
    assert first["rejected_seeds"] == {"00-obstacle": 0}
    assert len(read_results_csv(tmp_path / RESULTS_CSV)) == 3


def test_suite_is_independent_of_parallelism():
    cfg = _trivial_config(4, (("jps", "flatness"), ("mpl", "none")))
    a = run_suite(cfg)
    b = run_suite(SuiteConfig.from_dict(cfg.to_dict() | {"parallelism": 2}))
    keep = [i for i, c in enumerate(CaseResult.columns()) if c not in TIMING_FIELDS]
    strip = lambda r: [format_row(r)[i] for i in keep]  # noqa: E731
    assert [strip(r) for r in a.results] == [strip(r) for r in b.results]


def test_config_roundtrip_and_validation(tmp_path):
    cfg = SuiteConfig((FamilyConfig("maze", 3, {"p": 0.1}),), (("jps", "flatness"),), seed_base=5)
    path = tmp_path / "c.json"
    path.write_text(cfg.to_json())
    assert SuiteConfig.load(path) == cfg
    with pytest.raises(ConfigError):
        SuiteConfig.from_dict(cfg.to_dict() | {"colour": "red"})
    with pytest.raises(ConfigError):
        SuiteConfig.from_dict(cfg.to_dict() | {"planners": [["dijkstra", "none"]]})
    with pytest.raises(ConfigError):
        FamilyConfig("maze", 1, {"walls": 3})
    with pytest.raises(ConfigError):
        SuiteConfig.from_dict(cfg.to_dict() | {"parallelism": 0})
    path.write_text("{not json")
    with pytest.raises(ConfigError):
        SuiteConfig.load(path)


def test_unsimplified_paths_also_run_through_the_backend():
    cfg = _trivial_config(2, (("jps", "flatness"),), simplify=False)
    rows = run_suite(cfg).results
    assert [r.status for r in rows] == ["success", "success"]
    assert all(r.n_polytopes >= 1 for r in rows)
