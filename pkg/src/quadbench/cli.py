"""Command-line interface: gen, ecs, plan, bench and report.

Exit codes: 0 success, 1 configuration error, 2 I/O error, 3 internal error.
"""

from __future__ import annotations

import argparse
import csv
import glob
import json
import logging
import sys
from pathlib import Path

import numpy as np

from .errors import ConfigError, ContractError, InputError, ParseError, QuadbenchError

EXIT_OK, EXIT_CONFIG, EXIT_IO, EXIT_INTERNAL = 0, 1, 2, 3

log = logging.getLogger("quadbench")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def _vec3(text: str) -> np.ndarray:
    try:
        v = [float(x) for x in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected x,y,z, got {text!r}") from None
    if len(v) != 3:
        raise argparse.ArgumentTypeError(f"expected x,y,z, got {text!r}")
    return np.array(v)


def _bounds(text: str):
    from .world import Bounds

    try:
        v = [float(x) for x in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected 6 numbers, got {text!r}") from None
    if len(v) != 6:
        raise argparse.ArgumentTypeError(f"expected x0,y0,z0,x1,y1,z1, got {text!r}")
    return Bounds(tuple(v[:3]), tuple(v[3:]))


def _read_json(path) -> dict:
    try:
        return json.loads(Path(path).read_text())
    except json.JSONDecodeError as e:
        raise ConfigError(f"{path}: invalid JSON: {e}") from None


def _load_map(path, bounds=None):
    """A cloud file (PLY/XYZ) or a case sidecar JSON; returns ``(map_id, cloud, bounds)``."""
    from .envgen.io import load_point_cloud
    from .envgen.scenario import ScenarioCase
    from .world import Bounds

    p = Path(path)
    if p.suffix == ".json":
        case = ScenarioCase.load(p)
        return case.case_id, case.cloud, bounds or case.bounds
    side = p.with_suffix(".json")
    if bounds is None and side.exists():
        bounds = Bounds.from_dict(_read_json(side)["bounds"])
    return p.stem, load_point_cloud(p), bounds or Bounds()


def cmd_gen(args) -> int:
    from .bench.config import FamilyConfig, SuiteConfig
    from .bench.runner import make_case

    spec = _read_json(args.spec) if args.spec else {}
    fam = FamilyConfig(args.family, args.count, spec)
    cfg = SuiteConfig((fam,), (("jps", "none"),), seed_base=args.seed)
    out = Path(args.out)
    made, seed = 0, args.seed
    while made < args.count and seed < args.seed + args.count * cfg.max_attempts_factor:
        prep = make_case(fam, 0, seed, cfg)
        seed += 1
        if prep is None:
            continue
        prep.case.save(out)
        made += 1
        print(prep.case.case_id)
    if made < args.count:
        log.error("only %d of %d feasible cases generated", made, args.count)
        return EXIT_CONFIG
    return EXIT_OK


def cmd_ecs(args) -> int:
    from .ecs import ecs_row
    from .world import QuadrotorSpec

    files = sorted(glob.glob(args.inputs))
    if not files:
        raise FileNotFoundError(f"no files match {args.inputs!r}")
    quad = QuadrotorSpec(radius=args.radius)
    cols = ["map_id", "d", "c", "s", "N", "resolution"]
    rows = []
    for f in files:
        map_id, cloud, bounds = _load_map(f, args.bounds)
        rows.append(ecs_row(map_id, cloud, bounds, quad))
    fh = open(args.out, "w", newline="") if args.out != "-" else sys.stdout
    try:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(cols)
        for r in rows:
            w.writerow(["" if isinstance(r[c], float) and np.isnan(r[c]) else r[c] for c in cols])
    finally:
        if fh is not sys.stdout:
            fh.close()
    return EXIT_OK


def cmd_plan(args) -> int:
    from .bench.config import SuiteConfig
    from .bench.runner import PreparedCase, run_case
    from .envgen.scenario import ScenarioCase
    from .frontend import warmup

    map_id, cloud, bounds = _load_map(args.map)
    cfg = SuiteConfig.from_dict({"families": [{"family": "obstacle", "count": 1}],
                                 "planners": [[args.frontend, args.backend]], "bounds": bounds.to_dict()})
    case = ScenarioCase(map_id, cloud, bounds, args.start, args.goal, {"family": "custom", "seed": args.seed})
    prep = PreparedCase.build(case, cfg)
    warmup()
    res, traj = run_case(prep, args.frontend, args.backend, cfg, keep_trajectory=True)
    print(json.dumps(res.to_dict(), default=float))
    if args.out and traj is not None:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "trajectory.json").write_text(json.dumps(traj.to_dict()))
        traj.write_csv(out / "trajectory.csv")
    return EXIT_OK


def cmd_bench(args) -> int:
    from .bench.config import SuiteConfig
    from .bench.report import write_report
    from .bench.runner import run_suite

    cfg = SuiteConfig.load(args.config)
    if args.parallelism:
        cfg = SuiteConfig.from_dict(cfg.to_dict() | {"parallelism": args.parallelism})
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    summary = write_report(run_suite(cfg), out)
    _print_groups(summary)
    return EXIT_OK


def cmd_report(args) -> int:
    from .bench.report import report_from_csv

    summary = report_from_csv(args.inputs)
    _print_groups(summary)
    corr = summary["ecs_correlation"]
    if "spearman" in corr:
        print("spearman vs failures: " + ", ".join(
            f"{k}={'undefined' if v is None else f'{v:.3f}'}" for k, v in corr["spearman"].items()))
    return EXIT_OK


def _print_groups(summary: dict):
    for g in summary["groups"]:
        print(f"{g['family']:>9} {g['frontend']:>8}+{g['backend']:<8} runs={g['runs']:4d} "
              f"success={g['success_rate']:.3f} collision={g['collision_rate']:.3f}")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="quadbench", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    g = sub.add_parser("gen", help="generate feasible maze or obstacle cases")
    g.add_argument("--family", choices=("maze", "obstacle"), required=True)
    g.add_argument("--spec", help="JSON file with family spec overrides")
    g.add_argument("--count", type=int, default=1)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", required=True)
    g.set_defaults(func=cmd_gen)

    e = sub.add_parser("ecs", help="score point clouds with the complexity signature")
    e.add_argument("--in", dest="inputs", required=True, help="glob of cloud or case JSON files")
    e.add_argument("--out", default="-", help="CSV path (default stdout)")
    e.add_argument("--radius", type=float, default=0.2)
    e.add_argument("--bounds", type=_bounds, help="x0,y0,z0,x1,y1,z1 when no sidecar is present")
    e.set_defaults(func=cmd_ecs)

    pl = sub.add_parser("plan", help="plan one start/goal query on a map")
    pl.add_argument("--map", required=True)
    pl.add_argument("--start", type=_vec3, required=True)
    pl.add_argument("--goal", type=_vec3, required=True)
    pl.add_argument("--frontend", choices=("jps", "rrt_star", "mpl"), required=True)
    pl.add_argument("--backend", choices=("flatness", "none"), default="flatness")
    pl.add_argument("--seed", type=int, default=0)
    pl.add_argument("--out", help="directory for trajectory JSON and CSV")
    pl.set_defaults(func=cmd_plan)

    b = sub.add_parser("bench", help="run a benchmark suite")
    b.add_argument("--config", required=True)
    b.add_argument("--out", required=True)
    b.add_argument("--parallelism", type=int)
    b.set_defaults(func=cmd_bench)

    r = sub.add_parser("report", help="recompute summary files from results.csv")
    r.add_argument("--in", dest="inputs", required=True)
    r.set_defaults(func=cmd_report)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ConfigError, InputError, ContractError) as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except (OSError, ParseError) as e:
        print(f"I/O error: {e}", file=sys.stderr)
        return EXIT_IO
    except QuadbenchError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INTERNAL
    except Exception as e:  # noqa: BLE001
        log.exception("internal error")
        print(f"internal error: {e}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
