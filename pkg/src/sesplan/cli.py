"""Command-line entry point.

Exit codes:
  0  success (replan prints pre_cost -1 when keeping every original order deadlocks)
  1  validation failed / algorithms disagree
  2  unreadable or malformed input
  3  instance could not be solved
  4  search timed out
  5  search found no solution
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from pathlib import Path

from . import _kernels
from .errors import DeadlockError, InvalidStateError, NoSolutionError, SearchTimeout, TooManySwitchableError, UnsolvableError
from .formats import FormatError, dumps, read_map, read_scen, read_solution, solution_to_json, tasks_from_solution
from .mapf import generate_instance, plan_prioritized, validate_solution
from .search import ALGORITHMS, naive_fix_all, solve
from .sim import aggregate_lines, load_config, replan_root, run_experiment
from .stpg import parse_delays, stpg_from_json
from .tpg import build_tpg, exec_tpg, tpg_to_json

EXIT_OK, EXIT_INVALID, EXIT_INPUT, EXIT_UNSOLVABLE, EXIT_TIMEOUT, EXIT_NO_SOLUTION = range(6)

log = logging.getLogger("sesplan")


class InputError(Exception):
    """Bad or missing input; maps to exit code 2."""


def _emit(text: str, out: str | None):
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _read_json(path: str, what: str):
    try:
        return json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise InputError(f"cannot read {what} {path}: {exc}") from exc


def _require(args, *names):
    missing = [f"--{n.replace('_', '-')}" for n in names if getattr(args, n) is None]
    if missing:
        raise InputError(f"{args.command} requires {', '.join(missing)}")


# subcommands ---------------------------------------------------------------


def cmd_plan(args) -> int:
    if args.map is not None:
        _require(args, "scen")
        grid = read_map(args.map)
        tasks = read_scen(args.scen, args.agents)
        sol = plan_prioritized(grid, tasks)
        if sol is None:
            raise UnsolvableError(1)
    else:
        _require(args, "width", "height", "agents")
        sol = generate_instance(args.seed, args.width, args.height, args.agents, args.obstacle_density).solution
    _emit(dumps(solution_to_json(sol)), args.out)
    return EXIT_OK


def cmd_validate(args) -> int:
    _require(args, "solution")
    sol = read_solution(args.solution)
    grid = read_map(args.map) if args.map else None
    tasks = read_scen(args.scen, sol.n_agents) if args.scen else tasks_from_solution(sol)
    report = validate_solution(grid, tasks, sol)
    if report.ok:
        print("ok")
        return EXIT_OK
    for v in report.violations:
        print(json.dumps({"kind": v.kind, "agents": list(v.agents), "cell": v.cell and list(v.cell),
                          "timestep": v.timestep, "detail": v.detail}, sort_keys=True))
    return EXIT_INVALID


def _root(args):
    """Replanning root from ``--stpg`` or from ``--solution`` plus ``--delays``."""
    if args.stpg is not None:
        try:
            return stpg_from_json(_read_json(args.stpg, "stpg"))
        except (KeyError, TypeError, ValueError, IndexError) as exc:
            raise InputError(f"malformed stpg: {exc}") from exc
    _require(args, "solution", "delays")
    sol = read_solution(args.solution)
    try:
        timestep, delays = parse_delays(_read_json(args.delays, "delays"))
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError(f"malformed delays: {exc}") from exc
    root, _, t = replan_root(build_tpg(sol), delays, timestep)
    log.info("delays strike at timestep %d; %d switchable edges", t, len(root.switchable))
    return root


def _trace_sink(args):
    if args.verbose < 1:
        return None
    return lambda record: print(json.dumps(record, sort_keys=True), file=sys.stderr)


def cmd_replan(args) -> int:
    root = _root(args)
    try:
        pre = exec_tpg(naive_fix_all(root)).cost
    except DeadlockError:  # hand-built roots need not keep the original order deadlock-free
        pre = -1
    t0 = time.perf_counter()
    res = solve(root, args.algo, deadline=time.monotonic() + args.time_limit_s,
                oracle_cap=args.oracle_cap, trace=_trace_sink(args))
    us = int((time.perf_counter() - t0) * 1e6)
    print(pre, res.cost, res.stats.explored, res.stats.pruned, us)
    if args.out:
        layout = root.layout
        pair = lambda v: list(layout.agent_index(v))  # noqa: E731
        doc = {
            "algo": args.algo,
            "cost": res.cost,
            "decisions": [{"edge": [pair(d.edge[0]), pair(d.edge[1])], "action": d.action,
                           "added": [pair(d.added[0]), pair(d.added[1])]} for d in res.decisions],
            "tpg": tpg_to_json(res.tpg),
        }
        Path(args.out).write_text(dumps(doc))
    return EXIT_OK


def cmd_oracle(args) -> int:
    """Brute-force optimum next to both searches; exit 1 if any differs."""
    root = _root(args)
    deadline = time.monotonic() + args.time_limit_s
    costs = {a: solve(root, a, deadline=deadline, oracle_cap=args.oracle_cap).cost for a in ("oracle", "eses", "gses")}
    print(len(root.switchable), costs["oracle"], costs["eses"], costs["gses"])
    return EXIT_OK if len(set(costs.values())) == 1 else EXIT_INVALID


def cmd_simulate(args) -> int:
    _require(args, "config")
    try:
        config = load_config(args.config)
    except (OSError, ValueError) as exc:
        raise InputError(f"cannot read config {args.config}: {exc}") from exc
    if args.seed is not None:
        config["seeds"] = [args.seed]
    if args.algo is not None:
        config["algos"] = [args.algo] + [a for a in config.get("algos", []) if a != args.algo]
    if args.time_limit_s is not None:
        config["time_limit_s"] = args.time_limit_s
    if args.oracle_cap is not None:
        config["oracle_cap"] = args.oracle_cap
    base = Path(args.config).resolve().parent
    if args.out is not None:
        config["out"] = str(Path(args.out).resolve())
    try:
        result = run_experiment(config, base_dir=base, jobs=args.jobs)
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError(f"bad config: {exc}") from exc
    for line in aggregate_lines(result):
        print(line)
    return EXIT_OK


# parser --------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="sesplan", description="Replan passing orders of delayed MAPF executions.")
    p.add_argument("-v", "--verbose", action="count", default=0, help="log to stderr; repeat for more")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("-v", "--verbose", action="count", default=argparse.SUPPRESS)
        sp.add_argument("--out", help="output file (default stdout)")

    sp = sub.add_parser("plan", help="plan a solution for a scenario or a random instance")
    common(sp)
    sp.add_argument("--map")
    sp.add_argument("--scen")
    sp.add_argument("--agents", type=int)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--width", type=int)
    sp.add_argument("--height", type=int)
    sp.add_argument("--obstacle-density", type=float, default=0.0)
    sp.set_defaults(func=cmd_plan)

    sp = sub.add_parser("validate", help="check a solution for collisions and malformed paths")
    common(sp)
    sp.add_argument("--solution")
    sp.add_argument("--map")
    sp.add_argument("--scen")
    sp.set_defaults(func=cmd_validate)

    for name, func, helptext in (
        ("replan", cmd_replan, "replan the passing orders after delays"),
        ("oracle", cmd_oracle, "compare both searches with brute force on one replanning root"),
    ):
        sp = sub.add_parser(name, help=helptext)
        common(sp)
        sp.add_argument("--solution")
        sp.add_argument("--delays")
        sp.add_argument("--stpg", help="switchable TPG JSON to use as the root instead of solution+delays")
        if name == "replan":
            sp.add_argument("--algo", choices=ALGORITHMS, default="gses")
        sp.add_argument("--time-limit-s", type=float, default=90.0)
        sp.add_argument("--oracle-cap", type=int, default=20)
        sp.set_defaults(func=func)

    sp = sub.add_parser("simulate", help="run a delay-injection experiment from a TOML/JSON config")
    common(sp)
    sp.add_argument("--config")
    sp.add_argument("--algo", choices=ALGORITHMS, help="driver algorithm (overrides the config)")
    sp.add_argument("--seed", type=int, help="single delay seed (overrides the config)")
    sp.add_argument("--jobs", type=int)
    sp.add_argument("--time-limit-s", type=float)
    sp.add_argument("--oracle-cap", type=int)
    sp.set_defaults(func=cmd_simulate)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        stream=sys.stderr,
        level=logging.WARNING if args.verbose == 0 else logging.INFO if args.verbose == 1 else logging.DEBUG,
        format="%(levelname)s %(name)s: %(message)s",
    )
    log.debug("kernel backend: %s", _kernels.BACKEND)
    try:
        return args.func(args)
    except (InputError, FormatError, InvalidStateError, TooManySwitchableError, DeadlockError) as exc:
        log.error("%s", exc)
        return EXIT_INPUT
    except (OSError, json.JSONDecodeError, KeyError, ValueError) as exc:
        log.error("bad input: %s", exc)
        return EXIT_INPUT
    except UnsolvableError as exc:
        log.error("%s", exc)
        return EXIT_UNSOLVABLE
    except SearchTimeout as exc:
        log.error("%s", exc)
        return EXIT_TIMEOUT
    except NoSolutionError as exc:
        log.error("%s", exc)
        return EXIT_NO_SOLUTION


if __name__ == "__main__":
    sys.exit(main())
