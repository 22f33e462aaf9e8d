"""Delay-injection simulation: execute a plan, delay agents, replan, measure.

A trial is driven by one algorithm, whose replanned TPGs determine how the
execution unfolds. Any further algorithms listed as audits are run on the
very same replanning roots, so their rows are paired with the driver's and
can be compared replan by replan.
"""

from __future__ import annotations

import csv
import io
import json
import logging
import random
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from statistics import fmean
from typing import Iterable, Sequence

from .errors import InvalidStateError, SearchTimeout, TooManySwitchableError, UnsolvableError
from .formats import read_map, read_scen
from .mapf import AgentTask, GridMap, MapfSolution, Violation, generate_instance, plan_prioritized, validate_solution
from .search import ALGORITHMS, SearchStats, naive_fix_all, solve
from .stpg import DelayEvent, Stpg, construct_stpg
from .tpg import ExecutionState, Tpg, build_tpg, exec_tpg, step_exec

log = logging.getLogger(__name__)

REPLAN_COLUMNS = (
    "map", "n_agents", "scenario", "seed", "algo", "replan_idx", "delta_sum",
    "pre_cost", "post_cost", "explored", "pruned", "runtime_us", "timed_out",
)
SUMMARY_COLUMNS = (
    "map", "n_agents", "scenario", "seed", "algo", "replans", "mean_pre_cost", "mean_post_cost",
    "mean_explored", "mean_pruned", "mean_runtime_us", "final_cost", "collision_free", "timed_out", "error",
)
TIMING_COLUMNS = frozenset({"runtime_us", "mean_runtime_us"})


@dataclass(frozen=True)
class DelayModel:
    p: float
    delta_min: int = 10
    delta_max: int = 20
    seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.p <= 1.0:
            raise ValueError(f"delay probability must lie in [0, 1], got {self.p}")
        if not 1 <= self.delta_min <= self.delta_max:
            raise ValueError("need 1 <= delta_min <= delta_max")


@dataclass
class ReplanRecord:
    replan_idx: int
    timestep: int
    delta_sum: int
    n_switchable: int
    pre_cost: int
    post_cost: int | None
    stats: SearchStats
    runtime_us: int
    timed_out: bool = False


@dataclass
class TrialResult:
    algo: str
    records: list[ReplanRecord] = field(default_factory=list)
    timed_out: bool = False
    skipped: int = 0  # replans the oracle could not take (too many switchable edges)

    @property
    def replans(self) -> int:
        return len(self.records)

    @property
    def costs(self) -> list[tuple[int, int | None]]:
        return [(r.pre_cost, r.post_cost) for r in self.records]

    @property
    def runtimes(self) -> list[int]:
        return [r.runtime_us for r in self.records]

    @property
    def stats(self) -> list[SearchStats]:
        return [r.stats for r in self.records]


@dataclass
class TrialOutcome:
    driver: str
    results: dict[str, TrialResult]
    final_cost: int | None  # realised sum of arrival times; None if the trial stopped
    trajectory: MapfSolution | None
    collisions: tuple[Violation, ...] = ()

    @property
    def timed_out(self) -> bool:
        return self.results[self.driver].timed_out


def _replan(root, algo, deadline, oracle_cap, pre_cost, idx, timestep, delta_sum) -> tuple[ReplanRecord, Tpg | None]:
    t0 = time.perf_counter()
    try:
        res = solve(root, algo, deadline=deadline, oracle_cap=oracle_cap)
    except SearchTimeout as exc:
        us = int((time.perf_counter() - t0) * 1e6)
        stats = exc.stats or SearchStats()
        return ReplanRecord(idx, timestep, delta_sum, len(root.switchable), pre_cost, None, stats, us, True), None
    us = int((time.perf_counter() - t0) * 1e6)
    return ReplanRecord(idx, timestep, delta_sum, len(root.switchable), pre_cost, res.cost, res.stats, us), res.tpg


def run_trial(
    grid: GridMap | None,
    tasks: Sequence[AgentTask],
    sol: MapfSolution,
    model: DelayModel,
    algo: str = "gses",
    *,
    audit: Iterable[str] = (),
    time_limit_s: float = 90.0,
    oracle_cap: int = 20,
    guard_occupied: bool = True,
) -> TrialOutcome:
    """Execute ``sol`` under random delays, replanning with ``algo`` after each delay.

    Every timestep, each unfinished agent that is neither waiting out a
    delay nor just finishing one is delayed with probability ``p`` (agents
    in ascending id); each delayed agent then draws its length. All delays of one timestep are
    handled by a single replan. ``time_limit_s`` bounds the total search
    time of each algorithm within the trial.
    """
    audit = [a for a in audit if a != algo]
    for name in (algo, *audit):
        if name not in ALGORITHMS:
            raise ValueError(f"unknown algorithm {name!r}")
    rng = random.Random(model.seed)
    results = {name: TrialResult(name) for name in (algo, *audit)}
    budget = {name: time_limit_s for name in results}

    g = build_tpg(sol)
    state = ExecutionState.initial(g.layout)
    layout = g.layout
    paths = [[(layout.locations[layout.offsets[a]], 0)] for a in range(layout.n_agents)]
    t = 0
    while not state.finished(g.layout):
        layout = g.layout
        delayed = []
        for a, k in enumerate(state.progress):
            here = layout.offsets[a] + k
            # an agent must make one real move between delays
            if k == layout.last_index(a) or layout.dummy[here] or layout.dummy[here + 1]:
                continue
            if rng.random() < model.p:
                delayed.append(a)
        if delayed:
            events = [DelayEvent(a, state.progress[a], rng.randint(model.delta_min, model.delta_max)) for a in delayed]
            root, state = construct_stpg(g, state, events, guard_occupied=guard_occupied)
            pre_cost = exec_tpg(naive_fix_all(root)).cost
            delta_sum = sum(e.length for e in events)
            idx = results[algo].replans
            chosen = None
            for name, res in results.items():
                if res.timed_out:
                    continue
                try:
                    rec, out = _replan(root, name, time.monotonic() + budget[name], oracle_cap, pre_cost, idx, t, delta_sum)
                except TooManySwitchableError as exc:
                    log.warning("%s skipped replan %d: %s", name, idx, exc)
                    res.skipped += 1
                    if name == algo:
                        raise
                    continue
                budget[name] -= rec.runtime_us / 1e6
                res.records.append(rec)
                if rec.timed_out:
                    res.timed_out = True
                    log.warning("%s timed out at replan %d", name, idx)
                if name == algo:
                    chosen = out
            if chosen is None:
                return TrialOutcome(algo, results, None, None)
            g = chosen
        t += 1
        for v in step_exec(g, state):
            if not g.layout.dummy[v]:
                a, _ = g.layout.agent_index(v)
                paths[a].append((g.layout.locations[v], t))
    traj = MapfSolution(tuple(tuple(p) for p in paths))
    report = validate_solution(grid, tasks, traj)
    return TrialOutcome(algo, results, state.cost, traj, report.violations)


# experiments ---------------------------------------------------------------


def load_config(path) -> dict:
    """Read an experiment config from TOML or JSON (chosen by suffix)."""
    path = Path(path)
    text = path.read_text()
    if path.suffix.lower() == ".json":
        return json.loads(text)
    try:
        import tomllib
    except ModuleNotFoundError:  # Python < 3.11
        import tomli as tomllib
    return tomllib.loads(text)


@dataclass(frozen=True)
class _Job:
    map_name: str
    scenario: str
    n_agents: int
    seed: int
    instance: dict
    base_dir: str
    algos: tuple[str, ...]
    delay: tuple[float, int, int]
    time_limit_s: float
    oracle_cap: int


def _expand(config: dict, base_dir: Path) -> list[_Job]:
    algos = tuple(config.get("algos", ["gses"]))
    if not algos:
        raise ValueError("config lists no algorithms")
    for a in algos:
        if a not in ALGORITHMS:
            raise ValueError(f"unknown algorithm {a!r}")
    d = config.get("delay", {})
    model = DelayModel(float(d.get("p", 0.0)), int(d.get("delta_min", 10)), int(d.get("delta_max", 20)))
    delay = (model.p, model.delta_min, model.delta_max)
    seeds = [int(s) for s in config.get("seeds", [0])]
    instances = config.get("instances")
    if not instances:
        raise ValueError("config lists no instances")
    jobs = []
    for inst in instances:
        agents = inst.get("agents", [2])
        agents = [agents] if isinstance(agents, int) else list(agents)
        if "map" in inst:
            map_name = Path(inst["map"]).name
            scenarios = [Path(s).name for s in ([inst["scen"]] if isinstance(inst.get("scen"), str) else inst.get("scen", []))]
            if not scenarios:
                raise ValueError(f"instance {map_name} has no scenario")
        else:
            w, h = int(inst["width"]), int(inst["height"])
            density = float(inst.get("obstacle_density", 0.0))
            map_name = f"random-{w}x{h}-{density:g}"
            scenarios = [str(k) for k in range(int(inst.get("scenarios", 1)))]
        for n in agents:
            for scen in scenarios:
                for seed in seeds:
                    jobs.append(_Job(map_name, scen, int(n), seed, dict(inst), str(base_dir), algos, delay,
                                     float(config.get("time_limit_s", 90.0)), int(config.get("oracle_cap", 20))))
    return jobs


def _load_instance(job: _Job):
    inst = job.instance
    if "map" not in inst:
        i = generate_instance(int(job.scenario), int(inst["width"]), int(inst["height"]), job.n_agents,
                              float(inst.get("obstacle_density", 0.0)))
        return i.grid, i.tasks, i.solution
    base = Path(job.base_dir)
    grid = read_map(base / inst["map"])
    scen = inst["scen"] if isinstance(inst["scen"], str) else next(s for s in inst["scen"] if Path(s).name == job.scenario)
    tasks = read_scen(base / scen, job.n_agents)
    sol = plan_prioritized(grid, tasks)
    if sol is None:
        raise UnsolvableError(1)
    return grid, tasks, sol


def _run_job(job: _Job) -> tuple[list[dict], list[dict]]:
    key = {"map": job.map_name, "n_agents": job.n_agents, "scenario": job.scenario, "seed": job.seed}
    p, dmin, dmax = job.delay
    try:
        grid, tasks, sol = _load_instance(job)
        out = run_trial(grid, tasks, sol, DelayModel(p, dmin, dmax, job.seed), job.algos[0],
                        audit=job.algos[1:], time_limit_s=job.time_limit_s, oracle_cap=job.oracle_cap)
    except Exception as exc:  # recorded, the experiment goes on
        log.error("trial %s failed: %s", key, exc)
        return [], [dict(key, algo=a, replans=0, error=f"{type(exc).__name__}: {exc}") for a in job.algos]

    rows, summary = [], []
    for name in job.algos:
        res = out.results[name]
        for r in res.records:
            rows.append(dict(
                key, algo=name, replan_idx=r.replan_idx, delta_sum=r.delta_sum, pre_cost=r.pre_cost,
                post_cost="" if r.post_cost is None else r.post_cost, explored=r.stats.explored,
                pruned=r.stats.pruned, runtime_us=r.runtime_us, timed_out=int(r.timed_out),
            ))
        done = [r for r in res.records if r.post_cost is not None]
        mean = lambda xs: f"{fmean(xs):.3f}" if xs else ""  # noqa: E731
        summary.append(dict(
            key, algo=name, replans=res.replans,
            mean_pre_cost=mean([r.pre_cost for r in done]), mean_post_cost=mean([r.post_cost for r in done]),
            mean_explored=mean([r.stats.explored for r in done]), mean_pruned=mean([r.stats.pruned for r in done]),
            mean_runtime_us=mean([r.runtime_us for r in done]),
            final_cost="" if out.final_cost is None else out.final_cost,
            collision_free="" if out.trajectory is None else int(not out.collisions),
            timed_out=int(res.timed_out), error="",
        ))
    return rows, summary


@dataclass
class ExperimentResult:
    rows: list[dict]
    summary: list[dict]

    def aggregate(self) -> list[dict]:
        """Per-algorithm means over all completed replans."""
        out = []
        algos = list(dict.fromkeys(r["algo"] for r in self.summary))
        for a in algos:
            rows = [r for r in self.rows if r["algo"] == a and r["post_cost"] != ""]
            trials = sum(1 for r in self.summary if r["algo"] == a)
            out.append({
                "algo": a,
                "trials": trials,
                "replans": len(rows),
                "mean_explored": fmean(r["explored"] for r in rows) if rows else 0.0,
                "mean_pruned": fmean(r["pruned"] for r in rows) if rows else 0.0,
                "mean_runtime_us": fmean(r["runtime_us"] for r in rows) if rows else 0.0,
                "mean_improvement": fmean(r["pre_cost"] - r["post_cost"] for r in rows) if rows else 0.0,
            })
        return out


def run_experiment(config: dict, *, base_dir=".", jobs: int | None = None) -> ExperimentResult:
    """Run the cross product of instances, agent counts, scenarios and seeds.

    The first entry of ``algos`` drives each trial; the others are audited
    on the same replanning roots. Writes ``out`` / ``summary`` CSVs when
    the config names them (relative to ``base_dir``).
    """
    base = Path(base_dir)
    work = _expand(config, base)
    n_jobs = int(jobs if jobs is not None else config.get("jobs", 1))
    if n_jobs > 1 and len(work) > 1:
        with ProcessPoolExecutor(max_workers=n_jobs) as pool:
            parts = list(pool.map(_run_job, work))
    else:
        parts = [_run_job(j) for j in work]
    result = ExperimentResult([r for rows, _ in parts for r in rows], [s for _, s in parts for s in s])
    if config.get("out"):
        write_csv(base / config["out"], REPLAN_COLUMNS, result.rows)
    if config.get("summary"):
        write_csv(base / config["summary"], SUMMARY_COLUMNS, result.summary)
    return result


def csv_text(columns: Sequence[str], rows: Iterable[dict]) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=list(columns), restval="", lineterminator="\n")
    w.writeheader()
    w.writerows(rows)
    return buf.getvalue()


def write_csv(path, columns: Sequence[str], rows: Iterable[dict]):
    Path(path).write_text(csv_text(columns, rows))


def replan_root(g: Tpg, delays: Sequence[DelayEvent], timestep: int | None = None, *, guard_occupied: bool = True):
    """Replanning root for delays striking while ``g`` executes undelayed.

    With ``timestep`` given, execution is advanced that many iterations;
    otherwise to the first iteration at which every delayed agent sits at
    its stated index. No delays gives a root with nothing switchable.
    Returns ``(root, state, timestep)``.
    """
    state = ExecutionState.initial(g.layout)
    if not delays:
        return Stpg.from_tpg(g), state, 0 if timestep is None else timestep
    t = 0
    while True:
        if timestep is None:
            if all(state.progress[d.agent] == d.current_index for d in delays if d.agent < len(state.progress)):
                break
        elif t == timestep:
            break
        if state.finished(g.layout):
            raise InvalidStateError("execution finished before the delays could strike")
        step_exec(g, state)
        t += 1
    root, state = construct_stpg(g, state, delays, guard_occupied=guard_occupied)
    return root, state, t


def aggregate_lines(result: ExperimentResult) -> list[str]:
    """Whitespace-separated aggregate table, header first."""
    cols = ("algo", "trials", "replans", "mean_explored", "mean_pruned", "mean_runtime_us", "mean_improvement")
    lines = [" ".join(cols)]
    for row in result.aggregate():
        lines.append(" ".join(f"{row[c]:.3f}" if isinstance(row[c], float) else str(row[c]) for c in cols))
    return lines
