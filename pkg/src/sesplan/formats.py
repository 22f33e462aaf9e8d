"""Readers and writers for MovingAI maps/scenarios and the JSON formats.

Solution JSON::

    {"agents": [{"id": 0, "path": [[x, y, t], ...]}, ...]}

Delay JSON, either a bare list or an object carrying the timestep at which
the delays strike::

    [{"agent": d, "at_index": c, "delta": n}, ...]
    {"timestep": T, "delays": [...]}
"""

from __future__ import annotations

import json
from pathlib import Path

from .mapf import AgentTask, GridMap, MapfSolution

PASSABLE = frozenset(".GS")
BLOCKED = frozenset("@OTW")


class FormatError(ValueError):
    pass


def parse_map(text: str) -> GridMap:
    lines = [ln.rstrip("\r") for ln in text.splitlines()]
    header: dict[str, str] = {}
    i = 0
    while i < len(lines) and lines[i].strip() != "map":
        parts = lines[i].split()
        if len(parts) == 2:
            header[parts[0].lower()] = parts[1]
        elif parts:
            raise FormatError(f"bad map header line: {lines[i]!r}")
        i += 1
    if i == len(lines):
        raise FormatError("missing 'map' line")
    try:
        height, width = int(header["height"]), int(header["width"])
    except (KeyError, ValueError) as exc:
        raise FormatError("map header needs integer height and width") from exc
    rows = lines[i + 1:i + 1 + height]
    if len(rows) != height or any(len(r) < width for r in rows):
        raise FormatError("map body does not match header dimensions")
    blocked = []
    for r in rows:
        for ch in r[:width]:
            if ch in PASSABLE:
                blocked.append(False)
            elif ch in BLOCKED:
                blocked.append(True)
            else:
                raise FormatError(f"unknown map character {ch!r}")
    return GridMap(width, height, tuple(blocked))


def read_map(path) -> GridMap:
    return parse_map(Path(path).read_text())


def parse_scen(text: str, n_agents: int | None = None) -> list[AgentTask]:
    """Tasks from a ``.scen`` file; columns 5-8 hold start x/y and goal x/y."""
    tasks = []
    for ln in text.splitlines():
        if not ln.strip() or ln.lower().startswith("version"):
            continue
        cols = ln.split("\t")
        if len(cols) < 8:
            raise FormatError(f"scenario line has {len(cols)} columns: {ln!r}")
        try:
            sx, sy, gx, gy = (int(c) for c in cols[4:8])
        except ValueError as exc:
            raise FormatError(f"non-integer coordinate in {ln!r}") from exc
        tasks.append(AgentTask(len(tasks), (sx, sy), (gx, gy)))
        if n_agents is not None and len(tasks) == n_agents:
            break
    if not tasks:
        raise FormatError("scenario contains no agents")
    if n_agents is not None and len(tasks) < n_agents:
        raise FormatError(f"scenario has {len(tasks)} agents, {n_agents} requested")
    return tasks


def read_scen(path, n_agents: int | None = None) -> list[AgentTask]:
    return parse_scen(Path(path).read_text(), n_agents)


def solution_to_json(sol: MapfSolution) -> dict:
    return {
        "agents": [
            {"id": a, "path": [[c[0], c[1], t] for c, t in path]}
            for a, path in enumerate(sol.paths)
        ]
    }


def solution_from_json(data: dict) -> MapfSolution:
    try:
        agents = sorted(data["agents"], key=lambda a: a["id"])
        if [a["id"] for a in agents] != list(range(len(agents))):
            raise FormatError("agent ids must be 0..n-1")
        paths = [[((int(x), int(y)), int(t)) for x, y, t in a["path"]] for a in agents]
    except (KeyError, TypeError, ValueError) as exc:
        raise FormatError(f"malformed solution JSON: {exc}") from exc
    return MapfSolution(tuple(tuple(p) for p in paths))


def dumps(obj) -> str:
    """Stable JSON text used for every file the CLI writes."""
    return json.dumps(obj, sort_keys=True, separators=(",", ":")) + "\n"


def read_solution(path) -> MapfSolution:
    try:
        return solution_from_json(json.loads(Path(path).read_text()))
    except json.JSONDecodeError as exc:
        raise FormatError(str(exc)) from exc


def write_solution(sol: MapfSolution, path):
    Path(path).write_text(dumps(solution_to_json(sol)))


def tasks_from_solution(sol: MapfSolution) -> list[AgentTask]:
    return [AgentTask(a, p[0][0], p[-1][0]) for a, p in enumerate(sol.paths)]
