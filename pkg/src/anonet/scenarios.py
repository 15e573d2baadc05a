"""JSON scenarios: load, validate, run, and write reports."""

from __future__ import annotations

import csv
import json
import random
from dataclasses import dataclass, field, fields
from fractions import Fraction
from importlib import resources
from pathlib import Path
from typing import Any, Mapping

from . import corpus
from .engine import ExecutionTrace, Model, ModelError, converged, run, validate_model
from .functions import DISCRETE, EUCLIDEAN, format_output, parse_function, quot_sum
from .graph import DirectedMultigraph, DynamicGraph, GraphError, dynamic_diameter, generate, load_any
from .linalg import KernelError
from .pushsum import make_frequency_pushsum, make_pushsum
from .static_algo import VIEWS, Help, ViewState, make_static_algorithm
from .values import parse_value

EXIT_OK, EXIT_FAILED, EXIT_INVALID, EXIT_INVARIANT = 0, 2, 3, 4


class ScenarioError(ValueError):
    """Malformed or inconsistent scenario."""


@dataclass
class Scenario:
    name: str
    model: str
    graph: dict
    inputs: list
    algorithm: Any
    rounds: int
    function: str | None = None
    help: str = "none"
    leaders: list | None = None
    starts: list | None = None
    init: dict | None = None
    metric: str | None = None
    eps: str | None = None
    mode: str = "exact"
    seed: int = 0
    depth_cap: int | None = None
    D: int | None = None
    expect: Any = None
    description: str = ""

    @classmethod
    def from_json(cls, doc: Mapping[str, Any]) -> Scenario:
        known = {f.name for f in fields(cls)}
        unknown = set(doc) - known
        if unknown:
            raise ScenarioError(f"unknown scenario fields: {sorted(unknown)}")
        missing = {"name", "model", "graph", "inputs", "algorithm", "rounds"} - set(doc)
        if missing:
            raise ScenarioError(f"missing scenario fields: {sorted(missing)}")
        s = cls(**doc)
        if s.mode not in ("exact", "float"):
            raise ScenarioError("mode must be exact or float")
        if s.metric not in (None, DISCRETE, EUCLIDEAN):
            raise ScenarioError(f"unknown metric {s.metric!r}")
        if not isinstance(s.rounds, int) or s.rounds < 0:
            raise ScenarioError("rounds must be a non-negative integer")
        return s


def load_scenario(path_or_name: str) -> Scenario:
    p = Path(path_or_name)
    if p.exists():
        doc = json.loads(p.read_text())
    else:
        doc = json.loads(bundled_path(path_or_name).read_text())
    return Scenario.from_json(doc)


def bundled_names() -> list[str]:
    root = resources.files("anonet") / "scenarios"
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".json"))


def bundled_path(name: str):
    path = resources.files("anonet") / "scenarios" / f"{name}.json"
    if not path.is_file():
        raise ScenarioError(f"no scenario file or bundled scenario named {name!r}")
    return path


def build_graph(spec: Mapping[str, Any]) -> DirectedMultigraph | DynamicGraph:
    """Inline graph JSON, or {"generator": kind, "n": n, "seed": s, ...params}."""
    if "generator" in spec:
        params = dict(spec)
        kind = params.pop("generator")
        n = params.pop("n")
        seed = params.pop("seed", 0)
        return generate(kind, n, seed, **params)
    return load_any(spec)


@dataclass
class ScenarioResult:
    name: str
    verdict: str  # stabilized | converged | failed | ran
    round: int | None
    value: Any
    target: Any
    trace: ExecutionTrace = field(repr=False)
    exit_code: int = EXIT_OK

    def summary(self) -> dict:
        return {"name": self.name, "verdict": self.verdict, "round": self.round,
                "value": format_output(self.value), "target": format_output(self.target),
                "exit_code": self.exit_code}


def _garbage_views(n: int, depth: int, values: list, seed: int) -> list[ViewState]:
    """Random well-formed views of the given height with made-up labels."""
    rng = random.Random(seed)
    pool = values + ["garbage"]

    def tree(h):
        label = (rng.choice(pool), rng.random() < 0.3, rng.randint(1, 4))
        if h == 0:
            return VIEWS.intern((label[0], label[1], None))
        return VIEWS.intern(label, [(None, tree(h - 1)) for _ in range(rng.randint(1, 3))])

    return [ViewState(depth, tree(depth), values[i]) for i in range(n)]


def run_scenario(s: Scenario, out_dir: str | Path | None = None) -> ScenarioResult:
    model = Model.parse(s.model)
    g = build_graph(s.graph)
    inputs = [parse_value(x) if not isinstance(x, list) else tuple(parse_value(y) for y in x) for x in s.inputs]
    if len(inputs) != g.n:
        raise ScenarioError(f"{len(inputs)} inputs for {g.n} agents")
    help = Help.parse(s.help)
    exact = s.mode == "exact"
    alg_name = s.algorithm if isinstance(s.algorithm, str) else s.algorithm.get("name")
    params = {} if isinstance(s.algorithm, str) else {k: v for k, v in s.algorithm.items() if k != "name"}
    f = parse_function(s.function) if s.function else None
    values = [x[0] if isinstance(x, tuple) else x for x in inputs]
    agent_inputs: list[Any] = list(inputs)
    if help.kind == "leaders":
        if s.leaders is None or len(s.leaders) != g.n:
            raise ScenarioError("leader help needs one leader flag per agent")
        agent_inputs = list(zip(values, [bool(b) for b in s.leaders]))
    metric = s.metric
    target: Any = None
    init = None
    if alg_name == "static":
        if f is None:
            raise ScenarioError("static algorithm needs a function")
        alg = make_static_algorithm(f, model, help, depth_cap=s.depth_cap)
        target = f(values)
        metric = metric or DISCRETE
        if s.init is not None:
            unknown = set(s.init) - {"garbage_depth", "seed"}
            if unknown:
                raise ScenarioError(f"unknown init fields: {sorted(unknown)}")
            init = _garbage_views(g.n, int(s.init["garbage_depth"]), values, int(s.init.get("seed", s.seed)))
    elif alg_name == "pushsum":
        alg = make_pushsum(params.get("variant", "predivided"), exact)
        pairs = [x if isinstance(x, tuple) else (x, Fraction(1)) for x in inputs]
        target = quot_sum(pairs)
        metric = metric or EUCLIDEAN
    elif alg_name == "frequency-pushsum":
        if f is None:
            raise ScenarioError("frequency-pushsum needs a function")
        alg = make_frequency_pushsum(f, help, params.get("variant", "conserving"), exact)
        target = f(values)
        metric = metric or f.metric
    else:
        alg = corpus.get(alg_name)
        if alg_name == "flooding":
            target = frozenset(values)
        elif alg_name == "min":
            target = min(values)
        metric = metric or DISCRETE
    if params and alg_name not in ("pushsum", "frequency-pushsum"):
        raise ScenarioError(f"{alg_name} takes no parameters")
    validate_model(model, g, s.rounds, s.starts)
    trace = run(alg, model, g, agent_inputs, rounds=s.rounds, starts=s.starts, init_override=init)
    final = trace.outputs[-1][0]
    if target is None:
        res = ScenarioResult(s.name, "ran", None, final, None, trace)
    else:
        eps = Fraction(s.eps) if s.eps is not None else (Fraction(0) if metric == DISCRETE else Fraction(1, 10**6))
        r = converged(trace, target, metric, eps)
        if r is None:
            res = ScenarioResult(s.name, "failed", None, final, target, trace, EXIT_FAILED)
        else:
            res = ScenarioResult(s.name, "stabilized" if metric == DISCRETE else "converged", r, final, target, trace)
    if s.expect is not None and res.verdict != "failed":
        if format_output(res.value) != s.expect and str(format_output(res.value)) != str(s.expect):
            res.verdict, res.exit_code = "failed", EXIT_FAILED
    if out_dir is not None:
        write_reports(res, Path(out_dir))
    return res


def write_reports(res: ScenarioResult, out: Path) -> None:
    out.mkdir(parents=True, exist_ok=True)
    with open(out / f"{res.name}.trace.jsonl", "w") as fh:
        for rec in res.trace.round_records():
            fh.write(json.dumps(rec, default=str) + "\n")
    with open(out / f"{res.name}.summary.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["round", "agents_on_target", "outputs"])
        for t, outs in enumerate(res.trace.outputs):
            hits = sum(1 for x in outs if res.target is not None and x == res.target)
            w.writerow([t, hits, json.dumps([format_output(x) for x in outs], default=str)])
    (out / f"{res.name}.verdict.json").write_text(json.dumps(res.summary(), default=str, indent=2) + "\n")


def scenario_exit_code(exc: BaseException) -> int:
    if isinstance(exc, KernelError):
        return EXIT_INVARIANT
    if isinstance(exc, (ScenarioError, ModelError, GraphError, ValueError, KeyError, TypeError)):
        return EXIT_INVALID
    return EXIT_INVARIANT


def measured_diameter(g: DirectedMultigraph | DynamicGraph, horizon: int = 64) -> int | None:
    return dynamic_diameter(g, horizon)


def describe(s: Scenario) -> str:
    return f"{s.name}: {s.algorithm} on {s.graph.get('generator', 'inline graph')} ({s.model})"

