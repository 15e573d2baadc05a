"""Command line entry point: ``anonet run|matrix|minbase|pushsum|static-compute``."""

from __future__ import annotations

import argparse
import csv
import json
import sys
from fractions import Fraction
from pathlib import Path
from typing import Any, Sequence

from .engine import Model, ModelError, converged, run
from .fibration import minimum_base
from .functions import DISCRETE, format_output, parse_function
from .graph import (DirectedMultigraph, DynamicGraph, GraphError, diameter, dynamic_diameter, generate,
                    graph_to_json, load_any)
from .linalg import KernelError, build_M
from .pushsum import convergence_bound, effective_diameter, make_frequency_pushsum, pushsum_report
from .scenarios import (EXIT_FAILED, EXIT_INVALID, EXIT_INVARIANT, EXIT_OK, ScenarioError, bundled_names,
                        load_scenario, run_scenario, scenario_exit_code)
from .static_algo import Help, make_static_algorithm, solve
from .values import parse_value


def parse_graph_arg(text: str) -> DirectedMultigraph | DynamicGraph:
    """A JSON file, or ``kind:n=5,seed=1,self_loops=true``."""
    p = Path(text)
    if p.exists():
        return load_any(json.loads(p.read_text()))
    kind, _, rest = text.partition(":")
    params: dict[str, Any] = {}
    for part in filter(None, rest.split(",")):
        key, eq, val = part.partition("=")
        if not eq:
            raise GraphError(f"malformed generator parameter {part!r}")
        low = val.strip().lower()
        params[key.strip()] = low == "true" if low in ("true", "false") else (
            int(val) if val.strip().lstrip("-").isdigit() else float(val))
    if "n" not in params:
        raise GraphError(f"{text!r} is neither a file nor a generator spec with n=...")
    n = params.pop("n")
    seed = params.pop("seed", 0)
    return generate(kind, n, seed, **params)


def parse_inputs(text: str) -> list[Any]:
    out: list[Any] = []
    for tok in text.split(","):
        tok = tok.strip()
        if ":" in tok:
            a, b = tok.split(":", 1)
            out.append((parse_value(a), parse_value(b)))
        else:
            out.append(parse_value(tok))
    return out


def _leaders(text: str | None, n: int) -> list[bool] | None:
    if text is None:
        return None
    idx = {int(x) for x in text.split(",") if x.strip()}
    return [i + 1 in idx for i in range(n)]


def cmd_run(args) -> int:
    worst = EXIT_OK
    names = bundled_names() if args.scenario == "all" else [args.scenario]
    for name in names:
        s = load_scenario(name)
        res = run_scenario(s, args.out)
        print(json.dumps(res.summary(), default=str))
        worst = max(worst, res.exit_code)
    return worst


def cmd_matrix(args) -> int:
    from .matrix import all_pass, matrix_report, render_markdown

    table = matrix_report(args.family)
    if args.json:
        print(json.dumps({r: {c: vars(cell) for c, cell in cells.items()} for r, cells in table.items()}, indent=2))
    else:
        print(render_markdown(table))
    return EXIT_OK if all_pass(table) else EXIT_FAILED


def cmd_minbase(args) -> int:
    g = load_any(json.loads(Path(args.graph).read_text()))
    if not isinstance(g, DirectedMultigraph):
        raise GraphError("minbase needs a static graph")
    model = Model.parse(args.model)
    h = g
    if model is Model.OUTDEGREE:
        vals = [(g.value(v) if g.valuation is not None else None, d) for v, d in zip(g.vertices, g.out_degrees())]
        h = g.with_valuation(vals)
    if model is not Model.PORT:
        h = h.with_ports(None)
    base, fib = minimum_base(h)
    doc: dict[str, Any] = {"base": graph_to_json(base), "fibres": [list(f) for f in fib.fibres],
                           "vertex_map": list(fib.vertex_map)}
    if model is not Model.BROADCAST:
        if model is Model.OUTDEGREE:
            doc["M"] = build_M(base, [v[1] for v in base.valuation])
        doc["z"] = list(solve(model, base).z)
    print(json.dumps(doc, default=str, indent=2))
    return EXIT_OK


def cmd_static(args) -> int:
    g = parse_graph_arg(args.graph)
    if not isinstance(g, DirectedMultigraph):
        raise ModelError("the static algorithm needs a static graph")
    model = Model.parse(args.model)
    if model is Model.PORT and g.ports is None:
        g = g.with_canonical_ports()
    f = parse_function(args.function)
    help = Help.parse(args.help_mode)
    inputs = parse_inputs(args.inputs)
    flags = _leaders(args.leaders, g.n)
    agent_inputs = list(zip(inputs, flags)) if help.kind == "leaders" else inputs
    if help.kind == "leaders" and flags is None:
        raise ScenarioError("--leaders is required with leaders help")
    D = diameter(g)
    rounds = args.rounds if args.rounds is not None else g.n + (D or 0) + 2
    trace = run(make_static_algorithm(f, model, help), model, g, agent_inputs, rounds=rounds)
    w = csv.writer(sys.stdout)
    w.writerow(["round"] + [f"agent{i}" for i in g.vertices])
    for t, outs in enumerate(trace.outputs):
        w.writerow([t] + ["" if x is None else str(format_output(x)) for x in outs])
    target = f(inputs)
    r = converged(trace, target, DISCRETE, 0)
    print(json.dumps({"target": format_output(target), "stabilized_at": r, "n_plus_D": g.n + (D or 0)},
                     default=str))
    return EXIT_OK if r is not None else EXIT_FAILED


def cmd_pushsum(args) -> int:
    g = parse_graph_arg(args.dynamic or args.graph)
    inputs = parse_inputs(args.inputs)
    if len(inputs) != g.n:
        raise ScenarioError(f"{len(inputs)} inputs for {g.n} agents")
    starts = [int(x) for x in args.starts.split(",")] if args.starts else None
    eps = Fraction(args.eps)
    D = args.D or dynamic_diameter(g, 256)
    if D is None:
        raise GraphError("could not measure a finite dynamic diameter; pass --D")
    help = Help.parse(args.help_mode)
    scalar = args.function in (None, "average") and help.kind == "none" and starts is None
    if scalar:
        v = [x[0] if isinstance(x, tuple) else x for x in inputs]
        w = [x[1] if isinstance(x, tuple) else 1 for x in inputs]
        rounds = args.max_rounds or convergence_bound(g.n, D, float(eps))
        rep = pushsum_report(g, v, w, eps=eps, rounds=rounds, D=D, exact=args.mode == "exact")
        print(json.dumps(rep.to_json(), indent=2))
        if args.csv:
            with open(args.csv, "w", newline="") as fh:
                cw = csv.writer(fh)
                cw.writerow(["round", "min_x", "max_x", "spread"])
                cw.writerows(rep.csv_rows())
        ok = rep.first_within_eps is not None and rep.mass_conserved and rep.envelopes_monotone
        return EXIT_OK if ok else (EXIT_INVARIANT if not rep.mass_conserved else EXIT_FAILED)
    f = parse_function(args.function or "frequency")
    flags = _leaders(args.leaders, g.n)
    agent_inputs = list(zip(inputs, flags)) if help.kind == "leaders" else inputs
    desc = make_frequency_pushsum(f, help, args.variant, exact=args.mode == "exact")
    Deff = effective_diameter(D, starts) if starts else D
    rounds = args.max_rounds or min(convergence_bound(g.n, Deff, float(eps)), 500)
    trace = run(desc, Model.OUTDEGREE, g, agent_inputs, rounds=rounds, starts=starts)
    target = f(inputs)
    r = converged(trace, target, f.metric, eps if f.metric != DISCRETE else 0)
    print(json.dumps({"target": format_output(target), "final": [format_output(x) for x in trace.outputs[-1]],
                      "first_within_eps": r, "rounds_run": rounds, "dynamic_diameter": Deff}, default=str, indent=2))
    if args.csv:
        with open(args.csv, "w", newline="") as fh:
            cw = csv.writer(fh)
            cw.writerow(["round", "outputs"])
            for t, outs in enumerate(trace.outputs):
                cw.writerow([t, json.dumps([format_output(x) for x in outs], default=str)])
    return EXIT_OK if r is not None else EXIT_FAILED


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="anonet", description="Computation in anonymous networks.")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run a scenario file or bundled scenario ('all' runs every bundled one)")
    r.add_argument("scenario")
    r.add_argument("--out", help="directory for trace, summary and verdict files")
    r.set_defaults(func=cmd_run)

    m = sub.add_parser("matrix", help="executed computability tables")
    m.add_argument("--family", choices=["static", "dynamic"], required=True)
    m.add_argument("--json", action="store_true")
    m.set_defaults(func=cmd_matrix)

    b = sub.add_parser("minbase", help="minimum base of a graph JSON file")
    b.add_argument("graph")
    b.add_argument("--model", default="broadcast")
    b.set_defaults(func=cmd_minbase)

    s = sub.add_parser("static-compute", help="run the view-based static algorithm")
    s.add_argument("--model", required=True)
    s.add_argument("--function", required=True)
    s.add_argument("--help-mode", default="none")
    s.add_argument("--graph", required=True)
    s.add_argument("--inputs", required=True)
    s.add_argument("--leaders", help="comma-separated leader agents (1-based)")
    s.add_argument("--rounds", type=int)
    s.set_defaults(func=cmd_static)

    q = sub.add_parser("pushsum", help="Push-Sum and its frequency arrays")
    q.add_argument("--function")
    q.add_argument("--help-mode", default="none")
    q.add_argument("--mode", choices=["exact", "float"], default="exact")
    q.add_argument("--variant", choices=["conserving", "verbatim"], default="conserving")
    g = q.add_mutually_exclusive_group(required=True)
    g.add_argument("--graph")
    g.add_argument("--dynamic")
    q.add_argument("--inputs", required=True, help="v or v:w per agent")
    q.add_argument("--leaders")
    q.add_argument("--starts")
    q.add_argument("--eps", default="1/1000000")
    q.add_argument("--D", type=int, help="dynamic diameter (measured when omitted)")
    q.add_argument("--max-rounds", type=int)
    q.add_argument("--csv", help="write the per-round table here")
    q.set_defaults(func=cmd_pushsum)
    return p


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except KernelError as exc:
        print(f"invariant breach: {exc}", file=sys.stderr)
        return EXIT_INVARIANT
    except (ScenarioError, ModelError, GraphError, ValueError, KeyError, TypeError, OSError) as exc:
        print(f"invalid: {exc}", file=sys.stderr)
        return scenario_exit_code(exc) if not isinstance(exc, OSError) else EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
