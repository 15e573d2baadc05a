"""Executed evidence for the computability tables (static and dynamic)."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Any, Callable

from . import corpus
from .engine import Model, run
from .fibration import lift_state, ring_fibration
from .functions import CATALOG, FrequencyFunction, TargetFunction, parse_function
from .graph import (DirectedMultigraph, bidirectional_ring, diameter, random_dynamic_with_diameter,
                    random_strongly_connected, random_symmetric, star_bidirectional)
from .pushsum import make_frequency_pushsum
from .static_algo import make_static_algorithm

ROWS = ("none", "bound", "n", "leaders")
ROW_TITLES = {"none": "no centralized help", "bound": "a bound over n is known",
              "n": "n is known", "leaders": "one leader"}


@dataclass
class Cell:
    claim: str
    status: str  # pass | fail | open in paper | out of scope ...
    evidence: str = ""

    def text(self) -> str:
        return f"{self.claim}: {self.status}" + (f" ({self.evidence})" if self.evidence else "")


def _static_graphs(model: Model) -> list[DirectedMultigraph]:
    sym = [star_bidirectional(3), bidirectional_ring(4).with_ports(None), random_symmetric(5, 2)]
    if model is Model.SYMMETRIC:
        return sym
    gs = sym + [random_strongly_connected(5, 1), random_strongly_connected(4, 3, self_loops=True)]
    return [g.with_canonical_ports() for g in gs] if model is Model.PORT else gs


def _help_text(row: str, n: int) -> str:
    return {"none": "none", "bound": f"bound={n + 2}", "n": f"n={n}", "leaders": "leaders=1"}[row]


def static_suite(model: Model, row: str, functions: list[TargetFunction]) -> tuple[bool, int]:
    """Run the static algorithm and require f(inputs) at every round from n + D on."""
    runs = 0
    for gi, g in enumerate(_static_graphs(model)):
        n = g.n
        D = diameter(g)
        values = [Fraction((3 * i + gi) % 4) for i in range(n)]
        for f in functions:
            help = "none" if model is Model.BROADCAST else _help_text(row, n)
            alg = make_static_algorithm(f, model, help)
            inputs: list[Any] = values
            if row == "leaders" and model is not Model.BROADCAST:
                inputs = [(v, i == 0) for i, v in enumerate(values)]
            tr = run(alg, model, g, inputs, rounds=n + D + 2)
            want = f(values)
            runs += 1
            if any(x != want for outs in tr.outputs[n + D:] for x in outs):
                return False, runs
    return True, runs


def broadcast_witness(rounds: int = 15) -> bool:
    """R^2 and its lifts R^4, R^6 run identically under simple broadcast."""
    base_inputs = [Fraction(2), Fraction(3)]
    for name in corpus.BROADCAST_CORPUS:
        small = run(corpus.get(name), Model.BROADCAST, bidirectional_ring(2), base_inputs, rounds=rounds)
        for n in (4, 6):
            fib = ring_fibration(n, 2)
            big = run(corpus.get(name), Model.BROADCAST, fib.g, lift_state(fib, base_inputs), rounds=rounds)
            for t in range(rounds + 1):
                if big.states[t] != lift_state(fib, small.states[t]):
                    return False
    return True


def static_matrix() -> dict[str, dict[str, Cell]]:
    set_fs = [CATALOG["max"], CATALOG["set"]]
    freq_fs = [CATALOG["average"], CATALOG["frequency"], parse_function("threshold:omega=1,r=1/3")]
    multi_fs = [CATALOG["sum"], CATALOG["multiset"]]
    witness = broadcast_witness()
    table: dict[str, dict[str, Cell]] = {}
    for row in ROWS:
        cells: dict[str, Cell] = {}
        ok, k = static_suite(Model.BROADCAST, row, set_fs)
        ev = f"{k} runs; frequency-based impossibility witnessed by lifting-lemma trace equality" \
            if witness else f"{k} runs; lifting witness FAILED"
        cells[Model.BROADCAST.value] = Cell("set-based", "pass" if ok and witness else "fail", ev)
        for model in (Model.OUTDEGREE, Model.SYMMETRIC, Model.PORT):
            if row in ("none", "bound"):
                ok, k = static_suite(model, row, freq_fs)
                cells[model.value] = Cell("frequency-based", "pass" if ok else "fail", f"{k} runs")
            else:
                ok, k = static_suite(model, row, multi_fs)
                cells[model.value] = Cell("multiset-based", "pass" if ok else "fail", f"{k} runs")
        table[row] = cells
    return table


def _dynamic_suite(check: Callable[[Any, list, Any], bool]) -> tuple[bool, int]:
    runs = 0
    for n, D, seed in ((3, 1, 0), (4, 2, 1), (5, 2, 2)):
        g = random_dynamic_with_diameter(n, seed, D)
        values = ["a" if i % 3 == 0 else "b" for i in range(n)]
        runs += 1
        if not check(g, values, n):
            return False, runs
    return True, runs


def dynamic_matrix(rounds: int = 250) -> dict[str, dict[str, Cell]]:
    def flood(g, values, n):
        tr = run(corpus.flooding(), Model.BROADCAST, g, values, rounds=3 * n)
        return all(x == frozenset(values) for x in tr.outputs[-1])

    def bound_freq(g, values, n):
        f = CATALOG["frequency"]
        tr = run(make_frequency_pushsum(f, f"bound={n}"), Model.OUTDEGREE, g, values, rounds=rounds)
        want = f(values)
        return all(x == want for outs in tr.outputs[-20:] for x in outs)

    def n_known(g, values, n):
        # frequencies with bound n, scaled by n into multiplicities
        tr = run(make_frequency_pushsum(CATALOG["frequency"], f"bound={n}"), Model.OUTDEGREE, g, values,
                 rounds=rounds)
        want = CATALOG["multiset"](values)
        for x in tr.outputs[-1]:
            if not isinstance(x, FrequencyFunction):
                return False
            vec: list[Any] = []
            for w, p in x.items():
                vec += [w] * int(p * n)
            if tuple(vec) != want:
                return False
        return True

    ok_b, kb = _dynamic_suite(flood)
    ok_f, kf = _dynamic_suite(bound_freq)
    ok_n, kn = _dynamic_suite(n_known)
    od, sym, bc = Model.OUTDEGREE.value, Model.SYMMETRIC.value, Model.BROADCAST.value
    ext = Cell("see external work", "out of scope (proof-only)")
    table = {}
    for row in ROWS:
        table[row] = {bc: Cell("set-based", "pass" if ok_b else "fail", f"flooding, {kb} schedules"),
                      od: Cell("?", "open in paper"), sym: ext}
    table["bound"][od] = Cell("frequency-based", "pass" if ok_f else "fail", f"Push-Sum arrays, {kf} schedules")
    table["n"][od] = Cell("multiset-based", "pass" if ok_n else "fail", f"Push-Sum arrays, {kn} schedules")
    return table


def matrix_report(family: str) -> dict[str, dict[str, Cell]]:
    if family == "static":
        return static_matrix()
    if family == "dynamic":
        return dynamic_matrix()
    raise ValueError("family must be static or dynamic")


def render_markdown(table: dict[str, dict[str, Cell]]) -> str:
    cols = list(next(iter(table.values())))
    lines = ["| | " + " | ".join(cols) + " |", "|---" * (len(cols) + 1) + "|"]
    for row, cells in table.items():
        lines.append(f"| {ROW_TITLES[row]} | " + " | ".join(cells[c].text() for c in cols) + " |")
    return "\n".join(lines)


def all_pass(table: dict[str, dict[str, Cell]]) -> bool:
    return all(c.status != "fail" for cells in table.values() for c in cells.values())
