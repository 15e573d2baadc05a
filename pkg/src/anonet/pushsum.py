"""Push-Sum and its frequency-array extension.

Exact mode uses Fractions; float mode uses doubles. Long exact runs go
through the scaled-integer runners below: with L = lcm(1..n) the quantities
L^t * y_i(t) stay integral, so no gcd is ever taken.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import reduce
from typing import Any, Callable, Iterator, Mapping, Sequence

from .engine import AlgorithmDescriptor, ExecutionTrace, Model, run
from .functions import (FREQUENCY_BASED, MULTISET_BASED, FrequencyFunction, TargetFunction,
                        nearest_in_QN, nearest_in_QN_ratio)
from .graph import DirectedMultigraph, DynamicGraph
from .static_algo import Help
from .values import value_key

NOT_READY = None
FLOAT_SLACK = 1e-12


def _num(x: Any, exact: bool) -> Any:
    return Fraction(x) if exact else float(x)


# -- scalar Push-Sum ------------------------------------------------------

@dataclass(frozen=True)
class PushSumState:
    y: Any
    z: Any

    @property
    def x(self) -> Any:
        return self.y / self.z if self.z else NOT_READY


def make_pushsum(variant: str = "predivided", exact: bool = True) -> AlgorithmDescriptor:
    """Scalar Push-Sum; inputs are v or (v, w) with w > 0.

    ``predivided`` ships (y/d, z/d); ``raw`` ships (y, z, d) and the receiver
    divides. Both give identical states.
    """
    if variant not in ("predivided", "raw"):
        raise ValueError(f"unknown variant {variant!r}")

    def initial_state(inp):
        v, w = inp if isinstance(inp, tuple) else (inp, 1)
        v, w = _num(v, exact), _num(w, exact)
        if w <= 0:
            raise ValueError("Push-Sum weights must be positive")
        return PushSumState(v, w)

    if variant == "predivided":
        def sending(q, k):
            return [(q.y / k, q.z / k)] * k

        def transition(q, msgs):
            zero = _num(0, exact)
            return PushSumState(sum((m[0] for m in msgs), zero), sum((m[1] for m in msgs), zero))
    else:
        def sending(q, k):
            return [(q.y, q.z, k)] * k

        def transition(q, msgs):
            zero = _num(0, exact)
            return PushSumState(sum((m[0] / m[2] for m in msgs), zero),
                                sum((m[1] / m[2] for m in msgs), zero))

    return AlgorithmDescriptor(f"pushsum-{variant}", initial_state, sending, transition,
                               lambda q: q.x, frozenset({Model.OUTDEGREE}))


def convergence_bound(n: int, D: int, eps: Any) -> int:
    """Rounds after which every ratio is within eps (times the initial spread) of the limit."""
    if n < 1 or D < 1:
        raise ValueError("n and D must be positive")
    if not 0 < eps < 1:
        raise ValueError("eps must lie in (0, 1)")
    return math.ceil(D * n ** (2 * D) * -math.log(eps))


def effective_diameter(D: int, starts: Sequence[int] | None) -> int:
    """Dynamic-diameter bound of the start-filtered graph."""
    return D + (max(starts) if starts else 0)


def run_with_async_starts(desc: AlgorithmDescriptor, g: DirectedMultigraph | DynamicGraph,
                          inputs: Sequence[Any], starts: Sequence[int], rounds: int) -> ExecutionTrace:
    return run(desc, Model.OUTDEGREE, g, inputs, starts=starts, rounds=rounds)


# -- frequency Push-Sum ---------------------------------------------------

@dataclass(frozen=True)
class FrequencyState:
    y: tuple  # sorted (value, y) pairs
    z: tuple  # sorted (value, z) pairs, same keys as y
    c: Any  # weight of a value this agent has not seen yet
    leader: bool = False

    def arrays(self) -> tuple[dict, dict]:
        return dict(self.y), dict(self.z)

    def x(self) -> dict:
        """x[w] = y[w] / z[w], None while z[w] = 0."""
        return {w: (yw / zw if zw else NOT_READY) for (w, yw), (_, zw) in zip(self.y, self.z)}


def _sorted_items(d: Mapping) -> tuple:
    return tuple(sorted(d.items(), key=lambda kv: value_key(kv[0])))


def make_frequency_pushsum(f: TargetFunction, help: Help | str | None = None, variant: str = "conserving",
                           exact: bool = True) -> AlgorithmDescriptor:
    """Push-Sum on per-value arrays, read out through ``help``.

    ``verbatim`` gives a sender's missing entry the receiver's default weight,
    exactly as the array-extension rule is written; ``conserving`` uses the
    sender's own unseen-value weight, which it carries in its message and
    updates by the same Push-Sum rule. Only the latter conserves weight when
    the per-round graphs are not regular.
    Inputs are plain values, or (value, is_leader) pairs with leader help.
    """
    help = Help.parse(help)
    if variant not in ("conserving", "verbatim"):
        raise ValueError(f"unknown variant {variant!r}")
    if help.kind == "n":
        raise ValueError("exact n is handled through leaders=... or bound=... here")
    allowed = MULTISET_BASED if help.kind == "leaders" else FREQUENCY_BASED
    if not f.admits(allowed):
        raise ValueError(f"{f.name} is {f.kind}; help {help} allows {allowed} only")
    if help.kind == "none" and not f.continuous_in_frequency:
        raise ValueError(f"{f.name} is not continuous in frequency; give a size bound")
    leaders = help.kind == "leaders"
    one, zero = _num(1, exact), _num(0, exact)

    def initial_state(inp):
        value, flag = inp if leaders else (inp, True)
        c = one if flag else zero
        return FrequencyState(((value, one),), ((value, c),), c, bool(flag) and leaders)

    def sending(q, k):
        return [(q.y, q.z, q.c, k)] * k

    def transition(q, msgs):
        inbox = [(dict(y), dict(z), c, d) for y, z, c, d in msgs]
        keys = {w for w, _ in q.y}
        for y, _, _, _ in inbox:
            keys.update(y)
        own_default = q.c if variant == "verbatim" else None
        ys, zs = {}, {}
        for w in keys:
            sy, sz = zero, zero
            for y, z, c, d in inbox:
                if w in y:
                    sy += y[w] / d
                    sz += z[w] / d
                else:
                    sz += (own_default if own_default is not None else c) / d
            ys[w], zs[w] = sy, sz
        c = q.c if variant == "verbatim" else sum((m[2] / m[3] for m in inbox), zero)
        return FrequencyState(_sorted_items(ys), _sorted_items(zs), c, q.leader)

    def output(q):
        return read_frequency_output(q.x(), f, help)

    return AlgorithmDescriptor(f"freq-pushsum-{variant}[{f.name},{help}]", initial_state, sending,
                               transition, output, frozenset({Model.OUTDEGREE}))


def read_frequency_output(x: Mapping[Any, Any], f: TargetFunction, help: Help) -> Any:
    """Output layer: Q_N rounding, normalization, or leader-scaled multiplicities."""
    if not x or any(v is NOT_READY for v in x.values()):
        return NOT_READY
    if help.kind == "bound":
        nu = {w: nearest_in_QN(v, help.value) for w, v in x.items()}
        nu = {w: p for w, p in nu.items() if p > 0}
        if sum(nu.values()) != 1:
            return NOT_READY
        return f.on_frequencies(FrequencyFunction(nu))
    if help.kind == "leaders":
        counts = leader_multiplicities(x, help.value)
        if counts is None or not counts:
            return NOT_READY
        vec: list[Any] = []
        for w in sorted(counts, key=value_key):
            vec += [w] * counts[w]
        return f(vec)
    total = sum(x.values())
    if not total:
        return NOT_READY
    return f.on_frequencies({w: v / total for w, v in x.items() if v})


def leader_multiplicities(x: Mapping[Any, Any], ell: int) -> dict | None:
    """Round ell * x[w] to integers; None unless every estimate is within 1/3 of one."""
    out = {}
    for w, v in x.items():
        est = ell * Fraction(v) if not isinstance(v, float) else ell * v
        m = math.floor(est + Fraction(1, 2)) if not isinstance(est, float) else math.floor(est + 0.5)
        if abs(est - m) >= Fraction(1, 3):
            return None
        if m > 0:
            out[w] = int(m)
    return out


# -- scaled-integer runners -----------------------------------------------

def _at(g: DirectedMultigraph | DynamicGraph) -> Callable[[int], DirectedMultigraph]:
    return (lambda t: g) if isinstance(g, DirectedMultigraph) else g.at


def _common_scale(vals: Sequence[Fraction]) -> tuple[list[int], int]:
    den = reduce(math.lcm, (Fraction(v).denominator for v in vals), 1)
    return [int(Fraction(v) * den) for v in vals], den


def scaled_pushsum(g: DirectedMultigraph | DynamicGraph, v: Sequence[Any], w: Sequence[Any],
                   rounds: int) -> Iterator[tuple[int, list[int], list[int]]]:
    """Yield (t, Y, Z) with y_i(t) = Y_i / S_t and z_i(t) = Z_i / S_t for a common S_t > 0."""
    n = g.n
    Y, dy = _common_scale(v)
    Z, dz = _common_scale(w)
    Y = [y * dz for y in Y]
    Z = [z * dy for z in Z]
    L = reduce(math.lcm, range(1, n + 1), 1)
    at = _at(g)
    yield 0, Y, Z
    for t in range(1, rounds + 1):
        gt = at(t)
        deg = gt.out_degrees()
        mult = [L // d if d else 0 for d in deg]
        nY, nZ = [0] * n, [0] * n
        for s, r in gt.edges:
            nY[r - 1] += Y[s - 1] * mult[s - 1]
            nZ[r - 1] += Z[s - 1] * mult[s - 1]
        Y, Z = nY, nZ
        yield t, Y, Z


def _le_ratio(a: tuple[int, int], b: tuple[int, int]) -> bool:
    """a[0]/a[1] <= b[0]/b[1] for positive denominators."""
    return a[0] * b[1] <= b[0] * a[1]


def _within(Y: int, Z: int, q: Fraction, eps: Fraction) -> bool:
    return abs(q.denominator * Y - q.numerator * Z) * eps.denominator <= eps.numerator * q.denominator * Z


@dataclass
class ConvergenceReport:
    rounds_run: int
    bound_rounds: int | None
    target: Any
    first_within_eps: int | None
    mass_conserved: bool
    envelopes_monotone: bool
    z_bounds_ok: bool | None = None
    min_x: list[float] = field(default_factory=list)
    max_x: list[float] = field(default_factory=list)
    final_x: list[Any] = field(default_factory=list)

    @property
    def spread(self) -> list[float]:
        return [hi - lo for lo, hi in zip(self.min_x, self.max_x)]

    def to_json(self) -> dict:
        return {
            "rounds_run": self.rounds_run,
            "bound_rounds": self.bound_rounds,
            "target": str(self.target),
            "first_within_eps": self.first_within_eps,
            "mass_conserved": self.mass_conserved,
            "envelopes_monotone": self.envelopes_monotone,
            "z_bounds_ok": self.z_bounds_ok,
            "final_x": [str(x) for x in self.final_x],
        }

    def csv_rows(self) -> list[tuple]:
        return [(t, lo, hi, hi - lo) for t, (lo, hi) in enumerate(zip(self.min_x, self.max_x))]


def pushsum_report(g: DirectedMultigraph | DynamicGraph, v: Sequence[Any], w: Sequence[Any] | None = None,
                   *, eps: Any = Fraction(1, 10**6), rounds: int | None = None, D: int | None = None,
                   exact: bool = True, record: bool = True) -> ConvergenceReport:
    """Run Push-Sum and check conservation, monotone envelopes and the eps target."""
    n = g.n
    w = list(w) if w is not None else [1] * n
    if any(Fraction(x) <= 0 for x in w):
        raise ValueError("Push-Sum weights must be positive")
    target = sum(Fraction(x) for x in v) / sum(Fraction(x) for x in w)
    bound = convergence_bound(n, D, float(eps)) if D is not None else None
    if rounds is None:
        if bound is None:
            raise ValueError("give rounds or a dynamic diameter")
        rounds = bound
    if not exact:
        return _float_report(g, v, w, target, eps, rounds, bound, record)
    eps = Fraction(eps)
    L = reduce(math.lcm, range(1, n + 1), 1)
    first = None
    mass_ok = mono = True
    z_ok = True
    prev_sum = None
    prev_hi = prev_lo = None
    lo_list: list[float] = []
    hi_list: list[float] = []
    Y = Z = []
    for t, Y, Z in scaled_pushsum(g, v, w, rounds):
        sy, sz = sum(Y), sum(Z)
        if prev_sum is not None and (sy != L * prev_sum[0] or sz != L * prev_sum[1]):
            mass_ok = False
        prev_sum = (sy, sz)
        if any(z <= 0 for z in Z):
            z_ok = False
            continue
        if D is not None and t >= D and any(z * n**D < sz or z > sz for z in Z):
            z_ok = False
        hi = lo = (Y[0], Z[0])
        for i in range(1, n):
            cur = (Y[i], Z[i])
            if not _le_ratio(cur, hi):
                hi = cur
            if _le_ratio(cur, lo):
                lo = cur
        if prev_hi is not None and (not _le_ratio(hi, prev_hi) or not _le_ratio(prev_lo, lo)):
            mono = False
        prev_hi, prev_lo = hi, lo
        if record:
            lo_list.append(_ratio_float(*lo))
            hi_list.append(_ratio_float(*hi))
        if all(_within(Y[i], Z[i], target, eps) for i in range(n)):
            if first is None:
                first = t
        else:
            first = None
    final = [Fraction(y, z) for y, z in zip(Y, Z)] if n <= 8 and rounds <= 400 else \
        [_ratio_float(y, z) for y, z in zip(Y, Z)]
    return ConvergenceReport(rounds, bound, target, first, mass_ok, mono, z_ok if D else None,
                             lo_list, hi_list, final)


def _ratio_float(a: int, b: int) -> float:
    try:
        return a / b
    except OverflowError:
        return float(Fraction(a, b))


def _float_report(g, v, w, target, eps, rounds, bound, record) -> ConvergenceReport:
    import numpy as np

    n = g.n
    at = _at(g)
    y = np.array([float(Fraction(x)) for x in v])
    z = np.array([float(Fraction(x)) for x in w])
    mass = (y.sum(), z.sum())
    first = None
    mass_ok = mono = True
    prev = None
    lo_list: list[float] = []
    hi_list: list[float] = []
    tol = float(eps)
    for t in range(rounds + 1):
        if t:
            gt = at(t)
            a = np.zeros((n, n))
            deg = gt.out_degrees()
            for s, r in gt.edges:
                a[r - 1, s - 1] += 1.0 / deg[s - 1]
            y, z = a @ y, a @ z
        if abs(y.sum() - mass[0]) > FLOAT_SLACK * max(1.0, abs(mass[0])) * (t + 1) or \
                abs(z.sum() - mass[1]) > FLOAT_SLACK * max(1.0, mass[1]) * (t + 1):
            mass_ok = False
        x = y / z
        lo, hi = float(x.min()), float(x.max())
        if prev is not None and (hi > prev[1] + FLOAT_SLACK or lo < prev[0] - FLOAT_SLACK):
            mono = False
        prev = (lo, hi)
        if record:
            lo_list.append(lo)
            hi_list.append(hi)
        if np.all(np.abs(x - float(target)) <= tol + FLOAT_SLACK):
            if first is None:
                first = t
        else:
            first = None
    return ConvergenceReport(rounds, bound, target, first, mass_ok, mono, None, lo_list, hi_list,
                             [float(a) for a in y / z])


@dataclass
class ScaledFrequencyState:
    Y: dict
    Z: dict
    C: int


def scaled_frequency_pushsum(g: DirectedMultigraph | DynamicGraph, inputs: Sequence[Any], rounds: int,
                             leaders: Sequence[bool] | None = None, variant: str = "conserving"
                             ) -> Iterator[tuple[int, list[ScaledFrequencyState]]]:
    """Scaled-integer twin of the frequency descriptor: the state at round t is the
    descriptor's state multiplied by L^t."""
    if variant not in ("conserving", "verbatim"):
        raise ValueError(f"unknown variant {variant!r}")
    n = g.n
    L = reduce(math.lcm, range(1, n + 1), 1)
    flags = [True] * n if leaders is None else [bool(x) for x in leaders]
    base = [1 if f else 0 for f in flags]
    states = [ScaledFrequencyState({inputs[i]: 1}, {inputs[i]: base[i]}, base[i]) for i in range(n)]
    at = _at(g)
    scale = 1  # L^(t-1) while computing round t
    yield 0, states
    for t in range(1, rounds + 1):
        gt = at(t)
        deg = gt.out_degrees()
        mult = [L // d if d else 0 for d in deg]
        senders: list[list[int]] = [[] for _ in range(n)]
        for s, r in gt.edges:
            senders[r - 1].append(s - 1)
        new = []
        for j in range(n):
            keys = set(states[j].Y)
            for s in senders[j]:
                keys.update(states[s].Y)
            Y, Z = {}, {}
            for w in keys:
                sy = sz = 0
                for s in senders[j]:
                    st = states[s]
                    if w in st.Y:
                        sy += st.Y[w] * mult[s]
                        sz += st.Z[w] * mult[s]
                    elif variant == "verbatim":
                        sz += base[j] * scale * mult[s]
                    else:
                        sz += st.C * mult[s]
                Y[w], Z[w] = sy, sz
            C = base[j] * scale * L if variant == "verbatim" else sum(states[s].C * mult[s] for s in senders[j])
            new.append(ScaledFrequencyState(Y, Z, C))
        states = new
        scale *= L
        yield t, states


def rounded_frequencies(st: ScaledFrequencyState, N: int) -> dict | None:
    """Q_N-rounded x[w] for a scaled state; None while some z[w] is zero."""
    out = {}
    for w, y in st.Y.items():
        z = st.Z[w]
        if z <= 0:
            return None
        p = nearest_in_QN_ratio(y, z, N)
        if p:
            out[w] = p
    return out


def scaled_leader_counts(st: ScaledFrequencyState, ell: int) -> dict | None:
    """ell * x[w] rounded to integers, None unless all are within 1/3 of one."""
    out = {}
    for w, y in st.Y.items():
        z = st.Z[w]
        if z <= 0:
            return None
        num = ell * y  # estimate = num / z
        m = (2 * num + z) // (2 * z)
        if 3 * abs(num - m * z) >= z:
            return None
        if m:
            out[w] = m
    return out
