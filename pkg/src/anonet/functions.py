"""Frequency functions, canonical frequenced vectors and the target-function catalog."""

from __future__ import annotations

import bisect
import math
import re
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache, reduce
from typing import Any, Callable, Iterable, Mapping, Sequence

from .values import Value, format_value, parse_value, value_key

SET_BASED = "set-based"
FREQUENCY_BASED = "frequency-based"
MULTISET_BASED = "multiset-based"
KINDS = (SET_BASED, FREQUENCY_BASED, MULTISET_BASED)

DISCRETE = "discrete"
EUCLIDEAN = "euclidean"


class FrequencyFunction:
    """Finite-support map value -> positive rational, entries summing to 1."""

    __slots__ = ("_items", "_map")

    def __init__(self, support: Mapping[Any, Any]):
        items = []
        for v, p in support.items():
            p = Fraction(p)
            if p < 0:
                raise ValueError(f"negative frequency for {v!r}")
            if p > 0:
                items.append((v, p))
        items.sort(key=lambda kv: value_key(kv[0]))
        if sum(p for _, p in items) != 1:
            raise ValueError("frequencies must sum to 1")
        self._items = tuple(items)
        self._map = dict(items)

    def __getitem__(self, v: Any) -> Fraction:
        return self._map.get(v, Fraction(0))

    def get(self, v: Any, default: Any = Fraction(0)) -> Any:
        return self._map.get(v, default)

    def items(self):
        return self._items

    def support(self) -> tuple:
        return tuple(v for v, _ in self._items)

    def __eq__(self, other) -> bool:
        return isinstance(other, FrequencyFunction) and self._items == other._items

    def __hash__(self) -> int:
        return hash(self._items)

    def __repr__(self) -> str:
        inner = ", ".join(f"{v!r}: {p}" for v, p in self._items)
        return f"FrequencyFunction({{{inner}}})"

    def to_json(self) -> dict:
        return {str(format_value(v)): str(p) for v, p in self._items}


def frequency_of(v: Sequence[Any]) -> FrequencyFunction:
    if not v:
        raise ValueError("empty vector")
    n = len(v)
    return FrequencyFunction({w: Fraction(c, n) for w, c in Counter(v).items()})


def canonical_vector(nu: FrequencyFunction) -> tuple:
    """<nu>: length lcm of denominators, values in sorted order."""
    q = reduce(math.lcm, (p.denominator for _, p in nu.items()), 1)
    out: list[Any] = []
    for w, p in nu.items():
        out += [w] * (p.numerator * q // p.denominator)
    return tuple(out)


def equivalent_in_frequency(v: Sequence[Any], w: Sequence[Any]) -> bool:
    return frequency_of(v) == frequency_of(w)


def quot_sum(pairs: Iterable[tuple[Any, Any]]) -> Fraction:
    pairs = list(pairs)
    if not pairs:
        raise ValueError("empty input")
    if any(w <= 0 for _, w in pairs):
        raise ValueError("weights must be positive")
    return Fraction(sum(Fraction(v) for v, _ in pairs)) / sum(Fraction(w) for _, w in pairs)


# -- Q_N ---------------------------------------------------------------

@lru_cache(maxsize=64)
def rationals_QN(N: int) -> tuple[Fraction, ...]:
    """Sorted {p/q : 0 <= p <= q <= N, q >= 1}."""
    if N < 1:
        raise ValueError("N must be positive")
    return tuple(sorted({Fraction(p, q) for q in range(1, N + 1) for p in range(q + 1)}))


def nearest_in_QN(x: Any, N: int) -> Fraction:
    """Closest member of Q_N to x; a tie goes to the smaller rational."""
    grid = rationals_QN(N)
    xq = Fraction(x)
    i = bisect.bisect_left(grid, xq)
    if i == 0:
        return grid[0]
    if i == len(grid):
        return grid[-1]
    lo, hi = grid[i - 1], grid[i]
    return lo if xq - lo <= hi - xq else hi


def nearest_in_QN_ratio(num: int, den: int, N: int) -> Fraction:
    """nearest_in_QN(num / den, N) without reducing the (possibly huge) ratio."""
    if den <= 0:
        raise ValueError("denominator must be positive")
    grid = rationals_QN(N)
    lo, hi = 0, len(grid)
    while lo < hi:  # first grid point >= num/den
        mid = (lo + hi) // 2
        g = grid[mid]
        if g.numerator * den < num * g.denominator:
            lo = mid + 1
        else:
            hi = mid
    if lo == 0:
        return grid[0]
    if lo == len(grid):
        return grid[-1]
    a, b = grid[lo - 1], grid[lo]
    mid2 = a + b  # tie test: 2x <= a + b
    return a if 2 * num * mid2.denominator <= mid2.numerator * den else b


# -- thresholds --------------------------------------------------------

@dataclass(frozen=True)
class Threshold:
    """A real parameter known exactly (rational) or by a tight enclosure (irrational)."""

    lo: Fraction
    hi: Fraction
    irrational: bool
    label: str

    @classmethod
    def parse(cls, r: Any, digits: int = 60) -> Threshold:
        if isinstance(r, (int, Fraction)):
            return cls(Fraction(r), Fraction(r), False, str(r))
        text = str(r).strip()
        import sympy

        expr = sympy.sympify(re.sub(r"sqrt(\d+)", r"sqrt(\1)", text))
        if expr.is_rational:
            q = Fraction(str(sympy.Rational(expr)))
            return cls(q, q, False, text)
        if not expr.is_real:
            raise ValueError(f"threshold {text!r} is not a real number")
        approx = Fraction(str(sympy.N(expr, digits + 10)))
        eps = Fraction(1, 10**digits)
        return cls(approx - eps, approx + eps, True, text)

    def le(self, q: Fraction) -> bool:
        """self <= q for an exact rational q."""
        if q >= self.hi:
            return True
        if q < self.lo or (self.irrational and q <= self.lo):
            return False
        raise ArithmeticError(f"cannot separate {q} from threshold {self.label}")

    def __float__(self) -> float:
        return float((self.lo + self.hi) / 2)


# -- target functions --------------------------------------------------

@dataclass(frozen=True)
class TargetFunction:
    name: str
    kind: str
    evaluator: Callable[[Sequence[Any]], Any] = field(compare=False)
    metric: str = DISCRETE
    continuous_in_frequency: bool = False
    # optional shortcut evaluating f(<nu>) from a value -> weight mapping
    from_frequencies: Callable[[Mapping[Any, Any]], Any] | None = field(default=None, compare=False)

    def __call__(self, v: Sequence[Any]) -> Any:
        if not v:
            raise ValueError("empty vector")
        return self.evaluator(tuple(v))

    def on_frequencies(self, nu: Mapping[Any, Any] | FrequencyFunction) -> Any:
        """f(<nu>); meaningful for set- and frequency-based functions.

        Plain mappings (e.g. float estimates) need ``from_frequencies``.
        """
        if self.kind == MULTISET_BASED:
            raise ValueError(f"{self.name} is not frequency-based")
        if self.from_frequencies is not None:
            return self.from_frequencies(dict(nu.items()))
        if not isinstance(nu, FrequencyFunction):
            nu = FrequencyFunction(nu)
        return self(canonical_vector(nu))

    def admits(self, kind: str) -> bool:
        """True if this function belongs to class ``kind``."""
        return KINDS.index(self.kind) <= KINDS.index(kind)


def _numeric(v: Sequence[Any]) -> list[Fraction]:
    try:
        return [Fraction(x) for x in v]
    except TypeError as exc:
        raise TypeError("function needs numeric inputs") from exc


def _max(v):
    return max(v, key=value_key)


def _min(v):
    return min(v, key=value_key)


def _average(v):
    xs = _numeric(v)
    return sum(xs) / len(xs)


def _sum(v):
    return sum(_numeric(v), Fraction(0))


def threshold_predicate(omega: Any, r: Any) -> TargetFunction:
    """1 iff the frequency of ``omega`` is at least ``r``."""
    th = r if isinstance(r, Threshold) else Threshold.parse(r)

    def phi(v):
        return int(th.le(frequency_of(v)[omega]))

    return TargetFunction(
        f"threshold:omega={format_value(omega)},r={th.label}",
        FREQUENCY_BASED,
        phi,
        DISCRETE,
        continuous_in_frequency=th.irrational,
        from_frequencies=lambda nu: int(th.le(Fraction(nu.get(omega, 0)))),
    )


def multiplicity_of(omega: Any) -> TargetFunction:
    return TargetFunction(
        f"multiplicity:omega={format_value(omega)}", MULTISET_BASED,
        lambda v: sum(1 for x in v if x == omega), DISCRETE,
    )


def _support(nu):
    return [w for w, p in nu.items() if p > 0]


def _weighted_mean(nu):
    total = sum(nu.values())
    return sum(Fraction(w) * p for w, p in nu.items()) / total


CATALOG: dict[str, TargetFunction] = {
    "max": TargetFunction("max", SET_BASED, _max, DISCRETE, True, lambda nu: _max(_support(nu))),
    "min": TargetFunction("min", SET_BASED, _min, DISCRETE, True, lambda nu: _min(_support(nu))),
    "set": TargetFunction("set", SET_BASED, lambda v: frozenset(v), DISCRETE, True,
                          lambda nu: frozenset(_support(nu))),
    "average": TargetFunction("average", FREQUENCY_BASED, _average, EUCLIDEAN, True, _weighted_mean),
    "frequency": TargetFunction("frequency", FREQUENCY_BASED, frequency_of, DISCRETE, False,
                                lambda nu: FrequencyFunction(nu)),
    "sum": TargetFunction("sum", MULTISET_BASED, _sum, EUCLIDEAN),
    "multiset": TargetFunction(
        "multiset", MULTISET_BASED, lambda v: tuple(sorted(v, key=value_key)), DISCRETE
    ),
}


def parse_function(spec: str) -> TargetFunction:
    """``max``, ``average``, ``threshold:omega=a,r=sqrt2/2``, ``multiplicity:omega=a``..."""
    name, _, rest = spec.partition(":")
    params: dict[str, str] = {}
    if rest:
        for part in rest.split(","):
            key, eq, val = part.partition("=")
            if not eq:
                raise ValueError(f"malformed parameter {part!r} in {spec!r}")
            params[key.strip()] = val.strip()
    if name == "threshold":
        if set(params) != {"omega", "r"}:
            raise ValueError("threshold needs omega and r")
        return threshold_predicate(parse_value(params["omega"]), params["r"])
    if name == "multiplicity":
        if set(params) != {"omega"}:
            raise ValueError("multiplicity needs omega")
        return multiplicity_of(parse_value(params["omega"]))
    if params:
        raise ValueError(f"{name} takes no parameters")
    try:
        return CATALOG[name]
    except KeyError:
        raise ValueError(f"unknown function {spec!r}") from None


# -- metrics -----------------------------------------------------------

def distance(a: Any, b: Any, metric: str) -> Any:
    if metric == DISCRETE:
        return 0 if a == b else 1
    if metric != EUCLIDEAN:
        raise ValueError(f"unknown metric {metric!r}")
    if a is None or b is None:
        return math.inf
    if isinstance(a, FrequencyFunction) or isinstance(b, FrequencyFunction):
        keys = set(a.support()) | set(b.support())
        return math.sqrt(sum(float(a[k] - b[k]) ** 2 for k in keys))
    if isinstance(a, (tuple, list)):
        return math.sqrt(sum(float(x - y) ** 2 for x, y in zip(a, b)))
    return abs(a - b)


def format_output(x: Any) -> Any:
    if isinstance(x, FrequencyFunction):
        return x.to_json()
    return format_value(x)
