"""Exact integer/rational matrices: fibre-system kernels and stochastic-matrix tools.

Rationals are :class:`fractions.Fraction` (always reduced, positive
denominator). Matrices are plain lists of rows.
"""

from __future__ import annotations

from fractions import Fraction
from math import gcd, lcm
from typing import Any, Sequence

from .graph import DirectedMultigraph, product

Matrix = list[list[Any]]


class KernelError(ArithmeticError):
    """The fibre system does not have the one-dimensional positive kernel it must have."""


class KernelDimensionError(KernelError):
    def __init__(self, dim: int):
        super().__init__(f"kernel dimension is {dim}, expected 1")
        self.dim = dim


class NoPositiveKernelError(KernelError):
    pass


def build_M(base: DirectedMultigraph, b: Sequence[int] | None = None) -> list[list[int]]:
    """M[i][j] = d(i, j) off the diagonal, d(i, i) - b_i on it; d counts edges i -> j.

    ``b`` defaults to the last component of each vertex value, where both
    :meth:`DirectedMultigraph.outdegree_valued` and agent labels keep the outdegree.
    """
    if b is None:
        if base.valuation is None:
            raise ValueError("base has no outdegree valuation")
        b = [v[-1] for v in base.valuation]
    m = base.n
    counts = base.multiplicities()
    M = [[counts[(i, j)] for j in range(1, m + 1)] for i in range(1, m + 1)]
    for i in range(m):
        M[i][i] -= int(b[i])
    return M


def rref(m: Sequence[Sequence[Any]]) -> tuple[Matrix, list[int]]:
    """Reduced row echelon form over Q; returns (matrix, pivot columns)."""
    a = [[Fraction(x) for x in row] for row in m]
    rows, cols = len(a), len(a[0]) if a else 0
    pivots: list[int] = []
    r = 0
    for c in range(cols):
        p = next((i for i in range(r, rows) if a[i][c] != 0), None)
        if p is None:
            continue
        a[r], a[p] = a[p], a[r]
        pv = a[r][c]
        a[r] = [x / pv for x in a[r]]
        for i in range(rows):
            if i != r and a[i][c] != 0:
                f = a[i][c]
                a[i] = [x - f * y for x, y in zip(a[i], a[r])]
        pivots.append(c)
        r += 1
        if r == rows:
            break
    return a, pivots


def nullspace(m: Sequence[Sequence[Any]]) -> list[list[Fraction]]:
    """Basis of the right kernel over Q."""
    a, pivots = rref(m)
    cols = len(m[0])
    free = [c for c in range(cols) if c not in pivots]
    basis = []
    for f in free:
        v = [Fraction(0)] * cols
        v[f] = Fraction(1)
        for row, pc in enumerate(pivots):
            v[pc] = -a[row][f]
        basis.append(v)
    return basis


def _fraction_free_kernel(m: Sequence[Sequence[int]]) -> tuple[int, list[int] | None]:
    """Bareiss elimination over Z; returns (nullity, a kernel vector when nullity is 1)."""
    a = [[int(x) for x in row] for row in m]
    rows, cols = len(a), len(a[0])
    pivots: list[int] = []
    prev = 1
    r = 0
    for c in range(cols):
        p = next((i for i in range(r, rows) if a[i][c] != 0), None)
        if p is None:
            continue
        a[r], a[p] = a[p], a[r]
        for i in range(r + 1, rows):
            for j in range(c + 1, cols):
                a[i][j] = (a[r][c] * a[i][j] - a[i][c] * a[r][j]) // prev
            a[i][c] = 0
        prev = a[r][c]
        pivots.append(c)
        r += 1
    nullity = cols - len(pivots)
    if nullity != 1:
        return nullity, None
    free = next(c for c in range(cols) if c not in pivots)
    # back-substitute with rational arithmetic kept integral by scaling at the end
    x = [Fraction(0)] * cols
    x[free] = Fraction(1)
    for row in range(len(pivots) - 1, -1, -1):
        pc = pivots[row]
        s = sum((a[row][j] * x[j] for j in range(pc + 1, cols)), Fraction(0))
        x[pc] = -s / a[row][pc]
    scale = lcm(*(v.denominator for v in x))
    z = [int(v * scale) for v in x]
    return nullity, z


def normalize_integer_vector(z: Sequence[int]) -> list[int]:
    g = 0
    for v in z:
        g = gcd(g, int(v))
    return [int(v) // g for v in z] if g else list(z)


def kernel_generator(m: Sequence[Sequence[int]]) -> list[int]:
    """The positive, coprime integer generator of a one-dimensional kernel."""
    if not m or any(len(row) != len(m) for row in m):
        raise ValueError("matrix must be square")
    nullity, z = _fraction_free_kernel(m)
    if nullity != 1 or z is None:
        raise KernelDimensionError(nullity)
    z = normalize_integer_vector(z)
    if all(v < 0 for v in z):
        z = [-v for v in z]
    if not all(v > 0 for v in z):
        raise NoPositiveKernelError(f"kernel generator {z} has no positive multiple")
    return z


def check_perron(M: Sequence[Sequence[int]]) -> dict:
    """Checkable conclusion of the Perron-Frobenius argument for a fibre matrix.

    P = M + alpha*I with alpha = 1 - min diagonal must be non-negative with a
    positive diagonal; ker M must be one-dimensional with a positive generator.
    """
    alpha = 1 - min(M[i][i] for i in range(len(M)))
    P = [[M[i][j] + (alpha if i == j else 0) for j in range(len(M))] for i in range(len(M))]
    nonneg = all(x >= 0 for row in P for x in row)
    diag = all(P[i][i] > 0 for i in range(len(M)))
    try:
        z = kernel_generator(M)
        ok, err = True, None
    except KernelError as exc:
        z, ok, err = None, False, str(exc)
    return {"alpha": alpha, "P_nonnegative": nonneg, "P_positive_diagonal": diag,
            "kernel_rank_one_positive": ok, "z": z, "error": err}


# -- stochastic matrices ------------------------------------------------

def matmul(a: Sequence[Sequence[Any]], b: Sequence[Sequence[Any]]) -> Matrix:
    bt = list(zip(*b))
    return [[sum(x * y for x, y in zip(row, col)) for col in bt] for row in a]


def matvec(a: Sequence[Sequence[Any]], v: Sequence[Any]) -> list[Any]:
    return [sum(x * y for x, y in zip(row, v)) for row in a]


def identity(n: int) -> Matrix:
    return [[Fraction(int(i == j)) for j in range(n)] for i in range(n)]


def is_row_stochastic(p: Sequence[Sequence[Any]]) -> bool:
    return all(all(x >= 0 for x in row) and sum(row) == 1 for row in p)


def is_column_stochastic(p: Sequence[Sequence[Any]]) -> bool:
    return is_row_stochastic([list(c) for c in zip(*p)])


def dobrushin(p: Sequence[Sequence[Any]]) -> Fraction:
    """1 - min over row pairs of the overlap sum; 0 for a 1x1 matrix."""
    if not is_row_stochastic(p):
        raise ValueError("matrix is not row-stochastic")
    n = len(p)
    if n == 1:
        return Fraction(0)
    best = None
    for i in range(n):
        for j in range(i + 1, n):
            s = sum(min(x, y) for x, y in zip(p[i], p[j]))
            best = s if best is None else min(best, s)
    return 1 - best


def spread(v: Sequence[Any]) -> Any:
    return max(v) - min(v)


def is_alpha_safe(m: Sequence[Sequence[Any]], alpha: Any) -> bool:
    return all(x >= alpha for row in m for x in row if x > 0)


def associated_graph(a: Sequence[Sequence[Any]]) -> DirectedMultigraph:
    """Edge j -> i whenever A[i][j] > 0."""
    n = len(a)
    return DirectedMultigraph(n, tuple((j + 1, i + 1) for i in range(n) for j in range(n) if a[i][j] > 0))


def backward_product(seq: Sequence[Sequence[Sequence[Any]]], check: bool = True) -> Matrix:
    """A(t') x ... x A(t) for ``seq = [A(t), ..., A(t')]``.

    With ``check`` the product's associated graph is compared with the forward
    product of the associated graphs.
    """
    if not seq:
        raise ValueError("empty product")
    acc = [list(r) for r in seq[0]]
    for a in seq[1:]:
        acc = matmul(a, acc)
    if check:
        g = associated_graph(seq[0])
        for a in seq[1:]:
            g = product(g, associated_graph(a))
        if associated_graph(acc).support() != g.support():
            raise ArithmeticError("associated graph of the product disagrees with the graph product")
    return acc


def pushsum_matrix(g: DirectedMultigraph, outdegrees: Sequence[int] | None = None) -> Matrix:
    """A[i][j] = (edges j -> i) / outdeg(j): the column-stochastic Push-Sum step."""
    n = g.n
    deg = list(outdegrees) if outdegrees is not None else g.out_degrees()
    a = [[Fraction(0)] * n for _ in range(n)]
    for s, t in g.edges:
        a[t - 1][s - 1] += Fraction(1, deg[s - 1])
    return a


# -- JSON --------------------------------------------------------------

def matrix_to_json(m: Sequence[Sequence[Any]]) -> list[list[str]]:
    return [[str(Fraction(x)) for x in row] for row in m]


def matrix_from_json(doc: Sequence[Sequence[Any]]) -> Matrix:
    return [[Fraction(str(x)) for x in row] for row in doc]
