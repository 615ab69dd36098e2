"""Scalar expression DAGs with exact first and second derivatives.

Expressions are immutable nodes built with ordinary Python operators and the
catalog functions below::

    x, y = var(0), var(1)
    e = square(x) - 0.1 * log(x) + signed_square(y)

Evaluation compiles a DAG once into a :class:`Tape` (topological order,
integer op codes) and runs forward/reverse sweeps over caller-owned
:class:`DerivativeWorkspace` buffers, so one tape can be evaluated from
several threads as long as each uses its own workspace.

Hessians use forward-over-reverse accumulation, one tangent sweep per
variable that takes part in a nonlinear interaction. The Hessian sparsity
pattern is derived structurally and does not depend on the point.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Mapping, NamedTuple, Sequence

import numpy as np

from graphipm.errors import DomainError

UNARY_OPS = ("neg", "square", "sqrt", "exp", "log", "sin", "cos", "powi", "signed_square")
BINARY_OPS = ("add", "sub", "mul", "div")

# op codes used on tapes
_CONST, _VAR, _ADD, _SUB, _MUL, _DIV = 0, 1, 2, 3, 4, 5
_NEG, _SQUARE, _SQRT, _EXP, _LOG, _SIN, _COS, _POWI, _SSQ = 6, 7, 8, 9, 10, 11, 12, 13, 14

_CODES = {
    "add": _ADD, "sub": _SUB, "mul": _MUL, "div": _DIV,
    "neg": _NEG, "square": _SQUARE, "sqrt": _SQRT, "exp": _EXP, "log": _LOG,
    "sin": _SIN, "cos": _COS, "powi": _POWI, "signed_square": _SSQ,
}
_LINEAR_UNARY = {_NEG}


@dataclass(frozen=True, eq=False)
class Expr:
    """A node of an expression DAG.

    ``kind`` is one of ``const``, ``var``, ``unary`` or ``binary``. Identity
    semantics (``eq=False``) keep shared subexpressions shared.
    """

    kind: str
    op: str | None = None
    children: tuple["Expr", ...] = ()
    value: float = 0.0
    index: int = -1
    power: int = 0

    def __post_init__(self):
        if self.kind == "unary" and self.op not in UNARY_OPS:
            raise ValueError(f"Unknown unary operator: {self.op}")
        if self.kind == "binary" and self.op not in BINARY_OPS:
            raise ValueError(f"Unknown binary operator: {self.op}")

    # arithmetic sugar
    def __add__(self, other): return _binary("add", self, other)
    def __radd__(self, other): return _binary("add", other, self)
    def __sub__(self, other): return _binary("sub", self, other)
    def __rsub__(self, other): return _binary("sub", other, self)
    def __mul__(self, other): return _binary("mul", self, other)
    def __rmul__(self, other): return _binary("mul", other, self)
    def __truediv__(self, other): return _binary("div", self, other)
    def __rtruediv__(self, other): return _binary("div", other, self)
    def __neg__(self): return Expr("unary", "neg", (self,))

    def __pow__(self, p):
        if isinstance(p, bool) or not isinstance(p, (int, np.integer)):
            raise TypeError("Only integer powers are in the operator catalog")
        return powi(self, int(p))

    def __repr__(self):
        if self.kind == "const":
            return f"Expr(const={self.value!r})"
        if self.kind == "var":
            return f"Expr(var={self.index})"
        return f"Expr({self.op}, {len(self.children)} children)"

    @cached_property
    def tape(self) -> "Tape":
        """Tape addressing variables by their own ids."""
        return Tape(self)

    def variables(self) -> list[int]:
        """Sorted ids of the variables referenced by this DAG."""
        return sorted({node.index for node in topological_order(self) if node.kind == "var"})


ExprLike = Expr | float | int


def as_expr(value: ExprLike) -> Expr:
    if isinstance(value, Expr):
        return value
    if isinstance(value, (int, float, np.integer, np.floating)) and not isinstance(value, bool):
        return Expr("const", value=float(value))
    raise TypeError(f"Cannot use {type(value).__name__} in an expression")


def _binary(op: str, a: ExprLike, b: ExprLike) -> Expr:
    return Expr("binary", op, (as_expr(a), as_expr(b)))


def const(value: float) -> Expr:
    return Expr("const", value=float(value))


def var(index: int) -> Expr:
    return Expr("var", index=int(index))


def _unary(op: str, a: ExprLike, power: int = 0) -> Expr:
    return Expr("unary", op, (as_expr(a),), power=power)


def square(a: ExprLike) -> Expr: return _unary("square", a)
def sqrt(a: ExprLike) -> Expr: return _unary("sqrt", a)
def exp(a: ExprLike) -> Expr: return _unary("exp", a)
def log(a: ExprLike) -> Expr: return _unary("log", a)
def sin(a: ExprLike) -> Expr: return _unary("sin", a)
def cos(a: ExprLike) -> Expr: return _unary("cos", a)
def powi(a: ExprLike, p: int) -> Expr: return _unary("powi", a, int(p))


def signed_square(a: ExprLike) -> Expr:
    """``a * |a|``, the friction term of the pipe momentum equation."""
    return _unary("signed_square", a)


def quicksum(terms: Iterable[ExprLike]) -> Expr:
    """Sum of terms as a balanced tree of ``add`` nodes."""
    items = [as_expr(t) for t in terms]
    if not items:
        return const(0.0)
    while len(items) > 1:
        paired = [items[i] + items[i + 1] for i in range(0, len(items) - 1, 2)]
        if len(items) % 2:
            paired.append(items[-1])
        items = paired
    return items[0]


def topological_order(root: Expr) -> list[Expr]:
    """Children-before-parents order of the distinct nodes of a DAG."""
    order: list[Expr] = []
    seen: set[int] = set()
    stack: list[tuple[Expr, bool]] = [(root, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            order.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for child in reversed(node.children):
            if id(child) not in seen:
                stack.append((child, False))
    return order


class SparseGradient(NamedTuple):
    indices: np.ndarray
    values: np.ndarray


class HessianTriplets(NamedTuple):
    rows: np.ndarray
    cols: np.ndarray
    values: np.ndarray


@dataclass
class DerivativeWorkspace:
    """Caller-owned scratch buffers for tape sweeps."""

    values: list[float] = field(default_factory=list)
    first: list[float] = field(default_factory=list)
    second: list[float] = field(default_factory=list)
    adjoints: list[float] = field(default_factory=list)
    tangents: list[float] = field(default_factory=list)
    second_adjoints: list[float] = field(default_factory=list)
    hessian_map: dict[tuple[int, int], float] = field(default_factory=dict)

    def ensure(self, size: int) -> None:
        if len(self.values) < size:
            grow = size - len(self.values)
            for buf in (self.values, self.first, self.second, self.adjoints,
                        self.tangents, self.second_adjoints):
                buf.extend([0.0] * grow)

    def accumulate(self, i: int, j: int, value: float) -> None:
        key = (i, j) if i >= j else (j, i)
        self.hessian_map[key] = self.hessian_map.get(key, 0.0) + value

    def entry(self, i: int, j: int) -> float:
        key = (i, j) if i >= j else (j, i)
        return self.hessian_map.get(key, 0.0)


class Tape:
    """Flattened DAG in topological order.

    ``remap`` translates variable ids to positions in the point vector (the
    flattened NLP ordering); by default a variable id is its own position.
    """

    def __init__(self, root: Expr, remap: Mapping[int, int] | None = None):
        order = topological_order(root)
        position = {id(node): k for k, node in enumerate(order)}

        flat_of = (lambda i: i) if remap is None else (lambda i: remap[i])
        columns = sorted({flat_of(node.index) for node in order if node.kind == "var"})
        local = {col: p for p, col in enumerate(columns)}

        self.columns = np.asarray(columns, dtype=np.int64)
        self.codes: list[int] = []
        self.left: list[int] = []
        self.right: list[int] = []
        self.params: list[float | int] = []
        for node in order:
            a = position[id(node.children[0])] if node.children else -1
            b = position[id(node.children[1])] if len(node.children) > 1 else -1
            if node.kind == "const":
                self.codes.append(_CONST)
                self.params.append(node.value)
            elif node.kind == "var":
                self.codes.append(_VAR)
                self.params.append(local[flat_of(node.index)])
            else:
                self.codes.append(_CODES[node.op])
                self.params.append(node.power)
            self.left.append(a)
            self.right.append(b)
        self.size = len(order)
        self.hessian_pairs = self._hessian_structure()
        self.hessian_directions = sorted({j for _, j in self.hessian_pairs})

    def _hessian_structure(self) -> list[tuple[int, int]]:
        """Lower-triangle (row >= col) local pairs that may be nonzero."""
        deps: list[frozenset[int]] = []
        pairs: list[frozenset[tuple[int, int]]] = []

        def cross(s1, s2):
            return frozenset((max(i, j), min(i, j)) for i in s1 for j in s2)

        for k, code in enumerate(self.codes):
            a, b = self.left[k], self.right[k]
            if code == _CONST:
                deps.append(frozenset())
                pairs.append(frozenset())
            elif code == _VAR:
                deps.append(frozenset((self.params[k],)))
                pairs.append(frozenset())
            elif code in (_ADD, _SUB):
                deps.append(deps[a] | deps[b])
                pairs.append(pairs[a] | pairs[b])
            elif code == _MUL:
                deps.append(deps[a] | deps[b])
                pairs.append(pairs[a] | pairs[b] | cross(deps[a], deps[b]))
            elif code == _DIV:
                deps.append(deps[a] | deps[b])
                pairs.append(pairs[a] | pairs[b] | cross(deps[a], deps[b]) | cross(deps[b], deps[b]))
            else:
                deps.append(deps[a])
                linear = code in _LINEAR_UNARY or (code == _POWI and self.params[k] in (0, 1))
                pairs.append(pairs[a] if linear else pairs[a] | cross(deps[a], deps[a]))
        return sorted(pairs[-1]) if pairs else []

    # sweeps

    def _forward(self, point: Sequence[float], ws: DerivativeWorkspace, derivatives: bool) -> float:
        xs = [float(point[c]) for c in self.columns]
        ws.ensure(self.size)
        val, d1, d2 = ws.values, ws.first, ws.second
        codes, left, right, params = self.codes, self.left, self.right, self.params
        try:
            for k in range(self.size):
                code = codes[k]
                if code == _CONST:
                    val[k] = params[k]
                    continue
                if code == _VAR:
                    val[k] = xs[params[k]]
                    continue
                u = val[left[k]]
                if code == _ADD:
                    val[k] = u + val[right[k]]
                elif code == _SUB:
                    val[k] = u - val[right[k]]
                elif code == _MUL:
                    val[k] = u * val[right[k]]
                elif code == _DIV:
                    w = val[right[k]]
                    if w == 0.0:
                        raise DomainError("division by zero")
                    val[k] = u / w
                elif code == _NEG:
                    val[k], d1[k], d2[k] = -u, -1.0, 0.0
                elif code == _SQUARE:
                    val[k], d1[k], d2[k] = u * u, 2.0 * u, 2.0
                elif code == _SQRT:
                    if u < 0.0 or (derivatives and u == 0.0):
                        raise DomainError(f"sqrt of {u!r}")
                    r = math.sqrt(u)
                    val[k] = r
                    if derivatives:
                        d1[k], d2[k] = 0.5 / r, -0.25 / (r * u)
                elif code == _EXP:
                    e = math.exp(u)
                    val[k], d1[k], d2[k] = e, e, e
                elif code == _LOG:
                    if u <= 0.0:
                        raise DomainError(f"log of {u!r}")
                    val[k], d1[k], d2[k] = math.log(u), 1.0 / u, -1.0 / (u * u)
                elif code == _SIN:
                    s, c = math.sin(u), math.cos(u)
                    val[k], d1[k], d2[k] = s, c, -s
                elif code == _COS:
                    s, c = math.sin(u), math.cos(u)
                    val[k], d1[k], d2[k] = c, -s, -c
                elif code == _POWI:
                    p = params[k]
                    if u == 0.0 and p < 0:
                        raise DomainError("negative power of zero")
                    val[k] = u ** p
                    d1[k] = p * u ** (p - 1) if p != 0 else 0.0
                    d2[k] = p * (p - 1) * u ** (p - 2) if p not in (0, 1) else 0.0
                else:  # signed square
                    au = abs(u)
                    val[k], d1[k] = u * au, 2.0 * au
                    d2[k] = 2.0 if u > 0.0 else (-2.0 if u < 0.0 else 0.0)
        except (OverflowError, ZeroDivisionError) as exc:
            raise DomainError(str(exc)) from exc
        result = val[self.size - 1]
        if not math.isfinite(result):
            raise DomainError("expression value is not finite")
        return result

    def _reverse(self, ws: DerivativeWorkspace) -> list[float]:
        """Adjoints of every tape node; returns the local gradient."""
        n = self.size
        val, d1, adj = ws.values, ws.first, ws.adjoints
        codes, left, right, params = self.codes, self.left, self.right, self.params
        for k in range(n):
            adj[k] = 0.0
        adj[n - 1] = 1.0
        grad = [0.0] * len(self.columns)
        for k in range(n - 1, -1, -1):
            g = adj[k]
            code = codes[k]
            if g == 0.0 or code == _CONST:
                continue
            if code == _VAR:
                grad[params[k]] += g
                continue
            a = left[k]
            if code == _ADD:
                adj[a] += g
                adj[right[k]] += g
            elif code == _SUB:
                adj[a] += g
                adj[right[k]] -= g
            elif code == _MUL:
                b = right[k]
                adj[a] += g * val[b]
                adj[b] += g * val[a]
            elif code == _DIV:
                b = right[k]
                w = val[b]
                adj[a] += g / w
                adj[b] -= g * val[a] / (w * w)
            else:
                adj[a] += g * d1[k]
        return grad

    def _hessian_column(self, direction: int, ws: DerivativeWorkspace) -> list[float]:
        """Column ``direction`` of the local Hessian (adjoints must be current)."""
        n = self.size
        val, d1, d2 = ws.values, ws.first, ws.second
        adj, tan, adot = ws.adjoints, ws.tangents, ws.second_adjoints
        codes, left, right, params = self.codes, self.left, self.right, self.params
        for k in range(n):
            code = codes[k]
            if code == _CONST:
                tan[k] = 0.0
            elif code == _VAR:
                tan[k] = 1.0 if params[k] == direction else 0.0
            elif code == _ADD:
                tan[k] = tan[left[k]] + tan[right[k]]
            elif code == _SUB:
                tan[k] = tan[left[k]] - tan[right[k]]
            elif code == _MUL:
                a, b = left[k], right[k]
                tan[k] = tan[a] * val[b] + val[a] * tan[b]
            elif code == _DIV:
                a, b = left[k], right[k]
                tan[k] = (tan[a] - val[k] * tan[b]) / val[b]
            else:
                tan[k] = d1[k] * tan[left[k]]
            adot[k] = 0.0
        column = [0.0] * len(self.columns)
        for k in range(n - 1, -1, -1):
            code = codes[k]
            if code == _CONST:
                continue
            g, gd = adj[k], adot[k]
            if code == _VAR:
                column[params[k]] += gd
                continue
            a = left[k]
            if code == _ADD:
                adot[a] += gd
                adot[right[k]] += gd
            elif code == _SUB:
                adot[a] += gd
                adot[right[k]] -= gd
            elif code == _MUL:
                b = right[k]
                adot[a] += gd * val[b] + g * tan[b]
                adot[b] += gd * val[a] + g * tan[a]
            elif code == _DIV:
                b = right[k]
                u, w = val[a], val[b]
                w2 = w * w
                adot[a] += gd / w - g * tan[b] / w2
                adot[b] += -gd * u / w2 + g * (-tan[a] / w2 + 2.0 * u * tan[b] / (w2 * w))
            else:
                adot[a] += gd * d1[k] + g * d2[k] * tan[a]
        return column

    # public API on compiled tapes

    def value(self, point: Sequence[float], ws: DerivativeWorkspace | None = None) -> float:
        return self._forward(point, ws or DerivativeWorkspace(), derivatives=False)

    def gradient(self, point: Sequence[float], ws: DerivativeWorkspace | None = None) -> SparseGradient:
        ws = ws or DerivativeWorkspace()
        self._forward(point, ws, derivatives=True)
        grad = self._reverse(ws)
        return SparseGradient(self.columns.copy(), np.asarray(grad, dtype=float))

    def hessian(self, point: Sequence[float], scale: float = 1.0,
                ws: DerivativeWorkspace | None = None) -> HessianTriplets:
        ws = ws or DerivativeWorkspace()
        pairs = self.hessian_pairs
        rows = np.fromiter((self.columns[i] for i, _ in pairs), dtype=np.int64, count=len(pairs))
        cols = np.fromiter((self.columns[j] for _, j in pairs), dtype=np.int64, count=len(pairs))
        if not pairs:
            return HessianTriplets(rows, cols, np.zeros(0))
        self._forward(point, ws, derivatives=True)
        self._reverse(ws)
        ws.hessian_map.clear()
        wanted: dict[int, list[int]] = {}
        for i, j in pairs:
            wanted.setdefault(j, []).append(i)
        for j in self.hessian_directions:
            column = self._hessian_column(j, ws)
            for i in wanted[j]:
                ws.accumulate(i, j, scale * column[i])
        values = np.fromiter((ws.entry(i, j) for i, j in pairs), dtype=float, count=len(pairs))
        return HessianTriplets(rows, cols, values)


def evaluate(expr: Expr, point: Sequence[float], ws: DerivativeWorkspace | None = None) -> float:
    """Value of ``expr`` at ``point`` (indexed by variable id)."""
    return expr.tape.value(point, ws)


def gradient(expr: Expr, point: Sequence[float], ws: DerivativeWorkspace | None = None) -> SparseGradient:
    """Exact reverse-mode gradient over the variables of ``expr``."""
    return expr.tape.gradient(point, ws)


def hessian(expr: Expr, point: Sequence[float], scale: float = 1.0,
            ws: DerivativeWorkspace | None = None) -> HessianTriplets:
    """Lower-triangle triplets of ``scale * Hessian(expr)``."""
    return expr.tape.hessian(point, scale, ws)
