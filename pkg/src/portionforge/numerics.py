"""Small dense numerical kernels: exact linear arithmetic, max-flow, simplex, grid search.

Everything here is deliberately in-house and deterministic.  Problem sizes are
tiny (a handful of agents and alternatives), so bit-exact reproducibility of
audits and proof checks matters more than speed.  Exact work uses
``fractions.Fraction``; float work uses plain dense numpy.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Sequence

import numpy as np

# Exact rational scalar. Canonical form (gcd 1, positive denominator) and exact
# closure under +,-,*,/ come with the stdlib type.
Rational = Fraction

__all__ = [
    "Rational",
    "LinearInequality",
    "fourier_motzkin_feasible",
    "fourier_motzkin_witness",
    "lp_feasible",
    "lp_minimize",
    "FlowNetwork",
    "FlowResult",
    "max_flow",
    "grid_points",
    "grid_argmax",
]


# ------------------------------------------------------------------
# Exact linear inequalities and Fourier-Motzkin elimination
# ------------------------------------------------------------------

@dataclass(frozen=True)
class LinearInequality:
    """``sum(coeffs[k] * x[k]) <= rhs`` (or ``<`` when ``strict``)."""

    coeffs: tuple[Fraction, ...]
    rhs: Fraction
    strict: bool = False

    @staticmethod
    def of(coeffs: Sequence, rhs, strict: bool = False) -> "LinearInequality":
        return LinearInequality(
            tuple(Fraction(c) for c in coeffs), Fraction(rhs), strict
        )

    def negated(self) -> "LinearInequality":
        # complement of {a.x <= r} is {-a.x < -r}; strictness flips
        return LinearInequality(
            tuple(-c for c in self.coeffs), -self.rhs, not self.strict
        )


def _combine(pos: LinearInequality, neg: LinearInequality, k: int) -> LinearInequality:
    """Eliminate variable k from a positive-coefficient and a negative-coefficient row."""
    lam = -neg.coeffs[k]
    mu = pos.coeffs[k]
    coeffs = tuple(
        lam * a + mu * b for a, b in zip(pos.coeffs, neg.coeffs)
    )
    return LinearInequality(coeffs, lam * pos.rhs + mu * neg.rhs, pos.strict or neg.strict)


def _normalize(ineq: LinearInequality) -> LinearInequality:
    for c in ineq.coeffs:
        if c != 0:
            scale = abs(c)
            return LinearInequality(
                tuple(x / scale for x in ineq.coeffs), ineq.rhs / scale, ineq.strict
            )
    return ineq


def _prune(ineqs: Iterable[LinearInequality]) -> list[LinearInequality]:
    """Drop exact duplicates, keeping the tighter of two identical-direction rows."""
    best: dict[tuple, tuple[Fraction, bool]] = {}
    for ineq in ineqs:
        norm = _normalize(ineq)
        key = norm.coeffs
        rhs, strict = norm.rhs, norm.strict
        if key in best:
            orhs, ostrict = best[key]
            if rhs > orhs or (rhs == orhs and ostrict):
                continue
        best[key] = (rhs, strict)
    return [LinearInequality(k, r, s) for k, (r, s) in best.items()]


def _eliminate(ineqs: list[LinearInequality], k: int) -> list[LinearInequality] | None:
    """One Fourier-Motzkin step. Returns None on an immediate constant contradiction."""
    zero, pos, neg = [], [], []
    for ineq in ineqs:
        c = ineq.coeffs[k]
        if c == 0:
            zero.append(ineq)
        elif c > 0:
            pos.append(ineq)
        else:
            neg.append(ineq)
    out = zero + [_combine(p, n, k) for p in pos for n in neg]
    for ineq in out:
        if all(c == 0 for c in ineq.coeffs):
            if ineq.rhs < 0 or (ineq.strict and ineq.rhs == 0):
                return None
    return _prune(out)


def fourier_motzkin_feasible(ineqs: Sequence[LinearInequality], nvars: int) -> bool:
    """Exact feasibility of a system of strict/weak linear inequalities."""
    system = _prune(ineqs)
    for k in range(nvars - 1, -1, -1):
        nxt = _eliminate(system, k)
        if nxt is None:
            return False
        system = nxt
    for ineq in system:
        if ineq.rhs < 0 or (ineq.strict and ineq.rhs == 0):
            return False
    return True


def fourier_motzkin_witness(
    ineqs: Sequence[LinearInequality], nvars: int
) -> tuple[Fraction, ...] | None:
    """Exact feasible point, or None. Back-substitutes through the elimination chain."""
    levels: list[list[LinearInequality]] = [_prune(ineqs)]
    for k in range(nvars - 1, 0, -1):
        nxt = _eliminate(levels[-1], k)
        if nxt is None:
            return None
        levels.append(nxt)

    point: list[Fraction] = []
    for k in range(nvars):
        system = levels[nvars - 1 - k]
        lo: Fraction | None = None
        lo_strict = False
        hi: Fraction | None = None
        hi_strict = False
        for ineq in system:
            c = ineq.coeffs[k]
            if c == 0:
                rest = ineq.rhs - sum(
                    ineq.coeffs[j] * point[j] for j in range(k)
                )
                if rest < 0 or (ineq.strict and rest == 0):
                    return None
                continue
            bound = (
                ineq.rhs - sum(ineq.coeffs[j] * point[j] for j in range(k))
            ) / c
            if c > 0:
                if hi is None or bound < hi or (bound == hi and ineq.strict):
                    hi, hi_strict = bound, ineq.strict
            else:
                if lo is None or bound > lo or (bound == lo and ineq.strict):
                    lo, lo_strict = bound, ineq.strict
        if lo is None and hi is None:
            point.append(Fraction(0))
        elif lo is None:
            point.append(hi - 1)
        elif hi is None:
            point.append(lo + 1)
        else:
            if lo > hi or (lo == hi and (lo_strict or hi_strict)):
                return None
            point.append(lo if lo == hi else (lo + hi) / 2)
    return tuple(point)


# ------------------------------------------------------------------
# Linear programming (dense two-phase simplex, Bland's rule)
# ------------------------------------------------------------------

class LPError(ValueError):
    pass


def _pivot(T: np.ndarray, basis: list[int], row: int, col: int) -> None:
    T[row] /= T[row, col]
    for r in range(T.shape[0]):
        if r != row and T[r, col] != 0.0:
            T[r] -= T[r, col] * T[row]
    basis[row] = col


def _bland_solve(T: np.ndarray, basis: list[int], ncols: int, tol: float) -> None:
    """Run simplex iterations on tableau T (last row = reduced costs, last col = rhs)."""
    m = T.shape[0] - 1
    while True:
        col = -1
        for j in range(ncols):
            if T[m, j] < -tol:
                col = j
                break
        if col < 0:
            return
        row, best, best_var = -1, math.inf, -1
        for r in range(m):
            if T[r, col] > tol:
                ratio = T[r, -1] / T[r, col]
                if ratio < best - 1e-12 or (
                    abs(ratio - best) <= 1e-12 and basis[r] < best_var
                ):
                    row, best, best_var = r, ratio, basis[r]
        if row < 0:
            raise LPError("unbounded linear program")
        _pivot(T, basis, row, col)


@dataclass
class LPResult:
    status: str                      # "optimal" | "infeasible"
    x: np.ndarray | None
    objective: float | None
    certificate: np.ndarray | None   # Farkas multipliers on infeasibility


def lp_minimize(
    c: Sequence[float],
    A_ub: Sequence[Sequence[float]] | None = None,
    b_ub: Sequence[float] | None = None,
    A_eq: Sequence[Sequence[float]] | None = None,
    b_eq: Sequence[float] | None = None,
    tol: float = 1e-9,
) -> LPResult:
    """Minimize c.x subject to A_ub x <= b_ub, A_eq x = b_eq, x >= 0."""
    c = np.asarray(c, dtype=float)
    n = c.size
    rows: list[np.ndarray] = []
    rhs: list[float] = []
    n_ub = 0
    if A_ub is not None:
        A_ub = np.asarray(A_ub, dtype=float).reshape(-1, n)
        n_ub = A_ub.shape[0]
        for i in range(n_ub):
            rows.append(A_ub[i])
            rhs.append(float(b_ub[i]))
    if A_eq is not None:
        A_eq = np.asarray(A_eq, dtype=float).reshape(-1, n)
        for i in range(A_eq.shape[0]):
            rows.append(A_eq[i])
            rhs.append(float(b_eq[i]))
    m = len(rows)
    A = np.zeros((m, n + n_ub))
    b = np.array(rhs)
    for i, r in enumerate(rows):
        A[i, :n] = r
    for i in range(n_ub):
        A[i, n + i] = 1.0

    # normalize b >= 0 so the artificial basis is feasible
    flip = b < 0
    A[flip] *= -1.0
    b[flip] *= -1.0

    total = n + n_ub
    T = np.zeros((m + 1, total + m + 1))
    T[:m, :total] = A
    T[:m, total : total + m] = np.eye(m)
    T[:m, -1] = b
    basis = list(range(total, total + m))
    # phase-1 objective: minimize sum of artificials
    T[m, :] = -T[:m, :].sum(axis=0)
    T[m, total : total + m] = 0.0

    _bland_solve(T, basis, total, tol)
    if T[m, -1] < -tol:
        # infeasible: simplex multipliers from the artificial columns certify it
        cb = np.array([1.0 if v >= total else 0.0 for v in basis])
        pi = cb @ T[:m, total : total + m]
        pi[flip] *= -1.0
        return LPResult("infeasible", None, None, pi)

    # drive leftover artificials out of the basis where possible
    for r in range(m):
        if basis[r] >= total and abs(T[r, -1]) <= tol:
            for j in range(total):
                if abs(T[r, j]) > tol:
                    _pivot(T, basis, r, j)
                    break

    # phase 2
    T[m, :] = 0.0
    T[m, :n] = c
    for r in range(m):
        if basis[r] < total:
            T[m, :] -= T[m, basis[r]] * T[r, :]
    _bland_solve(T, basis, total, tol)

    x = np.zeros(total)
    for r in range(m):
        if basis[r] < total:
            x[basis[r]] = T[r, -1]
    return LPResult("optimal", x[:n], float(c @ x[:n]), None)


def lp_feasible(
    ineqs: Sequence[LinearInequality],
    nvars: int,
    mode: str = "exact",
) -> tuple[bool, tuple[Fraction, ...] | np.ndarray | None]:
    """Feasibility of a linear system. Exact mode: Fourier-Motzkin over rationals.

    Returns (feasible, point) where point is a witness on success; in float mode
    an infeasible system returns (False, farkas_multipliers) instead.
    Exact mode is guarded to small systems (<= 6 effective variables).
    """
    if mode == "exact":
        if nvars > 6:
            raise LPError("exact mode supports at most 6 variables")
        return (lambda w: (w is not None, w))(fourier_motzkin_witness(ineqs, nvars))
    if mode != "float":
        raise ValueError(f"unknown mode {mode!r}")
    # float mode: x unrestricted in sign, so split x = x+ - x-
    A = np.array(
        [[float(c) for c in ineq.coeffs] for ineq in ineqs], dtype=float
    ).reshape(-1, nvars)
    b = np.array([float(ineq.rhs) for ineq in ineqs])
    res = lp_minimize(
        np.zeros(2 * nvars), A_ub=np.hstack([A, -A]), b_ub=b
    )
    if res.status == "infeasible":
        return False, res.certificate
    x = res.x[:nvars] - res.x[nvars:]
    return True, x


# ------------------------------------------------------------------
# Max flow (Edmonds-Karp) with min-cut extraction
# ------------------------------------------------------------------

@dataclass
class FlowNetwork:
    """Directed capacitated graph on nodes 0..n_nodes-1."""

    n_nodes: int
    source: int
    sink: int
    edges: list[tuple[int, int, object]] = field(default_factory=list)

    def add_edge(self, u: int, v: int, capacity) -> None:
        if capacity < 0:
            raise ValueError("capacities must be nonnegative")
        self.edges.append((u, v, capacity))


@dataclass
class FlowResult:
    value: object
    flows: list[object]          # aligned with network.edges
    source_side: set[int]        # nodes reachable in the final residual graph

    def cut_capacity(self, network: FlowNetwork):
        return sum(
            cap
            for (u, v, cap) in network.edges
            if u in self.source_side and v not in self.source_side
        )


def max_flow(network: FlowNetwork, tol: float = 1e-12) -> FlowResult:
    """Edmonds-Karp. Exact when capacities are Fractions; verifies value == min cut."""
    n = network.n_nodes
    # residual adjacency: arc list of [to, residual, index of reverse arc]
    arcs: list[list] = []
    adj: list[list[int]] = [[] for _ in range(n)]
    for (u, v, cap) in network.edges:
        adj[u].append(len(arcs))
        arcs.append([v, cap])
        adj[v].append(len(arcs))
        arcs.append([u, cap * 0])

    zero = network.edges[0][2] * 0 if network.edges else 0
    value = zero

    def bfs() -> list[int] | None:
        parent_arc = [-1] * n
        parent_arc[network.source] = -2
        queue = [network.source]
        for u in queue:
            if u == network.sink:
                break
            for a in adj[u]:
                to, res = arcs[a][0], arcs[a][1]
                if parent_arc[to] == -1 and res > tol:
                    parent_arc[to] = a
                    queue.append(to)
        return parent_arc if parent_arc[network.sink] != -1 else None

    while True:
        parents = bfs()
        if parents is None:
            break
        bottleneck = None
        v = network.sink
        while v != network.source:
            a = parents[v]
            bottleneck = arcs[a][1] if bottleneck is None else min(bottleneck, arcs[a][1])
            v = arcs[a ^ 1][0]
        v = network.sink
        while v != network.source:
            a = parents[v]
            arcs[a][1] -= bottleneck
            arcs[a ^ 1][1] += bottleneck
            v = arcs[a ^ 1][0]
        value = value + bottleneck

    reachable = {network.source}
    stack = [network.source]
    while stack:
        u = stack.pop()
        for a in adj[u]:
            to, res = arcs[a][0], arcs[a][1]
            if to not in reachable and res > tol:
                reachable.add(to)
                stack.append(to)

    flows = [arcs[2 * i + 1][1] for i in range(len(network.edges))]
    result = FlowResult(value, flows, reachable)
    gap = result.cut_capacity(network) - value
    if isinstance(value, Fraction):
        assert gap == 0, "max-flow / min-cut mismatch"
    else:
        assert abs(gap) <= 1e-9, f"max-flow / min-cut gap {gap}"
    return result


# ------------------------------------------------------------------
# Brute-force simplex-lattice search
# ------------------------------------------------------------------

def _lattice_count(resolution: int, m: int) -> int:
    return math.comb(resolution + m - 1, m - 1)


def grid_points(m: int, resolution: int, limit: int = 6_000_000) -> np.ndarray:
    """All points {a/K : sum a = K} of the simplex, in ascending lexicographic order."""
    count = _lattice_count(resolution, m)
    if count > limit:
        raise ValueError(
            f"lattice too large: {count} points exceeds limit {limit}"
        )
    if m == 1:
        return np.array([[1.0]])

    def build(parts: int, total: int) -> np.ndarray:
        if parts == 1:
            return np.array([[total]], dtype=np.int64)
        blocks = []
        for first in range(total + 1):
            tail = build(parts - 1, total - first)
            head = np.full((tail.shape[0], 1), first, dtype=np.int64)
            blocks.append(np.hstack([head, tail]))
        return np.vstack(blocks)

    return build(m, resolution) / float(resolution)


def grid_argmax(
    objective: Callable[[np.ndarray], np.ndarray],
    m: int,
    resolution: int,
    limit: int = 6_000_000,
    tie_tol: float = 0.0,
) -> np.ndarray:
    """Exhaustive maximizer of a batch objective over the simplex lattice.

    Ties break to the lexicographically smallest lattice point (the generation
    order is ascending lexicographic, and argmax keeps the first maximum).
    Objectives that are exactly flat on a face of the simplex evaluate with
    float noise that would otherwise randomize the tie-break; ``tie_tol``
    treats scores within that tolerance of the maximum as tied.
    """
    pts = grid_points(m, resolution, limit=limit)
    scores = np.asarray(objective(pts), dtype=float)
    if scores.shape != (pts.shape[0],):
        raise ValueError("objective must map an (N, m) batch to N scores")
    if tie_tol > 0.0:
        best = int(np.flatnonzero(scores >= scores.max() - tie_tol)[0])
    else:
        best = int(np.argmax(scores))
    return pts[best].copy()
