"""Welfare-optimizing mechanisms over leontief and l1 preferences.

The Nash product rule maximizes prod_i u_i(q), equivalently sum_i log u_i(q),
over the simplex, where u_i is the leontief min-ratio utility.  The optimum is
unique and is characterized by a flow certificate: q is optimal iff the unit
of budget can be decomposed into per-agent contributions of 1/n each, placed
only on each agent's critical alternatives (column sums q_j, row sums 1/n).

The solver runs in three stages:

1. an interior-point pass on the lifted concave program
       max sum_i log u_i   s.t.  u_i * p_ij <= q_j on support, q in simplex,
   with a log barrier and damped Newton steps (deterministic, no randomness);
2. a structure snap: the near-critical agent/alternative graph of the numeric
   solution fixes linear identities q_j = u_i * p_ij along its edges, which
   pin the exact optimum per connected component up to one scale that the
   component's budget share determines;
3. the flow certificate on the snapped point.  If it certifies, the snapped
   point is returned (accurate to machine precision); otherwise the tie
   tolerance widens geometrically and the snap retries, with a projected
   subgradient (entropic mirror descent) polish as a last resort.

The l1-utilitarian rule is solved exactly by a Lagrange multiplier scan over
the per-coordinate piecewise-linear costs, with a lexicographic tie-break.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core import (
    Distribution,
    Profile,
    UtilityModel,
    as_distribution,
    as_profile,
    critical_set,
    utilities,
)
from .numerics import FlowNetwork, max_flow

__all__ = [
    "Decomposition",
    "CertificateResult",
    "nash_objective",
    "nash_objective_batch",
    "utilitarian_objective_batch",
    "nash_optimize",
    "decomposition_certificate",
    "utilitarian_l1",
    "mirror_descent_nash",
]

_ROW_COL_TOL = 1e-7


@dataclass(frozen=True)
class Decomposition:
    """Nonnegative n x m score matrix: column sums q_j, row sums 1/n."""

    scores: np.ndarray

    def validate(self, q: np.ndarray) -> None:
        s = self.scores
        n = s.shape[0]
        if np.any(s < -1e-12):
            raise ValueError("negative scores")
        if np.any(np.abs(s.sum(axis=1) - 1.0 / n) > _ROW_COL_TOL):
            raise ValueError("row sums differ from 1/n")
        if np.any(np.abs(s.sum(axis=0) - q) > _ROW_COL_TOL):
            raise ValueError("column sums differ from q")


@dataclass(frozen=True)
class CertificateResult:
    """Outcome of the decomposition max-flow check."""

    ok: bool
    flow_value: float
    decomposition: Decomposition | None
    cut_group: frozenset | None          # agents violating the Hall condition
    critical_sets: tuple

    def blocking_value(self, q: np.ndarray) -> float:
        """Budget reaching the cut group's critical alternatives."""
        if self.cut_group is None:
            return 1.0
        alts = set()
        for i in self.cut_group:
            alts |= self.critical_sets[i]
        return float(sum(q[j] for j in alts))


# ------------------------------------------------------------------
# Objectives
# ------------------------------------------------------------------

def nash_objective(profile, q) -> float:
    """sum_i log u_i(q) under leontief utilities; -inf if any utility is zero."""
    prof = as_profile(profile)
    vals = utilities(UtilityModel.LEONTIEF, prof, as_distribution(q))
    if np.any(vals <= 0.0):
        return float("-inf")
    return float(np.log(vals).sum())


def nash_objective_batch(profile, Q: np.ndarray) -> np.ndarray:
    """Vectorized nash objective over a batch of points (rows of Q)."""
    prof = as_profile(profile)
    out = np.zeros(Q.shape[0])
    for i in range(prof.n):
        p = prof.peaks[i]
        support = np.flatnonzero(p > 0)
        u = (Q[:, support] / p[support]).min(axis=1)
        with np.errstate(divide="ignore"):
            out += np.where(u > 0, np.log(np.maximum(u, 1e-300)), -np.inf)
    return out


def utilitarian_objective_batch(profile, Q: np.ndarray) -> np.ndarray:
    """Negated total l1 distance over a batch (so grid_argmax maximizes it)."""
    prof = as_profile(profile)
    out = np.zeros(Q.shape[0])
    for i in range(prof.n):
        out -= np.abs(Q - prof.peaks[i]).sum(axis=1)
    return out


# ------------------------------------------------------------------
# Interior-point stage
# ------------------------------------------------------------------

def _barrier_solve(P: np.ndarray) -> np.ndarray:
    """Damped Newton path-following on the lifted program. Returns q (unnormalized).

    Variables z = (u_1..u_n, q_1..q_m); equality 1.q = 1; barrier on the slacks
    s_ij = q_j - u_i p_ij, on q_j > 0, and the -sum log u_i objective itself.
    The support pairs are flattened into index arrays so each Newton iteration
    is a handful of vectorized operations plus one small dense solve.
    """
    n, m = P.shape
    agent_ix, alt_ix = np.nonzero(P > 0)
    pe = P[agent_ix, alt_ix]

    q = np.full(m, 1.0 / m)
    u = np.full(n, np.inf)
    np.minimum.at(u, agent_ix, q[alt_ix] / pe)
    u *= 0.5

    def phi(u, q, mu) -> float:
        if np.any(u <= 0) or np.any(q <= 0):
            return np.inf
        slack = q[alt_ix] - u[agent_ix] * pe
        if np.any(slack <= 0):
            return np.inf
        return float(
            -np.log(u).sum() - mu * (np.log(q).sum() + np.log(slack).sum())
        )

    for mu in (1e-2, 1e-5, 1e-8):
        for _ in range(40):
            slack = q[alt_ix] - u[agent_ix] * pe
            inv = 1.0 / slack
            inv2 = inv * inv

            g = np.zeros(n + m)
            g[:n] = -1.0 / u + mu * np.bincount(agent_ix, pe * inv, minlength=n)
            g[n:] = -mu / q - mu * np.bincount(alt_ix, inv, minlength=m)

            kkt = np.zeros((n + m + 1, n + m + 1))
            kkt[:n, :n][np.diag_indices(n)] = 1.0 / u**2 + mu * np.bincount(
                agent_ix, pe * pe * inv2, minlength=n
            )
            kkt[n : n + m, n : n + m][np.diag_indices(m)] = (
                mu / q**2 + mu * np.bincount(alt_ix, inv2, minlength=m)
            )
            B = np.zeros((n, m))
            np.subtract.at(B, (agent_ix, alt_ix), mu * pe * inv2)
            kkt[:n, n : n + m] = B
            kkt[n : n + m, :n] = B.T
            kkt[n : n + m, -1] = 1.0
            kkt[-1, n : n + m] = 1.0
            rhs = np.concatenate([-g, [1.0 - q.sum()]])
            try:
                step = np.linalg.solve(kkt, rhs)
            except np.linalg.LinAlgError:
                kkt[: n + m, : n + m] += 1e-13 * np.eye(n + m)
                step = np.linalg.solve(kkt, rhs)
            du, dq = step[:n], step[n : n + m]
            decrement = -float(g @ step[: n + m])
            if decrement < 1e-11:
                break

            # fraction-to-boundary, then Armijo
            d_slack = dq[alt_ix] - du[agent_ix] * pe - 0.0
            movement = np.concatenate([du, dq, d_slack])
            state = np.concatenate([u, q, slack])
            shrinking = movement < 0
            t = 1.0
            if np.any(shrinking):
                t = min(1.0, 0.99 * float(
                    (state[shrinking] / -movement[shrinking]).min()
                ))
            base = phi(u, q, mu)
            slope = float(g @ step[: n + m])
            for _ in range(40):
                if phi(u + t * du, q + t * dq, mu) <= base + 0.25 * t * slope:
                    break
                t *= 0.5
            else:
                t = 0.0
            if t == 0.0:
                break
            u = u + t * du
            q = q + t * dq
    return q


# ------------------------------------------------------------------
# Structure snap
# ------------------------------------------------------------------

def _snap_structure(P: np.ndarray, q: np.ndarray, eps: float) -> np.ndarray | None:
    """Resolve the eps-critical graph of q into the exact point it implies.

    Inside a connected component of the agent/alternative graph, the identities
    q_j = u_i p_ij fix every q_j up to one common scale; the scale follows from
    the component's budget share (#agents / n).  Returns None when the graph is
    inconsistent or leaves an alternative uncovered.
    """
    n, m = P.shape
    edges: list[list[int]] = [[] for _ in range(n)]
    for i in range(n):
        s = np.flatnonzero(P[i] > 0)
        ratios = q[s] / P[i, s]
        cutoff = ratios.min() + eps
        edges[i] = [int(j) for j, r in zip(s, ratios) if r <= cutoff]

    coef = np.full(m, -1.0)          # alternative scale factors within components
    comp_of_alt = np.full(m, -1, dtype=int)
    agent_seen = np.zeros(n, dtype=bool)
    alt_agents: list[list[int]] = [[] for _ in range(m)]
    for i in range(n):
        for j in edges[i]:
            alt_agents[j].append(i)

    components: list[tuple[list[int], list[int]]] = []
    for j0 in range(m):
        if comp_of_alt[j0] >= 0 or not alt_agents[j0]:
            continue
        cid = len(components)
        comp_alts, comp_agents = [j0], []
        comp_of_alt[j0] = cid
        coef[j0] = 1.0
        stack = [("alt", j0)]
        while stack:
            kind, node = stack.pop()
            if kind == "alt":
                for i in alt_agents[node]:
                    scale = coef[node] / P[i, node]
                    if agent_seen[i]:
                        continue
                    agent_seen[i] = True
                    comp_agents.append(i)
                    stack.append(("agent", (i, scale)))
            else:
                i, scale = node
                for j in edges[i]:
                    implied = scale * P[i, j]
                    if comp_of_alt[j] == -1:
                        comp_of_alt[j] = cid
                        coef[j] = implied
                        comp_alts.append(j)
                        stack.append(("alt", j))
                    elif abs(coef[j] - implied) > 1e-7 * max(coef[j], implied):
                        return None   # cycle inconsistency: graph merged too much
        components.append((comp_alts, comp_agents))

    if np.any(comp_of_alt < 0):
        return None                   # an alternative is critical for nobody

    snapped = np.zeros(m)
    for comp_alts, comp_agents in components:
        share = len(comp_agents) / n
        total = coef[comp_alts].sum()
        snapped[comp_alts] = coef[comp_alts] * (share / total)
    if np.any(snapped <= 0):
        return None
    return snapped


# ------------------------------------------------------------------
# Flow certificate
# ------------------------------------------------------------------

def decomposition_certificate(
    profile, q, eps: float = 1e-9, flow_tol: float = 1e-9
) -> CertificateResult:
    """Check whether q decomposes into per-agent 1/n scores on critical alternatives.

    Builds the bipartite network source -> agent (capacity 1/n) -> alternative
    (only where the alternative is eps-critical for the agent) -> sink
    (capacity q_j) and runs max-flow.  Success means flow value 1 within
    ``flow_tol`` and yields the score matrix; failure reports the source-side
    min-cut agents, whose joint critical alternatives hold less than their
    budget share (a Hall violation).
    """
    prof = as_profile(profile)
    dist = as_distribution(q)
    n, m = prof.n, prof.m
    crit = tuple(
        critical_set(prof.peaks[i], dist, eps=eps) for i in range(n)
    )

    net = FlowNetwork(n_nodes=n + m + 2, source=0, sink=n + m + 1)
    for i in range(n):
        net.add_edge(0, 1 + i, 1.0 / n)
        for j in crit[i]:
            net.add_edge(1 + i, 1 + n + j, 2.0)
    for j in range(m):
        net.add_edge(1 + n + j, 1 + n + m, float(dist.values[j]))
    result = max_flow(net)

    ok = result.value >= 1.0 - flow_tol
    if ok:
        scores = np.zeros((n, m))
        for (u, v, _), f in zip(net.edges, result.flows):
            if 1 <= u <= n and n + 1 <= v <= n + m:
                scores[u - 1, v - n - 1] = f
        decomp = Decomposition(scores)
        decomp.validate(dist.values)
        return CertificateResult(True, float(result.value), decomp, None, crit)
    cut_agents = frozenset(
        i for i in range(n) if (1 + i) in result.source_side
    )
    return CertificateResult(False, float(result.value), None, cut_agents, crit)


# ------------------------------------------------------------------
# Mirror descent (projected subgradient on the simplex)
# ------------------------------------------------------------------

def mirror_descent_nash(
    profile, steps: int = 200_000, c: float = 0.5, q0=None
) -> Distribution:
    """Entropic mirror ascent on the nash objective with step c/sqrt(k).

    Subgradient: each agent contributes 1/(u_i p_ij*) on one critical
    alternative j* (lowest index on ties).  The subgradient blows up near the
    boundary, so the step scales its sup-norm-normalized direction; the best
    iterate by objective value is returned.  Kept as an independent, slower
    route to the optimum; the certificate-driven solver is the primary path.
    """
    prof = as_profile(profile)
    n, m = prof.n, prof.m
    q = np.full(m, 1.0 / m) if q0 is None else as_distribution(q0).values.copy()
    support = [np.flatnonzero(prof.peaks[i] > 0) for i in range(n)]
    best_q, best_val = q.copy(), nash_objective(prof, Distribution(q))
    for k in range(1, steps + 1):
        g = np.zeros(m)
        for i, s in enumerate(support):
            ratios = q[s] / prof.peaks[i, s]
            idx = int(np.argmin(ratios))       # argmin takes the lowest index
            j = int(s[idx])
            g[j] += 1.0 / max(ratios[idx] * prof.peaks[i, j], 1e-12)
        w = (c / np.sqrt(k)) * g / g.max()
        q = q * np.exp(w - w.max())
        q /= q.sum()
        val = nash_objective(prof, Distribution(q))
        if val > best_val:
            best_q, best_val = q.copy(), val
    return Distribution(best_q)


# ------------------------------------------------------------------
# The Nash product rule
# ------------------------------------------------------------------

def _solve_reduced(P: np.ndarray) -> np.ndarray:
    """Exact-intent optimum for peaks P whose every column has support."""
    n, m = P.shape
    if m == 1:
        return np.array([1.0])
    if n == 1:
        return P[0].copy()

    q = _barrier_solve(P)
    q = np.maximum(q, 1e-300)
    q = q / q.sum()

    def try_snaps(q_guess: np.ndarray) -> np.ndarray | None:
        eps = 1e-8
        while eps <= 1e-4:
            snapped = _snap_structure(P, q_guess, eps)
            if snapped is not None:
                cert = decomposition_certificate(
                    Profile(P), Distribution(snapped), eps=1e-9, flow_tol=1e-7
                )
                if cert.ok:
                    return snapped
            eps *= 2.0
        return None

    snapped = try_snaps(q)
    if snapped is None:
        polished = mirror_descent_nash(Profile(P), steps=20_000, q0=Distribution(q))
        snapped = try_snaps(polished.values)
    if snapped is None:
        raise ArithmeticError("nash solver failed to certify an optimum")
    return snapped


def nash_optimize(profile, tol: float = 1e-7) -> Distribution:
    """The unique maximizer of the product of leontief utilities.

    Alternatives supported by no agent are removed up front and restored as
    exact zeros; every other coordinate of the optimum is positive.  The
    returned point passes :func:`decomposition_certificate`.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    prof = as_profile(profile)
    active = np.flatnonzero(prof.peaks.max(axis=0) > 0)
    reduced = prof.peaks[:, active]
    q_red = _solve_reduced(reduced)
    q = np.zeros(prof.m)
    q[active] = q_red
    return Distribution(q)


# ------------------------------------------------------------------
# The l1-utilitarian rule
# ------------------------------------------------------------------

def _interval_at_level(col: np.ndarray, level: int) -> tuple[float, float]:
    """Minimizer interval of sum_i |p_i - x| - level*x over x in [0, 1]."""
    n = col.size
    ordered = np.sort(col)
    k_lo = int(np.ceil((level + n) / 2))
    lo = 0.0 if k_lo <= 0 else float(ordered[min(k_lo, n) - 1])
    k_hi = (level + n) // 2
    hi = 1.0 if k_hi >= n else float(ordered[k_hi])
    return lo, min(hi, 1.0)


def utilitarian_l1(profile) -> Distribution:
    """Minimize the total l1 distance to the peaks over the simplex.

    The cost separates per coordinate into piecewise-linear functions with
    breakpoints at the peak values, so scanning integer Lagrange multiplier
    levels finds the optimal face; within it the lexicographically smallest
    point is returned.  Ties are an artifact of this rule: the tie-break makes
    the output deterministic but carries no strategyproofness claim.
    """
    prof = as_profile(profile)
    n, m = prof.n, prof.m
    for level in range(-n, n + 1):
        intervals = [_interval_at_level(prof.peaks[:, j], level) for j in range(m)]
        lo_sum = sum(iv[0] for iv in intervals)
        hi_sum = sum(iv[1] for iv in intervals)
        if lo_sum <= 1.0 <= hi_sum:
            q = np.zeros(m)
            remaining = 1.0
            tail_hi = hi_sum
            for j, (lo, hi) in enumerate(intervals):
                tail_hi -= hi
                q[j] = max(lo, remaining - tail_hi)
                remaining -= q[j]
            return Distribution(np.maximum(q, 0.0))
    raise AssertionError("multiplier scan failed to cover the simplex")
