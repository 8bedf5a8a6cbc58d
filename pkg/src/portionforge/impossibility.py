"""Exact certification that efficiency, strategyproofness, and proportionality clash.

For three or more agents and alternatives, no mechanism satisfies all three
axioms under l1 or linf disutilities.  This module rebuilds that argument as a
machine-checked chain over a fixed six-profile family, entirely in rational
arithmetic:

* proportionality pins the outcome of the single-minded profiles exactly;
* each strategyproofness comparison between two profiles that differ in one
  agent's peak adds linear constraints on the unknown outcome (disutility
  balls are intersections of half-planes, and the disutility of a degenerate
  peak is itself linear on the simplex);
* each efficiency argument ("shift a little mass from x to y") is certified
  symbolically: over the region in question, mass is available, no agent's
  piecewise-linear disutility increases along the shift, and some agent's
  strictly decreases, so efficiency rules the region out;
* the surviving regions for the final profile are incompatible, which exact
  Fourier-Motzkin elimination confirms.

Every step is logged with its claim; a failing step raises in the report, not
an exception, so callers can inspect exactly which link broke.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

from .axioms import AuditReport, check_efficiency
from .core import Profile, UtilityModel, utility
from .numerics import LinearInequality, fourier_motzkin_feasible

__all__ = [
    "RationalProfileFamily",
    "ChainStep",
    "ChainReport",
    "gen_profiles",
    "verify_chain",
    "region_infeasible",
    "mechanism_gauntlet",
]

F = Fraction
_COLS = 3  # the chain argument lives on three alternatives


# ------------------------------------------------------------------
# Profile family
# ------------------------------------------------------------------

def _pad(row: tuple, m: int) -> tuple:
    return tuple(row) + (F(0),) * (m - len(row))


def _vertex(col: int) -> tuple:
    return tuple(F(1) if j == col else F(0) for j in range(_COLS))


def _build_rows(first, last, n: int) -> tuple:
    middle = (F(0), F(1), F(0))
    return (tuple(first),) + (middle,) * (n - 2) + (tuple(last),)


@dataclass(frozen=True)
class RationalProfileFamily:
    """The six exact profiles of the incompatibility argument, plus forced outcomes.

    Agent 0 and agent n-1 are the special agents; agents 1..n-2 all peak on the
    middle alternative.  ``forced_outcomes`` holds the outcomes pinned by
    proportionality or by the certified derivation.  Padding columns (m > 3)
    are all-zero for every agent.
    """

    model: str
    n: int
    m: int
    profiles: dict[int, tuple]
    forced_outcomes: dict[int, tuple]

    def float_profile(self, k: int) -> Profile:
        return Profile([[float(x) for x in row] for row in self.profiles[k]])


def _special_first(n: int) -> tuple:
    return (F(3, 2 * n), F(2 * n - 3, 2 * n), F(0))


def _special_last(n: int) -> tuple:
    return (F(0), F(2 * n - 3, 2 * n), F(3, 2 * n))


def _ramp_first(n: int) -> tuple:
    return (F(1, n + 1), F(n, n + 1), F(0))


def gen_profiles(model, n: int, m: int = 3) -> RationalProfileFamily:
    """The six-profile family for the given disutility model, exactly rational.

    Profiles 1..4 agree across the two models; the two profiles mixing both
    special agents appear in the order the respective argument consumes them.
    Extra alternatives beyond the third are appended as all-zero columns.
    """
    model = UtilityModel.parse(model)
    if model not in (UtilityModel.L1, UtilityModel.LINF):
        raise ValueError("the impossibility family exists for l1 and linf only")
    if n < 3:
        raise ValueError("the argument needs at least three agents")
    if m < 3:
        raise ValueError("the argument needs at least three alternatives")

    e_a, e_b, e_c = _vertex(0), _vertex(1), _vertex(2)
    base = {
        1: _build_rows(_special_first(n), e_c, n),
        2: _build_rows(e_a, e_c, n),
        3: _build_rows(_ramp_first(n), e_c, n),
        4: _build_rows(e_b, e_c, n),
    }
    both_special = _build_rows(_special_first(n), _special_last(n), n)
    one_vertex = _build_rows(e_a, _special_last(n), n)
    if model is UtilityModel.L1:
        base[5], base[6] = both_special, one_vertex
    else:
        base[5], base[6] = one_vertex, both_special

    forced = {
        2: (F(1, n), F(n - 2, n), F(1, n)),
        4: (F(0), F(n - 1, n), F(1, n)),
    }
    if model is UtilityModel.L1:
        forced[1] = (F(1, 2 * n), F(2 * n - 3, 2 * n), F(1, n))
        forced[3] = (F(0), F(n - 1, n), F(1, n))
        forced[6] = (F(1, n), F(2 * n - 3, 2 * n), F(1, 2 * n))

    profiles = {
        k: tuple(_pad(row, m) for row in rows) for k, rows in base.items()
    }
    forced = {k: _pad(v, m) for k, v in forced.items()}
    for rows in profiles.values():
        assert all(sum(row) == 1 for row in rows)
    return RationalProfileFamily(model.value, n, m, profiles, forced)


# ------------------------------------------------------------------
# Exact linear machinery on the 3-simplex
# ------------------------------------------------------------------

# a linear functional c . q + const
Functional = tuple[tuple[Fraction, Fraction, Fraction], Fraction]


def _coord(col: int) -> Functional:
    return tuple(F(1) if j == col else F(0) for j in range(_COLS)), F(0)


def _leq(fn: Functional, rhs, strict: bool = False) -> LinearInequality:
    coeffs, const = fn
    return LinearInequality(tuple(F(x) for x in coeffs), F(rhs) - const, strict)


def _geq(fn: Functional, rhs, strict: bool = False) -> LinearInequality:
    coeffs, const = fn
    return LinearInequality(
        tuple(-F(x) for x in coeffs), const - F(rhs), strict
    )


def _fn_le(f: Functional, g: Functional, strict: bool = False) -> LinearInequality:
    """Constraint f <= g (or f < g)."""
    (cf, kf), (cg, kg) = f, g
    return LinearInequality(
        tuple(a - b for a, b in zip(cf, cg)), kg - kf, strict
    )


def _simplex_region() -> list[LinearInequality]:
    ones = (F(1), F(1), F(1))
    rows = [LinearInequality(ones, F(1)), LinearInequality(tuple(-x for x in ones), F(-1))]
    for j in range(_COLS):
        rows.append(_geq(_coord(j), 0))
    return rows


def _pieces(model: UtilityModel, peak: Sequence[Fraction]) -> list[Functional]:
    """Linear pieces whose maximum over the simplex is the disutility d(peak, .)."""
    if model is UtilityModel.L1:
        out = []
        for signs in itertools.product((F(1), F(-1)), repeat=_COLS):
            const = -sum(s * p for s, p in zip(signs, peak))
            out.append((tuple(signs), const))
        return out
    out = []
    for j in range(_COLS):
        for s in (F(1), F(-1)):
            coeffs = tuple(s if k == j else F(0) for k in range(_COLS))
            out.append((coeffs, -s * peak[j]))
    return out


def _dist(model: UtilityModel, peak: Sequence[Fraction], point: Sequence[Fraction]) -> Fraction:
    diffs = [abs(p - x) for p, x in zip(peak, point)]
    return sum(diffs) if model is UtilityModel.L1 else max(diffs)


def _empty(region: Sequence[LinearInequality]) -> bool:
    return not fourier_motzkin_feasible(list(region), _COLS)


def _implies(region: Sequence[LinearInequality], ineq: LinearInequality) -> bool:
    return _empty(list(region) + [ineq.negated()])


def _satisfies(region: Sequence[LinearInequality], point: Sequence[Fraction]) -> bool:
    for ineq in region:
        value = sum(c * x for c, x in zip(ineq.coeffs, point))
        if value > ineq.rhs or (ineq.strict and value == ineq.rhs):
            return False
    return True


def region_infeasible(
    constraints: Sequence[LinearInequality], include_simplex: bool = True
) -> bool:
    """Exact emptiness of a system of (strict or weak) inequalities over q in the 3-simplex."""
    region = list(constraints)
    if include_simplex:
        region += _simplex_region()
    return _empty(region)


# ------------------------------------------------------------------
# Chain verification engine
# ------------------------------------------------------------------

@dataclass
class ChainStep:
    sid: str
    claim: str
    status: str
    details: dict = field(default_factory=dict)


@dataclass
class ChainReport:
    model: str
    n: int
    certified: bool
    steps: list[ChainStep]
    failed_step: str | None = None

    def to_lines(self) -> list[dict]:
        return [
            {"step": s.sid, "claim": s.claim, "status": s.status}
            for s in self.steps
        ]


class _ChainFailure(Exception):
    def __init__(self, sid: str, claim: str):
        super().__init__(f"step {sid} failed: {claim}")
        self.sid = sid


class _Verifier:
    def __init__(self):
        self.steps: list[ChainStep] = []

    def certify(self, sid: str, claim: str, ok: bool, **details) -> None:
        if not ok:
            self.steps.append(ChainStep(sid, claim, "failed", details))
            raise _ChainFailure(sid, claim)
        self.steps.append(ChainStep(sid, claim, "certified", details))


def _force_proportional(v: _Verifier, sid: str, rows: tuple, target: tuple) -> None:
    single_minded = all(max(row) == 1 for row in rows)
    n = len(rows)
    mean = tuple(sum(row[j] for row in rows) / n for j in range(_COLS))
    v.certify(
        sid,
        f"proportionality forces the outcome {tuple(map(str, target))}",
        single_minded and mean == tuple(target),
    )


def _degenerate_max_piece(
    v: _Verifier, sid: str, model: UtilityModel, col: int
) -> Functional:
    """Certify d(e_col, q) equals one linear functional on the whole simplex."""
    peak = _vertex(col)
    if model is UtilityModel.L1:
        signs = tuple(F(-1) if j == col else F(1) for j in range(_COLS))
        star = (signs, -sum(s * p for s, p in zip(signs, peak)))
        formula = (
            tuple(F(-2) if j == col else F(0) for j in range(_COLS)),
            F(2),
        )
        label = "2 - 2q"
    else:
        star = (
            tuple(F(-1) if j == col else F(0) for j in range(_COLS)),
            peak[col],
        )
        formula = star
        label = "1 - q"
    simplex = _simplex_region()
    ok = not any(
        not _empty(simplex + [_fn_le(star, piece, strict=True)])
        for piece in _pieces(model, peak)
        if piece != star
    )
    # the star piece agrees with the closed formula everywhere on the simplex
    ok = ok and _empty(simplex + [_fn_le(star, formula, strict=True)])
    ok = ok and _empty(simplex + [_fn_le(formula, star, strict=True)])
    v.certify(
        sid,
        f"disutility of the degenerate peak on column {col} is {label}[{col}] on the simplex",
        ok,
    )
    return formula


def _add_distance_cap(
    region: list[LinearInequality],
    model: UtilityModel,
    peak: Sequence[Fraction],
    rhs: Fraction,
    strict: bool = False,
) -> None:
    for piece in _pieces(model, peak):
        region.append(_leq(piece, rhs, strict))


def _max_distance_below(
    v: _Verifier,
    sid: str,
    region: Sequence[LinearInequality],
    model: UtilityModel,
    peak: Sequence[Fraction],
    rhs: Fraction,
    strict: bool,
) -> None:
    cmp = "<" if strict else "<="
    ok = all(
        _empty(list(region) + [_geq(piece, rhs, strict=not strict)])
        for piece in _pieces(model, peak)
    )
    v.certify(sid, f"over the current region, d(peak, q) {cmp} {rhs}", ok)


def _certify_move(
    v: _Verifier,
    sid: str,
    region: Sequence[LinearInequality],
    model: UtilityModel,
    classes: Sequence[tuple[tuple, bool, str]],
    src: int,
    dst: int,
) -> None:
    """Certify that shifting mass src -> dst weakly helps everyone, strictly someone.

    For each agent class the one-sided derivative of the piecewise-linear
    disutility along the shift must be nonpositive everywhere on the region
    (and negative for the classes carrying the strict gain).  Piece-activation
    regions make those conditions exact linear emptiness checks.
    """
    region = list(region)
    ok = _empty(region + [_leq(_coord(src), 0)])  # mass to move exists
    for peak, must_gain, _label in classes:
        if model is UtilityModel.L1:
            rising_dst = _geq(_coord(dst), peak[dst])
            falling_src = _leq(_coord(src), peak[src])
            ok = ok and _empty(region + [rising_dst, falling_src])
            if must_gain:
                ok = ok and _empty(region + [rising_dst])
                ok = ok and _empty(region + [falling_src])
        else:
            pieces = _pieces(model, peak)
            for idx, piece in enumerate(pieces):
                j = idx // 2
                sign = 1 if idx % 2 == 0 else -1
                deriv = sign if j == dst else (-sign if j == src else 0)
                bad = deriv > 0 if not must_gain else deriv >= 0
                if bad:
                    active = [
                        _fn_le(other, piece) for other in pieces if other != piece
                    ]
                    ok = ok and _empty(region + active)
    labels = ", ".join(label for _, _, label in classes)
    v.certify(
        sid,
        f"shifting mass {src} -> {dst} is a Pareto improvement on the region ({labels})",
        ok,
    )


def _forced_point(
    v: _Verifier,
    sid: str,
    region: Sequence[LinearInequality],
    point: Sequence[Fraction],
    what: str,
) -> None:
    ok = _satisfies(list(region) + _simplex_region(), point)
    for j in range(_COLS):
        ok = ok and _empty(list(region) + [_geq(_coord(j), point[j], strict=True)])
        ok = ok and _empty(list(region) + [_leq(_coord(j), point[j], strict=True)])
    v.certify(sid, f"{what} is forced to {tuple(map(str, point))}", ok)


def _force_by_tight_distance(
    v: _Verifier,
    sid: str,
    region: Sequence[LinearInequality],
    model: UtilityModel,
    peak: Sequence[Fraction],
    rhs: Fraction,
    point: Sequence[Fraction],
    what: str,
) -> None:
    """d(peak, q) <= rhs on the region and >= rhs is required: the region collapses."""
    ok = _dist(model, peak, point) == rhs
    ok = ok and _satisfies(list(region) + _simplex_region(), point)
    for piece in _pieces(model, peak):
        ok = ok and _empty(list(region) + [_geq(piece, rhs, strict=True)])
        tight = list(region) + [_geq(piece, rhs)]
        for j in range(_COLS):
            ok = ok and _empty(tight + [_geq(_coord(j), point[j], strict=True)])
            ok = ok and _empty(tight + [_leq(_coord(j), point[j], strict=True)])
    v.certify(sid, f"{what} is forced to {tuple(map(str, point))} by the tight bound {rhs}", ok)


# ------------------------------------------------------------------
# The two chains
# ------------------------------------------------------------------

def _role_point(cols: tuple[int, int, int], role_values: tuple) -> tuple:
    out = [F(0)] * _COLS
    for role, value in enumerate(role_values):
        out[cols[role]] = value
    return tuple(out)


def _frame_peaks(n: int, cols: tuple[int, int, int]) -> dict:
    ca, cb, cc = cols
    return {
        "special": _role_point(cols, _special_first(n)),
        "ramp": _role_point(cols, _ramp_first(n)),
        "mid": _vertex(cb),
        "other": _vertex(cc),
        "vertex_a": _vertex(ca),
    }


def _rows_differ_only(rows1: tuple, rows2: tuple, idx: int) -> bool:
    if rows1[idx] == rows2[idx]:
        return False
    return all(rows1[i] == rows2[i] for i in range(len(rows1)) if i != idx)


def _derive_special_outcome(
    v: _Verifier,
    model: UtilityModel,
    n: int,
    cols: tuple[int, int, int],
    tag: str,
    family: RationalProfileFamily,
    main_idx: int,
    acting_last: bool,
) -> tuple | list[LinearInequality]:
    """Derive the outcome constraints for the profile with one special agent.

    The same derivation is run twice per chain under a relabeling of the
    columns and of which end agent acts; ``cols`` maps the derivation roles
    (a, b, c) to actual columns.  For l1 the outcome is pinned to a point and
    returned; for linf the accumulated constraint region is returned.
    """
    ca, cb, cc = cols
    pk = _frame_peaks(n, cols)
    acting = n - 1 if acting_last else 0

    def frame_profile(acting_peak: tuple) -> tuple:
        if acting_last:
            return _build_rows(pk["other"], acting_peak, n)
        return _build_rows(acting_peak, pk["other"], n)

    p1f = frame_profile(pk["special"])
    p2f = frame_profile(pk["vertex_a"])
    p3f = frame_profile(pk["ramp"])
    p4f = frame_profile(pk["mid"])
    frame_ok = (
        p1f == family.profiles[main_idx]
        and p2f == family.profiles[2]
        and all(
            _rows_differ_only(p1f, other, acting) for other in (p2f, p3f, p4f)
        )
    )
    if not acting_last:
        frame_ok = frame_ok and p3f == family.profiles[3] and p4f == family.profiles[4]
    v.certify(
        f"{tag}.frame",
        f"frame profiles match the family and differ only in agent {acting}",
        frame_ok,
        auxiliary_profiles=None if not acting_last else {"ramp": p3f, "vertex_b": p4f},
    )

    v2 = _role_point(cols, (F(1, n), F(n - 2, n), F(1, n)))
    v4 = _role_point(cols, (F(0), F(n - 1, n), F(1, n)))
    classes_p1 = [(pk["special"], False, "special"), (pk["mid"], True, "middle"), (pk["other"], False, "other")]
    classes_p3 = [(pk["ramp"], False, "ramp"), (pk["mid"], True, "middle"), (pk["other"], False, "other")]

    _force_proportional(v, f"{tag}.prop2", p2f, v2)
    _force_proportional(v, f"{tag}.prop4", p4f, v4)

    region = _simplex_region()
    rhs12 = _dist(model, pk["special"], v2)
    expected12 = F(2, n) if model is UtilityModel.L1 else F(1, n)
    v.certify(
        f"{tag}.sp12",
        f"misreport value d(special, forced-2) = {expected12}",
        rhs12 == expected12,
    )
    _add_distance_cap(region, model, pk["special"], rhs12)

    linear_deg = _degenerate_max_piece(v, f"{tag}.deg-a", model, ca)
    rhs21 = _dist(model, _vertex(ca), v2)
    expected21 = F(2 * n - 2, n) if model is UtilityModel.L1 else F(n - 1, n)
    v.certify(
        f"{tag}.sp21",
        f"reverse misreport value d(vertex-a, forced-2) = {expected21}",
        rhs21 == expected21,
    )
    region.append(_geq(linear_deg, rhs21))

    half = F(1, 2 * n)
    bounds = [
        (f"q[{ca}] >= 1/2n", _geq(_coord(ca), half)),
        (f"q[{cb}] >= (2n-5)/2n", _geq(_coord(cb), F(2 * n - 5, 2 * n))),
        (f"q[{cc}] <= 1/n", _leq(_coord(cc), F(1, n))),
        (f"q[{ca}] <= 1/n", _leq(_coord(ca), F(1, n))),
        (f"q[{cb}] >= (n-2)/n", _geq(_coord(cb), F(n - 2, n))),
    ]
    for text, ineq in bounds:
        v.certify(f"{tag}.bound[{text}]", f"strategyproofness implies {text}", _implies(region, ineq))

    threshold1 = F(2 * n - 3, 2 * n)
    improvable = region + [
        _leq(_coord(cb), threshold1, strict=True),
        _geq(_coord(ca), 0, strict=True),
    ]
    _certify_move(v, f"{tag}.eff1", improvable, model, classes_p1, src=ca, dst=cb)
    v.certify(
        f"{tag}.eff1-collapse",
        "the no-mass branch is impossible, so q_b >= (2n-3)/2n",
        _empty(region + [_leq(_coord(ca), 0)]),
    )
    region.append(_geq(_coord(cb), threshold1))

    if model is UtilityModel.L1:
        region3 = _simplex_region()
        rhs34 = _dist(model, pk["ramp"], v4)
        v.certify(f"{tag}.sp34", f"misreport value d(ramp, forced-4) = {F(2, n)}", rhs34 == F(2, n))
        _add_distance_cap(region3, model, pk["ramp"], rhs34)
        linear_b = _degenerate_max_piece(v, f"{tag}.deg-b", model, cb)
        rhs43 = _dist(model, _vertex(cb), v4)
        v.certify(f"{tag}.sp43", f"reverse misreport value d(vertex-b, forced-4) = {F(2, n)}", rhs43 == F(2, n))
        region3.append(_geq(linear_b, rhs43))

        threshold3 = F(n, n + 1)
        improvable3 = region3 + [
            _leq(_coord(cb), threshold3, strict=True),
            _geq(_coord(ca), 0, strict=True),
        ]
        _certify_move(v, f"{tag}.eff3", improvable3, model, classes_p3, src=ca, dst=cb)
        v.certify(
            f"{tag}.eff3-collapse",
            "q_b >= n/(n+1) contradicts q_b <= (n-1)/n, so q_a = 0",
            _empty(region3 + [_geq(_coord(cb), threshold3)]),
        )
        region3.append(_leq(_coord(ca), 0))
        v3 = v4
        _forced_point(v, f"{tag}.force3", region3, v3, "the ramp profile outcome")

        rhs31 = _dist(model, pk["ramp"], v3)
        v.certify(f"{tag}.sp31", f"misreport value d(ramp, forced-3) = {F(2, n)}", rhs31 == F(2, n))
        v1 = _role_point(cols, (half, threshold1, F(1, n)))
        _force_by_tight_distance(
            v, f"{tag}.force1", region, model, pk["ramp"], rhs31, v1,
            "the special profile outcome",
        )
        return v1

    # linf: rule out q_c <= 3/4n, then return the open region
    cap = F(3, 4 * n)
    subcase = region + [_leq(_coord(cc), cap)]
    _max_distance_below(v, f"{tag}.sub-sp31", subcase, model, pk["ramp"], cap, strict=False)
    region3 = _simplex_region()
    _add_distance_cap(region3, model, pk["ramp"], cap)
    v.certify(
        f"{tag}.sub-c3",
        "the ramp outcome then has q_c <= 3/4n",
        _implies(region3, _leq(_coord(cc), cap)),
    )
    threshold3 = F(n, n + 1)
    improvable3 = region3 + [
        _leq(_coord(cb), threshold3, strict=True),
        _geq(_coord(ca), 0, strict=True),
    ]
    _certify_move(v, f"{tag}.sub-eff3", improvable3, model, classes_p3, src=ca, dst=cb)
    v.certify(
        f"{tag}.sub-eff3-collapse",
        "with q_a = 0 the bound q_b >= n/(n+1) holds anyway",
        _empty(region3 + [_leq(_coord(ca), 0), _leq(_coord(cb), threshold3, strict=True)]),
    )
    region3.append(_geq(_coord(cb), threshold3))
    rhs43 = _dist(model, _vertex(cb), v4)
    v.certify(f"{tag}.sub-sp43", f"truthful value d(vertex-b, forced-4) = {F(1, n)}", rhs43 == F(1, n))
    _max_distance_below(v, f"{tag}.sub-sp43-gap", region3, model, _vertex(cb), rhs43, strict=True)
    v.certify(
        f"{tag}.subcase-closed",
        "assuming q_c <= 3/4n makes the vertex-b agent gain by misreporting: contradiction",
        True,
    )
    region.append(_geq(_coord(cc), cap, strict=True))
    return region


def verify_chain(model, n: int) -> ChainReport:
    """Certify the whole incompatibility argument for the given model and n >= 3."""
    model = UtilityModel.parse(model)
    if model not in (UtilityModel.L1, UtilityModel.LINF):
        raise ValueError("chains exist for l1 and linf only")
    if n < 3:
        raise ValueError("the argument needs at least three agents")
    family = gen_profiles(model, n)
    v = _Verifier()
    frame1 = (0, 1, 2)
    frame2 = (2, 1, 0)
    try:
        if model is UtilityModel.L1:
            v1 = _derive_special_outcome(v, model, n, frame1, "P1", family, 1, False)
            v.certify(
                "P1.matches-family",
                "derived outcome matches the recorded forced outcome of profile 1",
                v1 == family.forced_outcomes[1][:_COLS],
            )
            v6 = _derive_special_outcome(v, model, n, frame2, "P6", family, 6, True)
            v.certify(
                "P6.matches-family",
                "derived outcome matches the recorded forced outcome of profile 6",
                v6 == family.forced_outcomes[6][:_COLS],
            )
            s1, s3 = _special_first(n), _special_last(n)
            v.certify(
                "P5.adjacency",
                "profile 5 reaches profile 6 by agent 0 and profile 1 by the last agent",
                _rows_differ_only(family.profiles[5], family.profiles[6], 0)
                and _rows_differ_only(family.profiles[5], family.profiles[1], n - 1),
            )
            region5 = _simplex_region()
            rhs56 = _dist(model, s1, v6)
            v.certify("P5.sp56", f"misreport value d(special-1, forced-6) = {F(1, n)}", rhs56 == F(1, n))
            cap_a = _simplex_region()
            _add_distance_cap(cap_a, model, s1, rhs56)
            _add_distance_cap(region5, model, s1, rhs56)
            v.certify(
                "P5.headline-upper",
                "strategyproofness toward profile 6 implies q_c <= 1/2n",
                _implies(cap_a, _leq(_coord(2), F(1, 2 * n))),
            )
            rhs51 = _dist(model, s3, v1)
            v.certify("P5.sp51", f"misreport value d(special-n, forced-1) = {F(1, n)}", rhs51 == F(1, n))
            cap_b = _simplex_region()
            _add_distance_cap(cap_b, model, s3, rhs51)
            _add_distance_cap(region5, model, s3, rhs51)
            v.certify(
                "P5.headline-lower",
                "strategyproofness toward profile 1 implies q_c >= 1/n",
                _implies(cap_b, _geq(_coord(2), F(1, n))),
            )
            v.certify(
                "terminal",
                "q_c <= 1/2n and q_c >= 1/n cannot hold together: contradiction certified",
                _empty(region5),
            )
        else:
            region1 = _derive_special_outcome(v, model, n, frame1, "P1", family, 1, False)
            region5 = _derive_special_outcome(v, model, n, frame2, "P5", family, 5, True)
            s1, s3 = _special_first(n), _special_last(n)
            v.certify(
                "P6.adjacency",
                "profile 6 reaches profile 1 by the last agent and profile 5 by agent 0",
                _rows_differ_only(family.profiles[6], family.profiles[1], n - 1)
                and _rows_differ_only(family.profiles[6], family.profiles[5], 0),
            )
            cap = F(3, 4 * n)
            v.certify(
                "P1.qa-small",
                "profile 1 outcome has q_a < 3/4n",
                _implies(region1, _leq(_coord(0), cap, strict=True)),
            )
            _max_distance_below(v, "P6.sp61", region1, model, s3, cap, strict=True)
            _max_distance_below(v, "P6.sp65", region5, model, s1, cap, strict=True)
            region6 = _simplex_region()
            _add_distance_cap(region6, model, s3, cap, strict=True)
            _add_distance_cap(region6, model, s1, cap, strict=True)
            upper = _simplex_region()
            _add_distance_cap(upper, model, s3, cap, strict=True)
            v.certify(
                "P6.headline-upper",
                "strategyproofness toward profile 1 implies q_a < 3/4n",
                _implies(upper, _leq(_coord(0), cap, strict=True)),
            )
            lower = _simplex_region()
            _add_distance_cap(lower, model, s1, cap, strict=True)
            v.certify(
                "P6.headline-lower",
                "strategyproofness toward profile 5 implies q_a > 3/4n",
                _implies(lower, _geq(_coord(0), cap, strict=True)),
            )
            v.certify(
                "terminal",
                "q_a < 3/4n and q_a > 3/4n cannot hold together: contradiction certified",
                _empty(region6),
            )
    except _ChainFailure as failure:
        return ChainReport(model.value, n, False, v.steps, failed_step=failure.sid)
    return ChainReport(model.value, n, True, v.steps)


# ------------------------------------------------------------------
# Running concrete mechanisms through the family
# ------------------------------------------------------------------

def mechanism_gauntlet(mechanism, model, n: int, m: int = 3) -> AuditReport:
    """Evaluate a mechanism on the six profiles and report which axiom breaks.

    Every mechanism must violate at least one of efficiency, a
    strategyproofness comparison, or proportionality on this family; the
    report lists all violations found, headlined in that order.
    """
    model = UtilityModel.parse(model)
    family = gen_profiles(model, n, m)
    outputs = {k: mechanism(family.float_profile(k)) for k in family.profiles}
    violations: list[dict] = []

    for k in family.profiles:
        report = check_efficiency(model, family.float_profile(k), outputs[k])
        if report.verdict == "fail":
            violations.append({"axiom": "efficiency", "profile": k, "detail": report.witness})

    for k, kk in itertools.permutations(family.profiles, 2):
        diff = [
            i
            for i in range(n)
            if family.profiles[k][i] != family.profiles[kk][i]
        ]
        if len(diff) != 1:
            continue
        agent = diff[0]
        truthful = [float(x) for x in family.profiles[k][agent]]
        d_true = -utility(model, truthful, outputs[k])
        d_misreport = -utility(model, truthful, outputs[kk])
        if d_true > d_misreport + 1e-9:
            violations.append(
                {
                    "axiom": "strategyproofness",
                    "profile": k,
                    "misreport_profile": kk,
                    "agent": agent,
                    "loss": d_true - d_misreport,
                }
            )

    for k in family.profiles:
        rows = family.profiles[k]
        if not all(max(row) == 1 for row in rows):
            continue
        mean = [sum(float(row[j]) for row in rows) / n for j in range(m)]
        gap = max(abs(a - b) for a, b in zip(outputs[k].values, mean))
        if gap > 1e-7:
            violations.append(
                {"axiom": "proportionality", "profile": k, "gap": gap}
            )

    if not violations:
        return AuditReport("impossibility-gauntlet", "pass", meta={"n": n, "m": m})
    order = {"efficiency": 0, "strategyproofness": 1, "proportionality": 2}
    violations.sort(key=lambda w: (order[w["axiom"]], w["profile"]))
    return AuditReport(
        "impossibility-gauntlet",
        "fail",
        witness={"first_axiom": violations[0]["axiom"], "violations": violations},
        meta={"n": n, "m": m, "model": model.value},
    )
