"""Equilibrium construction and verification for the two-player game.

The game has two regimes, decided by the inactive-benchmark thresholds
x_a0 (A's satisficing threshold) and x_b0 (B's, mapped to x-coordinates):

* accommodating (x_a0 <= x_b0): the unique equilibrium is the pair of
  benchmark strategies; every state in [x_a0, x_b0] is stable;
* deterrence (x_a0 > x_b0): a family of equilibria indexed by a single
  stable point xbar in [x_b0, x_a0] \\ {0, 1}, each built from benchmark
  solves restricted to [0, xbar] (for A) and [xbar, 1] (for B).

Value functions are assembled piecewise: the active-region solve, identity
on the neutral region, and a passive-region linear BVP against the
opponent's strategy.  Everything is computed in each player's own
orientation (B works in y = 1 - x) and mirrored back.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
import scipy.linalg

from .benchmark import (
    BenchmarkSolution,
    BoundaryMode,
    PlayerParams,
    Side,
    closed_form_solution,
    closed_form_threshold,
    mirror_field,
    solve_benchmark,
)
from .grid_numerics import Grid, ScalarField
from .viscosity_br import (
    Kink,
    KinkError,
    detect_kink,
    extract_thresholds,
    solve_active_region,
    solve_br,
)


def _kink_report(v: ScalarField) -> tuple[Optional[Kink], Optional[str]]:
    """detect_kink that records a convex kink instead of raising, so invalid
    candidate constructions can still be assembled and fail verification."""
    try:
        return detect_kink(v), None
    except KinkError as exc:
        return None, str(exc)


def _mirror_kink(k: Optional[Kink]) -> Optional[Kink]:
    """Map a kink found in B's own orientation (y = 1 - x) to x-coordinates.
    Slopes negate and swap sides, which preserves concavity."""
    if k is None:
        return None
    return Kink(x=1.0 - k.x, slope_left=-k.slope_right, slope_right=-k.slope_left)

DEFAULT_N = 2001
EPS_B = 1e-12          # below this the passive-row diffusion counts as zero
CONTROL_DISC_TOL = 5e-3
DOMINANCE_TOL = 1e-3


class EquilibriumError(ValueError):
    pass


class RegimeKind(enum.Enum):
    ACCOMMODATING = "accommodating"
    DETERRENCE = "deterrence"


@dataclass(frozen=True)
class RegimeReport:
    kind: RegimeKind
    x_a0: float
    x_b0: float
    # admissible deterrence stable points [x_b0, x_a0] \ {0, 1}; None otherwise
    xbar_range: Optional[tuple[float, float]]


@dataclass
class VerificationReport:
    control_disc_a: float
    control_disc_b: float
    threshold_disc_a: float
    threshold_disc_b: float
    decoupling_violations: int
    convex_kink: Optional[str]
    dominance_gap_a: float  # max of (BR value - benchmark value), should be <= tol
    dominance_gap_b: float
    h: float
    passed: bool


@dataclass
class Equilibrium:
    regime: RegimeKind
    xbar: Optional[float]  # stable point for deterrence, None otherwise
    params_a: PlayerParams
    params_b: PlayerParams
    a_star: ScalarField
    b_star: ScalarField
    v_a: ScalarField
    v_b: ScalarField
    stable_lo: float
    stable_hi: float
    kink_a: Optional[Kink]
    kink_b: Optional[Kink]
    convex_kink_a: Optional[str] = None
    convex_kink_b: Optional[str] = None
    verification: Optional[VerificationReport] = None


def _threshold_or_far_end(params: PlayerParams) -> float:
    """Benchmark threshold on the unit domain from the closed form: the
    satisficing point when r^2 c >= 18, else the far end binds (absorbed)."""
    xstar = closed_form_threshold(params)
    return xstar if xstar is not None else 1.0


def classify_regime(pa: PlayerParams, pb: PlayerParams) -> RegimeReport:
    """Regime of the game plus the benchmark thresholds (x_a0, x_b0)."""
    x_a0 = _threshold_or_far_end(pa)
    x_b0 = 1.0 - _threshold_or_far_end(pb)
    if x_a0 <= x_b0:
        return RegimeReport(RegimeKind.ACCOMMODATING, x_a0, x_b0, None)
    return RegimeReport(RegimeKind.DETERRENCE, x_a0, x_b0, (x_b0, x_a0))


def theta_star(pb: PlayerParams) -> float:
    """Critical composite index: the regime is deterrence iff r_a^2 c_a < theta.

    Solves (18/theta)^(1/3) = x_b0, i.e. theta = 18 / x_b0^3.
    """
    x_b0 = 1.0 - _threshold_or_far_end(pb)
    if x_b0 <= 0.0:
        raise EquilibriumError(
            "no finite threshold: deterrence for all parameters "
            f"(opponent benchmark threshold binds at the far end, r_b^2 c_b = {pb.r2c})"
        )
    return 18.0 / x_b0**3


def passive_value(
    params: PlayerParams, opponent: ScalarField, inner: float
) -> ScalarField:
    """Value of a passive player on [inner, 1] (own orientation) facing the
    opponent field, as the linear BVP  b(x) v'' - r v + r x = 0  with
    Dirichlet v = x at the inner endpoint (continuity with the stable point)
    and zero one-sided slope at the reflecting outer endpoint.

    Solved directly as a tridiagonal system; backward marching is unstable
    because the homogeneous mode of v'' = (r/b) v explodes as b -> 0.  Rows
    where b < EPS_B degenerate to v = x.
    """
    g = opponent.grid
    h = g.h
    j = int(round((inner - g.lo) / h))
    if not (0 <= j <= g.n - 2):
        raise EquilibriumError(f"inner endpoint {inner} outside the grid")
    if abs(g.lo + j * h - inner) > 0.5 * h + 1e-12:
        raise EquilibriumError(f"inner endpoint {inner} is not near a grid node")
    xs = g.nodes()[j:]
    b = opponent.values[j:]
    if np.any(b < 0):
        raise EquilibriumError("opponent strategy has negative values")
    m = len(xs)
    r = params.r
    lam = b / (h * h)
    active = b >= EPS_B
    active[0] = False  # inner Dirichlet node
    diag = np.where(active, r + 2.0 * lam, 1.0)
    rhs = np.where(active, r * xs, xs)
    lower = np.zeros(m)
    upper = np.zeros(m)
    upper[1:][active[:-1]] = -lam[:-1][active[:-1]]
    lower[:-1][active[1:]] = -lam[1:][active[1:]]
    if active[-1]:
        lower[-2] = -2.0 * lam[-1]  # reflected ghost doubles the inward coupling
    ab = np.vstack([upper, diag, lower])
    try:
        vals = scipy.linalg.solve_banded((1, 1), ab, rhs)
    except scipy.linalg.LinAlgError as exc:
        raise EquilibriumError(
            "passive BVP system is singular: "
            f"{exc}; diag range [{diag.min()}, {diag.max()}], "
            f"b range [{b.min()}, {b.max()}]"
        ) from exc
    return ScalarField(Grid(float(xs[0]), g.hi, m), vals)


def _assemble_value(
    params: PlayerParams,
    active_vals: np.ndarray,
    opponent_own: ScalarField,
    j: int,
) -> ScalarField:
    """Player's full value in own orientation on the opponent's [0,1] grid:
    active/neutral values up to the junction node j, passive BVP beyond it.
    The junction node takes the identity value."""
    g = opponent_own.grid
    xs = g.nodes()
    vals = np.array(active_vals[: j + 1], dtype=float)
    vals[j] = xs[j]
    passive = passive_value(params, opponent_own, float(xs[j]))
    return ScalarField(g, np.concatenate([vals[:j], passive.values]))


def build_accommodating(
    pa: PlayerParams, pb: PlayerParams, n: int = DEFAULT_N
) -> Equilibrium:
    """The unique equilibrium of the accommodating regime: both players play
    their inactive benchmark; every state in [x_a0, x_b0] is stable."""
    regime = classify_regime(pa, pb)
    if regime.kind is not RegimeKind.ACCOMMODATING:
        raise EquilibriumError(
            f"regime mismatch: x_a0={regime.x_a0} > x_b0={regime.x_b0} is deterrence"
        )
    pa = PlayerParams(pa.r, pa.c, Side.A)
    pb = PlayerParams(pb.r, pb.c, Side.B)
    # accommodating forces interior thresholds on both sides, so the pasting
    # closed form exists for each player
    sol_a = closed_form_solution(pa, n)
    sol_b = closed_form_solution(pb, n)
    g = Grid(0.0, 1.0, n)
    xs = g.nodes()
    a_star = ScalarField(g, np.array([sol_a.control_at(float(x)) for x in xs]))
    b_star = ScalarField(
        g, np.array([sol_b.control_at(1.0 - float(x)) for x in xs])
    )
    j_a = int(round(regime.x_b0 / g.h))
    j_b = int(round((1.0 - regime.x_a0) / g.h))
    va_active = np.array([sol_a.value_at(float(x)) for x in xs[: j_a + 1]])
    vb_active = np.array([sol_b.value_at(float(y)) for y in xs[: j_b + 1]])
    v_a = _assemble_value(pa, va_active, b_star, j_a)
    v_b_own = _assemble_value(pb, vb_active, mirror_field(a_star), j_b)
    kink_a, cka = _kink_report(v_a)
    kink_b, ckb = _kink_report(v_b_own)
    return Equilibrium(
        regime=RegimeKind.ACCOMMODATING,
        xbar=None,
        params_a=pa,
        params_b=pb,
        a_star=a_star,
        b_star=b_star,
        v_a=v_a,
        v_b=mirror_field(v_b_own),
        stable_lo=regime.x_a0,
        stable_hi=regime.x_b0,
        kink_a=kink_a,
        kink_b=_mirror_kink(kink_b),
        convex_kink_a=cka,
        convex_kink_b=ckb,
    )


def build_deterrence(
    pa: PlayerParams, pb: PlayerParams, xbar: float, n: int = DEFAULT_N
) -> Equilibrium:
    """A deterrence equilibrium with stable point xbar: each player solves an
    "as if" benchmark restricted to their side of xbar."""
    regime = classify_regime(pa, pb)
    if regime.kind is not RegimeKind.DETERRENCE:
        raise EquilibriumError(
            f"regime mismatch: x_a0={regime.x_a0} <= x_b0={regime.x_b0} is accommodating"
        )
    lo, hi = regime.xbar_range
    tol = 1e-9
    if not (lo - tol <= xbar <= hi + tol) or xbar <= tol or xbar >= 1.0 - tol:
        raise EquilibriumError(
            f"not an equilibrium stable point: xbar={xbar} outside "
            f"[{lo}, {hi}] \\ {{0, 1}}"
        )
    pa = PlayerParams(pa.r, pa.c, Side.A)
    pb = PlayerParams(pb.r, pb.c, Side.B)
    g = Grid(0.0, 1.0, n)
    h = g.h
    xs = g.nodes()
    j = int(round(xbar / h))
    if j < 2 or g.n - 1 - j < 2:
        raise EquilibriumError(
            f"xbar={xbar} too close to the boundary for an n={n} grid"
        )
    # nodal fields from the monotone scheme on the restricted grids: their
    # discrete HJB residual is at solver tolerance, whereas exact-solution
    # nodal values carry O(h^2) truncation that blows up near the absorbed end
    v_act_a, a_act, _ = solve_active_region(pa, Grid(0.0, float(xs[j]), j + 1))
    v_act_b, b_act, _ = solve_active_region(
        pb, Grid(0.0, 1.0 - float(xs[j]), g.n - j)
    )
    a_vals = np.zeros(g.n)
    b_vals = np.zeros(g.n)
    a_vals[: j + 1] = a_act.values
    a_vals[j:] = 0.0
    b_vals[j:] = b_act.values[::-1]
    b_vals[j] = 0.0
    a_star = ScalarField(g, a_vals)
    b_star = ScalarField(g, b_vals)
    v_a = _assemble_value(pa, v_act_a.values, b_star, j)
    v_b_own = _assemble_value(pb, v_act_b.values, mirror_field(a_star), g.n - 1 - j)
    kink_a, cka = _kink_report(v_a)
    kink_b, ckb = _kink_report(v_b_own)
    return Equilibrium(
        regime=RegimeKind.DETERRENCE,
        xbar=xbar,
        params_a=pa,
        params_b=pb,
        a_star=a_star,
        b_star=b_star,
        v_a=v_a,
        v_b=mirror_field(v_b_own),
        stable_lo=xbar,
        stable_hi=xbar,
        kink_a=kink_a,
        kink_b=_mirror_kink(kink_b),
        convex_kink_a=cka,
        convex_kink_b=ckb,
    )


def _decoupling_violations(a: np.ndarray, b: np.ndarray, tol: float = 0.0) -> int:
    return int(np.count_nonzero((a > tol) & (b > tol)))


def verify_equilibrium(eq: Equilibrium) -> VerificationReport:
    """Check the fixed-point property by recomputing each side's best response
    to the other's constructed strategy, plus decoupling, kink admissibility,
    and the benchmark-dominance bounds.  Never raises: the report carries the
    verdict."""
    g = eq.a_star.grid
    h = g.h
    br_a = solve_br(eq.params_a, eq.b_star)
    br_b = solve_br(eq.params_b, mirror_field(eq.a_star))  # own orientation

    control_disc_a = float(np.max(np.abs(br_a.control.values - eq.a_star.values)))
    b_star_own = mirror_field(eq.b_star)
    control_disc_b = float(np.max(np.abs(br_b.control.values - b_star_own.values)))

    lo_a, hi_a, _ = extract_thresholds(br_a.v)
    lo_ae, hi_ae, _ = extract_thresholds(eq.v_a)
    threshold_disc_a = max(abs(lo_a - lo_ae), abs(hi_a - hi_ae))
    lo_b, hi_b, _ = extract_thresholds(br_b.v)
    lo_be, hi_be, _ = extract_thresholds(mirror_field(eq.v_b))
    threshold_disc_b = max(abs(lo_b - lo_be), abs(hi_b - hi_be))

    violations = _decoupling_violations(eq.a_star.values, eq.b_star.values)
    violations += _decoupling_violations(
        br_a.control.values, br_b.control.values[::-1], tol=1e-6
    )

    convex_kink = None
    if eq.convex_kink_a is not None:
        convex_kink = f"constructed v_a: {eq.convex_kink_a}"
    elif eq.convex_kink_b is not None:
        convex_kink = f"constructed v_b: {eq.convex_kink_b}"
    for label, vf in (("v_a", br_a.v), ("v_b", br_b.v)):
        try:
            detect_kink(vf)
        except KinkError as exc:
            convex_kink = f"best response {label}: {exc}"

    # dominance: the best response against any opponent is weakly below the
    # benchmark value against a passive one
    bench_a = _unit_benchmark(eq.params_a, g.n)
    bench_b = _unit_benchmark(PlayerParams(eq.params_b.r, eq.params_b.c, Side.B), g.n)
    dominance_gap_a = float(np.max(br_a.v.values - bench_a.v.values))
    dominance_gap_b = float(np.max(br_b.v.values - bench_b.v.values))

    passed = (
        control_disc_a <= CONTROL_DISC_TOL
        and control_disc_b <= CONTROL_DISC_TOL
        and threshold_disc_a <= 2.0 * h
        and threshold_disc_b <= 2.0 * h
        and violations == 0
        and convex_kink is None
        and dominance_gap_a <= DOMINANCE_TOL
        and dominance_gap_b <= DOMINANCE_TOL
    )
    report = VerificationReport(
        control_disc_a=control_disc_a,
        control_disc_b=control_disc_b,
        threshold_disc_a=threshold_disc_a,
        threshold_disc_b=threshold_disc_b,
        decoupling_violations=violations,
        convex_kink=convex_kink,
        dominance_gap_a=dominance_gap_a,
        dominance_gap_b=dominance_gap_b,
        h=h,
        passed=passed,
    )
    eq.verification = report
    return report


def _unit_benchmark(params: PlayerParams, n: int) -> BenchmarkSolution:
    """Benchmark on the player's own unit domain: closed form when it exists,
    shooting otherwise."""
    if closed_form_threshold(params) is not None:
        return closed_form_solution(params, n)
    return solve_benchmark(params, 1.0, n=n)


# ---------------------------------------------------------------------------
# comparative statics


@dataclass(frozen=True)
class StableSet:
    """Closed-interval representation of the set of stable states."""

    lo: float
    hi: float

    def sso_leq(self, other: "StableSet") -> bool:
        """Strong set order on intervals: both endpoints weakly below."""
        return self.lo <= other.lo + 1e-12 and self.hi <= other.hi + 1e-12

    def contains(self, other: "StableSet") -> bool:
        return self.lo <= other.lo + 1e-12 and self.hi >= other.hi - 1e-12


def stable_set(pa: PlayerParams, pb: PlayerParams) -> StableSet:
    """Union over the equilibrium family of the stable states: [x_a0, x_b0]
    when accommodating, [x_b0, x_a0] (the family of stable points) when
    deterrence."""
    regime = classify_regime(pa, pb)
    if regime.kind is RegimeKind.ACCOMMODATING:
        return StableSet(regime.x_a0, regime.x_b0)
    return StableSet(regime.x_b0, regime.x_a0)


@dataclass
class SweepResult:
    points: list[PlayerParams]
    x_a0: list[float]
    x_b0: list[float]
    regimes: list[RegimeKind]
    stable_sets: list[StableSet]
    sso_ok: list[bool]                      # consecutive pairs
    containment_ok: list[Optional[bool]]    # consecutive pairs; None when mixed-regime
    theta: Optional[float]
    theta_reason: Optional[str]


def sweep(points: Sequence[PlayerParams], pb: PlayerParams) -> SweepResult:
    """Comparative statics of the stable set along a monotone axis in
    r_a^2 c_a, against a fixed opponent.

    For each consecutive pair, checks that the lower-index set (in r^2 c)
    order) is above in the strong set order, and the same-regime containment:
    within the accommodating regime the higher-r^2 c set contains the lower;
    within the deterrence regime the lower-r^2 c set contains the higher.
    """
    points = list(points)
    if len(points) == 0:
        raise ValueError("sweep needs at least one point")
    r2cs = [p.r2c for p in points]
    inc = all(x <= y for x, y in zip(r2cs, r2cs[1:]))
    dec = all(x >= y for x, y in zip(r2cs, r2cs[1:]))
    if not (inc or dec):
        raise ValueError(f"sweep axis not monotone in r^2 c: {r2cs}")
    theta: Optional[float] = None
    theta_reason: Optional[str] = None
    try:
        theta = theta_star(pb)
    except EquilibriumError as exc:
        theta_reason = str(exc)

    reports = [classify_regime(p, pb) for p in points]
    sets = [stable_set(p, pb) for p in points]
    sso_ok: list[bool] = []
    containment: list[Optional[bool]] = []
    for (p1, s1, rep1), (p2, s2, rep2) in zip(
        zip(points, sets, reports), zip(points[1:], sets[1:], reports[1:])
    ):
        # order each pair by r^2 c: S_hi for the larger index, S_lo the smaller
        if p1.r2c >= p2.r2c:
            s_hi, s_lo = s1, s2
        else:
            s_hi, s_lo = s2, s1
        sso_ok.append(s_hi.sso_leq(s_lo))
        if rep1.kind != rep2.kind:
            containment.append(None)
        elif rep1.kind is RegimeKind.ACCOMMODATING:
            containment.append(s_hi.contains(s_lo))
        else:
            containment.append(s_lo.contains(s_hi))
    return SweepResult(
        points=points,
        x_a0=[rep.x_a0 for rep in reports],
        x_b0=[rep.x_b0 for rep in reports],
        regimes=[rep.kind for rep in reports],
        stable_sets=sets,
        sso_ok=sso_ok,
        containment_ok=containment,
        theta=theta,
        theta_reason=theta_reason,
    )


@dataclass
class WelfareComparison:
    hypotheses_met: bool
    domain_hi: Optional[float]   # comparison domain [0, domain_hi]
    verdict: Optional[bool]      # None when outside the stated hypotheses
    min_gap: float               # min over the domain of v_tilde - v
    reason: str


def welfare_compare(
    pa_tilde: PlayerParams,
    pa: PlayerParams,
    pb: PlayerParams,
    n: int = DEFAULT_N,
    tol: float = 1e-6,
) -> WelfareComparison:
    """Welfare comparative statics for A: with (r_tilde, c_tilde) <= (r, c)
    componentwise, the tilde value dominates on [0, x_lo_tilde]; if moreover
    r_tilde = r or x_lo_tilde < x_b0 the domination extends to [0, 1].

    Outside those hypotheses (including any deterrence regime, where the
    equilibrium selection is ambiguous) the data is reported with no verdict.
    """
    rep_t = classify_regime(pa_tilde, pb)
    rep = classify_regime(pa, pb)
    if rep_t.kind is not RegimeKind.ACCOMMODATING or rep.kind is not RegimeKind.ACCOMMODATING:
        return WelfareComparison(False, None, None, math.nan,
                                 "deterrence regime: equilibrium selection ambiguous")
    if not (pa_tilde.r <= pa.r and pa_tilde.c <= pa.c):
        return WelfareComparison(False, None, None, math.nan,
                                 "parameters not ordered componentwise")
    eq_t = build_accommodating(pa_tilde, pb, n)
    eq = build_accommodating(pa, pb, n)
    x_lo_t = rep_t.x_a0
    if abs(pa_tilde.r - pa.r) < 1e-15 or x_lo_t < rep_t.x_b0 - 1e-12:
        domain_hi = 1.0
    else:
        domain_hi = x_lo_t
    xs = eq.v_a.grid.nodes()
    mask = xs <= domain_hi + 1e-12
    gap = eq_t.v_a.values[mask] - eq.v_a.values[mask]
    min_gap = float(np.min(gap))
    return WelfareComparison(True, domain_hi, min_gap >= -tol, min_gap, "ok")
