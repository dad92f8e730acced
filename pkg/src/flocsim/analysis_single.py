"""Equilibrium and stability analysis of the reduced single-species model.

Positive equilibria are intersections of the nullclines S = phi(x)
(growth balances removal) and S = gamma(x) (substrate balance). Their
stability follows from the 2x2 Jacobian; the determinant carries the sign
of phi'(x) - gamma'(x), so stable equilibria and saddles alternate along
the nullcline. When the washout and a positive equilibrium are both
stable, the basins are separated by the stable manifold of the saddle
between them (the separatrix).

All operations require an x-only removal rate d(x); reduced models whose
planktonic fraction depends on S are reported as violating H2 rather than
analyzed.
"""

import math
from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np

from .errors import DomainError, NumericsError
from .models import GrowthLaw, growth_dominates
from .numerics import IntegratorConfig, eigenvalues, find_root, integrate
from .reduction import MassActionFraction, ReducedModel, TotalDensityFraction

# classification labels
STABLE_NODE = "stable node"
STABLE_FOCUS = "stable focus"
SADDLE = "saddle"
UNSTABLE_NODE = "unstable node"
UNSTABLE_FOCUS = "unstable focus"
NONHYPERBOLIC = "nonhyperbolic"

WASHOUT = "washout"
POSITIVE = "positive"

# resolution / tolerance constants (documented, fixed)
N_SCAN = 4096                 # sign-change scan points on (0, x_max]
BISECT_REL = 1e-12            # bisection target |dx| <= BISECT_REL * x_max
MERGE_RADIUS_REL = 1e-8       # roots closer than this * x_max are merged
NONHYP_TOL = 1e-8             # |Re lambda| below this is nonhyperbolic
RESIDUAL_TOL = 1e-9           # positive-equilibrium residual bound
SEED_OFFSET_REL = 1e-6        # separatrix seed offset scale
SPAN_CAP = 200.0              # reverse-time integration cap
H_GRID = 64                   # hypothesis-check grid (per axis, log spaced)
INF_PROXY = 1e6               # x = INF_PROXY * x_max stands in for +infinity

VERIFIED_ANALYTIC = "verified analytic"
VERIFIED_ON_GRID = "verified on grid"
VIOLATED = "violated"
NOT_APPLICABLE = "not applicable"


class BreakEven(NamedTuple):
    """Break-even substrate concentrations f(l0) = D0, g(l1) = D1 (inf if none)."""

    lambda0: float
    lambda1: float


@dataclass(frozen=True)
class Equilibrium:
    kind: str                     # WASHOUT or POSITIVE
    S: float
    x: float
    jacobian: np.ndarray
    eigenvalues: tuple
    classification: str
    degenerate: bool = False
    phi_gamma_slope: Optional[float] = None  # phi'(x) - gamma'(x) at positive eq

    @property
    def stable(self) -> bool:
        return self.classification in (STABLE_NODE, STABLE_FOCUS)

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "S": float(self.S),
            "x": float(self.x),
            "jacobian": [[float(v) for v in row] for row in self.jacobian],
            "eigenvalues": [[z.real, z.imag] for z in self.eigenvalues],
            "classification": self.classification,
            "degenerate": self.degenerate,
            "phi_gamma_slope": None if self.phi_gamma_slope is None
            else float(self.phi_gamma_slope),
        }


@dataclass(frozen=True)
class HypothesisStatus:
    status: str
    witness: Optional[tuple] = None   # (S, x) where the inequality failed
    residual: Optional[float] = None  # violated: offending value; grid: worst margin
    note: str = ""

    def to_dict(self) -> dict:
        return {
            "status": self.status,
            "witness": None if self.witness is None else [float(v) for v in self.witness],
            "residual": None if self.residual is None else float(self.residual),
            "note": self.note,
        }


@dataclass(frozen=True)
class HypothesisReport:
    h0: HypothesisStatus
    h1: HypothesisStatus
    h2: HypothesisStatus
    h3: HypothesisStatus
    h4: HypothesisStatus

    def statuses(self) -> dict:
        return {"H0": self.h0, "H1": self.h1, "H2": self.h2, "H3": self.h3, "H4": self.h4}

    @property
    def all_hold(self) -> bool:
        return all(s.status != VIOLATED for s in self.statuses().values())

    def to_dict(self) -> dict:
        return {name: s.to_dict() for name, s in self.statuses().items()}


# ---------------------------------------------------------------------------
# break-even concentrations and nullclines


def _break_even_one(law: GrowthLaw, rate: float) -> float:
    if law.sup <= rate:
        return math.inf
    S_hi = 1.0
    while law.value(S_hi) <= rate:
        S_hi *= 2.0
    return find_root(lambda S: law.value(S) - rate, 0.0, S_hi, tol=1e-13).root


def break_even(reduced: ReducedModel) -> BreakEven:
    """lambda0 = f^-1(D0) and lambda1 = g^-1(D1), +inf when unattainable."""
    return BreakEven(_break_even_one(reduced.f, reduced.D0),
                     _break_even_one(reduced.g, reduced.D1))


def phi(reduced: ReducedModel, x: float) -> Optional[float]:
    """The S solving mu(S, x) = d(x), or None when growth cannot balance removal."""
    if x < 0.0:
        raise DomainError(f"x must be nonnegative, got {x}")
    d_x = reduced.d(x)
    if reduced.mu_sup(x) <= d_x:
        return None
    S_hi = 1.0
    while reduced.mu(S_hi, x) <= d_x:
        S_hi *= 2.0
    return find_root(lambda S: reduced.mu(S, x) - d_x, 0.0, S_hi, tol=1e-13).root


def gamma(reduced: ReducedModel, D: float, S_in: float, x):
    """Substrate nullcline S = S_in - x d(x) / D (may be negative; caller filters)."""
    return S_in - x * reduced.d(x) / D


def x_scan_limit(reduced: ReducedModel, D: float, S_in: float) -> float:
    """Upper biomass bound for equilibrium scans: gamma < 0 beyond D*S_in/D1."""
    return D * S_in / reduced.D1 + 1.0


def _nullcline_gap(reduced, D, S_in, x):
    """mu(gamma(x) clamped to 0, x) - d(x); same sign as gamma(x) - phi(x)."""
    g = gamma(reduced, D, S_in, x)
    S_eval = np.maximum(g, 0.0) if isinstance(x, np.ndarray) else max(g, 0.0)
    return reduced.mu(S_eval, x) - reduced.d(x)


# ---------------------------------------------------------------------------
# equilibria


def _classify_from_eigs(eigs) -> str:
    re = [z.real for z in eigs]
    if any(abs(r) <= NONHYP_TOL for r in re):
        return NONHYPERBOLIC
    if re[0] > 0.0 > re[1]:
        return SADDLE
    is_complex = abs(eigs[0].imag) > 0.0
    if re[0] < 0.0:
        return STABLE_FOCUS if is_complex else STABLE_NODE
    return UNSTABLE_FOCUS if is_complex else UNSTABLE_NODE


def classify(reduced: ReducedModel, D: float, S_in: float, eq,
             degenerate: bool = False) -> Equilibrium:
    """Build the analytic Jacobian at ``eq = (S, x)``, classify by eigenvalues.

    For a positive equilibrium the determinant identity
    det(J1) = D x mu_S (phi' - gamma') is verified as an internal
    consistency check before the classification is returned.
    """
    S, x = float(eq[0]), float(eq[1])
    if x <= 1e-12 * max(1.0, x_scan_limit(reduced, D, S_in)):
        f_Sin = reduced.f.value(S_in)
        if abs(S - S_in) > 1e-7 * max(1.0, S_in):
            raise DomainError(f"washout equilibrium must have S = S_in, got S={S}")
        jac = np.array([[-D, -f_Sin], [0.0, f_Sin - reduced.D0]])
        eigs = tuple(eigenvalues(jac))
        return Equilibrium(WASHOUT, S_in, 0.0, jac, eigs, _classify_from_eigs(eigs))

    # a degenerate (merged tangency) point is only an approximate root, so
    # its residual bound is the merge radius scale rather than the solver's
    res_tol = 1e-5 if degenerate else RESIDUAL_TOL
    mu = reduced.mu(S, x)
    d = reduced.d(x)
    if abs(mu - d) > res_tol:
        raise DomainError(f"not an equilibrium: |mu - d| = {abs(mu - d)} at (S={S}, x={x})")
    if abs(D * (S_in - S) - x * d) > res_tol:
        raise DomainError(
            f"not an equilibrium: substrate residual {abs(D * (S_in - S) - x * d)}"
        )
    mu_S = reduced.dmu_dS(S, x)
    mu_x = reduced.dmu_dx(S, x)
    d_p = reduced.d_prime(x)
    jac = np.array([
        [-D - x * mu_S, -x * mu_x - mu],
        [x * mu_S, x * mu_x - x * d_p],
    ])
    eigs = tuple(eigenvalues(jac))
    phi_p = (d_p - mu_x) / mu_S
    gamma_p = -(d + x * d_p) / D
    slope = phi_p - gamma_p
    det = jac[0, 0] * jac[1, 1] - jac[0, 1] * jac[1, 0]
    det_identity = D * x * mu_S * slope
    # exact algebra given mu = d; the merged-point deviation scales with it
    if abs(det - det_identity) > 1e-6 * max(abs(det), 1e-12) + x * mu_S * abs(mu - d):
        raise NumericsError(
            f"determinant identity violated: det={det}, D x mu_S (phi'-gamma')={det_identity}"
        )
    return Equilibrium(POSITIVE, S, x, jac, eigs, _classify_from_eigs(eigs),
                       degenerate=degenerate, phi_gamma_slope=slope)


def find_equilibria(reduced: ReducedModel, D: float, S_in: float,
                    n_scan: int = N_SCAN) -> list:
    """Washout plus all positive equilibria on (0, x_max], each classified.

    Roots of the nullcline gap are located by a fixed ``n_scan``-point
    sign-change scan followed by bisection; roots closer than the merge
    radius collapse to one equilibrium flagged degenerate (tangency).
    """
    x_max = x_scan_limit(reduced, D, S_in)
    xs = x_max * np.arange(1, n_scan + 1) / n_scan
    try:
        gaps = _nullcline_gap(reduced, D, S_in, xs)
    except TypeError:  # non-vectorizable fraction
        gaps = np.array([_nullcline_gap(reduced, D, S_in, float(x)) for x in xs])

    # x -> 0 limit of the gap: mu(S_in, 0) - d(0)
    gap0 = reduced.mu(S_in, 0.0) - reduced.d(0.0)
    xs = np.concatenate(([0.0], xs))
    gaps = np.concatenate(([gap0], gaps))

    roots = []
    tol = BISECT_REL * x_max
    for i in range(len(xs) - 1):
        ga, gb = gaps[i], gaps[i + 1]
        if gb == 0.0:
            roots.append(float(xs[i + 1]))
            continue
        if ga == 0.0 or (ga > 0.0) == (gb > 0.0):
            continue
        lo, hi = float(xs[i]), float(xs[i + 1])
        flo = ga
        while hi - lo > tol:
            mid = 0.5 * (lo + hi)
            fm = _nullcline_gap(reduced, D, S_in, mid)
            if fm == 0.0:
                lo = hi = mid
                break
            if (fm > 0.0) == (flo > 0.0):
                lo, flo = mid, fm
            else:
                hi = mid
        roots.append(0.5 * (lo + hi))

    merge = MERGE_RADIUS_REL * x_max
    merged = []
    for r in sorted(roots):
        if r <= merge:
            continue  # coincides with the washout
        if merged and r - merged[-1][0] < merge:
            merged[-1] = (0.5 * (merged[-1][0] + r), True)
        else:
            merged.append((r, False))

    out = [classify(reduced, D, S_in, (S_in, 0.0))]
    for x_root, degenerate in merged:
        S_root = gamma(reduced, D, S_in, x_root)
        out.append(classify(reduced, D, S_in, (S_root, x_root), degenerate=degenerate))
    return out


# ---------------------------------------------------------------------------
# hypothesis checking


def _lemma_form_fraction(fraction) -> bool:
    # p decreasing from p(0)=1 to p(inf)=0 with [x p(x)]' > 0, by construction
    return isinstance(fraction, (TotalDensityFraction, MassActionFraction))


def check_hypotheses(reduced: ReducedModel, D: float, S_in: float) -> HypothesisReport:
    """Verify H0-H4 for the reduced model, analytically where the structure
    allows it and on a fixed log-spaced grid otherwise. Violations carry a
    witness point and the offending value; they are data, not errors.
    """
    na = HypothesisStatus(NOT_APPLICABLE)

    if reduced.s_dependent:
        S_a, S_b = 0.5 * S_in, S_in
        resid = abs(reduced.d(1.0, S=S_a) - reduced.d(1.0, S=S_b))
        h2 = HypothesisStatus(
            VIOLATED, witness=(S_a, 1.0), residual=resid,
            note="removal rate depends on S; d(x) form of H2 does not apply",
        )
        return HypothesisReport(
            h0=HypothesisStatus(NOT_APPLICABLE, note="not checked for S-dependent d"),
            h1=HypothesisStatus(NOT_APPLICABLE, note="not checked for S-dependent d"),
            h2=h2, h3=na, h4=na,
        )

    lam = break_even(reduced)
    analytic = (
        _lemma_form_fraction(reduced.fraction)
        and growth_dominates(reduced.f, reduced.g)
        and reduced.D1 < reduced.D0 <= D
    )
    if analytic:
        va = HypothesisStatus(VERIFIED_ANALYTIC)
        h3 = va if lam.lambda0 < lam.lambda1 else na
        h4 = va if lam.lambda1 < lam.lambda0 else na
        return HypothesisReport(h0=va, h1=va, h2=va, h3=h3, h4=h4)

    # numeric verification on a log-spaced grid
    finite = [v for v in (lam.lambda0, lam.lambda1) if math.isfinite(v)]
    S_hi = 2.0 * max([S_in, 1.0] + finite)
    x_max = x_scan_limit(reduced, D, S_in)
    S_grid = np.logspace(math.log10(S_hi) - 6, math.log10(S_hi), H_GRID)
    x_grid = np.concatenate(([0.0], np.logspace(math.log10(x_max) - 6,
                                                math.log10(x_max), H_GRID - 1)))

    def scan(points, predicate, value):
        worst = math.inf
        for (S, x) in points:
            val = value(S, x)
            if not predicate(val):
                return HypothesisStatus(VIOLATED, witness=(S, x), residual=float(val))
            worst = min(worst, abs(val))
        return HypothesisStatus(VERIFIED_ON_GRID, residual=float(worst))

    grid_Sx = [(float(S), float(x)) for S in S_grid for x in x_grid]

    # H0: mu(0, x) = 0 and mu(S, x) > 0 for S > 0
    h0 = scan([(0.0, float(x)) for x in x_grid], lambda v: abs(v) <= 1e-12,
              lambda S, x: reduced.mu(S, x))
    if h0.status != VIOLATED:
        h0 = scan(grid_Sx, lambda v: v > 0.0, lambda S, x: reduced.mu(S, x))

    # H1: dmu/dS > 0 and dmu/dx < 0
    h1 = scan(grid_Sx, lambda v: v > 0.0, lambda S, x: reduced.dmu_dS(S, x))
    if h1.status != VIOLATED:
        h1 = scan(grid_Sx, lambda v: v < 0.0, lambda S, x: reduced.dmu_dx(S, x))

    # H2: d(0)=D0, d(inf)=D1<D0<=D, d>0, d'(x)<0, [x d(x)]'>0
    h2 = None
    if abs(reduced.d(0.0) - reduced.D0) > 1e-12:
        h2 = HypothesisStatus(VIOLATED, witness=(0.0, 0.0),
                              residual=abs(reduced.d(0.0) - reduced.D0),
                              note="d(0) != D0")
    elif not (reduced.D1 < reduced.D0 <= D):
        h2 = HypothesisStatus(VIOLATED, witness=(0.0, 0.0),
                              residual=float(reduced.D0 - reduced.D1),
                              note="requires D1 < D0 <= D")
    else:
        x_inf = INF_PROXY * x_max
        d_inf = reduced.d(x_inf)
        if abs(d_inf - reduced.D1) > 1e-3 * max(reduced.D0 - reduced.D1, 1e-12):
            h2 = HypothesisStatus(
                VIOLATED, witness=(0.0, x_inf), residual=abs(d_inf - reduced.D1),
                note=f"d at the infinity proxy x={x_inf:g} does not approach D1",
            )
    if h2 is None:
        pts = [(0.0, float(x)) for x in x_grid]
        h2 = scan(pts, lambda v: v > 0.0, lambda S, x: reduced.d(x))
        if h2.status != VIOLATED:
            h2 = scan(pts, lambda v: v < 0.0, lambda S, x: reduced.d_prime(x))
        if h2.status != VIOLATED:
            h2 = scan(pts, lambda v: v > 0.0,
                      lambda S, x: reduced.d(x) + x * reduced.d_prime(x))

    def strip(lo, hi, flip):
        span = [float(S) for S in S_grid if lo <= S < hi] or [lo]
        pts = [(S, float(x)) for S in span for x in x_grid]
        if flip:
            return scan(pts, lambda v: v < 0.0,
                        lambda S, x: reduced.d_prime(x) - reduced.dmu_dx(S, x))
        return scan(pts, lambda v: v > 0.0,
                    lambda S, x: reduced.d_prime(x) - reduced.dmu_dx(S, x))

    h3 = strip(lam.lambda0, min(lam.lambda1, S_hi), flip=False) \
        if lam.lambda0 < lam.lambda1 and math.isfinite(lam.lambda0) else na
    h4 = strip(lam.lambda1, min(lam.lambda0, S_hi), flip=True) \
        if lam.lambda1 < lam.lambda0 and math.isfinite(lam.lambda1) else na
    return HypothesisReport(h0=h0, h1=h1, h2=h2, h3=h3, h4=h4)


# ---------------------------------------------------------------------------
# separatrix


def _stable_eigvector(jac):
    eigs = eigenvalues(jac)
    lam = min(eigs, key=lambda z: z.real).real  # the negative (stable) one
    a, b = jac[0, 0], jac[0, 1]
    c, d = jac[1, 0], jac[1, 1]
    v1 = np.array([b, lam - a])
    v2 = np.array([lam - d, c])
    v = v1 if np.linalg.norm(v1) >= np.linalg.norm(v2) else v2
    return v / np.linalg.norm(v)


def separatrix(reduced: ReducedModel, D: float, S_in: float, saddle: Equilibrium,
               span: float = SPAN_CAP, config: IntegratorConfig = None):
    """Both branches of the saddle's stable manifold, traced in reverse time.

    Seeds sit at +/- delta along the stable eigenvector; each branch is a
    polyline of (S, x) rows clipped to S in [0, S_in + 1], x in [0, x_max].
    """
    if saddle.classification != SADDLE:
        raise DomainError(
            f"separatrix requires a saddle, got {saddle.classification!r}"
        )
    cfg = config or IntegratorConfig()
    span = min(span, SPAN_CAP)
    x_max = x_scan_limit(reduced, D, S_in)
    vec = _stable_eigvector(saddle.jacobian)
    delta = SEED_OFFSET_REL * max(1.0, abs(saddle.S) + abs(saddle.x))

    sys = reduced.system(D, S_in)

    def reverse_rhs(t, y):
        return -sys.rhs(t, y)

    def in_box(pt):
        return -1e-12 <= pt[0] <= S_in + 1.0 and -1e-12 <= pt[1] <= x_max

    branches = []
    for sign in (+1.0, -1.0):
        pts = [np.array([saddle.S, saddle.x]) + sign * delta * vec]
        t_done = 0.0
        chunk = 2.0
        while t_done < span:
            t_next = min(t_done + chunk, span)
            try:
                traj = integrate(reverse_rhs, pts[-1], (t_done, t_next), cfg)
            except Exception:
                break
            states = traj.states[1:]
            inside = [st for st in states if in_box(st)]
            pts.extend(inside)
            if len(inside) < len(states):
                break
            t_done = t_next
        branches.append(np.array(pts))
    return branches[0], branches[1]
