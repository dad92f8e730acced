"""Slow/fast reduction of the flocculation models.

On the fast timescale the attachment/detachment exchange equilibrates on
the manifold alpha*u = beta*v with u + v = x, so u = p*x for a planktonic
fraction p. Replacing the fast variables yields a chemostat model whose
growth rate mu(S, x) and apparent removal rate d(x) are density dependent.
This module computes the manifold, builds the reduced models (single and
multi-species), and measures how fast full-model trajectories converge to
reduced ones as the timescale separation epsilon shrinks.
"""

import math
from dataclasses import dataclass, replace
from typing import NamedTuple, Optional

import numpy as np

from .backend import System, simulate
from .errors import ConfigError, DomainError, NumericsError
from .models import (
    CLAMP_TOL,
    AttachmentKinetics,
    Constant,
    Freter,
    FullModel,
    GrowthLaw,
    MassAction,
    MultiSpeciesModel,
    SubstrateDependent,
    TotalDensity,
    _encode_growth,
)
from .numerics import IntegratorConfig, find_root


# ---------------------------------------------------------------------------
# slow manifold


def _balance_bracket(kinetics, x, S, g_at_S):
    lo = 0.0
    if isinstance(kinetics, Freter):
        lo = max(0.0, x - kinetics.v_max)
    return lo, x


def _balance(kinetics, x, S, g_at_S, u):
    v = x - u
    al = kinetics.alpha(S, u, v, g_at_S=g_at_S)
    be = kinetics.beta(S, u, v, g_at_S=g_at_S)
    return al * u - be * v


def slow_manifold_u_generic(kinetics: AttachmentKinetics, x: float, S: float = 0.0,
                            g_at_S: float = 0.0) -> float:
    """Solve the attachment balance alpha*u = beta*(x-u) by bracketed root-solve.

    Works for every kinetics variant; used as the independent check of the
    closed forms in :func:`slow_manifold_u`.
    """
    if x < 0.0 or S < 0.0:
        raise DomainError(f"x and S must be nonnegative, got x={x}, S={S}")
    if x == 0.0:
        return 0.0
    lo, hi = _balance_bracket(kinetics, x, S, g_at_S)
    f_lo = _balance(kinetics, x, S, g_at_S, lo)
    f_hi = _balance(kinetics, x, S, g_at_S, hi)
    if f_lo == 0.0:
        return lo
    if f_hi == 0.0:
        return hi
    if (f_lo > 0.0) == (f_hi > 0.0):
        # alpha, beta >= 0 force opposite signs at the bracket ends
        raise NumericsError(
            f"internal: attachment balance has no sign change on [{lo}, {hi}] "
            f"for {kinetics!r} at x={x}, S={S}"
        )
    res = find_root(lambda u: _balance(kinetics, x, S, g_at_S, u), lo, hi,
                    tol=1e-14 * max(1.0, x))
    return res.root


def slow_manifold_u(kinetics: AttachmentKinetics, x: float, S: float = 0.0,
                    g_at_S: float = 0.0) -> float:
    """Planktonic biomass u on the slow manifold, given total biomass x.

    Closed forms are used where they exist; the Freter variant falls back
    to a monotone root-solve of the balance on [0, x].
    """
    if x < 0.0 or S < 0.0:
        raise DomainError(f"x and S must be nonnegative, got x={x}, S={S}")
    if isinstance(kinetics, Constant):
        return kinetics.b * x / (kinetics.a + kinetics.b)
    if isinstance(kinetics, TotalDensity):
        return kinetics.b * x / (kinetics.b + kinetics.a * x)
    if isinstance(kinetics, MassAction):
        ratio = kinetics.a / kinetics.b
        return x * 2.0 / (1.0 + math.sqrt(1.0 + 4.0 * ratio * x))
    if isinstance(kinetics, SubstrateDependent):
        al = kinetics.alpha_map.value(S)
        be = kinetics.beta_map.value(S)
        if al + be == 0.0:
            # both maps vanish (e.g. Monod-like at S=0): take the rate-ratio limit
            alp = kinetics.alpha_map.derivative(S)
            bep = kinetics.beta_map.derivative(S)
            if alp + bep == 0.0:
                raise DomainError("substrate-dependent rates vanish identically")
            return bep * x / (alp + bep)
        return be * x / (al + be)
    return slow_manifold_u_generic(kinetics, x, S, g_at_S)


# ---------------------------------------------------------------------------
# planktonic fraction maps with partial derivatives


class PlanktonicFraction:
    """p(S, x) on the slow manifold plus its partial derivatives.

    ``s_dependent`` tells whether p genuinely varies with S; the x-only
    fractions accept numpy arrays in x.
    """

    s_dependent = False

    def value(self, S, x):
        raise NotImplementedError

    def d_dx(self, S, x):
        raise NotImplementedError

    def d_dS(self, S, x):
        return np.zeros_like(x, dtype=float) if isinstance(x, np.ndarray) else 0.0

    def _encode(self):
        return None


@dataclass(frozen=True)
class ConstantFraction(PlanktonicFraction):
    a: float
    b: float

    def value(self, S, x):
        p = self.b / (self.a + self.b)
        return np.full_like(np.asarray(x, dtype=float), p) if isinstance(x, np.ndarray) else p

    def d_dx(self, S, x):
        return np.zeros_like(x, dtype=float) if isinstance(x, np.ndarray) else 0.0

    def _encode(self):
        return (0.0, (self.a, 0.0, 0.0), (self.b, 0.0, 0.0))


@dataclass(frozen=True)
class TotalDensityFraction(PlanktonicFraction):
    a: float
    b: float

    def value(self, S, x):
        return self.b / (self.b + self.a * x)

    def d_dx(self, S, x):
        return -self.a * self.b / (self.b + self.a * x) ** 2

    def _encode(self):
        return (3.0, (self.a, 0.0, 0.0), (self.b, 0.0, 0.0))


@dataclass(frozen=True)
class MassActionFraction(PlanktonicFraction):
    a: float
    b: float

    def value(self, S, x):
        r = np.sqrt(1.0 + 4.0 * (self.a / self.b) * x)
        return 2.0 / (1.0 + r)

    def d_dx(self, S, x):
        ratio = self.a / self.b
        r = np.sqrt(1.0 + 4.0 * ratio * x)
        return -4.0 * ratio / (r * (1.0 + r) ** 2)

    def _encode(self):
        return (2.0, (self.a, 0.0, 0.0), (self.b, 0.0, 0.0))


@dataclass(frozen=True)
class SubstrateFraction(PlanktonicFraction):
    alpha_map: GrowthLaw
    beta_map: GrowthLaw
    s_dependent = True

    def value(self, S, x):
        al = self.alpha_map.value(S)
        be = self.beta_map.value(S)
        if al + be == 0.0:
            alp = self.alpha_map.derivative(S)
            bep = self.beta_map.derivative(S)
            return bep / (alp + bep)
        return be / (al + be)

    def d_dx(self, S, x):
        return 0.0

    def d_dS(self, S, x):
        al = self.alpha_map.value(S)
        be = self.beta_map.value(S)
        alp = self.alpha_map.derivative(S)
        bep = self.beta_map.derivative(S)
        denom = (al + be) ** 2
        if denom == 0.0:
            return 0.0
        return (bep * al - be * alp) / denom

    def _encode(self):
        try:
            ea = _encode_growth(self.alpha_map)
            eb = _encode_growth(self.beta_map)
        except ConfigError:
            return None
        return (1.0, ea, eb)


@dataclass(frozen=True)
class FreterFraction(PlanktonicFraction):
    """Implicit fraction for Freter kinetics, differentiated through the balance."""

    kinetics: Freter
    g: GrowthLaw
    s_dependent = True

    def value(self, S, x):
        if x <= 0.0:
            kin = self.kinetics
            return kin.b / (kin.a + kin.b)
        u = slow_manifold_u(self.kinetics, x, S, g_at_S=self.g.value(S))
        return u / x

    def _ift_terms(self, S, x):
        # balance B(u; S, x) = alpha(W) u - beta(S, W) (x - u), W = (x-u)/v_max
        kin = self.kinetics
        g_S = self.g.value(S)
        u = slow_manifold_u(kin, x, S, g_at_S=g_S)
        v = x - u
        W = v / kin.v_max
        al = kin.a * (1.0 - W)
        be = kin.b + g_S * (1.0 - kin.G(W))
        Gp = kin.g_prime_of_W(W)
        B_u = al + be + (kin.a * u) / kin.v_max - v * g_S * Gp / kin.v_max
        B_x = -(kin.a * u) / kin.v_max + g_S * Gp * v / kin.v_max - be
        B_S = -self.g.derivative(S) * (1.0 - kin.G(W)) * v
        return u, B_u, B_x, B_S

    def d_dx(self, S, x):
        x_eval = max(x, 1e-9)  # one-sided limit at the x=0 boundary
        u, B_u, B_x, _ = self._ift_terms(S, x_eval)
        du_dx = -B_x / B_u
        return (du_dx - u / x_eval) / x_eval

    def d_dS(self, S, x):
        x_eval = max(x, 1e-9)
        _, B_u, _, B_S = self._ift_terms(S, x_eval)
        du_dS = -B_S / B_u
        return du_dS / x_eval


# ---------------------------------------------------------------------------
# reduced single-species model


@dataclass(frozen=True)
class ReducedModel:
    """Density-dependent chemostat pair mu(S, x), d(x) with partials.

    ``d`` depends only on x whenever the planktonic fraction does
    (constant, mass-action, and total-density kinetics); the S-dependent
    variants require the substrate level to be passed explicitly.
    """

    f: GrowthLaw
    g: GrowthLaw
    D0: float
    D1: float
    fraction: PlanktonicFraction
    source: Optional[FullModel] = None

    @property
    def s_dependent(self) -> bool:
        return self.fraction.s_dependent

    def p(self, S, x):
        return self.fraction.value(S, x)

    def mu(self, S, x):
        p = self.fraction.value(S, x)
        return p * self.f.value(S) + (1.0 - p) * self.g.value(S)

    def dmu_dS(self, S, x):
        p = self.fraction.value(S, x)
        out = p * self.f.derivative(S) + (1.0 - p) * self.g.derivative(S)
        if self.s_dependent:
            out = out + self.fraction.d_dS(S, x) * (self.f.value(S) - self.g.value(S))
        return out

    def dmu_dx(self, S, x):
        return self.fraction.d_dx(S, x) * (self.f.value(S) - self.g.value(S))

    def _require_S(self, S):
        if self.s_dependent and S is None:
            raise DomainError(
                "apparent removal rate depends on S for this kinetics; pass S"
            )
        return 0.0 if S is None else S

    def d(self, x, S=None):
        S = self._require_S(S)
        p = self.fraction.value(S, x)
        return p * self.D0 + (1.0 - p) * self.D1

    def d_prime(self, x, S=None):
        S = self._require_S(S)
        return self.fraction.d_dx(S, x) * (self.D0 - self.D1)

    def mu_sup(self, x):
        """sup over S of mu(S, x); only meaningful for x-only fractions."""
        if self.s_dependent:
            raise DomainError("mu_sup is defined only for x-only fractions")
        p = self.fraction.value(0.0, x)
        return p * self.f.sup + (1.0 - p) * self.g.sup

    # -- simulation ---------------------------------------------------------

    def rhs_values(self, D, S_in, S, x):
        m = self.mu(S, x)
        dd = self.d(x, S=S if self.s_dependent else None)
        return D * (S_in - S) - m * x, (m - dd) * x

    def system(self, D, S_in) -> System:
        def rhs(t, y):
            S = max(y[0], 0.0)
            x = max(y[1], 0.0)
            dS, dx = self.rhs_values(D, S_in, S, x)
            return np.array((dS, dx))

        packed = None
        enc = self.fraction._encode()
        if enc is not None:
            pkind, ea, eb = enc
            params = [D, S_in, self.D0, self.D1,
                      *_encode_growth(self.f), *_encode_growth(self.g),
                      pkind, *ea, *eb, CLAMP_TOL]
            packed = ("reduced_single", np.array(params, dtype=float))
        return System(rhs=rhs, packed=packed, columns=["S", "x"])


def reduce(model: FullModel) -> ReducedModel:
    """Build the density-dependent reduced model of a full model."""
    kin = model.kinetics
    if isinstance(kin, Constant):
        fraction = ConstantFraction(kin.a, kin.b)
    elif isinstance(kin, TotalDensity):
        fraction = TotalDensityFraction(kin.a, kin.b)
    elif isinstance(kin, MassAction):
        fraction = MassActionFraction(kin.a, kin.b)
    elif isinstance(kin, SubstrateDependent):
        if kin.beta_map.sup == 0.0:
            raise ConfigError("beta map must not vanish identically (p would be 0)")
        fraction = SubstrateFraction(kin.alpha_map, kin.beta_map)
    elif isinstance(kin, Freter):
        fraction = FreterFraction(kin, model.g)
    else:
        raise ConfigError(f"unknown kinetics variant {kin!r}")
    return ReducedModel(f=model.f, g=model.g, D0=model.D0, D1=model.D1,
                        fraction=fraction, source=model)


# ---------------------------------------------------------------------------
# reduced multi-species model


@dataclass(frozen=True)
class MultiReduced:
    """Reduced n-species model with coupled fractions p_i = b_i / (b_i + (A x)_i)."""

    source: MultiSpeciesModel

    @property
    def n(self):
        return self.source.n

    @property
    def D(self):
        return self.source.D

    @property
    def S_in(self):
        return self.source.S_in

    @property
    def diagonal(self) -> bool:
        return self.source.diagonal

    def p(self, x):
        x = np.asarray(x, dtype=float)
        return self.source.B / (self.source.B + self.source.A @ x)

    def qss_u(self, x):
        """Quasi-steady-state planktonic biomasses u_i = p_i(x) x_i."""
        return self.p(x) * np.asarray(x, dtype=float)

    def mu(self, S, x):
        p = self.p(x)
        return p * self.source.growth_f(S) + (1.0 - p) * self.source.growth_g(S)

    def d(self, x):
        p = self.p(x)
        return p * self.source._D0v + (1.0 - p) * self.source._D1v

    def species(self) -> tuple:
        """Per-species ReducedModel views (diagonal attachment only)."""
        if not self.diagonal:
            raise ConfigError("per-species reduction requires a diagonal attachment matrix")
        src = self.source
        out = []
        for i in range(self.n):
            fraction = TotalDensityFraction(float(src.A[i, i]), float(src.B[i]))
            out.append(ReducedModel(f=src.f[i], g=src.g[i], D0=src.D0[i],
                                    D1=src.D1[i], fraction=fraction))
        return tuple(out)

    def system(self) -> System:
        src = self.source

        def rhs(t, y):
            S = max(y[0], 0.0)
            x = np.maximum(y[1:], 0.0)
            m = self.mu(S, x)
            dd = self.d(x)
            dS = src.D * (src.S_in - S) - float(np.dot(m, x))
            return np.concatenate(([dS], (m - dd) * x))

        n = src.n
        head = [src.D, src.S_in, float(n), CLAMP_TOL]
        per = []
        for i in range(n):
            per.extend([src._fmu[i], src._fK[i], src._gmu[i], src._gK[i],
                        src.D0[i], src.D1[i], src.B[i], 0.0])
        params = np.array(head + per + list(src.A.ravel()), dtype=float)
        return System(rhs=rhs, packed=("reduced_multi", params),
                      columns=["S"] + [f"x{i + 1}" for i in range(n)])


def reduce_multi(model: MultiSpeciesModel) -> MultiReduced:
    """Reduced model of the n-species system (coupled fractions in general)."""
    return MultiReduced(source=model)


# ---------------------------------------------------------------------------
# Tikhonov convergence sweeps


class ConvergenceRow(NamedTuple):
    epsilon: float
    err_S: float
    err_x: float
    err_u: float
    err_v: float
    failed: bool = False
    message: str = ""


@dataclass
class ConvergenceTable:
    """Sup-norm errors of full vs reduced trajectories, one row per epsilon."""

    rows: list

    def __post_init__(self):
        eps = [r.epsilon for r in self.rows]
        if any(e <= 0.0 for e in eps):
            raise ConfigError("epsilons must be positive")
        if any(b >= a for a, b in zip(eps, eps[1:])):
            raise ConfigError("epsilons must be strictly decreasing")
        for r in self.rows:
            if not r.failed and min(r.err_S, r.err_x, r.err_u, r.err_v) < 0.0:
                raise ConfigError("errors must be nonnegative")

    def csv_text(self) -> str:
        lines = ["epsilon,err_S,err_x,err_u,err_v"]
        for r in self.rows:
            lines.append(",".join(repr(float(v)) for v in
                                  (r.epsilon, r.err_S, r.err_x, r.err_u, r.err_v)))
        return "\n".join(lines) + "\n"

    def write_csv(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(self.csv_text())


def _check_sweep_args(T, t0, epsilons):
    if not (0.0 < t0 < T):
        raise ConfigError(f"t0 must lie in (0, T), got t0={t0}, T={T}")
    eps = [float(e) for e in epsilons]
    if not eps or any(e <= 0.0 for e in eps):
        raise ConfigError("epsilons must be positive")
    if any(b >= a for a, b in zip(eps, eps[1:])):
        raise ConfigError("epsilons must be strictly decreasing")
    return eps


def tikhonov_convergence(model: FullModel, init, T: float, t0: float,
                         epsilons, config: IntegratorConfig = None) -> ConvergenceTable:
    """Sweep epsilon and measure how the full model approaches the reduced one.

    S and x errors are sup-norms over [0, T] on a shared uniform output
    grid; u and v are compared over [t0, T] only, against the slow-manifold
    values computed from the reduced trajectory (the boundary layer near
    t = 0 is excluded by construction).
    """
    cfg = config or IntegratorConfig()
    eps_list = _check_sweep_args(T, t0, epsilons)
    S0, u0, v0 = float(init[0]), float(init[1]), float(init[2])
    if u0 <= 0.0:
        raise ConfigError(f"initial planktonic biomass must be positive, got {u0}")

    reduced = reduce(model)
    red_traj = simulate(reduced.system(model.D, model.S_in),
                        np.array([S0, u0 + v0]), (0.0, T), cfg)
    grid = np.linspace(0.0, T, cfg.grid_size)
    red = red_traj.sample(grid)
    S_bar, x_bar = red[:, 0], red[:, 1]
    if reduced.s_dependent:
        p_bar = np.array([reduced.p(s, x) for s, x in zip(S_bar, x_bar)])
    else:
        p_bar = reduced.p(0.0, x_bar)
    u_pred = p_bar * x_bar
    v_pred = x_bar - u_pred
    layer_mask = grid >= t0

    rows = []
    for eps in eps_list:
        full = replace(model, epsilon=eps)
        try:
            traj = simulate(full.system(), np.array([S0, u0, v0]), (0.0, T), cfg)
        except Exception as exc:  # keep the sweep; mark the row
            rows.append(ConvergenceRow(eps, math.nan, math.nan, math.nan, math.nan,
                                       failed=True, message=str(exc)))
            continue
        vals = traj.sample(grid)
        S_f, u_f, v_f = vals[:, 0], vals[:, 1], vals[:, 2]
        rows.append(ConvergenceRow(
            eps,
            float(np.max(np.abs(S_f - S_bar))),
            float(np.max(np.abs(u_f + v_f - x_bar))),
            float(np.max(np.abs(u_f[layer_mask] - u_pred[layer_mask]))),
            float(np.max(np.abs(v_f[layer_mask] - v_pred[layer_mask]))),
        ))
    return ConvergenceTable(rows)


def tikhonov_convergence_multi(model: MultiSpeciesModel, init, T: float, t0: float,
                               epsilons, config: IntegratorConfig = None) -> ConvergenceTable:
    """Multi-species analog of :func:`tikhonov_convergence`.

    Error columns take the sup over time and over species.
    """
    cfg = config or IntegratorConfig()
    eps_list = _check_sweep_args(T, t0, epsilons)
    S0 = float(init[0])
    u0 = np.asarray(init[1], dtype=float)
    v0 = np.asarray(init[2], dtype=float)
    n = model.n
    if u0.shape != (n,) or v0.shape != (n,):
        raise ConfigError(f"initial u, v must have length {n}")
    if np.any(u0 <= 0.0):
        raise ConfigError("initial planktonic biomasses must all be positive")

    reduced = reduce_multi(model)
    red_traj = simulate(reduced.system(), np.concatenate(([S0], u0 + v0)), (0.0, T), cfg)
    grid = np.linspace(0.0, T, cfg.grid_size)
    red = red_traj.sample(grid)
    S_bar = red[:, 0]
    x_bar = red[:, 1:]
    u_pred = np.array([reduced.qss_u(x) for x in x_bar])
    v_pred = x_bar - u_pred
    layer_mask = grid >= t0

    rows = []
    for eps in eps_list:
        full = replace(model, epsilon=eps)
        try:
            traj = simulate(full.system(), np.concatenate(([S0], u0, v0)), (0.0, T), cfg)
        except Exception as exc:
            rows.append(ConvergenceRow(eps, math.nan, math.nan, math.nan, math.nan,
                                       failed=True, message=str(exc)))
            continue
        vals = traj.sample(grid)
        S_f = vals[:, 0]
        u_f = vals[:, 1:1 + n]
        v_f = vals[:, 1 + n:]
        x_f = u_f + v_f
        rows.append(ConvergenceRow(
            eps,
            float(np.max(np.abs(S_f - S_bar))),
            float(np.max(np.abs(x_f - x_bar))),
            float(np.max(np.abs(u_f[layer_mask] - u_pred[layer_mask]))),
            float(np.max(np.abs(v_f[layer_mask] - v_pred[layer_mask]))),
        ))
    return ConvergenceTable(rows)
