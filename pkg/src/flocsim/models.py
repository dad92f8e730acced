"""Growth laws, attachment/detachment kinetics, and the full ODE systems.

The model family is deliberately closed: growth is Monod or identically
zero, and attachment/detachment is one of five kinetics variants from the
flocculation literature (constant, substrate-dependent, mass-action,
total-density, Freter). A closed family keeps analytic derivatives and
inverses available everywhere and lets the compiled integration kernels
encode any model as a flat parameter block.

All types are immutable after construction; every operation is a pure
function of its arguments.
"""

from dataclasses import dataclass, field
from typing import Callable, NamedTuple, Optional, Union

import numpy as np

from .errors import ConfigError, DomainError

# Integrator overshoot in [-CLAMP_TOL, 0) is clamped to 0 before kinetics
# are evaluated; anything more negative is a genuine domain violation.
CLAMP_TOL = 1e-10


# ---------------------------------------------------------------------------
# growth laws


class GrowthLaw:
    """Per-capita growth rate with analytic derivative and inverse."""

    def value(self, S):
        raise NotImplementedError

    def derivative(self, S):
        raise NotImplementedError

    @property
    def sup(self) -> float:
        """Least upper bound of the rate over S >= 0."""
        raise NotImplementedError

    def inverse(self, rate: float) -> Optional[float]:
        """S with value(S) == rate, or None when the rate is unattainable."""
        raise NotImplementedError


@dataclass(frozen=True)
class Monod(GrowthLaw):
    mu_max: float
    K: float

    def __post_init__(self):
        if self.mu_max <= 0.0:
            raise ConfigError(f"Monod mu_max must be positive, got {self.mu_max}")
        if self.K <= 0.0:
            raise ConfigError(f"Monod K must be positive, got {self.K}")

    def value(self, S):
        return self.mu_max * S / (self.K + S)

    def derivative(self, S):
        return self.mu_max * self.K / (self.K + S) ** 2

    @property
    def sup(self) -> float:
        return self.mu_max

    def inverse(self, rate: float) -> Optional[float]:
        if rate < 0.0 or rate >= self.mu_max:
            return None
        return self.K * rate / (self.mu_max - rate)


@dataclass(frozen=True)
class Zero(GrowthLaw):
    """No growth; covers aggregates assumed not to consume substrate."""

    def value(self, S):
        return np.zeros_like(S, dtype=float) if isinstance(S, np.ndarray) else 0.0

    def derivative(self, S):
        return np.zeros_like(S, dtype=float) if isinstance(S, np.ndarray) else 0.0

    @property
    def sup(self) -> float:
        return 0.0

    def inverse(self, rate: float) -> Optional[float]:
        return 0.0 if rate == 0.0 else None


def growth_dominates(f: GrowthLaw, g: GrowthLaw) -> bool:
    """True iff f(S) > g(S) for every S > 0 (exact for the closed family)."""
    if isinstance(g, Zero):
        return isinstance(f, Monod)
    if isinstance(f, Zero):
        return False
    # Monod pair: f - g has the sign of (mf*Kg - mg*Kf) + (mf - mg) S on S > 0
    c0 = f.mu_max * g.K - g.mu_max * f.K
    c1 = f.mu_max - g.mu_max
    if c0 < 0.0 or c1 < 0.0:
        return False
    return c0 > 0.0 or c1 > 0.0


def _encode_growth(law: GrowthLaw) -> tuple[float, float, float]:
    if isinstance(law, Monod):
        return (1.0, law.mu_max, law.K)
    if isinstance(law, Zero):
        return (0.0, 0.0, 1.0)
    raise ConfigError(f"unknown growth law {law!r}")


# ---------------------------------------------------------------------------
# attachment / detachment kinetics


class AttachmentKinetics:
    """Rates alpha (attachment) and beta (detachment) as functions of state.

    ``g_at_S`` is the aggregate growth rate at the current substrate level;
    only the Freter variant uses it (its detachment includes displacement
    by growth on a saturating wall).
    """

    def alpha(self, S, u, v, g_at_S=0.0):
        raise NotImplementedError

    def beta(self, S, u, v, g_at_S=0.0):
        raise NotImplementedError

    def check_domain(self, S, u, v):
        """Raise DomainError when (S, u, v) is outside the variant's domain."""
        return None

    def _encode(self) -> Optional[tuple]:
        """(kind, alpha params, beta params, vmax) for the compiled kernel."""
        return None


def _positive(name, value):
    if value <= 0.0:
        raise ConfigError(f"{name} must be strictly positive, got {value}")
    return float(value)


@dataclass(frozen=True)
class Constant(AttachmentKinetics):
    a: float
    b: float

    def __post_init__(self):
        _positive("a", self.a)
        _positive("b", self.b)

    def alpha(self, S, u, v, g_at_S=0.0):
        return self.a

    def beta(self, S, u, v, g_at_S=0.0):
        return self.b

    def _encode(self):
        return (0.0, (self.a, 0.0, 0.0), (self.b, 0.0, 0.0), 0.0)


@dataclass(frozen=True)
class SubstrateDependent(AttachmentKinetics):
    """alpha and beta depend on S only, via GrowthLaw-like monotone maps."""

    alpha_map: GrowthLaw
    beta_map: GrowthLaw

    def alpha(self, S, u, v, g_at_S=0.0):
        return self.alpha_map.value(S)

    def beta(self, S, u, v, g_at_S=0.0):
        return self.beta_map.value(S)

    def _encode(self):
        try:
            ea = _encode_growth(self.alpha_map)
            eb = _encode_growth(self.beta_map)
        except ConfigError:
            return None
        return (1.0, ea, eb, 0.0)


@dataclass(frozen=True)
class MassAction(AttachmentKinetics):
    """alpha = a*u: flocks form from pairs of planktonic cells."""

    a: float
    b: float

    def __post_init__(self):
        _positive("a", self.a)
        _positive("b", self.b)

    def alpha(self, S, u, v, g_at_S=0.0):
        return self.a * u

    def beta(self, S, u, v, g_at_S=0.0):
        return self.b

    def _encode(self):
        return (2.0, (self.a, 0.0, 0.0), (self.b, 0.0, 0.0), 0.0)


@dataclass(frozen=True)
class TotalDensity(AttachmentKinetics):
    """alpha = a*(u+v): attachment to any biomass, planktonic or flocked."""

    a: float
    b: float

    def __post_init__(self):
        _positive("a", self.a)
        _positive("b", self.b)

    def alpha(self, S, u, v, g_at_S=0.0):
        return self.a * (u + v)

    def beta(self, S, u, v, g_at_S=0.0):
        return self.b

    def _encode(self):
        return (3.0, (self.a, 0.0, 0.0), (self.b, 0.0, 0.0), 0.0)


def _linear_G(W):
    return 1.0 - W


def _linear_G_prime(W):
    return -1.0


@dataclass(frozen=True)
class Freter(AttachmentKinetics):
    """Wall-attachment kinetics with occupancy W = v / v_max.

    ``G`` is any decreasing map [0,1] -> [0,1] with G(0) = 1; the default is
    the linear G(W) = 1 - W, a documented default rather than a modeling
    claim. ``G_prime`` may be supplied alongside a custom ``G``; otherwise
    a central difference is used for the derivative.
    """

    a: float
    b: float
    v_max: float
    G: Callable[[float], float] = field(default=_linear_G)
    G_prime: Optional[Callable[[float], float]] = field(default=_linear_G_prime)

    def __post_init__(self):
        _positive("a", self.a)
        _positive("b", self.b)
        _positive("v_max", self.v_max)
        if abs(self.G(0.0) - 1.0) > 1e-12:
            raise ConfigError("Freter G must satisfy G(0) = 1")
        if self.G(1.0) > self.G(0.0):
            raise ConfigError("Freter G must be decreasing on [0, 1]")

    def occupancy(self, v):
        return v / self.v_max

    def g_prime_of_W(self, W: float) -> float:
        if self.G_prime is not None:
            return self.G_prime(W)
        h = 1e-6
        lo, hi = max(0.0, W - h), min(1.0, W + h)
        return (self.G(hi) - self.G(lo)) / (hi - lo)

    def alpha(self, S, u, v, g_at_S=0.0):
        return self.a * (1.0 - self.occupancy(v))

    def beta(self, S, u, v, g_at_S=0.0):
        return self.b + g_at_S * (1.0 - self.G(self.occupancy(v)))

    def check_domain(self, S, u, v):
        if v > self.v_max:
            raise DomainError(
                f"Freter kinetics requires v <= v_max, got v={v} > {self.v_max}"
            )

    def _encode(self):
        if self.G is not _linear_G:
            return None  # only the default linear G is compiled
        return (4.0, (self.a, 0.0, 0.0), (self.b, 0.0, 0.0), self.v_max)


KineticsVariant = Union[Constant, SubstrateDependent, MassAction, TotalDensity, Freter]


# ---------------------------------------------------------------------------
# full single-species model


class FullState(NamedTuple):
    """Substrate, planktonic biomass, aggregated biomass (all nonnegative)."""

    S: float
    u: float
    v: float

    def as_array(self):
        return np.array(self, dtype=float)


class FullRate(NamedTuple):
    dS: float
    du: float
    dv: float


@dataclass(frozen=True)
class FullModel:
    """Three-compartment chemostat with flocculation: state (S, u, v).

    ``epsilon`` scales the attachment/detachment exchange; 1 means no
    timescale separation.
    """

    D: float
    S_in: float
    D0: float
    D1: float
    f: GrowthLaw
    g: GrowthLaw
    kinetics: AttachmentKinetics
    epsilon: float = 1.0

    def __post_init__(self):
        for name in ("D", "S_in", "D0", "D1"):
            _positive(name, getattr(self, name))
        if self.epsilon <= 0.0:
            raise ConfigError(f"epsilon must be positive, got {self.epsilon}")

    @property
    def paper_regime(self) -> bool:
        """Whether the removal rates sit in the regime D1 < D0 <= D."""
        return self.D1 < self.D0 <= self.D

    def pack(self):
        """Flat float block for the compiled kernel, or None if unsupported."""
        enc = self.kinetics._encode()
        if enc is None:
            return None
        kin_kind, ea, eb, vmax = enc
        fk = _encode_growth(self.f)
        gk = _encode_growth(self.g)
        params = [
            self.D, self.S_in, self.D0, self.D1, self.epsilon,
            *fk, *gk, kin_kind, *ea, *eb, vmax, CLAMP_TOL,
        ]
        return ("full_single", np.array(params, dtype=float))

    def make_rhs(self):
        """Closure rhs(t, y) for the generic integrator; clamps negatives."""
        def rhs(t, y):
            return _rhs_full_core(self, max(y[0], 0.0), max(y[1], 0.0),
                                  max(y[2], 0.0), clamp_freter=True)
        return rhs

    def system(self):
        from .backend import System

        return System(rhs=self.make_rhs(), packed=self.pack(), columns=["S", "u", "v"])


def _rhs_full_core(model: FullModel, S, u, v, clamp_freter=False):
    f_S = model.f.value(S)
    g_S = model.g.value(S)
    kin = model.kinetics
    if clamp_freter and isinstance(kin, Freter):
        v_eval = min(v, kin.v_max)
    else:
        v_eval = v
    al = kin.alpha(S, u, v_eval, g_at_S=g_S)
    be = kin.beta(S, u, v_eval, g_at_S=g_S)
    exchange = (al * u - be * v) / model.epsilon
    dS = model.D * (model.S_in - S) - f_S * u - g_S * v
    du = (f_S - model.D0) * u - exchange
    dv = (g_S - model.D1) * v + exchange
    return np.array((dS, du, dv))


def _clamped(name, value):
    if value < -CLAMP_TOL:
        raise DomainError(f"{name} must be nonnegative, got {value}")
    return max(value, 0.0)


def rhs_full(model: FullModel, state: FullState) -> FullRate:
    """Right-hand side of the full model at ``state``.

    The attachment exchange term is computed once and applied with opposite
    signs, so du + dv is exactly the biomass growth/removal balance.
    """
    S = _clamped("S", state[0])
    u = _clamped("u", state[1])
    v = _clamped("v", state[2])
    model.kinetics.check_domain(S, u, v)
    dS, du, dv = _rhs_full_core(model, S, u, v)
    return FullRate(float(dS), float(du), float(dv))


# ---------------------------------------------------------------------------
# multi-species model


@dataclass(frozen=True)
class MultiSpeciesModel:
    """n species, each split into planktonic and flocked compartments.

    Attachment couples species through the matrix ``A``: species i attaches
    at rate sum_j A[i, j] * (u_j + v_j) and detaches at rate B[i], both
    scaled by 1/epsilon.
    """

    D: float
    S_in: float
    f: tuple
    g: tuple
    D0: tuple
    D1: tuple
    A: np.ndarray
    B: np.ndarray
    epsilon: float = 1.0

    def __post_init__(self):
        _positive("D", self.D)
        _positive("S_in", self.S_in)
        if self.epsilon <= 0.0:
            raise ConfigError(f"epsilon must be positive, got {self.epsilon}")
        n = len(self.f)
        if n < 1:
            raise ConfigError("at least one species is required")
        if not (len(self.g) == len(self.D0) == len(self.D1) == n):
            raise ConfigError("per-species parameter lists must share one length")
        object.__setattr__(self, "f", tuple(self.f))
        object.__setattr__(self, "g", tuple(self.g))
        object.__setattr__(self, "D0", tuple(float(x) for x in self.D0))
        object.__setattr__(self, "D1", tuple(float(x) for x in self.D1))
        A = np.array(self.A, dtype=float)
        B = np.array(self.B, dtype=float)
        if A.shape != (n, n):
            raise ConfigError(f"attachment matrix must be {n}x{n}, got {A.shape}")
        if B.shape != (n,):
            raise ConfigError(f"detachment vector must have length {n}")
        if np.any(A < 0.0):
            raise ConfigError("attachment matrix entries must be nonnegative")
        if np.any(np.all(A <= 0.0, axis=1)):
            raise ConfigError("every attachment matrix row needs a positive entry")
        if np.any(B <= 0.0):
            raise ConfigError("detachment rates must be strictly positive")
        if any(d <= 0.0 for d in self.D0) or any(d <= 0.0 for d in self.D1):
            raise ConfigError("removal rates must be strictly positive")
        A.setflags(write=False)
        B.setflags(write=False)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "B", B)
        fmu, fK = zip(*(_encode_growth(law)[1:] for law in self.f))
        gmu, gK = zip(*(_encode_growth(law)[1:] for law in self.g))
        object.__setattr__(self, "_fmu", np.array(fmu))
        object.__setattr__(self, "_fK", np.array(fK))
        object.__setattr__(self, "_gmu", np.array(gmu))
        object.__setattr__(self, "_gK", np.array(gK))
        object.__setattr__(self, "_D0v", np.array(self.D0))
        object.__setattr__(self, "_D1v", np.array(self.D1))

    @property
    def n(self) -> int:
        return len(self.f)

    def growth_f(self, S):
        return self._fmu * S / (self._fK + S)

    def growth_g(self, S):
        return self._gmu * S / (self._gK + S)

    @property
    def diagonal(self) -> bool:
        return bool(np.all(self.A == np.diag(np.diag(self.A))))

    def pack(self):
        n = self.n
        head = [self.D, self.S_in, self.epsilon, float(n), CLAMP_TOL]
        per = []
        for i in range(n):
            per.extend([self._fmu[i], self._fK[i], self._gmu[i], self._gK[i],
                        self.D0[i], self.D1[i], self.B[i], 0.0])
        params = np.array(head + per + list(self.A.ravel()), dtype=float)
        return ("full_multi", params)

    def make_rhs(self):
        def rhs(t, y):
            return _rhs_multi_core(self, np.maximum(y, 0.0))
        return rhs

    def system(self):
        from .backend import System

        n = self.n
        cols = ["S"] + [f"u{i + 1}" for i in range(n)] + [f"v{i + 1}" for i in range(n)]
        return System(rhs=self.make_rhs(), packed=self.pack(), columns=cols)


def _rhs_multi_core(model: MultiSpeciesModel, y):
    n = model.n
    S = y[0]
    u = y[1:1 + n]
    v = y[1 + n:]
    f_S = model.growth_f(S)
    g_S = model.growth_g(S)
    x = u + v
    alpha = (model.A @ x) / model.epsilon
    beta = model.B / model.epsilon
    exchange = alpha * u - beta * v
    dS = model.D * (model.S_in - S) - float(np.dot(f_S, u) + np.dot(g_S, v))
    du = (f_S - model._D0v) * u - exchange
    dv = (g_S - model._D1v) * v + exchange
    return np.concatenate(([dS], du, dv))


def rhs_multi(model: MultiSpeciesModel, state) -> np.ndarray:
    """Right-hand side of the n-species model at ``state = (S, u_1..u_n, v_1..v_n)``."""
    y = np.asarray(state, dtype=float)
    if y.shape != (1 + 2 * model.n,):
        raise ConfigError(
            f"state must have length {1 + 2 * model.n}, got shape {y.shape}"
        )
    if np.any(y < -CLAMP_TOL):
        raise DomainError(f"state components must be nonnegative, got {y.min()}")
    return _rhs_multi_core(model, np.maximum(y, 0.0))
