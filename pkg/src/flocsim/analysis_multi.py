"""Positive equilibrium of the n-species reduced model with diagonal attachment.

Each species carries its own density-dependent pair mu_i(S, x_i), d_i(x_i).
The per-species consumption h_i(S) = mu_i(S, X_i(S)) X_i(S) is zero up to
the break-even lambda_0i and increases up to lambda_1i, so the total
consumption curve crosses the supply line D (S_in - S) at most once below
lambda_1_tilde = min_i lambda_1i. Existence of the positive equilibrium
reduces to a strict inequality at lambda_0_tilde = max_i lambda_0i, and
its Jacobian has an arrowhead structure whose eigenvalues all lie in the
left half plane.
"""

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import ConfigError, DomainError, NumericsError
from .numerics import eigenvalues, find_root
from .reduction import MultiReduced, ReducedModel
from .analysis_single import VIOLATED, break_even, check_hypotheses

S_STAR_BISECT_REL = 1e-12   # bisection target |dS| <= this * lambda1_tilde
S_STAR_MAX_ITER = 200


@dataclass(frozen=True)
class MultiReducedModel:
    """Diagonal-attachment reduced model: independent species, shared substrate."""

    D: float
    S_in: float
    species: tuple

    def __post_init__(self):
        if len(self.species) < 1:
            raise ConfigError("at least one species is required")
        object.__setattr__(self, "species", tuple(self.species))
        for i, sp in enumerate(self.species):
            if not isinstance(sp, ReducedModel):
                raise ConfigError(f"species {i} is not a ReducedModel")
            if sp.s_dependent:
                raise ConfigError(
                    f"species {i} has an S-dependent fraction; the diagonal "
                    "analysis requires d_i(x_i) only"
                )

    @classmethod
    def from_reduction(cls, reduced: MultiReduced) -> "MultiReducedModel":
        return cls(D=reduced.D, S_in=reduced.S_in, species=reduced.species())

    @property
    def n(self) -> int:
        return len(self.species)

    @cached_property
    def break_evens(self) -> tuple:
        return tuple(break_even(sp) for sp in self.species)

    @property
    def lambda0_tilde(self) -> float:
        return max(be.lambda0 for be in self.break_evens)

    @property
    def lambda1_tilde(self) -> float:
        return min(be.lambda1 for be in self.break_evens)


@dataclass(frozen=True)
class MultiEquilibrium:
    S_star: float
    x_star: np.ndarray
    jacobian: np.ndarray
    eigenvalues: tuple
    stable: bool

    def to_dict(self) -> dict:
        return {
            "S_star": float(self.S_star),
            "x_star": [float(v) for v in self.x_star],
            "jacobian": [[float(v) for v in row] for row in self.jacobian],
            "eigenvalues": [[z.real, z.imag] for z in self.eigenvalues],
            "stable": self.stable,
        }


def X_i(model: MultiReducedModel, i: int, S: float) -> float:
    """Biomass of species i balancing growth and removal at substrate S.

    Zero up to lambda_0i, then the unique root of mu_i(S, x) = d_i(x);
    defined only for S < lambda_1i.
    """
    be = model.break_evens[i]
    if S < 0.0:
        raise DomainError(f"S must be nonnegative, got {S}")
    if S >= be.lambda1:
        raise DomainError(f"X_{i} is defined on [0, {be.lambda1}), got S={S}")
    if S <= be.lambda0:
        return 0.0
    sp = model.species[i]

    def q(x):
        return sp.mu(S, x) - sp.d(x)

    hi = 1.0
    while q(hi) >= 0.0:
        hi *= 2.0
        if hi > 1e18:
            raise NumericsError(f"no upper bracket for X_{i} at S={S}")
    return find_root(q, 0.0, hi, tol=1e-13 * max(1.0, hi)).root


def h_i(model: MultiReducedModel, i: int, S: float) -> float:
    """Consumption rate mu_i(S, X_i(S)) X_i(S) of species i at equilibrium."""
    x = X_i(model, i, S)
    if x == 0.0:
        return 0.0
    return model.species[i].mu(S, x) * x


def H_function(model: MultiReducedModel, S: float) -> float:
    """Total consumption minus supply: sum_i h_i(S) - D (S_in - S)."""
    return sum(h_i(model, i, S) for i in range(model.n)) \
        - model.D * (model.S_in - S)


def verify_hypotheses(model: MultiReducedModel) -> None:
    """Raise DomainError naming every violated hypothesis (H5-H8)."""
    violations = []
    for i, sp in enumerate(model.species):
        report = check_hypotheses(sp, model.D, model.S_in)
        for name, mapped in (("h0", "H5"), ("h1", "H6"), ("h2", "H7")):
            if getattr(report, name).status == VIOLATED:
                violations.append(f"{mapped} (species {i + 1})")
        be = model.break_evens[i]
        if not be.lambda0 < be.lambda1:
            violations.append(f"H8 (species {i + 1}: lambda0 >= lambda1)")
        elif report.h3.status == VIOLATED:
            violations.append(f"H8 (species {i + 1}: d' <= dmu/dx on the strip)")
    if model.lambda0_tilde >= model.lambda1_tilde:
        violations.append("H9 (lambda0_tilde >= lambda1_tilde)")
    if violations:
        raise DomainError("hypothesis violations: " + ", ".join(violations))


def existence_criterion(model: MultiReducedModel) -> bool:
    """Strict inequality sum_i h_i(l0~) < D (S_in - l0~) deciding existence."""
    l0 = model.lambda0_tilde
    lhs = sum(h_i(model, i, l0) for i in range(model.n))
    return lhs < model.D * (model.S_in - l0)


def solve_positive_equilibrium(model: MultiReducedModel, check: bool = True):
    """The unique positive equilibrium, or None when the criterion fails.

    With ``check`` the hypotheses H5-H8 (and the structural part of H9) are
    verified first; violations raise. The equilibrium substrate level S* is
    bisected from the increasing total-consumption balance, the biomasses
    follow as X_i(S*), and the arrowhead Jacobian must have all eigenvalue
    real parts negative.
    """
    if check:
        verify_hypotheses(model)
    elif model.lambda0_tilde >= model.lambda1_tilde:
        raise DomainError("H9 violated: lambda0_tilde >= lambda1_tilde")

    if not existence_criterion(model):
        return None

    l0, l1 = model.lambda0_tilde, model.lambda1_tilde
    lo, f_lo = l0, H_function(model, l0)  # negative by the criterion
    if model.S_in < l1 and H_function(model, model.S_in) > 0.0:
        hi = model.S_in
    else:
        hi = None
        for k in range(1, 60):
            cand = l1 - (l1 - l0) * 0.5 ** k
            if H_function(model, cand) > 0.0:
                hi = cand
                break
        if hi is None:
            raise NumericsError("could not bracket S*: H stays negative below lambda1_tilde")

    tol = S_STAR_BISECT_REL * l1
    for _ in range(S_STAR_MAX_ITER):
        if hi - lo <= tol:
            break
        mid = 0.5 * (lo + hi)
        fm = H_function(model, mid)
        if fm == 0.0:
            lo = hi = mid
            break
        if (fm > 0.0) == (f_lo > 0.0):
            lo, f_lo = mid, fm
        else:
            hi = mid
    S_star = 0.5 * (lo + hi)
    x_star = np.array([X_i(model, i, S_star) for i in range(model.n)])

    a = np.empty(model.n)
    b = np.empty(model.n)
    c = np.empty(model.n)
    for i, sp in enumerate(model.species):
        xi = x_star[i]
        mu_x = sp.dmu_dx(S_star, xi)
        a[i] = sp.dmu_dS(S_star, xi) * xi
        b[i] = -mu_x * xi + xi * sp.d_prime(xi)
        c[i] = -mu_x * xi - sp.d(xi)
    jac = arrowhead_matrix(a, b, c, model.D)
    eigs = tuple(eigenvalues(jac))
    stable = max(z.real for z in eigs) < 0.0
    if not stable:
        raise NumericsError(
            f"positive equilibrium unexpectedly unstable: max Re = "
            f"{max(z.real for z in eigs)}"
        )
    return MultiEquilibrium(S_star=S_star, x_star=x_star, jacobian=jac,
                            eigenvalues=eigs, stable=stable)


def arrowhead_matrix(a, b, c, D: float) -> np.ndarray:
    """(n+1)x(n+1) matrix with dense first row/column and diagonal rest."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    c = np.asarray(c, dtype=float)
    if not (a.shape == b.shape == c.shape) or a.ndim != 1:
        raise ConfigError("a, b, c must be one-dimensional and of equal length")
    n = a.size
    M = np.zeros((n + 1, n + 1))
    M[0, 0] = -D - float(np.sum(a))
    M[0, 1:] = c
    M[1:, 0] = a
    M[np.arange(1, n + 1), np.arange(1, n + 1)] = -b
    return M


def arrowhead_stability(a, b, c, D: float) -> bool:
    """Whether the arrowhead matrix has all eigenvalue real parts negative."""
    eigs = eigenvalues(arrowhead_matrix(a, b, c, D))
    return max(z.real for z in eigs) < 0.0
