import math

import numpy as np
import pytest

import flocsim as fs
from flocsim import analysis_multi as many
from flocsim import analysis_single as one
from flocsim.backend import simulate
from flocsim.errors import ConfigError, DomainError

from conftest import random_multi_model

# pinned by the pre-build fine-grid oracle for the three-species fixture
FIXTURE_S_STAR = 0.5235011046443
FIXTURE_X_STAR = (0.359332995287871, 0.12063576627591287, 0.023090896299537325)


# ---------------------------------------------------------------------------
# model wiring


def test_fixture_break_even_ordering(three_species_analysis):
    mm = three_species_analysis
    lam0 = [be.lambda0 for be in mm.break_evens]
    lam1 = [be.lambda1 for be in mm.break_evens]
    assert lam0 == pytest.approx([0.3, 0.4, 0.5], abs=1e-9)
    assert lam1 == pytest.approx([1.0, 1.5, 1.3], abs=1e-9)
    assert mm.lambda0_tilde == pytest.approx(0.5, abs=1e-9)
    assert mm.lambda1_tilde == pytest.approx(1.0, abs=1e-9)
    many.verify_hypotheses(mm)  # must not raise


def test_rejects_s_dependent_species():
    model = fs.FullModel(D=1.0, S_in=0.9, D0=1.0, D1=0.5,
                         f=fs.Monod(2.0, 1.0), g=fs.Monod(1.5, 0.8),
                         kinetics=fs.Freter(1.5, 0.8, 3.0))
    with pytest.raises(ConfigError):
        fs.MultiReducedModel(D=1.0, S_in=0.9, species=(fs.reduce(model),))


def test_from_reduction_requires_diagonal():
    model = fs.MultiSpeciesModel(
        D=1.0, S_in=0.9, f=(fs.Monod(2.0, 1.0),) * 2,
        g=(fs.Monod(1.5, 0.8),) * 2, D0=(1.0, 1.0), D1=(0.5, 0.5),
        A=np.ones((2, 2)), B=np.array([1.0, 1.0]))
    with pytest.raises(ConfigError):
        fs.MultiReducedModel.from_reduction(fs.reduce_multi(model))


# ---------------------------------------------------------------------------
# X_i and h_i


def test_X_is_zero_up_to_lambda0(three_species_analysis):
    mm = three_species_analysis
    for i, be in enumerate(mm.break_evens):
        assert fs.X_i(mm, i, 0.0) == 0.0
        assert fs.X_i(mm, i, be.lambda0) == 0.0
        assert fs.X_i(mm, i, 0.5 * be.lambda0) == 0.0


def test_X_increases_past_lambda0(three_species_analysis):
    mm = three_species_analysis
    for i, be in enumerate(mm.break_evens):
        Ss = np.linspace(be.lambda0 + 1e-6, be.lambda1 * 0.98, 25)
        vals = [fs.X_i(mm, i, float(S)) for S in Ss]
        assert vals[0] > 0.0
        assert all(b > a for a, b in zip(vals, vals[1:]))


def test_X_domain_error_at_lambda1(three_species_analysis):
    mm = three_species_analysis
    with pytest.raises(DomainError):
        fs.X_i(mm, 0, mm.break_evens[0].lambda1 + 0.01)
    with pytest.raises(DomainError):
        fs.X_i(mm, 0, -0.1)


def test_X_balances_growth_and_removal(three_species_analysis):
    mm = three_species_analysis
    for i in range(mm.n):
        be = mm.break_evens[i]
        for S in np.linspace(be.lambda0 + 0.05, be.lambda1 * 0.95, 9):
            x = fs.X_i(mm, i, float(S))
            sp = mm.species[i]
            assert abs(sp.mu(S, x) - sp.d(x)) <= 1e-10


def test_h_identity_with_removal_rate(three_species_analysis):
    # on (lambda0, lambda1), mu(S, X) = d(X), so h = d(X) X as well
    mm = three_species_analysis
    for i in range(mm.n):
        be = mm.break_evens[i]
        assert fs.h_i(mm, i, be.lambda0 * 0.5) == 0.0
        for S in np.linspace(be.lambda0 + 0.05, be.lambda1 * 0.95, 9):
            x = fs.X_i(mm, i, float(S))
            h = fs.h_i(mm, i, float(S))
            assert h == pytest.approx(mm.species[i].d(x) * x, rel=1e-9)


def test_h_curves_increasing(three_species_analysis):
    mm = three_species_analysis
    for i in range(mm.n):
        be = mm.break_evens[i]
        Ss = np.linspace(be.lambda0 + 1e-4, be.lambda1 * 0.98, 40)
        hs = [fs.h_i(mm, i, float(S)) for S in Ss]
        assert all(b > a for a, b in zip(hs, hs[1:]))


def test_hypothesis_violation_rejected():
    # an x-independent mu (constant fraction) violates H6 and is refused
    flat = fs.FullModel(D=1.0, S_in=0.9, D0=1.0, D1=0.5,
                        f=fs.Monod(2.0, 1.0), g=fs.Monod(1.5, 0.8),
                        kinetics=fs.Constant(1.0, 1.0))
    mm = fs.MultiReducedModel(D=1.0, S_in=0.9, species=(fs.reduce(flat),))
    with pytest.raises(DomainError) as err:
        many.verify_hypotheses(mm)
    assert "H6" in str(err.value)


# ---------------------------------------------------------------------------
# H(S) and the positive equilibrium


def test_H_increasing_on_fixture(three_species_analysis):
    mm = three_species_analysis
    Ss = np.linspace(1e-4, mm.lambda1_tilde * (1.0 - 1e-6), 1024)
    H = [many.H_function(mm, float(S)) for S in Ss]
    diffs = np.diff(H)
    assert np.all(diffs > 0.0)
    assert sum(1 for a, b in zip(H, H[1:]) if a < 0.0 <= b) == 1  # one crossing


def test_fixture_equilibrium(three_species_analysis):
    mm = three_species_analysis
    eq = fs.solve_positive_equilibrium(mm)
    assert eq is not None
    assert eq.S_star == pytest.approx(FIXTURE_S_STAR, abs=1e-8)
    assert np.allclose(eq.x_star, FIXTURE_X_STAR, atol=1e-7)
    assert abs(many.H_function(mm, eq.S_star)) <= 1e-10
    assert eq.stable
    assert max(z.real for z in eq.eigenvalues) < 0.0
    # residuals of the defining equations
    supply = mm.D * (mm.S_in - eq.S_star)
    consumption = sum(sp.mu(eq.S_star, x) * x
                      for sp, x in zip(mm.species, eq.x_star))
    assert abs(supply - consumption) <= 1e-9
    for sp, x in zip(mm.species, eq.x_star):
        assert abs(sp.mu(eq.S_star, x) - sp.d(x)) <= 1e-9


def test_fixture_jacobian_structure(three_species_analysis):
    eq = fs.solve_positive_equilibrium(three_species_analysis)
    J = eq.jacobian
    n = len(eq.x_star)
    off = J[1:, 1:] - np.diag(np.diag(J[1:, 1:]))
    assert np.all(off == 0.0)
    assert np.all(J[1:, 0] > 0.0)       # a_i > 0 under H6
    assert np.all(np.diag(J)[1:] < 0.0)  # -b_i < 0 under H8


def _ordered_species(S_in):
    # lambda0 = 1.0 < lambda1 = 2.0 (H8 holds)
    full = fs.FullModel(D=1.0, S_in=S_in, D0=1.0, D1=0.5,
                        f=fs.Monod(2.0, 1.0), g=fs.Monod(1.5, 4.0),
                        kinetics=fs.TotalDensity(2.0, 1.0))
    return fs.reduce(full)


def test_criterion_exactly_at_equality_returns_none():
    sp = _ordered_species(1.0)
    lam0 = one.break_even(sp).lambda0
    mm = fs.MultiReducedModel(D=1.0, S_in=lam0, species=(sp,))
    # supply D (S_in - lambda0~) and consumption are both exactly zero
    assert not many.existence_criterion(mm)
    assert fs.solve_positive_equilibrium(mm) is None


def test_single_species_agrees_with_scalar_analysis():
    r = _ordered_species(2.0)
    lam = one.break_even(r)
    assert lam.lambda0 < min(lam.lambda1, 2.0)
    mm = fs.MultiReducedModel(D=1.0, S_in=2.0, species=(r,))
    eq = fs.solve_positive_equilibrium(mm)
    scalar = [e for e in one.find_equilibria(r, 1.0, 2.0) if e.kind == one.POSITIVE]
    assert len(scalar) == 1
    assert eq.S_star == pytest.approx(scalar[0].S, abs=1e-9)
    assert eq.x_star[0] == pytest.approx(scalar[0].x, abs=1e-9)


def test_criterion_iff_root_randomized():
    rng = np.random.default_rng(71)
    both_branches = {True: 0, False: 0}
    for _ in range(40):
        mm = random_multi_model(rng)
        crit = many.existence_criterion(mm)
        l0, l1 = mm.lambda0_tilde, mm.lambda1_tilde
        grid = l0 + (l1 - l0) * (1.0 - np.geomspace(1.0, 1e-6, 120))
        H = [many.H_function(mm, float(S)) for S in grid]
        has_crossing = any(a < 0.0 <= b for a, b in zip(H, H[1:])) or H[0] < 0.0 <= H[-1]
        assert crit == has_crossing
        eq = fs.solve_positive_equilibrium(mm)
        assert (eq is not None) == crit
        if eq is not None:
            assert eq.stable
            assert l0 < eq.S_star < l1
        both_branches[crit] += 1
    assert both_branches[True] >= 5 and both_branches[False] >= 5


# ---------------------------------------------------------------------------
# arrowhead lemma


def test_arrowhead_singleton():
    assert many.arrowhead_stability([0.0], [1.0], [0.0], 1.0)
    M = many.arrowhead_matrix([0.0], [1.0], [0.0], 1.0)
    assert np.array_equal(M, [[-1.0, 0.0], [0.0, -1.0]])


def test_arrowhead_random_instances_stable():
    rng = np.random.default_rng(73)
    for _ in range(300):
        n = int(rng.integers(1, 11))
        a = rng.uniform(0.0, 10.0, n)
        b = rng.uniform(1e-3, 10.0, n)
        c = b - rng.uniform(0.0, 10.0, n)  # c_i <= b_i
        D = rng.uniform(1e-3, 5.0)
        assert many.arrowhead_stability(a, b, c, D)


def test_arrowhead_counterexample_without_hypothesis():
    # violating c <= b can push an eigenvalue into the right half plane:
    # det of [[-D-a, c], [a, -b]] = (D+a) b - a c < 0 for c large
    assert not many.arrowhead_stability([1.0], [1.0], [3.0], 1.0)


def test_arrowhead_dimension_mismatch():
    with pytest.raises(ConfigError):
        many.arrowhead_matrix([1.0, 2.0], [1.0], [0.0], 1.0)


# ---------------------------------------------------------------------------
# consistency with the full multi-species dynamics


def test_full_model_converges_to_equilibrium(three_species_model,
                                             three_species_analysis):
    import dataclasses

    eq = fs.solve_positive_equilibrium(three_species_analysis)
    full = dataclasses.replace(three_species_model, epsilon=1e-3)
    mr = fs.reduce_multi(full)
    x0 = np.asarray(eq.x_star) + 0.08
    u0 = mr.qss_u(x0)
    start = np.concatenate(([eq.S_star + 0.05], u0, x0 - u0))
    tr = simulate(full.system(), start, (0.0, 250.0))
    S_end = tr.states[-1, 0]
    x_end = tr.states[-1, 1:4] + tr.states[-1, 4:]
    dist = math.hypot(S_end - eq.S_star, float(np.linalg.norm(x_end - eq.x_star)))
    assert dist <= 0.05
