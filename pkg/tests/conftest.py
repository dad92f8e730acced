import numpy as np
import pytest

import flocsim as fs


@pytest.fixture(scope="session")
def parva_model() -> fs.FullModel:
    """Single-species benchmark model: Monod pair, total-density kinetics."""
    return fs.FullModel(
        D=1.0, S_in=0.9, D0=1.0, D1=0.5,
        f=fs.Monod(2.0, 1.0), g=fs.Monod(1.5, 0.8),
        kinetics=fs.TotalDensity(4.0, 1.0),
    )


@pytest.fixture(scope="session")
def parva_reduced(parva_model) -> fs.ReducedModel:
    return fs.reduce(parva_model)


@pytest.fixture(scope="session")
def three_species_model() -> fs.MultiSpeciesModel:
    """Three-species demo: lambda_01 < lambda_02 < lambda_03 < lambda_11 <
    lambda_13 < lambda_12 with S_in between lambda_03 and lambda_11."""
    return fs.MultiSpeciesModel(
        D=1.0, S_in=0.9,
        f=(fs.Monod(2.0, 0.3), fs.Monod(2.0, 0.4), fs.Monod(2.0, 0.5)),
        g=(fs.Monod(1.5, 2.0), fs.Monod(1.5, 3.0), fs.Monod(1.5, 2.6)),
        D0=(1.0, 1.0, 1.0), D1=(0.5, 0.5, 0.5),
        A=np.diag([4.0, 4.0, 4.0]), B=np.array([1.0, 1.0, 1.0]),
    )


@pytest.fixture(scope="session")
def three_species_analysis(three_species_model):
    return fs.MultiReducedModel.from_reduction(fs.reduce_multi(three_species_model))


def random_growth_pair(rng, lambda0, lambda1, D0, D1):
    """Monod pair with f(lambda0)=D0, g(lambda1)=D1 and f > g pointwise.

    Tries free draws first; when the admissible region is thin (lambda1 far
    below lambda0) it falls back to equal plateaus mf = mg = m, where
    domination reduces to m below an explicit cap and always succeeds.
    """
    for _ in range(50):
        mf = D0 * (1.0 + rng.uniform(0.3, 3.0))
        mg = D1 * (1.0 + rng.uniform(0.3, 3.0))
        if mf <= mg:
            continue
        Kf = lambda0 * (mf - D0) / D0
        Kg = lambda1 * (mg - D1) / D1
        f, g = fs.Monod(mf, Kf), fs.Monod(mg, Kg)
        if fs.growth_dominates(f, g):
            return f, g
    slope = lambda1 / D1 - lambda0 / D0
    if slope >= 0.0:
        m_hi = 4.0 * D0
    else:
        m_cap = (lambda0 - lambda1) / (lambda0 / D0 - lambda1 / D1)
        m_hi = D0 + 0.95 * (m_cap - D0)
    m = rng.uniform(D0 + 0.01 * (m_hi - D0), m_hi)
    f = fs.Monod(m, lambda0 * (m - D0) / D0)
    g = fs.Monod(m, lambda1 * (m - D1) / D1)
    assert fs.growth_dominates(f, g)
    return f, g


CASE_ORDERINGS = ("unique", "none", "odd", "even_or_zero")


def random_case_model(rng, case):
    """Random total-density model in one of the four break-even orderings."""
    D = rng.uniform(0.5, 2.0)
    D0 = D * rng.uniform(0.4, 1.0)
    D1 = D0 * rng.uniform(0.15, 0.85)
    base = rng.uniform(0.2, 1.5)
    gap1 = rng.uniform(0.15, 1.0)
    gap2 = rng.uniform(0.15, 1.0)
    if case == "unique":        # lambda0 < min(lambda1, S_in)
        lam0 = base
        lam1 = base * (1.0 + gap1)
        S_in = base * (1.0 + gap2)
    elif case == "none":        # S_in < lambda0 < lambda1
        S_in = base
        lam0 = base * (1.0 + gap1)
        lam1 = lam0 * (1.0 + gap2)
    elif case == "odd":         # lambda1 < lambda0 < S_in
        lam1 = base
        lam0 = base * (1.0 + gap1)
        S_in = lam0 * (1.0 + gap2)
    elif case == "even_or_zero":  # lambda1 < S_in < lambda0
        lam1 = base
        S_in = base * (1.0 + gap1)
        lam0 = S_in * (1.0 + gap2)
    else:
        raise ValueError(case)
    f, g = random_growth_pair(rng, lam0, lam1, D0, D1)
    model = fs.FullModel(
        D=D, S_in=S_in, D0=D0, D1=D1, f=f, g=g,
        kinetics=fs.TotalDensity(rng.uniform(0.5, 8.0), rng.uniform(0.2, 4.0)),
    )
    return model, lam0, lam1


def random_multi_model(rng, n=None):
    """Random diagonal multi-species analysis model satisfying H5-H8 and
    the structural part of H9 (lambda0_tilde < lambda1_tilde)."""
    if n is None:
        n = int(rng.integers(1, 5))
    D = rng.uniform(0.5, 2.0)
    lam0 = rng.uniform(0.2, 0.8, size=n)
    l0t = float(np.max(lam0))
    lam1 = l0t + rng.uniform(0.1, 1.5, size=n)
    species = []
    for i in range(n):
        D0 = D * rng.uniform(0.4, 1.0)
        D1 = D0 * rng.uniform(0.15, 0.85)
        f, g = random_growth_pair(rng, lam0[i], lam1[i], D0, D1)
        full = fs.FullModel(
            D=D, S_in=1.0, D0=D0, D1=D1, f=f, g=g,
            kinetics=fs.TotalDensity(rng.uniform(0.5, 8.0), rng.uniform(0.2, 4.0)),
        )
        species.append(fs.reduce(full))
    S_in = float(l0t + rng.uniform(0.02, 2.0))
    return fs.MultiReducedModel(D=D, S_in=S_in, species=tuple(species))
