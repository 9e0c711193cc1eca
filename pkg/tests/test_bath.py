import math

import numpy as np
import pytest
import scipy.linalg
from hypothesis import given, settings
from hypothesis import strategies as st

from ldlimit.bath import (
    BathSpec,
    CouplingPoint,
    bath_density_matrix,
    bath_hamiltonian,
    discrete_noise,
    gibbs_weights,
    number_operator,
)
from ldlimit.rates import default_grid, fit_rate


def weights(spec, h, **kw):
    return gibbs_weights(spec, CouplingPoint.from_h(h, spec.beta, **kw)).weights


def test_spec_validation():
    with pytest.raises(ValueError):
        BathSpec(0, (0.0,), 1.0)
    with pytest.raises(ValueError):
        BathSpec(2, (0.0, 1.0), 1.0)
    with pytest.raises(ValueError):
        BathSpec(1, (0.0, math.inf), 1.0)
    with pytest.raises(ValueError):
        BathSpec(1, (0.0, 1.0), 0.0)


def test_coupling_point():
    cp = CouplingPoint.from_h(0.1, 2.0)
    assert cp.mu == pytest.approx(math.log(0.1))
    assert math.exp(2.0 * cp.mu) == pytest.approx(cp.fugacity)
    with pytest.raises(ValueError):
        CouplingPoint.from_h(1.0, 1.0)
    with pytest.raises(ValueError):
        CouplingPoint.from_h(0.0, 1.0)
    assert CouplingPoint.from_h(1.0, 1.0, allow_nonphysical=True).mu == 0.0


def test_two_level_closed_form():
    w = weights(BathSpec(1, (0.0, 1.0), 1.0), 0.1)
    b1 = 0.01 * math.exp(-1) / (1 + 0.01 * math.exp(-1))
    assert w[1] == pytest.approx(b1, rel=1e-14)
    assert w[0] == pytest.approx(1 - b1, rel=1e-15)


def test_unit_fugacity_gives_plain_gibbs():
    spec = BathSpec(2, (0.0, 0.5, 2.0), 1.3)
    w = weights(spec, 1.0, allow_nonphysical=True)
    g = np.exp(-1.3 * np.array(spec.gamma))
    assert np.allclose(w, g / g.sum(), rtol=1e-14)


@pytest.mark.parametrize("n", [1, 2, 4])
def test_equal_levels_geometric(n):
    h = 0.3
    w = weights(BathSpec(n, (0.7,) * (n + 1), 2.0), h)
    j = np.arange(n + 1)
    want = h ** (2 * j) * (1 - h**2) / (1 - h ** (2 * (n + 1)))
    assert np.allclose(w, want, rtol=1e-13)


@settings(max_examples=40, deadline=None)
@given(
    n=st.integers(1, 4),
    beta=st.floats(0.1, 5.0),
    h=st.floats(1e-3, 0.9),
    seed=st.integers(0, 10_000),
)
def test_weights_match_exponential_form(n, beta, h, seed):
    rng = np.random.default_rng(seed)
    spec = BathSpec(n, tuple(rng.uniform(-1, 2, n + 1)), beta)
    cp = CouplingPoint.from_h(h, beta)
    w = gibbs_weights(spec, cp).weights
    assert abs(w.sum() - 1) < 1e-14
    assert np.all(w > 0)
    G = scipy.linalg.expm(-beta * (bath_hamiltonian(spec) - cp.mu * number_operator(n)))
    rho = G / np.trace(G)
    assert np.max(np.abs(bath_density_matrix(gibbs_weights(spec, cp)) - rho)) < 1e-12


def test_weights_decrease_for_increasing_levels():
    w = weights(BathSpec(3, (0.0, 0.2, 0.5, 0.9), 1.0), 0.2)
    assert np.all(np.diff(w) < 0)


def test_weight_slopes():
    spec = BathSpec(3, (0.0, 1.0, 2.0, 3.0), 1.0)
    grid = default_grid()
    logs = np.array([gibbs_weights(spec, CouplingPoint.from_h(h, 1.0)).log_weights for h in grid])
    for j in range(1, 4):
        fit = fit_rate(grid, np.exp(logs[:, j]))
        assert abs(fit.slope - 2 * j) < 0.02
        # beta_j / h^(2j) -> exp(-beta (gamma_j - gamma_0))
        assert np.exp(logs[-1, j]) / grid[-1] ** (2 * j) == pytest.approx(math.exp(-j), rel=1e-4)


def test_log_weights_survive_underflow():
    spec = BathSpec(4, (0.0, 1.0, 2.0, 3.0, 4.0), 50.0)
    w = gibbs_weights(spec, CouplingPoint.from_h(2.0**-10, 50.0))
    assert np.isfinite(w.log_weights).all()
    assert w.log_weights[4] == pytest.approx(8 * math.log(2.0**-10) - 200.0, rel=1e-12)


def test_density_matrix():
    from ldlimit.bath import GibbsWeights

    w = GibbsWeights(np.array([0.9, 0.1]), np.log([0.9, 0.1]))
    assert np.array_equal(bath_density_matrix(w), np.diag([0.9, 0.1]))
    w = gibbs_weights(BathSpec(2, (0.0, 0.3, 0.1), 1.0), CouplingPoint.from_h(0.4, 1.0))
    rho = bath_density_matrix(w)
    assert np.trace(rho) == pytest.approx(1)
    assert np.linalg.eigvalsh(rho).min() == pytest.approx(w.weights.min())


def test_discrete_noise_action():
    assert np.array_equal(discrete_noise(1, 0, 0), np.diag([1, 0]))
    a = discrete_noise(2, 1, 2)
    e = np.eye(3)
    assert np.array_equal(a @ e[1], e[2])
    assert not (a @ e[0]).any() and not (a @ e[2]).any()
    with pytest.raises(ValueError):
        discrete_noise(2, 3, 0)


@pytest.mark.parametrize("n", [1, 2, 3])
def test_matrix_units(n):
    r = range(n + 1)
    total = sum(discrete_noise(n, i, i) for i in r)
    assert np.array_equal(total, np.eye(n + 1))
    for i in r:
        for j in r:
            for k in r:
                for l in r:
                    prod = discrete_noise(n, i, j) @ discrete_noise(n, k, l)
                    want = discrete_noise(n, k, j) if i == l else np.zeros_like(prod)
                    assert np.array_equal(prod, want)


def test_bath_hamiltonian_and_number():
    assert not bath_hamiltonian(BathSpec(2, (0, 0, 0), 1.0)).any()
    assert np.array_equal(bath_hamiltonian(BathSpec(2, (0, 1, 2), 1.0)), np.diag([0, 1, 2]))
    assert np.array_equal(number_operator(3), np.diag([0, 1, 2, 3]))
    with pytest.raises(ValueError):
        number_operator(0)
