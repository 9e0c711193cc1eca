import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ldlimit.bath import BathSpec, CouplingPoint, GibbsWeights, bath_density_matrix, gibbs_weights
from ldlimit.gns import (
    classify,
    gns_basis,
    gns_coefficients,
    gns_inner,
    gram_matrix,
    lambda_scaling_table,
    lemma_oracle_exponent,
    max_gram_deviation,
    multiplicity_pairs,
    nu_values,
)
from ldlimit.interaction import step_unitary
from ldlimit.matrixcore import op_norm, partial_trace_bath
from ldlimit.rates import default_grid

from conftest import decoupled


def make_weights(values):
    w = np.asarray(values, dtype=float)
    return GibbsWeights(w, np.log(w))


def weights_at(bath, h):
    return gibbs_weights(bath, CouplingPoint.from_h(h, bath.beta))


def test_nu_values():
    assert np.allclose(nu_values(make_weights([0.7, 0.2, 0.1])), [0.8, 0.7])
    w = make_weights([0.5, 0.2, 0.2, 0.1])
    assert nu_values(w)[-1] == pytest.approx(0.5)


def test_two_level_basis():
    b0, b1 = 0.8, 0.2
    basis = gns_basis(make_weights([b0, b1]))
    nu1 = b0
    want = np.diag([-np.sqrt(b1 / nu1), np.sqrt(nu1 / b1)])
    assert np.allclose(basis.X[1, 1], want, atol=1e-15)
    rho = np.diag([b0, b1])
    assert gns_inner(basis.X[1, 1], basis.X[1, 1], rho).real == pytest.approx(1.0)


def test_basis_requires_positive_weights():
    with pytest.raises(ValueError):
        gns_basis(GibbsWeights(np.array([1.0, 0.0]), np.array([0.0, -np.inf])))


def test_inner_product_examples():
    w = make_weights([0.6, 0.3, 0.1])
    rho = bath_density_matrix(w)
    basis = gns_basis(w)
    assert gns_inner(np.eye(3), np.eye(3), rho) == pytest.approx(1)
    from ldlimit.bath import discrete_noise

    for i in range(3):
        for j in range(3):
            if i != j:
                a = discrete_noise(2, i, j)
                assert gns_inner(a, a, rho).real == pytest.approx(w.weights[i])
    for k in (1, 2):
        # diagonal elements have zero mean
        assert abs(np.dot(w.weights, basis.lam[k - 1])) < 1e-15


@settings(max_examples=50, deadline=None)
@given(n=st.integers(1, 4), seed=st.integers(0, 10_000), log_h=st.floats(-9, -0.2))
def test_gram_is_identity(n, seed, log_h):
    rng = np.random.default_rng(seed)
    bath = BathSpec(n, tuple(rng.uniform(-1, 2, n + 1)), float(rng.choice([0.5, 1.0, 2.0])))
    w = weights_at(bath, np.exp(log_h))
    assert max_gram_deviation(gns_basis(w), bath_density_matrix(w)) < 1e-10


def test_gram_extreme_weights():
    bath = BathSpec(4, (0.0, 1.0, 2.0, 3.0, 4.0), 2.0)
    w = weights_at(bath, 2.0**-10)
    assert w.weights[-1] > 1e-100
    G = gram_matrix(gns_basis(w), bath_density_matrix(w))
    assert np.max(np.abs(G - np.eye(G.shape[0]))) < 1e-10


def test_multiplicity_order():
    assert multiplicity_pairs(1) == [(0, 1), (1, 0), (1, 1)]
    assert len(multiplicity_pairs(3)) == 15


def brute_force_coefficient(step, basis, rho, src, dst):
    """Tr_bath[(I (x) rho X_dst^dagger) U (I (x) X_src)]."""
    d = step.d
    I = np.eye(d)
    Xs = basis.X[src]
    Xd = basis.X[dst]
    op = np.kron(I, rho @ Xd.conj().T) @ step.U @ np.kron(I, Xs)
    return partial_trace_bath(op, d, basis.n + 1)


def test_coefficients_match_partial_trace(rand22):
    sys, bath = rand22
    w = weights_at(bath, 0.2)
    step = step_unitary(sys, bath, CouplingPoint.from_h(0.2, bath.beta))
    basis = gns_basis(w)
    rho = bath_density_matrix(w)
    table = gns_coefficients(step, w)
    pairs = [(i, j) for i in range(3) for j in range(3)]
    for src in pairs:
        for dst in pairs:
            ref = brute_force_coefficient(step, basis, rho, src, dst)
            assert op_norm(table[src, dst] - ref) < 1e-12


def test_one_site_matrix_unitary(rand22):
    sys, bath = rand22
    for h in (0.3, 0.01):
        w = weights_at(bath, h)
        table = gns_coefficients(step_unitary(sys, bath, CouplingPoint.from_h(h, bath.beta)), w)
        M = table.one_site_matrix()
        assert op_norm(M.conj().T @ M - np.eye(M.shape[0])) < 1e-9
        # isometry of the vacuum column
        col = sum(table[(0, 0), p].conj().T @ table[(0, 0), p]
                  for p in [(0, 0)] + multiplicity_pairs(2))
        assert op_norm(col - np.eye(2)) < 1e-9


def test_vacuum_zero_pattern(rand22):
    sys, bath = rand22
    w = weights_at(bath, 0.1)
    table = gns_coefficients(step_unitary(sys, bath, CouplingPoint.from_h(0.1, bath.beta)), w)
    for i in (1, 2):
        assert not table[(i, 0), (0, 0)].any()
        assert not table[(0, i), (0, 0)].any()
        assert not table[(0, 0), (0, i)].any()
        assert not table[(0, 0), (i, 0)].any()


def test_decoupled_vacuum_coefficient():
    sys, bath = decoupled(n=2, gamma=(0.0, 0.4, 1.1))
    h = 0.3
    w = weights_at(bath, h)
    table = gns_coefficients(step_unitary(sys, bath, CouplingPoint.from_h(h, 1.0)), w)
    phase = np.sum(w.weights * np.exp(-1j * h * np.array(bath.gamma)))
    want = np.diag(np.exp(-1j * h * np.diag(sys.H_S))) * phase
    assert op_norm(table[(0, 0), (0, 0)] - want) < 1e-14


# --- lambda scaling ---------------------------------------------------------

def mp_lambdas(gamma, beta, h):
    """Weights and lambda_k^j by Gram-Schmidt of the diagonal units in high precision."""
    n = len(gamma) - 1
    num = [mpmath.mpf(h) ** (2 * j) * mpmath.exp(-beta * mpmath.mpf(g)) for j, g in enumerate(gamma)]
    Z = sum(num)
    w = [x / Z for x in num]

    def inner(a, b):
        return sum(wj * aj * bj for wj, aj, bj in zip(w, a, b))

    vecs = [[mpmath.mpf(1)] * (n + 1)]
    for k in range(1, n + 1):
        v = [mpmath.mpf(1) if j == k else mpmath.mpf(0) for j in range(n + 1)]
        for u in vecs:
            c = inner(u, v)
            v = [vj - c * uj for vj, uj in zip(v, u)]
        norm = mpmath.sqrt(inner(v, v))
        vecs.append([vj / norm for vj in v])
    return w, vecs[1:]  # vecs[k][j] = lambda_k^j


def mp_quantity(quantity, i, k, j2, w, lam):
    if quantity == "beta_k*lambda_i^k":
        return w[k] * lam[i - 1][k]
    if quantity == "beta_k*lambda_i^k*lambda_j^k":
        return w[k] * lam[i - 1][k] * lam[j2 - 1][k]
    if quantity == "beta_k*(lambda_i^k)^2":
        return w[k] * lam[i - 1][k] ** 2
    return w[k] * lam[k - 1][k] ** 2


@pytest.mark.parametrize("n", [1, 2, 3, 4])
def test_lambda_table_matches_high_precision(n):
    mpmath.mp.dps = 60
    bath = BathSpec(n, tuple(float(j) for j in range(n + 1)), 1.0)
    grid = default_grid()
    rows = lambda_scaling_table(bath, grid)
    for col, h in enumerate(grid):
        w, lam = mp_lambdas(bath.gamma, bath.beta, h)
        for r in rows:
            ref = mp_quantity(r.quantity, r.i, r.k, r.j2, w, lam)
            if abs(ref) < mpmath.mpf(10) ** -50:
                assert r.values[col] == 0.0
            else:
                assert r.values[col] == pytest.approx(float(ref), rel=1e-11)


@pytest.mark.parametrize("n", [1, 2, 3, 4])
def test_oracle_exponents_from_high_precision(n):
    # local slope between two tiny step lengths approaches the exact exponent
    mpmath.mp.dps = 320
    gamma = tuple(0.3 * j for j in range(n + 1))
    h1, h2 = mpmath.mpf("1e-6"), mpmath.mpf("1e-7")
    w1, l1 = mp_lambdas(gamma, 1.0, h1)
    w2, l2 = mp_lambdas(gamma, 1.0, h2)
    for r in lambda_scaling_table(BathSpec(n, gamma, 1.0), default_grid()):
        q1 = mp_quantity(r.quantity, r.i, r.k, r.j2, w1, l1)
        q2 = mp_quantity(r.quantity, r.i, r.k, r.j2, w2, l2)
        if r.quantity == "beta_k*(lambda_k^k)^2":
            q1, q2 = q1 - 1, q2 - 1
        if r.oracle_slope is None:
            # Gram-Schmidt leaves round-off near 10^-300; real values here exceed 10^-130
            assert abs(q1) < mpmath.mpf(10) ** -250 and abs(q2) < mpmath.mpf(10) ** -250
            continue
        slope = mpmath.log(abs(q1) / abs(q2)) / mpmath.log(h1 / h2)
        assert float(slope) == pytest.approx(r.oracle_slope, abs=1e-6)


def test_oracle_exponent_examples():
    assert lemma_oracle_exponent("beta_k*lambda_i^k", 1, 0) == 1
    assert lemma_oracle_exponent("beta_k*lambda_i^k", 3, 0) == 3
    assert lemma_oracle_exponent("beta_k*lambda_i^k", 1, 1) == 1
    assert lemma_oracle_exponent("beta_k*lambda_i^k", 3, 2) is None
    assert lemma_oracle_exponent("beta_k*(lambda_k^k)^2", 2, 2) == 4
    with pytest.raises(ValueError):
        lemma_oracle_exponent("nonsense", 1, 1)


def test_lambda_table_leading_constant():
    bath = BathSpec(2, (0.0, 0.5, 1.0), 2.0)
    rows = lambda_scaling_table(bath, default_grid())
    r = next(r for r in rows if (r.quantity, r.i, r.k) == ("beta_k*lambda_i^k", 1, 0))
    assert r.classification == "O(h)"
    assert r.limit == pytest.approx(-np.exp(-2.0 * 0.5 / 2), rel=1e-3)


def test_lambda_table_exact_zeros():
    rows = lambda_scaling_table(BathSpec(3, (0.0, 1.0, 2.0, 3.0), 1.0), default_grid())
    zeros = [r for r in rows if r.quantity == "beta_k*lambda_i^k" and 1 <= r.k < r.i]
    assert zeros and all(r.exact_zero and r.classification == "o(h)" for r in zeros)


def test_classify():
    assert classify(1.02, False) == "O(h)"
    assert classify(2.0, False) == "o(h)"
    assert classify(float("nan"), True) == "o(h)"
    assert classify(0.5, False) == "unclassified"
    assert classify(2.0, False, limit_one=True) == "limit-1"
