"""GNS basis of the one-site observable algebra and the coefficient table.

The algebra ``B(C^{n+1})`` carries the inner product
``<A, B> = Tr(rho A^dagger B)`` for the diagonal bath state ``rho``. Its
orthonormal basis ``X^i_j`` consists of

* ``X^0_0 = I`` (the GNS vacuum),
* ``X^i_j = a^i_j / sqrt(beta_i)`` for ``i != j``,
* diagonal ``X^k_k = diag(lambda_k^0, ..., lambda_k^n)`` for ``k >= 1``.

Pairs ``(i, j)`` are ordered lexicographically, vacuum first; the flat
index of ``(i, j)`` is ``i * (n + 1) + j``.
"""
from dataclasses import dataclass, field

import numpy as np
from scipy.special import logsumexp

from .bath import CouplingPoint, bath_density_matrix, discrete_noise, gibbs_weights
from .rates import fit_log_rate

# Fitted slope bands used to name asymptotic orders.
BIG_O_BAND = 0.05
LITTLE_O_MIN = 1.1


def pair_index(i, j, n):
    return i * (n + 1) + j


def pairs(n):
    return [(i, j) for i in range(n + 1) for j in range(n + 1)]


def multiplicity_pairs(n):
    """Non-vacuum pairs in lexicographic order."""
    return [p for p in pairs(n) if p != (0, 0)]


def _log_nu(log_w):
    """``log nu_k`` for ``k = 0..n`` with ``nu_0 = 1``.

    Uses ``nu_k = beta_0 + beta_{k+1} + ... + beta_n``, which equals
    ``1 - beta_1 - ... - beta_k`` without the cancellation.
    """
    n = len(log_w) - 1
    out = np.zeros(n + 1)
    for k in range(1, n + 1):
        out[k] = logsumexp(np.concatenate(([log_w[0]], log_w[k + 1:])))
    return out


def nu_values(w):
    """``nu_k = 1 - beta_1 - ... - beta_k`` for ``k = 1..n``."""
    nu = np.exp(_log_nu(np.asarray(w.log_weights))[1:])
    if np.any(nu <= 0) or not np.all(np.isfinite(nu)):
        raise ValueError("weights give a non-positive nu_k; the weight vector is corrupted")
    return nu


def _log_lambda(log_w):
    """Sign and log-magnitude of ``lambda_k^j`` (rows ``k = 1..n``).

    Entries that vanish identically have sign 0.
    """
    n = len(log_w) - 1
    log_nu = _log_nu(log_w)
    sign = np.zeros((n, n + 1))
    logmag = np.full((n, n + 1), -np.inf)
    for k in range(1, n + 1):
        tail = -0.5 * (log_nu[k - 1] + log_nu[k]) + 0.5 * log_w[k]
        for j in range(n + 1):
            if j == 0 or j > k:
                sign[k - 1, j] = -1.0
                logmag[k - 1, j] = tail
            elif j == k:
                sign[k - 1, j] = 1.0
                logmag[k - 1, j] = 0.5 * (log_nu[k] - log_nu[k - 1] - log_w[k])
    return sign, logmag


@dataclass(frozen=True)
class GnsBasis:
    """``X[i, j]`` is the matrix ``X^i_j``; ``lam[k - 1, j]`` is ``lambda_k^j``."""

    n: int
    X: np.ndarray
    nu: np.ndarray
    lam: np.ndarray
    weights: np.ndarray = field(repr=False)

    def flat(self):
        """Basis matrices stacked in pair order, shape ``((n+1)^2, n+1, n+1)``."""
        m = self.n + 1
        return self.X.reshape(m * m, m, m)


def gns_basis(w):
    """Orthonormal basis for the GNS inner product of the weights ``w``."""
    weights = np.asarray(w.weights)
    if np.any(weights <= 0):
        raise ValueError("every Gibbs weight must be positive to normalise a^i_j / sqrt(beta_i)")
    n = len(weights) - 1
    log_w = np.asarray(w.log_weights)
    sign, logmag = _log_lambda(log_w)
    lam = sign * np.exp(logmag)
    X = np.zeros((n + 1, n + 1, n + 1, n + 1), dtype=complex)
    X[0, 0] = np.eye(n + 1)
    for i in range(n + 1):
        inv_sqrt = np.exp(-0.5 * log_w[i])
        for j in range(n + 1):
            if i != j:
                X[i, j] = inv_sqrt * discrete_noise(n, i, j)
    for k in range(1, n + 1):
        X[k, k] = np.diag(lam[k - 1])
    return GnsBasis(n, X, nu_values(w), lam, weights)


def gns_inner(a, b, rho):
    """``Tr(rho a^dagger b)``."""
    a, b, rho = (np.asarray(x) for x in (a, b, rho))
    if not (a.shape == b.shape == rho.shape and a.shape[0] == a.shape[1]):
        raise ValueError("gns_inner needs square matrices of one common size")
    return complex(np.trace(rho @ a.conj().T @ b))


def gram_matrix(basis, rho):
    Xf = basis.flat()
    return np.einsum("ab,pca,qcb->pq", rho, Xf.conj(), Xf)


def max_gram_deviation(basis, rho):
    G = gram_matrix(basis, rho)
    return float(np.max(np.abs(G - np.eye(G.shape[0]))))


# --- coefficient table ---------------------------------------------------


@dataclass(frozen=True)
class CoefficientTable:
    """``entries[i, j, k, l]`` is the system operator ``U~^{i,j}_{k,l}``.

    ``structural_zero[i, j, k, l]`` marks coefficients that vanish for every
    unitary with the vacuum-decoupled block pattern, independent of values.
    """

    entries: np.ndarray
    structural_zero: np.ndarray

    @property
    def n(self):
        return self.entries.shape[0] - 1

    @property
    def d(self):
        return self.entries.shape[-1]

    def __getitem__(self, idx):
        (i, j), (k, l) = idx
        return self.entries[i, j, k, l]

    def one_site_matrix(self):
        """Matrix of the GNS step on system (x) one-site algebra.

        Block-row ``(k, l)``, block-column ``(i, j)`` holds ``U~^{i,j}_{k,l}``.
        """
        n, d = self.n, self.d
        m = (n + 1) ** 2
        e = self.entries.reshape(m, m, d, d)  # [src, dst, s, s']
        return e.transpose(1, 2, 0, 3).reshape(m * d, m * d)


def bath_coefficients(basis, rho):
    """``C[i, j, k, l, a, c] = Tr(rho (X^k_l)^dagger a^a_c X^i_j)``.

    Equivalently the ``(a, c)`` entry of ``X^i_j rho (X^k_l)^dagger``.
    """
    r = np.real(np.diag(rho))
    return np.einsum("ijab,b,klcb->ijklac", basis.X, r, basis.X.conj())


def coefficient_table(step, basis, rho):
    """Coefficients of the GNS-represented step unitary in the ``X`` basis."""
    n = basis.n
    if step.n != n or np.asarray(rho).shape != (n + 1, n + 1):
        raise ValueError("step unitary, GNS basis and bath state disagree on n")
    C = bath_coefficients(basis, rho)
    entries = np.einsum("ijklac,acst->ijklst", C, step.blocks)
    # U^a_c vanishes whenever exactly one of a, c is the vacuum level
    allowed = np.zeros((n + 1, n + 1), dtype=bool)
    allowed[0, 0] = True
    allowed[1:, 1:] = True
    structural_zero = ~np.any((C != 0) & allowed, axis=(4, 5))
    return CoefficientTable(entries, structural_zero)


def gns_coefficients(step, w):
    basis = gns_basis(w)
    return coefficient_table(step, basis, bath_density_matrix(w))


# --- small-h scaling of the lambda coefficients --------------------------


@dataclass
class LemmaRow:
    """One quantity of the lambda-scaling sweep.

    ``claimed`` is the order asserted for the quantity ("O(h)", "o(h)" or
    "limit-1"); ``oracle_slope`` the exact leading exponent (None for an
    identically zero quantity). For "limit-1" rows the slope refers to the
    deviation ``|value - 1|``.
    """

    quantity: str
    i: int
    k: int
    j2: int
    h: np.ndarray
    values: np.ndarray
    log_abs: np.ndarray
    claimed: str
    oracle_slope: float
    slope: float = float("nan")
    classification: str = ""
    limit: float = float("nan")

    @property
    def exact_zero(self):
        return bool(np.all(self.values == 0.0))

    def passed(self, slope_tol=BIG_O_BAND, zero_tol=1e-13):
        if self.classification != self.claimed:
            return False
        if self.oracle_slope is None:
            return bool(np.all(np.abs(self.values) < zero_tol))
        return abs(self.slope - self.oracle_slope) <= slope_tol


def lemma_oracle_exponent(quantity, i, k, j2=0):
    """Leading power of ``h`` of a lambda-scaling quantity, or None if zero.

    Follows from ``beta_j ~ h^(2j)`` and ``nu_k -> 1``: ``lambda_k^j`` is
    ``~h^k`` on the tail ``j = 0, j > k``, ``~h^(-k)`` at ``j = k`` and zero
    for ``1 <= j < k``.
    """

    def lam_exp(row, col):
        if 1 <= col < row:
            return None
        return -row if col == row else row

    def beta_exp(col):
        return 2 * col

    if quantity == "beta_k*lambda_i^k":
        e = lam_exp(i, k)
        return None if e is None else beta_exp(k) + e
    if quantity == "beta_k*lambda_i^k*lambda_j^k":
        e1, e2 = lam_exp(i, k), lam_exp(j2, k)
        return None if e1 is None or e2 is None else beta_exp(k) + e1 + e2
    if quantity == "beta_k*(lambda_i^k)^2":
        e = lam_exp(i, k)
        return None if e is None else beta_exp(k) + 2 * e
    if quantity == "beta_k*(lambda_k^k)^2":
        return beta_exp(k)  # deviation from 1 equals beta_k / nu_{k-1}
    raise ValueError(f"unknown quantity {quantity!r}")


def _lemma_quantities(n):
    """(quantity, i, k, j2, claimed order) for every entry of the sweep."""
    out = []
    for k in range(n + 1):
        for i in range(1, n + 1):
            claimed = "O(h)" if (i, k) in ((1, 0), (1, 1)) else "o(h)"
            out.append(("beta_k*lambda_i^k", i, k, 0, claimed))
    for k in range(1, n + 1):
        for i in range(1, n + 1):
            for j in range(i + 1, n + 1):
                out.append(("beta_k*lambda_i^k*lambda_j^k", i, k, j, "o(h)"))
    for k in range(1, n + 1):
        for i in range(1, n + 1):
            if i != k:
                out.append(("beta_k*(lambda_i^k)^2", i, k, 0, "o(h)"))
    for k in range(1, n + 1):
        out.append(("beta_k*(lambda_k^k)^2", k, k, 0, "limit-1"))
    return out


def classify(slope, exact_zero, limit_one=False):
    if limit_one:
        return "limit-1" if slope > 0 else "unclassified"
    if exact_zero or slope >= LITTLE_O_MIN:
        return "o(h)"
    if abs(slope - 1.0) <= BIG_O_BAND:
        return "O(h)"
    return "unclassified"


def lambda_scaling_table(bath, grid):
    """Sweep the lambda-weighted quantities over a geometric ``h`` grid.

    Every quantity is evaluated from log-weights, so entries far below the
    double-precision epsilon keep full relative accuracy.
    """
    grid = np.asarray(grid, dtype=float)
    if grid.size < 4:
        raise ValueError("need at least 4 grid points for a stable slope fit")
    n = bath.n
    log_h = np.log(grid)
    logs = []
    for h in grid:
        lw = np.asarray(gibbs_weights(bath, CouplingPoint.from_h(h, bath.beta)).log_weights)
        sign, logmag = _log_lambda(lw)
        logs.append((lw, _log_nu(lw), sign, logmag))

    rows = []
    for quantity, i, k, j2, claimed in _lemma_quantities(n):
        vals, labs = [], []
        for lw, lnu, sign, logmag in logs:
            if quantity == "beta_k*lambda_i^k":
                s = sign[i - 1, k]
                la = lw[k] + logmag[i - 1, k]
            elif quantity == "beta_k*lambda_i^k*lambda_j^k":
                s = sign[i - 1, k] * sign[j2 - 1, k]
                la = lw[k] + logmag[i - 1, k] + logmag[j2 - 1, k]
            elif quantity == "beta_k*(lambda_i^k)^2":
                s = sign[i - 1, k] ** 2
                la = lw[k] + 2 * logmag[i - 1, k]
            else:
                s = 1.0
                la = lw[k] - lnu[k - 1]  # log |value - 1|
            if s == 0:
                vals.append(0.0)
                labs.append(-np.inf)
            elif quantity == "beta_k*(lambda_k^k)^2":
                vals.append(np.exp(lnu[k] - lnu[k - 1]))
                labs.append(la)
            else:
                vals.append(s * np.exp(la))
                labs.append(la)
        vals = np.array(vals)
        labs = np.array(labs)
        row = LemmaRow(quantity, i, k, j2, grid, vals, labs, claimed,
                       lemma_oracle_exponent(quantity, i, k, j2))
        finite = np.isfinite(labs)
        fit = fit_log_rate(log_h[finite], labs[finite]) if finite.any() else None
        row.slope = fit.slope if fit is not None else float("nan")
        limit_one = quantity == "beta_k*(lambda_k^k)^2"
        row.classification = classify(row.slope, row.exact_zero, limit_one)
        if limit_one:
            row.limit = float(vals[-1])
        elif row.oracle_slope is not None:
            row.limit = float(vals[-1] / grid[-1] ** row.oracle_slope)
        else:
            row.limit = 0.0
        rows.append(row)
    return rows
