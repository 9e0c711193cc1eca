"""Discrete noises on a finite atom chain and the aggregated Ito table.

A chain of ``m`` sites, each a copy of ``C^(levels+1)``, has the basis
``e_sigma`` where ``sigma`` assigns an excited level ``1..levels`` to some
sites and leaves the others in the ground state ``Omega = e_0``.

For the limit noises, ``da^a_b`` with multiplicity indices ``a, b`` is
represented by the matrix unit ``E_{b,a}``, so that
``da^a_b da^c_d = delta_{a,d} da^c_b``.
"""
import itertools
from dataclasses import dataclass

import numpy as np

from .bath import discrete_noise


@dataclass(frozen=True)
class MultiplicityIndex:
    i: int
    j: int

    def __post_init__(self):
        if self.i < 0 or self.j < 0:
            raise ValueError(f"multiplicity index ({self.i}, {self.j}) has a negative entry")
        if (self.i, self.j) == (0, 0):
            raise ValueError("(0, 0) is the vacuum pair, not a multiplicity index")

    @classmethod
    def coerce(cls, x):
        return x if isinstance(x, cls) else cls(*x)

    def as_tuple(self):
        return (self.i, self.j)


@dataclass(frozen=True)
class ChainBasisElement:
    """``e_sigma``; ``assignment`` maps sites ``1..m`` to excited levels."""

    m: int
    assignment: tuple  # sorted ((site, level), ...)

    def __post_init__(self):
        a = tuple(sorted((int(s), int(v)) for s, v in dict(self.assignment).items()))
        if len(a) != len(self.assignment):
            raise ValueError("a site carries more than one excitation")
        for s, v in a:
            if not 1 <= s <= self.m:
                raise ValueError(f"site {s} outside 1..{self.m}")
            if v < 1:
                raise ValueError(f"site {s} has non-excited level {v}")
        object.__setattr__(self, "assignment", a)

    def level(self, site):
        return dict(self.assignment).get(site, 0)

    def index(self, levels):
        """Position in the kron basis (site 1 is the slowest index)."""
        idx = 0
        for site in range(1, self.m + 1):
            idx = idx * (levels + 1) + self.level(site)
        return idx

    def vector(self, levels):
        v = np.zeros((levels + 1) ** self.m, dtype=np.int64)
        v[self.index(levels)] = 1
        return v


def chain_basis(levels, m):
    for lv in itertools.product(range(levels + 1), repeat=m):
        yield ChainBasisElement(m, tuple((s + 1, v) for s, v in enumerate(lv) if v))


def chain_noise_operator(levels, m, k, i, j):
    """``a^i_j`` at site ``k`` and identity on the other ``m - 1`` sites."""
    if levels < 1 or m < 1:
        raise ValueError(f"need levels >= 1 and m >= 1, got levels={levels}, m={m}")
    if not 1 <= k <= m:
        raise ValueError(f"site {k} outside 1..{m}")
    local = discrete_noise(levels, i, j).real.astype(np.int64)
    eye = np.eye(levels + 1, dtype=np.int64)
    out = np.ones((1, 1), dtype=np.int64)
    for site in range(1, m + 1):
        out = np.kron(out, local if site == k else eye)
    return out


def combinatorial_action(sigma, k, i, j):
    """Image of ``e_sigma`` under ``a^i_j(k)``, or None when it vanishes."""
    lv = sigma.level(k)
    rest = tuple(e for e in sigma.assignment if e[0] != k)
    if i != 0 and j != 0:
        return ChainBasisElement(sigma.m, rest + ((k, j),)) if lv == i else None
    if i != 0:
        return ChainBasisElement(sigma.m, rest) if lv == i else None
    if j != 0:
        return ChainBasisElement(sigma.m, sigma.assignment + ((k, j),)) if lv == 0 else None
    return sigma if lv == 0 else None


@dataclass
class ActionReport:
    levels: int
    m: int
    checked: int
    mismatches: list

    @property
    def passed(self):
        return not self.mismatches


def verify_chain_actions(levels, m):
    """Compare every ``a^i_j(k)`` on every ``e_sigma`` with the set formulas."""
    basis = list(chain_basis(levels, m))
    checked = 0
    mismatches = []
    for k in range(1, m + 1):
        for i in range(levels + 1):
            for j in range(levels + 1):
                A = chain_noise_operator(levels, m, k, i, j)
                for sigma in basis:
                    got = A @ sigma.vector(levels)
                    image = combinatorial_action(sigma, k, i, j)
                    want = np.zeros_like(got) if image is None else image.vector(levels)
                    checked += 1
                    if not np.array_equal(got, want):
                        mismatches.append((k, i, j, sigma.assignment))
    return ActionReport(levels, m, checked, mismatches)


# --- limit noises -----------------------------------------------------------


def ito_product(a, b, c, d):
    """``da^a_b da^c_d``: the pair ``(c, b)`` if ``a == d``, otherwise None."""
    a, b, c, d = (MultiplicityIndex.coerce(x) for x in (a, b, c, d))
    return (c, b) if a == d else None


def multiplicity_indices(n, include_vacuum_row=False):
    """Pairs ``(i, j)`` used to label the multiplicity space.

    By default only pairs with both entries ``>= 1``, which carry the
    aggregated noises; ``include_vacuum_row`` adds ``(0, j)``.
    """
    lo = 0 if include_vacuum_row else 1
    return [(i, j) for i in range(lo, n + 1) for j in range(1, n + 1)]


def matrix_unit(index, row, col):
    E = np.zeros((len(index),) * 2, dtype=np.int64)
    E[index[row], index[col]] = 1
    return E


def noise_matrix(index, upper, lower):
    """Matrix unit representing ``da^upper_lower``, i.e. ``E_{lower, upper}``."""
    return matrix_unit(index, tuple(lower), tuple(upper))


def aggregated_noise(n, j, k, include_vacuum_row=False):
    """``A^j_k = sum_i E_{(i,k),(i,j)}`` with ``i`` over ``1..n`` (or ``0..n``)."""
    labels = multiplicity_indices(n, include_vacuum_row)
    index = {p: r for r, p in enumerate(labels)}
    lo = 0 if include_vacuum_row else 1
    A = np.zeros((len(labels),) * 2, dtype=np.int64)
    for i in range(lo, n + 1):
        A[index[(i, k)], index[(i, j)]] += 1
    return A


@dataclass
class ItoRow:
    j: int
    k: int
    l: int
    m: int
    expected: np.ndarray
    actual: np.ndarray
    expected_label: str
    actual_label: str

    @property
    def match(self):
        return bool(np.array_equal(self.expected, self.actual))


@dataclass
class ItoReport:
    n: int
    rows: list

    @property
    def passed(self):
        return all(r.match for r in self.rows)


def _label(M, A):
    if not M.any():
        return "0"
    for (j, k), X in A.items():
        if np.array_equal(M, X):
            return f"A^{j}_{k}"
    return "other"


def aggregated_ito_check(n, include_vacuum_row=False):
    """Check ``A^j_k A^m_l = delta_{jl} A^m_k`` for all ``j, k, l, m`` in ``1..n``."""
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    A = {(j, k): aggregated_noise(n, j, k, include_vacuum_row)
         for j in range(1, n + 1) for k in range(1, n + 1)}
    zero = np.zeros_like(A[(1, 1)])
    rows = []
    for j, k, l, m in itertools.product(range(1, n + 1), repeat=4):
        expected = A[(m, k)] if j == l else zero
        actual = A[(j, k)] @ A[(m, l)]
        rows.append(ItoRow(j, k, l, m, expected, actual, _label(expected, A), _label(actual, A)))
    return ItoReport(n, rows)


def matrix_unit_homomorphism_check(n):
    """Exhaustive check that ``da^a_b -> E_{b,a}`` respects :func:`ito_product`."""
    labels = [(i, j) for i in range(n + 1) for j in range(n + 1) if (i, j) != (0, 0)]
    index = {p: r for r, p in enumerate(labels)}
    E = {(a, b): noise_matrix(index, a, b) for a in labels for b in labels}
    for a, b, c, d in itertools.product(labels, repeat=4):
        prod = E[(a, b)] @ E[(c, d)]
        res = ito_product(a, b, c, d)
        want = np.zeros_like(prod) if res is None else E[(res[0].as_tuple(), res[1].as_tuple())]
        if not np.array_equal(prod, want):
            return False
    return True
