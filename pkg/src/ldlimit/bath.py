"""One piece of the heat bath: level energies, grand-canonical weights, noises.

The step length ``h`` is the primary parameter. The chemical potential is
derived from it through ``h**2 = exp(beta * mu)``, so the fugacity of the
bath equals ``h**2`` and vanishes with the step.
"""
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import logsumexp


@dataclass(frozen=True)
class BathSpec:
    """Bath piece with ``n`` excited levels above the vacuum ``e_0``.

    ``gamma[j]`` is the energy of level ``j`` and ``beta`` the inverse
    temperature.
    """

    n: int
    gamma: tuple
    beta: float

    def __post_init__(self):
        gamma = tuple(float(g) for g in np.ravel(self.gamma))
        object.__setattr__(self, "gamma", gamma)
        if int(self.n) != self.n or self.n < 1:
            raise ValueError(f"bath needs n >= 1 excited levels, got n={self.n}")
        if len(gamma) != self.n + 1:
            raise ValueError(f"gamma must have n+1={self.n + 1} entries, got {len(gamma)}")
        if not all(math.isfinite(g) for g in gamma):
            raise ValueError("gamma entries must be finite")
        if not (math.isfinite(self.beta) and self.beta > 0):
            raise ValueError(f"beta must be positive, got {self.beta}")

    @property
    def dim(self):
        return self.n + 1


@dataclass(frozen=True)
class CouplingPoint:
    """Step length ``h`` and the chemical potential it fixes.

    ``h`` must lie in (0, 1) unless ``allow_nonphysical`` is set; values
    ``h >= 1`` (``mu >= 0``) are accepted only for diagnostics.
    """

    h: float
    mu: float
    allow_nonphysical: bool = False

    @classmethod
    def from_h(cls, h, beta, allow_nonphysical=False):
        h = float(h)
        if not (math.isfinite(beta) and beta > 0):
            raise ValueError(f"beta must be positive, got {beta}")
        if not h > 0:
            raise ValueError(f"h must be positive, got {h}")
        if h >= 1 and not allow_nonphysical:
            raise ValueError(f"h must lie in (0, 1) for the low-density regime, got {h}")
        return cls(h, 2.0 * math.log(h) / beta, allow_nonphysical)

    @property
    def fugacity(self):
        return self.h**2


@dataclass(frozen=True)
class GibbsWeights:
    """Diagonal of the bath density matrix, kept alongside its logarithm."""

    weights: np.ndarray
    log_weights: np.ndarray = field(repr=False)

    @property
    def n(self):
        return len(self.weights) - 1


def gibbs_weights(spec, cp):
    """Occupation probabilities ``beta_j`` of the grand-canonical bath state.

    ``beta_j = h^(2j) exp(-beta gamma_j) / sum_k h^(2k) exp(-beta gamma_k)``,
    evaluated in log space with ``exp(-beta gamma_0)`` factored out.
    """
    if not cp.h > 0:
        raise ValueError(f"h must be positive, got {cp.h}")
    if cp.h >= 1 and not cp.allow_nonphysical:
        raise ValueError(f"h must lie in (0, 1), got {cp.h}")
    j = np.arange(spec.n + 1)
    gamma = np.asarray(spec.gamma)
    log_num = 2.0 * j * math.log(cp.h) - spec.beta * (gamma - gamma[0])
    log_w = log_num - logsumexp(log_num)
    w = np.exp(log_w)
    w.setflags(write=False)
    log_w.setflags(write=False)
    return GibbsWeights(w, log_w)


def bath_density_matrix(w):
    return np.diag(np.asarray(w.weights, dtype=complex))


def discrete_noise(n, i, j):
    """Matrix unit sending ``e_i`` to ``e_j`` and every other basis vector to 0."""
    if not (0 <= i <= n and 0 <= j <= n):
        raise ValueError(f"noise indices ({i}, {j}) out of range 0..{n}")
    a = np.zeros((n + 1, n + 1), dtype=complex)
    a[j, i] = 1.0
    return a


def bath_hamiltonian(spec):
    return np.diag(np.asarray(spec.gamma, dtype=complex))


def number_operator(n):
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    return np.diag(np.arange(n + 1).astype(complex))
