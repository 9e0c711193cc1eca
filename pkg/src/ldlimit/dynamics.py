"""Reduced repeated-interaction dynamics and its comparison with the limit.

Each collision couples the system to a fresh bath piece in the state
``rho_beta``. Tracing the piece out gives a CPTP map with Kraus operators
``sqrt(beta_m) U^m_l``. The limit equation has no creation or annihilation
terms and its gauge noises vanish in the vacuum, so the limit reduced
dynamics is conjugation by ``exp(-i H_S t)`` (the ``gamma_0`` phase cancels).
"""
from dataclasses import dataclass
from math import comb

import numpy as np

from .bath import CouplingPoint, gibbs_weights
from .gns import multiplicity_pairs
from .interaction import scattering_matrix, step_unitary
from .limit import coefficient_tables
from .matrixcore import as_matrix, mat_exp, op_norm
from .rates import fit_rate

TP_TOL = 1e-11
CHOI_TOL = -1e-10
STATE_TOL = 1e-12


@dataclass(frozen=True)
class QuantumChannel:
    d: int
    kraus: np.ndarray  # shape (count, d, d)

    def __call__(self, rho):
        K = self.kraus
        return np.einsum("kab,bc,kdc->ad", K, rho, K.conj())

    def trace_preservation_error(self):
        K = self.kraus
        return op_norm(np.einsum("kba,kbc->ac", K.conj(), K) - np.eye(self.d))

    def choi(self):
        """``sum_ab |a><b| (x) Phi(|a><b|)``."""
        K = self.kraus
        d = self.d
        return np.einsum("kac,kbd->abcd", K, K.conj()).transpose(0, 2, 1, 3).reshape(d * d, d * d)

    def choi_min_eigenvalue(self):
        return float(np.linalg.eigvalsh(self.choi()).min())

    def superoperator(self):
        """Matrix acting on row-major ``vec(rho)``."""
        K = self.kraus
        return np.einsum("kab,kcd->acbd", K, K.conj()).reshape(self.d**2, self.d**2)

    def is_valid(self, tp_tol=TP_TOL, choi_tol=CHOI_TOL):
        return self.trace_preservation_error() < tp_tol and self.choi_min_eigenvalue() >= choi_tol


def identity_channel(d):
    return QuantumChannel(d, np.eye(d, dtype=complex)[None])


def check_density_matrix(rho, tol=STATE_TOL, psd_tol=1e-10):
    rho = as_matrix(rho, "rho")
    if rho.shape[0] != rho.shape[1]:
        raise ValueError("density matrix must be square")
    if op_norm(rho - rho.conj().T) > tol:
        raise ValueError("density matrix is not Hermitian")
    if abs(np.trace(rho) - 1) > tol:
        raise ValueError(f"density matrix has trace {np.trace(rho).real:.15g}")
    if np.linalg.eigvalsh((rho + rho.conj().T) / 2).min() < -psd_tol:
        raise ValueError("density matrix has a negative eigenvalue")
    return rho


def step_channel(sys, bath, cp, step=None):
    """Reduced one-collision map with Kraus operators ``sqrt(beta_m) U^m_l``."""
    if step is None:
        step = step_unitary(sys, bath, cp)
    w = gibbs_weights(bath, cp).weights
    kraus = np.sqrt(w)[:, None, None, None] * step.blocks
    return QuantumChannel(sys.d, kraus.reshape(-1, sys.d, sys.d))


def iterate(ch, rho0, k):
    """``k``-fold application of the channel."""
    if k < 0:
        raise ValueError("number of steps must be non-negative")
    rho = np.array(rho0, dtype=complex)
    for _ in range(k):
        rho = ch(rho)
    return rho


def trajectory(ch, rho0, k):
    """States after ``0..k`` applications, stacked along the first axis."""
    d = ch.d
    T = ch.superoperator()
    out = np.empty((k + 1, d * d), dtype=complex)
    out[0] = np.asarray(rho0, dtype=complex).reshape(-1)
    for m in range(k):
        out[m + 1] = T @ out[m]
    return out.reshape(k + 1, d, d)


def limit_conjugation(rho0, t, H_S):
    """``exp(-i H_S t) rho0 exp(i H_S t)``."""
    if t < 0:
        raise ValueError("time must be non-negative")
    V = mat_exp(-1j * t * np.asarray(H_S, dtype=complex))
    return V @ rho0 @ V.conj().T


@dataclass
class ErrorSweep:
    h: np.ndarray
    steps: np.ndarray
    errors: np.ndarray
    fit: object


def reduced_error_sweep(sys, bath, rho0, t, grid):
    """Sup over steps of the trace distance to the limit conjugation."""
    if t <= 0:
        raise ValueError("time horizon must be positive")
    rho0 = check_density_matrix(rho0)
    grid = np.asarray(grid, dtype=float)
    errors, steps = [], []
    for h in grid:
        cp = CouplingPoint.from_h(h, bath.beta)
        k_max = int(np.floor(t / h + 1e-9))
        states = trajectory(step_channel(sys, bath, cp), rho0, k_max)
        ref = np.array([limit_conjugation(rho0, k * h, sys.H_S) for k in range(k_max + 1)])
        sv = np.linalg.svd(states - ref, compute_uv=False)
        errors.append(float(sv.sum(axis=1).max()))
        steps.append(k_max)
    errors = np.array(errors)
    return ErrorSweep(grid, np.array(steps), errors, fit_rate(grid, errors))


@dataclass
class ScatterSweep:
    h: np.ndarray
    residuals: np.ndarray
    fit: object


def collision_scattering_check(sys, bath, grid):
    """Distance of the excited block of U from ``exp(-i D)`` over ``grid``."""
    S = scattering_matrix(sys)
    grid = np.asarray(grid, dtype=float)
    res = np.array([
        op_norm(step_unitary(sys, bath, CouplingPoint.from_h(h, bath.beta)).excited_block() - S)
        for h in grid
    ])
    return ScatterSweep(grid, res, fit_rate(grid, res))


# --- truncated GNS chain ---------------------------------------------------


@dataclass
class SectorResult:
    """State of system (x) chain after ``m`` collisions.

    Configuration ``r`` carries excitations ``(sites[r, c], pairs[r, c])``
    for the columns ``c`` with ``sites[r, c] > 0``; ``vectors[r]`` is the
    system vector attached to it. Pairs are flat indices
    ``i * (n + 1) + j``. ``discarded[p]`` is the squared norm projected out
    at collision ``p + 1``.
    """

    sites: np.ndarray
    pairs: np.ndarray
    vectors: np.ndarray
    discarded: np.ndarray
    K: int
    n: int

    @property
    def norm_squared(self):
        return float(np.vdot(self.vectors, self.vectors).real)

    @property
    def total_discarded(self):
        return float(self.discarded.sum())

    @property
    def amplitudes(self):
        """Configurations as sorted ``((site, (i, j)), ...)`` tuples."""
        out = {}
        m = self.n + 1
        for s_row, p_row, v in zip(self.sites, self.pairs, self.vectors):
            key = tuple(sorted((int(s), divmod(int(p), m)) for s, p in zip(s_row, p_row) if s > 0))
            out[key] = out.get(key, 0) + v
        return out

    def vacuum_component(self):
        return self.vectors[(self.sites == 0).all(axis=1)].sum(axis=0)

    def reduced_state(self):
        return self.vectors.T @ self.vectors.conj()


MEMORY_BUDGET = 2_000_000  # complex amplitudes


def sector_simulate(sys, bath, cp, m, K, psi0, initial=None, table=None,
                    memory_budget=MEMORY_BUDGET):
    """Run ``m`` collisions of the GNS chain kept to at most ``K`` excitations.

    ``initial`` maps sites ``1..m`` to non-vacuum pairs ``(i, j)``; other
    sites start in the GNS vacuum. After each collision the components with
    more than ``K`` excitations are removed and their squared norm recorded.
    """
    if K not in (1, 2):
        raise ValueError(f"K must be 1 or 2, got {K}")
    n, d = bath.n, sys.d
    mult = len(multiplicity_pairs(n))
    configs = sum(comb(m, r) * mult**r for r in range(K + 1))
    if configs * d > memory_budget:
        raise MemoryError(
            f"{configs} configurations of dimension {d} exceed the budget of {memory_budget}"
        )
    initial = {int(s): tuple(p) for s, p in dict(initial or {}).items()}
    if len(initial) > K:
        raise ValueError("initial configuration already exceeds K excitations")
    for site, pair in initial.items():
        if not 1 <= site <= m or pair == (0, 0) or not all(0 <= x <= n for x in pair):
            raise ValueError(f"invalid initial excitation {pair} at site {site}")
    if table is None:
        table = coefficient_tables(sys, bath, [cp.h])[0][3]
    side = (n + 1) ** 2
    E = table.entries.reshape(side, side, d, d)  # [src, dst, s, t]

    psi0 = np.asarray(psi0, dtype=complex)
    psi0 = psi0 / np.linalg.norm(psi0)
    # past excitations only; sites still ahead are in their initial state
    sites = np.zeros((1, K), dtype=np.int64)
    pairs = np.zeros((1, K), dtype=np.int64)
    vectors = psi0[None, :]
    discarded = np.zeros(m)
    ahead = len(initial)

    for site in range(1, m + 1):
        i, j = initial.get(site, (0, 0))
        alpha = i * (n + 1) + j
        if alpha:
            ahead -= 1
        out = np.einsum("bst,rt->rbs", E[alpha], vectors)
        count = (sites > 0).sum(axis=1)
        room = count + ahead + 1 <= K
        lost = out[~room, 1:]
        discarded[site - 1] = float(np.vdot(lost, lost).real)

        keep = np.flatnonzero(room)
        n_new = keep.size * (side - 1)
        new_sites = np.repeat(sites[keep], side - 1, axis=0)
        new_pairs = np.repeat(pairs[keep], side - 1, axis=0)
        if n_new:
            col = count[keep].repeat(side - 1)
            rows = np.arange(n_new)
            new_sites[rows, col] = site
            new_pairs[rows, col] = np.tile(np.arange(1, side), keep.size)
        sites = np.concatenate([sites, new_sites])
        pairs = np.concatenate([pairs, new_pairs])
        vectors = np.concatenate([out[:, 0], out[keep, 1:].reshape(-1, d)])
    return SectorResult(sites, pairs, vectors, discarded, K, n)
