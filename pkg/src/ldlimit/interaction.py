"""System-bath Hamiltonian, one-step unitary and its block structure.

Conventions, fixed everywhere in the package:

* Operators on system (x) bath use the ordering ``kron(system, bath)``, so
  the bath index is the fast index: row ``s * (n + 1) + b``.
* ``a^i_j`` sends ``e_i`` to ``e_j``. The block ``U^i_j`` is the system
  operator multiplying ``a^i_j`` in ``U = sum U^i_j (x) a^i_j``, that is
  ``<e_j| U |e_i>`` with the bath taken as column index ``i``.
* Operators restricted to the excited bath sector (levels ``1..n``) are
  laid out bath-major: row ``(l - 1) * d + s``. The block at block-row
  ``l``, block-column ``j`` is the transition ``e_j -> e_l``.
"""
from dataclasses import dataclass

import numpy as np

from .bath import BathSpec, bath_hamiltonian, discrete_noise
from .matrixcore import as_matrix, hermitian_residual, mat_exp, op_norm

HERMITIAN_TOL = 1e-13
OFFDIAG_TOL = 1e-12


@dataclass(frozen=True)
class SystemSpec:
    """Small system of dimension ``d`` with free Hamiltonian ``H_S``.

    ``D_blocks[i - 1, j - 1]`` is the interaction operator ``D_ij`` that
    multiplies ``a^i_j``; it must satisfy ``D_ij = D_ji^dagger``.
    """

    d: int
    H_S: np.ndarray
    D_blocks: np.ndarray

    def __post_init__(self):
        H = as_matrix(self.H_S, "H_S")
        D = np.asarray(self.D_blocks, dtype=complex)
        d = int(self.d)
        if H.shape != (d, d):
            raise ValueError(f"H_S must be {d}x{d}, got {H.shape}")
        if D.ndim != 4 or D.shape[0] != D.shape[1] or D.shape[2:] != (d, d):
            raise ValueError(
                f"D blocks must have shape (n, n, {d}, {d}), got {D.shape}"
            )
        if not np.all(np.isfinite(D)):
            raise ValueError("D blocks have non-finite entries")
        if hermitian_residual(H) > HERMITIAN_TOL:
            raise ValueError("H_S is not Hermitian")
        dev = np.max(np.abs(D - D.transpose(1, 0, 3, 2).conj()), initial=0.0)
        if dev > HERMITIAN_TOL:
            raise ValueError(f"D blocks violate D_ij = D_ji^dagger (deviation {dev:.3g})")
        H.setflags(write=False)
        D.setflags(write=False)
        object.__setattr__(self, "d", d)
        object.__setattr__(self, "H_S", H)
        object.__setattr__(self, "D_blocks", D)

    @property
    def n(self):
        return self.D_blocks.shape[0]


@dataclass(frozen=True)
class StepUnitary:
    """``U = exp(-i h H)`` with its blocks ``blocks[i, j] = U^i_j``."""

    U: np.ndarray
    blocks: np.ndarray

    @property
    def d(self):
        return self.blocks.shape[2]

    @property
    def n(self):
        return self.blocks.shape[0] - 1

    def excited_block(self):
        """The ``nd x nd`` restriction of U to the excited bath sector."""
        n, d = self.n, self.d
        u4 = self.U.reshape(d, n + 1, d, n + 1)
        return u4[:, 1:, :, 1:].transpose(1, 0, 3, 2).reshape(n * d, n * d)

    def reconstruct(self):
        n = self.n
        total = np.zeros_like(self.U)
        for i in range(n + 1):
            for j in range(n + 1):
                total += np.kron(self.blocks[i, j], discrete_noise(n, i, j))
        return total


def _check_dims(sys, bath):
    if sys.n != bath.n:
        raise ValueError(
            f"D blocks describe n={sys.n} excited levels but the bath has n={bath.n}"
        )


def interaction_operator(sys):
    """The excited-sector interaction ``sum_ij D_ij (x) a^i_j``, bath-major."""
    n, d = sys.n, sys.d
    # block-row l, block-column j holds the coefficient of e_j -> e_l, i.e. D_jl
    return sys.D_blocks.transpose(1, 2, 0, 3).reshape(n * d, n * d)


def assemble_hamiltonian(sys, bath, cp):
    """``H = H_S (x) I + I (x) H_R + (1/h) sum_{i,j>=1} D_ij (x) a^i_j``."""
    _check_dims(sys, bath)
    coupling = _coupling(sys)
    return _free(sys, bath) + coupling / cp.h


def step_generator(sys, bath, cp):
    """``h * H`` assembled without dividing the coupling by ``h``."""
    _check_dims(sys, bath)
    return cp.h * _free(sys, bath) + _coupling(sys)


def _free(sys, bath):
    return (np.kron(sys.H_S, np.eye(bath.dim))
            + np.kron(np.eye(sys.d), bath_hamiltonian(bath)))


def _coupling(sys):
    n = sys.n
    out = np.zeros((sys.d * (n + 1),) * 2, dtype=complex)
    for i in range(1, n + 1):
        for j in range(1, n + 1):
            out += np.kron(sys.D_blocks[i - 1, j - 1], discrete_noise(n, i, j))
    return out


def split_blocks(U, d, bath_dim):
    """Blocks ``U^i_j`` of an operator on system (x) bath."""
    u4 = np.asarray(U).reshape(d, bath_dim, d, bath_dim)
    return u4.transpose(3, 1, 0, 2).copy()


def unitary_step(H, h, d, bath_dim):
    """Exponentiate ``-i h H`` and split the result into bath blocks."""
    return _make_step(mat_exp(-1j * h * np.asarray(H)), d, bath_dim)


def step_unitary(sys, bath, cp):
    """One-collision unitary from the instance, using :func:`step_generator`."""
    return _make_step(mat_exp(-1j * step_generator(sys, bath, cp)), sys.d, bath.dim)


def _make_step(U, d, bath_dim):
    blocks = split_blocks(U, d, bath_dim)
    offdiag = max((op_norm(blocks[0, j]) for j in range(1, bath_dim)), default=0.0)
    offdiag = max(offdiag, max((op_norm(blocks[j, 0]) for j in range(1, bath_dim)), default=0.0))
    if offdiag > OFFDIAG_TOL:
        raise RuntimeError(
            f"vacuum sector of the step unitary is not decoupled (off-diagonal norm {offdiag:.3g})"
        )
    U.setflags(write=False)
    blocks.setflags(write=False)
    return StepUnitary(U, blocks)


def scattering_matrix(sys):
    """``exp(-i D)`` on the excited sector (bath-major layout)."""
    return mat_exp(-1j * interaction_operator(sys))


def scattering_blocks(S, n, d):
    """``blocks[j - 1, l - 1] = S^j_l``, the transition ``e_j -> e_l`` of S."""
    return np.asarray(S).reshape(n, d, n, d).transpose(2, 0, 1, 3)


@dataclass(frozen=True)
class BlockResiduals:
    offdiag: float
    topleft: float
    bottomright: float


def block_expansion_residuals(sys, bath, cp, step=None):
    """Distance of U from its small-``h`` block expansion.

    ``offdiag`` is the largest ``U^0_j`` / ``U^j_0`` block norm, ``topleft``
    compares ``U^0_0`` with ``I - i h (H_S + gamma_0)`` and ``bottomright``
    compares the excited block with ``exp(-i D)``.
    """
    if step is None:
        step = step_unitary(sys, bath, cp)
    n, d = bath.n, sys.d
    offdiag = max(
        max(op_norm(step.blocks[0, j]), op_norm(step.blocks[j, 0])) for j in range(1, n + 1)
    )
    h_eff = sys.H_S + bath.gamma[0] * np.eye(d)
    topleft = op_norm(step.blocks[0, 0] - (np.eye(d) - 1j * cp.h * h_eff))
    bottomright = op_norm(step.excited_block() - scattering_matrix(sys))
    return BlockResiduals(offdiag, topleft, bottomright)


SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)


def q1_instance():
    """Qubit coupled to a two-level bath through ``(pi/3) sigma_x``."""
    sys = SystemSpec(2, np.diag([1.0, -1.0]).astype(complex),
                     (np.pi / 3 * SIGMA_X)[None, None])
    return sys, BathSpec(1, (0.0, 1.0), 1.0)


def random_instance(n, d, seed, beta=1.0, coupling_norm=1.0):
    """Seeded random instance.

    ``H_S`` and the excited-sector coupling are Hermitian Gaussian matrices
    scaled to spectral norm 1 and ``coupling_norm``. Level energies are
    drawn from U[-1, 2] and sorted, so the vacuum is the lowest level.
    """
    rng = np.random.default_rng(seed)

    def herm(k):
        a = rng.normal(size=(k, k)) + 1j * rng.normal(size=(k, k))
        a = (a + a.conj().T) / 2
        return a / np.linalg.norm(a, 2)

    H_S = herm(d)
    D_op = coupling_norm * herm(n * d)
    D_blocks = D_op.reshape(n, d, n, d).transpose(2, 0, 1, 3)
    gamma = np.sort(rng.uniform(-1.0, 2.0, size=n + 1))
    return SystemSpec(d, H_S, D_blocks), BathSpec(n, tuple(gamma), beta)
