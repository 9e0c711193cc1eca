"""Limit coefficients of the GNS step and the rate sweeps that approach them.

A coefficient ``U~^{i,j}_{k,l}(h)`` converges in the sense

    (U~^{i,j}_{k,l} - delta I) / h**eps  ->  L^{i,j}_{k,l}

with ``eps = 1`` for the vacuum-to-vacuum entry, ``1/2`` when exactly one
side is the vacuum pair and ``0`` otherwise. The non-zero limits are the
drift ``-i (H_S + gamma_0)`` and the gauge terms ``S^j_l - delta_jl I``
between pairs ``(i, j) -> (i, l)`` with ``j, l >= 1``.

The gauge terms appear for every row ``i``, including ``i = 0``: the GNS
vector ``X^0_j`` is ``|e_j><e_0| / sqrt(beta_0)`` and left multiplication by
``U`` sends it to ``sum_l U^j_l X^0_l`` exactly. Pass
``include_vacuum_row=False`` to drop that row and keep only ``i >= 1``.
"""
from dataclasses import dataclass, field

import numpy as np

from .bath import CouplingPoint, bath_density_matrix, gibbs_weights
from .gns import coefficient_table, gns_basis, multiplicity_pairs, pairs
from .interaction import scattering_blocks, scattering_matrix, step_unitary
from .matrixcore import op_norm, unitary_residual
from .rates import RateFit, fit_rate, tail_decreasing

VACUUM = (0, 0)

DEFAULT_TOLERANCES = {
    "zero": 1e-12,
    "vacuum_last": 1e-2,
    "drift_rel": 1e-2,
    "gauge_slope_min": 0.9,
    "rate_band": 0.1,
    "little_o_min": 1.1,
    "drift_skew": 1e-12,
    "gauge_unitary": 1e-10,
}

__all__ = ["RateFit", "epsilon_exponent", "limit_operator", "rescaled_residual",
           "LimitGenerator", "assemble_limit_generator", "hp_structure_check",
           "index_class", "sweep_and_fit", "structural_zero_rule"]


def _check_idx(idx, n):
    (i, j), (k, l) = idx
    if not all(0 <= x <= n for x in (i, j, k, l)):
        raise ValueError(f"index {idx} out of range 0..{n}")


def epsilon_exponent(idx, n=None):
    """Rescaling power of a coefficient index ``((i, j), (k, l))``."""
    if n is not None:
        _check_idx(idx, n)
    src, dst = tuple(idx[0]), tuple(idx[1])
    if src == VACUUM and dst == VACUUM:
        return 1.0
    if (src == VACUUM) != (dst == VACUUM):
        return 0.5
    return 0.0


def _is_gauge(idx, include_vacuum_row):
    (i, j), (k, l) = idx
    return i == k and j >= 1 and l >= 1 and (i >= 1 or include_vacuum_row)


def limit_operator(idx, sys, bath, include_vacuum_row=True, S_blocks=None):
    """Limit ``L^{i,j}_{k,l}`` of the rescaled coefficient."""
    n, d = bath.n, sys.d
    _check_idx(idx, n)
    (i, j), (k, l) = idx
    if (i, j) == VACUUM and (k, l) == VACUUM:
        return -1j * (sys.H_S + bath.gamma[0] * np.eye(d))
    if _is_gauge(idx, include_vacuum_row):
        if S_blocks is None:
            S_blocks = scattering_blocks(scattering_matrix(sys), n, d)
        return S_blocks[j - 1, l - 1] - (j == l) * np.eye(d)
    return np.zeros((d, d), dtype=complex)


def rescaled_residual(table, idx, sys, bath, h, include_vacuum_row=True, S_blocks=None):
    """``|| (U~_idx - delta I) / h^eps - L_idx ||`` in the spectral norm."""
    src, dst = tuple(idx[0]), tuple(idx[1])
    coeff = table[(src, dst)]
    delta = np.eye(sys.d) if src == dst else 0.0
    eps = epsilon_exponent(idx)
    lim = limit_operator(idx, sys, bath, include_vacuum_row, S_blocks)
    return op_norm((coeff - delta) / h**eps - lim)


# --- limit generator -------------------------------------------------------


@dataclass(frozen=True)
class LimitGenerator:
    """Coefficients of the limit quantum Langevin equation.

    ``gauge_coeffs`` maps ``(src, dst)`` multiplicity pairs to the non-zero
    ``S^j_l - delta_jl I`` blocks. ``S_full`` is the scattering operator on
    system (x) multiplicity space, block-row ``dst`` and block-column ``src``
    ordered as :func:`ldlimit.gns.multiplicity_pairs`.
    """

    H_eff: np.ndarray
    S_blocks: np.ndarray
    gauge_coeffs: dict
    S_full: np.ndarray
    n: int
    include_vacuum_row: bool = True

    @property
    def drift(self):
        return -1j * self.H_eff

    def coefficient(self, idx):
        src, dst = tuple(idx[0]), tuple(idx[1])
        d = self.H_eff.shape[0]
        if src == VACUUM and dst == VACUUM:
            return self.drift
        return self.gauge_coeffs.get((src, dst), np.zeros((d, d), dtype=complex))


def assemble_limit_generator(sys, bath, include_vacuum_row=True):
    n, d = bath.n, sys.d
    S_blocks = scattering_blocks(scattering_matrix(sys), n, d)
    H_eff = sys.H_S + bath.gamma[0] * np.eye(d)
    mult = multiplicity_pairs(n)
    pos = {p: q for q, p in enumerate(mult)}
    gauge = {}
    S_full = np.eye(len(mult) * d, dtype=complex)
    for src in mult:
        for dst in mult:
            if _is_gauge((src, dst), include_vacuum_row):
                blk = S_blocks[src[1] - 1, dst[1] - 1] - (src == dst) * np.eye(d)
                gauge[(src, dst)] = blk
                r, c = pos[dst] * d, pos[src] * d
                S_full[r:r + d, c:c + d] += blk
    return LimitGenerator(H_eff, S_blocks, gauge, S_full, n, include_vacuum_row)


@dataclass(frozen=True)
class HPReport:
    drift_skew: float
    annihilation_zero: bool
    creation_zero: bool
    gauge_unitary: float
    gauge_consistent: bool

    def passed(self, drift_tol=1e-12, unitary_tol=1e-10):
        return (self.drift_skew < drift_tol and self.gauge_unitary < unitary_tol
                and self.annihilation_zero and self.creation_zero and self.gauge_consistent)


def hp_structure_check(gen):
    """Check the unitarity conditions of a Langevin equation on the limit.

    With no creation or annihilation coefficients the conditions reduce to
    a skew-Hermitian drift and gauge coefficients of the form ``S - I``
    with ``S`` unitary.
    """
    drift = gen.drift
    mult = multiplicity_pairs(gen.n)
    annihilation_zero = all(not np.any(gen.coefficient((p, VACUUM))) for p in mult)
    creation_zero = all(not np.any(gen.coefficient((VACUUM, p))) for p in mult)
    d = drift.shape[0]
    gauge_full = gen.S_full - np.eye(gen.S_full.shape[0])
    consistent = True
    for a, src in enumerate(mult):
        for b, dst in enumerate(mult):
            blk = gauge_full[b * d:(b + 1) * d, a * d:(a + 1) * d]
            consistent &= bool(np.array_equal(blk, gen.coefficient((src, dst))))
    return HPReport(op_norm(drift + drift.conj().T), annihilation_zero, creation_zero,
                    unitary_residual(gen.S_full), consistent)


# --- index classes and the sweep -----------------------------------------


def structural_zero_rule(idx, n=None):
    """True when ``U~_idx`` vanishes for every vacuum-decoupled unitary.

    Derived from ``U~^{i,j}_{k,l} = sum_{a,c} (X^i_j rho X^k_l^dagger)[a, c] U^a_c``
    with ``U^a_c = 0`` whenever exactly one of ``a, c`` is 0, and
    ``lambda_i^k = 0`` for ``1 <= k < i``.
    """
    (i, j), (k, l) = idx
    left_diag, right_diag = i == j, k == l
    if not left_diag and not right_diag:
        return i != k or ((j == 0) != (l == 0))
    if left_diag and not right_diag:
        return k == 0 or l == 0 or (i >= 1 and 1 <= k < i)
    if right_diag and not left_diag:
        return i == 0 or j == 0 or (k >= 1 and 1 <= i < k)
    return False


def index_class(idx, include_vacuum_row=True):
    """Class label and exact leading power of the class metric.

    Labels: ``zero`` (identically zero), ``drift``, ``absorption``
    (``U~^{i,j}_{0,0}``), ``emission`` (``U~^{0,0}_{k,l}``), ``gauge``,
    ``return`` (``U~^{i,0}_{i,0} - I``) and ``cross`` (``i != k``, both
    ``>= 1``). The power refers to the unrescaled coefficient for the
    vacuum-coupling classes and to the rescaled residual otherwise; it is
    None where the class only fixes a lower bound or a zero.
    """
    src, dst = tuple(idx[0]), tuple(idx[1])
    if src == VACUUM and dst == VACUUM:
        return "drift", 1.0
    if structural_zero_rule((src, dst)):
        return "zero", None
    if dst == VACUUM:
        return "absorption", float(src[0])
    if src == VACUUM:
        return "emission", float(dst[0])
    if _is_gauge((src, dst), include_vacuum_row):
        return "gauge", 1.0
    if src == dst:
        return "return", 1.0
    return "cross", float(src[0] + dst[0])


@dataclass
class QuadResult:
    idx: tuple
    label: str
    epsilon: float
    residuals: np.ndarray
    coeff_norms: np.ndarray
    limit_norm: float
    fit: RateFit
    coeff_fit: RateFit
    expected_slope: float
    passed: bool
    reason: str = ""


@dataclass
class SweepResult:
    grid: np.ndarray
    quads: list
    tolerances: dict = field(default_factory=dict)

    def by_class(self):
        out = {}
        for q in self.quads:
            out.setdefault(q.label, []).append(q)
        return out

    def class_summary(self):
        return {label: all(q.passed for q in qs) for label, qs in self.by_class().items()}

    @property
    def passed(self):
        return all(q.passed for q in self.quads)

    def failures(self):
        return [q for q in self.quads if not q.passed]


def coefficient_tables(sys, bath, grid):
    """Step unitary, weights and coefficient table at each grid point."""
    out = []
    for h in grid:
        cp = CouplingPoint.from_h(h, bath.beta)
        step = step_unitary(sys, bath, cp)
        w = gibbs_weights(bath, cp)
        table = coefficient_table(step, gns_basis(w), bath_density_matrix(w))
        out.append((cp, step, w, table))
    return out


def _judge(label, expected, resid, norms, fit, coeff_fit, h_eff_norm, tol):
    if label == "zero":
        worst = float(np.max(norms))
        return worst < tol["zero"], f"max |U~| = {worst:.3g}"
    if label == "drift":
        ok = tail_decreasing(resid) and resid[-1] < tol["drift_rel"] * h_eff_norm
        return ok, f"last residual {resid[-1]:.3g} vs {tol['drift_rel'] * h_eff_norm:.3g}"
    if label in ("absorption", "emission"):
        ok_last = tail_decreasing(resid) and resid[-1] < tol["vacuum_last"]
        ok_rate = coeff_fit is not None and abs(coeff_fit.slope - expected) <= tol["rate_band"]
        slope = coeff_fit.slope if coeff_fit else float("nan")
        return ok_last and ok_rate, (
            f"|U~|/sqrt(h) last {resid[-1]:.3g} (< {tol['vacuum_last']:g}), "
            f"slope {slope:.3f} vs {expected:g}")
    if label == "gauge":
        ok = fit is not None and fit.slope >= tol["gauge_slope_min"] and tail_decreasing(resid)
        return ok, f"slope {fit.slope if fit else float('nan'):.3f}"
    if label == "return":
        ok = fit is not None and abs(fit.slope - expected) <= tol["rate_band"]
        return ok, f"slope {fit.slope if fit else float('nan'):.3f}"
    # cross: o(h)
    ok = (fit is not None and fit.slope >= tol["little_o_min"]) or float(np.max(norms)) < tol["zero"]
    return ok, f"slope {fit.slope if fit else float('nan'):.3f}"


def sweep_and_fit(sys, bath, grid, include_vacuum_row=True, tolerances=None, tables=None):
    """Rescaled residuals of every coefficient over ``grid`` with fitted rates."""
    tol = dict(DEFAULT_TOLERANCES)
    tol.update(tolerances or {})
    grid = np.asarray(grid, dtype=float)
    if grid.size < 6:
        raise ValueError("the coefficient sweep needs a geometric grid of at least 6 points")
    n, d = bath.n, sys.d
    if tables is None:
        tables = coefficient_tables(sys, bath, grid)
    S_blocks = scattering_blocks(scattering_matrix(sys), n, d)
    h_eff_norm = op_norm(sys.H_S + bath.gamma[0] * np.eye(d))
    quads = []
    for src in pairs(n):
        for dst in pairs(n):
            idx = (src, dst)
            label, expected = index_class(idx, include_vacuum_row)
            eps = epsilon_exponent(idx)
            lim = limit_operator(idx, sys, bath, include_vacuum_row, S_blocks)
            resid = np.array([
                rescaled_residual(t, idx, sys, bath, h, include_vacuum_row, S_blocks)
                for h, (_, _, _, t) in zip(grid, tables)
            ])
            norms = np.array([op_norm(t[idx]) for (_, _, _, t) in tables])
            fit = fit_rate(grid, resid)
            coeff_fit = fit_rate(grid, norms)
            ok, why = _judge(label, expected, resid, norms, fit, coeff_fit, h_eff_norm, tol)
            quads.append(QuadResult(idx, label, eps, resid, norms, op_norm(lim), fit,
                                    coeff_fit, expected, ok, why))
    return SweepResult(grid, quads, tol)
