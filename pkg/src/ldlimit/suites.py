"""Verification suites run by the command-line driver.

Each suite returns a :class:`SuiteResult` holding its CSV rows and a short
human-readable account of what passed and what did not.
"""
from dataclasses import dataclass, field

import numpy as np

from .bath import BathSpec, CouplingPoint, bath_density_matrix, gibbs_weights
from .dynamics import collision_scattering_check, reduced_error_sweep, step_channel
from .gns import gns_basis, lambda_scaling_table, max_gram_deviation
from .interaction import SystemSpec, block_expansion_residuals
from .limit import assemble_limit_generator, hp_structure_check, sweep_and_fit
from .noisealg import aggregated_ito_check, verify_chain_actions
from .rates import fit_rate

HEADERS = {
    "lemma-sweep": "quantity,i,k,j2,h,value,slope_fit,classification",
    "coeff-sweep": "i,j,k,l,epsilon,h,residual,limit_norm,slope_fit,class_label",
    "dynamics-compare": "h,steps,sup_trace_error,slope_fit",
    "block-check": "h,offdiag,topleft,bottomright",
    "gns-check": "n,beta,h,max_gram_deviation",
    "hp-check": "drift_skew,gauge_unitary,annihilation_zero,creation_zero",
    "noise-algebra": "j,k,l,m,expected,actual,match",
    "scatter-check": "h,residual,slope_fit",
}


@dataclass
class SuiteResult:
    name: str
    passed: bool
    rows: list
    lines: list = field(default_factory=list)

    @property
    def header(self):
        return HEADERS[self.name]


def fmt(x):
    """17 significant digits for floats; plain text for everything else."""
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return f"{float(x):.17g}"
    if x is None:
        return "nan"
    return str(x)


def _slope(fit):
    return None if fit is None else fit.slope


def _in_band(fit, target, band):
    return fit is not None and abs(fit.slope - target) <= band


def run_gns_check(cfg):
    tol = cfg.tolerances["gram"]
    rng = np.random.default_rng(cfg.gns.seed)
    rows, worst = [], 0.0
    for n in cfg.gns.n_values:
        for beta in cfg.gns.beta_values:
            gamma = rng.uniform(-1.0, 2.0, size=n + 1)
            bath = BathSpec(n, tuple(gamma), beta)
            for h in cfg.gns.h_values:
                w = gibbs_weights(bath, CouplingPoint.from_h(h, beta))
                dev = max_gram_deviation(gns_basis(w), bath_density_matrix(w))
                worst = max(worst, dev)
                rows.append((n, beta, h, dev))
    ok = worst < tol
    return SuiteResult("gns-check", ok, rows,
                       [f"max |Gram - I| = {worst:.3g} over {len(rows)} cases (< {tol:g})"])


def run_lemma_sweep(cfg):
    tol = cfg.tolerances
    table = lambda_scaling_table(cfg.bath, cfg.grid)
    rows, bad = [], []
    for r in table:
        for h, v in zip(r.h, r.values):
            rows.append((r.quantity, r.i, r.k, r.j2, h, v, r.slope, r.classification))
        if not r.passed(tol["lemma_slope"], tol["lemma_zero"]):
            bad.append(f"{r.quantity} i={r.i} k={r.k} j={r.j2}: slope {r.slope:.4f}, "
                       f"class {r.classification} (expected {r.claimed})")
    lines = [f"{len(table) - len(bad)}/{len(table)} quantities classified and rated as expected"]
    return SuiteResult("lemma-sweep", not bad, rows, lines + bad)


def run_block_check(cfg):
    tol = cfg.tolerances
    res = [block_expansion_residuals(cfg.system, cfg.bath, CouplingPoint.from_h(h, cfg.bath.beta))
           for h in cfg.grid]
    rows = [(h, r.offdiag, r.topleft, r.bottomright) for h, r in zip(cfg.grid, res)]
    off = max(r.offdiag for r in res)
    tl = fit_rate(cfg.grid, [r.topleft for r in res])
    br = fit_rate(cfg.grid, [r.bottomright for r in res])
    ok_off = off < tol["offdiag"]
    ok_tl = _in_band(tl, 2.0, tol["block_slope_band"])
    ok_br = _in_band(br, 1.0, tol["block_slope_band"])
    lines = [
        f"off-diagonal max {off:.3g} ({'ok' if ok_off else 'FAIL'})",
        f"top-left slope {fmt(_slope(tl))} vs 2 ({'ok' if ok_tl else 'FAIL'})",
        f"bottom-right slope {fmt(_slope(br))} vs 1 ({'ok' if ok_br else 'FAIL'})",
    ]
    return SuiteResult("block-check", ok_off and ok_tl and ok_br, rows, lines)


def run_coeff_sweep(cfg):
    tol = {k: cfg.tolerances[k] for k in
           ("zero", "vacuum_last", "drift_rel", "gauge_slope_min", "rate_band", "little_o_min")}
    sweep = sweep_and_fit(cfg.system, cfg.bath, cfg.grid, cfg.include_vacuum_row, tol)
    rows = []
    for q in sweep.quads:
        (i, j), (k, l) = q.idx
        slope = q.coeff_fit if q.label in ("absorption", "emission") else q.fit
        for h, r in zip(sweep.grid, q.residuals):
            rows.append((i, j, k, l, q.epsilon, h, r, q.limit_norm, _slope(slope), q.label))
    lines = []
    for label, qs in sweep.by_class().items():
        good = sum(q.passed for q in qs)
        lines.append(f"{label}: {good}/{len(qs)} pass")
    for q in sweep.failures():
        lines.append(f"  failing {q.label} {q.idx}: {q.reason}")
    return SuiteResult("coeff-sweep", sweep.passed, rows, lines)


def run_hp_check(cfg):
    tol = cfg.tolerances
    rep = hp_structure_check(assemble_limit_generator(cfg.system, cfg.bath, cfg.include_vacuum_row))
    ok = rep.passed(tol["drift_skew"], tol["gauge_unitary"])
    rows = [(rep.drift_skew, rep.gauge_unitary, rep.annihilation_zero, rep.creation_zero)]
    lines = [f"drift skew {rep.drift_skew:.3g}, gauge unitarity {rep.gauge_unitary:.3g}, "
             f"gauge terms consistent: {rep.gauge_consistent}"]
    return SuiteResult("hp-check", ok, rows, lines)


def run_dynamics_compare(cfg):
    tol = cfg.tolerances
    sweep = reduced_error_sweep(cfg.system, cfg.bath, cfg.rho0, cfg.t, cfg.grid)
    rows = [(h, k, e, _slope(sweep.fit)) for h, k, e in zip(sweep.h, sweep.steps, sweep.errors)]
    ok_rate = _in_band(sweep.fit, 1.0, tol["dynamics_slope_band"])
    ok_last = sweep.errors[-1] < tol["dynamics_last"]

    # D = 0 control: the channel is exactly the free conjugation
    free = SystemSpec(cfg.system.d, cfg.system.H_S, np.zeros_like(cfg.system.D_blocks))
    control = reduced_error_sweep(free, cfg.bath, cfg.rho0, cfg.t, cfg.grid).errors.max()
    ok_control = control < 1e-12

    tp, choi = 0.0, np.inf
    for h in cfg.grid:
        ch = step_channel(cfg.system, cfg.bath, CouplingPoint.from_h(h, cfg.bath.beta))
        tp = max(tp, ch.trace_preservation_error())
        choi = min(choi, ch.choi_min_eigenvalue())
    ok_channel = tp < tol["trace_preservation"] and choi >= tol["choi_min"]

    lines = [
        f"error slope {fmt(_slope(sweep.fit))} vs 1 ({'ok' if ok_rate else 'FAIL'})",
        f"error at h={sweep.h[-1]:g}: {sweep.errors[-1]:.3g} ({'ok' if ok_last else 'FAIL'})",
        f"uncoupled control max error {control:.3g} ({'ok' if ok_control else 'FAIL'})",
        f"channels: trace preservation {tp:.3g}, Choi min eigenvalue {choi:.3g} "
        f"({'ok' if ok_channel else 'FAIL'})",
    ]
    return SuiteResult("dynamics-compare", ok_rate and ok_last and ok_control and ok_channel,
                       rows, lines)


def run_scatter_check(cfg):
    tol = cfg.tolerances
    sc = collision_scattering_check(cfg.system, cfg.bath, cfg.grid)
    rows = [(h, r, _slope(sc.fit)) for h, r in zip(sc.h, sc.residuals)]
    # an exactly vanishing residual (no free motion, no coupling) has no rate to fit
    ok = _in_band(sc.fit, 1.0, tol["scatter_slope_band"]) or sc.residuals.max() < tol["zero"]
    return SuiteResult("scatter-check", ok, rows,
                       [f"residual slope {fmt(_slope(sc.fit))} vs 1 ({'ok' if ok else 'FAIL'})"])


def run_noise_algebra(cfg):
    rep = aggregated_ito_check(cfg.noise_n)
    rows = [(r.j, r.k, r.l, r.m, r.expected_label, r.actual_label, r.match) for r in rep.rows]
    chain = [verify_chain_actions(levels, m) for levels in (1, 2) for m in (1, 2, 3)]
    ok_chain = all(c.passed for c in chain)
    lines = [
        f"Ito table n={cfg.noise_n}: {sum(r.match for r in rep.rows)}/{len(rep.rows)} products match",
        f"chain actions (levels <= 2, m <= 3): {sum(c.checked for c in chain)} checks, "
        f"{sum(len(c.mismatches) for c in chain)} mismatches",
    ]
    return SuiteResult("noise-algebra", rep.passed and ok_chain, rows, lines)


RUNNERS = {
    "gns-check": run_gns_check,
    "lemma-sweep": run_lemma_sweep,
    "block-check": run_block_check,
    "coeff-sweep": run_coeff_sweep,
    "hp-check": run_hp_check,
    "dynamics-compare": run_dynamics_compare,
    "scatter-check": run_scatter_check,
    "noise-algebra": run_noise_algebra,
}


def run_suites(cfg):
    return [RUNNERS[name](cfg) for name in cfg.suites]
