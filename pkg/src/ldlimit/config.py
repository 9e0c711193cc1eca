"""JSON run configuration.

Complex matrix entries are either plain numbers or ``[re, im]`` pairs;
matrices are row-major nested lists. A minimal document::

    {
      "system": {"d": 2, "H_S": [[1, 0], [0, -1]],
                 "D": {"1,1": [[0, 1.0471975511965976], [1.0471975511965976, 0]]}},
      "bath": {"n": 1, "gamma": [0, 1], "beta": 1}
    }

``"random_instance": {"n": 2, "d": 2, "seed": 1}`` may replace the
``system`` and ``bath`` entries.
"""
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .bath import BathSpec
from .dynamics import check_density_matrix
from .interaction import SystemSpec, random_instance
from .rates import geometric_grid

SUITES = (
    "gns-check",
    "lemma-sweep",
    "block-check",
    "coeff-sweep",
    "hp-check",
    "dynamics-compare",
    "scatter-check",
    "noise-algebra",
)
RATE_SUITES = {"lemma-sweep", "block-check", "coeff-sweep", "dynamics-compare", "scatter-check"}

DEFAULT_TOLERANCES = {
    # coefficient sweep and HP check
    "zero": 1e-12,
    "vacuum_last": 1e-2,
    "drift_rel": 1e-2,
    "gauge_slope_min": 0.9,
    "rate_band": 0.1,
    "little_o_min": 1.1,
    "drift_skew": 1e-12,
    "gauge_unitary": 1e-10,
    # other suites
    "gram": 1e-10,
    "lemma_slope": 0.05,
    "lemma_zero": 1e-13,
    "offdiag": 1e-12,
    "block_slope_band": 0.1,
    "dynamics_slope_band": 0.2,
    "dynamics_last": 1e-2,
    "scatter_slope_band": 0.1,
    "trace_preservation": 1e-11,
    "choi_min": -1e-10,
}


class ConfigError(ValueError):
    """Invalid configuration; the message names the offending field."""


@dataclass
class GnsCheckSpec:
    n_values: tuple = (1, 2, 3, 4)
    beta_values: tuple = (0.5, 1.0, 2.0)
    h_values: tuple = (0.3, 0.1, 0.03, 0.01)
    seed: int = 0


@dataclass
class RunConfig:
    system: SystemSpec
    bath: BathSpec
    grid: np.ndarray
    grid_spec: dict
    t: float = 1.0
    rho0: np.ndarray = None
    suites: tuple = SUITES
    out: str = "out"
    tolerances: dict = field(default_factory=lambda: dict(DEFAULT_TOLERANCES))
    seed: int = None
    gns: GnsCheckSpec = field(default_factory=GnsCheckSpec)
    noise_n: int = None
    include_vacuum_row: bool = True
    source: str = ""


def parse_complex(x, where):
    if isinstance(x, (int, float)) and not isinstance(x, bool):
        return complex(x)
    if isinstance(x, (list, tuple)) and len(x) == 2 and all(
        isinstance(v, (int, float)) and not isinstance(v, bool) for v in x
    ):
        return complex(x[0], x[1])
    raise ConfigError(f"{where}: expected a number or [re, im], got {x!r}")


def parse_matrix(rows, where, shape=None):
    if not isinstance(rows, list) or not rows or not all(isinstance(r, list) for r in rows):
        raise ConfigError(f"{where}: expected a non-empty list of rows")
    width = len(rows[0])
    if any(len(r) != width for r in rows):
        raise ConfigError(f"{where}: rows have different lengths")
    M = np.array([[parse_complex(v, f"{where}[{a}][{b}]") for b, v in enumerate(r)]
                  for a, r in enumerate(rows)])
    if shape is not None and M.shape != shape:
        raise ConfigError(f"{where}: expected shape {shape}, got {M.shape}")
    return M


def dump_matrix(M):
    return [[[float(z.real), float(z.imag)] for z in row] for row in np.asarray(M, dtype=complex)]


def _require(doc, key, where):
    if key not in doc:
        raise ConfigError(f"{where}.{key}: missing")
    return doc[key]


def _parse_instance(doc):
    if "random_instance" in doc:
        ri = doc["random_instance"]
        try:
            n, d, seed = int(ri["n"]), int(ri["d"]), int(ri["seed"])
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"random_instance: needs integer n, d and seed ({exc})") from None
        beta = float(ri.get("beta", 1.0))
        try:
            sys, bath = random_instance(n, d, seed, beta=beta)
        except ValueError as exc:
            raise ConfigError(f"random_instance: {exc}") from None
        return sys, bath, seed

    bdoc = _require(doc, "bath", "config")
    try:
        bath = BathSpec(int(_require(bdoc, "n", "bath")), tuple(_require(bdoc, "gamma", "bath")),
                        float(_require(bdoc, "beta", "bath")))
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"bath: {exc}") from None

    sdoc = _require(doc, "system", "config")
    d = int(_require(sdoc, "d", "system"))
    H = parse_matrix(_require(sdoc, "H_S", "system"), "system.H_S", (d, d))
    n = bath.n
    D = np.zeros((n, n, d, d), dtype=complex)
    for key, mat in dict(_require(sdoc, "D", "system")).items():
        try:
            i, j = (int(s) for s in key.split(","))
        except ValueError:
            raise ConfigError(f"system.D: key {key!r} is not of the form 'i,j'") from None
        if not (1 <= i <= n and 1 <= j <= n):
            raise ConfigError(f"system.D[{key}]: indices must lie in 1..{n}")
        D[i - 1, j - 1] = parse_matrix(mat, f"system.D[{key}]", (d, d))
    try:
        sys = SystemSpec(d, H, D)
    except ValueError as exc:
        field_name = "system.D" if "D blocks" in str(exc) else "system.H_S"
        raise ConfigError(f"{field_name}: {exc}") from None
    return sys, bath, None


def _default_rho0(d):
    psi = np.ones(d, dtype=complex) / np.sqrt(d)
    return np.outer(psi, psi.conj())


def parse_config(doc, source=""):
    """Build a :class:`RunConfig` from a decoded JSON document."""
    if not isinstance(doc, dict):
        raise ConfigError("config: top level must be a JSON object")
    sys, bath, seed = _parse_instance(doc)

    g = dict(doc.get("grid", {}))
    grid_spec = {"start": float(g.get("start", 2.0**-3)), "ratio": float(g.get("ratio", 0.5)),
                 "count": int(g.get("count", 8))}
    try:
        grid = geometric_grid(**grid_spec)
    except ValueError as exc:
        raise ConfigError(f"grid: {exc}") from None
    if grid[0] >= 1:
        raise ConfigError("grid.start: h must lie in (0, 1)")

    t = float(doc.get("t", 1.0))
    if not t > 0:
        raise ConfigError("t: time horizon must be positive")

    if "rho0" in doc:
        rho0 = parse_matrix(doc["rho0"], "rho0", (sys.d, sys.d))
        try:
            check_density_matrix(rho0)
        except ValueError as exc:
            raise ConfigError(f"rho0: {exc}") from None
    else:
        rho0 = _default_rho0(sys.d)

    suites = tuple(doc.get("suites", SUITES))
    unknown = [s for s in suites if s not in SUITES]
    if unknown:
        raise ConfigError(f"suites: unknown suite(s) {unknown}; choose from {list(SUITES)}")

    tol = dict(DEFAULT_TOLERANCES)
    for name, value in dict(doc.get("tolerances", {})).items():
        if name not in tol:
            raise ConfigError(f"tolerances.{name}: unknown tolerance")
        tol[name] = float(value)

    gdoc = dict(doc.get("gns_check", {}))
    gns = GnsCheckSpec(
        tuple(int(v) for v in gdoc.get("n", GnsCheckSpec.n_values)),
        tuple(float(v) for v in gdoc.get("beta", GnsCheckSpec.beta_values)),
        tuple(float(v) for v in gdoc.get("h", GnsCheckSpec.h_values)),
        int(gdoc.get("seed", 0)),
    )
    noise_n = int(doc.get("noise_algebra", {}).get("n", bath.n))
    if noise_n < 1:
        raise ConfigError("noise_algebra.n: must be >= 1")

    cfg = RunConfig(sys, bath, grid, grid_spec, t, rho0, suites, str(doc.get("out", "out")),
                    tol, seed, gns, noise_n, bool(doc.get("include_vacuum_row", True)), source)
    check_grid(cfg)
    return cfg


def check_grid(cfg):
    if any(s in RATE_SUITES for s in cfg.suites) and len(cfg.grid) < 4:
        raise ConfigError("grid.count: rate-fitting suites need at least 4 grid points")
    if "coeff-sweep" in cfg.suites and len(cfg.grid) < 6:
        raise ConfigError("grid.count: the coefficient sweep needs at least 6 grid points")


def load_config(path):
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except FileNotFoundError:
        raise ConfigError(f"config: file {path} not found") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config: invalid JSON ({exc})") from None
    return parse_config(doc, str(path))


def q1_document():
    """The bundled qubit example as a JSON-ready dict."""
    c = float(np.pi / 3)
    return {
        "system": {"d": 2, "H_S": [[1, 0], [0, -1]], "D": {"1,1": [[0, c], [c, 0]]}},
        "bath": {"n": 1, "gamma": [0, 1], "beta": 1},
        "grid": {"start": 0.125, "ratio": 0.5, "count": 8},
        "t": 1.0,
        "rho0": [[0.5, 0.5], [0.5, 0.5]],
    }
