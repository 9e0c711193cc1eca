"""Command-line driver: ``ldlimit run|validate|report``.

Exit status: 0 when every selected suite passes, 1 when a suite fails,
2 for an invalid configuration or unreadable output directory.
"""
import argparse
import csv
import sys
import time
from dataclasses import replace
from pathlib import Path

from .config import DEFAULT_TOLERANCES, SUITES, ConfigError, check_grid, load_config
from .rates import geometric_grid
from .suites import HEADERS, fmt, run_suites

EXIT_OK, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2


def _parse_tol(items):
    out = {}
    for item in items or []:
        name, sep, value = item.partition("=")
        if not sep:
            raise ConfigError(f"--tol {item!r}: expected name=value")
        if name not in DEFAULT_TOLERANCES:
            raise ConfigError(f"--tol {name}: unknown tolerance; known: {sorted(DEFAULT_TOLERANCES)}")
        try:
            out[name] = float(value)
        except ValueError:
            raise ConfigError(f"--tol {name}: {value!r} is not a number") from None
    return out


def _apply_overrides(cfg, args):
    if getattr(args, "suite", None):
        bad = [s for s in args.suite if s not in SUITES]
        if bad:
            raise ConfigError(f"--suite: unknown suite(s) {bad}")
        cfg.suites = tuple(dict.fromkeys(args.suite))
    if getattr(args, "out", None):
        cfg.out = args.out
    if getattr(args, "grid_count", None) is not None:
        cfg.grid_spec["count"] = args.grid_count
        try:
            cfg.grid = geometric_grid(**cfg.grid_spec)
        except ValueError as exc:
            raise ConfigError(f"--grid-count: {exc}") from None
    cfg.tolerances.update(_parse_tol(getattr(args, "tol", None)))
    check_grid(cfg)
    return cfg


def _describe(cfg):
    lines = [
        f"config: {cfg.source}",
        f"system dimension d={cfg.system.d}, bath levels n={cfg.bath.n}, "
        f"gamma={list(cfg.bath.gamma)}, beta={cfg.bath.beta:g}",
        "grid: " + ", ".join(f"{k}={v:g}" for k, v in cfg.grid_spec.items()),
        f"time horizon t={cfg.t:g}",
    ]
    if cfg.seed is not None:
        lines.append(f"random instance seed: {cfg.seed}")
    return lines


def write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header.split(","))
        for row in rows:
            w.writerow([fmt(x) for x in row])


def cmd_run(args):
    cfg = _apply_overrides(load_config(args.config), args)
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    report = _describe(cfg) + [""]
    passed = 0
    results = []
    for name in cfg.suites:
        t0 = time.perf_counter()
        (res,) = run_suites(_only(cfg, name))
        dt = time.perf_counter() - t0
        write_csv(out / f"{name}.csv", res.header, res.rows)
        results.append(res)
        passed += res.passed
        report.append(f"[{'PASS' if res.passed else 'FAIL'}] {name} ({dt:.2f} s, {len(res.rows)} rows)")
        report.extend(f"    {line}" for line in res.lines)
    report += ["", f"suites passed: {passed}/{len(results)}",
               f"OVERALL: {'PASS' if passed == len(results) else 'FAIL'}"]
    text = "\n".join(report) + "\n"
    (out / "report.txt").write_text(text)
    print(text, end="")
    return EXIT_OK if passed == len(results) else EXIT_FAIL


def _only(cfg, name):
    return replace(cfg, suites=(name,))


def cmd_validate(args):
    cfg = _apply_overrides(load_config(args.config), args)
    for line in _describe(cfg):
        print(line)
    print("suites: " + ", ".join(cfg.suites))
    print("config OK")
    return EXIT_OK


def cmd_report(args):
    out = Path(args.dir)
    rep = out / "report.txt"
    if not rep.is_file():
        print(f"error: {rep} not found", file=sys.stderr)
        return EXIT_CONFIG
    text = rep.read_text()
    print(text, end="")
    problems = []
    for name, header in HEADERS.items():
        path = out / f"{name}.csv"
        if not path.is_file():
            continue
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
        if not rows or ",".join(rows[0]) != header:
            problems.append(f"{path.name}: unexpected header")
        else:
            print(f"{path.name}: {len(rows) - 1} rows")
    for p in problems:
        print(f"error: {p}", file=sys.stderr)
    ok = "OVERALL: PASS" in text and not problems
    return EXIT_OK if ok else EXIT_FAIL


def build_parser():
    p = argparse.ArgumentParser(prog="ldlimit", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("config", help="JSON configuration file")
        sp.add_argument("--suite", action="append", choices=SUITES,
                        help="suite to run (repeatable; default: all in the config)")
        sp.add_argument("--out", help="output directory (overrides the config)")
        sp.add_argument("--grid-count", type=int, help="number of h grid points")
        sp.add_argument("--tol", action="append", metavar="NAME=VALUE",
                        help="override a tolerance (repeatable)")

    common(sub.add_parser("run", help="run suites and write CSVs plus report.txt"))
    common(sub.add_parser("validate", help="check a configuration without running"))
    rp = sub.add_parser("report", help="print the report of a finished run")
    rp.add_argument("dir")
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        if args.command == "run":
            return cmd_run(args)
        if args.command == "validate":
            return cmd_validate(args)
        return cmd_report(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
