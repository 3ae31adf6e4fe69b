"""Command line entry point.

Subcommands write tables (CSV or JSON lines) plus a ``summary.json`` into the
output directory.  Exit codes: 0 when every check passes, 1 when a check fails,
2 when the configuration cannot be read.
"""
from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys
from pathlib import Path

import numpy as np

from ergodec import disintegration as dis
from ergodec import ergodic
from ergodec.config import ConfigError, ExperimentConfig
from ergodec.measure import MeasurableSet, ONE, as_points
from ergodec.systems import CATALOG, orbit

log = logging.getLogger("ergodec")

OUT_ENV = "ERGODEC_OUT"
EXIT_OK, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2


# ---------------------------------------------------------------------------
# output
# ---------------------------------------------------------------------------

def fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return "%.17g" % v
    return str(v)


def _json(v) -> str:
    if isinstance(v, dict):
        return "{" + ", ".join(f"{json.dumps(str(k))}: {_json(x)}" for k, x in v.items()) + "}"
    if isinstance(v, (list, tuple)):
        return "[" + ", ".join(_json(x) for x in v) + "]"
    if isinstance(v, (float, np.floating)) and not math.isfinite(v):
        return "null"
    if v is None:
        return "null"
    if isinstance(v, (bool, np.bool_, int, np.integer, float, np.floating)):
        return fmt(v)
    return json.dumps(str(v))


def write_table(out: Path, name: str, columns: list[str], rows: list[list], fmt_kind: str) -> Path:
    if fmt_kind == "csv":
        path = out / f"{name}.csv"
        lines = [",".join(columns)]
        lines += [",".join(_csv_cell(fmt(v)) for v in row) for row in rows]
    else:
        path = out / f"{name}.jsonl"
        lines = [_json(dict(zip(columns, row))) for row in rows]
    path.write_text("\n".join(lines) + "\n")
    return path


def _csv_cell(s: str) -> str:
    return f'"{s}"' if ("," in s or '"' in s) else s


def write_summary(out: Path, summary: dict) -> None:
    (out / "summary.json").write_text(_json(summary) + "\n")


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def _prepare(args) -> tuple[ExperimentConfig, Path]:
    cfg = ExperimentConfig.load(args.config)
    if args.seed is not None:
        cfg.seed = args.seed
    if args.depth is not None:
        cfg.partition.depth = args.depth
    if args.orbit is not None:
        cfg.orbit_length = args.orbit
    if args.format is not None:
        cfg.output.format = args.format
    cfg.validate()
    out = args.out or cfg.output.path or os.environ.get(OUT_ENV) or "results"
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    return cfg, out


def _mean_coords(m) -> list[float]:
    return list(np.dot(m.weights, m.points))


def cmd_disintegrate(args) -> int:
    cfg, out = _prepare(args)
    mu = cfg.build_measure(Path(args.config).parent)
    seq = cfg.refining_sequence()
    fam = dis.disintegrate(mu, seq, cfg.partition.depth)
    if args.debug_corrupt is not None:
        first = next(iter(fam.keys()))
        log.warning("corrupting element %s by factor %s", first, args.debug_corrupt)
        fam = dis.corrupt(fam, first, args.debug_corrupt)
    report = dis.verify_disintegration(fam, mu, tol=cfg.tolerances.tol_disint)

    fk = cfg.output.format
    write_table(out, "quotient", ["cell", "mass"], [[str(k), fam.quotient[k]] for k in fam.keys()], fk)
    coord_cols = [f"mean_{c}" for c in "xy"[: mu.dim]]
    write_table(out, "elements", ["cell", "atoms", "carrier_mass"] + coord_cols,
                [[str(k), len(m), report.carrier_mass[k]] + _mean_coords(m) for k, m in fam.elements.items()], fk)
    write_table(out, "residuals", ["test", "set", "residual"],
                [[i, str(e), r] for i, (e, r) in enumerate(zip(report.tests, report.residuals))], fk)
    write_summary(out, {
        "command": "disintegrate",
        "passed": report.passed,
        "carriers_ok": report.carriers_ok,
        "max_residual": report.max_residual,
        "tol_disint": cfg.tolerances.tol_disint,
        "elements": len(fam),
        "tests": len(report.tests),
        "config": cfg.to_dict(),
    })
    print(f"disintegrate: {len(fam)} elements, max residual {report.max_residual:.3e}, "
          f"{'PASS' if report.passed else 'FAIL'}")
    return EXIT_OK if report.passed else EXIT_FAIL


def cmd_verify(args) -> int:
    """Disintegration identity plus agreement of two independent constructions."""
    cfg, out = _prepare(args)
    mu = cfg.build_measure(Path(args.config).parent)
    seq = cfg.refining_sequence()
    depth = cfg.partition.depth
    fam = dis.disintegrate(mu, seq, depth)
    report = dis.verify_disintegration(fam, mu, tol=cfg.tolerances.tol_disint)
    res = max(cfg.resolution_depth, depth)
    table = dis.family_from_conditional_probabilities(mu, seq, depth, res)
    gap = dis.uniqueness_check(fam, table, res)
    passed = report.passed and gap <= cfg.tolerances.tol_disint
    write_summary(out, {
        "command": "verify",
        "passed": passed,
        "max_residual": report.max_residual,
        "carriers_ok": report.carriers_ok,
        "uniqueness_gap": gap,
        "resolution_depth": res,
        "config": cfg.to_dict(),
    })
    print(f"verify: residual {report.max_residual:.3e}, uniqueness gap {gap:.3e}, "
          f"{'PASS' if passed else 'FAIL'}")
    return EXIT_OK if passed else EXIT_FAIL


def cmd_ergodic_decomp(args) -> int:
    cfg, out = _prepare(args)
    system = cfg.system_spec()
    mu = cfg.build_measure(Path(args.config).parent)
    basis = cfg.generator_basis()
    n = cfg.orbit_length
    fam = ergodic.ergodic_decomposition(system, mu, basis, cfg.cuts_depth, n)
    tol = cfg.tolerances
    rows, all_ok = [], True
    for sig, m in fam.elements.items():
        ok = True
        spread = tv = math.nan
        nonsing = None
        if cfg.tests.ergodicity:
            rep = ergodic.test_ergodicity(system, m, basis, n, tol.tol_freq)
            spread, ok = rep.max_spread, ok and rep.passed
        if cfg.tests.invariance:
            inv = ergodic.test_invariance(system, m, cfg.resolution_depth, tol.tol_inv)
            tv, ok = inv.tv, ok and inv.passed
        if cfg.tests.nonsingularity:
            nonsing = ergodic.test_nonsingularity(system, m, cfg.resolution_depth)
            ok = ok and nonsing
        all_ok &= ok
        rows.append(["-".join(map(str, sig)), fam.quotient[sig], len(m), spread, tv,
                     "" if nonsing is None else nonsing, ok])
    write_table(out, "classes",
                ["signature", "weight", "atoms", "ergodicity_spread", "invariance_tv", "nonsingular", "passed"],
                rows, cfg.output.format)
    write_summary(out, {
        "command": "ergodic-decomp",
        "system": system.kind,
        "classes": len(fam),
        "passed": all_ok,
        "config": cfg.to_dict(),
    })
    print(f"ergodic-decomp: {len(fam)} classes, {'PASS' if all_ok else 'FAIL'}")
    return EXIT_OK if all_ok else EXIT_FAIL


def parse_set(text: str, dim: int) -> MeasurableSet:
    """``full``, ``empty``, ``ONE``, or boxes like ``0:0.5`` / ``0:0.5x0.25:1`` joined by ``+``."""
    text = text.strip()
    if text == "full":
        return MeasurableSet.universe(dim)
    if text == "empty":
        return MeasurableSet.empty(dim)
    boxes, one = [], False
    for part in text.split("+"):
        part = part.strip()
        if part.upper() == "ONE":
            one = True
            continue
        box = tuple(tuple(float(v) for v in ax.split(":")) for ax in part.split("x"))
        boxes.append(box)
    return MeasurableSet(dim, tuple(boxes), include_one=one)


def cmd_freq(args) -> int:
    cfg, out = _prepare(args)
    system = cfg.system_spec()
    try:
        point = as_points([ONE if c.strip().upper() == "ONE" else float(c) for c in args.point.split(",")],
                          system.dim)
        target = parse_set(args.set, system.dim)
    except ValueError as exc:
        raise ConfigError(f"bad --point/--set: {exc}") from exc
    n = cfg.orbit_length
    every = args.every or max(1, n // 1000)
    prefixes = list(range(every, n + 1, every))
    if not prefixes or prefixes[-1] != n:
        prefixes.append(n)
    hits = np.cumsum(target.contains(orbit(system, point[0], n)))
    rows = [[p, hits[p - 1] / p] for p in prefixes]
    write_table(out, "freq", ["n", "frequency"], rows, cfg.output.format)
    print(f"freq: final frequency {rows[-1][1]:.17g} after {n} steps")
    return EXIT_OK


def cmd_catalog(args) -> int:
    for name, text in CATALOG.items():
        print(f"{name:10s} {text}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ergodec", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", required=True, help="YAML experiment config")
        sp.add_argument("--out", default=None, help=f"output directory (default: ${OUT_ENV} or ./results)")
        sp.add_argument("--format", choices=["csv", "json-lines"], default=None)
        sp.add_argument("--seed", type=int, default=None)
        sp.add_argument("--depth", type=int, default=None, help="override partition depth")
        sp.add_argument("--orbit", type=int, default=None, help="override orbit length N")

    d = sub.add_parser("disintegrate", help="conditional measures over a dyadic partition")
    common(d)
    d.add_argument("--debug-corrupt", type=float, default=None, metavar="FACTOR",
                   help=argparse.SUPPRESS)
    d.set_defaults(func=cmd_disintegrate)

    e = sub.add_parser("ergodic-decomp", help="dynamical partition and per-class checks")
    common(e)
    e.set_defaults(func=cmd_ergodic_decomp)

    f = sub.add_parser("freq", help="visit frequency of one orbit to one set over prefixes")
    common(f)
    f.add_argument("--point", required=True, help="comma separated coordinates, or ONE")
    f.add_argument("--set", required=True, help="full | empty | ONE | a:b[xc:d][+...]")
    f.add_argument("--every", type=int, default=None, help="prefix stride")
    f.set_defaults(func=cmd_freq)

    v = sub.add_parser("verify", help="check the disintegration identity and uniqueness")
    common(v)
    v.set_defaults(func=cmd_verify)

    c = sub.add_parser("catalog", help="list the built-in systems")
    c.set_defaults(func=cmd_catalog)
    return p


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(message)s")
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
