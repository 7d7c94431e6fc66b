"""Command line interface.

Options come from command-line flags, then HCL_SEED (seed only), then a flat
key=value config file, then built-in defaults. Exit codes: 0 success,
1 acceptance failure, 2 usage error, 3 numeric failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__, acceptance, covariance, densities, kacrice
from .densities import CriticalKind, Interval
from .errors import DomainError, NumericError
from .experiments import DEFAULT_SEED, SCHEMA_VERSION, ExperimentConfig, quality_stats, simulate
from .legendre import DEFAULT_C

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_NUMERIC = 0, 1, 2, 3
SEED_ENV = "HCL_SEED"


class UsageError(Exception):
    pass


# ---------------------------------------------------------------------------
# configuration


def read_config(path) -> dict:
    """Parse a flat key=value file; blank lines and '#' comments are ignored."""
    out = {}
    try:
        lines = Path(path).read_text().splitlines()
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from None
    for n, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{n}: expected key=value, got {raw!r}")
        k, v = line.split("=", 1)
        out[k.strip().replace("-", "_")] = v.strip()
    return out


def resolve(args, defaults: dict) -> dict:
    """Merge flags, HCL_SEED, config file and defaults for the keys in ``defaults``."""
    cfg = read_config(args.config) if args.config else {}
    unknown = set(cfg) - set(defaults)
    if unknown:
        raise UsageError(f"unknown config keys for {args.command}: {', '.join(sorted(unknown))}")
    out = {}
    for key, default in defaults.items():
        flag = getattr(args, key, None)
        if flag is not None:
            out[key] = flag
        elif key == "seed" and os.environ.get(SEED_ENV, "").strip():
            out[key] = os.environ[SEED_ENV].strip()
        elif key in cfg:
            out[key] = cfg[key]
        else:
            out[key] = default
    return _coerce(out)


_INT = {"ell", "realizations", "seed", "oversample", "nodes", "workers", "num", "order"}
_FLOAT = {"C", "phi", "t1", "t2", "psi", "tmin", "tmax", "phi_tol"}


def _coerce(d: dict) -> dict:
    out = {}
    for k, v in d.items():
        try:
            if v is None:
                out[k] = None
            elif k in _INT:
                out[k] = int(v)
            elif k in _FLOAT:
                out[k] = float(v)
            elif k == "kind":
                out[k] = CriticalKind.parse(v)
            elif k == "interval":
                out[k] = v if isinstance(v, Interval) else Interval.parse(v)
            else:
                out[k] = v
        except (ValueError, DomainError) as exc:
            raise UsageError(f"bad value for {k}: {v!r} ({exc})") from None
    return out


def _echo(cfg: dict) -> dict:
    return {k: (v.value if isinstance(v, CriticalKind) else str(v) if isinstance(v, Interval) else v)
            for k, v in cfg.items()}


# ---------------------------------------------------------------------------
# output helpers


def _json_default(o):
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, np.bool_):
        return bool(o)
    return str(o)


def _sanitize(o):
    """Non-finite floats become strings so the JSON stays standard."""
    if isinstance(o, dict):
        return {k: _sanitize(v) for k, v in o.items()}
    if isinstance(o, (list, tuple)):
        return [_sanitize(v) for v in o]
    if isinstance(o, (float, np.floating)) and not math.isfinite(o):
        return str(float(o))
    return o


def emit_json(obj: dict, out=None):
    text = json.dumps(_sanitize({"schema_version": SCHEMA_VERSION, **obj}), indent=2, default=_json_default)
    if out:
        Path(out).write_text(text + "\n")
    else:
        print(text)


def emit_csv(header, rows, out=None):
    fh = open(out, "w", newline="") if out else sys.stdout
    try:
        w = csv.writer(fh)
        w.writerow(["schema_version", *header])
        for r in rows:
            w.writerow([SCHEMA_VERSION, *r])
    finally:
        if out:
            fh.close()


# ---------------------------------------------------------------------------
# subcommands


def cmd_density(args):
    c = resolve(args, {"kind": "critical", "tmin": -4.0, "tmax": 4.0, "num": 161})
    if c["num"] < 2 or not c["tmin"] < c["tmax"]:
        raise UsageError("need num >= 2 and tmin < tmax")
    t = np.linspace(c["tmin"], c["tmax"], c["num"])
    k = c["kind"]
    cols = [densities.pi1(k, t), densities.p_density(1, k, t), densities.p_density(2, k, t),
            densities.p3_explicit(k, t)]
    emit_csv(["t", "pi1", "p1", "p2", "p3"], (list(map(float, row)) for row in zip(t, *cols)), args.out)
    return EXIT_OK


def cmd_expected_count(args):
    c = resolve(args, {"ell": 30, "kind": "critical", "interval": ","})
    ell, k, iv = c["ell"], c["kind"], c["interval"]
    res = {"expected_count": densities.expected_count(ell, k, iv),
           "finite_degree": kacrice.k1_interval(ell, iv, k, method="closed"),
           "provenance": {"expected_count": "densities.expected_count", "finite_degree": "kacrice.k1_interval"},
           "config": _echo(c)}
    emit_json(res, args.out)
    return EXIT_OK


def cmd_variance(args):
    c = resolve(args, {"ell": 30, "kind": "critical", "interval": ",", "C": DEFAULT_C})
    ell, k, iv = c["ell"], c["kind"], c["interval"]
    v = densities.nu(k, iv)
    res = {"nu": v, "leading_variance": ell ** 3 * v, "config": _echo(c),
           "provenance": {"nu": "densities.nu", "approx_variance": "kacrice.approx_variance"}}
    res["approx_variance"] = kacrice.approx_variance(ell, k, iv, c["C"]) if ell >= 10 else None
    emit_json(res, args.out)
    return EXIT_OK


def cmd_simulate(args):
    c = resolve(args, {"ell": 30, "realizations": 20, "seed": DEFAULT_SEED, "oversample": 4, "interval": ",",
                       "kind": "critical", "workers": 1})
    ExperimentConfig(ell=c["ell"], realizations=c["realizations"], seed=c["seed"], oversample=c["oversample"],
                     workers=c["workers"])
    outdir = Path(args.out or "sphcrit_simulation")
    outdir.mkdir(parents=True, exist_ok=True)
    res, interrupted = [], False
    batch = max(4 * c["workers"], 8)
    try:
        for start in range(0, c["realizations"], batch):
            n = min(batch, c["realizations"] - start)
            res += simulate(c["ell"], n, c["seed"], c["oversample"], c["workers"], start=start)
    except KeyboardInterrupt:
        interrupted = True
    rows = [(r.index, r.n_max, r.n_min, r.n_saddle, r.count(c["kind"], c["interval"]), int(r.flagged))
            for r in res]
    emit_csv(["index", "n_max", "n_min", "n_saddle", "n_crit_in_I", "flagged"], rows, outdir / "counts.csv")
    x = np.array([row[4] for row, r in zip(rows, res) if not r.flagged], dtype=float)
    summary = {"mean": float(x.mean()) if x.size else None,
               "variance": float(x.var(ddof=1)) if x.size > 1 else None,
               "standard_error": float(x.std(ddof=1) / math.sqrt(x.size)) if x.size > 1 else None,
               "quality": quality_stats(res), "interrupted": interrupted, "config": _echo(c)}
    if c["ell"] >= 2:
        summary["expected_count"] = densities.expected_count(c["ell"], c["kind"], c["interval"])
        summary["finite_degree_expected"] = kacrice.k1_interval(c["ell"], c["interval"], c["kind"], method="closed")
    emit_json(summary, outdir / "summary.json")
    print(f"wrote {outdir / 'counts.csv'} and {outdir / 'summary.json'}")
    return 130 if interrupted else EXIT_OK


def cmd_kacrice(args):
    c = resolve(args, {"ell": 30, "kind": "critical", "interval": ",", "quantity": "mean", "quadrature": "polar",
                       "nodes": kacrice.DEFAULT_GH_NODES, "phi": None, "t1": None, "t2": None, "C": DEFAULT_C,
                       "seed": 0})
    ell, k, iv, qm = c["ell"], c["kind"], c["interval"], c["quadrature"]
    if qm not in kacrice.Q_METHODS:
        raise UsageError(f"quadrature must be one of {kacrice.Q_METHODS}")
    if c["quantity"] == "mean":
        result = kacrice.k1_interval(ell, iv, k, method="integral")
        err = abs(result - kacrice.k1_interval(ell, iv, k, method="closed"))
    elif c["quantity"] == "variance":
        result = kacrice.approx_variance(ell, k, iv, c["C"])
        err = abs(result - kacrice.approx_variance(ell, k, iv, c["C"], tol=kacrice.PHI_TOL / 10))
    elif c["quantity"] == "k2":
        if None in (c["phi"], c["t1"], c["t2"]):
            raise UsageError("quantity k2 needs --phi, --t1 and --t2")
        kw = {"nodes": c["nodes"], "mc_points": kacrice.DEFAULT_MC_POINTS, "seed": c["seed"]}
        result = kacrice.k2_kernel(ell, c["phi"], c["t1"], c["t2"], c["C"], qm, **kw).k2
        ref = kacrice.k2_kernel(ell, c["phi"], c["t1"], c["t2"], c["C"], "polar", polar_nodes=(24, 64)).k2
        err = abs(result - ref)
    else:
        raise UsageError("quantity must be mean, variance or k2")
    source = {"mean": "k1_interval", "variance": "approx_variance", "k2": "k2_kernel"}[c["quantity"]]
    emit_json({"result": result, "error_estimate": err, "config": _echo(c), "provenance": f"kacrice.{source}"},
              args.out)
    return EXIT_OK


_MATRICES = ("A", "B", "C", "full", "delta", "delta1", "delta2", "a_vec", "one_point", "short")


def cmd_dump_cov(args):
    c = resolve(args, {"ell": 30, "phi": math.pi / 2, "matrix": "full", "psi": 0.1})
    name, ell = c["matrix"], c["ell"]
    if name not in _MATRICES:
        raise UsageError(f"matrix must be one of {', '.join(_MATRICES)}")
    if name == "one_point":
        op = covariance.one_point_cov(ell)
        m = np.block([[op.a_block, op.b_block], [op.b_block.T, op.c_block]])
    elif name == "short":
        m = covariance.short_range_cov(ell, c["psi"]).full
    elif name in ("A", "B", "C", "full"):
        m = getattr(covariance.two_point_cov(ell, c["phi"]), name)
    else:
        m = getattr(covariance.conditional_cov(ell, c["phi"]), name)
    m = np.atleast_2d(m)
    emit_csv(["row", *[f"c{j}" for j in range(m.shape[1])]], ([i, *map(float, r)] for i, r in enumerate(m)),
             args.out)
    return EXIT_OK


def cmd_verify(args):
    c = resolve(args, {"suite": "fast", "seed": DEFAULT_SEED})
    if c["suite"] not in ("fast", "all"):
        raise UsageError("suite must be fast or all")
    report = acceptance.run_suite(c["suite"], c["seed"], progress=lambda r: print(r.line(), flush=True))
    report.pop("schema_version")
    if args.out:
        emit_json(report, args.out)
    else:
        print(json.dumps({"schema_version": SCHEMA_VERSION, "passed": report["passed"],
                          "failed": [r["number"] for r in report["criteria"] if not r["passed"]]}))
    return EXIT_OK if report["passed"] else EXIT_FAIL


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="sphcrit", description="Critical points of random spherical harmonics.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", help="flat key=value file")
        sp.add_argument("--out", help="output file (directory for simulate)")
        return sp

    def kind_iv(sp):
        sp.add_argument("--kind", help="critical, extremum or saddle")
        sp.add_argument("--interval", help="'a,b'; empty end means unbounded")

    sp = common(sub.add_parser("density", help="CSV grid of pi1, p1, p2, p3"))
    sp.add_argument("--kind")
    sp.add_argument("--tmin", type=float)
    sp.add_argument("--tmax", type=float)
    sp.add_argument("--num", type=int)
    sp.set_defaults(func=cmd_density)

    sp = common(sub.add_parser("expected-count", help="expected number of critical points"))
    sp.add_argument("--ell", type=int)
    kind_iv(sp)
    sp.set_defaults(func=cmd_expected_count)

    sp = common(sub.add_parser("variance", help="leading and approximate variance"))
    sp.add_argument("--ell", type=int)
    sp.add_argument("--C", type=float, dest="C")
    kind_iv(sp)
    sp.set_defaults(func=cmd_variance)

    sp = common(sub.add_parser("simulate", help="Monte Carlo critical point counts"))
    for name in ("ell", "realizations", "seed", "oversample", "workers"):
        sp.add_argument(f"--{name}", type=int)
    kind_iv(sp)
    sp.set_defaults(func=cmd_simulate)

    sp = common(sub.add_parser("kacrice", help="Kac-Rice mean, variance or K2 value"))
    sp.add_argument("--ell", type=int)
    kind_iv(sp)
    sp.add_argument("--quantity", choices=("mean", "variance", "k2"))
    sp.add_argument("--quadrature", choices=kacrice.Q_METHODS)
    sp.add_argument("--nodes", type=int)
    sp.add_argument("--seed", type=int)
    sp.add_argument("--C", type=float, dest="C")
    for name in ("phi", "t1", "t2"):
        sp.add_argument(f"--{name}", type=float)
    sp.set_defaults(func=cmd_kacrice)

    sp = common(sub.add_parser("dump-cov", help="CSV dump of a covariance matrix"))
    sp.add_argument("--ell", type=int)
    sp.add_argument("--phi", type=float)
    sp.add_argument("--psi", type=float)
    sp.add_argument("--matrix", choices=_MATRICES)
    sp.set_defaults(func=cmd_dump_cov)

    sp = common(sub.add_parser("verify", help="run the acceptance suite"))
    sp.add_argument("--suite", choices=("fast", "all"))
    sp.add_argument("--seed", type=int)
    sp.set_defaults(func=cmd_verify)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_OK
    try:
        return args.func(args)
    except (UsageError, DomainError) as exc:
        print(f"sphcrit: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (NumericError, ArithmeticError, np.linalg.LinAlgError) as exc:
        print(f"sphcrit: numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
