"""Command-line entry point: one subcommand per module, reports as JSON or CSV.

Exit status is 0 when every check passes, 1 when a check fails (the report
is still written) and 2 for invalid configuration.  Reports go to ``--out``
or, by default, to ``$INDEXBENCH_OUT_DIR`` (current directory if unset).
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from fractions import Fraction
from pathlib import Path

import numpy as np

from .algebra_core import ExtElem, GaussianRational

SCHEMA = 1
OUT_ENV = "INDEXBENCH_OUT_DIR"


class ConfigError(ValueError):
    """Invalid command-line configuration (exit status 2)."""


# ---------------------------------------------------------------------------
# parsing helpers


def int_list(text: str) -> list[int]:
    """``"1..3"`` or ``"1,2,3"``."""
    text = text.strip()
    if ".." in text:
        lo, hi = text.split("..", 1)
        return list(range(int(lo), int(hi) + 1))
    return [int(x) for x in text.split(",") if x]


def float_list(text: str) -> list[float]:
    return [float(x) for x in text.split(",") if x]


def _to_jsonable(x):
    if isinstance(x, dict):
        return {str(k): _to_jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_to_jsonable(v) for v in x]
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        return float(x)
    if isinstance(x, (complex, np.complexfloating)):
        return {"re": float(x.real), "im": float(x.imag)}
    if isinstance(x, (Fraction, GaussianRational)):
        return str(x)
    if isinstance(x, ExtElem):
        return x.to_json()
    if isinstance(x, np.ndarray):
        return _to_jsonable(x.tolist())
    return x


def _out_path(args, default_name: str) -> Path:
    if args.out:
        path = Path(args.out)
    else:
        path = Path(os.environ.get(OUT_ENV, ".")) / default_name
    path.parent.mkdir(parents=True, exist_ok=True)
    return path


def write_json(args, name: str, report: dict) -> Path:
    path = _out_path(args, name)
    doc = {"schema": SCHEMA, "command": args.command, **report}
    path.write_text(json.dumps(_to_jsonable(doc), indent=2) + "\n")
    return path


def write_csv(args, name: str, header: list[str], rows: list[list]) -> Path:
    path = _out_path(args, name)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([_csv_cell(v) for v in row])
    return path


def _csv_cell(v):
    if isinstance(v, (complex, np.complexfloating)):
        return repr(complex(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return v


def _finish(path: Path, passed: bool, line: str) -> int:
    print(f"{'ok' if passed else 'FAIL'}: {line}")
    print(f"report: {path}")
    return 0 if passed else 1


# ---------------------------------------------------------------------------
# subcommands


def cmd_verify_clifford(args) -> int:
    from .clifford import clifford_checks

    if args.n % 2 or args.n < 2:
        raise ConfigError("n must be even")
    rep = clifford_checks(args.n, args.instances, args.seed)
    rep["anchor"] = "clifford-relations-and-supertrace"
    path = write_json(args, "verify-clifford.json", rep)
    return _finish(path, rep["passed"], f"Clifford checks n={args.n}, {args.instances} random pairs")


def cmd_verify_mq(args) -> int:
    from .mathai_quillen import IDENTITY_ANCHORS, verify_batch

    if args.n % 2:
        raise ConfigError("n must be even")
    if args.n < 2 or args.n > 8:
        raise ConfigError("n must be between 2 and 8")
    names = list(IDENTITY_ANCHORS) if args.identity == "all" else [args.identity]
    if args.n > 4 and "grand_identity" in names and args.identity == "all":
        names.remove("grand_identity")
    results = [verify_batch(name, args.n, args.instances, args.seed) for name in names]
    passed = all(r["passed"] for r in results)
    report = {
        "n": args.n,
        "instances": sum(r["instances"] for r in results),
        "max_abs_deviation": max(r["max_abs_deviation"] for r in results),
        "exact": all(r["exact"] for r in results),
        "passed": passed,
        "identities": results,
    }
    if len(results) == 1:
        report["identity"] = results[0]["identity"]
        report["anchor"] = results[0]["anchor"]
    else:
        report["identity"] = "all"
        report["anchor"] = [r["anchor"] for r in results]
    path = write_json(args, "verify-mq.json", report)
    return _finish(path, passed, f"{', '.join(names)} at n={args.n}: max deviation {report['max_abs_deviation']}")


def cmd_thom(args) -> int:
    from .mathai_quillen import THOM_PROFILES, riemann_roch_flat_check, thom_batch

    if args.n % 2 or args.n < 2:
        raise ConfigError("n must be even")
    profiles = args.profile or list(THOM_PROFILES)
    unknown = set(profiles) - set(THOM_PROFILES)
    if unknown:
        raise ConfigError(f"unknown profile(s) {sorted(unknown)}; choose from {sorted(THOM_PROFILES)}")
    rep = thom_batch(args.n, args.instances, args.seed, profiles, args.tol)
    rr = riemann_roch_flat_check(args.n)
    rep["riemann_roch"] = rr
    rep["anchor"] = ["thom-form-fiber-normalization", "flat-riemann-roch-constant"]
    passed = rep["passed"] and rr["passed"]
    rep["passed"] = passed
    path = write_json(args, "thom.json", rep)
    return _finish(path, passed, f"Thom normalization n={args.n} over {rep['instances']} curvatures, profiles {profiles}")


def cmd_charform(args) -> int:
    from .charclass import (
        BUILTIN_GEOMETRIES,
        SurfaceGeometry,
        euler_density,
        first_chern_density,
        index_density,
    )

    if args.geometry:
        try:
            geom = SurfaceGeometry.load(args.geometry)
        except (OSError, KeyError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read geometry {args.geometry}: {exc}") from exc
    else:
        make = BUILTIN_GEOMETRIES[args.surface]
        geom = make(flux=args.flux) if args.surface != "monopole" else make(args.flux)
    density = {"euler": euler_density, "chern": first_chern_density, "index": index_density}[args.density](geom)
    contrib = geom.weights * density
    cumulative = np.cumsum(contrib)
    total = float(cumulative[-1])
    nearest = round(total)
    passed = abs(total - nearest) < args.tol
    rows = [[i, float(d), float(c)] for i, (d, c) in enumerate(zip(density, cumulative))]
    path = write_csv(args, f"charform-{args.density}.csv", ["node", "density", "cumulative"], rows)
    return _finish(path, passed, f"{args.density} integral = {total:.12g} (nearest integer {nearest})")


def cmd_getzler(args) -> int:
    from . import getzler

    if args.action == "constants":
        qs = int_list(args.q)
        if not qs or any(q not in (1, 2, 3) for q in qs):
            raise ConfigError("q must be in 1..3")
        rows, passed = [], True
        for q in qs:
            r = getzler.constant_combination_check(q, args.tol)
            passed = passed and r["passed"]
            rows.append([q, r["beta"], r["delta"], r["combination"], r["target"], r["abs_err"]])
        path = write_csv(args, "getzler-constants.csv", ["q", "beta", "delta", "combination", "target", "abs_err"], rows)
        worst = max(r[-1] for r in rows)
        return _finish(path, passed, f"constant combination for q={qs}: max abs_err {worst:.3g}")
    rep = getzler.star_checks(args.n, instances=args.instances, seed=args.seed)
    rep["anchor"] = "getzler-star-product"
    path = write_json(args, "getzler-star.json", rep)
    return _finish(path, rep["passed"], f"star product checks n={args.n}, {args.instances} instances")


def _build_model(args):
    from .index_harness import circle_dirac, levels_for, torus_dirac

    if args.model == "circle":
        return circle_dirac(args.N if args.N else 64, args.w)
    N = args.N if args.N else 16
    levels = getattr(args, "levels", None)
    if levels is None and getattr(args, "t", None) and args.k != 0 and args.command == "pair":
        levels = max(N * N // abs(args.k), levels_for(min(args.t)))
    return torus_dirac(N, args.k, levels=levels)


def cmd_index(args) -> int:
    from .index_harness import idempotency_residual

    ts = args.t
    if any(t <= 0 for t in ts):
        raise ConfigError("t must be positive")
    model = _build_model(args)
    values, residuals = [], []
    for t in ts:
        ind = model.ind(t)
        values.append(ind.trace().real)
        residuals.append(idempotency_residual(ind))
    spread = max(values) - min(values)
    integral = max(abs(v - round(v)) for v in values)
    passed = (max(residuals) < args.idem_tol and integral < args.int_tol and spread < args.spread_tol
              and round(values[0]) == model.index)
    report = {
        "model": args.model,
        "params": {"N": model.geometry.n_sites if args.model == "circle" else model.meta["N"],
                   "w" if args.model == "circle" else "k": model.index},
        "expected_index": model.index,
        "t_values": ts,
        "str_index": values,
        "idempotency_residual": residuals,
        "t_spread": spread,
        "passed": passed,
        "anchor": "heat-kernel-index-class",
    }
    path = write_json(args, "index.json", report)
    return _finish(path, passed, f"{args.model} index {model.index}: str_index spread {spread:.3g}, "
                                 f"max idempotency residual {max(residuals):.3g}")


def cmd_pair(args) -> int:
    from .index_harness import (
        Cochain,
        pairing_limit_sweep,
        torus_test_functions,
    )

    if args.q not in (0, 1):
        raise ConfigError("q must be 0 or 1")
    if args.q == 1 and args.model != "torus":
        raise ConfigError("the q=1 pairing needs the two-dimensional torus model")
    if not args.sweep and len(args.t) != 1:
        raise ConfigError("give a single --t without --sweep")
    model = _build_model(args)
    if args.q == 0:
        psi = Cochain.constant()
    else:
        psi = Cochain.antisymmetrized(torus_test_functions(model.geometry.periods[0]))
    result = pairing_limit_sweep(psi, model, args.t)
    rows = [[r["t"], r["tau"], r["target"], r["abs_err"]] for r in result["rows"]]
    last = result["rows"][-1]
    if args.q == 0:
        passed = all(r["abs_err"] < 1e-8 for r in result["rows"])
    else:
        passed = (result["monotone"] or not args.sweep) and last["rel_err"] < args.rel_tol
    path = write_csv(args, f"pair-q{args.q}.csv", ["t", "tau", "target", "abs_err"], rows)
    return _finish(path, passed, f"pairing q={args.q} on {args.model}: target {result['target']:.6g}, "
                                 f"relative error {last['rel_err']:.3g} at t={last['t']}, "
                                 f"monotone={result['monotone']}")


# ---------------------------------------------------------------------------
# argument parser


DEFAULT_PAIR_SWEEP = "1.0,0.7,0.5,0.35,0.25,0.15,0.08"


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="indexbench", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, seed=True):
        sp.add_argument("--out", help=f"report path (default: ${OUT_ENV} or the current directory)")
        if seed:
            sp.add_argument("--seed", type=int, default=0)

    sp = sub.add_parser("verify-clifford", help="Clifford relations, supertrace normalization and cyclicity")
    sp.add_argument("--n", type=int, default=4)
    sp.add_argument("--instances", type=int, default=50)
    common(sp)
    sp.set_defaults(func=cmd_verify_clifford)

    sp = sub.add_parser("verify-mq", help="supertrace and Pfaffian identities on exact instances")
    sp.add_argument("--n", type=int, default=4)
    sp.add_argument("--instances", type=int, default=50)
    sp.add_argument("--identity", default="all",
                    choices=["all", "str_exp", "odd_vanish", "grand_identity", "pf_expansion"])
    common(sp)
    sp.set_defaults(func=cmd_verify_mq)

    sp = sub.add_parser("thom", help="fiber integral of the Thom representative and the flat Riemann-Roch constant")
    sp.add_argument("--n", type=int, default=2)
    sp.add_argument("--instances", type=int, default=10, help="random curvatures besides zero")
    sp.add_argument("--profile", action="append", help="gaussian, bump or wide-bump (repeatable)")
    sp.add_argument("--tol", type=float, default=1e-9)
    common(sp)
    sp.set_defaults(func=cmd_thom)

    sp = sub.add_parser("charform", help="characteristic densities on a sampled surface, as CSV")
    src = sp.add_mutually_exclusive_group()
    src.add_argument("--geometry", help="JSON document {nodes: [{weight, K, F}], meta}")
    src.add_argument("--surface", choices=["sphere", "torus", "monopole"], default="sphere")
    sp.add_argument("--flux", type=int, default=0)
    sp.add_argument("--density", choices=["euler", "chern", "index"], default="euler")
    sp.add_argument("--tol", type=float, default=1e-8)
    common(sp, seed=False)
    sp.set_defaults(func=cmd_charform)

    sp = sub.add_parser("getzler", help="cyclic-pairing constants (CSV) or star-product checks (JSON)")
    sp.add_argument("action", choices=["constants", "star"])
    sp.add_argument("--q", default="1..3")
    sp.add_argument("--tol", type=float, default=1e-8)
    sp.add_argument("--n", type=int, default=2)
    sp.add_argument("--instances", type=int, default=20)
    common(sp)
    sp.set_defaults(func=cmd_getzler)

    sp = sub.add_parser("index", help="str_index and idempotency of the heat-kernel index class")
    sp.add_argument("--model", choices=["circle", "torus"], default="circle")
    sp.add_argument("--N", type=int, default=None, help="sites (circle, default 64) or grid side (torus, default 16)")
    sp.add_argument("--w", type=int, default=1, help="winding of the circle model")
    sp.add_argument("--k", type=int, default=1, help="flux of the torus model")
    sp.add_argument("--t", type=float_list, default=float_list("0.1,0.5,1,2"))
    sp.add_argument("--idem-tol", type=float, default=1e-10)
    sp.add_argument("--int-tol", type=float, default=1e-8)
    sp.add_argument("--spread-tol", type=float, default=1e-9)
    common(sp, seed=False)
    sp.set_defaults(func=cmd_index)

    sp = sub.add_parser("pair", help="cochain pairing against the local index density over a t-sweep")
    sp.add_argument("--model", choices=["circle", "torus"], default="torus")
    sp.add_argument("--N", type=int, default=None)
    sp.add_argument("--w", type=int, default=1)
    sp.add_argument("--k", type=int, default=1)
    sp.add_argument("--q", type=int, default=1)
    sp.add_argument("--sweep", action="store_true", help="run the documented t-sweep")
    sp.add_argument("--t", type=float_list, default=None)
    sp.add_argument("--levels", type=int, default=None, help="Landau levels (default: enough for the smallest t)")
    sp.add_argument("--rel-tol", type=float, default=0.05)
    common(sp, seed=False)
    sp.set_defaults(func=cmd_pair)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "pair" and args.t is None:
        args.t = float_list(DEFAULT_PAIR_SWEEP) if args.sweep else [0.08]
    try:
        return args.func(args)
    except (ConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
