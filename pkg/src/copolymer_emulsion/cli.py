"""Command-line runner.

Each subcommand writes one JSON record (config, result, metadata) and, for
sweeps, an optional tidy CSV.  ``--config FILE`` loads a JSON object whose keys
are the subcommand's option names; flags given on the command line win.

Exit codes: 0 success, 1 compute error, 2 bad input, 3 invariant violation or
failed self-check.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import time
from datetime import datetime, timezone
from fractions import Fraction
from pathlib import Path
from typing import Optional

from . import __version__
from .errors import ConvergenceError, InvalidSpecError, ModelError
from .full_simulation import InvariantViolation, convergence_report, finite_free_energy, full_log_partition, \
    random_instance
from .records import dumps, write_csv, write_json

OUTPUT_ENV = "COPOLYMER_EMULSION_OUT"
EXIT_OK, EXIT_COMPUTE, EXIT_SCHEMA, EXIT_INVARIANT = 0, 1, 2, 3


class SchemaError(Exception):
    pass


def _frac(s: str) -> Fraction:
    try:
        return Fraction(str(s))
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"not a rational number: {s!r}") from None


# ---- subcommands ---------------------------------------------------------


def cmd_kappa(a) -> tuple[dict, list, list]:
    from .lattice_paths import CrossingSpec, count_crossings_closed_form, count_crossings_dp
    from .oracles import KappaLimit

    spec = CrossingSpec(a.L, a.u, a.l)
    count = count_crossings_dp(spec)
    if count_crossings_closed_form(spec) != count:
        raise InvariantViolation("closed-form count disagrees with the transfer count")
    result = {"spec": spec.to_dict(), "count": count, "kappa": math.log(count) / spec.n_steps,
              "kappa_limit": float(KappaLimit().kappa(float(a.u), float(a.l)))}
    return result, [], []


def cmd_phi(a):
    from .single_interface import InterfaceSpec, mu_concavity_scan, phi_mean

    rows = []
    for mu in a.mu:
        est = phi_mean(InterfaceSpec(a.L, mu, a.alpha, a.beta), a.samples, a.seed, a.workers)
        rows.append({"L": a.L, "mu": mu, "phi": est.mean, "std_error": est.std_error, "std": est.std,
                     "samples": est.n_samples})
    result = {"rows": rows}
    if a.scan and len(a.mu) >= 3:
        scan = mu_concavity_scan(a.L, a.mu, a.alpha, a.beta, a.samples, a.seed)
        result["scan"] = {"concave": scan.concave, "increasing": scan.increasing,
                          "violations": scan.violations, "grid_eps": scan.grid_eps}
    return result, rows, ["L", "mu", "phi", "std_error", "std", "samples"]


def cmd_psi(a):
    from .column_model import ColumnDisorder, ColumnType, geometry, minimal_time, psi_quenched_column, \
        psi_variational
    from .oracles import build_oracles
    from .single_interface import MicroDisorder

    if len(a.letters) % 2 == 0:
        raise InvalidSpecError("block letters must have odd length (rows -w..w)")
    theta = ColumnType(ColumnDisorder(a.letters, len(a.letters) // 2), a.dpi, a.b0, a.b1, a.x)
    g = geometry(theta)
    result = {"theta": theta.to_dict(), "u": a.u, "t_theta": minimal_time(theta), "k": theta.k,
              "geometry": {"l_A": g.l_A, "l_B": g.l_B, "l_nint": g.l_nint, "l_int": g.l_int}}
    if a.method == "direct":
        if a.width is None:
            raise InvalidSpecError("--width is required for the direct method")
        omega = MicroDisorder.sample(a.seed, int(a.u * a.width), a.index)
        result["psi"] = psi_quenched_column(omega, theta, a.u, a.width, a.alpha, a.beta)
    else:
        orc = build_oracles(a.alpha, a.beta, L_oracle=a.L_oracle, phi_samples=a.phi_samples, seed=a.seed)
        result["psi"] = psi_variational(theta, a.u, a.alpha, a.beta, orc.kappa, orc.phi, a.tol)
        result["oracles"] = orc.provenance()
    return result, [], []


def cmd_measures(a):
    from .emulsion_field import sample_block_field, sample_measures, window_half_width
    from .rng import TAG_FIELD, derived_seed

    height = a.N * a.M + window_half_width(a.M, a.m) + 1
    fld = sample_block_field(a.p, a.N, height, derived_seed(a.seed, TAG_FIELD))
    mus = sample_measures(fld, a.M, a.m, a.N, a.count, seed=a.seed, L=a.traj_L, workers=a.workers)
    rows = [{"measure": i, "atoms": len(mu), "max_weight": max(w for _, w in mu.atoms)} for i, mu in enumerate(mus)]
    return {"field": fld.to_dict(), "measures": [mu.to_dict() for mu in mus]}, rows, ["measure", "atoms", "max_weight"]


def cmd_varfe(a):
    from .pipeline import VarfeConfig, variational_lower_bound

    alphas = a.alphas or [a.alpha]
    betas = a.betas or [a.beta]
    rows, runs = [], []
    for alpha in alphas:
        for beta in betas:
            cfg = VarfeConfig(alpha, beta, a.p, a.M, a.m, a.N, a.count, a.seed, a.L_oracle, a.phi_samples,
                              a.n_grid, a.traj_L, a.workers)
            res = variational_lower_bound(cfg)
            runs.append(res.to_dict())
            rows.append({"alpha": alpha, "beta": beta, "value": res.value, "best_index": res.best_index})
    return {"runs": runs}, rows, ["alpha", "beta", "value", "best_index"]


def cmd_simulate(a):
    cols = ["n", "L", "mean", "std", "samples", "lower_bound", "gap"]
    if a.n_list:
        L_list = a.L_list or [a.L] * len(a.n_list)
        lb = None
        if a.with_bound:
            from .pipeline import VarfeConfig, variational_lower_bound

            lb = variational_lower_bound(VarfeConfig(a.alpha, a.beta, a.p, a.M, a.m or 3, seed=a.seed,
                                                     workers=a.workers)).value
        rows = [r.to_dict() for r in convergence_report(a.n_list, L_list, a.M, a.alpha, a.beta, a.p, a.samples,
                                                        a.seed, a.m, lb, a.workers)]
        return {"rows": rows}, rows, cols
    inst = random_instance(a.n, a.L, a.M, a.alpha, a.beta, a.p, a.seed, a.index, a.m, a.star)
    result = {"instance": inst.to_dict(), "log_Z": full_log_partition(inst), "f_n": finite_free_energy(inst),
              "regime": inst.regime_flag}
    return result, [], []


def cmd_selfcheck(a):
    from .selfcheck import run_selfcheck

    report = run_selfcheck(a.seed, a.corrupt, a.only)
    for line in report.lines():
        print(line, file=sys.stderr)
    if not report.passed:
        raise InvariantViolation(f"self-check failed: {', '.join(report.failed)}")
    return report.to_dict(), [], []


# ---- parser --------------------------------------------------------------


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", type=Path, help="JSON file with option values")
    p.add_argument("--out", type=Path, help=f"JSON record path (default: ${OUTPUT_ENV}/<command>.json or stdout)")
    p.add_argument("--csv", type=Path, help="tidy CSV table for sweeps")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=1)


def _couplings(p, alpha=2.0, beta=1.0):
    p.add_argument("--alpha", type=float, default=alpha)
    p.add_argument("--beta", type=float, default=beta)


def _caps(p):
    p.add_argument("--p", type=float, default=0.5, help="probability of an A-block")
    p.add_argument("--M", type=int, default=1, help="cap on block-scale vertical jumps")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="copolymer-emulsion", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("kappa", help="crossing count and entropy of a column")
    _common(p)
    p.add_argument("--L", type=int, required=True)
    p.add_argument("--u", type=_frac, required=True)
    p.add_argument("--l", type=_frac, default=Fraction(0))
    p.set_defaults(func=cmd_kappa)

    p = sub.add_parser("phi", help="single-interface free energy estimates")
    _common(p)
    _couplings(p)
    p.add_argument("--L", type=int, required=True)
    p.add_argument("--mu", type=_frac, nargs="+", required=True)
    p.add_argument("--samples", type=int, default=32)
    p.add_argument("--scan", action="store_true", help="also test concavity and monotonicity of mu*phi")
    p.set_defaults(func=cmd_phi)

    p = sub.add_parser("psi", help="free energy of one column type")
    _common(p)
    _couplings(p)
    p.add_argument("--letters", required=True, help="block letters of rows -w..w")
    p.add_argument("--dpi", type=int, default=0)
    p.add_argument("--b0", type=_frac, default=Fraction(1, 2))
    p.add_argument("--b1", type=_frac, default=Fraction(1, 2))
    p.add_argument("--x", type=int, default=1)
    p.add_argument("--u", type=_frac, required=True)
    p.add_argument("--method", choices=["variational", "direct"], default="variational")
    p.add_argument("--width", type=int, help="column width for the direct method")
    p.add_argument("--index", type=int, default=0)
    p.add_argument("--L-oracle", dest="L_oracle", type=int, default=16)
    p.add_argument("--phi-samples", dest="phi_samples", type=int, default=8)
    p.add_argument("--tol", type=float, default=1e-6)
    p.set_defaults(func=cmd_psi)

    p = sub.add_parser("measures", help="sample frequency measures on a random field")
    _common(p)
    _caps(p)
    p.add_argument("--m", type=int, default=3)
    p.add_argument("--N", type=int, default=8)
    p.add_argument("--count", type=int, default=10)
    p.add_argument("--traj-L", dest="traj_L", type=int, default=8)
    p.set_defaults(func=cmd_measures)

    p = sub.add_parser("varfe", help="variational lower bound from sampled measures")
    _common(p)
    _couplings(p)
    _caps(p)
    p.add_argument("--alphas", type=float, nargs="+")
    p.add_argument("--betas", type=float, nargs="+")
    p.add_argument("--m", type=int, default=3)
    p.add_argument("--N", type=int, default=8)
    p.add_argument("--count", type=int, default=10)
    p.add_argument("--traj-L", dest="traj_L", type=int, default=8)
    p.add_argument("--L-oracle", dest="L_oracle", type=int, default=16)
    p.add_argument("--phi-samples", dest="phi_samples", type=int, default=8)
    p.add_argument("--n-grid", dest="n_grid", type=int, default=17)
    p.set_defaults(func=cmd_varfe)

    p = sub.add_parser("simulate", help="exact finite-n free energy of the full model")
    _common(p)
    _couplings(p)
    _caps(p)
    p.add_argument("--n", type=int, default=32)
    p.add_argument("--L", type=int, default=4)
    p.add_argument("--m", type=int, help="optional cap of m*L steps per column")
    p.add_argument("--star", action="store_true", help="end on a column boundary")
    p.add_argument("--index", type=int, default=0)
    p.add_argument("--n-list", dest="n_list", type=int, nargs="+")
    p.add_argument("--L-list", dest="L_list", type=int, nargs="+")
    p.add_argument("--samples", type=int, default=8)
    p.add_argument("--with-bound", dest="with_bound", action="store_true")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("selfcheck", help="reduced-size oracle comparisons")
    _common(p)
    p.add_argument("--corrupt", choices=["kappa", "phi"], help="swap in a shifted oracle (negative test)")
    p.add_argument("--only", nargs="+")
    p.set_defaults(func=cmd_selfcheck)
    return parser


def _apply_config(parser: argparse.ArgumentParser, argv: list[str]) -> argparse.Namespace:
    args = parser.parse_args(argv)
    if args.config is None:
        return args
    try:
        cfg = json.loads(Path(args.config).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise SchemaError(f"cannot read config: {exc}") from None
    if not isinstance(cfg, dict):
        raise SchemaError("config must be a JSON object")
    sub = parser._subparsers._group_actions[0].choices[args.command]  # noqa: SLF001
    actions = {a.dest: a for a in sub._actions}  # noqa: SLF001
    unknown = sorted(set(cfg) - set(actions) - {"command"})
    if unknown:
        raise SchemaError(f"unknown keys for {args.command}: {unknown}")
    if cfg.get("command", args.command) != args.command:
        raise SchemaError(f"config is for {cfg['command']!r}, not {args.command!r}")
    defaults = {}
    for k, v in cfg.items():
        if k == "command":
            continue
        act = actions[k]
        conv = act.type or (lambda x: x)
        try:
            defaults[k] = [conv(x) for x in v] if isinstance(v, list) else conv(v)
        except (TypeError, ValueError, argparse.ArgumentTypeError) as exc:
            raise SchemaError(f"bad value for {k}: {exc}") from None
        act.required = False
    sub.set_defaults(**defaults)
    return parser.parse_args(argv)


def _config_of(args: argparse.Namespace) -> dict:
    skip = {"func", "config", "out", "csv", "workers"}
    return {k: v for k, v in sorted(vars(args).items()) if k not in skip}


def _output_path(args) -> Optional[Path]:
    if args.out is not None:
        return args.out
    root = os.environ.get(OUTPUT_ENV)
    return Path(root) / f"{args.command}.json" if root else None


def main(argv: Optional[list[str]] = None) -> int:
    parser = build_parser()
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        args = _apply_config(parser, argv)
    except SchemaError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SCHEMA
    except SystemExit as exc:  # argparse reports its own errors
        return int(exc.code or 0)

    started = datetime.now(timezone.utc).isoformat()
    t0 = time.perf_counter()
    try:
        result, rows, columns = args.func(args)
    except InvariantViolation as exc:
        print(f"invariant violation: {exc}", file=sys.stderr)
        return EXIT_INVARIANT
    except InvalidSpecError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SCHEMA
    except (ModelError, ConvergenceError, ArithmeticError) as exc:
        print(f"compute error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_COMPUTE

    record = {"command": args.command, "config": _config_of(args), "result": result,
              "metadata": {"started": started, "elapsed_seconds": time.perf_counter() - t0,
                           "version": __version__}}
    path = _output_path(args)
    if path is None:
        sys.stdout.write(dumps(record))
    else:
        write_json(path, record)
        print(f"wrote {path}", file=sys.stderr)
    if args.csv is not None:
        if not columns:
            print(f"note: {args.command} produces no table; --csv ignored", file=sys.stderr)
        else:
            write_csv(args.csv, rows, columns)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
