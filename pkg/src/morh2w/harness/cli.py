"""Command-line interface.

Subcommands: reduce (one method, one order), compare (full experiment),
norms (H2/H-infinity of a system file), sigma (singular value sweep to
CSV), report (optimality report for a given plant/rom/weights).
Exit codes: 0 success, 1 usage error, 2 numerical failure.
"""

import argparse
import json
import sys

import numpy as np

from .. import norms
from ..errors import Morh2wError
from ..optimality import deviation_report
from ..reducers import (
    FwhmorOptions,
    afwbt,
    fwhmor,
    fwitia,
    fwitia_config_from_rom,
    fwbt,
    slow_pole_truncation,
)
from ..statespace import WeightedProblem, weighted_error_realization
from .experiment import ExperimentConfig, WeightSpec, run_experiment
from .io import load_statespace, save_reduction_result

USAGE_ERROR, NUMERICAL_ERROR = 1, 2


def _weight_spec(text):
    """Parse a --wi/--wo value: path, 'identity', or 'bandpass:HO:LO:HI'."""
    if text is None or text == "identity":
        return WeightSpec(kind="identity")
    if text.startswith("bandpass:"):
        parts = text.split(":")
        if len(parts) != 4:
            raise argparse.ArgumentTypeError(
                "bandpass weight must be bandpass:HALF_ORDER:LO:HI"
            )
        return WeightSpec(kind="bandpass", half_order=int(parts[1]),
                          omega_lo=float(parts[2]), omega_hi=float(parts[3]))
    return WeightSpec(kind="file", path=text)


def _band(text):
    try:
        lo, hi = text.split(":")
        return float(lo), float(hi)
    except ValueError as exc:
        raise argparse.ArgumentTypeError("band must be LO:HI") from exc


def _build_parser():
    ap = argparse.ArgumentParser(prog="morh2w",
                                 description="Frequency-weighted H2 model reduction")
    sub = ap.add_subparsers(dest="command", required=True)

    def add_common(p, weights=True):
        p.add_argument("--plant", required=True, help="plant system file")
        if weights:
            p.add_argument("--wi", type=_weight_spec, default=None,
                           help="input weight: file, 'identity', or bandpass:HO:LO:HI")
            p.add_argument("--wo", type=_weight_spec, default=None,
                           help="output weight (same forms as --wi)")

    p = sub.add_parser("reduce", help="run one method at one order")
    add_common(p)
    p.add_argument("--order", "-r", type=int, required=True)
    p.add_argument("--method", required=True,
                   choices=["fwbt", "fwitia", "fwhmor", "afwbt"])
    p.add_argument("--tol", type=float, default=1e-2)
    p.add_argument("--max-iters", type=int, default=200)
    p.add_argument("--out", default=None, help="output directory")
    p.add_argument("--seed", type=int, default=None)

    p = sub.add_parser("compare", help="run a full method/order comparison")
    p.add_argument("--config", default=None, help="experiment config JSON")
    p.add_argument("--plant", default=None)
    p.add_argument("--wi", type=_weight_spec, default=None)
    p.add_argument("--wo", type=_weight_spec, default=None)
    p.add_argument("--order", "-r", default=None,
                   help="comma-separated reduced orders")
    p.add_argument("--method", default=None,
                   help="comma-separated subset of fwbt,fwitia,fwhmor,afwbt")
    p.add_argument("--tol", type=float, default=1e-2)
    p.add_argument("--max-iters", type=int, default=200)
    p.add_argument("--out", default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--band", type=_band, default=None,
                   help="sigma sweep band LO:HI (rad/s)")

    p = sub.add_parser("norms", help="H2 and H-infinity norms of a system")
    add_common(p, weights=False)

    p = sub.add_parser("sigma", help="singular value sweep to CSV")
    add_common(p, weights=False)
    p.add_argument("--band", type=_band, required=True)
    p.add_argument("--points", type=int, default=200)
    p.add_argument("--out", required=True, help="output CSV path")

    p = sub.add_parser("report", help="optimality report for a plant/rom pair")
    add_common(p)
    p.add_argument("--rom", required=True, help="reduced model file")
    p.add_argument("--proj", default=None,
                   help="projection.json with V/W (enables the Galerkin and "
                        "low-rank fit fields)")
    p.add_argument("--out", default=None, help="write the report row as CSV")
    return ap


def _load_weights(args, plant):
    wi_spec = args.wi or WeightSpec(kind="identity")
    wo_spec = args.wo or WeightSpec(kind="identity")
    return wi_spec.build(plant.m), wo_spec.build(plant.p)


def _cmd_reduce(args):
    plant = load_statespace(args.plant)
    wi, wo = _load_weights(args, plant)
    prob = WeightedProblem(plant, wi, wo, args.order)
    opts = FwhmorOptions(max_iters=args.max_iters, pole_tol=args.tol)
    init = slow_pole_truncation(plant, args.order)
    method = args.method
    if method == "fwhmor":
        res = fwhmor(prob, init, opts)
    elif method == "fwitia":
        res = fwitia(prob, fwitia_config_from_rom(init), opts)
    elif method == "fwbt":
        res = fwbt(prob, args.order)
    else:
        base = fwhmor(prob, init, opts)
        if base.phat is None:
            raise Morh2wError("fixed-point run produced no usable gramians")
        res = afwbt(prob, args.order, base.phat, base.qhat)

    if res.converged and method in ("fwhmor", "fwitia"):
        print(f"converged in {res.iterations} iterations")
    elif method in ("fwhmor", "fwitia"):
        print(f"did not converge within {res.iterations} iterations")
    with np.printoptions(precision=6, suppress=True):
        print("A =", res.rom.A, sep="\n")
        print("B =", res.rom.B, sep="\n")
        print("C =", res.rom.C, sep="\n")
    sysw = weighted_error_realization(prob, res.rom)
    h2 = norms.h2_norm(sysw)
    hinf, _ = norms.hinf_norm(sysw)
    print(f"weighted_h2={h2:.6f}")
    print(f"weighted_hinf={hinf:.6f}")
    if args.out:
        save_reduction_result(res, args.out, prob=prob)
    return 0


def _cmd_compare(args):
    if args.config:
        cfg = ExperimentConfig.from_json(args.config)
        if args.out:
            cfg = ExperimentConfig(
                plant=cfg.plant, input_weight=cfg.input_weight,
                output_weight=cfg.output_weight, methods=cfg.methods,
                orders=cfg.orders, out_dir=args.out, seed=cfg.seed,
                options=cfg.options, sigma_band=cfg.sigma_band,
                sigma_points=cfg.sigma_points, base_dir=cfg.base_dir,
            )
    else:
        if not (args.plant and args.order and args.out):
            print("compare requires --config or --plant/--order/--out",
                  file=sys.stderr)
            return USAGE_ERROR
        orders = tuple(int(x) for x in str(args.order).split(","))
        methods = (
            tuple(args.method.split(",")) if args.method
            else ("fwbt", "fwitia", "fwhmor", "afwbt")
        )
        cfg = ExperimentConfig(
            plant=args.plant,
            input_weight=args.wi or WeightSpec(kind="identity"),
            output_weight=args.wo or WeightSpec(kind="identity"),
            methods=methods, orders=orders, out_dir=args.out, seed=args.seed,
            options=FwhmorOptions(max_iters=args.max_iters, pole_tol=args.tol),
            sigma_band=args.band or (1.0, 100.0),
        )
    table = run_experiment(cfg)
    for row in table.rows:
        status = f"FAILED:{row.error}" if row.error else (
            f"h2={row.h2:.6f} hinf={row.hinf:.6f}"
        )
        print(f"{row.method} r={row.order}: {status}")
    return 0


def _cmd_norms(args):
    sys_ = load_statespace(args.plant)
    h2 = norms.h2_norm(sys_)
    hinf, w_peak = norms.hinf_norm(sys_)
    print(f"h2={h2:.6f}")
    print(f"hinf={hinf:.6f} at omega={w_peak:.6g}")
    return 0


def _cmd_sigma(args):
    sys_ = load_statespace(args.plant)
    sd = norms.sigma_sweep(sys_, args.band[0], args.band[1], args.points)
    sd.to_csv(args.out)
    print(f"wrote {args.out}")
    return 0


def _cmd_report(args):
    plant = load_statespace(args.plant)
    wi, wo = _load_weights(args, plant)
    rom = load_statespace(args.rom, stability_warning=False)
    prob = WeightedProblem(plant, wi, wo, rom.n)
    V = W = None
    if args.proj:
        with open(args.proj) as fh:
            doc = json.load(fh)
        V = np.asarray(doc["V"], dtype=float)
        W = np.asarray(doc["W"], dtype=float)
    rep = deviation_report(prob, rom, V, W)
    for name in ("dev_A", "dev_B", "dev_C", "gal_P", "gal_Q", "fit_P", "fit_Q",
                 "R1_norm", "R2_norm", "J1", "J2", "J3", "J4"):
        print(f"{name}={getattr(rep, name):.6g}")
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(rep.csv_header() + "\n" + rep.csv_row() + "\n")
    return 0


def main(argv=None):
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on usage errors; remap (2 is the numerical code)
        return 0 if exc.code == 0 else USAGE_ERROR
    handlers = {
        "reduce": _cmd_reduce,
        "compare": _cmd_compare,
        "norms": _cmd_norms,
        "sigma": _cmd_sigma,
        "report": _cmd_report,
    }
    try:
        return handlers[args.command](args)
    except Morh2wError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return NUMERICAL_ERROR


if __name__ == "__main__":
    sys.exit(main())
