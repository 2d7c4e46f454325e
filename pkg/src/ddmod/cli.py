"""Command-line interface: simulate sweeps, verify invariants, print budgets."""

import argparse
import json
import sys

from . import detect, harness, properties


def _add_simulate(sub):
    p = sub.add_parser("simulate", help="run a Monte-Carlo BER sweep")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--config", help="path to a JSON sweep configuration")
    src.add_argument("--preset", choices=sorted(harness.PRESETS), help="built-in experiment")
    p.add_argument("--seed", type=int, default=None, help="override the master seed")
    p.add_argument("--out", default="results", help="output directory (default: results/)")
    p.add_argument("--stem", default="results", help="output file stem")
    p.add_argument("--workers", type=int, default=None,
                   help=f"worker processes (default: ${harness.WORKERS_ENV} or cpu count)")


def _add_verify(sub):
    sub.add_parser("verify-properties", help="run the transform/decoder invariant suite")


def _add_complexity(sub):
    p = sub.add_parser("complexity", help="print decoder operation budgets")
    p.add_argument("--M", type=int, required=True, dest="m")
    p.add_argument("--N", type=int, required=True, dest="n")


def _cmd_simulate(args):
    if args.config:
        with open(args.config) as fh:
            cfg = harness.SweepConfig.from_json_dict(json.load(fh))
        if args.seed is not None:
            from dataclasses import replace

            cfg = replace(cfg, master_seed=args.seed)
    else:
        cfg = harness.preset(args.preset, master_seed=args.seed)
    print(f"sweep: {cfg.decoder} on ({cfg.m}x{cfg.n}) alpha={cfg.alpha} beta={cfg.beta} "
          f"eta={100 * cfg.eta:.1f}% seed={cfg.master_seed}")
    result = harness.run_sweep(cfg, workers=args.workers)
    csv_path, json_path = harness.emit_results(result, args.out, stem=args.stem)
    for cell in result.cells:
        tag = f"omega={cell.omega}" if cell.omega is not None else "        "
        if cell.error is not None:
            print(f"  ebn0={cell.ebn0_db:5.1f} {tag}  FAILED: {cell.error}")
        else:
            print(f"  ebn0={cell.ebn0_db:5.1f} {tag}  ber={cell.ber:.3e} "
                  f"({cell.bit_errors}/{cell.bits_sent} bits, {cell.frames} frames)")
    print(f"wrote {csv_path} and {json_path}")
    return 0 if result.completed else 1


def _cmd_verify(_args):
    results = properties.run_all()
    width = max(len(name) for name, _, _ in results)
    ok_all = True
    for name, ok, worst in results:
        status = "PASS" if ok else "FAIL"
        ok_all &= ok
        print(f"{name:<{width}}  {status}  (worst rel err {worst:.2e})")
    return 0 if ok_all else 1


def _cmd_complexity(args):
    budget = detect.predicted_complexity(args.m, args.n)
    print(f"frame {args.m} x {args.n}")
    print(f"  2-D decoder: {budget.mults} complex multiplies, {budget.adds} complex adds; "
          f"QR {budget.qr_shapes[0][0]}x{budget.qr_shapes[0][1]} and "
          f"{budget.qr_shapes[1][0]}x{budget.qr_shapes[1][1]}")
    print(f"  1-D reference: {budget.ref_1d_mults} multiplies, {budget.ref_1d_adds} adds; "
          f"QR {budget.ref_1d_qr_shape[0]}x{budget.ref_1d_qr_shape[1]}")
    return 0


def main(argv=None):
    parser = argparse.ArgumentParser(prog="ddmod", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    _add_simulate(sub)
    _add_verify(sub)
    _add_complexity(sub)
    args = parser.parse_args(argv)
    if args.command == "simulate":
        return _cmd_simulate(args)
    if args.command == "verify-properties":
        return _cmd_verify(args)
    return _cmd_complexity(args)


if __name__ == "__main__":
    sys.exit(main())
