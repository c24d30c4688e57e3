"""Command line entry point: ``nhfeedback {run,sweep,compare,list}``."""
from __future__ import annotations

import argparse
import json
import os
import sys

from .harness import (ConfigError, ExperimentConfig, compare_sections, drift_metrics, emit_section_svg,
                      exact_error, observed_orders, run_experiment, sweep, write_outputs)
from .steppers import IntegrationError
from .systems import make_entry, system_names


def _load(path, overrides):
    return ExperimentConfig.from_ini(path, overrides)


def _print_drift(label, record):
    print(f"[{label}] samples={len(record)} t_end={record.times[-1] if len(record) else 0:g}"
          + (" FAILED: " + record.message if record.failed else ""))
    for name, m in drift_metrics(record).items():
        print(f"  {name:>10s}  max|.|={m['max']:.3e}  final|.|={m['final']:.3e}")


def cmd_run(args):
    cfg = _load(args.config, args.override)
    rec = run_experiment(cfg)
    paths = write_outputs(rec, cfg, args.out)
    _print_drift(cfg.label, rec)
    sec = rec.extras.get("poincare")
    if sec is not None:
        print(f"  poincare crossings: {len(sec)}")
    for kind, p in paths.items():
        print(f"  wrote {kind}: {p}")
    return 1 if rec.failed else 0


def cmd_sweep(args):
    cfg = _load(args.config, args.override)
    if args.dts:
        dts = [float(v) for v in args.dts.split(",")]
    else:
        dts = [cfg.dt / 2 ** k for k in range(args.levels)]
    rows = sweep(cfg, dts)
    out = args.out or cfg.out_dir
    os.makedirs(out, exist_ok=True)
    summary = []
    for dt, rec, err in rows:
        write_outputs(rec, rec.extras["config"], out)
        drift = drift_metrics(rec)
        summary.append({"dt": dt, "exact_error": err, "failed": rec.failed,
                        "drift_max": {k: v["max"] for k, v in drift.items()}})
        err_s = "n/a" if err is None else f"{err:.3e}"
        print(f"dt={dt:<10g} exact_error={err_s}  " + "  ".join(f"{k}={v['max']:.2e}" for k, v in drift.items()))
    orders = observed_orders(rows)
    if orders:
        print("observed orders: " + ", ".join(f"{o:.2f}" for o in orders))
    with open(os.path.join(out, f"{cfg.label}_sweep.json"), "w") as fh:
        json.dump({"legs": summary, "orders": orders}, fh, indent=2)
    return 0


def cmd_compare(args):
    if len(args.config) != 2:
        raise ConfigError("compare needs exactly two --config files")
    cfgs = [_load(p, args.override) for p in args.config]
    if cfgs[0].label == cfgs[1].label:
        cfgs[1] = cfgs[1].replace(name=cfgs[1].label + "_b")
    out = args.out or cfgs[0].out_dir
    recs = []
    for cfg in cfgs:
        rec = run_experiment(cfg)
        write_outputs(rec, cfg, out)
        _print_drift(cfg.label, rec)
        recs.append(rec)
    report = {cfg.label: {"drift": drift_metrics(rec), "exact_error": exact_error(rec)} for cfg, rec in zip(cfgs, recs)}
    secs = [rec.extras.get("poincare") for rec in recs]
    if all(s is not None for s in secs):
        cmp = compare_sections(*secs)
        report["poincare"] = cmp
        for plane, c in cmp.items():
            print(f"  section {plane}: {c['count_a']} vs {c['count_b']} points, Hausdorff {c['hausdorff']:.3e}")
        emit_section_svg({cfg.label: s for cfg, s in zip(cfgs, secs)},
                         os.path.join(out, f"{cfgs[0].label}_vs_{cfgs[1].label}_sections.svg"))
    path = os.path.join(out, f"{cfgs[0].label}_vs_{cfgs[1].label}.json")
    with open(path, "w") as fh:
        json.dump(report, fh, indent=2, sort_keys=True)
    print(f"  wrote comparison: {path}")
    return 0


def cmd_list(args):
    for name in system_names():
        e = make_entry(name)
        variants = ",".join(e.fields)
        print(f"{name:18s} {e.description}")
        print(f"{'':18s} state: {' '.join(e.layout.component_labels())}")
        print(f"{'':18s} integrals: {' '.join(e.integrals)}  variants: {variants}  dla: {'yes' if e.dla else 'no'}")
    return 0


def build_parser():
    p = argparse.ArgumentParser(prog="nhfeedback", description="Feedback integrators for nonholonomic systems")
    sub = p.add_subparsers(dest="verb", required=True)

    def common(sp, multi=False):
        sp.add_argument("--config", required=True, action="append" if multi else "store", help="INI config file")
        sp.add_argument("--out", default=None, help="output directory (default: [output] dir)")
        sp.add_argument("--override", action="append", default=[], metavar="KEY=VALUE",
                        help="override a config entry, e.g. dt=5e-4 or gains.J=10 (repeatable)")

    common(sub.add_parser("run", help="run one experiment"))
    sp = sub.add_parser("sweep", help="repeat an experiment over step sizes")
    common(sp)
    sp.add_argument("--dts", default=None, help="comma-separated step sizes")
    sp.add_argument("--levels", type=int, default=3, help="number of halvings of the config dt (without --dts)")
    common(sub.add_parser("compare", help="run two experiments and compare them"), multi=True)
    sub.add_parser("list", help="list the available systems")
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    handler = {"run": cmd_run, "sweep": cmd_sweep, "compare": cmd_compare, "list": cmd_list}[args.verb]
    try:
        return handler(args)
    except (ConfigError, IntegrationError, OSError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
