"""Run every shipped config and the feedback-vs-DLA oscillator comparison.

Writes CSV, SVG and JSON summaries to ``--out`` (default ``out/``).
"""
import argparse
import glob
import json
import os
import time

from nhfeedback.harness import (ExperimentConfig, compare_sections, drift_metrics, emit_section_svg, exact_error,
                                run_experiment, write_outputs)

ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))


def run_one(path, out, overrides=()):
    cfg = ExperimentConfig.from_ini(path, overrides)
    t0 = time.perf_counter()
    rec = run_experiment(cfg)
    secs = time.perf_counter() - t0
    write_outputs(rec, cfg, out)
    drift = {k: v["max"] for k, v in drift_metrics(rec).items()}
    err = exact_error(rec)
    line = f"{cfg.label:28s} {secs:6.1f}s  " + "  ".join(f"{k}={v:.2e}" for k, v in drift.items())
    print(line + (f"  exact={err:.2e}" if err is not None else ""))
    return rec


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default=os.path.join(ROOT, "out"))
    ap.add_argument("--configs", default=os.path.join(ROOT, "configs"))
    ap.add_argument("--section-horizon", type=float, default=400.0, help="horizon of the Poincare comparison")
    args = ap.parse_args()

    for path in sorted(glob.glob(os.path.join(args.configs, "*.ini"))):
        run_one(path, args.out)

    over = [f"horizon={args.section_horizon:g}", "poincare=true"]
    fi = run_one(os.path.join(args.configs, "oscillator_fi.ini"), args.out, over + ["name=oscillator_fi_sections"])
    dla = run_one(os.path.join(args.configs, "oscillator_dla.ini"), args.out, over + ["name=oscillator_dla_sections"])
    cmp = compare_sections(fi.extras["poincare"], dla.extras["poincare"])
    for plane, c in cmp.items():
        print(f"section {plane}: feedback {c['count_a']} points, DLA {c['count_b']} points, "
              f"Hausdorff {c['hausdorff']:.3e}")
    emit_section_svg({"feedback": fi.extras["poincare"], "DLA": dla.extras["poincare"]},
                     os.path.join(args.out, "oscillator_sections.svg"))
    with open(os.path.join(args.out, "oscillator_sections.json"), "w") as fh:
        json.dump(cmp, fh, indent=2)


if __name__ == "__main__":
    main()
