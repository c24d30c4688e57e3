"""Step-size sweeps behind the acceptance thresholds.

* Suslov with feedback (Euler): exact-solution error, defect and drifts under
  dt in {1e-3, 5e-4, 2.5e-4}; every quantity should halve with dt.
* Knife edge with feedback (Euler): position error against the RK4 oracle and
  the drifts of J1, J2, H under dt in {1e-3, 5e-4, 2.5e-4}.
* Order check without feedback on the Suslov exact solution over [0, 1].
"""
import argparse
import os

import numpy as np

from nhfeedback.harness import ExperimentConfig, drift_metrics, exact_error, observed_orders, run_experiment, sweep
from nhfeedback.systems import KnifeEdgeParams, make_entry
from nhfeedback.systems.knife_edge import cached_reference

ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))


def load(name, *overrides):
    return ExperimentConfig.from_ini(os.path.join(ROOT, "configs", name), list(overrides))


def table(rows, extra=None):
    for dt, rec, err in rows:
        drift = {k: v["max"] for k, v in drift_metrics(rec).items() if not k.startswith("dPi")}
        cols = [f"dt={dt:<8g}"]
        if err is not None:
            cols.append(f"exact={err:.3e}")
        if extra is not None:
            cols.append(extra(dt, rec))
        cols += [f"{k}={v:.3e}" for k, v in drift.items()]
        print("  ".join(cols))


def suslov():
    print("Suslov, Euler + feedback, T=10")
    rows = sweep(load("suslov.ini"), [1e-3, 5e-4, 2.5e-4])
    table(rows)
    print("  observed orders:", ", ".join(f"{o:.2f}" for o in observed_orders(rows)))


def knife(T):
    print(f"Knife edge, Euler + feedback, T={T:g}")
    p = KnifeEdgeParams()
    x0 = make_entry("knife-edge").initial_state
    t_ref, ref = cached_reference(p, x0, T, dt=1e-5, sample_dt=1e-3)

    def pos_err(dt, rec):
        # the oracle is sampled every 1e-3; compare at the shared times
        idx = np.rint(rec.times / 1e-3).astype(int)
        keep = np.abs(idx * 1e-3 - rec.times) < 1e-9
        return f"position={np.abs(rec.get('q')[keep] - ref[idx[keep], :3]).max():.3e}"

    # explicit Euler on the gradient term needs dt * k |grad F|^2 < 2; with k = 1000
    # that fails from dt = 2e-3 on, so the sweep refines downward from 1e-3
    rows = sweep(load("knife_edge.ini", f"horizon={T:g}"), [1e-3, 5e-4, 2.5e-4])
    table(rows, pos_err)


def orders():
    print("Suslov without feedback, [0,1]")
    for stepper, dts in (("euler", [1e-3, 5e-4]), ("rk4", [0.1, 0.05])):
        cfg = ExperimentConfig("suslov", stepper=stepper, feedback=False, horizon=1.0)
        rows = sweep(cfg, dts)
        e0, e1 = rows[0][2], rows[1][2]
        print(f"  {stepper:5s} errors {e0:.3e} -> {e1:.3e}  ratio {e0 / e1:.2f}")


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--knife-horizon", type=float, default=200.0)
    ap.add_argument("--skip-knife", action="store_true")
    args = ap.parse_args()
    suslov()
    if not args.skip_knife:
        knife(args.knife_horizon)
    orders()


if __name__ == "__main__":
    main()
