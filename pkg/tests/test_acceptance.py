"""Acceptance suite: one test per criterion, each printing a single PASS/FAIL line."""
import math
import os
import time

import numpy as np
import pytest

from nhfeedback.extension import constraint_momenta
from nhfeedback.feedback import gradient_check, lyapunov_gradient, lyapunov_value
from nhfeedback.harness import ExperimentConfig, compare_sections, drift_metrics, run_experiment
from nhfeedback.steppers import integrate
from nhfeedback.systems import KnifeEdgeParams, RacerParams, SleighParams, make_entry, system_names
from nhfeedback.systems.knife_edge import cached_reference
from nhfeedback.systems.racer import extended_energy, racer_setup
from nhfeedback.systems.sleigh import body_momentum, push_to_reduced, sleigh_entry, unreduced_setup
from nhfeedback.systems.suslov import exact_momentum

CONFIGS = os.path.join(os.path.dirname(os.path.dirname(os.path.abspath(__file__))), "configs")


@pytest.fixture
def report(capsys):
    def emit(number, title, checks):
        """``checks`` holds ``(label, value, bound[, op])``; ``op`` is ``"<="`` (default) or ``">="``."""
        rows = [(c[0], c[1], c[2], c[3] if len(c) > 3 else "<=") for c in checks]
        passed = [v <= b if op == "<=" else v >= b for _, v, b, op in rows]
        detail = "; ".join(f"{lab}={v:.3g} ({op} {b:.3g})" for lab, v, b, op in rows)
        with capsys.disabled():
            print(f"\n[{'PASS' if all(passed) else 'FAIL'}] AC{number} {title}: {detail}")
        for (lab, v, b, op), ok in zip(rows, passed):
            assert ok, f"{lab}: {v} not {op} {b}"
    return emit


def load(name, *overrides):
    return ExperimentConfig.from_ini(os.path.join(CONFIGS, name), list(overrides))


def timed(fn, *args):
    t0 = time.perf_counter()
    out = fn(*args)
    return out, time.perf_counter() - t0


def entries():
    out = {name: make_entry(name) for name in system_names()}
    out["chaplygin-sleigh/embedded"] = make_entry("chaplygin-sleigh", chart="embedded")
    return out


def needs_constraint(entry, names):
    return any(entry.integral(n).on_constraint_only for n in names)


def orthogonalize(entry, x):
    if "R" in entry.penalties:
        U, _, Vt = np.linalg.svd(entry.layout.get(x, "R"))
        x = x.copy()
        x[entry.layout.slice("R")] = (U @ Vt).ravel()
    return x


def test_ac01_suslov_feedback_reproduction(report):
    cfg = load("suslov.ini")
    rec, secs = timed(run_experiment, cfg)
    m = drift_metrics(rec)
    err = np.abs(rec.get("Pi") - exact_momentum(rec.times)).max()
    report(1, "Suslov Euler+feedback dt=1e-3 T=10", [
        ("max|Pi-exact|", err, 5e-3), ("max defect", m["defect"]["max"], 1e-3),
        ("max|dJ|", m["dJ"]["max"], 1e-4), ("max|dh|", m["dh"]["max"], 1e-4), ("runtime s", secs, 5.0)])


def test_ac02_suslov_field_against_exact_solution(report):
    cfg = load("suslov_rk4_plain.ini")
    assert cfg.stepper == "rk4" and cfg.dt == 1e-4 and not cfg.feedback
    rec = run_experiment(cfg.replace(horizon=10.0))
    err = np.abs(rec.get("Pi") - exact_momentum(rec.times)).max()
    report(2, "Suslov RK4 dt=1e-4 no feedback T=10", [("max|Pi-exact|", err, 1e-6)])


def test_ac03_knife_edge_against_oracle(report):
    cfg = load("knife_edge.ini")
    t0 = time.perf_counter()
    p = KnifeEdgeParams()
    entry = make_entry("knife-edge")
    t_ref, ref = cached_reference(p, entry.initial_state, 200.0, dt=1e-5, sample_dt=1e-3)
    rec = run_experiment(cfg)
    secs = time.perf_counter() - t0
    assert len(rec) == len(t_ref) and np.allclose(rec.times, t_ref, atol=1e-9)
    pos = np.abs(rec.get("q") - ref[:, :3]).max()
    m = drift_metrics(rec)
    w = t_ref <= 50.0
    y_err = np.abs(ref[w, 1] - (t_ref[w] - np.sin(t_ref[w])) / 2).max()
    report(3, "knife edge Euler+feedback dt=1e-3 T=200 vs RK4 dt=1e-5 oracle", [
        ("max position err", pos, 1e-2), ("max|dJ1|", m["dJ1"]["max"], 1e-3), ("max|dJ2|", m["dJ2"]["max"], 1e-3),
        ("max|dH|", m["dH"]["max"], 1e-3), ("oracle y vs (t-sin t)/2 on [0,50]", y_err, 1e-4),
        ("runtime s", secs, 60.0)])


def test_ac04_conservation_suite(report, rng):
    t0 = time.perf_counter()
    worst_cons, worst_agree = 0.0, 0.0
    for name, e in entries().items():
        for X in e.fields.values():
            for F in X.integrals:
                for _ in range(200):
                    x = e.sample(rng, on_constraint=F.on_constraint_only)
                    g, v = F.gradient(x), X(x)
                    worst_cons = max(worst_cons, abs(g @ v) / (1 + np.linalg.norm(g) * np.linalg.norm(v)))
            for _ in range(200):
                x = e.sample(rng, on_constraint=True)
                worst_agree = max(worst_agree, np.abs(X(x) - e.constrained_rate(x)).max())
    secs = time.perf_counter() - t0
    report(4, "conservation and on-constraint agreement, all systems", [
        ("max |<gradF,X>|/(1+|gradF||X|)", worst_cons, 1e-10), ("max |X_ext - X_nh| on C", worst_agree, 1e-10),
        ("runtime s", secs, 5.0)])


def test_ac05_dissipation_and_zero_set(report, rng):
    worst_id, worst_zero = 0.0, 0.0
    for name, e in entries().items():
        for variant, X in e.fields.items():
            ff = e.feedback(variant=variant)
            on = needs_constraint(e, e.controlled_names(variant))
            for _ in range(200):
                x = e.sample(rng, on_constraint=on)
                g = lyapunov_gradient(ff.lyapunov, x)
                worst_id = max(worst_id, abs(g @ ff(x) + g @ g) / (1 + g @ g))
            made = 0
            while made < 20:
                x0 = orthogonalize(e, e.sample(rng, on_constraint=True))
                try:
                    ffz = e.feedback(variant=variant, x0=x0)
                except ValueError:
                    continue  # level set through x0 is not an admissible target
                made += 1
                assert lyapunov_value(ffz.lyapunov, x0) < 1e-25
                worst_zero = max(worst_zero, np.abs(ffz(x0) - X(x0)).max())
    report(5, "dissipation identity and agreement on V^-1(0)", [
        ("max |dV/dt + |gradV|^2|/(1+|gradV|^2)", worst_id, 1e-9), ("max |feedback - base| on V^-1(0)", worst_zero, 1e-12)])


def test_ac06_gradient_suite(report, rng):
    worst = {"integrals": 0.0, "V": 0.0, "racer htilde": 0.0}
    for name, e in entries().items():
        for F in e.integrals.values():
            for _ in range(100):
                worst["integrals"] = max(worst["integrals"], gradient_check(F.value, F.gradient, e.sample(rng)))
        for variant in e.fields:
            spec = e.lyapunov(variant=variant)
            for _ in range(100):
                worst["V"] = max(worst["V"], gradient_check(lambda y: lyapunov_value(spec, y),
                                                            lambda y: lyapunov_gradient(spec, y), e.sample(rng)))
    # racer: engine partials of the extended energy against the displayed closed form
    p = RacerParams(m=1.3, I1=0.7, I2=1.1, d1=0.8, d2=1.2)
    s = racer_setup(p)
    lay = s.layout

    def h_displayed(x):
        return extended_energy(p, lay.get(x, "Pi"), lay.get(x, "phi")[0], lay.get(x, "p_phi")[0])

    def h_grad(x):
        pt = s.evaluate(x)
        return s.full_gradient(pt.Ht_z, pt.Ht_x)

    for _ in range(100):
        x = s.join(rng.standard_normal(3), rng.standard_normal(3), rng.uniform(-3, 3, 1), rng.standard_normal(1))
        worst["racer htilde"] = max(worst["racer htilde"], gradient_check(h_displayed, h_grad, x))
    report(6, "analytic gradients vs central differences (step 1e-5)",
           [(f"max rel err {k}", v, 1e-6) for k, v in worst.items()])


def test_ac07_oscillator_fi_versus_dla(report):
    fi_cfg = load("oscillator_fi.ini")
    dla_cfg = load("oscillator_dla.ini")
    t0 = time.perf_counter()
    fi = run_experiment(fi_cfg)
    dla = run_experiment(dla_cfg)
    secs = time.perf_counter() - t0
    fi_dH = drift_metrics(fi)["dH"]["max"]
    dla_dH = drift_metrics(dla)["dH"]["max"]
    e = fi.extras["entry"]
    J = np.array([constraint_momenta(e.setup, x)[0] for x in fi.states[::100]])
    report(7, "oscillator FI vs DLA, dt=h=1e-3, T=200", [
        ("FI max|dH| / (DLA max|dH|/10)", fi_dH / (dla_dH / 10), 1.0),
        ("DLA max step residual", float(np.abs(dla.extras["step_residual"]).max()), 1e-12),
        ("FI max|J|", float(np.abs(J).max()), 1e-4), ("runtime s", secs, 60.0)])


def test_ac08_oscillator_poincare_sections(report):
    fi = run_experiment(load("oscillator_fi.ini", "horizon=400", "poincare=true"))
    dla = run_experiment(load("oscillator_dla.ini", "horizon=400", "poincare=true"))
    cmp = compare_sections(fi.extras["poincare"], dla.extras["poincare"])
    checks = []
    for plane, c in cmp.items():
        checks += [(f"{plane} min points", min(c["count_a"], c["count_b"]), 60, ">="),
                   (f"{plane} |count diff|", abs(c["count_a"] - c["count_b"]), 2),
                   (f"{plane} Hausdorff", c["hausdorff"], 0.1)]
    report(8, "oscillator Poincare sections FI vs DLA, T=400", checks)


def test_ac09_disk_exponential_convergence(report):
    cfg = load("vertical_disk.ini")
    assert cfg.dt == 1e-3 and cfg.horizon == 10
    rec = run_experiment(cfg)
    Pi0 = np.array([cfg.targets[k] for k in ("Pi_theta", "Pi_x", "Pi_y", "Pi_psi")])
    err = np.linalg.norm(rec.get("Pi") - Pi0, axis=1)
    ratio = (err / (np.exp(-rec.times) * err[0])).max()
    report(9, "vertical disk |Pi(t)-Pi0| <= 1.01 exp(-t) |Pi(0)-Pi0|", [("max ratio", ratio, 1.01)])


def test_ac10_extension_commutes_with_reduction(report, rng):
    p = SleighParams()
    up = unreduced_setup(p).bundle
    red = sleigh_entry(p)
    worst = 0.0
    for _ in range(100):
        q = np.concatenate([rng.uniform(-math.pi, math.pi, 1), rng.uniform(-2, 2, 2)])
        pp = rng.standard_normal(3)
        X = up.extended_rate(np.concatenate([q, pp]))
        pushed = push_to_reduced(q, pp, X[:3], X[3:])
        worst = max(worst, np.abs(pushed - red.field(np.concatenate([q, body_momentum(q, pp)]))).max())
    report(10, "Chaplygin sleigh: unreduced extension pushed down = reduced extension", [("max diff", worst, 1e-10)])


def test_ac11_convergence_orders(report):
    e = make_entry("suslov")

    def err(kind, dt):
        rec = integrate(kind, e.field, e.initial_state, dt, 1.0, layout=e.layout)
        return np.abs(rec.get("Pi") - exact_momentum(rec.times)).max()

    euler = err("euler", 1e-3) / err("euler", 5e-4)
    rk4 = err("rk4", 0.1) / err("rk4", 0.05)
    report(11, "order under dt halving on Suslov exact solution, [0,1]", [
        ("|Euler ratio - 2|", abs(euler - 2), 0.2), ("|RK4 ratio - 16|", abs(rk4 - 16), 4.0)])
