"""Config-driven experiment runner: build a system, integrate, compute diagnostics, write CSV/SVG.

Config files are INI style::

    [experiment]
    system = suslov
    stepper = euler        ; euler | rk4 | dla
    dt = 1e-3
    horizon = 10
    feedback = true
    energy = original      ; original | extended
    variant = extended     ; field variant (vertical-disk: modified | extended)
    chart = angle          ; chaplygin-sleigh: angle | embedded
    poincare = false
    gain_matrix =          ; n diagonal entries or n*n row-major entries

    [params]               ; physical parameters, e.g. m = 2
    [initial]              ; block or component overrides, e.g. Pi = 0, 1, 1
    [gains]                ; per integral / matrix block, e.g. J = 100
    [targets]              ; per integral, defaults to the initial value

    [output]
    name = suslov
    dir = out
    csv_stride = 10
    svg = true
"""
from __future__ import annotations

import configparser
import dataclasses
import io
import json
import math
import os
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.spatial.distance import directed_hausdorff

from .feedback import FeedbackField, lyapunov_value
from .geom import orthogonality_defect
from .steppers import IntegrationError, StepperKind, TrajectoryRecord, integrate, integrate_dla
from .systems import PoincareEvent, make_entry, system_names


class ConfigError(ValueError):
    pass


def _parse_bool(v):
    if isinstance(v, bool):
        return v
    s = str(v).strip().lower()
    if s in ("1", "true", "yes", "on"):
        return True
    if s in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"not a boolean: {v!r}")


def _parse_numbers(v):
    if isinstance(v, (int, float)):
        return float(v)
    if isinstance(v, (list, tuple, np.ndarray)):
        return [float(x) for x in np.ravel(v)]
    parts = [p for p in str(v).replace(";", ",").replace(" ", ",").split(",") if p]
    try:
        vals = [float(p) for p in parts]
    except ValueError:
        raise ConfigError(f"expected numbers, got {v!r}") from None
    if not vals:
        raise ConfigError("empty numeric value")
    return vals[0] if len(vals) == 1 else vals


@dataclass
class ExperimentConfig:
    system: str
    stepper: str = "euler"
    dt: float = 1e-3
    horizon: Optional[float] = None
    feedback: bool = True
    energy: Optional[str] = None
    variant: Optional[str] = None
    chart: Optional[str] = None
    poincare: bool = False
    gain_matrix: Optional[list] = None
    params: dict = field(default_factory=dict)
    initial: dict = field(default_factory=dict)
    gains: dict = field(default_factory=dict)
    targets: dict = field(default_factory=dict)
    name: Optional[str] = None
    out_dir: str = "out"
    csv_stride: int = 10
    svg: bool = True

    _EXPERIMENT_KEYS = ("system", "stepper", "dt", "horizon", "feedback", "energy", "variant", "chart",
                        "poincare", "gain_matrix")
    _OUTPUT_KEYS = {"name": "name", "dir": "out_dir", "csv_stride": "csv_stride", "svg": "svg"}

    def __post_init__(self):
        self.validate()

    @property
    def label(self):
        return self.name or self.system

    def validate(self):
        if self.system not in system_names():
            raise ConfigError(f"unknown system {self.system!r}; choose from {list(system_names())}")
        try:
            StepperKind.parse(self.stepper)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        if not (math.isfinite(self.dt) and self.dt > 0):
            raise ConfigError(f"dt must be positive, got {self.dt}")
        if self.horizon is not None and not (math.isfinite(self.horizon) and self.horizon >= 0):
            raise ConfigError(f"horizon must be nonnegative, got {self.horizon}")
        for k, g in self.gains.items():
            if not (math.isfinite(g) and g >= 0):
                raise ConfigError(f"gain {k} must be nonnegative, got {g}")
        if self.energy not in (None, "original", "extended"):
            raise ConfigError(f"energy must be 'original' or 'extended', got {self.energy!r}")
        if self.csv_stride < 1:
            raise ConfigError("csv_stride must be a positive integer")

    # ---- construction ---------------------------------------------------

    @classmethod
    def from_sections(cls, sections):
        """Build from a mapping ``section -> {key: value}`` (strings or numbers)."""
        exp = dict(sections.get("experiment", {}))
        kw = {}
        if "system" not in exp:
            raise ConfigError("[experiment] needs a 'system' entry")
        for k, v in exp.items():
            if k not in cls._EXPERIMENT_KEYS:
                raise ConfigError(f"unknown [experiment] key {k!r}")
            if v is None or (isinstance(v, str) and not v.strip()):
                continue
            if k in ("dt", "horizon"):
                kw[k] = float(v)
            elif k in ("feedback", "poincare"):
                kw[k] = _parse_bool(v)
            elif k == "gain_matrix":
                nums = _parse_numbers(v)
                kw[k] = nums if isinstance(nums, list) else [nums]
            else:
                kw[k] = str(v).strip()
        for k, v in sections.get("output", {}).items():
            if k not in cls._OUTPUT_KEYS:
                raise ConfigError(f"unknown [output] key {k!r}")
            attr = cls._OUTPUT_KEYS[k]
            kw[attr] = int(v) if attr == "csv_stride" else _parse_bool(v) if attr == "svg" else str(v).strip()
        for sec in ("params", "initial", "gains", "targets"):
            vals = {k: _parse_numbers(v) for k, v in sections.get(sec, {}).items()}
            if sec in ("gains", "targets"):
                for k, v in vals.items():
                    if isinstance(v, list):
                        raise ConfigError(f"[{sec}] {k} must be a single number")
            kw[sec] = vals
        return cls(**kw)

    @classmethod
    def from_ini(cls, path, overrides=()):
        parser = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
        parser.optionxform = str  # keep case: integral names are case sensitive
        try:
            with open(path) as fh:
                parser.read_file(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
        sections = {s: dict(parser[s]) for s in parser.sections()}
        return cls.from_sections(apply_overrides(sections, overrides))

    def to_sections(self):
        exp = {k: getattr(self, k) for k in self._EXPERIMENT_KEYS if getattr(self, k) is not None}
        out = {k: getattr(self, a) for k, a in self._OUTPUT_KEYS.items() if getattr(self, a) is not None}
        return {"experiment": exp, "params": dict(self.params), "initial": dict(self.initial),
                "gains": dict(self.gains), "targets": dict(self.targets), "output": out}

    def replace(self, **changes):
        return dataclasses.replace(self, **changes)


def apply_overrides(sections, overrides):
    """Apply ``section.key=value`` (or ``key=value`` for [experiment]) strings."""
    sections = {k: dict(v) for k, v in sections.items()}
    for item in overrides or ():
        if "=" not in item:
            raise ConfigError(f"override must look like key=value, got {item!r}")
        key, value = item.split("=", 1)
        key = key.strip()
        sec, _, name = key.rpartition(".")
        sec = sec or ("output" if name in ExperimentConfig._OUTPUT_KEYS else "experiment")
        sections.setdefault(sec, {})[name] = value.strip()
    return sections


# --------------------------------------------------------------------------
# running


def build_entry(config: ExperimentConfig):
    try:
        entry = make_entry(config.system, config.params, chart=config.chart)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from None
    x0 = entry.initial_state.copy()
    labels = entry.layout.component_labels()
    for key, val in config.initial.items():
        val = np.atleast_1d(np.asarray(val, dtype=float))
        if key in entry.layout.names:
            sl = entry.layout.slice(key)
            if val.size != sl.stop - sl.start:
                raise ConfigError(f"initial {key} needs {sl.stop - sl.start} values, got {val.size}")
            x0[sl] = val
        elif key in labels:
            if val.size != 1:
                raise ConfigError(f"initial {key} is a single component")
            x0[labels.index(key)] = val[0]
        else:
            raise ConfigError(f"unknown initial-state key {key!r}; blocks {entry.layout.names}, components {labels}")
    overridden = not np.array_equal(x0, entry.initial_state)
    if overridden:
        entry = dataclasses.replace(entry, initial_state=x0, exact=None, exact_block=None)
    return entry


def _gain_matrix(config, n):
    if config.gain_matrix is None:
        return None
    vals = np.asarray(config.gain_matrix, dtype=float)
    if vals.size == n:
        return np.diag(vals)
    if vals.size == n * n:
        return vals.reshape(n, n)
    raise ConfigError(f"gain_matrix needs {n} or {n * n} entries, got {vals.size}")


def _channel_observers(entry, spec):
    """Channel name -> observer(t, x), in output order."""
    obs = {}
    layout = entry.layout
    if entry.exact is not None and entry.exact_block is not None:
        sl = layout.slice(entry.exact_block)
        blk = layout.block(entry.exact_block)
        names = blk.labels or tuple(f"{blk.name}{i + 1}" for i in range(blk.size))
        if blk.size == 1:
            names = blk.labels or (blk.name,)
        for i, lab in enumerate(names):
            obs["d" + lab] = (lambda i: lambda t, x: x[sl][i] - entry.exact(t)[i])(i)
    for blk in entry.penalties:
        name = "defect" if len(entry.penalties) == 1 else f"defect_{blk}"
        obs[name] = (lambda b: lambda t, x: orthogonality_defect(layout.get(x, b)))(blk)
    for F in spec.integrals:
        obs["d" + F.name] = (lambda F: lambda t, x: F.value(x) - F.target)(F)
    for name in entry.monitors:
        if "d" + name in obs:
            continue
        F = entry.integral(name)
        c = F.value(entry.initial_state)
        obs["d" + name] = (lambda F, c: lambda t, x: F.value(x) - c)(F, c)
    return obs


def run_experiment(config: ExperimentConfig) -> TrajectoryRecord:
    """Build the system, apply feedback unless disabled, integrate and attach diagnostics.

    The Lyapunov value is kept in ``record.extras['V']`` (not a CSV channel).
    A blow-up returns the partial record with ``failed`` set.
    """
    entry = build_entry(config)
    kind = StepperKind.parse(config.stepper)
    T = entry.default_horizon if config.horizon is None else config.horizon
    variant = config.variant or entry.default_variant
    if variant not in entry.fields:
        raise ConfigError(f"{entry.name} has no field variant {variant!r}; have {sorted(entry.fields)}")
    try:
        spec = entry.lyapunov(gains=config.gains, targets=config.targets, variant=variant, energy=config.energy)
    except (KeyError, ValueError) as exc:
        raise ConfigError(str(exc)) from None
    observers = _channel_observers(entry, spec)
    observers["V"] = lambda t, x: lyapunov_value(spec, x)

    if kind is StepperKind.DLA:
        if not entry.dla:
            raise ConfigError(f"no discrete Lagrange-d'Alembert scheme for {entry.name}")
        if config.feedback:
            raise ConfigError("the DLA baseline runs without feedback; set feedback = false")
        x0 = entry.initial_state
        q0 = x0[:3]
        # start from q_0 and the q_1 implied by the initial momentum
        q1 = q0 + config.dt * x0[3:]
        rec = integrate_dla(q0, q1, config.dt, T, observers, layout=entry.layout)
        res = np.zeros(len(rec.times))
        steps = rec.extras["step_residual"]
        idx = np.rint(rec.times / config.dt).astype(int)
        res[1:] = steps[idx[1:] - 1]
        rec.channels["residual"] = res
    else:
        base = entry.fields[variant]
        f = FeedbackField(base, spec, _gain_matrix(config, entry.layout.size)) if config.feedback else base
        try:
            rec = integrate(kind, f, entry.initial_state, config.dt, T, observers, layout=entry.layout)
        except IntegrationError as exc:
            rec = exc.record
    rec.extras["V"] = rec.channels.pop("V")
    rec.extras["entry"] = entry
    rec.extras["config"] = config
    if config.poincare:
        if entry.event is None:
            raise ConfigError(f"{entry.name} declares no Poincare event")
        rec.extras["poincare"] = poincare_section(rec, entry.event)
    return rec


# --------------------------------------------------------------------------
# diagnostics


@dataclass
class PoincareSection:
    times: np.ndarray
    planes: dict

    def __len__(self):
        return len(self.times)


def poincare_section(record: TrajectoryRecord, event: PoincareEvent) -> PoincareSection:
    """Crossings of ``event.coordinate = 0`` in ``event.direction``, located by linear interpolation."""
    labels = record.layout.component_labels()
    if event.coordinate not in labels:
        raise KeyError(f"event coordinate {event.coordinate!r} not in layout")
    y = record.states[:, labels.index(event.coordinate)]
    if event.direction >= 0:
        k = np.nonzero((y[:-1] < 0) & (y[1:] >= 0))[0]
    else:
        k = np.nonzero((y[:-1] > 0) & (y[1:] <= 0))[0]
    s = -y[k] / (y[k + 1] - y[k])
    times = record.times[k] + s * (record.times[k + 1] - record.times[k])
    pts = record.states[k] + s[:, None] * (record.states[k + 1] - record.states[k])
    planes = {pair: pts[:, [labels.index(pair[0]), labels.index(pair[1])]] for pair in event.planes}
    return PoincareSection(times, planes)


def drift_metrics(record: TrajectoryRecord) -> dict:
    """Per channel: ``{'max': max |value|, 'final': |last value|}``."""
    out = {}
    for name, vals in record.channels.items():
        a = np.abs(np.asarray(vals))
        out[name] = {"max": float(a.max()) if a.size else 0.0, "final": float(a[-1]) if a.size else 0.0}
    return out


def hausdorff(A, B) -> float:
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    if len(A) == 0 or len(B) == 0:
        return math.inf if len(A) or len(B) else 0.0
    return max(directed_hausdorff(A, B)[0], directed_hausdorff(B, A)[0])


def compare_sections(a: PoincareSection, b: PoincareSection) -> dict:
    return {f"{p[0]}-{p[1]}": {"count_a": len(a.planes[p]), "count_b": len(b.planes[p]),
                               "hausdorff": hausdorff(a.planes[p], b.planes[p])} for p in a.planes}


# --------------------------------------------------------------------------
# output


def emit_csv(record: TrajectoryRecord, path, stride=1):
    """Header ``t,<channels>`` and one row per sampled step, 17 significant digits."""
    names = list(record.channels)
    idx = np.arange(0, len(record.times), stride)
    if len(record.times) and idx[-1] != len(record.times) - 1:
        idx = np.append(idx, len(record.times) - 1)
    cols = [np.asarray(record.times)[idx]] + [np.asarray(record.channels[n])[idx] for n in names]
    data = np.column_stack(cols) if len(idx) else np.empty((0, len(cols)))
    try:
        with open(path, "w") as fh:
            fh.write(",".join(["t"] + names) + "\n")
            np.savetxt(fh, data, fmt="%.17g", delimiter=",")
    except OSError as exc:
        raise OSError(f"cannot write CSV {path}: {exc}") from exc


def read_csv(path):
    """Inverse of :func:`emit_csv`: ``(times, {channel: values})``."""
    with open(path) as fh:
        header = fh.readline().strip().split(",")
        body = fh.read()
    if body.strip():
        data = np.loadtxt(io.StringIO(body), delimiter=",", ndmin=2)
    else:
        data = np.empty((0, len(header)))
    return data[:, 0], {n: data[:, i + 1] for i, n in enumerate(header[1:])}


def emit_svg(record: TrajectoryRecord, path, title=None, stride=1):
    """One stacked line plot per channel."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    names = list(record.channels)
    has_v = "V" in record.extras and "V" not in record.channels
    names_v = names + ["V"] if has_v else names
    n = max(len(names_v), 1)
    t = np.asarray(record.times)[::stride]
    with matplotlib.rc_context({"svg.hashsalt": "nhfeedback", "svg.fonttype": "none"}):
        fig, axes = plt.subplots(n, 1, figsize=(6, 1.6 * n + 0.6), sharex=True, squeeze=False)
        for ax, name in zip(axes[:, 0], names_v):
            vals = record.extras["V"] if has_v and name == "V" else record.channels[name]
            ax.plot(t, np.asarray(vals)[::stride], lw=0.8)
            ax.set_ylabel(name)
            ax.ticklabel_format(axis="y", style="sci", scilimits=(-2, 3))
        axes[-1, 0].set_xlabel("t")
        if title:
            axes[0, 0].set_title(title)
        fig.tight_layout()
        try:
            fig.savefig(path, format="svg", metadata={"Date": None})
        except OSError as exc:
            raise OSError(f"cannot write SVG {path}: {exc}") from exc
        finally:
            plt.close(fig)


def emit_section_svg(sections: dict, path):
    """Scatter the Poincare planes of several runs (``label -> PoincareSection``)."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    planes = list(next(iter(sections.values())).planes)
    with matplotlib.rc_context({"svg.hashsalt": "nhfeedback", "svg.fonttype": "none"}):
        fig, axes = plt.subplots(1, len(planes), figsize=(5 * len(planes), 4), squeeze=False)
        for ax, pair in zip(axes[0], planes):
            for (label, sec), marker in zip(sections.items(), "o+x^"):
                pts = sec.planes[pair]
                ax.scatter(pts[:, 0], pts[:, 1], s=12, marker=marker, label=label)
            ax.set_xlabel(pair[0])
            ax.set_ylabel(pair[1])
            ax.legend()
        fig.tight_layout()
        fig.savefig(path, format="svg", metadata={"Date": None})
        plt.close(fig)


def write_outputs(record: TrajectoryRecord, config: ExperimentConfig, out_dir=None):
    """CSV, optional SVG and a JSON summary; returns the written paths."""
    out_dir = out_dir or config.out_dir
    os.makedirs(out_dir, exist_ok=True)
    base = os.path.join(out_dir, config.label)
    paths = {"csv": base + ".csv", "summary": base + "_summary.json"}
    emit_csv(record, paths["csv"], stride=config.csv_stride)
    if config.svg:
        paths["svg"] = base + ".svg"
        emit_svg(record, paths["svg"], title=config.label, stride=config.csv_stride)
    summary = {"system": config.system, "stepper": config.stepper, "dt": config.dt,
               "horizon": float(record.times[-1]) if len(record) else 0.0, "failed": record.failed,
               "message": record.message, "drift": drift_metrics(record)}
    V = record.extras.get("V")
    if V is not None and len(V):
        summary["V"] = {"max": float(np.max(V)), "final": float(V[-1])}
    if "step_residual" in record.extras:
        summary["max_step_residual"] = float(np.abs(record.extras["step_residual"]).max(initial=0.0))
    sec = record.extras.get("poincare")
    if sec is not None:
        paths["poincare"] = base + "_poincare.csv"
        cols = [sec.times] + [sec.planes[p][:, i] for p in sec.planes for i in (0, 1)]
        header = ["t"] + [f"{p[0]}|{p[1]}:{p[i]}" for p in sec.planes for i in (0, 1)]
        with open(paths["poincare"], "w") as fh:
            fh.write(",".join(header) + "\n")
            np.savetxt(fh, np.column_stack(cols) if len(sec) else np.empty((0, len(cols))), fmt="%.17g", delimiter=",")
        summary["poincare_crossings"] = len(sec)
    with open(paths["summary"], "w") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
    return paths


def exact_error(record: TrajectoryRecord) -> Optional[float]:
    """Largest exact-solution deviation over the record, if the run has one."""
    entry = record.extras.get("entry")
    if entry is None or entry.exact is None:
        return None
    sl = entry.layout.slice(entry.exact_block)
    return float(np.abs(record.states[:, sl] - entry.exact(record.times)).max())


def sweep(config: ExperimentConfig, dts) -> list:
    """Run ``config`` at each step size; returns ``(dt, record, exact_error)`` rows."""
    rows = []
    for dt in dts:
        rec = run_experiment(config.replace(dt=float(dt), name=f"{config.label}_dt{dt:g}"))
        rows.append((float(dt), rec, exact_error(rec)))
    return rows


def observed_orders(rows):
    """``log2`` of consecutive error ratios for a step-halving sweep."""
    errs = [r[2] for r in rows]
    if any(e is None for e in errs):
        return []
    out = []
    for (dt0, _, e0), (dt1, _, e1) in zip(rows, rows[1:]):
        out.append(math.log(e0 / e1) / math.log(dt0 / dt1) if e1 > 0 and e0 > 0 else math.nan)
    return out
