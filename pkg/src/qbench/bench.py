"""Benchmark scenarios, single-point evaluation, and parameter sweeps.

Three scenarios cover the standard prepare-and-measure benchmarks:

* TwoCoherent: {|alpha>, |-alpha>} parameterized by their overlap;
* ThreeCoherentRing: three coherent states spaced 120 degrees on a ring,
  parameterized by the amplitude;
* SqueezedPair: an x-squeezed and a p-squeezed vacuum, parameterized by the
  squeezing magnitude and the output variances of the first state (the
  second state sees the same noise with the quadratures exchanged, the
  phase-independent device assumption).

Sweeps evaluate a rectangular grid, write one CSV row per point, and render
an SVG figure (heatmap for 2-D grids, bound curves for 1-D slices).
"""

from __future__ import annotations

import csv
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .ensemble import (
    ChannelModel,
    MeasurementRecord,
    ParseError,
    TestEnsemble,
    ingest_records,
    simulate_channel,
)
from .fock import Coherent, SqueezedVacuum
from .sdp import (
    DEFAULT_BACKEND,
    ZERO_THRESHOLD,
    BenchmarkProblem,
    BoundResult,
    SolveStatus,
    SolverConfig,
    solve_hybrid_upper,
    solve_lower_bound,
)

CSV_SCHEMA = "qbench-csv v1"
CSV_COLUMNS = (
    "schema",
    "scenario",
    "N",
    "T",
    "overlap",
    "alpha",
    "r",
    "var_x",
    "var_p",
    "V_ex",
    "lower_bound",
    "lower_status",
    "upper_bound",
    "upper_status",
    "quantum_domain",
)

SCENARIOS = ("TwoCoherent", "ThreeCoherentRing", "SqueezedPair")
DEFAULT_N = {"TwoCoherent": 20, "SqueezedPair": 20, "ThreeCoherentRing": 15}


class RangeError(Exception):
    """A parameter is outside its allowed range; the message names it."""


@dataclass(frozen=True)
class PointSpec:
    """One benchmark evaluation.  Scenario-specific fields stay None when
    unused; V_ex is the symmetric excess noise for the coherent scenarios
    and the squeezed scenario's default when explicit variances are absent."""

    scenario: str
    N: int
    T: float = 1.0
    V_ex: float = 0.0
    overlap: float | None = None
    alpha: float | None = None
    r: float | None = None
    var_x: float | None = None
    var_p: float | None = None

    def __post_init__(self):
        if self.scenario not in SCENARIOS:
            raise RangeError(
                f"unknown scenario {self.scenario!r}, expected one of {SCENARIOS}"
            )
        if self.N < 2:
            raise RangeError(f"N must be >= 2, got {self.N}")
        if not (0 < self.T <= 1):
            raise RangeError(f"T must be in (0, 1], got {self.T}")
        if self.V_ex < 0:
            raise RangeError(f"V_ex must be >= 0, got {self.V_ex}")


def build_point(spec: PointSpec) -> tuple[TestEnsemble, list[MeasurementRecord]]:
    """Ensemble plus simulated records for one parameter point."""
    if spec.scenario == "TwoCoherent":
        if spec.overlap is not None:
            if not (0 < spec.overlap < 1):
                raise RangeError(f"overlap must be in (0, 1), got {spec.overlap}")
            amp = math.sqrt(-math.log(spec.overlap) / 2)
        elif spec.alpha is not None:
            if spec.alpha <= 0:
                raise RangeError(f"alpha must be > 0, got {spec.alpha}")
            amp = spec.alpha
        else:
            raise RangeError("TwoCoherent needs overlap or alpha")
        ensemble = TestEnsemble((Coherent(amp), Coherent(-amp)))
        records = simulate_channel(ensemble, ChannelModel(spec.T, spec.V_ex))
        return ensemble, records
    if spec.scenario == "ThreeCoherentRing":
        if spec.alpha is None or spec.alpha <= 0:
            raise RangeError(f"ThreeCoherentRing needs alpha > 0, got {spec.alpha}")
        omega = complex(math.cos(2 * math.pi / 3), math.sin(2 * math.pi / 3))
        ensemble = TestEnsemble(
            tuple(Coherent(spec.alpha * omega**k) for k in range(3))
        )
        records = simulate_channel(ensemble, ChannelModel(spec.T, spec.V_ex))
        return ensemble, records
    # SqueezedPair
    if spec.r is None or spec.r <= 0:
        raise RangeError(f"SqueezedPair needs r > 0, got {spec.r}")
    short_in = math.exp(-2 * spec.r) / 2
    long_in = math.exp(2 * spec.r) / 2
    vx = spec.var_x if spec.var_x is not None else short_in + spec.V_ex
    vp = spec.var_p if spec.var_p is not None else long_in + spec.V_ex
    if vx < short_in - 1e-12 or vp < long_in - 1e-12:
        raise RangeError(
            f"output variances ({vx}, {vp}) below the input "
            f"({short_in:.6f}, {long_in:.6f}); the device only adds noise"
        )
    ensemble = TestEnsemble((SqueezedVacuum(spec.r, +1), SqueezedVacuum(spec.r, -1)))
    records = [
        MeasurementRecord(0.0, 0.0, vx, vp),
        MeasurementRecord(0.0, 0.0, vp, vx),
    ]
    return ensemble, records


@dataclass(frozen=True)
class PointResult:
    spec: PointSpec
    lower: BoundResult
    upper: BoundResult

    @property
    def quantum_domain(self) -> bool:
        return (
            self.upper.status is SolveStatus.OPTIMAL
            and self.upper.lower_bound > ZERO_THRESHOLD
        )

    @property
    def all_optimal(self) -> bool:
        return (
            self.lower.status is SolveStatus.OPTIMAL
            and self.upper.status is SolveStatus.OPTIMAL
        )


def run_point(
    spec: PointSpec, backend: SolverConfig = DEFAULT_BACKEND
) -> PointResult:
    """Build the ensemble, simulate records, solve both programs."""
    ensemble, records = build_point(spec)
    problem = BenchmarkProblem(spec.N, ensemble, records)
    lower = solve_lower_bound(problem, backend)
    upper = solve_hybrid_upper(problem, backend)
    return PointResult(spec=spec, lower=lower, upper=upper)


def run_ingested(
    path, N: int, T: float = 1.0, backend: SolverConfig = DEFAULT_BACKEND
) -> PointResult:
    """Solve both programs on records read from a measurement-data file."""
    ensemble, records = ingest_records(path)
    problem = BenchmarkProblem(N, ensemble, records)
    lower = solve_lower_bound(problem, backend)
    upper = solve_hybrid_upper(problem, backend)
    d = ensemble.d
    scenario = "ThreeCoherentRing" if d == 3 else (
        "SqueezedPair"
        if isinstance(ensemble.states[0], SqueezedVacuum)
        else "TwoCoherent"
    )
    spec = PointSpec(scenario=scenario, N=N, T=T)
    return PointResult(spec=spec, lower=lower, upper=upper)


@dataclass(frozen=True)
class AxisSpec:
    """One sweep axis: `steps` evenly spaced values from lo to hi."""

    name: str
    lo: float
    hi: float
    steps: int

    def __post_init__(self):
        if self.steps < 1:
            raise RangeError(f"{self.name}: steps must be >= 1, got {self.steps}")
        if self.hi < self.lo:
            raise RangeError(f"{self.name}: hi {self.hi} below lo {self.lo}")

    def values(self) -> np.ndarray:
        if self.steps == 1:
            return np.array([self.lo])
        return np.linspace(self.lo, self.hi, self.steps)


@dataclass(frozen=True)
class SweepSpec:
    """Grid sweep over two scenario axes with fixed T, N, and output paths."""

    scenario: str
    axis1: AxisSpec
    axis2: AxisSpec
    N: int
    T: float = 1.0
    r: float = 0.35
    out: str = "sweep"

    def __post_init__(self):
        if self.scenario not in SCENARIOS:
            raise RangeError(
                f"unknown scenario {self.scenario!r}, expected one of {SCENARIOS}"
            )
        if self.N < 2:
            raise RangeError(f"N must be >= 2, got {self.N}")
        if not (0 < self.T <= 1):
            raise RangeError(f"T must be in (0, 1], got {self.T}")

    def point_specs(self) -> list[PointSpec]:
        """Row-major grid order: axis1 outer, axis2 inner."""
        pts = []
        for a in self.axis1.values():
            for b in self.axis2.values():
                pts.append(_grid_point(self, float(a), float(b)))
        return pts


def default_sweep(scenario: str, out: str = "sweep") -> SweepSpec:
    """Out-of-the-box grids mirroring the published figure axes."""
    if scenario == "TwoCoherent":
        return SweepSpec(
            scenario,
            AxisSpec("overlap", 0.05, 0.95, 7),
            AxisSpec("var", 0.5, 1.5, 5),
            N=DEFAULT_N[scenario],
            out=out,
        )
    if scenario == "ThreeCoherentRing":
        return SweepSpec(
            scenario,
            AxisSpec("alpha", 0.1, 0.5, 3),
            AxisSpec("var", 0.5, 1.5, 3),
            N=DEFAULT_N[scenario],
            out=out,
        )
    if scenario == "SqueezedPair":
        return SweepSpec(
            scenario,
            AxisSpec("var_x", 0.26, 0.4, 5),
            AxisSpec("var_p", 1.01, 1.25, 5),
            N=DEFAULT_N[scenario],
            out=out,
        )
    raise RangeError(f"unknown scenario {scenario!r}, expected one of {SCENARIOS}")


def _grid_point(spec: SweepSpec, a: float, b: float) -> PointSpec:
    """Translate axis values to a PointSpec; variance axes are the symmetric
    output variance, so excess noise is variance minus the vacuum 1/2."""
    if spec.scenario == "TwoCoherent":
        if b < 0.5:
            raise RangeError(f"var: output variance {b} below the vacuum 1/2")
        return PointSpec(
            spec.scenario, N=spec.N, T=spec.T, overlap=a, V_ex=b - 0.5
        )
    if spec.scenario == "ThreeCoherentRing":
        if b < 0.5:
            raise RangeError(f"var: output variance {b} below the vacuum 1/2")
        return PointSpec(spec.scenario, N=spec.N, T=spec.T, alpha=a, V_ex=b - 0.5)
    return PointSpec(
        spec.scenario, N=spec.N, T=spec.T, r=spec.r, var_x=a, var_p=b
    )


def _eval_point(args) -> dict:
    spec, backend = args
    try:
        result = run_point(spec, backend)
        return _result_row(result)
    except Exception as exc:  # row-level failure, sweep continues
        row = _spec_row(spec)
        row.update(
            lower_bound="nan",
            lower_status=f"Error: {exc}",
            upper_bound="nan",
            upper_status=f"Error: {exc}",
            quantum_domain="false",
        )
        return row


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _spec_row(spec: PointSpec) -> dict:
    return {
        "schema": CSV_SCHEMA,
        "scenario": spec.scenario,
        "N": str(spec.N),
        "T": _fmt(spec.T),
        "overlap": _fmt(spec.overlap),
        "alpha": _fmt(spec.alpha),
        "r": _fmt(spec.r),
        "var_x": _fmt(spec.var_x),
        "var_p": _fmt(spec.var_p),
        "V_ex": _fmt(spec.V_ex),
    }


def _result_row(result: PointResult) -> dict:
    row = _spec_row(result.spec)
    row.update(
        lower_bound=_fmt(result.lower.lower_bound),
        lower_status=result.lower.status.value,
        upper_bound=_fmt(result.upper.lower_bound),
        upper_status=result.upper.status.value,
        quantum_domain="true" if result.quantum_domain else "false",
    )
    return row


def run_sweep(
    spec: SweepSpec, jobs: int = 1, backend: SolverConfig = DEFAULT_BACKEND
) -> list[dict]:
    """Evaluate the grid, write <out>.csv and <out>.svg, return the rows.

    Rows keep grid order (axis1 outer, axis2 inner) whatever the completion
    order; individual solver failures land in the row status so partial
    results always flush.
    """
    points = spec.point_specs()
    tasks = [(p, backend) for p in points]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(_eval_point, tasks))
    else:
        rows = [_eval_point(t) for t in tasks]
    write_sweep_csv(f"{spec.out}.csv", rows)
    render_sweep_svg(f"{spec.out}.svg", spec, rows)
    return rows


def write_sweep_csv(path, rows: list[dict]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=CSV_COLUMNS)
        writer.writeheader()
        for row in rows:
            writer.writerow(row)


def _bound_grid(rows: list[dict], key: str, shape: tuple[int, int]) -> np.ndarray:
    vals = []
    for row in rows:
        try:
            vals.append(float(row[key]))
        except ValueError:
            vals.append(math.nan)
    return np.array(vals).reshape(shape)


def render_sweep_svg(path, spec: SweepSpec, rows: list[dict]) -> None:
    """Deterministic SVG: heatmap plus level curves for a 2-D grid, bound
    curves for a 1-D slice, labeled markers for a single point.  The
    variance axis is inverted for the coherent-state scenarios to match the
    usual presentation."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    plt.rcParams["svg.hashsalt"] = "qbench"
    a_vals = spec.axis1.values()
    b_vals = spec.axis2.values()
    shape = (spec.axis1.steps, spec.axis2.steps)
    lower = _bound_grid(rows, "lower_bound", shape)
    upper = _bound_grid(rows, "upper_bound", shape)

    fig, ax = plt.subplots(figsize=(5.0, 3.8))
    try:
        if spec.axis1.steps > 1 and spec.axis2.steps > 1:
            mesh = ax.pcolormesh(
                a_vals, b_vals, lower.T, shading="nearest", cmap="viridis"
            )
            finite = np.isfinite(lower)
            if finite.any() and lower[finite].max() > ZERO_THRESHOLD:
                levels = np.linspace(ZERO_THRESHOLD, lower[finite].max(), 6)
                ax.contour(
                    a_vals, b_vals, lower.T, levels=levels, colors="white",
                    linewidths=0.7,
                )
            fig.colorbar(mesh, ax=ax, label="negativity lower bound")
            ax.set_xlabel(spec.axis1.name)
            ax.set_ylabel(spec.axis2.name)
            if spec.scenario in ("TwoCoherent", "ThreeCoherentRing"):
                ax.invert_yaxis()
        else:
            axis = spec.axis2 if spec.axis2.steps > 1 else spec.axis1
            x = axis.values()
            lo = lower.ravel()
            up = upper.ravel()
            ax.plot(x, lo, "o-", label="lower bound")
            ax.plot(x, up, "s--", label="hybrid upper bound")
            ax.set_xlabel(axis.name)
            ax.set_ylabel("negativity")
            ax.legend()
        ax.set_title(f"{spec.scenario}  N={spec.N}  T={spec.T}")
        fig.tight_layout()
        fig.savefig(path, format="svg", metadata={"Date": None})
    finally:
        plt.close(fig)


_CONFIG_KEYS = {
    "scenario",
    "N",
    "T",
    "r",
    "out",
    "overlap",
    "var",
    "alpha",
    "var_x",
    "var_p",
}
_AXIS_KEYS = {
    "TwoCoherent": ("overlap", "var"),
    "ThreeCoherentRing": ("alpha", "var"),
    "SqueezedPair": ("var_x", "var_p"),
}


def _parse_axis(key: str, text: str, lineno: int) -> AxisSpec:
    parts = text.replace(":", " ").split()
    try:
        if len(parts) == 1:
            v = float(parts[0])
            return AxisSpec(key, v, v, 1)
        if len(parts) == 3:
            return AxisSpec(key, float(parts[0]), float(parts[1]), int(parts[2]))
    except ValueError:
        pass
    raise ParseError(
        f"{key}: expected 'value' or 'lo:hi:steps', got {text!r}", lineno
    )


def parse_config(path) -> SweepSpec:
    """Plain-text key-value sweep configuration.

    One `key = value` pair per line; '#' comments.  Keys: scenario
    (required), N, T, r, out, and two axis keys per scenario (TwoCoherent:
    overlap, var; ThreeCoherentRing: alpha, var; SqueezedPair: var_x,
    var_p), each either a single value or lo:hi:steps.  Omitted keys take
    the documented defaults (N: 20 for the two-state scenarios, 15 for the
    ring)."""
    entries: dict[str, tuple[str, int]] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            body = raw.split("#", 1)[0].strip()
            if not body:
                continue
            if "=" not in body:
                raise ParseError(f"expected 'key = value', got {body!r}", lineno)
            key, _, value = body.partition("=")
            key = key.strip()
            value = value.strip()
            if key not in _CONFIG_KEYS:
                raise ParseError(
                    f"unknown key {key!r} (known: {sorted(_CONFIG_KEYS)})", lineno
                )
            if not value:
                raise ParseError(f"{key}: empty value", lineno)
            entries[key] = (value, lineno)
    if "scenario" not in entries:
        raise ParseError(f"missing 'scenario' (one of {SCENARIOS})", 1)
    scenario, lineno = entries.pop("scenario")
    if scenario not in SCENARIOS:
        raise ParseError(
            f"unknown scenario {scenario!r}, valid names: {', '.join(SCENARIOS)}",
            lineno,
        )
    base = default_sweep(scenario)
    kwargs: dict = {}
    for key, caster in (("N", int), ("T", float), ("r", float)):
        if key in entries:
            text, lineno = entries.pop(key)
            try:
                kwargs[key] = caster(text)
            except ValueError:
                raise ParseError(f"{key}: expected a number, got {text!r}", lineno)
    if "out" in entries:
        kwargs["out"], _ = entries.pop("out")
    ax1_key, ax2_key = _AXIS_KEYS[scenario]
    axes = {"axis1": base.axis1, "axis2": base.axis2}
    for slot, key in (("axis1", ax1_key), ("axis2", ax2_key)):
        if key in entries:
            text, lineno = entries.pop(key)
            axes[slot] = _parse_axis(key, text, lineno)
    for key, (_, lineno) in entries.items():
        raise ParseError(f"key {key!r} does not apply to scenario {scenario}", lineno)
    return replace(base, axis1=axes["axis1"], axis2=axes["axis2"], **kwargs)
