"""Run configurations, solver dispatch, sweeps and CSV artifacts."""
from __future__ import annotations

import csv
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import analytic, reference
from .bvp import BVP_FEAS_TOL, GridSpec, solve_bvp
from .errors import ConfigError, ParameterError
from .model import (
    DEFAULT_INTERVALS,
    PARAMETER_NAMES,
    TOL_FEAS,
    ModelInstance,
    Trajectory,
    dynamics_residual,
    profit_of_trajectory,
    table1_instance,
    uniform_grid,
)
from .transcription import X_FEAS_TOL, TranscriptionSettings, optimize

logger = logging.getLogger(__name__)

SOLVERS = ("analytic-1a", "analytic-1b", "bvp", "transcription")

# sign tolerance per solver: closed forms are exact, the others carry
# discretisation and penalty error
_FEAS_TOL = {"analytic-1a": TOL_FEAS, "analytic-1b": TOL_FEAS,
             "bvp": BVP_FEAS_TOL, "transcription": X_FEAS_TOL}

# sign constraints checked per key so errors can point at the line
_POSITIVE = {"beta10", "gamma", "T", "a"}
_NON_NEGATIVE = {"L", "N", "c10", "p", "s1", "s2", "n", "b1"}
_OPTIONAL = {"solver", "grid", "sweep"}


@dataclass(frozen=True)
class SweepSpec:
    param: str
    start: float
    stop: float
    step: float

    def __post_init__(self):
        if self.param not in PARAMETER_NAMES:
            raise ConfigError(f"unknown sweep parameter {self.param!r}")
        if not self.step > 0:
            raise ConfigError("sweep step must be > 0")
        if self.start > self.stop:
            raise ConfigError("sweep start must not exceed stop")

    def values(self) -> list[float]:
        count = int(math.floor((self.stop - self.start) / self.step + 1e-9)) + 1
        return [round(self.start + i * self.step, 12) for i in range(count)]


@dataclass(frozen=True)
class RunConfig:
    model: ModelInstance
    solver: str | None = None
    grid: int = DEFAULT_INTERVALS
    sweep: SweepSpec | None = None

    def __post_init__(self):
        if self.solver is not None:
            check_solver(self.solver, self.model)
        if self.grid < 8 or self.grid % 2:
            raise ConfigError(f"grid must be an even number of intervals >= 8, got {self.grid}")

    @property
    def resolved_solver(self) -> str:
        return self.solver or default_solver(self.model)


def default_solver(model: ModelInstance) -> str:
    if model.breakage.gamma == 1.0 and model.holding.n == 1.0:
        return "analytic-1b" if model.breakage.b1 == 0.0 else "analytic-1a"
    return "bvp"


def check_solver(solver: str, model: ModelInstance) -> None:
    if solver not in SOLVERS:
        raise ConfigError(f"unknown solver {solver!r}; choose from {', '.join(SOLVERS)}")
    b1, gamma, n = model.breakage.b1, model.breakage.gamma, model.holding.n
    if solver == "analytic-1a" and not (gamma == 1.0 and n == 1.0 and b1 > 0):
        raise ConfigError("analytic-1a requires gamma = 1, n = 1 and b1 > 0")
    if solver == "analytic-1b" and not (b1 == 0.0 and n == 1.0):
        raise ConfigError("analytic-1b requires b1 = 0 and n = 1")


def parse_config(text: str) -> RunConfig:
    """Parse ``key = value`` lines (``#`` starts a comment) into a :class:`RunConfig`.

    All sixteen model keys are required.  Optional keys: ``solver``, ``grid``
    and ``sweep = <param> <start> <stop> <step>``.
    """
    values: dict[str, float] = {}
    lines: dict[str, int] = {}
    extra: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw.strip()!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if key in lines or key in extra:
            raise ConfigError(f"line {lineno}: duplicate key {key}")
        if key in _OPTIONAL:
            extra[key] = value
            lines[key] = lineno
            continue
        if key not in PARAMETER_NAMES:
            raise ConfigError(f"line {lineno}: unknown key {key}")
        try:
            number = float(value)
        except ValueError:
            raise ConfigError(f"line {lineno}: {key} is not numeric: {value!r}") from None
        if not math.isfinite(number):
            raise ConfigError(f"line {lineno}: {key} must be finite")
        if key in _POSITIVE and number <= 0:
            raise ConfigError(f"line {lineno}: {key} must be > 0, got {number:g}")
        if key in _NON_NEGATIVE and number < 0:
            raise ConfigError(f"line {lineno}: {key} must be >= 0, got {number:g}")
        values[key] = number
        lines[key] = lineno

    for key in PARAMETER_NAMES:
        if key not in values:
            raise ConfigError(f"missing key: {key}")
    try:
        model = ModelInstance.from_flat(values)
    except ParameterError as exc:
        raise ConfigError(f"invalid model: {exc}") from exc

    kwargs: dict = {}
    if "solver" in extra:
        kwargs["solver"] = extra["solver"]
    if "grid" in extra:
        try:
            kwargs["grid"] = int(extra["grid"])
        except ValueError:
            raise ConfigError(f"line {lines['grid']}: grid is not an integer") from None
    if "sweep" in extra:
        parts = extra["sweep"].split()
        if len(parts) != 4:
            raise ConfigError(f"line {lines['sweep']}: sweep needs '<param> <start> <stop> <step>'")
        try:
            kwargs["sweep"] = SweepSpec(parts[0], *map(float, parts[1:]))
        except ValueError:
            raise ConfigError(f"line {lines['sweep']}: sweep bounds must be numeric") from None
    return RunConfig(model, **kwargs)


def load_config(path) -> RunConfig:
    return parse_config(Path(path).read_text(encoding="utf-8"))


def format_config(config: RunConfig) -> str:
    flat = config.model.to_flat()
    lines = [f"{key} = {flat[key]!r}" for key in PARAMETER_NAMES]
    if config.solver:
        lines.append(f"solver = {config.solver}")
    lines.append(f"grid = {config.grid}")
    return "\n".join(lines) + "\n"


def table1_config(b1: float = 0.02, solver: str | None = None) -> RunConfig:
    return RunConfig(table1_instance(b1), solver=solver)


# -- solving -------------------------------------------------------------------

def report_times(T: float) -> np.ndarray:
    """Integer times 0, 1, ..., plus T itself when T is not an integer."""
    times = np.arange(0.0, math.floor(T) + 1.0)
    if times[-1] < T:
        times = np.append(times, T)
    return times


def residual_bound(traj: Trajectory) -> float:
    """Discretisation bound for :func:`dynamics_residual` on a grid of step h.

    Every solver here is second order, so the mismatch scales like h**2 times
    the size of the rates involved.
    """
    h = float(np.max(np.diff(traj.times)))
    return h * h * (1.0 + float(np.max(np.abs(traj.u))))


@dataclass
class SolveResult:
    solver: str
    model: ModelInstance
    trajectory: Trajectory
    report: Trajectory
    profit: float
    converged: bool
    feasible: bool
    max_dynamics_residual: float
    diagnostics: dict = field(default_factory=dict)

    @property
    def dynamics_ok(self) -> bool:
        return self.max_dynamics_residual <= residual_bound(self.trajectory)

    @property
    def ok(self) -> bool:
        return self.converged and self.feasible and self.dynamics_ok

    def summary(self) -> dict:
        out = {
            "solver": self.solver,
            "profit": f"{self.profit:.6f}",
            "converged": str(self.converged).lower(),
            "feasible": str(self.feasible).lower(),
            "max_dynamics_residual": f"{self.max_dynamics_residual:.6e}",
            "dynamics_bound": f"{residual_bound(self.trajectory):.6e}",
        }
        out.update({k: str(v) for k, v in self.diagnostics.items()})
        return out


def solve(config: RunConfig) -> SolveResult:
    """Run the configured solver and sample the result at the report times."""
    model, solver = config.model, config.resolved_solver
    check_solver(solver, model)
    grid = uniform_grid(model.T, config.grid)
    times = report_times(model.T)
    diagnostics: dict = {"grid": config.grid}
    if solver == "analytic-1a":
        traj = analytic.trajectory_1a(model, grid)
        report = analytic.trajectory_1a(model, times)
        profit = analytic.profit_1a(analytic.coefficients_1a(model), model)
        converged = True
    elif solver == "analytic-1b":
        traj = analytic.trajectory_1b(model, grid)
        report = analytic.trajectory_1b(model, times)
        profit = analytic.profit_1b(analytic.coefficients_1b(model), model)
        converged = True
    elif solver == "bvp":
        sol = solve_bvp(model, GridSpec(model.T, config.grid))
        traj = sol.trajectory
        report = traj.sample(times)
        profit = profit_of_trajectory(model, traj)
        converged = sol.converged
        diagnostics.update(iterations=sol.iterations, final_residual=f"{sol.final_residual:.3e}",
                           regularized=str(sol.regularized).lower())
    else:
        rep = optimize(model, TranscriptionSettings(intervals=config.grid))
        traj = rep.trajectory
        report = traj.sample(times)
        profit = rep.profit
        converged = rep.converged
        diagnostics.update(iterations=rep.iterations,
                           terminal_violation=f"{rep.terminal_violation:.3e}",
                           projected_gradient_norm=f"{rep.projected_gradient_norm:.3e}")
    feasible = traj.is_feasible(_FEAS_TOL[solver])
    residual = dynamics_residual(model, _clip_negative(traj))
    return SolveResult(solver, model, traj, report, profit, converged, feasible, residual, diagnostics)


def _clip_negative(traj: Trajectory) -> Trajectory:
    # dynamics_residual rejects negative stock; feasibility is reported separately
    return Trajectory(traj.times, np.maximum(traj.x, 0.0), traj.u, traj.d)


# -- CSV artifacts --------------------------------------------------------------

def write_trajectory_csv(path, traj: Trajectory) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t", "u", "x", "d"])
        for row in zip(traj.times, traj.u, traj.x, traj.d):
            writer.writerow([f"{v:.6f}" for v in row])


def read_trajectory_csv(path) -> Trajectory:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header != ["t", "u", "x", "d"]:
            raise ValueError(f"unexpected trajectory header {header}")
        rows = np.array([[float(v) for v in row] for row in reader])
    return Trajectory(rows[:, 0], rows[:, 2], rows[:, 1], rows[:, 3])


def write_summary_csv(path, summary: dict) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["key", "value"])
        writer.writerows(summary.items())


def summary_path(out: Path) -> Path:
    return out.with_name(out.stem + "_summary.csv")


def grid_path(out: Path) -> Path:
    return out.with_name(out.stem + "_grid.csv")


def run(config: RunConfig, out, full_grid: bool = False) -> tuple[SolveResult, int]:
    """Solve, write the report CSV and summary next to ``out``; return the exit status."""
    result = solve(config)
    if not result.dynamics_ok:
        logger.error("dynamics residual %.3e exceeds bound %.3e",
                     result.max_dynamics_residual, residual_bound(result.trajectory))
    out = Path(out)
    write_trajectory_csv(out, result.report)
    write_summary_csv(summary_path(out), result.summary())
    if full_grid:
        write_trajectory_csv(grid_path(out), result.trajectory)
    return result, 0 if result.ok else 1


@dataclass(frozen=True)
class SweepRow:
    value: float
    profit: float
    ok: bool


def sweep(config: RunConfig, spec: SweepSpec | None = None, workers: int | None = None) -> list[SweepRow]:
    """Profit for each value of one scalar model parameter, ordered by value."""
    spec = spec or config.sweep
    if spec is None:
        raise ConfigError("no sweep block configured")

    def point(value: float) -> SweepRow:
        model = config.model.with_params(**{spec.param: value})
        result = solve(replace(config, model=model))
        return SweepRow(value, result.profit, result.ok)

    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(point, spec.values()))


def write_sweep_csv(path, param: str, rows: list[SweepRow]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow([param, "profit"])
        for row in rows:
            writer.writerow([f"{row.value:.6f}", f"{row.profit:.6f}"])


def compare(config_a: RunConfig, config_b: RunConfig) -> tuple[list[list[float]], bool]:
    """Paired stock and production samples (t, x_A, x_B, u_A, u_B) at report times."""
    if config_a.model.T != config_b.model.T or config_a.grid != config_b.grid:
        raise ConfigError("compared configurations must share T and grid")
    res_a, res_b = solve(config_a), solve(config_b)
    rows = [[t, xa, xb, ua, ub] for t, xa, xb, ua, ub in zip(
        res_a.report.times, res_a.report.x, res_b.report.x, res_a.report.u, res_b.report.u)]
    return rows, res_a.ok and res_b.ok


def write_compare_csv(path_or_file, rows) -> None:
    own = not hasattr(path_or_file, "write")
    fh = open(path_or_file, "w", newline="", encoding="utf-8") if own else path_or_file
    try:
        writer = csv.writer(fh)
        writer.writerow(["t", "x_A", "x_B", "u_A", "u_B"])
        for row in rows:
            writer.writerow([f"{v:.6f}" for v in row])
    finally:
        if own:
            fh.close()


# -- reproduction of the reference tables ----------------------------------------

@dataclass(frozen=True)
class Check:
    name: str
    expected: float
    actual: float
    tolerance: float
    relative: bool = False

    @property
    def passed(self) -> bool:
        if self.relative:
            return abs(self.actual - self.expected) <= self.tolerance * abs(self.expected)
        return abs(self.actual - self.expected) <= self.tolerance

    def line(self) -> str:
        kind = "rel" if self.relative else "abs"
        dev = (self.actual - self.expected) / self.expected if self.relative else self.actual - self.expected
        return (f"{'PASS' if self.passed else 'FAIL'}  {self.name:<10} expected {self.expected:>12.2f}  "
                f"got {self.actual:>12.4f}  dev {dev:+.4g} ({kind} tol {self.tolerance:g})")


def reproduce_table(table: int, grid: int = DEFAULT_INTERVALS) -> tuple[list[Check], SolveResult | list[SweepRow]]:
    """Recompute one reference table and compare cell by cell."""
    checks: list[Check] = []
    if table == 5:
        values = reference.SWEEP_B1
        spec = SweepSpec("b1", values[0], values[-1], round(values[1] - values[0], 12))
        rows = sweep(RunConfig(table1_instance(values[0]), "analytic-1a", grid), spec)
        for row, expected in zip(rows, reference.SWEEP_PROFIT):
            checks.append(Check(f"J(b1={row.value:g})", expected, row.profit,
                                reference.PROFIT_RTOL, relative=True))
        return checks, rows
    if table not in reference.CASES:
        raise ConfigError(f"no reference table {table}; choose 2, 3, 4 or 5")
    case = reference.CASES[table]
    result = solve(RunConfig(table1_instance(case["b1"]), case["solver"], grid))
    for i, t in enumerate(reference.TIMES):
        for name in ("u", "x"):
            expected = case[name][i]
            if expected is None:
                continue
            actual = float(getattr(result.report, name)[i])
            checks.append(Check(f"{name}({t})", expected, actual, reference.TRAJECTORY_ATOL))
    checks.append(Check("profit", case["profit"], result.profit, reference.PROFIT_RTOL, relative=True))
    return checks, result
