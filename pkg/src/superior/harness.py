"""Problem files, instance generators and the basic/weak/strong experiment runner.

Problem files are JSON documents; the keys are described in ``docs/SCHEMA.md``.
Trace and summary CSVs render floats with ``.17g`` so equal runs give equal
bytes.
"""

from __future__ import annotations

import csv
from importlib import resources
import io
import json
import math
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .convex_sets import (Ball, Box, ConstraintFamily, ContractViolation, Halfspace, Hyperplane, TAU_DIST)
from .objectives import L1Norm, Constant, Objective, SquaredL2, TV2D
from .string_projection import (DSAPOperator, FixedPlanSequence, PlanSequence, RandomPlanSequence, StringPlan,
                                make_cimmino_plan, make_kaczmarz_plan)
from .superiorize import (PerturbationSchedule, RunTrace, StrongConfig, WeakConfig, basic_run,
                          strong_superiorized_run, weak_superiorized_run)

ARMS = ("basic", "weak", "strong")
TRACE_COLUMNS = ("k", "phi", "prox", "beta_consumed", "forced_steps")
SUMMARY_COLUMNS = ("arm", "K_epsilon", "phi_at_output", "iterations", "wall_ms")
INSTANCE_KINDS = ("consistent-linear", "box-ball", "tomo-toy")


class ProblemParseError(ValueError):
    """The problem file is not valid JSON."""


class ProblemValidationError(ValueError):
    """The problem file parsed but describes an invalid problem."""

    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field


@dataclass
class ProblemSpec:
    dimension: int
    family: ConstraintFamily
    objective: Objective
    x0: np.ndarray
    feasible_point: np.ndarray | None = None
    seed: int | None = None
    name: str | None = None

    @property
    def m(self) -> int:
        return len(self.family)

    def to_dict(self) -> dict:
        d = {}
        if self.name is not None:
            d["name"] = self.name
        d["dimension"] = self.dimension
        d["constraints"] = [s.to_dict() for s in self.family]
        d["objective"] = self.objective.to_dict()
        d["x0"] = self.x0.tolist()
        if self.feasible_point is not None:
            d["feasible_point"] = self.feasible_point.tolist()
        if self.seed is not None:
            d["seed"] = self.seed
        return d

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=1) + "\n"

    def __eq__(self, other) -> bool:
        return isinstance(other, ProblemSpec) and self.to_dict() == other.to_dict()


def _finite_vector(value, name: str, dim: int | None) -> np.ndarray:
    if not isinstance(value, list) or not value:
        raise ProblemValidationError(name, "expected a non-empty list of numbers")
    try:
        v = np.array(value, dtype=float)
    except (TypeError, ValueError):
        raise ProblemValidationError(name, "expected a list of numbers") from None
    if v.ndim != 1:
        raise ProblemValidationError(name, "expected a flat list of numbers")
    if not np.all(np.isfinite(v)):
        raise ProblemValidationError(name, "contains NaN or Inf")
    if dim is not None and v.shape[0] != dim:
        raise ProblemValidationError(name, f"has length {v.shape[0]}, expected {dim}")
    return v


def _finite_number(value, name: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ProblemValidationError(name, "expected a number")
    if not math.isfinite(value):
        raise ProblemValidationError(name, "must be finite")
    return float(value)


def _parse_constraint(d, i: int, dim: int):
    where = f"constraints[{i}]"
    if not isinstance(d, dict) or "type" not in d:
        raise ProblemValidationError(where, "expected an object with a 'type' key")
    kind = d["type"]
    try:
        if kind in ("hyperplane", "halfspace"):
            a = _finite_vector(d.get("a"), f"{where}.a", dim)
            b = _finite_number(d.get("b"), f"{where}.b")
            return Hyperplane(a, b) if kind == "hyperplane" else Halfspace(a, b)
        if kind == "box":
            lo = _finite_vector(d.get("lo"), f"{where}.lo", dim)
            hi = _finite_vector(d.get("hi"), f"{where}.hi", dim)
            return Box(lo, hi)
        if kind == "ball":
            c = _finite_vector(d.get("center"), f"{where}.center", dim)
            r = _finite_number(d.get("radius"), f"{where}.radius")
            return Ball(c, r)
    except ContractViolation as exc:
        raise ProblemValidationError(where, str(exc)) from None
    raise ProblemValidationError(f"{where}.type", f"unknown constraint type {kind!r}")


def _parse_objective(d, dim: int) -> Objective:
    if not isinstance(d, dict) or "type" not in d:
        raise ProblemValidationError("objective", "expected an object with a 'type' key")
    kind = d["type"]
    if kind == "l1":
        return L1Norm(dim)
    if kind == "squared_l2":
        c = d.get("center")
        return SquaredL2(np.zeros(dim) if c is None else _finite_vector(c, "objective.center", dim))
    if kind == "tv2d":
        rows, cols = d.get("rows"), d.get("cols")
        if not (isinstance(rows, int) and isinstance(cols, int) and rows >= 1 and cols >= 1):
            raise ProblemValidationError("objective", "tv2d needs positive integer rows and cols")
        if rows * cols != dim:
            raise ProblemValidationError("objective", f"tv2d image {rows}x{cols} does not match dimension {dim}")
        return TV2D(rows, cols)
    if kind == "constant":
        return Constant(_finite_number(d.get("value", 0.0), "objective.value"), dim)
    raise ProblemValidationError("objective.type", f"unknown objective type {kind!r}")


def problem_from_dict(d: dict) -> ProblemSpec:
    if not isinstance(d, dict):
        raise ProblemValidationError("<root>", "expected a JSON object")
    dim = d.get("dimension")
    if isinstance(dim, bool) or not isinstance(dim, int) or dim < 1:
        raise ProblemValidationError("dimension", "expected a positive integer")
    cons = d.get("constraints")
    if not isinstance(cons, list) or not cons:
        raise ProblemValidationError("constraints", "expected a non-empty list")
    family = ConstraintFamily(_parse_constraint(c, i, dim) for i, c in enumerate(cons))
    objective = _parse_objective(d.get("objective", {"type": "squared_l2"}), dim)
    x0 = np.zeros(dim) if d.get("x0") is None else _finite_vector(d["x0"], "x0", dim)
    fp = None
    if d.get("feasible_point") is not None:
        fp = _finite_vector(d["feasible_point"], "feasible_point", dim)
        dist = family.distances(fp)
        if np.any(dist > TAU_DIST):
            i = int(np.argmax(dist))
            raise ProblemValidationError(
                "feasible_point", f"violates constraints[{i}] by {dist[i]:.3g} (prox {family.proximity(fp):.3g})")
    seed = d.get("seed")
    if seed is not None and (isinstance(seed, bool) or not isinstance(seed, int)):
        raise ProblemValidationError("seed", "expected an integer")
    name = d.get("name")
    return ProblemSpec(dim, family, objective, x0, fp, seed, name)


def _reject_constant(token: str):
    raise ValueError(f"non-finite number {token}")


def loads_problem(text: str) -> ProblemSpec:
    try:
        d = json.loads(text, parse_constant=_reject_constant)
    except json.JSONDecodeError as exc:
        raise ProblemParseError(f"line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    except ValueError as exc:
        raise ProblemValidationError("<number>", str(exc)) from None
    return problem_from_dict(d)


def load_problem(path) -> ProblemSpec:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise OSError(f"cannot read problem file {path}: {exc.strerror}") from exc
    try:
        return loads_problem(text)
    except ProblemParseError as exc:
        raise ProblemParseError(f"{path}: {exc}") from None


def write_problem(spec: ProblemSpec, path) -> None:
    Path(path).write_text(spec.dumps())


def bundled_problems() -> dict:
    """The problem files shipped with the package, keyed by file stem."""
    folder = resources.files("superior") / "problems"
    return {p.name[:-5]: loads_problem(p.read_text()) for p in sorted(folder.iterdir(), key=lambda p: p.name)
            if p.name.endswith(".json")}


def _strip_masks(n: int, m: int) -> list:
    """Indicator vectors of ``m`` strips of an ``n x n`` grid.

    Strips are spread over four directions (rows, columns, diagonals,
    anti-diagonals), each direction cut into contiguous bands of lines.
    """
    ii, jj = np.indices((n, n))
    lines = [(ii, n), (jj, n), (ii + jj, 2 * n - 1), (ii - jj + n - 1, 2 * n - 1)]
    counts = [m // 4 + (1 if d < m % 4 else 0) for d in range(4)]
    masks = []
    for (line, n_lines), c in zip(lines, counts):
        if c > n_lines:
            raise ContractViolation(f"tomo-toy with {n}x{n} pixels cannot hold {m} strips")
        for band in np.array_split(np.arange(n_lines), c) if c else []:
            masks.append(np.isin(line, band).astype(float).ravel())
    return masks


def generate_instance(kind: str, J: int, m: int, seed: int) -> ProblemSpec:
    """Build a seeded desk-scale test problem.

    ``consistent-linear``
        ``m`` random hyperplanes through a planted point; SquaredL2 objective
        centred at the origin; random start.
    ``box-ball``
        the box ``[-1, 1]^J`` and ``m - 1`` balls, all containing a planted
        point; L1 objective; random start.
    ``tomo-toy``
        a ``sqrt(J) x sqrt(J)`` piecewise-constant phantom observed through
        ``m`` strip sums over rows, columns and both diagonals; TV objective;
        zero start.
    """
    if J < 1 or m < 1:
        raise ContractViolation("J and m must be >= 1")
    rng = np.random.default_rng(seed)
    if kind == "consistent-linear":
        A = rng.standard_normal((m, J))
        x_nat = rng.standard_normal(J)
        # row-wise dots match the residual computed by Hyperplane, so prox(x_nat) == 0 exactly
        cons = [Hyperplane(A[i], float(A[i] @ x_nat)) for i in range(m)]
        x0 = 3.0 * rng.standard_normal(J)
        obj = SquaredL2(np.zeros(J))
    elif kind == "box-ball":
        x_nat = rng.uniform(-0.5, 0.5, J)
        cons = [Box(-np.ones(J), np.ones(J))]
        for _ in range(m - 1):
            r = float(rng.uniform(0.5, 1.5))
            u = rng.standard_normal(J)
            u *= rng.uniform(0.0, 0.9) * r / np.linalg.norm(u)
            cons.append(Ball(x_nat + u, r))
        x0 = 3.0 * rng.standard_normal(J)
        obj = L1Norm(J)
    elif kind == "tomo-toy":
        n = math.isqrt(J)
        if n * n != J:
            raise ContractViolation(f"tomo-toy needs a square number of pixels, got J={J}")
        img = np.zeros((n, n))
        for _ in range(2):
            h, w = rng.integers(1, n // 2 + 2, size=2)
            r0, c0 = rng.integers(0, n - h + 1), rng.integers(0, n - w + 1)
            img[r0:r0 + h, c0:c0 + w] += float(rng.integers(1, 4))
        x_nat = img.ravel()
        cons = [Hyperplane(mask, float(mask @ x_nat)) for mask in _strip_masks(n, m)]
        x0 = np.zeros(J)
        obj = TV2D(n, n)
    else:
        raise ContractViolation(f"unknown instance kind {kind!r}; expected one of {INSTANCE_KINDS}")
    family = ConstraintFamily(cons)
    # round-trip through the dict form so a generated spec equals its reloaded file
    spec = ProblemSpec(J, family, obj, x0, x_nat, seed, f"{kind}-J{J}-m{m}-s{seed}")
    return problem_from_dict(json.loads(spec.dumps()))


@dataclass(frozen=True)
class ExperimentConfig:
    """What to run. ``plan`` is ``kaczmarz``, ``cimmino``, ``random`` or a path
    to a strings JSON file; ``random`` uses ``plan_seed``, ``q_bar`` and
    ``delta``. With ``timing=False`` the ``wall_ms`` column is written as 0 so
    the summary is byte-reproducible too."""

    arms: tuple = ARMS
    plan: str = "kaczmarz"
    plan_seed: int = 0
    q_bar: int | None = None
    delta: float | None = None
    eta0: float = 1.0
    decay: float = 0.9
    n_inner: int = 5
    epsilon: float = 1e-6
    max_outer: int = 10000
    max_inner_tries: int = 50
    out: str | None = None
    timing: bool = True

    def __post_init__(self):
        arms = tuple(self.arms)
        if not arms:
            raise ContractViolation("at least one arm is required")
        unknown = set(arms) - set(ARMS)
        if unknown:
            raise ContractViolation(f"unknown arms {sorted(unknown)}")
        object.__setattr__(self, "arms", arms)
        # validate numeric settings through the driver configs
        self.schedule()
        self.strong_config()
        if "weak" in arms:
            self.weak_config()

    def schedule(self) -> PerturbationSchedule:
        return PerturbationSchedule(self.eta0, self.decay)

    def weak_config(self) -> WeakConfig:
        return WeakConfig(self.n_inner, self.schedule(), self.max_outer, tol=self.epsilon)

    def strong_config(self) -> StrongConfig:
        return StrongConfig(self.n_inner, self.schedule(), self.epsilon, self.max_outer, self.max_inner_tries)


def load_plan(path, m: int) -> StringPlan:
    d = json.loads(Path(path).read_text())
    d.setdefault("m", m)
    plan = StringPlan.from_dict(d)
    if plan.m != m:
        raise ContractViolation(f"plan file {path} is for m={plan.m}, problem has m={m}")
    return plan


def make_plans(cfg: ExperimentConfig, m: int) -> PlanSequence:
    if cfg.plan == "kaczmarz":
        return FixedPlanSequence(make_kaczmarz_plan(m, cfg.delta, cfg.q_bar))
    if cfg.plan == "cimmino":
        return FixedPlanSequence(make_cimmino_plan(m, cfg.delta, cfg.q_bar))
    if cfg.plan == "random":
        return RandomPlanSequence(m, cfg.plan_seed, cfg.delta, cfg.q_bar)
    return FixedPlanSequence(load_plan(cfg.plan, m))


def run_arm(spec: ProblemSpec, cfg: ExperimentConfig, arm: str, plans: PlanSequence | None = None,
            keep_iterates: bool = False) -> RunTrace:
    plans = make_plans(cfg, spec.m) if plans is None else plans
    if arm == "basic":
        return basic_run(spec.family, plans, spec.objective, spec.x0, cfg.max_outer, cfg.epsilon, keep_iterates)
    if arm == "weak":
        return weak_superiorized_run(spec.family, plans, spec.objective, cfg.weak_config(), spec.x0, keep_iterates)
    if arm == "strong":
        op = DSAPOperator(spec.family, plans)
        return strong_superiorized_run(spec.family, spec.objective, op, cfg.strong_config(), spec.x0,
                                       keep_iterates=keep_iterates)
    raise ContractViolation(f"unknown arm {arm!r}")


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return format(v, ".17g")
    return str(v)


def trace_csv(trace: RunTrace) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(TRACE_COLUMNS)
    for row in trace.rows():
        w.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def summary_csv(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SUMMARY_COLUMNS)
    for r in rows:
        w.writerow([_fmt(r[c]) for c in SUMMARY_COLUMNS])
    return buf.getvalue()


@dataclass
class ExperimentResult:
    traces: dict
    summary: list
    files: list = field(default_factory=list)

    def row(self, arm: str) -> dict:
        return next(r for r in self.summary if r["arm"] == arm)


def run_experiment(spec: ProblemSpec, cfg: ExperimentConfig, keep_iterates: bool = False) -> ExperimentResult:
    """Run each requested arm and, if ``cfg.out`` is set, write
    ``trace_<arm>.csv`` per arm and ``summary.csv``."""
    traces, summary = {}, []
    for arm in cfg.arms:
        t0 = time.perf_counter()
        trace = run_arm(spec, cfg, arm, keep_iterates=keep_iterates)
        wall_ms = (time.perf_counter() - t0) * 1e3 if cfg.timing else 0
        traces[arm] = trace
        summary.append({
            "arm": arm,
            "K_epsilon": trace.K,
            "phi_at_output": trace.phi_at_output,
            "iterations": len(trace) - 1,
            "wall_ms": round(wall_ms, 3) if cfg.timing else 0,
        })
    result = ExperimentResult(traces, summary)
    if cfg.out is not None:
        out = Path(cfg.out)
        try:
            out.mkdir(parents=True, exist_ok=True)
            for arm, trace in traces.items():
                p = out / f"trace_{arm}.csv"
                p.write_text(trace_csv(trace))
                result.files.append(p)
            p = out / "summary.csv"
            p.write_text(summary_csv(summary))
            result.files.append(p)
        except OSError as exc:
            raise OSError(f"cannot write results to {exc.filename or out}: {exc.strerror}") from exc
    return result
