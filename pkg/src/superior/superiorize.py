"""Weak and strong superiorization drivers.

Both drivers interleave perturbation steps, which lower an objective, with
the steps of a feasibility-seeking operator. Step sizes come from one
geometric schedule ``eta_l = eta0 * decay**l`` consumed in order, so the total
perturbation never exceeds ``eta0 / (1 - decay)``.

* :func:`weak_superiorized_run` moves along negative normalized subgradients
  with no acceptance test, then applies a DSAP step.
* :func:`strong_superiorized_run` moves along a nonascending direction and
  accepts a trial point only if the objective does not exceed its value at the
  start of the outer iteration. Every trial advances the schedule.

Runs return a :class:`RunTrace` holding the per-iteration record.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from .convex_sets import ConstraintFamily, ContractViolation, TAU_DIST, as_vector
from .objectives import Objective, negative_normalized_subgradient
from .string_projection import as_plan_sequence, basic_algorithm, dsap_apply

EPSILON_OUTPUT = "epsilon_output"
BUDGET_EXHAUSTED = "budget_exhausted"


@dataclass(frozen=True)
class PerturbationSchedule:
    """Geometric step sizes ``eta0 * decay**l`` for ``l = 0, 1, 2, ...``.

    ``eta0 = 0`` gives the null schedule (no perturbation at all).
    """

    eta0: float = 1.0
    decay: float = 0.9

    def __post_init__(self):
        if not (math.isfinite(self.eta0) and self.eta0 >= 0.0):
            raise ContractViolation(f"eta0 must be finite and >= 0, got {self.eta0}")
        if not 0.0 < self.decay < 1.0:
            raise ContractViolation(f"decay must lie in (0, 1), got {self.decay}")

    def value(self, l: int) -> float:
        return self.eta0 * self.decay ** l

    @property
    def total(self) -> float:
        """Sum of the whole schedule."""
        return self.eta0 / (1.0 - self.decay)


@dataclass(frozen=True)
class WeakConfig:
    """Settings of the weak driver.

    ``n_inner`` is the cap N; ``n_policy(k)`` may pick any N_k in ``1..N``
    (constant N by default). ``tol`` stops the run at the first iterate with
    proximity ``<= tol``; ``None`` runs all ``max_outer`` iterations.
    """

    n_inner: int = 5
    schedule: PerturbationSchedule = field(default_factory=PerturbationSchedule)
    max_outer: int = 10000
    tol: float | None = None
    n_policy: Callable[[int], int] | None = None

    def __post_init__(self):
        if self.n_inner < 1:
            raise ContractViolation("n_inner must be >= 1")
        if self.max_outer < 0:
            raise ContractViolation("max_outer must be >= 0")
        if self.schedule.eta0 > 1.0:
            raise ContractViolation("weak driver needs step sizes <= 1 (eta0 <= 1)")
        if self.tol is not None and not self.tol > 0:
            raise ContractViolation("tol must be positive")

    def inner_steps(self, k: int) -> int:
        if self.n_policy is None:
            return self.n_inner
        nk = int(self.n_policy(k))
        if not 1 <= nk <= self.n_inner:
            raise ContractViolation(f"N_k={nk} outside 1..{self.n_inner} at k={k}")
        return nk


@dataclass(frozen=True)
class StrongConfig:
    n_inner: int = 5
    schedule: PerturbationSchedule = field(default_factory=PerturbationSchedule)
    epsilon: float = 1e-6
    max_outer: int = 10000
    max_inner_tries: int = 50

    def __post_init__(self):
        if self.n_inner < 1:
            raise ContractViolation("n_inner must be >= 1")
        if not self.epsilon > 0:
            raise ContractViolation("epsilon must be > 0")
        if self.max_outer < 0:
            raise ContractViolation("max_outer must be >= 0")
        if self.max_inner_tries < 1:
            raise ContractViolation("max_inner_tries must be >= 1")


@dataclass
class RunTrace:
    """Per-iteration record of a run.

    Row ``k`` describes the outer iterate ``y^k``. ``beta_consumed[k]`` is the
    schedule mass drawn before ``y^k`` was produced and ``forced[k]`` the
    number of forced zero steps in the inner loop that produced it.
    ``inner_betas[k]`` lists the step sizes applied to ``y^k`` on the way to
    ``y^{k+1}``.
    """

    arm: str
    phi: list = field(default_factory=list)
    prox: list = field(default_factory=list)
    beta_consumed: list = field(default_factory=list)
    forced: list = field(default_factory=list)
    iterates: list = field(default_factory=list)
    inner_betas: list = field(default_factory=list)
    plan_ids: list = field(default_factory=list)
    # strong driver: phi(y^k) and phi(y^{k,N}) of each outer iteration,
    # and phi(z) at every accepted trial
    phi_start: list = field(default_factory=list)
    phi_inner_end: list = field(default_factory=list)
    accepted_phi: list = field(default_factory=list)
    status: str = BUDGET_EXHAUSTED
    K: int | None = None
    keep_iterates: bool = True
    _last: np.ndarray | None = None

    def record(self, y: np.ndarray, phi: float, prox: float, consumed: float, forced: int = 0) -> None:
        self.phi.append(phi)
        self.prox.append(prox)
        self.beta_consumed.append(consumed)
        self.forced.append(forced)
        if self.keep_iterates:
            self.iterates.append(y)
        self._last = y

    def __len__(self) -> int:
        return len(self.phi)

    @property
    def final(self) -> np.ndarray:
        return self._last

    @property
    def output(self) -> np.ndarray | None:
        """The epsilon-output iterate, if one was reached and kept."""
        if self.K is None:
            return None
        if self.keep_iterates:
            return self.iterates[self.K]
        if self.K == len(self) - 1:
            return self._last
        return None

    @property
    def phi_at_output(self) -> float | None:
        return None if self.K is None else self.phi[self.K]

    def rows(self) -> Iterable[tuple]:
        for k in range(len(self)):
            yield k, self.phi[k], self.prox[k], self.beta_consumed[k], self.forced[k]


def _init(family: ConstraintFamily, obj: Objective, y0) -> np.ndarray:
    y = as_vector(y0, "y0")
    if y.shape[0] != family.dim:
        raise ContractViolation(f"dimension mismatch: family is R^{family.dim}, y0 has length {y.shape[0]}")
    if obj.dim is not None and obj.dim != family.dim:
        raise ContractViolation(f"objective lives in R^{obj.dim}, family in R^{family.dim}")
    return y.copy()


def basic_run(family: ConstraintFamily, plans, obj: Objective, y0, max_outer: int,
              tol: float | None = None, keep_iterates: bool = True) -> RunTrace:
    """Trace the unperturbed DSAP iteration, stopping at proximity ``<= tol``."""
    y0 = _init(family, obj, y0)
    plans = as_plan_sequence(plans)
    trace = RunTrace("basic", keep_iterates=keep_iterates)
    for k, x in enumerate(basic_algorithm(family, plans, y0, max_outer)):
        p = family.proximity(x)
        trace.record(x, obj.evaluate(x), p, 0.0)
        if tol is not None and p <= tol:
            trace.status, trace.K = EPSILON_OUTPUT, k
            break
        if k < max_outer:
            trace.inner_betas.append([])
            trace.plan_ids.append(plans.plan_id(k))
    return trace


def weak_superiorized_run(family: ConstraintFamily, plans, obj: Objective, cfg: WeakConfig, y0,
                          keep_iterates: bool = True) -> RunTrace:
    """Superiorized DSAP with subgradient perturbations and no acceptance test."""
    y = _init(family, obj, y0)
    plans = as_plan_sequence(plans)
    if plans.m != len(family):
        raise ContractViolation(f"plans built for m={plans.m}, family has m={len(family)}")
    sched = cfg.schedule
    trace = RunTrace("weak", keep_iterates=keep_iterates)
    ell = -1
    consumed = 0.0
    trace.record(y, obj.evaluate(y), family.proximity(y), consumed)
    for k in range(cfg.max_outer + 1):
        if cfg.tol is not None and trace.prox[-1] <= cfg.tol:
            trace.status, trace.K = EPSILON_OUTPUT, k
            break
        if k == cfg.max_outer:
            break
        betas = []
        for _ in range(cfg.inner_steps(k)):
            ell += 1
            beta = sched.value(ell)
            consumed += beta
            v = negative_normalized_subgradient(obj, y)
            y = y + beta * v
            betas.append(beta)
        trace.inner_betas.append(betas)
        trace.plan_ids.append(plans.plan_id(k))
        y = dsap_apply(family, plans.plan(k), y)
        trace.record(y, obj.evaluate(y), family.proximity(y), consumed)
    return trace


Direction = Callable[[Objective, np.ndarray], np.ndarray]


def strong_superiorized_run(family: ConstraintFamily, obj: Objective, operator: Callable[[np.ndarray], np.ndarray],
                            cfg: StrongConfig, y0, direction: Direction = negative_normalized_subgradient,
                            keep_iterates: bool = True) -> RunTrace:
    """Superiorized version of ``operator`` with a nonascending-direction inner loop.

    ``operator`` is any map ``x -> A(x)``; if it has a ``reset`` method it is
    called first, and a ``last_plan_id`` attribute is copied into the trace.
    The run stops at the first iterate with proximity ``<= cfg.epsilon`` or
    after ``cfg.max_outer`` outer iterations.

    If ``cfg.max_inner_tries`` consecutive trials are rejected, the inner step
    is taken with the zero direction, which always passes the acceptance
    test. Such steps are counted in ``trace.forced``.
    """
    y = _init(family, obj, y0)
    if hasattr(operator, "reset"):
        operator.reset()
    sched = cfg.schedule
    trace = RunTrace("strong", keep_iterates=keep_iterates)
    ell = -1
    consumed = 0.0
    trace.record(y, obj.evaluate(y), family.proximity(y), consumed)
    for k in range(cfg.max_outer + 1):
        if trace.prox[-1] <= cfg.epsilon:
            trace.status, trace.K = EPSILON_OUTPUT, k
            break
        if k == cfg.max_outer:
            break
        phi_yk = trace.phi[-1]
        yn = y
        n = 0
        forced = 0
        betas = []
        accepted = []
        while n < cfg.n_inner:
            v = direction(obj, yn)
            if float(np.linalg.norm(v)) > 1.0 + 1e-12:
                raise ContractViolation("direction strategy returned a vector with norm > 1")
            tries = 0
            while True:
                if tries == cfg.max_inner_tries:
                    # zero direction: z = y^{k,n}, accepted since phi(y^{k,n}) <= phi(y^k)
                    forced += 1
                    betas.append(0.0)
                    accepted.append(obj.evaluate(yn))
                    n += 1
                    break
                ell += 1
                tries += 1
                beta = sched.value(ell)
                consumed += beta
                z = yn + beta * v
                fz = obj.evaluate(z)
                if fz <= phi_yk:
                    yn = z
                    n += 1
                    betas.append(beta)
                    accepted.append(fz)
                    break
        trace.phi_start.append(phi_yk)
        trace.phi_inner_end.append(obj.evaluate(yn))
        trace.accepted_phi.append(accepted)
        trace.inner_betas.append(betas)
        y = as_vector(operator(yn), "A(y)")
        trace.plan_ids.append(getattr(operator, "last_plan_id", None))
        trace.record(y, obj.evaluate(y), family.proximity(y), consumed, forced)
    return trace


def first_epsilon_index(prox_values: Iterable[float], epsilon: float) -> int | None:
    """Index of the first value ``<= epsilon``, or None if there is none."""
    if not epsilon > 0:
        raise ContractViolation("epsilon must be > 0")
    for k, p in enumerate(prox_values):
        if p <= epsilon:
            return k
    return None


def epsilon_output(seq, family: ConstraintFamily | None, epsilon: float):
    """Return ``(K, x^K)`` for the epsilon-output of ``seq``, or None.

    ``seq`` is a :class:`RunTrace` (its recorded proximities are used and
    ``family`` may be None) or an iterable of iterates, consumed lazily until
    the first iterate with ``family.proximity(x) <= epsilon``.
    """
    if not epsilon > 0:
        raise ContractViolation("epsilon must be > 0")
    if isinstance(seq, RunTrace):
        K = first_epsilon_index(seq.prox, epsilon)
        if K is None:
            return None
        if seq.keep_iterates:
            return K, seq.iterates[K]
        return K, (seq.final if K == len(seq) - 1 else None)
    if family is None:
        raise ContractViolation("a constraint family is needed to measure proximity")
    for k, x in enumerate(seq):
        if family.proximity(x) <= epsilon:
            return k, x
    return None


@dataclass
class ResilienceReport:
    final_prox: list
    final_step: list
    reached: list
    tol: float

    @property
    def max_final_prox(self) -> float:
        return max(self.final_prox)

    @property
    def failures(self) -> list:
        return [i for i, ok in enumerate(self.reached) if not ok]

    @property
    def all_reached(self) -> bool:
        return all(self.reached)

    def summary(self) -> str:
        return (f"{len(self.reached) - len(self.failures)}/{len(self.reached)} trials reached "
                f"prox < {self.tol:g} with step < {self.tol:g}; max final prox {self.max_final_prox:.3e}")


def _beta_sequence(beta, eta0: float, decay: float) -> Callable[[int], float]:
    if callable(beta):
        return beta
    if beta == "geometric":
        return lambda k: eta0 * decay ** k
    if beta == "harmonic":
        return lambda k: eta0 / (k + 1)
    if beta == "zero":
        return lambda k: 0.0
    raise ContractViolation(f"unknown beta sequence {beta!r}")


def check_bounded_perturbation_resilience(operator: Callable[[np.ndarray], np.ndarray], family: ConstraintFamily,
                                          trials: int, seed: int, *, beta="geometric", eta0: float = 1.0,
                                          decay: float = 0.9, max_iter: int = 1000, tol: float = 1e-6,
                                          x0_scale: float = 10.0) -> ResilienceReport:
    """Run ``y^{k+1} = A(y^k + beta_k v^k)`` from random starts with random ``||v^k|| <= 1``.

    ``beta`` is ``"geometric"`` (summable), ``"harmonic"`` (``eta0/(k+1)``, not
    summable), ``"zero"`` or a callable ``k -> beta_k``. A trial counts as
    reached when, after ``max_iter`` steps, both the proximity and the length
    of the last step are below ``tol``; the step length is the evidence that
    the sequence settles rather than merely staying near the feasible set.
    """
    if trials < 1:
        raise ContractViolation("trials must be >= 1")
    if max_iter < 1:
        raise ContractViolation("max_iter must be >= 1")
    beta_k = _beta_sequence(beta, eta0, decay)
    rng = np.random.default_rng(seed)
    J = family.dim
    final_prox, final_step, reached = [], [], []
    for _ in range(trials):
        if hasattr(operator, "reset"):
            operator.reset()
        y = x0_scale * rng.standard_normal(J)
        prev = y
        for k in range(max_iter):
            v = rng.standard_normal(J)
            v *= rng.uniform() / np.linalg.norm(v)
            prev = y
            y = operator(y + beta_k(k) * v)
        p = family.proximity(y)
        step = float(np.linalg.norm(y - prev))
        final_prox.append(p)
        final_step.append(step)
        reached.append(p < tol and step < tol)
    return ResilienceReport(final_prox, final_step, reached, tol)


@dataclass
class FejerReport:
    monotone: bool
    first_violation: int | None
    c0: float | None
    k0: int | None
    transitions: int
    vacuous: bool = False

    def summary(self) -> str:
        mono = "monotone" if self.monotone else f"not monotone (first violation at k={self.first_violation})"
        if self.vacuous:
            dec = "no perturbation mass, decrement vacuous"
        elif self.c0 is None:
            dec = "no decrement pair on the grid"
        else:
            dec = f"decrement holds with c0={self.c0}, k0={self.k0}"
        return f"{self.transitions} transitions, {mono}; {dec}"


def check_fejer_decrement(trace: RunTrace, x_star, family: ConstraintFamily,
                          c0_grid: Sequence[float] = (0.9, 0.5, 0.1, 0.01), tol: float = 1e-10) -> FejerReport:
    """Look for evidence of strict Fejer decrease of ``trace`` toward ``x_star``.

    Tests ``||y^{k+1} - x||^2 <= ||y^k - x||^2 - c0 * sum_{n>=1} beta_{k,n}`` for
    all ``k >= k0`` with ``k0`` in ``{0, T/4, T/2}``. Reports the largest ``c0``
    of the grid that works (with its smallest ``k0``) and whether the plain
    distances are nonincreasing. This is evidence, never a verdict on the
    limit.
    """
    x_star = as_vector(x_star, "x_star")
    if not family.contains(x_star, TAU_DIST):
        raise ContractViolation("x_star is not feasible")
    if not trace.keep_iterates:
        raise ContractViolation("trace was recorded without iterates")
    ys = np.asarray(trace.iterates)
    T = len(ys) - 1
    if T <= 0:
        return FejerReport(True, None, None, None, 0, vacuous=True)
    d = np.linalg.norm(ys - x_star, axis=1)
    d2 = d * d
    bad = np.flatnonzero(d[1:] > d[:-1] + tol)
    first = int(bad[0]) if bad.size else None
    sums = np.array([float(np.sum(b[1:])) for b in trace.inner_betas[:T]] + [0.0] * (T - len(trace.inner_betas)))
    if not np.any(sums > 0):
        return FejerReport(first is None, first, None, None, T, vacuous=True)
    for c0 in sorted(c0_grid, reverse=True):
        ok = d2[1:] <= d2[:-1] - c0 * sums + tol
        for k0 in sorted({0, T // 4, T // 2}):
            if np.all(ok[k0:]):
                return FejerReport(first is None, first, float(c0), k0, T)
    return FejerReport(first is None, first, None, None, T)
