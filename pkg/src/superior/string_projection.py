"""String-averaging projection operators (DSAP) and the basic iteration.

Indices are 0-based. A string ``t = (t_0, ..., t_{q-1})`` is applied left to
right: ``P_{t_0}`` first, ``P_{t_{q-1}}`` last. A :class:`StringPlan` is a fit
set of strings with positive weights; one DSAP step returns the weighted
average of the string end-points.

Kaczmarz (cyclic projections) is the plan with the single string
``(0, ..., m-1)``; Cimmino is the plan with ``m`` singleton strings of weight
``1/m``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np

from .convex_sets import ConstraintFamily, ContractViolation, as_vector

WEIGHT_SUM_TOL = 1e-12


@dataclass(frozen=True)
class StringPlan:
    """A pair (strings, weights) from the class M*(delta, q_bar).

    Parameters
    ----------
    strings : tuple of tuple of int
        Index vectors; together they must mention every index ``0..m-1``.
    weights : tuple of float
        One positive weight per string, summing to 1 and each ``>= delta``.
    m : int
        Number of constraints the plan addresses.
    delta : float, optional
        Lower bound on the weights, in ``(0, 1/m)``. Defaults to ``1/(2m)``.
    q_bar : int, optional
        Upper bound on string lengths, ``>= m``. Defaults to ``m``.
    """

    strings: tuple
    weights: tuple
    m: int
    delta: float | None = None
    q_bar: int | None = None

    def __post_init__(self):
        m = int(self.m)
        if m < 1:
            raise ContractViolation("plan needs m >= 1")
        delta = 1.0 / (2 * m) if self.delta is None else float(self.delta)
        q_bar = m if self.q_bar is None else int(self.q_bar)
        if not 0.0 < delta < 1.0 / m:
            raise ContractViolation(f"delta={delta} must lie in (0, 1/m) with m={m}")
        if q_bar < m:
            raise ContractViolation(f"q_bar={q_bar} must be >= m={m}")
        strings = tuple(tuple(int(i) for i in t) for t in self.strings)
        weights = tuple(float(w) for w in self.weights)
        if not strings:
            raise ContractViolation("plan has no strings")
        if len(strings) != len(weights):
            raise ContractViolation("one weight per string is required")
        seen = set()
        for t in strings:
            if not t:
                raise ContractViolation("empty index vector")
            if len(t) > q_bar:
                raise ContractViolation(f"string {t} longer than q_bar={q_bar}")
            for i in t:
                if not 0 <= i < m:
                    raise ContractViolation(f"index {i} out of range for m={m}")
            seen.update(t)
        missing = sorted(set(range(m)) - seen)
        if missing:
            raise ContractViolation(f"plan is not fit: indices {missing} never appear")
        if abs(sum(weights) - 1.0) > WEIGHT_SUM_TOL:
            raise ContractViolation(f"weights sum to {sum(weights)!r}, not 1")
        if min(weights) < delta:
            raise ContractViolation(f"weight {min(weights)} below delta={delta}")
        object.__setattr__(self, "m", m)
        object.__setattr__(self, "delta", delta)
        object.__setattr__(self, "q_bar", q_bar)
        object.__setattr__(self, "strings", strings)
        object.__setattr__(self, "weights", weights)

    def to_dict(self) -> dict:
        return {
            "m": self.m,
            "delta": self.delta,
            "q_bar": self.q_bar,
            "strings": [{"indices": list(t), "weight": w} for t, w in zip(self.strings, self.weights)],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "StringPlan":
        return cls(
            strings=[s["indices"] for s in d["strings"]],
            weights=[s["weight"] for s in d["strings"]],
            m=d["m"],
            delta=d.get("delta"),
            q_bar=d.get("q_bar"),
        )


def make_kaczmarz_plan(m: int, delta: float | None = None, q_bar: int | None = None) -> StringPlan:
    if m < 1:
        raise ContractViolation("m must be >= 1")
    return StringPlan((tuple(range(m)),), (1.0,), m, delta, q_bar)


def make_cimmino_plan(m: int, delta: float | None = None, q_bar: int | None = None) -> StringPlan:
    if m < 1:
        raise ContractViolation("m must be >= 1")
    return StringPlan(tuple((i,) for i in range(m)), (1.0 / m,) * m, m, delta, q_bar)


def _check_family(family: ConstraintFamily, x) -> np.ndarray:
    x = as_vector(x)
    if x.shape[0] != family.dim:
        raise ContractViolation(f"dimension mismatch: family is R^{family.dim}, got {x.shape[0]}")
    return x


def apply_string(family: ConstraintFamily, t: Sequence[int], x) -> np.ndarray:
    """Apply the projections named by ``t`` in order, first index first."""
    x = _check_family(family, x)
    m = len(family)
    for i in t:
        if not 0 <= i < m:
            raise ContractViolation(f"index {i} out of range for m={m}")
        x = family[i].project(x)
    return x


def dsap_apply(family: ConstraintFamily, plan: StringPlan, x) -> np.ndarray:
    """One string-averaging step: the weighted mean of all string end-points."""
    if plan.m != len(family):
        raise ContractViolation(f"plan built for m={plan.m}, family has m={len(family)}")
    x = _check_family(family, x)
    if len(plan.strings) == 1:
        # single string: weight is exactly 1
        return apply_string(family, plan.strings[0], x)
    out = np.zeros_like(x)
    if len(set(plan.weights)) == 1:
        # equal weights: sum the end-points, scale once
        for t in plan.strings:
            out += apply_string(family, t, x)
        return plan.weights[0] * out
    for t, w in zip(plan.strings, plan.weights):
        out += w * apply_string(family, t, x)
    return out


class PlanSequence:
    """Produces the plan used at outer iteration ``k``.

    All plans share one ``delta`` and ``q_bar``. Subclasses must be
    deterministic in ``k`` so a run can be replayed.
    """

    m: int
    delta: float
    q_bar: int

    def plan(self, k: int) -> StringPlan:
        raise NotImplementedError

    def plan_id(self, k: int) -> int:
        return k

    def __getitem__(self, k: int) -> StringPlan:
        return self.plan(k)


class FixedPlanSequence(PlanSequence):
    """Repeats one plan forever."""

    def __init__(self, plan: StringPlan):
        self._plan = plan
        self.m, self.delta, self.q_bar = plan.m, plan.delta, plan.q_bar

    def plan(self, k: int) -> StringPlan:
        return self._plan

    def plan_id(self, k: int) -> int:
        return 0

    def __repr__(self) -> str:
        return f"FixedPlanSequence({self._plan!r})"


class RandomPlanSequence(PlanSequence):
    """Seeded random plans: a random permutation of ``0..m-1`` cut into strings.

    String lengths are drawn uniformly in ``1..min(q_bar, m)``; weights are
    ``delta`` plus a Dirichlet share of the remaining mass, so every plan lies
    in M*(delta, q_bar). Plan ``k`` depends only on ``(seed, k)``.
    """

    def __init__(self, m: int, seed: int = 0, delta: float | None = None, q_bar: int | None = None):
        if m < 1:
            raise ContractViolation("m must be >= 1")
        self.m = m
        self.seed = int(seed)
        self.delta = 1.0 / (2 * m) if delta is None else float(delta)
        self.q_bar = m if q_bar is None else int(q_bar)
        # validate the bounds once
        make_cimmino_plan(m, self.delta, self.q_bar)

    def plan(self, k: int) -> StringPlan:
        rng = np.random.default_rng([self.seed, k])
        perm = rng.permutation(self.m)
        strings = []
        pos = 0
        max_len = min(self.q_bar, self.m)
        while pos < self.m:
            q = int(rng.integers(1, max_len + 1))
            strings.append(tuple(int(i) for i in perm[pos:pos + q]))
            pos += q
        s = len(strings)
        share = rng.dirichlet(np.ones(s))
        w = self.delta + (1.0 - s * self.delta) * share
        w[-1] = 1.0 - float(np.sum(w[:-1]))
        if w[-1] < self.delta:
            w = np.full(s, 1.0 / s)
        return StringPlan(tuple(strings), tuple(float(v) for v in w), self.m, self.delta, self.q_bar)

    def __repr__(self) -> str:
        return f"RandomPlanSequence(m={self.m}, seed={self.seed}, delta={self.delta}, q_bar={self.q_bar})"


def as_plan_sequence(plans) -> PlanSequence:
    if isinstance(plans, PlanSequence):
        return plans
    if isinstance(plans, StringPlan):
        return FixedPlanSequence(plans)
    raise ContractViolation(f"expected a StringPlan or PlanSequence, got {type(plans).__name__}")


def basic_algorithm(family: ConstraintFamily, plans, x0, max_iter: int) -> Iterator[np.ndarray]:
    """Yield ``x^0, x^1, ..., x^max_iter`` of the unperturbed DSAP iteration."""
    if max_iter < 0:
        raise ContractViolation("max_iter must be >= 0")
    plans = as_plan_sequence(plans)
    x = _check_family(family, x0).copy()
    yield x
    for k in range(max_iter):
        x = dsap_apply(family, plans.plan(k), x)
        yield x


class DSAPOperator:
    """A DSAP step packaged as a callable ``x -> A(x)``.

    The operator counts its calls so plan ``k`` is used on the ``k``-th call;
    :meth:`reset` rewinds the counter. With a fixed plan the counter is
    irrelevant.
    """

    def __init__(self, family: ConstraintFamily, plans):
        self.family = family
        self.plans = as_plan_sequence(plans)
        if self.plans.m != len(family):
            raise ContractViolation(f"plans built for m={self.plans.m}, family has m={len(family)}")
        self.calls = 0
        self.last_plan_id: int | None = None

    def reset(self) -> None:
        self.calls = 0
        self.last_plan_id = None

    def __call__(self, x) -> np.ndarray:
        k = self.calls
        self.calls += 1
        self.last_plan_id = self.plans.plan_id(k)
        return dsap_apply(self.family, self.plans.plan(k), x)
