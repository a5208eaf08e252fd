"""Closed convex sets with exact Euclidean projections.

Each set exposes ``project`` (the nearest point of the set) and ``distance``.
A :class:`ConstraintFamily` groups the sets of one feasibility problem and
provides the proximity function used to measure constraint violation:

    prox(x) = (1/m) * sum_i dist(x, C_i)**2

Vectors are 1-D float64 numpy arrays. Sets are immutable once built.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

#: Membership tolerance on distances.
TAU_DIST = 1e-10


class ContractViolation(ValueError):
    """Raised when an operation is called with arguments outside its contract."""


def as_vector(x, name: str = "x") -> np.ndarray:
    """Return ``x`` as a finite 1-D float64 array (a copy when converted)."""
    v = np.asarray(x, dtype=float)
    if v.ndim != 1 or v.size < 1:
        raise ContractViolation(f"{name} must be a non-empty 1-D vector, got shape {v.shape}")
    if not np.all(np.isfinite(v)):
        raise ContractViolation(f"{name} contains NaN or Inf")
    return v


def _frozen(v: np.ndarray) -> np.ndarray:
    v = np.array(v, dtype=float)
    v.setflags(write=False)
    return v


class ConstraintSet:
    """Base class for the closed convex sets supported here."""

    dim: int
    kind: str = ""

    def _check(self, x) -> np.ndarray:
        x = as_vector(x)
        if x.shape[0] != self.dim:
            raise ContractViolation(
                f"dimension mismatch: {self.kind} lives in R^{self.dim}, got vector of length {x.shape[0]}"
            )
        return x

    def project(self, x) -> np.ndarray:
        raise NotImplementedError

    def distance(self, x) -> float:
        x = self._check(x)
        return float(np.linalg.norm(x - self.project(x)))

    def contains(self, x, tol: float = TAU_DIST) -> bool:
        return self.distance(x) <= tol

    def to_dict(self) -> dict:
        raise NotImplementedError


@dataclass(frozen=True, eq=False)
class Hyperplane(ConstraintSet):
    """The set ``{x : <a, x> = b}``."""

    a: np.ndarray
    b: float
    kind: str = field(default="hyperplane", init=False)

    def __post_init__(self):
        a = as_vector(self.a, "a")
        nrm2 = float(a @ a)
        if not nrm2 > 0.0:
            raise ContractViolation("hyperplane normal must be nonzero")
        if not np.isfinite(self.b):
            raise ContractViolation("hyperplane offset must be finite")
        object.__setattr__(self, "a", _frozen(a))
        object.__setattr__(self, "b", float(self.b))
        object.__setattr__(self, "_nrm2", nrm2)

    @property
    def dim(self) -> int:
        return self.a.shape[0]

    def project(self, x) -> np.ndarray:
        x = self._check(x)
        r = self.b - float(self.a @ x)
        if r == 0.0:
            return x.copy()
        return x + (r / self._nrm2) * self.a

    def distance(self, x) -> float:
        x = self._check(x)
        return abs(self.b - float(self.a @ x)) / np.sqrt(self._nrm2)

    def to_dict(self) -> dict:
        return {"type": self.kind, "a": self.a.tolist(), "b": self.b}


@dataclass(frozen=True, eq=False)
class Halfspace(ConstraintSet):
    """The set ``{x : <a, x> <= b}``."""

    a: np.ndarray
    b: float
    kind: str = field(default="halfspace", init=False)

    def __post_init__(self):
        a = as_vector(self.a, "a")
        nrm2 = float(a @ a)
        if not nrm2 > 0.0:
            raise ContractViolation("halfspace normal must be nonzero")
        if not np.isfinite(self.b):
            raise ContractViolation("halfspace offset must be finite")
        object.__setattr__(self, "a", _frozen(a))
        object.__setattr__(self, "b", float(self.b))
        object.__setattr__(self, "_nrm2", nrm2)

    @property
    def dim(self) -> int:
        return self.a.shape[0]

    def project(self, x) -> np.ndarray:
        x = self._check(x)
        r = self.b - float(self.a @ x)
        if r >= 0.0:
            return x.copy()
        return x + (r / self._nrm2) * self.a

    def distance(self, x) -> float:
        x = self._check(x)
        return max(0.0, float(self.a @ x) - self.b) / np.sqrt(self._nrm2)

    def to_dict(self) -> dict:
        return {"type": self.kind, "a": self.a.tolist(), "b": self.b}


@dataclass(frozen=True, eq=False)
class Box(ConstraintSet):
    """Axis-aligned box ``{x : lo <= x <= hi}``."""

    lo: np.ndarray
    hi: np.ndarray
    kind: str = field(default="box", init=False)

    def __post_init__(self):
        lo = as_vector(self.lo, "lo")
        hi = as_vector(self.hi, "hi")
        if lo.shape != hi.shape:
            raise ContractViolation("box bounds have different lengths")
        bad = np.flatnonzero(lo > hi)
        if bad.size:
            raise ContractViolation(f"box has lo > hi at coordinate {int(bad[0])}")
        object.__setattr__(self, "lo", _frozen(lo))
        object.__setattr__(self, "hi", _frozen(hi))

    @property
    def dim(self) -> int:
        return self.lo.shape[0]

    def project(self, x) -> np.ndarray:
        x = self._check(x)
        return np.clip(x, self.lo, self.hi)

    def to_dict(self) -> dict:
        return {"type": self.kind, "lo": self.lo.tolist(), "hi": self.hi.tolist()}


@dataclass(frozen=True, eq=False)
class Ball(ConstraintSet):
    """Closed Euclidean ball of given center and radius."""

    center: np.ndarray
    radius: float
    kind: str = field(default="ball", init=False)

    def __post_init__(self):
        c = as_vector(self.center, "center")
        if not (np.isfinite(self.radius) and self.radius >= 0.0):
            raise ContractViolation("ball radius must be finite and >= 0")
        object.__setattr__(self, "center", _frozen(c))
        object.__setattr__(self, "radius", float(self.radius))

    @property
    def dim(self) -> int:
        return self.center.shape[0]

    def project(self, x) -> np.ndarray:
        x = self._check(x)
        diff = x - self.center
        r = float(np.linalg.norm(diff))
        if r <= self.radius:
            return x.copy()
        return self.center + (self.radius / r) * diff

    def distance(self, x) -> float:
        x = self._check(x)
        return max(0.0, float(np.linalg.norm(x - self.center)) - self.radius)

    def to_dict(self) -> dict:
        return {"type": self.kind, "center": self.center.tolist(), "radius": self.radius}


def project(cset: ConstraintSet, x) -> np.ndarray:
    return cset.project(x)


def distance(cset: ConstraintSet, x) -> float:
    return cset.distance(x)


class ConstraintFamily(Sequence):
    """An ordered, nonempty list of constraint sets sharing one dimension.

    The intersection of the sets may be empty; nothing here assumes otherwise.
    """

    def __init__(self, sets: Iterable[ConstraintSet]):
        sets = tuple(sets)
        if not sets:
            raise ContractViolation("a constraint family needs at least one set")
        dims = {s.dim for s in sets}
        if len(dims) != 1:
            raise ContractViolation(f"constraint sets disagree on dimension: {sorted(dims)}")
        self._sets = sets
        self.dim = dims.pop()

    def __getitem__(self, i):
        return self._sets[i]

    def __len__(self) -> int:
        return len(self._sets)

    def __repr__(self) -> str:
        kinds = ", ".join(s.kind for s in self._sets)
        return f"ConstraintFamily(dim={self.dim}, sets=[{kinds}])"

    @property
    def m(self) -> int:
        return len(self._sets)

    def distances(self, x) -> np.ndarray:
        x = as_vector(x)
        if x.shape[0] != self.dim:
            raise ContractViolation(f"dimension mismatch: family is R^{self.dim}, got {x.shape[0]}")
        return np.array([s.distance(x) for s in self._sets])

    def proximity(self, x) -> float:
        d = self.distances(x)
        return float(np.mean(d * d))

    def contains(self, x, tol: float = TAU_DIST) -> bool:
        return bool(np.all(self.distances(x) <= tol))


def proximity(family: ConstraintFamily, x) -> float:
    """Mean squared distance from ``x`` to the sets of ``family``."""
    return family.proximity(x)
