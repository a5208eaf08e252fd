"""Convex objective functions with a fixed subgradient selection.

At kinks the sign function is taken with ``sign(0) = 0``, which for L1 and
TV terms picks the element of the subdifferential closest to zero per term.
"""

from __future__ import annotations

import numpy as np

from .convex_sets import ContractViolation, as_vector

#: Subgradients with norm at or below this count as zero.
TAU_GRAD = 1e-12


class Objective:
    """Convex function R^J -> R with ``evaluate`` and ``subgradient``."""

    dim: int | None = None
    kind: str = ""

    def _check(self, x) -> np.ndarray:
        x = as_vector(x)
        if self.dim is not None and x.shape[0] != self.dim:
            raise ContractViolation(f"dimension mismatch: {self.kind} expects R^{self.dim}, got {x.shape[0]}")
        return x

    def evaluate(self, x) -> float:
        raise NotImplementedError

    def subgradient(self, x) -> np.ndarray:
        raise NotImplementedError

    def __call__(self, x) -> float:
        return self.evaluate(x)

    def to_dict(self) -> dict:
        raise NotImplementedError


class L1Norm(Objective):
    kind = "l1"

    def __init__(self, dim: int | None = None):
        self.dim = dim

    def evaluate(self, x) -> float:
        return float(np.sum(np.abs(self._check(x))))

    def subgradient(self, x) -> np.ndarray:
        return np.sign(self._check(x))

    def to_dict(self) -> dict:
        d = {"type": self.kind}
        if self.dim is not None:
            d["dim"] = self.dim
        return d

    def __repr__(self) -> str:
        return f"L1Norm(dim={self.dim})"


class SquaredL2(Objective):
    """``||x - center||^2``."""

    kind = "squared_l2"

    def __init__(self, center):
        self.center = as_vector(center, "center").copy()
        self.center.setflags(write=False)
        self.dim = self.center.shape[0]

    @classmethod
    def origin(cls, dim: int) -> "SquaredL2":
        return cls(np.zeros(dim))

    def evaluate(self, x) -> float:
        r = self._check(x) - self.center
        return float(r @ r)

    def subgradient(self, x) -> np.ndarray:
        return 2.0 * (self._check(x) - self.center)

    def to_dict(self) -> dict:
        return {"type": self.kind, "center": self.center.tolist()}

    def __repr__(self) -> str:
        return f"SquaredL2(dim={self.dim})"


class TV2D(Objective):
    """Anisotropic total variation of a ``rows x cols`` image stored row-major.

    TV(x) = sum |x[i, j+1] - x[i, j]| + sum |x[i+1, j] - x[i, j]|
    """

    kind = "tv2d"

    def __init__(self, rows: int, cols: int):
        if rows < 1 or cols < 1:
            raise ContractViolation("TV2D needs rows, cols >= 1")
        self.rows, self.cols = int(rows), int(cols)
        self.dim = self.rows * self.cols

    def _image(self, x) -> np.ndarray:
        return self._check(x).reshape(self.rows, self.cols)

    def evaluate(self, x) -> float:
        img = self._image(x)
        return float(np.abs(np.diff(img, axis=1)).sum() + np.abs(np.diff(img, axis=0)).sum())

    def subgradient(self, x) -> np.ndarray:
        img = self._image(x)
        g = np.zeros_like(img)
        sh = np.sign(np.diff(img, axis=1))
        g[:, 1:] += sh
        g[:, :-1] -= sh
        sv = np.sign(np.diff(img, axis=0))
        g[1:, :] += sv
        g[:-1, :] -= sv
        return g.ravel()

    def to_dict(self) -> dict:
        return {"type": self.kind, "rows": self.rows, "cols": self.cols}

    def __repr__(self) -> str:
        return f"TV2D({self.rows}x{self.cols})"


class Constant(Objective):
    """The constant function; every direction is nonascending for it."""

    kind = "constant"

    def __init__(self, value: float = 0.0, dim: int | None = None):
        self.value = float(value)
        self.dim = dim

    def evaluate(self, x) -> float:
        self._check(x)
        return self.value

    def subgradient(self, x) -> np.ndarray:
        return np.zeros_like(self._check(x))

    def to_dict(self) -> dict:
        d = {"type": self.kind, "value": self.value}
        if self.dim is not None:
            d["dim"] = self.dim
        return d


def evaluate(obj: Objective, x) -> float:
    return obj.evaluate(x)


def subgradient(obj: Objective, x) -> np.ndarray:
    return obj.subgradient(x)


def negative_normalized_subgradient(obj: Objective, y) -> np.ndarray:
    """Return ``-s/||s||`` for the selected subgradient ``s``, or 0 if ``s`` vanishes."""
    s = obj.subgradient(y)
    n = float(np.linalg.norm(s))
    if n <= TAU_GRAD:
        return np.zeros_like(s)
    return -s / n


def is_nonascending(obj: Objective, y, d, delta_probe: float = 1.0, tol: float = 1e-12) -> bool:
    """Probe whether ``d`` does not increase ``obj`` near ``y``.

    Checks ``phi(y + lam*d) <= phi(y) + tol`` for ``lam = delta_probe * 2**-j``,
    ``j = 0..20``. This is a numerical certificate for tests, not a proof.
    """
    y = as_vector(y, "y")
    d = as_vector(d, "d")
    if float(np.linalg.norm(d)) > 1.0 + 1e-12:
        raise ContractViolation("direction must have norm <= 1")
    f0 = obj.evaluate(y)
    for j in range(21):
        lam = delta_probe * 2.0 ** (-j)
        if obj.evaluate(y + lam * d) > f0 + tol:
            return False
    return True
