import numpy as np
import pytest

from superior import Ball, Box, Halfspace, Hyperplane


def sample_inside(cset, rng, n):
    """Draw ``n`` points of ``cset`` without calling its projection."""
    J = cset.dim
    if isinstance(cset, Hyperplane):
        a = cset.a
        base = cset.b * a / (a @ a)
        # components orthogonal to a span the hyperplane directions
        z = rng.standard_normal((n, J)) * 5.0
        z -= np.outer(z @ a, a) / (a @ a)
        return base + z
    if isinstance(cset, Halfspace):
        a = cset.a
        z = rng.standard_normal((n, J)) * 5.0
        viol = z @ a - cset.b
        shift = np.maximum(viol, 0.0) + rng.uniform(0, 2, n)
        return z - np.outer(shift / (a @ a), a)
    if isinstance(cset, Box):
        return rng.uniform(cset.lo, cset.hi, size=(n, J))
    if isinstance(cset, Ball):
        u = rng.standard_normal((n, J))
        u /= np.linalg.norm(u, axis=1, keepdims=True)
        r = cset.radius * rng.uniform(0, 1, n) ** (1.0 / J)
        return cset.center + u * r[:, None]
    raise TypeError(cset)


def random_set(kind, rng, J):
    if kind == "hyperplane":
        return Hyperplane(rng.standard_normal(J), float(rng.standard_normal()))
    if kind == "halfspace":
        return Halfspace(rng.standard_normal(J), float(rng.standard_normal()))
    if kind == "box":
        lo = rng.standard_normal(J)
        return Box(lo, lo + rng.uniform(0, 2, J))
    if kind == "ball":
        return Ball(rng.standard_normal(J), float(rng.uniform(0.1, 2.0)))
    raise ValueError(kind)


SET_KINDS = ("hyperplane", "halfspace", "box", "ball")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
