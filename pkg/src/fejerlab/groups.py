"""Concrete locally compact groups in a single global coordinate chart.

Points are numpy arrays whose last axis holds the chart coordinates, so every
operation works on one point or on a whole grid of points at once.

Charts
------
``torus(d)``
    ``[0, 1)^d`` with addition mod 1.
``euclidean(d)``
    ``R^d`` with addition.
``axb()``
    The affine group ``x -> a x + b`` as ``(a, b)`` with ``a > 0``;
    left Haar measure ``da db / a^2``.
``heisenberg()``
    Unitriangular 3x3 matrices ``[[1, a, b], [0, 1, c], [0, 0, 1]]`` as
    ``(a, b, c)``; Haar measure ``da db dc``.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, InvalidPointError

_BELOW_ONE = np.nextafter(1.0, 0.0)


class GroupKind(enum.Enum):
    TORUS = "torus"
    EUCLIDEAN = "euclidean"
    AXB = "axb"
    HEISENBERG = "heisenberg"


def reduce_mod1(t):
    """Reduce to ``[0, 1)``; values that round up to 1.0 stay just below it."""
    r = np.mod(t, 1.0)
    return np.where(r >= 1.0, _BELOW_ONE, r)


@dataclass(frozen=True)
class GroupChart:
    kind: GroupKind
    dim: int

    def __post_init__(self):
        fixed = {GroupKind.AXB: 2, GroupKind.HEISENBERG: 3}
        if self.dim < 1 or fixed.get(self.kind, self.dim) != self.dim:
            raise ConfigurationError(f"bad dimension {self.dim} for {self.kind.value}")

    @property
    def abelian(self) -> bool:
        return self.kind in (GroupKind.TORUS, GroupKind.EUCLIDEAN)

    @property
    def identity(self) -> np.ndarray:
        e = np.zeros(self.dim)
        if self.kind is GroupKind.AXB:
            e[0] = 1.0
        return e

    @property
    def token(self) -> str:
        if self.kind is GroupKind.TORUS:
            return f"torus{self.dim}"
        if self.kind is GroupKind.EUCLIDEAN:
            return f"r{self.dim}"
        return "axb" if self.kind is GroupKind.AXB else "heis"

    def point(self, coords) -> np.ndarray:
        """Validate and normalise ``coords`` into an array of shape ``(..., dim)``."""
        x = np.asarray(coords, dtype=float)
        if x.ndim == 0 and self.dim == 1:
            x = x.reshape(1)
        if x.shape[-1:] != (self.dim,):
            raise InvalidPointError(
                f"{self.token}: expected trailing dimension {self.dim}, got shape {x.shape}")
        if not np.all(np.isfinite(x)):
            raise InvalidPointError(f"{self.token}: non-finite coordinates")
        if self.kind is GroupKind.AXB and np.any(x[..., 0] <= 0):
            raise InvalidPointError("axb: first coordinate must be strictly positive")
        if self.kind is GroupKind.TORUS:
            x = reduce_mod1(x)
        return x

    def mul(self, x, y) -> np.ndarray:
        return self._mul(self.point(x), self.point(y))

    def inv(self, x) -> np.ndarray:
        return self._inv(self.point(x))

    # Unchecked versions for quadrature inner loops.

    def _mul(self, x, y):
        if self.kind is GroupKind.TORUS:
            return reduce_mod1(x + y)
        if self.kind is GroupKind.EUCLIDEAN:
            return x + y
        x, y = np.broadcast_arrays(x, y)
        if self.kind is GroupKind.AXB:
            a1, b1 = x[..., 0], x[..., 1]
            a2, b2 = y[..., 0], y[..., 1]
            return np.stack([a1 * a2, a1 * b2 + b1], axis=-1)
        a1, b1, c1 = x[..., 0], x[..., 1], x[..., 2]
        a2, b2, c2 = y[..., 0], y[..., 1], y[..., 2]
        return np.stack([a1 + a2, b1 + b2 + a1 * c2, c1 + c2], axis=-1)

    def _inv(self, x):
        if self.kind is GroupKind.TORUS:
            return reduce_mod1(-x)
        if self.kind is GroupKind.EUCLIDEAN:
            return -x
        if self.kind is GroupKind.AXB:
            a, b = x[..., 0], x[..., 1]
            return np.stack([1.0 / a, -b / a], axis=-1)
        a, b, c = x[..., 0], x[..., 1], x[..., 2]
        return np.stack([-a, a * c - b, -c], axis=-1)

    def haar_density(self, y) -> np.ndarray:
        """Density of the left Haar measure against chart Lebesgue measure."""
        y = self.point(y)
        if self.kind is GroupKind.AXB:
            return 1.0 / y[..., 0] ** 2
        return np.ones(y.shape[:-1])

    def gauge_radius(self, y) -> np.ndarray:
        """Max-norm distance of ``y`` from the identity in chart coordinates."""
        y = self.point(y)
        if self.kind is GroupKind.TORUS:
            return np.max(np.minimum(y, 1.0 - y), axis=-1)
        return np.max(np.abs(y - self.identity), axis=-1)

    def gauge_box(self, r: float) -> list[tuple[float, float]]:
        """Closed coordinate box whose interior is ``{gauge_radius < r}``.

        Torus boxes use the representative interval ``[-1/2, 1/2]``.
        """
        e = self.identity
        if self.kind is GroupKind.TORUS:
            r = min(r, 0.5)
        return [(e[i] - r, e[i] + r) for i in range(self.dim)]

    # Interface transport, used to split quadrature panels at jumps.

    def right_split(self, x, axis: int, value: float) -> float | None:
        """Solve ``(y^-1 x)[axis] = value`` for ``y[axis]``.

        Returns ``None`` when the solution set is not a coordinate hyperplane
        in ``y``.
        """
        x = self.point(x)
        if self.abelian:
            return float(x[axis] - value)
        if self.kind is GroupKind.AXB:
            if axis == 0:
                return float(x[0] / value) if value > 0 else None
            return float(x[1]) if value == 0 else None
        if axis == 1:
            return None
        return float(x[axis] - value)

    def left_split(self, z, axis: int, value: float) -> float | None:
        """Solve ``(z y)[axis] = value`` for ``y[axis]`` (``None`` if not a hyperplane)."""
        z = self.point(z)
        if self.abelian:
            return float(value - z[axis])
        if self.kind is GroupKind.AXB:
            if axis == 0:
                return float(value / z[0])
            return float((value - z[1]) / z[0])
        if axis == 1:
            return float(value - z[1]) if z[0] == 0 else None
        return float(value - z[axis])


def torus(d: int = 1) -> GroupChart:
    return GroupChart(GroupKind.TORUS, d)


def euclidean(d: int = 1) -> GroupChart:
    return GroupChart(GroupKind.EUCLIDEAN, d)


def axb() -> GroupChart:
    return GroupChart(GroupKind.AXB, 2)


def heisenberg() -> GroupChart:
    return GroupChart(GroupKind.HEISENBERG, 3)


GROUP_TOKENS = {
    "torus1": lambda: torus(1),
    "torus2": lambda: torus(2),
    "torus3": lambda: torus(3),
    "r1": lambda: euclidean(1),
    "r2": lambda: euclidean(2),
    "r3": lambda: euclidean(3),
    "axb": axb,
    "heis": heisenberg,
}


def group_from_token(token: str) -> GroupChart:
    try:
        return GROUP_TOKENS[token]()
    except KeyError:
        raise ConfigurationError(
            f"unknown group {token!r}; expected one of {', '.join(GROUP_TOKENS)}") from None


def random_points(g: GroupChart, n: int, rng: np.random.Generator, scale: float = 2.0) -> np.ndarray:
    """Sample ``n`` points spread over a bounded part of the chart."""
    if g.kind is GroupKind.TORUS:
        return rng.random((n, g.dim))
    y = rng.uniform(-scale, scale, size=(n, g.dim))
    if g.kind is GroupKind.AXB:
        y[:, 0] = np.exp(rng.uniform(-np.log(4.0), np.log(4.0), size=n))
    return y
