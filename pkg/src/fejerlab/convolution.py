"""Group convolution ``F * f (x) = int F(y) f(y^-1 x) dmu(y)`` and target functions.

Targets with jumps declare their discontinuity interfaces. Before integrating,
each interface is carried through ``y -> y^-1 x`` into kernel coordinates and,
when it lands on a coordinate hyperplane, becomes a panel breakpoint.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np

from .errors import ConfigurationError
from .groups import GroupChart, GroupKind
from .kernels import KernelFamily
from .partitions import Cell, LocalPartition, PartitionMasses, probe_point
from .quadrature import Estimate, QuadratureSpec, integrate_box

__all__ = [
    "CellFace", "ConvolutionProblem", "DirectionalLimit", "Hyperplane", "TargetFunction",
    "cellwise", "constant", "convolve", "directional_limit", "harmonic", "integrate_box",
    "interval_indicator", "predicted_limit", "quadrant_step", "sin_oscillation", "step",
    "target_from_token",
]


@dataclass(frozen=True)
class Hyperplane:
    """Interface ``{w : w[axis] = value}`` in target coordinates."""

    axis: int
    value: float

    def pullback(self, g: GroupChart, x) -> tuple[int, float] | None:
        y = g.right_split(x, self.axis, self.value)
        return None if y is None else (self.axis, y)


@dataclass(frozen=True)
class CellFace:
    """Interface ``{w : (anchor w^-1)[axis] = value}``.

    Cell-shaped targets anchored at a point are discontinuous here; at ``x``
    the interface becomes ``{y : (anchor x^-1 y)[axis] = value}``.
    """

    anchor: tuple[float, ...]
    axis: int
    value: float

    def pullback(self, g: GroupChart, x) -> tuple[int, float] | None:
        z = g.mul(self.anchor, g.inv(x))
        y = g.left_split(z, self.axis, self.value)
        return None if y is None else (self.axis, y)


@dataclass(frozen=True)
class TargetFunction:
    """A pointwise-evaluable function on a group chart.

    ``evaluator`` maps chart points ``(..., dim)`` to values ``(...)``.
    ``declared_limits`` optionally pins ``f(x, A_j)`` per cell label.
    """

    group: GroupChart
    evaluator: Callable[[np.ndarray], np.ndarray]
    jumps: tuple = ()
    smoothness: str = "smooth"
    declared_limits: Mapping[str, float] | None = None
    name: str = "custom"

    def __call__(self, w) -> np.ndarray:
        return np.asarray(self.evaluator(self.group.point(w)), dtype=float)


def constant(g: GroupChart, value: float = 1.0) -> TargetFunction:
    return TargetFunction(g, lambda w: np.full(w.shape[:-1], float(value)), name="const")


def step(g: GroupChart, anchor, width: float = 0.5) -> TargetFunction:
    """Indicator of the at-or-above side of ``anchor`` on every axis.

    On the torus "above" means the arc ``[anchor, anchor + width)``.
    """
    anchor = g.point(anchor)
    if g.kind is GroupKind.TORUS:
        if not 0 < width < 1:
            raise ConfigurationError("torus step width must lie in (0, 1)")

        def f(w):
            return np.all(np.mod(w - anchor, 1.0) < width, axis=-1).astype(float)

        jumps = tuple(Hyperplane(i, float(v)) for i in range(g.dim)
                      for v in (anchor[i], (anchor[i] + width) % 1.0))
    else:
        def f(w):
            return np.all(w >= anchor, axis=-1).astype(float)

        jumps = tuple(Hyperplane(i, float(anchor[i])) for i in range(g.dim))
    return TargetFunction(g, f, jumps, "piecewise-with-jumps", name="step")


def interval_indicator(g: GroupChart, a: float, b: float, height: float = 1.0) -> TargetFunction:
    """``height`` times the indicator of the open interval ``(a, b)`` on a 1-D chart."""
    if g.dim != 1:
        raise ConfigurationError("interval targets are one-dimensional")

    def f(w):
        t = w[..., 0]
        return np.where((t > a) & (t < b), float(height), 0.0)

    return TargetFunction(g, f, (Hyperplane(0, a), Hyperplane(0, b)), "piecewise-with-jumps",
                          name=f"interval:{a:g}:{b:g}")


def cellwise(partition: LocalPartition, values: Mapping[str, float], anchor) -> TargetFunction:
    """``w -> values[cell of (anchor w^-1)]``.

    Evaluated in a convolution at ``anchor`` this is ``y -> values[cell of y]``,
    so ``f(anchor, A_j) = values[A_j]``.
    """
    g = partition.group
    anchor = g.point(anchor)
    missing = set(partition.labels) - set(values)
    if missing:
        raise ConfigurationError(f"no value for cells {sorted(missing)}")
    vals = np.array([float(values[label]) for label in partition.labels])

    def f(w):
        z = g._mul(anchor, g._inv(w))
        return partition.membership(z, validate=False).astype(float) @ vals

    splits = partition.cells[0].splits
    faces = [CellFace(tuple(anchor), i, float(s)) for i, s in enumerate(splits)]
    if g.kind is GroupKind.TORUS:
        faces += [CellFace(tuple(anchor), i, 0.0) for i in range(g.dim)]
    return TargetFunction(g, f, tuple(faces), "piecewise-with-jumps",
                          declared_limits=None, name="cellwise")


def quadrant_step(partition: LocalPartition, label: str, anchor) -> TargetFunction:
    """Indicator of cell ``label`` translated to ``anchor``."""
    partition.cell(label)
    values = {c: float(c == label) for c in partition.labels}
    t = cellwise(partition, values, anchor)
    return TargetFunction(t.group, t.evaluator, t.jumps, t.smoothness, name=f"quadrant-step:{label}")


def harmonic(g: GroupChart, j: int) -> TargetFunction:
    """Real part of ``e(j (w_1 + ... + w_d))`` on a torus."""
    if g.kind is not GroupKind.TORUS:
        raise ConfigurationError("harmonic targets live on a torus")
    return TargetFunction(g, lambda w: np.cos(2.0 * np.pi * j * np.sum(w, axis=-1)),
                          name=f"harmonic:{j}")


def sin_oscillation(g: GroupChart, anchor) -> TargetFunction:
    """``sin(1 / (w_0 - anchor_0))`` with value 0 at the anchor; no one-sided limits there."""
    anchor = g.point(anchor)

    def f(w):
        s = w[..., 0] - anchor[0]
        if g.kind is GroupKind.TORUS:
            s = s - np.round(s)
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(s == 0, 0.0, np.sin(1.0 / s))

    return TargetFunction(g, f, smoothness="piecewise-with-jumps", name="sin-oscillation")


def target_from_token(token: str, g: GroupChart, anchor, partition: LocalPartition | None = None):
    name, _, arg = token.partition(":")
    try:
        if name == "const":
            return constant(g, float(arg) if arg else 1.0)
        if name == "step":
            return step(g, anchor, float(arg)) if arg else step(g, anchor)
        if name == "harmonic":
            return harmonic(g, int(arg))
        if name == "sin-oscillation":
            return sin_oscillation(g, anchor)
        if name == "interval":
            a, b = (float(v) for v in arg.split(":"))
            return interval_indicator(g, a, b)
        if name in ("quadrant-step", "cells"):
            if partition is None:
                raise ConfigurationError(f"{name} needs a partition")
            if name == "quadrant-step":
                return quadrant_step(partition, arg, anchor)
            vals = [float(v) for v in arg.split(",")]
            if len(vals) != len(partition.cells):
                raise ConfigurationError(f"cells: needs {len(partition.cells)} values")
            return cellwise(partition, dict(zip(partition.labels, vals)), anchor)
    except ValueError as exc:
        if isinstance(exc, ConfigurationError):
            raise
        raise ConfigurationError(f"bad target token {token!r}: {exc}") from None
    raise ConfigurationError(f"unknown target {token!r}")


@dataclass(frozen=True)
class ConvolutionProblem:
    group: GroupChart
    kernel: KernelFamily
    param: float
    target: TargetFunction
    x: tuple
    spec: QuadratureSpec = field(default_factory=QuadratureSpec)

    def __post_init__(self):
        if self.kernel.group != self.group or self.target.group != self.group:
            raise ConfigurationError("kernel, target and problem must share one group")


def _kernel_breaks(g: GroupChart, target: TargetFunction, x) -> dict[int, list[float]]:
    breaks: dict[int, list[float]] = {}
    for iface in target.jumps:
        hit = iface.pullback(g, x)
        if hit is None:
            continue
        axis, y = hit
        if g.kind is GroupKind.TORUS:
            y = y - math.floor(y + 0.5)
        breaks.setdefault(axis, []).append(y)
    return breaks


def convolve(prob: ConvolutionProblem) -> Estimate:
    """``int F_theta(y) f(y^-1 x) dmu(y)`` over the kernel support (or truncation box)."""
    g, k, f = prob.group, prob.kernel, prob.target
    p = k.check_param(prob.param)
    x = g.point(prob.x)
    axes = k.quadrature_axes(p, prob.spec, weighted=True)
    for axis, ys in _kernel_breaks(g, f, x).items():
        axes[axis] = axes[axis].with_breaks(ys)

    def integrand(y):
        return f.evaluator(g._mul(g._inv(y), x))

    return integrate_box(g, integrand, axes, prob.spec, haar=False)


def predicted_limit(masses: PartitionMasses, limits: Mapping[str, float]) -> float:
    """``sum_j lambda_j f(x, A_j)``."""
    missing = [label for label in masses.labels if label not in limits]
    if missing:
        raise ConfigurationError(f"no directional limit for cells {missing}")
    return math.fsum(w * float(limits[label]) for label, w in zip(masses.labels, masses.weights))


@dataclass(frozen=True)
class DirectionalLimit:
    value: float
    stable: bool
    history: tuple[float, ...]


def directional_limit(g: GroupChart, f: TargetFunction, x, c: Cell, r0: float = 1e-2,
                      steps: int = 21, window: int = 4, tol: float = 1e-9) -> DirectionalLimit:
    """Evaluate ``f(probe^-1 x)`` along probes ``r_k = 2^-k r0`` inside cell ``c``.

    Stable when the last ``window`` values agree pairwise to ``tol``.
    """
    x = g.point(x)
    vals = []
    for k in range(steps):
        y = probe_point(c, r0 * 2.0 ** -k)
        vals.append(float(f(g.mul(g.inv(y), x))))
    tail = np.array(vals[-window:])
    stable = bool(np.all(np.isfinite(tail)) and np.ptp(tail) < tol)
    return DirectionalLimit(vals[-1], stable, tuple(vals))


def directional_limits(p: LocalPartition, f: TargetFunction, x) -> dict[str, DirectionalLimit]:
    return {c.label: directional_limit(p.group, f, x, c) for c in p.cells}
