"""Local partitions at the identity built from coordinate half-spaces.

A cell constrains each chart axis to one side of a split point (or leaves it
free). Half-open conventions follow the standard partitions:

* torus ``I0 = [0, 1/2)``, ``I1 = [1/2, 1)``;
* Euclidean and Heisenberg ``J0 = (-inf, 0)``, ``J1 = [0, inf)``;
* ax+b ``A1 = (0, 1] x (-inf, 0]``, ``A2 = (0, 1] x (0, inf)``,
  ``A3 = (1, inf) x (-inf, 0]``, ``A4 = (1, inf) x (0, inf)``.
"""
from __future__ import annotations

import itertools
import math
import re
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import groups
from .errors import ConfigurationError, PartitionError
from .groups import GroupChart, GroupKind
from .kernels import KernelFamily
from .quadrature import QuadratureSpec

BELOW, ABOVE, FULL = "below", "above", "full"


@dataclass(frozen=True)
class Cell:
    label: str
    group: GroupChart
    sides: tuple[str, ...]
    splits: tuple[float, ...]
    closed_below: bool = False

    def contains(self, y, validate: bool = True) -> np.ndarray:
        if validate:
            y = self.group.point(y)
        ok = np.ones(y.shape[:-1], dtype=bool)
        for i, (side, s) in enumerate(zip(self.sides, self.splits)):
            t = y[..., i]
            if side == FULL:
                continue
            below = t <= s if self.closed_below else t < s
            ok &= below if side == BELOW else ~below
        return ok

    def box(self) -> list[tuple[float, float]]:
        """Chart box of the cell (``(0, 1)`` per free torus axis)."""
        out = []
        for i, (side, s) in enumerate(zip(self.sides, self.splits)):
            if self.group.kind is GroupKind.TORUS:
                lo, hi = 0.0, 1.0
            elif self.group.kind is GroupKind.AXB and i == 0:
                lo, hi = 0.0, math.inf
            else:
                lo, hi = -math.inf, math.inf
            if side == BELOW:
                hi = s
            elif side == ABOVE:
                lo = s
            out.append((lo, hi))
        return out


def probe_point(c: Cell, r: float) -> np.ndarray:
    """A point near the identity on the cell's side of every axis.

    Offsets have magnitude ``r/2``. On the torus the below side starts at 0
    and the above side ends at ``1 = 0``, so they probe ``r/2`` and ``1 - r/2``.
    """
    if not r > 0:
        raise ValueError("radius must be positive")
    g = c.group
    e = g.identity
    h = 0.5 * r
    y = np.empty(g.dim)
    for i, side in enumerate(c.sides):
        if g.kind is GroupKind.TORUS:
            y[i] = 1.0 - h if side == ABOVE else h
        else:
            y[i] = e[i] - h if side == BELOW else e[i] + h
    return g.point(y)


@dataclass(frozen=True)
class LocalPartition:
    group: GroupChart
    cells: tuple[Cell, ...]

    @property
    def labels(self) -> list[str]:
        return [c.label for c in self.cells]

    def cell(self, label: str) -> Cell:
        for c in self.cells:
            if c.label == label:
                return c
        raise ConfigurationError(f"no cell {label!r} in partition {self.labels}")

    def membership(self, y, validate: bool = True) -> np.ndarray:
        """Boolean matrix ``(..., n_cells)``."""
        if validate:
            y = self.group.point(y)
        return np.stack([c.contains(y, validate=False) for c in self.cells], axis=-1)

    def cell_of(self, y) -> str:
        hits = self.membership(y)
        if hits.ndim != 1 or hits.sum() != 1:
            raise PartitionError(f"point {y!r} lies in {int(hits.sum())} cells")
        return self.cells[int(np.argmax(hits))].label


def standard_partition(g: GroupChart) -> LocalPartition:
    """Orthant-type partition anchored at the identity."""
    if g.kind is GroupKind.AXB:
        cells = []
        for j, (sa, sb) in enumerate(itertools.product((BELOW, ABOVE), repeat=2), start=1):
            cells.append(Cell(f"A{j}", g, (sa, sb), (1.0, 0.0), closed_below=True))
        return LocalPartition(g, tuple(cells))
    prefix, split = ("I", 0.5) if g.kind is GroupKind.TORUS else ("J", 0.0)
    cells = []
    for k in itertools.product((0, 1), repeat=g.dim):
        sides = tuple(BELOW if kj == 0 else ABOVE for kj in k)
        cells.append(Cell(prefix + "".join(map(str, k)), g, sides, (split,) * g.dim))
    return LocalPartition(g, tuple(cells))


PARTITION_TOKENS = {"halves": (GroupKind.TORUS, GroupKind.EUCLIDEAN),
                    "orthants": (GroupKind.TORUS, GroupKind.EUCLIDEAN, GroupKind.HEISENBERG),
                    "axb4": (GroupKind.AXB,),
                    "heis8": (GroupKind.HEISENBERG,)}


def partition_from_token(token: str, g: GroupChart) -> LocalPartition:
    kinds = PARTITION_TOKENS.get(token)
    if kinds is None:
        raise ConfigurationError(f"unknown partition {token!r}")
    if g.kind not in kinds or (token == "halves" and g.dim != 1):
        raise ConfigurationError(f"partition {token!r} does not apply to {g.token}")
    return standard_partition(g)


_CELL_LINE = re.compile(r"^cell\.(\w+)\.axis(\d+)$")
_SPLIT_LINE = re.compile(r"^split\.axis(\d+)$")


def parse_partition_config(g: GroupChart, text: str) -> LocalPartition:
    """Build a partition from ``cell.<label>.axis<i> = below|above|full`` lines.

    Optional ``split.axis<i> = <real>`` lines override the default split
    points. Axes not mentioned for a cell are ``full``. The result is only
    structurally parsed; run :func:`validate_partition` before trusting it.
    """
    default = standard_partition(g).cells[0].splits
    splits = list(default)
    sides: dict[str, list[str]] = {}
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = (part.strip() for part in line.partition("="))
        if not sep:
            raise ConfigurationError(f"expected key = value, got {raw!r}")
        if m := _CELL_LINE.match(key):
            label, axis = m.group(1), int(m.group(2))
            if value not in (BELOW, ABOVE, FULL):
                raise ConfigurationError(f"side must be below|above|full, got {value!r}")
            if axis >= g.dim:
                raise ConfigurationError(f"axis {axis} out of range for {g.token}")
            sides.setdefault(label, [FULL] * g.dim)[axis] = value
        elif m := _SPLIT_LINE.match(key):
            axis = int(m.group(1))
            if axis >= g.dim:
                raise ConfigurationError(f"axis {axis} out of range for {g.token}")
            splits[axis] = float(value)
        else:
            raise ConfigurationError(f"unrecognised partition key {key!r}")
    if not sides:
        raise ConfigurationError("partition config defines no cells")
    closed = g.kind is GroupKind.AXB
    cells = tuple(Cell(label, g, tuple(s), tuple(splits), closed) for label, s in sides.items())
    return LocalPartition(g, cells)


def validate_partition(p: LocalPartition, samples: int = 100_000, seed: int = 0,
                       radii: Sequence[float] = tuple(10.0 ** -k for k in range(1, 10))) -> None:
    """Check disjointness, covering and locality; raise :class:`PartitionError` on failure."""
    g = p.group
    rng = np.random.default_rng(seed)
    pts = groups.random_points(g, samples, rng)
    # Points on and next to the split hyperplanes exercise the boundary conventions.
    near = np.repeat(g.identity[None, :], 4 * g.dim, axis=0)
    for i in range(g.dim):
        s = p.cells[0].splits[i]
        near[4 * i:4 * i + 4, i] = [s, np.nextafter(s, -np.inf), np.nextafter(s, np.inf), s + 0.25]
    if g.kind is GroupKind.AXB:
        near[:, 0] = np.where(near[:, 0] > 0, near[:, 0], 1.0)
    counts = p.membership(np.concatenate([pts, near])).sum(axis=-1)
    if np.any(counts == 0):
        raise PartitionError("cells do not cover the group")
    if np.any(counts > 1):
        raise PartitionError("cells overlap")
    for c in p.cells:
        for r in radii:
            y = probe_point(c, r)
            rad = float(g.gauge_radius(y))
            if not (0 < rad < r and bool(c.contains(y))):
                raise PartitionError(f"cell {c.label} does not meet the gauge ball of radius {r:g}")


@dataclass(frozen=True)
class PartitionMasses:
    labels: tuple[str, ...]
    weights: tuple[float, ...]
    provenance: str = "analytic"

    def as_dict(self) -> dict[str, float]:
        return dict(zip(self.labels, self.weights))

    @property
    def total(self) -> float:
        return math.fsum(self.weights)


def _check_compatible(p: LocalPartition, k: KernelFamily):
    if p.group != k.group:
        raise ConfigurationError(
            f"partition lives on {p.group.token} but kernel {k.token} on {k.group.token}")


def partition_masses(p: LocalPartition, k: KernelFamily, param,
                     spec: QuadratureSpec = QuadratureSpec()) -> PartitionMasses:
    """Kernel mass of every cell, analytic when the cell is a box (always, here)."""
    _check_compatible(p, k)
    weights, provenance = [], "analytic"
    for c in p.cells:
        m = k.closed_form_mass(param, c.box())
        if m is None:
            m = k.numerical_mass(param, c.box(), spec)
            provenance = "numerical"
        weights.append(m)
    return PartitionMasses(tuple(p.labels), tuple(weights), provenance)


def numerical_partition_masses(p: LocalPartition, k: KernelFamily, param,
                               spec: QuadratureSpec = QuadratureSpec()) -> PartitionMasses:
    """Cell masses by direct quadrature, independent of the closed-form CDFs."""
    _check_compatible(p, k)
    weights = tuple(k.numerical_mass(param, c.box(), spec) for c in p.cells)
    return PartitionMasses(tuple(p.labels), weights, "numerical")


@dataclass(frozen=True)
class MassConvergence:
    params: tuple
    history: np.ndarray
    limit: PartitionMasses
    stable: bool

    @property
    def status(self) -> str:
        return "stable" if self.stable else "non-convergent"


def masses_converge(p: LocalPartition, k: KernelFamily, sweep: Sequence,
                    tol: float = 1e-9) -> MassConvergence:
    """Track cell masses along ``sweep``; stable when all successive changes are below ``tol``."""
    if len(sweep) < 2:
        raise ValueError("need at least two sweep points")
    rows = [partition_masses(p, k, param) for param in sweep]
    history = np.array([r.weights for r in rows])
    stable = bool(np.all(np.abs(np.diff(history, axis=0)) < tol))
    return MassConvergence(tuple(sweep), history, rows[-1], stable)
