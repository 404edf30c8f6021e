"""Tensor-product composite Gauss-Legendre quadrature on coordinate boxes.

Each axis of a box carries an optional change of variables ``t = map(u)``:

* ``linear``  -- ``t = u``.
* ``sine``    -- ``t = center + scale * sin(u)``; removes the square-root edge
  behaviour of semicircle factors.
* ``tan``     -- ``t = center + scale * tan(u)``; turns a Cauchy factor into a
  constant weight. Panels are graded geometrically toward ``u = +-pi/2``.

Panels are split at declared breakpoints (mapped into ``u``), so an integrand
that is smooth between breakpoints is integrated at full Gauss order. Nodes
lie strictly inside panels and never touch a breakpoint.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from functools import lru_cache
from typing import Callable, NamedTuple, Sequence

import numpy as np

from .errors import QuadratureError

HALF_PI = 0.5 * math.pi


@dataclass(frozen=True)
class QuadratureSpec:
    """Discretisation settings.

    ``panels_per_oscillation`` applies to Fejer axes: panel width is at most
    ``1 / (panels_per_oscillation * (n + 1))``.
    """

    panels_per_oscillation: int = 2
    nodes_per_panel: int = 8
    truncation_eps: float = 1e-10
    tol: float = 1e-9
    base_panels: int = 4
    max_refinements: int = 3
    max_points: int = 150_000_000

    def __post_init__(self):
        if self.tol <= 0:
            raise ValueError("tolerance must be positive")
        if self.nodes_per_panel < 2:
            raise ValueError("need at least 2 nodes per panel")
        if self.panels_per_oscillation < 1 or self.base_panels < 1:
            raise ValueError("panel counts must be positive")
        if not 0 < self.truncation_eps < 1:
            raise ValueError("truncation eps must lie in (0, 1)")


class Estimate(NamedTuple):
    value: float
    error: float


@dataclass(frozen=True)
class Axis:
    """One axis of an integration box, in chart coordinates ``[lo, hi]``.

    ``density``, when set, is a one-dimensional weight folded into the node
    weights; product kernels use it so the integrand need not carry them.
    """

    lo: float
    hi: float
    map: str = "linear"
    center: float = 0.0
    scale: float = 1.0
    panels: int = 4
    breaks: tuple[float, ...] = ()
    graded: bool = False
    density: Callable[[np.ndarray], np.ndarray] | None = None

    def __post_init__(self):
        if self.map not in ("linear", "sine", "tan"):
            raise ValueError(f"unknown axis map {self.map!r}")
        if not self.hi > self.lo:
            raise ValueError(f"empty axis [{self.lo}, {self.hi}]")

    def to_u(self, t):
        t = np.asarray(t, dtype=float)
        if self.map == "linear":
            return t
        s = (t - self.center) / self.scale
        if self.map == "sine":
            return np.arcsin(np.clip(s, -1.0, 1.0))
        return np.arctan(s)

    def to_t(self, u):
        if self.map == "linear":
            return u
        if self.map == "sine":
            return self.center + self.scale * np.sin(u)
        return self.center + self.scale * np.tan(u)

    def jacobian(self, u):
        if self.map == "linear":
            return np.ones_like(u)
        if self.map == "sine":
            return self.scale * np.cos(u)
        return self.scale / np.cos(u) ** 2

    def clip(self, lo: float, hi: float) -> Axis | None:
        """Restrict to ``[lo, hi]``; ``None`` when the overlap has no length."""
        new_lo, new_hi = max(self.lo, lo), min(self.hi, hi)
        if not new_hi > new_lo:
            return None
        return replace(self, lo=new_lo, hi=new_hi)

    def with_breaks(self, extra: Sequence[float]) -> Axis:
        return replace(self, breaks=self.breaks + tuple(float(b) for b in extra))

    def edges(self) -> np.ndarray:
        """Panel edges in ``u`` before refinement."""
        u_lo, u_hi = float(self.to_u(self.lo)), float(self.to_u(self.hi))
        # Base panels are laid over the full natural range of the map so that
        # clipped axes share edges with the unclipped ones.
        if self.map == "linear":
            base = np.linspace(u_lo, u_hi, self.panels + 1)
        else:
            base = np.linspace(-HALF_PI, HALF_PI, self.panels + 1)
        pts = [base]
        if self.graded:
            k = np.arange(1, 64)
            g = HALF_PI * (1.0 - 0.5 ** k)
            pts.append(np.concatenate([g, -g]))
        if self.breaks:
            pts.append(self.to_u(np.asarray(self.breaks)))
        e = np.concatenate(pts + [[u_lo, u_hi]])
        e = e[(e >= u_lo) & (e <= u_hi)]
        e = np.unique(e)
        # Drop slivers created by breakpoints that coincide with base edges.
        width = u_hi - u_lo
        keep = np.concatenate([[True], np.diff(e) > 1e-14 * max(width, 1e-300)])
        e = e[keep]
        e[-1] = u_hi
        if len(e) < 2:
            e = np.array([u_lo, u_hi])
        return e


@lru_cache(maxsize=32)
def _gauss_legendre(m: int):
    x, w = np.polynomial.legendre.leggauss(m)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def axis_rule(axis: Axis, nodes: int, level: int = 0):
    """Nodes (chart coordinates) and weights (including the map Jacobian)."""
    e = axis.edges()
    if level:
        sub = 2 ** level
        steps = np.linspace(0.0, 1.0, sub + 1)[:-1]
        e = np.concatenate([(e[:-1, None] + np.diff(e)[:, None] * steps).ravel(), e[-1:]])
    x, w = _gauss_legendre(nodes)
    half = 0.5 * np.diff(e)
    mid = 0.5 * (e[:-1] + e[1:])
    u = (mid[:, None] + half[:, None] * x).ravel()
    wu = (half[:, None] * w).ravel()
    t = axis.to_t(u)
    wt = wu * axis.jacobian(u)
    if axis.density is not None:
        wt = wt * axis.density(t)
    return t, wt


def _tensor_sum(group, integrand, rules, max_points, haar=True):
    ts = [r[0] for r in rules]
    ws = [r[1] for r in rules]
    sizes = [len(t) for t in ts]
    total = math.prod(sizes)
    if total > max_points:
        raise QuadratureError(f"quadrature grid of {total} points exceeds budget {max_points}")
    d = len(ts)
    inner = math.prod(sizes[1:])
    rows = max(1, 2_000_000 // max(inner, 1))
    if d > 1:
        rest = np.stack(np.meshgrid(*ts[1:], indexing="ij"), axis=-1)
        w_rest = ws[1]
        for w in ws[2:]:
            w_rest = np.multiply.outer(w_rest, w)
    acc = []
    for start in range(0, sizes[0], rows):
        t0 = ts[0][start:start + rows]
        if d == 1:
            pts = t0[:, None]
            wgt = ws[0][start:start + rows]
        else:
            lead = np.broadcast_to(t0.reshape((-1,) + (1,) * (d - 1) + (1,)),
                                   (len(t0),) + rest.shape[:-1] + (1,))
            pts = np.concatenate([lead, np.broadcast_to(rest, (len(t0),) + rest.shape)], axis=-1)
            wgt = np.multiply.outer(ws[0][start:start + rows], w_rest)
        vals = np.asarray(integrand(pts))
        if haar:
            vals = vals * group.haar_density(pts)
        acc.append(np.sum(vals * wgt))
    return np.sum(np.asarray(acc))


def integrate_box(group, integrand: Callable[[np.ndarray], np.ndarray],
                  axes: Sequence[Axis], spec: QuadratureSpec = QuadratureSpec(),
                  haar: bool = True) -> Estimate:
    """Integrate ``integrand * haar_density`` over the box spanned by ``axes``.

    With ``haar=False`` the Haar density is assumed to be folded into the
    axis densities already.

    The integrand receives an array of chart points of shape ``(..., dim)``
    and must return values of shape ``(...)``. The error estimate is the
    difference between two successive panel halvings; the finer value is
    returned. Refinement continues until the estimate is below ``spec.tol``.

    Raises
    ------
    QuadratureError
        If the estimate is still above tolerance after
        ``spec.max_refinements`` halvings, or the grid exceeds the point budget.
    """
    axes = list(axes)
    if len(axes) != group.dim:
        raise ValueError(f"box has {len(axes)} axes, group has dimension {group.dim}")
    m = spec.nodes_per_panel
    coarse = _tensor_sum(group, integrand, [axis_rule(a, m, 0) for a in axes], spec.max_points,
                         haar)
    err = math.inf
    for level in range(1, spec.max_refinements + 2):
        try:
            fine = _tensor_sum(group, integrand, [axis_rule(a, m, level) for a in axes],
                               spec.max_points, haar)
        except QuadratureError as exc:
            raise QuadratureError(str(exc), value=complex(coarse).real, estimate=err) from None
        err = float(abs(fine - coarse))
        if err <= spec.tol:
            return Estimate(_scalar(fine), err)
        coarse = fine
    raise QuadratureError(
        f"estimated error {err:.3e} above tolerance {spec.tol:.1e}", value=_scalar(coarse),
        estimate=err)


def _scalar(v):
    v = complex(v)
    return v.real if v.imag == 0 else v
