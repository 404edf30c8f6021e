"""Fourier coefficients, partial sums and Cesaro means on T and T^2.

Coefficients come from direct composite quadrature of ``f(x) e(-n x)`` over
``[0, 1)`` with panels split at the target's jumps. All ``|n| <= N`` share
one node set, so a single evaluation of ``f`` yields the whole coefficient
vector. These routines never touch the Fejer kernel and serve as an
independent check of Fejer convolution.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .convolution import CellFace, Hyperplane, TargetFunction
from .errors import ConfigurationError, QuadratureError
from .groups import GroupKind
from .quadrature import Axis, QuadratureSpec, axis_rule


@dataclass(frozen=True)
class FourierCoefficients:
    """Coefficients ``c[n]`` for ``n = -N..N`` (1-D) or ``c[m1, m2]`` (2-D)."""

    N: int
    values: np.ndarray
    error: float

    def __getitem__(self, n):
        if isinstance(n, tuple):
            return self.values[n[0] + self.N, n[1] + self.N]
        return self.values[n + self.N]


def _jump_points(f: TargetFunction, axis: int) -> list[float]:
    """Target-coordinate jump locations along ``axis`` (torus, mod 1)."""
    pts = []
    for iface in f.jumps:
        if iface.axis != axis:
            continue
        if isinstance(iface, Hyperplane):
            pts.append(iface.value % 1.0)
        elif isinstance(iface, CellFace):
            pts.append((iface.anchor[axis] - iface.value) % 1.0)
    return pts


def _torus_axes(f: TargetFunction, N: int, spec: QuadratureSpec) -> list[Axis]:
    panels = max(2 * N, spec.base_panels)
    return [Axis(0.0, 1.0, panels=panels, breaks=tuple(_jump_points(f, i)))
            for i in range(f.group.dim)]


def _coefficients_at(f: TargetFunction, N: int, axes, spec: QuadratureSpec, level: int):
    n = np.arange(-N, N + 1)
    rules = [axis_rule(a, spec.nodes_per_panel, level) for a in axes]
    mats = [w[None, :] * np.exp(-2j * np.pi * np.outer(n, t)) for t, w in rules]
    if len(axes) == 1:
        vals = f(rules[0][0][:, None])
        return mats[0] @ vals
    grid = np.stack(np.meshgrid(rules[0][0], rules[1][0], indexing="ij"), axis=-1)
    vals = f(grid)
    return mats[0] @ vals @ mats[1].T


def fourier_coefficients(f: TargetFunction, N: int,
                         spec: QuadratureSpec = QuadratureSpec()) -> FourierCoefficients:
    """All coefficients with ``|n| <= N`` (per axis) for a target on T or T^2."""
    g = f.group
    if g.kind is not GroupKind.TORUS or g.dim > 2:
        raise ConfigurationError("Fourier coefficients are implemented on T and T^2 only")
    if N < 0:
        raise ValueError("N must be nonnegative")
    axes = _torus_axes(f, N, spec)
    coarse = _coefficients_at(f, N, axes, spec, 0)
    err = math.inf
    for level in range(1, spec.max_refinements + 2):
        fine = _coefficients_at(f, N, axes, spec, level)
        err = float(np.max(np.abs(fine - coarse)))
        if err <= spec.tol:
            return FourierCoefficients(N, fine, err)
        coarse = fine
    raise QuadratureError(f"coefficient error estimate {err:.3e} above tolerance", estimate=err)


def fourier_coeff(f: TargetFunction, n: int, spec: QuadratureSpec = QuadratureSpec()) -> complex:
    """``hat f(n) = int_0^1 f(x) e(-n x) dx`` on T."""
    if f.group.dim != 1:
        raise ConfigurationError("fourier_coeff expects a target on T")
    return complex(fourier_coefficients(f, abs(n), spec)[n])


def _real(z, what: str) -> float:
    z = complex(z)
    if abs(z.imag) > 1e-10:
        raise ArithmeticError(f"{what}: imaginary residue {z.imag:.2e} for a real target")
    return z.real


def _triangle(N: int) -> np.ndarray:
    n = np.arange(-N, N + 1)
    return 1.0 - np.abs(n) / (N + 1.0)


def cesaro_mean(f: TargetFunction, N: int, x, spec: QuadratureSpec = QuadratureSpec(),
                coeffs: FourierCoefficients | None = None) -> float:
    """``sigma_N f(x) = sum_{|n|<=N} (1 - |n|/(N+1)) hat f(n) e(n x)``.

    On T^2 the multiplier is the product of the per-axis triangles.
    """
    c = coeffs if coeffs is not None and coeffs.N == N else fourier_coefficients(f, N, spec)
    x = f.group.point(x)
    n = np.arange(-N, N + 1)
    tri = _triangle(N)
    if f.group.dim == 1:
        return _real(np.sum(tri * c.values * np.exp(2j * np.pi * n * x[0])), "cesaro_mean")
    e0 = tri * np.exp(2j * np.pi * n * x[0])
    e1 = tri * np.exp(2j * np.pi * n * x[1])
    return _real(e0 @ c.values @ e1, "cesaro_mean")


def partial_sum(f: TargetFunction, N: int, x, spec: QuadratureSpec = QuadratureSpec(),
                coeffs: FourierCoefficients | None = None) -> float:
    """``S_N f(x) = sum_{|n|<=N} hat f(n) e(n x)`` on T (square partial sum on T^2)."""
    if coeffs is not None and coeffs.N >= N:
        vals = coeffs.values
        k = coeffs.N - N
        vals = vals[k:k + 2 * N + 1] if vals.ndim == 1 else vals[k:k + 2 * N + 1, k:k + 2 * N + 1]
    else:
        vals = fourier_coefficients(f, N, spec).values
    x = f.group.point(x)
    n = np.arange(-N, N + 1)
    if f.group.dim == 1:
        return _real(np.sum(vals * np.exp(2j * np.pi * n * x[0])), "partial_sum")
    return _real(np.exp(2j * np.pi * n * x[0]) @ vals @ np.exp(2j * np.pi * n * x[1]),
                 "partial_sum")
