"""Convergence harness: parameter sweeps, predicted limits, order fits and CSV reports."""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .convolution import (ConvolutionProblem, TargetFunction, directional_limits,
                          predicted_limit)
from .errors import ConfigurationError
from .groups import GroupChart
from .kernels import KernelFamily
from .partitions import LocalPartition, masses_converge
from .quadrature import Axis, QuadratureSpec, integrate_box
from . import convolution

CSV_HEADER = "param,conv,quad_err,abs_err,runtime_ms"


@dataclass(frozen=True)
class SweepSpec:
    """Geometric sweep toward the kernel limit.

    ``integer`` mode gives ``n = start * 2^k``; ``real`` mode gives
    ``theta = start * ratio^k`` with ``0 < ratio < 1``.
    """

    mode: str
    start: float
    count: int
    ratio: float = 0.5

    def __post_init__(self):
        if self.mode not in ("integer", "real"):
            raise ConfigurationError(f"unknown sweep mode {self.mode!r}")
        if self.count < 3:
            raise ConfigurationError("a sweep needs at least 3 steps")
        if self.mode == "integer" and (self.start < 1 or int(self.start) != self.start):
            raise ConfigurationError("integer sweeps start at a positive integer")
        if self.mode == "real" and not (self.start > 0 and 0 < self.ratio < 1):
            raise ConfigurationError("real sweeps need start > 0 and 0 < ratio < 1")

    def params(self) -> list:
        if self.mode == "integer":
            return [int(self.start) * 2 ** k for k in range(self.count)]
        return [self.start * self.ratio ** k for k in range(self.count)]

    @classmethod
    def parse(cls, text: str) -> SweepSpec:
        """``n:<start>:<count>`` or ``theta:<start>:<count>[:<ratio>]``."""
        parts = text.split(":")
        try:
            if parts[0] == "n" and len(parts) == 3:
                return cls("integer", int(parts[1]), int(parts[2]))
            if parts[0] == "theta" and len(parts) in (3, 4):
                ratio = float(parts[3]) if len(parts) == 4 else 0.5
                return cls("real", float(parts[1]), int(parts[2]), ratio)
        except ValueError:
            pass
        raise ConfigurationError(
            f"bad sweep {text!r}; use n:<start>:<count> or theta:<start>:<count>[:<ratio>]")


@dataclass(frozen=True)
class StepRecord:
    param: float
    conv: float
    quad_err: float
    abs_err: float
    runtime_ms: float


def _same(a, b) -> bool:
    if isinstance(a, float) and isinstance(b, float) and math.isnan(a) and math.isnan(b):
        return True
    return a == b


@dataclass(frozen=True, eq=False)
class ConvergenceReport:
    steps: tuple[StepRecord, ...]
    predicted: float
    fitted_order: float | str
    verdict: str
    tolerance: float
    reason: str = ""

    @property
    def final_error(self) -> float:
        return self.steps[-1].abs_err if self.steps else math.nan

    def __eq__(self, other):
        # Refused reports carry NaN summaries; compare those as equal.
        if not isinstance(other, ConvergenceReport):
            return NotImplemented
        return self.steps == other.steps and all(
            _same(getattr(self, k), getattr(other, k))
            for k in ("predicted", "fitted_order", "verdict", "tolerance", "reason"))


def fit_order(errors: Sequence[tuple[float, float]], noise: float = 1e-13) -> float | str:
    """Least-squares slope of ``log(error)`` against ``log(scale)``.

    ``errors`` holds ``(scale, error)`` pairs, where scale is ``1/(n+1)`` or
    ``theta``. Errors at or below ``noise`` are discarded; with fewer than
    three left the fit is reported as ``"below-noise"``.
    """
    pts = [(s, e) for s, e in errors if e > noise and s > 0]
    if len(pts) < 3:
        return "below-noise"
    xs = np.log([s for s, _ in pts])
    ys = np.log([e for _, e in pts])
    slope, _ = np.polyfit(xs, ys, 1)
    return float(slope)


def _non_increasing(steps: Sequence[StepRecord], slack: float = 1e-12) -> bool:
    tail = steps[-3:]
    for a, b in zip(tail, tail[1:]):
        if b.abs_err > a.abs_err + a.quad_err + b.quad_err + slack:
            return False
    return True


def _refused(reason: str, tol: float) -> ConvergenceReport:
    return ConvergenceReport((), math.nan, math.nan, "refused", tol, reason)


def run_convergence(g: GroupChart, kernel: KernelFamily, partition: LocalPartition,
                    f: TargetFunction, x, sweep: SweepSpec | Sequence, tolerance: float,
                    spec: QuadratureSpec = QuadratureSpec()) -> ConvergenceReport:
    """Sweep the kernel parameter and compare ``F * f(x)`` with the predicted limit.

    The prediction is ``sum_j lambda_j f(x, A_j)`` with ``lambda_j`` the
    limiting cell masses and ``f(x, A_j)`` measured along probe paths (or
    taken from ``f.declared_limits``). Missing hypotheses produce a
    ``refused`` report instead of a pass or fail.
    """
    if kernel.group != g or partition.group != g or f.group != g:
        raise ConfigurationError("kernel, partition and target must live on the same group")
    params = sweep.params() if isinstance(sweep, SweepSpec) else list(sweep)
    if len(params) < 3:
        raise ConfigurationError("a sweep needs at least 3 steps")
    x = g.point(x)

    mc = masses_converge(partition, kernel, params)
    if not mc.stable:
        return _refused("partition masses do not converge along the sweep", tolerance)
    if f.declared_limits is not None:
        limits = dict(f.declared_limits)
    else:
        measured = directional_limits(partition, f, x)
        unstable = [label for label, d in measured.items() if not d.stable]
        if unstable:
            return _refused("directional limit did not stabilize in cell(s) "
                            + " ".join(unstable), tolerance)
        limits = {label: d.value for label, d in measured.items()}
    predicted = predicted_limit(mc.limit, limits)

    steps = []
    for p in params:
        t0 = time.perf_counter()
        est = convolution.convolve(ConvolutionProblem(g, kernel, p, f, tuple(x), spec))
        ms = 1e3 * (time.perf_counter() - t0)
        steps.append(StepRecord(p, est.value, est.error, abs(est.value - predicted), ms))

    order = fit_order([(kernel.scale(s.param), s.abs_err) for s in steps],
                      noise=max(1e-13, 10 * max(s.quad_err for s in steps)))
    ok = steps[-1].abs_err < tolerance and _non_increasing(steps)
    return ConvergenceReport(tuple(steps), predicted, order, "pass" if ok else "fail", tolerance)


def _fmt(v) -> str:
    if isinstance(v, str):
        return v
    return format(float(v), ".17g")


def format_report(r: ConvergenceReport) -> str:
    lines = [CSV_HEADER]
    for s in r.steps:
        lines.append(",".join(_fmt(v) for v in (s.param, s.conv, s.quad_err, s.abs_err,
                                                  s.runtime_ms)))
    summary = (f"# predicted={_fmt(r.predicted)} fitted_order={_fmt(r.fitted_order)} "
               f"verdict={r.verdict} tol={_fmt(r.tolerance)}")
    if r.reason:
        summary += f" reason={r.reason.replace(' ', '_')}"
    lines.append(summary)
    return "\n".join(lines) + "\n"


def emit_report(r: ConvergenceReport, path) -> Path:
    path = Path(path)
    path.write_text(format_report(r))
    return path


def parse_report(text: str) -> ConvergenceReport:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines or lines[0] != CSV_HEADER:
        raise ValueError("missing report header")
    if not lines[-1].startswith("# "):
        raise ValueError("missing summary line")
    steps = []
    for ln in lines[1:-1]:
        fields = ln.split(",")
        param = int(fields[0]) if fields[0].lstrip("-").isdigit() else float(fields[0])
        steps.append(StepRecord(param, *(float(v) for v in fields[1:])))
    meta = dict(item.split("=", 1) for item in lines[-1][2:].split())
    order = meta["fitted_order"]
    return ConvergenceReport(
        tuple(steps), float(meta["predicted"]),
        order if order == "below-noise" else float(order),
        meta["verdict"], float(meta["tol"]), meta.get("reason", "").replace("_", " "))


def read_report(path) -> ConvergenceReport:
    return parse_report(Path(path).read_text())


@dataclass(frozen=True)
class LebesgueReport:
    x: float
    radii: tuple[float, ...]
    averages: tuple[float, ...]
    limit: float
    lebesgue_point: bool = field(default=False)


def lebesgue_point_check(f: TargetFunction, x: float, radii: Sequence[float],
                         spec: QuadratureSpec = QuadratureSpec(),
                         threshold: float = 1e-6) -> LebesgueReport:
    """Averages ``(1/2r) int_{x-r}^{x+r} |f(y) - f(x)| dy`` over shrinking radii.

    The last average is the limit estimate; ``x`` counts as a Lebesgue point
    when it is below ``threshold``.
    """
    g = f.group
    if g.dim != 1:
        raise ConfigurationError("the Lebesgue-point check is one-dimensional")
    x0 = float(g.point(x)[0])
    fx = float(f(x0))
    jumps = [iface.value for iface in f.jumps if hasattr(iface, "value") and iface.axis == 0
             and not hasattr(iface, "anchor")]
    avgs = []
    for r in radii:
        axis = Axis(x0 - r, x0 + r, panels=spec.base_panels,
                    breaks=tuple(j for j in jumps if x0 - r < j < x0 + r) + (x0,))
        est = integrate_box(g, lambda y: np.abs(f(y) - fx), [axis], spec)
        avgs.append(est.value / (2.0 * r))
    limit = avgs[-1]
    return LebesgueReport(x0, tuple(radii), tuple(avgs), limit, bool(limit < threshold))
