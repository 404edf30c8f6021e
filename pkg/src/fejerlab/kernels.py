"""Approximate-identity kernel families.

Every family factorises over chart axes once the Haar density is absorbed, so
masses of coordinate boxes come from products of one-dimensional CDFs:

========================  =========  ==========================================
family                    group      one-dimensional factor(s)
========================  =========  ==========================================
``fejer``                 T          ``K_n(t) = sin^2((n+1) pi t) / ((n+1) sin^2(pi t))``
``sqfejer``               T^d        ``K_n`` per axis
``poisson``               R          ``P(t) = theta / (pi (theta^2 + t^2))``
``poissond``              R^d        ``P`` per axis
``semicircle``            R          ``W(t) = 2 sqrt(theta^2 - t^2) / (pi theta^2)``
``semicircle:LAMBDA``     R          ``W(t - c)`` with left mass ``LAMBDA``
``semicircled:LAMBDA``    R^d        shifted ``W`` per axis
``axbphi``                ax+b       uniform on ``(1-theta, 1+theta)`` times ``W`` in b
``heisw3``                H          ``W`` in each of a, b, c
========================  =========  ==========================================
"""
from __future__ import annotations

import enum
import math
import numbers
from dataclasses import dataclass, field, replace
from functools import lru_cache
from typing import Sequence

import numpy as np

from . import groups
from .errors import ConfigurationError, ParamError
from .groups import GroupChart, GroupKind
from .quadrature import Axis, QuadratureSpec, integrate_box


class KernelKind(enum.Enum):
    FEJER = "fejer"
    SQUARE_FEJER = "sqfejer"
    POISSON = "poisson"
    POISSON_PRODUCT = "poissond"
    SEMICIRCLE = "semicircle"
    SHIFTED_SEMICIRCLE = "semicircle:"
    SHIFTED_SEMICIRCLE_PRODUCT = "semicircled:"
    AXB_PHI = "axbphi"
    HEISENBERG_W3 = "heisw3"


_FEJER_KINDS = (KernelKind.FEJER, KernelKind.SQUARE_FEJER)
_POISSON_KINDS = (KernelKind.POISSON, KernelKind.POISSON_PRODUCT)
_SEMICIRCLE_KINDS = (KernelKind.SEMICIRCLE, KernelKind.SHIFTED_SEMICIRCLE,
                     KernelKind.SHIFTED_SEMICIRCLE_PRODUCT)


# One-dimensional closed forms.

def fejer(n: int, t) -> np.ndarray:
    """Fejer kernel ``K_n(t)`` in closed form, extended continuously at integers."""
    t = np.asarray(t, dtype=float)
    s = t - np.round(t)
    m = n + 1
    with np.errstate(invalid="ignore", divide="ignore"):
        val = np.sin(m * np.pi * s) ** 2 / (m * np.sin(np.pi * s) ** 2)
    # Below 1e-8 the quotient loses digits; use the Taylor expansion.
    small = np.abs(s) < 1e-8
    if np.any(small):
        val = np.where(small, m * (1.0 - (np.pi * s) ** 2 * (m * m - 1) / 3.0), val)
    return val


def eval_fejer_sum_form(n: int, t) -> np.ndarray:
    """``sum_{|j|<=n} (1 - |j|/(n+1)) e(jt)``, written as a cosine sum."""
    if n < 0:
        raise ParamError("n must be nonnegative")
    t = np.asarray(t, dtype=float)
    j = np.arange(1, n + 1)
    coef = 1.0 - j / (n + 1.0)
    return 1.0 + 2.0 * np.sum(coef * np.cos(2.0 * np.pi * np.multiply.outer(t, j)), axis=-1)


def fejer_cdf(n: int, t) -> np.ndarray:
    """``int_0^t K_n``; valid for any real ``t`` (gains 1 per period)."""
    t = np.asarray(t, dtype=float)
    j = np.arange(1, n + 1)
    coef = (1.0 - j / (n + 1.0)) / (np.pi * j)
    # Reduce j t mod 1 first so the sines vanish to rounding at t = 1/2 and t = 1.
    phase = np.multiply.outer(t, j)
    phase = phase - np.round(phase)
    return t + np.sum(coef * np.sin(2.0 * np.pi * phase), axis=-1)


def poisson(theta: float, t) -> np.ndarray:
    t = np.asarray(t, dtype=float)
    return 1.0 / (np.pi * theta * (1.0 + (t / theta) ** 2))


def poisson_cdf(theta: float, t) -> np.ndarray:
    return 0.5 + np.arctan(np.asarray(t, dtype=float) / theta) / np.pi


def semicircle(theta: float, t) -> np.ndarray:
    t = np.asarray(t, dtype=float)
    gap = np.clip((theta - t) * (theta + t), 0.0, None)
    return np.where(np.abs(t) <= theta, 2.0 / (np.pi * theta ** 2) * np.sqrt(gap), 0.0)


def semicircle_cdf(x, theta: float) -> np.ndarray:
    """Mass of the unshifted semicircle on ``(-inf, x]``."""
    s = np.clip(np.asarray(x, dtype=float) / theta, -1.0, 1.0)
    return 0.5 + (s * np.sqrt((1.0 - s) * (1.0 + s)) + np.arcsin(s)) / np.pi


@lru_cache(maxsize=1024)
def semicircle_shift(theta: float, lam: float) -> float:
    """Shift ``c`` such that ``W_theta(t - c)`` has mass ``lam`` on ``(-inf, 0)``.

    Bisection on the unit semicircle CDF, run until the bracket stops
    shrinking, then scaled by ``theta``.
    """
    if not theta > 0:
        raise ParamError("theta must be positive")
    if not 0 < lam < 1:
        raise ParamError("lambda must lie in (0, 1)")
    lo, hi = -1.0, 1.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            break
        if semicircle_cdf(mid, 1.0) < lam:
            lo = mid
        else:
            hi = mid
    return -theta * 0.5 * (lo + hi)


def _interval_mass(cdf, lo: float, hi: float) -> float:
    return float(cdf(hi) - cdf(lo)) if hi > lo else 0.0


@dataclass(frozen=True)
class SupportAxis:
    """Per-axis support descriptor: ``finite``, ``full-circle`` or ``heavy-tail``."""

    lo: float
    hi: float
    marker: str = "finite"


@dataclass(frozen=True)
class ApproxIdentityRow:
    param: float
    l1_norm: float
    mass: float
    tails: dict


@dataclass(frozen=True)
class ApproxIdentityReport:
    family: str
    C: float
    rows: list
    violations: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations


@dataclass(frozen=True)
class KernelFamily:
    kind: KernelKind
    dim: int = 1
    lam: float | None = None

    def __post_init__(self):
        one_d = (KernelKind.FEJER, KernelKind.POISSON, KernelKind.SEMICIRCLE,
                 KernelKind.SHIFTED_SEMICIRCLE)
        if self.kind in one_d and self.dim != 1:
            raise ConfigurationError(f"{self.kind.value} is one-dimensional")
        if self.kind is KernelKind.AXB_PHI and self.dim != 2:
            raise ConfigurationError("axbphi lives on the 2-dimensional ax+b chart")
        if self.kind is KernelKind.HEISENBERG_W3 and self.dim != 3:
            raise ConfigurationError("heisw3 lives on the 3-dimensional Heisenberg chart")
        shifted = self.kind in (KernelKind.SHIFTED_SEMICIRCLE,
                                KernelKind.SHIFTED_SEMICIRCLE_PRODUCT)
        if shifted and (self.lam is None or not 0 < self.lam < 1):
            raise ParamError("shifted semicircle needs lambda in (0, 1)")
        if not shifted and self.lam is not None:
            raise ConfigurationError(f"{self.kind.value} takes no lambda")

    # Descriptors

    @property
    def token(self) -> str:
        if self.lam is not None:
            return f"{self.kind.value}{self.lam:g}"
        return self.kind.value

    @property
    def group(self) -> GroupChart:
        if self.kind in _FEJER_KINDS:
            return groups.torus(self.dim)
        if self.kind is KernelKind.AXB_PHI:
            return groups.axb()
        if self.kind is KernelKind.HEISENBERG_W3:
            return groups.heisenberg()
        return groups.euclidean(self.dim)

    @property
    def integer_param(self) -> bool:
        return self.kind in _FEJER_KINDS

    @property
    def compact(self) -> bool:
        return self.kind not in _FEJER_KINDS + _POISSON_KINDS

    def check_param(self, p):
        """Return the validated parameter (``int`` for Fejer families, ``float`` otherwise)."""
        if self.integer_param:
            if isinstance(p, numbers.Integral):
                n = int(p)
            elif isinstance(p, numbers.Real) and float(p).is_integer():
                n = int(p)
            else:
                raise ParamError(f"{self.token}: n must be an integer, got {p!r}")
            if n < 0:
                raise ParamError(f"{self.token}: n must be nonnegative")
            return n
        if not isinstance(p, numbers.Real) or not math.isfinite(p) or p <= 0:
            raise ParamError(f"{self.token}: theta must be a positive real, got {p!r}")
        if self.kind is KernelKind.AXB_PHI and p >= 1:
            raise ParamError("axbphi: theta must lie in (0, 1)")
        return float(p)

    def shift(self, theta: float) -> float:
        return semicircle_shift(theta, self.lam) if self.lam is not None else 0.0

    def scale(self, p) -> float:
        """Effective length scale: ``1/(n+1)`` for Fejer families, else ``theta``."""
        p = self.check_param(p)
        return 1.0 / (p + 1) if self.integer_param else p

    # Evaluation

    def eval(self, p, y) -> np.ndarray:
        """Kernel value at chart point(s) ``y``."""
        p = self.check_param(p)
        g = self.group
        y = g.point(y)
        if self.kind in _FEJER_KINDS:
            return np.prod(fejer(p, y), axis=-1)
        if self.kind in _POISSON_KINDS:
            return np.prod(poisson(p, y), axis=-1)
        if self.kind in _SEMICIRCLE_KINDS:
            return np.prod(semicircle(p, y - self.shift(p)), axis=-1)
        if self.kind is KernelKind.HEISENBERG_W3:
            return np.prod(semicircle(p, y), axis=-1)
        a, b = y[..., 0], y[..., 1]
        inside = (a > 1 - p) & (a < 1 + p) & (np.abs(b) <= p)
        gap = np.clip((p - b) * (p + b), 0.0, None)
        return np.where(inside, a ** 2 / (np.pi * p ** 3) * np.sqrt(gap), 0.0)

    def support(self, p, spec: QuadratureSpec = QuadratureSpec()) -> list[SupportAxis]:
        p = self.check_param(p)
        if self.kind in _FEJER_KINDS:
            return [SupportAxis(-0.5, 0.5, "full-circle")] * self.dim
        if self.kind in _POISSON_KINDS:
            t = p * math.tan(0.5 * math.pi * (1.0 - spec.truncation_eps))
            return [SupportAxis(-t, t, "heavy-tail")] * self.dim
        if self.kind is KernelKind.AXB_PHI:
            return [SupportAxis(1 - p, 1 + p), SupportAxis(-p, p)]
        c = self.shift(p)
        return [SupportAxis(c - p, c + p)] * self.dim

    def quadrature_axes(self, p, spec: QuadratureSpec = QuadratureSpec(),
                        weighted: bool = False) -> list[Axis]:
        """Integration axes covering the support, with the appropriate substitutions.

        With ``weighted=True`` each axis carries its kernel factor (Haar density
        included) as a density, so the product of densities equals
        ``eval(y) * haar_density(y)``.
        """
        p = self.check_param(p)
        sup = self.support(p, spec)
        dens = self.axis_densities(p) if weighted else [None] * self.dim
        if self.kind in _FEJER_KINDS:
            panels = spec.panels_per_oscillation * (p + 1)
            return [Axis(s.lo, s.hi, panels=panels, density=w) for s, w in zip(sup, dens)]
        if self.kind in _POISSON_KINDS:
            return [Axis(s.lo, s.hi, "tan", 0.0, p, spec.base_panels, graded=True, density=w)
                    for s, w in zip(sup, dens)]
        if self.kind is KernelKind.AXB_PHI:
            return [Axis(sup[0].lo, sup[0].hi, panels=spec.base_panels, density=dens[0]),
                    Axis(sup[1].lo, sup[1].hi, "sine", 0.0, p, spec.base_panels, density=dens[1])]
        c = self.shift(p)
        return [Axis(s.lo, s.hi, "sine", c, p, spec.base_panels, density=w)
                for s, w in zip(sup, dens)]

    def axis_densities(self, p) -> list:
        """One-dimensional factors whose product is ``eval(y) * haar_density(y)``."""
        p = self.check_param(p)
        if self.kind in _FEJER_KINDS:
            return [lambda t: fejer(p, t)] * self.dim
        if self.kind in _POISSON_KINDS:
            return [lambda t: poisson(p, t)] * self.dim
        if self.kind is KernelKind.AXB_PHI:
            def uniform(a):
                return np.where((a > 1 - p) & (a < 1 + p), 0.5 / p, 0.0)
            return [uniform, lambda b: semicircle(p, b)]
        c = self.shift(p)
        return [lambda t: semicircle(p, t - c)] * self.dim

    # Masses and bounds

    def _axis_cdfs(self, p):
        if self.kind in _FEJER_KINDS:
            return [lambda t: fejer_cdf(p, t)] * self.dim
        if self.kind in _POISSON_KINDS:
            return [lambda t: poisson_cdf(p, t)] * self.dim
        if self.kind is KernelKind.AXB_PHI:
            return [lambda a: np.clip((np.asarray(a, dtype=float) - (1 - p)) / (2 * p), 0.0, 1.0),
                    lambda b: semicircle_cdf(b, p)]
        c = self.shift(p)
        return [lambda t: semicircle_cdf(np.asarray(t, dtype=float) - c, p)] * self.dim

    def closed_form_mass(self, p, box) -> float | None:
        """Exact mass of an axis-aligned chart box ``[(lo, hi), ...]`` (infinite ends allowed).

        Returns ``None`` when ``box`` is not a sequence of per-axis intervals.
        """
        p = self.check_param(p)
        try:
            intervals = [(float(lo), float(hi)) for lo, hi in box]
        except (TypeError, ValueError):
            return None
        if len(intervals) != self.dim:
            return None
        mass = 1.0
        for cdf, (lo, hi) in zip(self._axis_cdfs(p), intervals):
            mass *= _interval_mass(cdf, lo, hi)
        return mass

    def tail_sup(self, p, r: float) -> float:
        """Upper bound for ``sup |F|`` on ``{gauge_radius >= r}``."""
        p = self.check_param(p)
        if not r > 0:
            raise ValueError("radius must be positive")
        if self.kind in _FEJER_KINDS:
            if r >= 0.5:
                return 0.0
            # One axis sits outside the ball, the others may sit at the peak n+1.
            return (p + 1.0) ** (self.dim - 1) / ((p + 1.0) * math.sin(math.pi * r) ** 2)
        if self.kind in _POISSON_KINDS:
            return p / (math.pi * (p * p + r * r)) * (1.0 / (math.pi * p)) ** (self.dim - 1)
        reach = max(abs(s.lo - e) for s, e in zip(self.support(p), self.group.identity))
        reach = max(reach, max(abs(s.hi - e) for s, e in zip(self.support(p), self.group.identity)))
        if reach <= r:
            return 0.0
        if self.kind is KernelKind.AXB_PHI:
            return (1.0 + p) ** 2 / (math.pi * p * p)
        return (2.0 / (math.pi * p)) ** self.dim

    def numerical_mass(self, p, box=None, spec: QuadratureSpec = QuadratureSpec(),
                       absolute: bool = False, separable: bool = True) -> float:
        """Quadrature of the kernel (or its modulus) over ``box`` intersected with the support.

        Every family factorises over chart axes once the Haar density is
        absorbed, so by default the tensor rule is applied as a product of
        one-dimensional sums, which is the same number at a fraction of the
        cost. ``separable=False`` evaluates :meth:`eval` on the full grid.
        """
        p = self.check_param(p)
        if not separable:
            g = self.group
            f = (lambda y: np.abs(self.eval(p, y))) if absolute else (lambda y: self.eval(p, y))
            return sum(integrate_box(g, f, axes, spec).value
                       for axes in self._clipped_axes(p, box, spec))
        line = groups.euclidean(1)
        dens = self.axis_densities(p)
        if absolute:
            dens = [lambda t, w=w: np.abs(w(t)) for w in dens]
        total = 0.0
        for axes in self._clipped_axes(p, box, spec):
            mass = 1.0
            for axis, w in zip(axes, dens):
                one = replace(axis, density=w)
                mass *= integrate_box(line, lambda y: np.ones(y.shape[:-1]), [one], spec,
                                      haar=False).value
            total += mass
        return total

    def _clipped_axes(self, p, box, spec):
        """Quadrature boxes covering ``box`` intersected with the support."""
        base = self.quadrature_axes(p, spec)
        if box is None:
            return [base]
        per_axis = []
        for axis, (lo, hi) in zip(base, box):
            pieces = _torus_pieces(lo, hi) if self.kind in _FEJER_KINDS else [(lo, hi)]
            clipped = []
            for a, b in pieces:
                c = axis.clip(a, b)
                if c is not None:
                    clipped.append(c)
            if not clipped:
                return []
            per_axis.append(clipped)
        boxes = [[]]
        for options in per_axis:
            boxes = [prev + [o] for prev in boxes for o in options]
        return boxes


def _torus_pieces(lo: float, hi: float) -> list[tuple[float, float]]:
    """Represent a torus arc ``[lo, hi]`` (``hi - lo <= 1``) inside ``[-1/2, 1/2]``."""
    if hi - lo >= 1.0:
        return [(-0.5, 0.5)]
    shift = math.floor(lo + 0.5)
    a, b = lo - shift, hi - shift
    if b <= 0.5:
        return [(a, b)]
    return [(a, 0.5), (-0.5, b - 1.0)]


def tail_boxes(g: GroupChart, r: float) -> list[list[tuple[float, float]]]:
    """Coordinate boxes tiling ``{gauge_radius >= r}`` (torus in ``[-1/2, 1/2]``)."""
    ball = g.gauge_box(r)
    segments = []
    for lo, hi in ball:
        if g.kind is GroupKind.TORUS:
            segments.append([(-0.5, lo), (lo, hi), (hi, 0.5)])
        else:
            floor = 0.0 if (g.kind is GroupKind.AXB and len(segments) == 0) else -math.inf
            segments.append([(floor, lo), (lo, hi), (hi, math.inf)])
    boxes = [([], True)]
    for segs in segments:
        boxes = [(prev + [s], inner and k == 1) for prev, inner in boxes for k, s in enumerate(segs)]
    return [b for b, inner in boxes if not inner]


def tail_mass(k: KernelFamily, p, r: float, spec: QuadratureSpec = QuadratureSpec()) -> float:
    """``int_{gauge >= r} |F|`` by quadrature over the complement of the gauge ball."""
    return sum(k.numerical_mass(p, box, spec, absolute=True) for box in tail_boxes(k.group, r))


def verify_approximate_identity(k: KernelFamily, sweep: Sequence, r_list: Sequence[float],
                                C: float = 1.0,
                                spec: QuadratureSpec = QuadratureSpec()) -> ApproxIdentityReport:
    """Check the three approximate-identity axioms numerically along ``sweep``.

    ``sweep`` must be ordered toward the limit. A violation is flagged when
    ``|mass - 1| > 1e-8``, ``L1 > C + 1e-8``, or a tail mass increases along
    the sweep, or the last tail is not below the first unless all are zero.
    """
    rows, violations = [], []
    for p in sweep:
        p = k.check_param(p)
        l1 = k.numerical_mass(p, None, spec, absolute=True)
        mass = k.numerical_mass(p, None, spec)
        tails = {r: tail_mass(k, p, r, spec) for r in r_list}
        rows.append(ApproxIdentityRow(p, l1, mass, tails))
        if abs(mass - 1.0) > 1e-8:
            violations.append(f"param {p}: total mass {mass!r} differs from 1")
        if l1 > C + 1e-8:
            violations.append(f"param {p}: L1 norm {l1!r} exceeds C={C}")
    for r in r_list:
        seq = [row.tails[r] for row in rows]
        for i in range(1, len(seq)):
            if seq[i] > seq[i - 1] + 1e-12:
                violations.append(f"radius {r}: tail mass increases at step {i}")
        if len(seq) > 1 and seq[0] > 1e-15 and not seq[-1] < seq[0]:
            violations.append(f"radius {r}: tail mass does not decrease")
    return ApproxIdentityReport(k.token, C, rows, violations)


def family_from_token(token: str, group: GroupChart | None = None) -> KernelFamily:
    """Parse a CLI family token; product families take their dimension from ``group``."""
    name, _, arg = token.partition(":")
    dim = group.dim if group is not None else 1
    try:
        lam = float(arg) if arg else None
    except ValueError:
        raise ConfigurationError(f"bad lambda in {token!r}") from None
    table = {
        "fejer": (KernelKind.FEJER, 1),
        "sqfejer": (KernelKind.SQUARE_FEJER, dim),
        "poisson": (KernelKind.POISSON, 1),
        "poissond": (KernelKind.POISSON_PRODUCT, dim),
        "axbphi": (KernelKind.AXB_PHI, 2),
        "heisw3": (KernelKind.HEISENBERG_W3, 3),
    }
    if name == "semicircle":
        kind = KernelKind.SHIFTED_SEMICIRCLE if lam is not None else KernelKind.SEMICIRCLE
        fam = KernelFamily(kind, 1, lam)
    elif name == "semicircled":
        if lam is None:
            raise ConfigurationError("semicircled needs a lambda: semicircled:LAMBDA")
        fam = KernelFamily(KernelKind.SHIFTED_SEMICIRCLE_PRODUCT, dim, lam)
    elif name in table:
        if lam is not None:
            raise ConfigurationError(f"{name} takes no argument")
        kind, d = table[name]
        fam = KernelFamily(kind, d)
    else:
        raise ConfigurationError(f"unknown kernel family {token!r}")
    if group is not None and fam.group != group:
        raise ConfigurationError(f"family {token!r} lives on {fam.group.token}, not {group.token}")
    return fam
