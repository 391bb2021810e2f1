"""Lines in (theta, r) form and the two street models built from them.

A line is the set ``x cos(theta) + y sin(theta) = r``. The Poisson line
process (PLP) draws generating points on the cylinder ``[0, 2pi) x (0, inf)``;
the binomial line process (BLP) draws a fixed number of them on
``[0, pi) x [-R_g, R_g]``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator, Optional

import numpy as np
from scipy import integrate

from . import rng

TWO_PI = 2.0 * math.pi
PARALLEL_TOL = 1e-9

PLP = "PLP"
BLP = "BLP"


def _check_finite(name: str, value: float) -> None:
    if not math.isfinite(value):
        raise ValueError(f"{name} must be finite, got {value!r}")


@dataclass(frozen=True)
class LineParam:
    theta: float
    r: float

    @property
    def normal(self) -> tuple[float, float]:
        return (math.cos(self.theta), math.sin(self.theta))

    @property
    def foot(self) -> tuple[float, float]:
        """Foot of the perpendicular from the origin."""
        return (self.r * math.cos(self.theta), self.r * math.sin(self.theta))

    def residual(self, x: float, y: float) -> float:
        return x * math.cos(self.theta) + y * math.sin(self.theta) - self.r

    def in_plp_domain(self) -> bool:
        return 0.0 <= self.theta < TWO_PI and self.r > 0.0

    def in_blp_domain(self, R_g: float) -> bool:
        return 0.0 <= self.theta < math.pi and -R_g <= self.r <= R_g


def canonicalize(theta: float, r: float) -> LineParam:
    """Map a line to the form with ``r >= 0`` and ``theta`` in ``[0, 2pi)``.

    ``(theta, r)`` and ``(theta + pi, -r)`` describe the same line, so BLP
    lines on ``[0, pi) x [-R_g, R_g]`` and the ``[0, 2pi) x [0, R_g]`` form
    used by the interval tables are interchangeable.
    """
    if r < 0.0:
        theta, r = theta + math.pi, -r
    return LineParam(theta % TWO_PI, r)


def to_blp_form(theta: float, r: float) -> LineParam:
    """Inverse of :func:`canonicalize`: ``theta`` in ``[0, pi)``, signed ``r``."""
    theta = theta % TWO_PI
    if theta >= math.pi:
        theta, r = theta - math.pi, -r
    return LineParam(theta, r)


@dataclass(frozen=True)
class PlpSpec:
    lambda_L: float
    window_radius: float

    def __post_init__(self):
        _check_finite("lambda_L", self.lambda_L)
        _check_finite("window_radius", self.window_radius)
        if self.lambda_L < 0:
            raise ValueError(f"lambda_L must be >= 0, got {self.lambda_L}")
        if self.window_radius <= 0:
            raise ValueError(f"window_radius must be > 0, got {self.window_radius}")

    @property
    def mean_count(self) -> float:
        return self.lambda_L * TWO_PI * self.window_radius


@dataclass(frozen=True)
class BlpSpec:
    n_B: int
    R_g: float

    def __post_init__(self):
        _check_finite("R_g", self.R_g)
        if int(self.n_B) != self.n_B or self.n_B < 0:
            raise ValueError(f"n_B must be a non-negative integer, got {self.n_B}")
        if self.R_g <= 0:
            raise ValueError(f"R_g must be > 0, got {self.R_g}")

    @property
    def equivalent_lambda_L(self) -> float:
        """PLP intensity with the same generating-point density."""
        return self.n_B / (TWO_PI * self.R_g)


@dataclass(frozen=True, eq=False)
class LineSet:
    """Lines stored column-wise; iterate to get :class:`LineParam` values."""

    theta: np.ndarray
    r: np.ndarray
    origin_convention: str
    R_g: Optional[float] = None

    def __post_init__(self):
        theta = np.array(self.theta, dtype=float).reshape(-1)
        r = np.array(self.r, dtype=float).reshape(-1)
        if theta.shape != r.shape:
            raise ValueError("theta and r must have the same length")
        theta.flags.writeable = False
        r.flags.writeable = False
        object.__setattr__(self, "theta", theta)
        object.__setattr__(self, "r", r)

    def __len__(self) -> int:
        return self.theta.size

    def __iter__(self) -> Iterator[LineParam]:
        for t, r in zip(self.theta, self.r):
            yield LineParam(float(t), float(r))

    def __getitem__(self, i: int) -> LineParam:
        return LineParam(float(self.theta[i]), float(self.r[i]))

    def __eq__(self, other) -> bool:
        if not isinstance(other, LineSet):
            return NotImplemented
        return (
            self.origin_convention == other.origin_convention
            and np.array_equal(self.theta, other.theta)
            and np.array_equal(self.r, other.r)
        )

    @property
    def lines(self) -> list[LineParam]:
        return list(self)

    def domain_ok(self) -> bool:
        if self.origin_convention == PLP:
            return bool(np.all((self.theta >= 0) & (self.theta < TWO_PI) & (self.r > 0)))
        R_g = self.R_g if self.R_g is not None else np.inf
        return bool(
            np.all((self.theta >= 0) & (self.theta < math.pi) & (np.abs(self.r) <= R_g))
        )


def sample_plp(spec: PlpSpec, seed: int, *, index: int = 0) -> LineSet:
    """PLP lines whose generating points fall in ``[0, 2pi) x (0, window_radius]``."""
    g = rng.stream(seed, index, rng.LINES)
    k = g.poisson(spec.mean_count) if spec.lambda_L > 0 else 0
    theta = g.uniform(0.0, TWO_PI, size=k)
    # (0, W]: flip the half-open [0, W) draw
    r = spec.window_radius - g.uniform(0.0, spec.window_radius, size=k)
    return LineSet(theta, r, PLP)


def sample_blp(spec: BlpSpec, seed: int, *, index: int = 0) -> LineSet:
    g = rng.stream(seed, index, rng.LINES)
    theta = g.uniform(0.0, math.pi, size=spec.n_B)
    r = g.uniform(-spec.R_g, spec.R_g, size=spec.n_B)
    return LineSet(theta, r, BLP, R_g=spec.R_g)


def intersection_distance(line: LineParam, r0: float) -> Optional[float]:
    """Signed distance along the ego street (the y axis) from ``(0, r0)`` to
    the crossing with ``line``; ``None`` if the two are parallel."""
    s = math.sin(line.theta)
    if abs(s) < PARALLEL_TOL:
        return None
    return line.r / s - r0


def chord_in_disk(theta, r, cx, cy, radius):
    """Parametric range ``(t_lo, t_hi)`` of a line inside a disk.

    The line is parameterized as ``foot + t * (-sin theta, cos theta)``.
    Returns NaNs where the line misses the disk. Works on arrays.
    """
    theta = np.asarray(theta, dtype=float)
    r = np.asarray(r, dtype=float)
    c, s = np.cos(theta), np.sin(theta)
    # distance from the disk centre to the line, and the centre's projection
    off = cx * c + cy * s - r
    t0 = -cx * s + cy * c
    half_sq = radius * radius - off * off
    half = np.sqrt(np.where(half_sq >= 0, half_sq, np.nan))
    return t0 - half, t0 + half


# ---------------------------------------------------------------------------
# BLP line-length density


def blp_length_density(spec: BlpSpec, dist) -> np.ndarray:
    """Expected BLP street length per unit area at distance ``dist`` from the centre.

    Constant ``n_B / (2 R_g)`` inside the generating disk and
    ``n_B asin(R_g / x) / (pi R_g)`` outside it.
    """
    x = np.abs(np.asarray(dist, dtype=float))
    ratio = np.where(x > spec.R_g, spec.R_g / np.maximum(x, spec.R_g), 1.0)
    return spec.n_B * np.arcsin(ratio) / (math.pi * spec.R_g)


def _arc_in_square(x: float, half: float) -> float:
    """Length of the circle of radius ``x`` lying inside the square ``|u|,|v| <= half``."""
    if x <= half:
        return TWO_PI * x
    if x >= half * math.sqrt(2.0):
        return 0.0
    return x * (TWO_PI - 8.0 * math.acos(half / x))


def blp_total_length_in_box(spec: BlpSpec, box_side: float) -> float:
    """Expected total BLP line length inside a centred square of side ``box_side``."""
    _check_finite("box_side", box_side)
    if box_side <= 0:
        raise ValueError(f"box_side must be > 0, got {box_side}")
    if spec.n_B == 0:
        return 0.0
    half = 0.5 * box_side
    x_max = half * math.sqrt(2.0)
    knots = sorted({k for k in (half, spec.R_g) if 0 < k < x_max})
    edges = [0.0, *knots, x_max]
    if spec.R_g < x_max:
        # the tail spans many decades when R_g is tiny; split it per decade
        n_dec = int(math.log10(x_max / spec.R_g))
        edges = sorted(set(edges) | {spec.R_g * 10.0**k for k in range(1, n_dec + 1)})
    # knots that nearly coincide leave slivers quad cannot handle
    edges = [e for i, e in enumerate(edges) if i == 0 or e - edges[i - 1] > 1e-9 * x_max]
    edges[-1] = x_max
    total = 0.0
    for lo, hi in zip(edges[:-1], edges[1:]):
        val, _ = integrate.quad(
            lambda x: float(blp_length_density(spec, x)) * _arc_in_square(x, half),
            lo,
            hi,
            epsabs=0.0,
            epsrel=1e-10,
            limit=200,
        )
        total += val
    return total
