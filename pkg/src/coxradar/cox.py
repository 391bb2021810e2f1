"""Vehicles on streets: 1-D Poisson processes on each line, Palm-conditioned
on an ego radar sitting on its own street ``L0`` (the y axis)."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Iterator, Optional, Sequence

import numpy as np

from . import rng
from .geometry import BLP, PLP, LineSet, chord_in_disk

PLCP = "PLCP"
BLCP = "BLCP"

# extra materialized length beyond R_k; vehicles there can never interfere
DEFAULT_MARGIN = 10.0


@dataclass(frozen=True)
class VehiclePoint:
    line_index: int
    s: float
    position: tuple[float, float]
    heading: tuple[float, float]


@dataclass(frozen=True)
class Extent:
    """Disk inside which each line's vehicles are materialized."""

    cx: float
    cy: float
    radius: float


@dataclass(frozen=True, eq=False)
class VehicleArrays:
    line_index: np.ndarray
    s: np.ndarray
    x: np.ndarray
    y: np.ndarray
    heading_sign: np.ndarray  # +1 -> (-sin t, cos t), -1 -> the opposite

    def __len__(self) -> int:
        return self.s.size

    def __eq__(self, other) -> bool:
        if not isinstance(other, VehicleArrays):
            return NotImplemented
        return all(
            np.array_equal(getattr(self, f), getattr(other, f))
            for f in ("line_index", "s", "x", "y", "heading_sign")
        )

    @classmethod
    def empty(cls) -> "VehicleArrays":
        z = np.zeros(0)
        return cls(np.zeros(0, dtype=int), z, z, z, np.zeros(0, dtype=np.int8))

    @classmethod
    def concat(cls, parts: Sequence["VehicleArrays"]) -> "VehicleArrays":
        return cls(
            *(np.concatenate([getattr(p, f) for p in parts])
              for f in ("line_index", "s", "x", "y", "heading_sign"))
        )


def _line_points(theta, r, s):
    c, sn = np.cos(theta), np.sin(theta)
    return r * c - s * sn, r * sn + s * c


def populate(
    lines: LineSet,
    lam: float,
    extent: Extent,
    seed: int,
    *,
    index: int = 0,
    index_offset: int = 1,
) -> VehicleArrays:
    """Independent 1-D PPPs of intensity ``lam`` on the part of each line inside ``extent``.

    Line ``k`` of ``lines`` gets ``line_index = k + index_offset`` so that
    index 0 stays free for the ego street.
    """
    if not math.isfinite(lam) or lam < 0:
        raise ValueError(f"vehicle intensity must be >= 0, got {lam}")
    if len(lines) == 0 or lam == 0:
        return VehicleArrays.empty()
    g = rng.stream(seed, index, rng.VEHICLES)
    lo, hi = chord_in_disk(lines.theta, lines.r, extent.cx, extent.cy, extent.radius)
    length = np.nan_to_num(hi - lo, nan=0.0)
    counts = g.poisson(lam * length)
    which = np.repeat(np.arange(len(lines)), counts)
    s = np.nan_to_num(lo)[which] + g.random(which.size) * length[which]
    heading = np.where(g.random(which.size) < 0.5, 1, -1).astype(np.int8)
    theta, r = lines.theta[which], lines.r[which]
    x, y = _line_points(theta, r, s)
    return VehicleArrays(which + index_offset, s, x, y, heading)


@dataclass(frozen=True, eq=False)
class NetworkRealization:
    """One Palm-conditioned street/vehicle snapshot.

    ``lines`` is the process as sampled (never modified); line index 0 in
    ``vehicles.line_index`` refers to the ego street, index ``k >= 1`` to
    ``lines[k - 1]``.
    """

    lines: LineSet
    vehicles: VehicleArrays
    ego: tuple[float, float]
    ego_heading: tuple[float, float]
    target_range: float
    model_tag: str

    @property
    def r0(self) -> float:
        return self.ego[1]

    @property
    def target(self) -> tuple[float, float]:
        ex, ey = self.ego
        hx, hy = self.ego_heading
        return (ex + self.target_range * hx, ey + self.target_range * hy)

    @property
    def n_lines(self) -> int:
        """Line count including the ego street."""
        return len(self.lines) + 1

    def line_theta(self) -> np.ndarray:
        return np.concatenate([[0.0], self.lines.theta])

    def line_r(self) -> np.ndarray:
        return np.concatenate([[0.0], self.lines.r])

    def vehicle(self, k: int) -> VehiclePoint:
        v = self.vehicles
        li = int(v.line_index[k])
        th = 0.0 if li == 0 else float(self.lines.theta[li - 1])
        sgn = int(v.heading_sign[k])
        return VehiclePoint(
            li,
            float(v.s[k]),
            (float(v.x[k]), float(v.y[k])),
            (-sgn * math.sin(th), sgn * math.cos(th)),
        )

    def __iter__(self) -> Iterator[VehiclePoint]:
        for k in range(len(self.vehicles)):
            yield self.vehicle(k)


def palm_condition(
    lines: LineSet,
    model: str,
    r0: float,
    lam: float,
    seed: int,
    *,
    index: int = 0,
    target_range: float = 15.0,
    max_range: float = 500.0,
    margin: float = DEFAULT_MARGIN,
) -> NetworkRealization:
    """Add the ego street and its vehicles to a sampled line process.

    The ego sits at ``(0, r0)`` facing ``(0, 1)``. Vehicles are materialized
    within ``max_range + margin`` of the ego. Vehicles on the ego street model
    oncoming traffic and face the ego (heading ``(0, -1)``).
    """
    if model not in (PLCP, BLCP):
        raise ValueError(f"unknown model {model!r}")
    if model == PLCP and r0 != 0:
        raise ValueError("PLCP places the ego at the origin (r0 = 0)")
    expected = PLP if model == PLCP else BLP
    if len(lines) and lines.origin_convention != expected:
        raise ValueError(f"{model} needs a {expected} line set")
    if max_range <= 0 or target_range <= 0:
        raise ValueError("ranges must be positive")

    extent = Extent(0.0, r0, max_range + margin)
    others = populate(lines, lam, extent, seed, index=index)

    ego_parts = [others]
    if lam > 0:
        g = rng.stream(seed, index, rng.EGO_STREET)
        half = extent.radius
        n0 = g.poisson(lam * 2 * half)
        s0 = r0 - half + g.random(n0) * 2 * half
        ego_street = VehicleArrays(
            np.zeros(n0, dtype=int), s0, np.zeros(n0), s0.copy(),
            -np.ones(n0, dtype=np.int8),
        )
        ego_parts.insert(0, ego_street)
    vehicles = VehicleArrays.concat(ego_parts)
    return NetworkRealization(lines, vehicles, (0.0, float(r0)), (0.0, 1.0),
                              float(target_range), model)


CSV_FIELDS = ("line_index", "theta", "r", "s", "x", "y", "heading")


def write_realization_csv(net: NetworkRealization, path) -> None:
    """One row per vehicle; ``heading`` is +1/-1 relative to ``(-sin t, cos t)``."""
    th = net.line_theta()
    rr = net.line_r()
    v = net.vehicles
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(CSV_FIELDS)
        for k in range(len(v)):
            li = int(v.line_index[k])
            w.writerow([li, repr(float(th[li])), repr(float(rr[li])), repr(float(v.s[k])),
                        repr(float(v.x[k])), repr(float(v.y[k])), int(v.heading_sign[k])])


def read_realization_csv(path) -> list[dict]:
    rows = []
    with open(path, newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            rows.append({
                "line_index": int(row["line_index"]),
                **{k: float(row[k]) for k in ("theta", "r", "s", "x", "y")},
                "heading": int(row["heading"]),
            })
    return rows


def make_extent(r0: float, max_range: float, margin: Optional[float] = None) -> Extent:
    return Extent(0.0, r0, max_range + (DEFAULT_MARGIN if margin is None else margin))
