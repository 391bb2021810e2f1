"""Radar sectors and the mutual-interference predicate.

A radar at ``apex`` on a line with generating angle ``theta`` looks along
``orientation * (-sin theta, cos theta)``. Its sector is the set of points at
angle strictly less than ``omega`` from that boresight and at distance at most
``range``. Comparisons are exact; boundary hits have probability zero.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .cox import NetworkRealization

EITHER = "either"
ACTUAL = "actual"


@dataclass(frozen=True)
class SectorSpec:
    apex: tuple[float, float]
    theta: float
    orientation: int
    omega: float
    range: float

    def __post_init__(self):
        if self.orientation not in (1, -1):
            raise ValueError("orientation must be +1 or -1")
        if not 0 < self.omega < math.pi / 2:
            raise ValueError(f"omega must be in (0, pi/2), got {self.omega}")
        if not self.range > 0:
            raise ValueError(f"range must be > 0, got {self.range}")

    @property
    def boresight(self) -> tuple[float, float]:
        o = self.orientation
        return (-o * math.sin(self.theta), o * math.cos(self.theta))


def in_sector(p: tuple[float, float], s: SectorSpec) -> bool:
    """Point-in-sector test. The apex itself is outside (no direction)."""
    dx, dy = p[0] - s.apex[0], p[1] - s.apex[1]
    n = math.hypot(dx, dy)
    if n == 0.0:
        return False
    ax, ay = s.boresight
    return (dx * ax + dy * ay) / n > math.cos(s.omega) and n <= s.range


def in_sector_many(px, py, apex_x, apex_y, bx, by, omega, rng_max) -> np.ndarray:
    """Vectorized :func:`in_sector`; every argument may be an array."""
    dx = np.asarray(px, dtype=float) - apex_x
    dy = np.asarray(py, dtype=float) - apex_y
    n = np.hypot(dx, dy)
    with np.errstate(invalid="ignore", divide="ignore"):
        cosang = (dx * bx + dy * by) / n
    return (n > 0) & (cosang > math.cos(omega)) & (n <= rng_max)


def mutual(px, py, vtheta, vsign, ego, ego_bore, omega, rng_max, heading_mode=EITHER):
    """Mask of radars at ``(px, py)`` that interfere with the ego radar.

    The ego must lie in the radar's sector and the radar in the ego's sector.
    With ``heading_mode="either"`` a radar counts if either of its two
    boresights works (the indicator sum of the interference-set definition);
    with ``"actual"`` only its own heading ``vsign`` is tested.
    """
    px = np.asarray(px, dtype=float)
    py = np.asarray(py, dtype=float)
    ex, ey = ego
    seen = in_sector_many(px, py, ex, ey, ego_bore[0], ego_bore[1], omega, rng_max)
    bx, by = -np.sin(vtheta), np.cos(vtheta)
    if heading_mode == EITHER:
        fwd = in_sector_many(ex, ey, px, py, bx, by, omega, rng_max)
        back = in_sector_many(ex, ey, px, py, -bx, -by, omega, rng_max)
        sees = fwd | back
    elif heading_mode == ACTUAL:
        sg = np.asarray(vsign)
        sees = in_sector_many(ex, ey, px, py, sg * bx, sg * by, omega, rng_max)
    else:
        raise ValueError(f"unknown heading_mode {heading_mode!r}")
    return seen & sees


def interfering_mask(
    net: NetworkRealization,
    omega: float,
    max_range: float,
    *,
    heading_mode: str = EITHER,
    ego_street_min: float = 0.0,
) -> np.ndarray:
    """Boolean mask over ``net.vehicles`` selecting the interfering set.

    ``ego_street_min`` drops ego-street radars closer than that distance
    (set it to the target range to match the ego-street integral starting at R).
    """
    v = net.vehicles
    if len(v) == 0:
        return np.zeros(0, dtype=bool)
    theta = net.line_theta()[v.line_index]
    m = mutual(v.x, v.y, theta, v.heading_sign, net.ego, net.ego_heading,
               omega, max_range, heading_mode)
    if ego_street_min > 0:
        on_l0 = v.line_index == 0
        dist = np.hypot(v.x - net.ego[0], v.y - net.ego[1])
        m &= ~(on_l0 & (dist < ego_street_min))
    return m


def interfering_set(net: NetworkRealization, cfg, **kw) -> list:
    """Interfering vehicles as :class:`~coxradar.cox.VehiclePoint` objects.

    ``cfg`` is anything with ``omega`` and ``R_k`` attributes (a RadarConfig).
    """
    m = interfering_mask(net, cfg.omega, cfg.R_k, **kw)
    return [net.vehicle(k) for k in np.flatnonzero(m)]
