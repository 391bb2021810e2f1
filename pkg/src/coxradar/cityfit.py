"""Fitting the street models to city summaries, and hourly vehicle intensity.

Inputs are pre-extracted CSV summaries of a street network:

* ``street_curve.csv``: ``box_side_m,total_length_m`` for centred square boxes;
* ``congestion.csv``: ``hour,congestion_pct`` for hours 0..23;
* ``city_meta.csv``: one row with ``street_density_per_area,fleet_size,road_length_m``.
"""

from __future__ import annotations

import csv
import itertools
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
from scipy.optimize import least_squares

from .geometry import BlpSpec, blp_total_length_in_box

PEAK_OCCUPANCY = 0.08
N_B_STARTS = np.geomspace(10, 5000, 6)
R_G_STARTS = np.geomspace(100.0, 50_000.0, 6)


class NonIdentifiableError(ValueError):
    """The curve does not pin down both BLP parameters."""

    def __init__(self, msg: str, partial: Optional["BlpFit"] = None):
        super().__init__(msg)
        self.partial = partial


def fit_plp_density(street_density_per_area: float) -> float:
    """PLP line intensity from a street density (m of street per m^2)."""
    if not math.isfinite(street_density_per_area) or street_density_per_area < 0:
        raise ValueError("street density must be a finite non-negative number")
    return street_density_per_area / math.pi


@dataclass(frozen=True)
class StreetLengthCurve:
    box_side: np.ndarray
    total_length: np.ndarray

    def __post_init__(self):
        s = np.asarray(self.box_side, dtype=float).reshape(-1)
        L = np.asarray(self.total_length, dtype=float).reshape(-1)
        if s.shape != L.shape or s.size == 0:
            raise ValueError("curve needs matching, non-empty columns")
        if not (np.all(np.isfinite(s)) and np.all(np.isfinite(L))):
            raise ValueError("curve values must be finite")
        if np.any(s <= 0) or np.any(np.diff(s) <= 0):
            raise ValueError("box sides must be positive and strictly increasing")
        if np.any(L < 0) or np.any(np.diff(L) < 0):
            raise ValueError("total length must be non-negative and non-decreasing")
        object.__setattr__(self, "box_side", s)
        object.__setattr__(self, "total_length", L)

    def __len__(self) -> int:
        return self.box_side.size

    @classmethod
    def from_model(cls, n_B: float, R_g: float, box_sides: Sequence[float]) -> "StreetLengthCurve":
        return cls(np.asarray(box_sides, dtype=float), model_lengths(n_B, R_g, box_sides))


def model_lengths(n_B: float, R_g: float, box_sides) -> np.ndarray:
    """Expected BLP length in each box. Linear in ``n_B``, so non-integer values are fine."""
    unit = BlpSpec(1, R_g)
    return n_B * np.array([blp_total_length_in_box(unit, float(s)) for s in box_sides])


@dataclass(frozen=True)
class BlpFit:
    n_B: float
    R_g: float
    residual: float  # RMS of log residuals
    start: tuple[float, float] = (math.nan, math.nan)

    @property
    def n_B_rounded(self) -> int:
        return int(round(self.n_B))


def _log_resid(x, s, logL):
    n_B, R_g = math.exp(x[0]), math.exp(x[1])
    return np.log(model_lengths(n_B, R_g, s)) - logL


def fit_blp_params(curve: StreetLengthCurve, *, starts=None, refine: int = 3,
                   cond_limit: float = 1e8) -> BlpFit:
    """Least squares on log lengths from a fixed grid of starting points.

    Every start is scored; the ``refine`` best are polished. The winner
    has the lowest residual, ties broken by the start ``(n_B, R_g)`` in
    lexicographic order. Raises
    :class:`NonIdentifiableError` when the curve cannot separate ``n_B``
    from ``R_g`` (e.g. every box lies inside the generating disk, where
    only ``n_B / R_g`` matters).
    """
    if len(curve) < 4:
        raise ValueError("need at least 4 curve points")
    L = curve.total_length
    if np.all(L == 0):
        raise NonIdentifiableError("curve is identically zero; R_g is undetermined",
                                   BlpFit(0.0, math.nan, 0.0))
    if np.any(L == 0):
        raise ValueError("zero length in some boxes but not others cannot come from a BLP")
    s = curve.box_side
    logL = np.log(L)
    grid = starts if starts is not None else list(itertools.product(N_B_STARTS, R_G_STARTS))
    # lengths are linear in n_B, so scoring every start needs one model
    # evaluation per distinct R_g; only the best few are refined
    unit = {r0: np.log(model_lengths(1.0, r0, s)) for r0 in sorted({float(r) for _, r in grid})}
    scored = sorted(
        (float(np.mean((math.log(n0) + unit[float(r0)] - logL) ** 2)), float(n0), float(r0))
        for n0, r0 in grid
    )
    best = None
    for _, n0, r0 in scored[:refine]:
        x0 = np.log([n0, r0])
        try:
            res = least_squares(_log_resid, x0, args=(s, logL), method="lm",
                                xtol=1e-12, ftol=1e-12, gtol=1e-12, max_nfev=400)
        except (ValueError, FloatingPointError):
            continue
        if not np.all(np.isfinite(res.fun)):
            continue
        rms = float(np.sqrt(np.mean(res.fun**2)))
        key = (rms, n0, r0)
        if best is None or key < best[0]:
            best = (key, res)
    if best is None:
        raise NonIdentifiableError("no start converged")
    (rms, n0, r0), res = best
    fit = BlpFit(float(math.exp(res.x[0])), float(math.exp(res.x[1])), rms, (n0, r0))
    sv = np.linalg.svd(res.jac, compute_uv=False)
    if sv[-1] == 0 or sv[0] / sv[-1] > cond_limit:
        raise NonIdentifiableError(
            f"curve only constrains n_B / R_g (Jacobian condition {sv[0] / max(sv[-1], 1e-300):.3g})",
            fit,
        )
    return fit


@dataclass(frozen=True)
class CongestionProfile:
    congestion: np.ndarray  # 24 hourly percentages
    lambda_max: Optional[float] = None
    fleet_size: Optional[float] = None
    road_length_total: Optional[float] = None
    peak_occupancy_fraction: float = PEAK_OCCUPANCY
    C_max: Optional[float] = field(default=None)

    def __post_init__(self):
        c = np.asarray(self.congestion, dtype=float).reshape(-1)
        if c.size != 24:
            raise ValueError(f"need 24 hourly congestion values, got {c.size}")
        if not np.all(np.isfinite(c)) or np.any(c < 0):
            raise ValueError("congestion values must be finite and non-negative")
        object.__setattr__(self, "congestion", c)
        cmax = float(c.max()) if self.C_max is None else float(self.C_max)
        if cmax <= 0:
            raise ValueError("C_max must be positive")
        if np.any(c > cmax):
            raise ValueError("congestion exceeds C_max")
        object.__setattr__(self, "C_max", cmax)
        if self.lambda_max is None:
            if not (self.fleet_size and self.road_length_total):
                raise ValueError("give lambda_max or both fleet_size and road_length_total")
            if self.fleet_size < 0 or self.road_length_total <= 0:
                raise ValueError("fleet_size must be >= 0 and road length > 0")
        elif not (math.isfinite(self.lambda_max) and self.lambda_max >= 0):
            raise ValueError("lambda_max must be finite and non-negative")

    @property
    def peak_lambda(self) -> float:
        if self.lambda_max is not None:
            return float(self.lambda_max)
        return self.peak_occupancy_fraction * self.fleet_size / self.road_length_total


def hourly_lambda(profile: CongestionProfile) -> np.ndarray:
    """Vehicle intensity per hour, proportional to congestion."""
    return profile.peak_lambda * profile.congestion / profile.C_max


# ---------------------------------------------------------------------------
# file I/O


def _rows(path) -> list[dict]:
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    if not rows:
        raise ValueError(f"{path}: no data rows")
    return rows


def read_street_curve(path) -> StreetLengthCurve:
    rows = _rows(path)
    return StreetLengthCurve([float(r["box_side_m"]) for r in rows],
                             [float(r["total_length_m"]) for r in rows])


def read_congestion(path) -> np.ndarray:
    rows = sorted(_rows(path), key=lambda r: int(r["hour"]))
    hours = [int(r["hour"]) for r in rows]
    if hours != list(range(24)):
        raise ValueError(f"{path}: hours must be exactly 0..23")
    return np.array([float(r["congestion_pct"]) for r in rows])


@dataclass(frozen=True)
class CityMeta:
    street_density_per_area: float
    fleet_size: float
    road_length_m: float


def read_city_meta(path) -> CityMeta:
    r = _rows(path)[0]
    return CityMeta(float(r["street_density_per_area"]), float(r["fleet_size"]),
                    float(r["road_length_m"]))


@dataclass(frozen=True)
class CityInputs:
    name: str
    curve: StreetLengthCurve
    congestion: np.ndarray
    meta: CityMeta


def read_city(directory) -> CityInputs:
    d = Path(directory)
    return CityInputs(d.name, read_street_curve(d / "street_curve.csv"),
                      read_congestion(d / "congestion.csv"), read_city_meta(d / "city_meta.csv"))
