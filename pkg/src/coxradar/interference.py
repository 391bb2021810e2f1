"""Closed-form interfering intervals on crossing streets.

Coordinates: the ego street is the y axis, the ego radar sits at ``(0, r0)``
and looks along ``(0, 1)``. A street ``(theta, r)`` crosses it at signed
distance ``d = r / sin(theta) - r0`` from the ego. Positions on the crossing
street are measured by ``v``, the signed distance from the crossing point
along the street direction whose y component is non-negative, so the radar
at ``v`` is at distance ``sqrt((d + v|cos t|)^2 + (v sin t)^2)`` from the ego.

Radars in ``[a, b]`` are mutually inside each other's sectors with the ego.
Eight angular events A1..A8 (two per quadrant) make up the admissible set;
"narrow" events (the street within ``omega`` of the ego street) allow
crossings behind the ego, "wide" events (between ``omega`` and ``2 omega``)
only ahead of it, where the near edge of the ego's beam may cap ``b``.
"""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass
from enum import Enum
from typing import Optional

import numpy as np
from scipy import integrate

from .geometry import PARALLEL_TOL, TWO_PI, BlpSpec

HALF_PI = 0.5 * math.pi


class CaseEvent(Enum):
    A1 = 1
    A2 = 2
    A3 = 3
    A4 = 4
    A5 = 5
    A6 = 6
    A7 = 7
    A8 = 8

    @property
    def quadrant(self) -> int:
        return (self.value + 1) // 2

    @property
    def narrow(self) -> bool:
        return self in _NARROW


_NARROW = frozenset({CaseEvent.A1, CaseEvent.A4, CaseEvent.A5, CaseEvent.A8})
# events whose printed `a` uses |sin(theta - omega)| vs |sin(theta + omega)|
_MINUS = frozenset({CaseEvent.A2, CaseEvent.A6})


def classify(theta: float, omega: float) -> Optional[CaseEvent]:
    """Event A1..A8 containing ``theta`` (taken mod 2pi), or None outside them."""
    t = theta % TWO_PI
    pi = math.pi
    if t <= HALF_PI:
        if t <= omega:
            return CaseEvent.A1
        if t <= 2 * omega:
            return CaseEvent.A2
    elif t <= pi:
        if pi - t < omega:
            return CaseEvent.A4
        if pi - t <= 2 * omega:
            return CaseEvent.A3
    elif t <= 1.5 * pi:
        if t - pi <= omega:
            return CaseEvent.A5
        if t - pi <= 2 * omega:
            return CaseEvent.A6
    else:
        if TWO_PI - t < omega:
            return CaseEvent.A8
        if TWO_PI - t <= 2 * omega:
            return CaseEvent.A7
    return None


@dataclass(frozen=True)
class InterferenceInterval:
    a: float
    b: float
    empty: bool
    case_id: str = ""

    @property
    def length(self) -> float:
        return 0.0 if self.empty else self.b - self.a

    @classmethod
    def none(cls, case_id: str = "none") -> "InterferenceInterval":
        return cls(0.0, 0.0, True, case_id)


def thresholds(theta: float, omega: float, R_k: float) -> tuple[float, float]:
    """``(c1, c2)``: where the street meets the beam edge and arc together,
    and the farthest crossing that still leaves interferers."""
    S = abs(math.sin(theta))
    C = abs(math.cos(theta))
    c1 = R_k * math.sin(omega) * (1.0 / math.tan(omega) - C / S)
    c2 = R_k * math.sin(omega) / S
    return c1, c2


def _check(theta, d, omega, R_k):
    for name, val in (("theta", theta), ("d", d), ("omega", omega), ("R_k", R_k)):
        if not math.isfinite(val):
            raise ValueError(f"{name} must be finite, got {val!r}")
    if not 0 < omega < HALF_PI:
        raise ValueError(f"omega must be in (0, pi/2), got {omega}")
    if R_k <= 0:
        raise ValueError(f"R_k must be > 0, got {R_k}")


def _interval(theta, d, omega, R_k, *, plcp: bool, as_printed: bool) -> InterferenceInterval:
    _check(theta, d, omega, R_k)
    ev = classify(theta, omega)
    if ev is None:
        return InterferenceInterval.none("outside")
    S = abs(math.sin(theta))
    if S < PARALLEL_TOL:
        return InterferenceInterval.none("parallel")
    C = abs(math.cos(theta))
    c1, c2 = thresholds(theta, omega, R_k)
    cot = 1.0 / math.tan(omega)
    arc_b = math.sqrt(max(R_k * R_k - (d * S) ** 2, 0.0)) - d * C
    tag = ev.name

    if plcp:
        # the crossing lies ahead of the ego only for streets in quadrants 1-2
        if (d >= 0) != (ev.quadrant <= 2):
            return InterferenceInterval.none(tag + ":sign")

    if ev.narrow:
        if 0 <= d <= c2:
            return InterferenceInterval(d * (S * cot - C), arc_b, False, tag + ":arc")
        if c1 <= d < 0:
            return InterferenceInterval(d / (S * cot - C), arc_b, False, tag + ":behind")
        return InterferenceInterval.none(tag + ":far")

    if not 0 <= d <= c2:
        return InterferenceInterval.none(tag + ":far")
    shift = -omega if ev in _MINUS else omega
    a = d * abs(math.sin(theta + shift)) / math.sin(omega)
    if d <= c1:
        if as_printed and not plcp and ev.quadrant > 2:
            # printed b table lists the edge branch for quadrants 1-2 only
            return InterferenceInterval.none(tag + ":printed-gap")
        b = d * math.tan(omega) / (S - math.tan(omega) * C)
        return InterferenceInterval(a, b, False, tag + ":edge")
    if as_printed and plcp:
        # printed PLCP b table lists the arc branch for narrow events only
        return InterferenceInterval.none(tag + ":printed-gap")
    return InterferenceInterval(a, arc_b, False, tag + ":arc")


def interval_blcp(
    theta_i: float,
    d_i: float,
    omega: float,
    R_B: float,
    *,
    ego_street: bool = False,
    target_range: float = 0.0,
    as_printed: bool = False,
) -> InterferenceInterval:
    """Interfering interval ``[a, b]`` on a BLCP street.

    ``ego_street=True`` is the ``(theta_0, r_0) = (0, 0)`` branch and returns
    ``[target_range, R_B]``. ``as_printed=True`` reproduces the published
    case table verbatim, including its missing branch; the default follows
    the exact geometry.
    """
    if ego_street:
        return InterferenceInterval(target_range, R_B, target_range >= R_B, "ego")
    return _interval(theta_i, d_i, omega, R_B, plcp=False, as_printed=as_printed)


def interval_plcp(
    theta_i: float,
    u_i: float,
    omega: float,
    R_P: float,
    *,
    ego_street: bool = False,
    target_range: float = 0.0,
    as_printed: bool = False,
) -> InterferenceInterval:
    """Interfering interval for a PLCP street (ego at the origin, so ``d = u``).

    Angular cases are those of the PLCP table: for ``r > 0`` the crossing is
    ahead of the ego exactly when ``theta`` is in the upper half plane.
    """
    if ego_street:
        return InterferenceInterval(target_range, R_P, target_range >= R_P, "ego")
    return _interval(theta_i, u_i, omega, R_P, plcp=True, as_printed=as_printed)


def ego_distance(d_i: float, theta_i: float, v: float, is_ego_street: bool = False) -> float:
    if is_ego_street:
        return v
    return math.hypot(d_i + v * abs(math.cos(theta_i)), v * math.sin(theta_i))


def position_on_line(theta: float, u: float, v: float) -> tuple[float, float]:
    """Plane coordinates of the point ``v`` along the street from its crossing ``(0, u)``."""
    sgn = 1.0 if math.cos(theta) >= 0 else -1.0
    return (-sgn * v * math.sin(theta), u + sgn * v * math.cos(theta))


# ---------------------------------------------------------------------------
# integration over the space of streets


class QuadratureError(RuntimeError):
    """Adaptive quadrature failed to reach the requested tolerance."""


def quad(f, a, b, *, epsabs=1e-10, epsrel=1e-8, points=None, limit=200, what="integral"):
    """``scipy.integrate.quad`` that raises instead of warning."""
    if b <= a:
        return 0.0
    pts = None
    if points:
        pts = sorted(p for p in points if a < p < b) or None
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        val, err, _info, *msg = integrate.quad(
            f, a, b, epsabs=epsabs, epsrel=epsrel, points=pts, limit=limit, full_output=1
        )
    # a trailing message means QUADPACK flagged a problem; roundoff-limited
    # results are kept when the error estimate is still small
    if msg and err > 10 * max(epsabs, epsrel * abs(val)):
        raise QuadratureError(
            f"{what} on [{a:g}, {b:g}] did not converge: value={val:.6g}, "
            f"error estimate={err:.3g}: {msg[0]}"
        )
    return val


def street_integral(fn, omega, R_k, *, r0=0.0, r_max=math.inf, epsabs=1e-8, epsrel=1e-8):
    """``int_0^{r_max} int_0^{2pi} fn(theta, d) dtheta dr`` over streets ``(theta, r)``.

    The interval depends on ``theta`` only through ``|sin|``, ``|cos|`` and
    the sign of the crossing, so the four angles ``phi, pi - phi, pi + phi,
    2pi - phi`` fold onto ``phi`` in ``(0, min(2 omega, pi/2))`` (two per sign
    of ``u``), and ``dr = sin(phi) du`` turns the radius into the crossing
    coordinate. ``fn`` is called with the representative angle ``phi``
    (crossing ahead) or ``pi + phi`` (behind), and only where the interval
    can be non-empty.
    """
    top = min(2 * omega, HALF_PI)

    def inner(phi):
        S = math.sin(phi)
        if S <= 0:
            return 0.0
        c1, c2 = thresholds(phi, omega, R_k)
        lo = min(c1, 0.0)
        hi = c2
        if math.isfinite(r_max):
            lo = max(lo, -r_max / S - r0)
            hi = min(hi, r_max / S - r0)
        if hi <= lo:
            return 0.0
        behind = math.pi + phi
        return S * quad(lambda d: fn(phi if d >= 0 else behind, d), lo, hi,
                        points=(0.0, c1), epsabs=epsabs, epsrel=epsrel,
                        what="crossing integral")

    return 2.0 * quad(inner, 0.0, top, points=(omega,), epsabs=epsabs, epsrel=epsrel,
                      what="angle integral")


def _mean_length_fn(omega, R_k):
    def fn(phi, d):
        return interval_blcp(phi, d, omega, R_k).length
    return fn


@dataclass(frozen=True)
class MeanInterferers:
    corrected: float
    as_printed: float
    ego_street: float
    per_line_average: float


def mean_interferers_blcp(
    r0: float,
    cfg,
    spec: BlpSpec,
    lam: float,
    *,
    radial_limit: str = "R_g",
    ego_street_from_target: bool = True,
) -> MeanInterferers:
    """Average number of interferers seen by an ego radar at ``(0, r0)``.

    ``corrected`` adds the ego-street contribution to ``lam * n_B`` times the
    average interval length of one BLP street. ``as_printed`` evaluates the
    published expression literally: ``lam`` times the average length (over
    ``r`` in ``[0, R_B]``, normalized by ``2 pi R_B``) raised to ``n_B``.
    """
    if lam < 0:
        raise ValueError("lam must be >= 0")
    R_k = cfg.R_k
    fn = _mean_length_fn(cfg.omega, R_k)
    r_lim = spec.R_g if radial_limit == "R_g" else R_k
    if radial_limit not in ("R_g", "R_B"):
        raise ValueError("radial_limit must be 'R_g' or 'R_B'")
    avg = street_integral(fn, cfg.omega, R_k, r0=r0, r_max=r_lim) / (TWO_PI * r_lim)
    ego = lam * (R_k - cfg.R if ego_street_from_target else R_k)
    printed_avg = street_integral(fn, cfg.omega, R_k, r0=r0, r_max=R_k) / (TWO_PI * R_k)
    with np.errstate(over="ignore"):
        printed = lam * float(np.power(printed_avg, spec.n_B))
    return MeanInterferers(
        corrected=ego + lam * spec.n_B * avg,
        as_printed=printed,
        ego_street=ego,
        per_line_average=avg,
    )


def mean_interferers_plcp(cfg, lambda_L: float, lam: float, *,
                          ego_street_from_target: bool = True) -> float:
    """PLCP counterpart: ego street plus ``lam * lambda_L`` times the
    integrated interval length over all streets."""
    fn = _mean_length_fn(cfg.omega, cfg.R_k)
    total = street_integral(fn, cfg.omega, cfg.R_k) if lambda_L > 0 else 0.0
    ego = lam * (cfg.R_k - cfg.R if ego_street_from_target else cfg.R_k)
    return ego + lam * lambda_L * total


# ---------------------------------------------------------------------------
# tables

TABLE_FIELDS = ("theta", "d", "a", "b", "empty", "case_id")


def interval_table(thetas, ds, omega, R_k, *, model="BLCP"):
    fn = interval_blcp if model == "BLCP" else interval_plcp
    rows = []
    for t in thetas:
        for d in ds:
            iv = fn(float(t), float(d), omega, R_k)
            rows.append((float(t), float(d), iv.a, iv.b, iv.empty, iv.case_id))
    return rows


def write_interval_csv(rows, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(TABLE_FIELDS)
        for t, d, a, b, e, cid in rows:
            w.writerow([repr(t), repr(d), repr(a), repr(b), int(e), cid])
