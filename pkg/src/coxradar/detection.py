"""Channel model, SIR, and the analytic detection probability.

All dB inputs are converted to linear SI units at the :class:`RadarConfig`
boundary. The analytic path ignores noise by default (pure SIR), as the
closed forms do; ``noise=True`` multiplies in the exact noise factor that
the exponential RCS produces.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

from .geometry import TWO_PI, BlpSpec
from .interference import (
    QuadratureError,
    interval_blcp,
    interval_plcp,
    quad,
    street_integral,
)
from .sector import ACTUAL, EITHER, interfering_mask

SPEED_OF_LIGHT = 299_792_458.0
P_D_ABS_TOL = 1e-4


def db_to_lin(x):
    return 10.0 ** (np.asarray(x, dtype=float) / 10.0)


def lin_to_db(x):
    return 10.0 * np.log10(x)


@dataclass(frozen=True)
class RadarConfig:
    P_dBm: float = 10.0
    sigma_bar_dBsm: float = 30.0
    alpha: float = 2.0
    G_t_dBi: float = 10.0
    G_r_dBi: float = 10.0
    f_c: float = 76.5e9
    W: float = 25e3
    N_d_dBm_Hz: float = -174.0
    omega: float = math.radians(7.5)
    R: float = 15.0
    R_k: float = 500.0

    def __post_init__(self):
        for k, v in self.__dict__.items():
            if not math.isfinite(v):
                raise ValueError(f"{k} must be finite, got {v!r}")
        if self.alpha < 2:
            raise ValueError(f"alpha must be >= 2, got {self.alpha}")
        if not 0 < self.omega < math.pi / 2:
            raise ValueError(f"omega must be in (0, pi/2) rad, got {self.omega}")
        if not 0 < self.R < self.R_k:
            raise ValueError(f"need 0 < R < R_k, got R={self.R}, R_k={self.R_k}")
        if self.f_c <= 0 or self.W <= 0:
            raise ValueError("f_c and W must be positive")

    @property
    def P(self) -> float:
        """Transmit power in watts."""
        return float(db_to_lin(self.P_dBm - 30.0))

    @property
    def sigma_bar(self) -> float:
        """Mean RCS in m^2."""
        return float(db_to_lin(self.sigma_bar_dBsm))

    @property
    def G_t(self) -> float:
        return float(db_to_lin(self.G_t_dBi))

    @property
    def G_r(self) -> float:
        return float(db_to_lin(self.G_r_dBi))

    @property
    def A_e(self) -> float:
        wavelength = SPEED_OF_LIGHT / self.f_c
        return self.G_r * wavelength**2 / (4 * math.pi)

    @property
    def gamma_const(self) -> float:
        return self.G_t * self.A_e / (4 * math.pi) ** 2

    @property
    def noise_power(self) -> float:
        """N = N_d W in watts."""
        return float(db_to_lin(self.N_d_dBm_Hz - 30.0)) * self.W

    def with_omega_deg(self, deg: float) -> "RadarConfig":
        return replace(self, omega=math.radians(deg))


@dataclass(frozen=True)
class ChannelDraw:
    sigma_c: float
    h_w: np.ndarray = field(default_factory=lambda: np.zeros(0))

    @classmethod
    def sample(cls, g: np.random.Generator, cfg: RadarConfig, n_interferers: int):
        return cls(float(g.exponential(cfg.sigma_bar)), g.exponential(1.0, n_interferers))


def signal_power(cfg: RadarConfig, sigma_c: float, R: Optional[float] = None) -> float:
    R = cfg.R if R is None else R
    return cfg.gamma_const * sigma_c * cfg.P * R ** (-2 * cfg.alpha)


def interference_power(cfg: RadarConfig, h, dist) -> np.ndarray:
    """Per-interferer power as it enters the SIR denominator (with its 4 pi factor)."""
    h = np.asarray(h, dtype=float)
    dist = np.asarray(dist, dtype=float)
    return 4 * math.pi * cfg.gamma_const * cfg.P * h * dist ** (-cfg.alpha)


def sir_from_distances(cfg, sigma_c, h, dist, *, noise=False, R=None) -> float:
    s = signal_power(cfg, sigma_c, R)
    denom = float(np.sum(interference_power(cfg, h, dist)))
    if noise:
        denom += cfg.noise_power
    if denom == 0.0:
        return math.inf
    return s / denom


def sir_sample(net, cfg: RadarConfig, draws: ChannelDraw, *, mask=None, noise=False,
               **mask_kw) -> float:
    """SIR (linear) of one realization; ``inf`` when nothing interferes and N = 0.

    ``draws.h_w`` holds one fading power per interferer, in vehicle order.
    """
    if mask is None:
        mask = interfering_mask(net, cfg.omega, cfg.R_k, **mask_kw)
    v = net.vehicles
    dist = np.hypot(v.x[mask] - net.ego[0], v.y[mask] - net.ego[1])
    if draws.h_w.size != dist.size:
        raise ValueError(f"need {dist.size} fading draws, got {draws.h_w.size}")
    return sir_from_distances(cfg, draws.sigma_c, draws.h_w, dist, noise=noise,
                              R=net.target_range)


# ---------------------------------------------------------------------------
# analytic detection probability


def beta_prime(cfg: RadarConfig, beta_db: float) -> float:
    beta = float(db_to_lin(beta_db))
    return 4 * math.pi * beta * cfg.R ** (2 * cfg.alpha) / cfg.sigma_bar


def _laplace_segment(bp, alpha, a, b, d, S, C):
    """``int_a^b 1 - 1/(1 + bp w^-alpha) dv`` with ``w^2 = (v + d C)^2 + (d S)^2``."""
    if b <= a:
        return 0.0
    if alpha == 2:
        q = math.sqrt((d * S) ** 2 + bp)
        return bp / q * (math.atan((b + d * C) / q) - math.atan((a + d * C) / q))

    def f(v):
        w2 = (v + d * C) ** 2 + (d * S) ** 2
        return bp / (w2 ** (alpha / 2) + bp)

    return quad(f, a, b, epsabs=1e-12, epsrel=1e-10, what="interferer integral")


def ego_street_exponent(cfg: RadarConfig, beta_db: float, lam: float, *,
                        from_target: bool = True) -> float:
    """``lam * int_lo^{R_k} 1 - 1/(1 + beta' v^-alpha) dv`` with ``lo = R`` or 0."""
    if lam == 0:
        return 0.0
    lo = cfg.R if from_target else 0.0
    return lam * _laplace_segment(beta_prime(cfg, beta_db), cfg.alpha, lo, cfg.R_k, 0.0, 0.0, 1.0)


def _cross_lambda(lam: float, heading_mode: str) -> float:
    if heading_mode == EITHER:
        return lam
    if heading_mode == ACTUAL:
        # only the radars facing the ego (half of them) can interfere
        return 0.5 * lam
    raise ValueError(f"unknown heading_mode {heading_mode!r}")


def _outage_fn(cfg, beta_db, lam, interval_fn):
    bp = beta_prime(cfg, beta_db)

    def fn(theta, d):
        iv = interval_fn(theta, d, cfg.omega, cfg.R_k)
        if iv.empty:
            return 0.0
        S, C = abs(math.sin(theta)), abs(math.cos(theta))
        return -math.expm1(-lam * _laplace_segment(bp, cfg.alpha, iv.a, iv.b, d, S, C))

    return fn


def _noise_factor(cfg, beta_db, noise):
    if not noise:
        return 1.0
    beta = float(db_to_lin(beta_db))
    return math.exp(-beta * cfg.noise_power / signal_power(cfg, cfg.sigma_bar))


def _finish(p: float) -> float:
    if not (math.isfinite(p) and -1e-12 <= p <= 1 + 1e-12):
        raise QuadratureError(f"detection probability out of range: {p!r}")
    return min(max(p, 0.0), 1.0)


def p_d_plcp(beta_db: float, cfg: RadarConfig, lambda_L: float, lam: float, *,
             ego_street_from_target: bool = True, heading_mode: str = EITHER,
             noise: bool = False) -> float:
    """Detection probability of the ego radar in a PLCP network."""
    if lambda_L < 0 or lam < 0:
        raise ValueError("intensities must be non-negative")
    if not math.isfinite(beta_db):
        raise ValueError("beta must be finite (in dB)")
    expo = ego_street_exponent(cfg, beta_db, lam, from_target=ego_street_from_target)
    lam_x = _cross_lambda(lam, heading_mode)
    if lambda_L > 0 and lam_x > 0:
        fn = _outage_fn(cfg, beta_db, lam_x, interval_plcp)
        tol = P_D_ABS_TOL * 1e-2 / lambda_L
        expo += lambda_L * street_integral(fn, cfg.omega, cfg.R_k, epsabs=tol)
    return _finish(math.exp(-expo) * _noise_factor(cfg, beta_db, noise))


def p_d_blcp(r0: float, beta_db: float, cfg: RadarConfig, blp: BlpSpec, lam: float, *,
             ego_street_from_target: bool = True, heading_mode: str = EITHER,
             noise: bool = False) -> float:
    """Detection probability of an ego radar at ``(0, r0)`` in a BLCP network.

    The per-street average over the generating disk is raised to ``n_B``.
    """
    if lam < 0:
        raise ValueError("intensities must be non-negative")
    if not (math.isfinite(beta_db) and math.isfinite(r0)):
        raise ValueError("beta and r0 must be finite")
    p = math.exp(-ego_street_exponent(cfg, beta_db, lam, from_target=ego_street_from_target))
    lam_x = _cross_lambda(lam, heading_mode)
    if blp.n_B > 0 and lam_x > 0:
        fn = _outage_fn(cfg, beta_db, lam_x, interval_blcp)
        norm = TWO_PI * blp.R_g
        tol = P_D_ABS_TOL * 1e-2 * norm / blp.n_B
        miss = street_integral(fn, cfg.omega, cfg.R_k, r0=r0, r_max=blp.R_g, epsabs=tol)
        p *= (1.0 - miss / norm) ** blp.n_B
    return _finish(p * _noise_factor(cfg, beta_db, noise))


# ---------------------------------------------------------------------------
# curves and histograms


@dataclass
class DetectionCurve:
    sweep_variable: str
    units: str
    points: list[tuple[float, float]]
    method: str
    beta_db: list[float]
    seed: Optional[int] = None
    stderr: Optional[list[float]] = None

    def __post_init__(self):
        xs = [x for x, _ in self.points]
        if any(b <= a for a, b in zip(xs, xs[1:])):
            raise ValueError("sweep values must be strictly increasing")
        if any(not 0.0 <= p <= 1.0 for _, p in self.points):
            raise ValueError("detection probabilities must lie in [0, 1]")
        if (self.method == "monte_carlo") != (self.seed is not None):
            raise ValueError("a seed is required exactly for Monte Carlo curves")

    @property
    def x(self) -> np.ndarray:
        return np.array([x for x, _ in self.points])

    @property
    def p(self) -> np.ndarray:
        return np.array([p for _, p in self.points])

    def rows(self, config_hash: str = ""):
        se = self.stderr or [0.0] * len(self.points)
        for (x, p), s, b in zip(self.points, se, self.beta_db):
            yield {
                "sweep_value": x,
                "p_d": p,
                "method": self.method,
                "stderr": s,
                "beta_db": b,
                "seed": "" if self.seed is None else self.seed,
                "config_hash": config_hash,
            }


CURVE_FIELDS = ("sweep_value", "p_d", "method", "stderr", "beta_db", "seed", "config_hash")


def write_curve_csv(curves: Sequence[DetectionCurve], path, config_hash: str = "") -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.DictWriter(fh, fieldnames=CURVE_FIELDS, lineterminator="\n")
        w.writeheader()
        for c in curves:
            for row in c.rows(config_hash):
                w.writerow({k: (repr(float(v)) if isinstance(v, float) else v) for k, v in row.items()})


@dataclass
class Histogram:
    bin_centers_db: np.ndarray
    densities: list[np.ndarray]
    degenerate: bool = False


def pdf_estimate(samples_db: Sequence[np.ndarray], bins=200, range_db=None) -> Histogram:
    """Normalized histograms of one or more sample sets on a shared dB axis."""
    arrs = [np.asarray(s, dtype=float) for s in samples_db]
    arrs = [a[np.isfinite(a)] for a in arrs]
    if any(a.size < 1000 for a in arrs):
        raise ValueError("need at least 1000 finite samples per density")
    if range_db is None:
        lo = min(a.min() for a in arrs)
        hi = max(a.max() for a in arrs)
    else:
        lo, hi = range_db
    if hi <= lo:
        # all samples identical: a single spike of unit mass
        centers = np.array([lo])
        return Histogram(centers, [np.array([1.0]) for _ in arrs], degenerate=True)
    edges = np.linspace(lo, hi, bins + 1)
    dens = [np.histogram(a, bins=edges, density=True)[0] for a in arrs]
    return Histogram(0.5 * (edges[:-1] + edges[1:]), dens)


def density_crossing(hist: Histogram, lo_db=None, hi_db=None, smooth: int = 5) -> float:
    """Location where the first density overtakes the second, between their modes.

    Densities are smoothed with a ``smooth``-bin moving average first; the
    crossing is linearly interpolated between bins.
    """
    if hist.degenerate or len(hist.densities) != 2:
        raise ValueError("need two non-degenerate densities")
    x = hist.bin_centers_db
    k = np.ones(smooth) / smooth
    f, g = (np.convolve(d, k, mode="same") for d in hist.densities)
    lo = x[np.argmax(g)] if lo_db is None else lo_db
    hi = x[np.argmax(f)] if hi_db is None else hi_db
    lo, hi = min(lo, hi), max(lo, hi)
    sel = np.flatnonzero((x >= lo) & (x <= hi))
    diff = f[sel] - g[sel]
    change = np.flatnonzero((diff[:-1] < 0) & (diff[1:] >= 0))
    if change.size == 0:
        raise ValueError("densities do not cross between their modes")
    i = sel[change[0]]
    d0, d1 = f[i] - g[i], f[i + 1] - g[i + 1]
    return float(x[i] + (x[i + 1] - x[i]) * (-d0) / (d1 - d0))
