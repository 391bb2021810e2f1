"""Seeded Monte Carlo engine for SIR, detection probability and interferer counts.

Each realization is reduced to a table of *candidate* interferers: every
vehicle within ``R_k`` whose mutual-sector cosine beats the widest beamwidth
that will be evaluated. A vehicle interferes at beamwidth ``omega`` iff its
stored cosine exceeds ``cos(omega)``, which is the sector predicate itself.
Vehicles also carry uniform marks so that lower vehicle (or line) intensities
are obtained by thinning. One set of tables therefore serves every point of a
sweep with common random numbers.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from typing import Optional, Sequence

import numpy as np

from . import rng
from .cox import BLCP, DEFAULT_MARGIN, PLCP, NetworkRealization, palm_condition
from .detection import DetectionCurve, RadarConfig, db_to_lin
from .geometry import BlpSpec, PlpSpec, sample_blp, sample_plp
from .sector import ACTUAL, EITHER, interfering_mask


@dataclass(frozen=True)
class Scenario:
    """Everything needed to draw one network snapshot and score it."""

    model: str = PLCP
    radar: RadarConfig = RadarConfig()
    lam: float = 0.01
    lambda_L: float = 300 / (2 * math.pi * 1500)
    n_B: int = 300
    R_g: float = 1500.0
    r0: float = 0.0
    heading_mode: str = EITHER
    ego_street_from_target: bool = True
    noise: bool = False
    # uniform target range on [lo, hi]; None keeps it at radar.R
    target_range: Optional[tuple[float, float]] = None

    def __post_init__(self):
        if self.model not in (PLCP, BLCP):
            raise ValueError(f"unknown model {self.model!r}")
        if self.heading_mode not in (EITHER, ACTUAL):
            raise ValueError(f"unknown heading_mode {self.heading_mode!r}")
        if self.lam < 0 or self.lambda_L < 0:
            raise ValueError("intensities must be non-negative")
        if self.model == PLCP and self.r0 != 0:
            raise ValueError("PLCP places the ego at the origin")
        BlpSpec(self.n_B, self.R_g)
        if self.target_range is not None:
            lo, hi = self.target_range
            if not 0 < lo <= hi:
                raise ValueError("target range must satisfy 0 < lo <= hi")

    def realize(self, seed: int, index: int) -> NetworkRealization:
        """Draw realization ``index`` of root ``seed``."""
        cfg = self.radar
        if self.model == PLCP:
            lines = sample_plp(PlpSpec(self.lambda_L, cfg.R_k + DEFAULT_MARGIN), seed, index=index)
        else:
            lines = sample_blp(BlpSpec(self.n_B, self.R_g), seed, index=index)
        return palm_condition(lines, self.model, self.r0, self.lam, seed, index=index,
                              target_range=cfg.R, max_range=cfg.R_k)


def mutual_cosine(net: NetworkRealization, heading_mode: str = EITHER) -> np.ndarray:
    """Per vehicle, the smaller of the two sector cosines (ego sees vehicle,
    vehicle sees ego). The vehicle is in the interfering set at beamwidth
    ``omega`` iff this exceeds ``cos(omega)`` and it is within range."""
    v = net.vehicles
    dx, dy = v.x - net.ego[0], v.y - net.ego[1]
    n = np.hypot(dx, dy)
    hx, hy = net.ego_heading
    th = net.line_theta()[v.line_index]
    bx, by = -np.sin(th), np.cos(th)
    with np.errstate(invalid="ignore", divide="ignore"):
        c_ego = (dx * hx + dy * hy) / n
        c_back = -(dx * bx + dy * by) / n
    if heading_mode == EITHER:
        c_veh = np.abs(c_back)
    else:
        c_veh = v.heading_sign * c_back
    out = np.minimum(c_ego, c_veh)
    return np.where(n > 0, out, -np.inf)


@dataclass
class CandidateTable:
    """Flattened candidates of many realizations (``rid`` names the realization)."""

    n_real: int
    rid: np.ndarray
    dist: np.ndarray
    cos_need: np.ndarray
    on_ego_street: np.ndarray
    line_index: np.ndarray
    mark: np.ndarray
    line_mark: np.ndarray
    fading: np.ndarray
    rcs_unit: np.ndarray  # per realization, Exp(1)
    target_range: np.ndarray  # per realization

    @classmethod
    def concat(cls, parts: Sequence["CandidateTable"]) -> "CandidateTable":
        offs = np.cumsum([0] + [p.n_real for p in parts[:-1]])
        fields = ("dist", "cos_need", "on_ego_street", "line_index", "mark", "line_mark", "fading")
        return cls(
            int(sum(p.n_real for p in parts)),
            np.concatenate([p.rid + o for p, o in zip(parts, offs)]),
            *(np.concatenate([getattr(p, f) for p in parts]) for f in fields),
            np.concatenate([p.rcs_unit for p in parts]),
            np.concatenate([p.target_range for p in parts]),
        )


def _table_for(scn: Scenario, seed: int, index: int, omega_max: float) -> tuple:
    net = scn.realize(seed, index)
    cfg = scn.radar
    c = mutual_cosine(net, scn.heading_mode)
    v = net.vehicles
    dist = np.hypot(v.x - net.ego[0], v.y - net.ego[1])
    keep = (c > math.cos(omega_max)) & (dist <= cfg.R_k)
    g = rng.stream(seed, index, rng.MARKS)
    # marks are drawn for every vehicle and every line so that thinning is
    # consistent regardless of omega_max
    mark = g.random(len(v))
    line_mark = np.concatenate([[0.0], g.random(len(net.lines))])
    gc = rng.stream(seed, index, rng.CHANNEL)
    rcs = gc.exponential(1.0)
    fading = gc.exponential(1.0, len(v))
    if scn.target_range is None:
        tr = cfg.R
    else:
        tr = rng.stream(seed, index, rng.TARGET).uniform(*scn.target_range)
    li = v.line_index[keep]
    return (dist[keep], c[keep], li == 0, li, mark[keep], line_mark[li], fading[keep], rcs, tr)


def _chunk(args) -> CandidateTable:
    scn, seed, lo, hi, omega_max = args
    rows = [_table_for(scn, seed, i, omega_max) for i in range(lo, hi)]
    sizes = np.array([r[0].size for r in rows], dtype=int)
    cols = [np.concatenate([r[k] for r in rows]) if rows else np.zeros(0) for k in range(7)]
    return CandidateTable(
        hi - lo,
        np.repeat(np.arange(hi - lo), sizes),
        cols[0], cols[1], cols[2].astype(bool), cols[3].astype(int), cols[4], cols[5], cols[6],
        np.array([r[7] for r in rows], dtype=float),
        np.array([r[8] for r in rows], dtype=float),
    )


def build_tables(scn: Scenario, n_real: int, seed: int, *, omega_max: Optional[float] = None,
                 threads: int = 1, chunk: int = 500) -> CandidateTable:
    """Candidate tables for realizations ``0 .. n_real - 1`` of ``seed``.

    Realizations are keyed by index, so the result does not depend on
    ``threads`` or ``chunk``.
    """
    if n_real < 1:
        raise ValueError("need at least one realization")
    om = scn.radar.omega if omega_max is None else omega_max
    jobs = [(scn, seed, lo, min(lo + chunk, n_real), om) for lo in range(0, n_real, chunk)]
    if threads > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=threads) as ex:
            parts = list(ex.map(_chunk, jobs))
    else:
        parts = [_chunk(j) for j in jobs]
    return CandidateTable.concat(parts)


@dataclass(frozen=True)
class Evaluation:
    """Knobs applied to a table by thinning; ``None`` means the scenario value."""

    omega: Optional[float] = None
    lam: Optional[float] = None
    lambda_L: Optional[float] = None
    n_B: Optional[int] = None
    R: Optional[float] = None


def _active(t: CandidateTable, scn: Scenario, ev: Evaluation) -> np.ndarray:
    omega = scn.radar.omega if ev.omega is None else ev.omega
    m = t.cos_need > math.cos(omega)
    if ev.lam is not None:
        if ev.lam > scn.lam:
            raise ValueError("thinning can only lower the vehicle intensity")
        m &= t.mark < (ev.lam / scn.lam if scn.lam > 0 else 0.0)
    if ev.lambda_L is not None:
        if scn.model != PLCP or ev.lambda_L > scn.lambda_L:
            raise ValueError("line thinning needs a PLCP table at a higher lambda_L")
        keep = ev.lambda_L / scn.lambda_L if scn.lambda_L > 0 else 0.0
        m &= t.on_ego_street | (t.line_mark < keep)
    if ev.n_B is not None:
        if scn.model != BLCP or ev.n_B > scn.n_B:
            raise ValueError("line subsetting needs a BLCP table with more lines")
        m &= t.line_index <= ev.n_B
    if scn.ego_street_from_target:
        R = t.target_range[t.rid] if ev.R is None else ev.R
        m &= ~(t.on_ego_street & (t.dist < R))
    return m


def interferer_counts(t: CandidateTable, scn: Scenario, ev: Evaluation = Evaluation()) -> np.ndarray:
    m = _active(t, scn, ev)
    return np.bincount(t.rid[m], minlength=t.n_real)


def sir_values(t: CandidateTable, scn: Scenario, ev: Evaluation = Evaluation()) -> np.ndarray:
    """Linear SIR (or SINR with ``scn.noise``) per realization; ``inf`` if nothing interferes."""
    cfg = scn.radar
    m = _active(t, scn, ev)
    R = t.target_range if ev.R is None else np.full(t.n_real, float(ev.R))
    a = cfg.alpha
    sig = cfg.gamma_const * cfg.sigma_bar * t.rcs_unit * cfg.P * R ** (-2 * a)
    w = 4 * math.pi * cfg.gamma_const * cfg.P * t.fading[m] * t.dist[m] ** (-a)
    denom = np.bincount(t.rid[m], weights=w, minlength=t.n_real)
    if scn.noise:
        denom = denom + cfg.noise_power
    with np.errstate(divide="ignore"):
        return np.where(denom > 0, sig / np.where(denom > 0, denom, 1.0), np.inf)


def binomial_se(p: np.ndarray, n: int) -> np.ndarray:
    return np.sqrt(np.clip(p * (1 - p), 0, None) / n)


def ccdf(sir: np.ndarray, beta_db: Sequence[float]) -> np.ndarray:
    beta = db_to_lin(np.asarray(beta_db, dtype=float))
    return (np.asarray(sir)[None, :] > beta[:, None]).mean(axis=1)


def monte_carlo_pd(scn: Scenario, beta_grid: Sequence[float], n_realizations: int, seed: int,
                   *, threads: int = 1) -> DetectionCurve:
    """Empirical CCDF of the SIR on ``beta_grid`` (dB) with binomial standard errors."""
    t = build_tables(scn, n_realizations, seed, threads=threads)
    p = ccdf(sir_values(t, scn), beta_grid)
    se = binomial_se(p, n_realizations)
    return DetectionCurve("beta", "dB", list(zip(map(float, beta_grid), map(float, p))),
                          "monte_carlo", [float(b) for b in beta_grid], seed=seed,
                          stderr=[float(s) for s in se])


SWEEPABLE = ("R", "lam", "omega", "beta", "lambda_L", "n_B")


def _sweep_scenario(scn: Scenario, variable: str, grid) -> Scenario:
    """Scenario that dominates every grid point, so the table covers them by thinning."""
    top = max(grid)
    if variable == "lam":
        return replace(scn, lam=top)
    if variable == "lambda_L":
        return replace(scn, lambda_L=top)
    if variable == "n_B":
        return replace(scn, n_B=int(top))
    return scn


def mc_sweep(scn: Scenario, variable: str, grid: Sequence[float], beta_db: float,
             n_realizations: int, seed: int, *, threads: int = 1,
             table: Optional[CandidateTable] = None) -> DetectionCurve:
    """Monte Carlo p_D along one parameter with common random numbers.

    ``omega`` values are radians. For ``variable == "beta"`` the grid is in dB
    and ``beta_db`` is ignored.
    """
    if variable not in SWEEPABLE:
        raise ValueError(f"cannot sweep {variable!r}; choose from {SWEEPABLE}")
    grid = [float(x) for x in grid]
    base = _sweep_scenario(scn, variable, grid)
    if table is None:
        om = max(grid) if variable == "omega" else None
        table = build_tables(base, n_realizations, seed, omega_max=om, threads=threads)
    ps, betas = [], []
    for x in grid:
        ev, b = Evaluation(), beta_db
        if variable == "beta":
            b = x
        elif variable == "n_B":
            ev = Evaluation(n_B=int(x))
        else:
            ev = Evaluation(**{variable: x})
        ps.append(float(ccdf(sir_values(table, base, ev), [b])[0]))
        betas.append(b)
    se = binomial_se(np.array(ps), table.n_real)
    return DetectionCurve(variable, _UNITS[variable], list(zip(grid, ps)), "monte_carlo", betas,
                          seed=seed, stderr=[float(s) for s in se])


_UNITS = {"R": "m", "lam": "1/m", "omega": "rad", "beta": "dB", "lambda_L": "1/m",
          "n_B": "lines", "r0": "m"}


def simulate_sir(scn: Scenario, n_realizations: int, seed: int) -> np.ndarray:
    """Direct path: sector predicate on each realization, no tables or thinning.

    Slower than :func:`sir_values`; kept as an independent reference.
    """
    cfg = scn.radar
    out = np.empty(n_realizations)
    for i in range(n_realizations):
        net = scn.realize(seed, i)
        R = cfg.R if scn.target_range is None else rng.stream(seed, i, rng.TARGET).uniform(*scn.target_range)
        m = interfering_mask(net, cfg.omega, cfg.R_k, heading_mode=scn.heading_mode,
                             ego_street_min=R if scn.ego_street_from_target else 0.0)
        v = net.vehicles
        d = np.hypot(v.x[m] - net.ego[0], v.y[m] - net.ego[1])
        gc = rng.stream(seed, i, rng.CHANNEL)
        rcs = gc.exponential(1.0) * cfg.sigma_bar
        h = gc.exponential(1.0, len(v))[m]
        s = cfg.gamma_const * rcs * cfg.P * R ** (-2 * cfg.alpha)
        den = float(np.sum(4 * math.pi * cfg.gamma_const * cfg.P * h * d ** (-cfg.alpha)))
        if scn.noise:
            den += cfg.noise_power
        out[i] = s / den if den > 0 else math.inf
    return out


def mean_interferer_count(scn: Scenario, n_realizations: int, seed: int, *,
                          threads: int = 1) -> tuple[float, float]:
    """Empirical mean size of the interfering set and its standard error."""
    t = build_tables(scn, n_realizations, seed, threads=threads)
    c = interferer_counts(t, scn)
    return float(c.mean()), float(c.std(ddof=1) / math.sqrt(c.size)) if c.size > 1 else 0.0


# ---------------------------------------------------------------------------
# received-power densities


def received_powers(scn: Scenario, n_samples: int, seed: int, *, threads: int = 1):
    """Signal-plus-interference and interference-only received powers in watts.

    Noise is added to both when ``scn.noise`` is set.
    """
    cfg = scn.radar
    t = build_tables(scn, n_samples, seed, threads=threads)
    m = _active(t, scn, Evaluation())
    a = cfg.alpha
    sig = cfg.gamma_const * cfg.sigma_bar * t.rcs_unit * cfg.P * t.target_range ** (-2 * a)
    w = 4 * math.pi * cfg.gamma_const * cfg.P * t.fading[m] * t.dist[m] ** (-a)
    interf = np.bincount(t.rid[m], weights=w, minlength=t.n_real)
    if scn.noise:
        interf = interf + cfg.noise_power
    return sig + interf, interf
