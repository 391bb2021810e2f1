"""JSON experiment configs, sweeps and the file pipelines behind the CLI."""

from __future__ import annotations

import copy
import csv
import hashlib
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from importlib import resources
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import cityfit
from .cox import BLCP, PLCP
from .detection import (
    DetectionCurve,
    RadarConfig,
    density_crossing,
    lin_to_db,
    p_d_blcp,
    p_d_plcp,
    pdf_estimate,
    write_curve_csv,
)
from .geometry import BlpSpec
from .interference import mean_interferers_blcp, mean_interferers_plcp
from .montecarlo import (
    Scenario,
    binomial_se,
    build_tables,
    ccdf,
    interferer_counts,
    mc_sweep,
    received_powers,
    sir_values,
)
from .sector import EITHER

ANALYTIC = "analytic"
MC = "mc"
BOTH = "both"
METHODS = (ANALYTIC, MC, BOTH)

# sweep names in the config, and how each maps onto a scenario
SWEEP_VARIABLES = {
    "R": "m",
    "lam": "1/m",
    "omega_deg": "deg",
    "beta_db": "dB",
    "lambda_L": "1/m",
    "n_B": "lines",
    "r0": "m",
}


class ConfigError(ValueError):
    pass


def load_defaults() -> dict:
    text = resources.files("coxradar").joinpath("profiles/defaults.json").read_text("utf-8")
    return json.loads(text)


def _merge(base: dict, over: dict) -> dict:
    out = copy.deepcopy(base)
    for k, v in over.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _merge(out[k], v)
        else:
            out[k] = v
    return out


def load_config(path=None, **overrides) -> dict:
    """Defaults profile, overlaid by the JSON file at ``path`` and ``overrides``."""
    cfg = load_defaults()
    if path is not None:
        try:
            with open(path, encoding="utf-8") as fh:
                cfg = _merge(cfg, json.load(fh))
        except (OSError, json.JSONDecodeError) as e:
            raise ConfigError(f"cannot read config {path}: {e}") from e
    cfg = _merge(cfg, {k: v for k, v in overrides.items() if v is not None})
    validate(cfg)
    return cfg


def validate(cfg: dict) -> None:
    try:
        if cfg["model"] not in (PLCP, BLCP):
            raise ConfigError(f"model must be PLCP or BLCP, got {cfg['model']!r}")
        if cfg["method"] not in METHODS:
            raise ConfigError(f"method must be one of {METHODS}")
        sw = cfg.get("sweep")
        if sw is not None:
            var, grid = sw["variable"], sw["grid"]
            if var not in SWEEP_VARIABLES:
                raise ConfigError(f"unknown sweep variable {var!r}")
            if not grid:
                raise ConfigError("sweep grid is empty")
            if any(b <= a for a, b in zip(grid, grid[1:])):
                raise ConfigError("sweep grid must be strictly increasing")
            if var == "r0" and cfg["model"] == PLCP:
                raise ConfigError("r0 can only be swept for BLCP")
        if int(cfg["seed"]) < 0 or int(cfg["n_realizations"]) < 1:
            raise ConfigError("seed must be >= 0 and n_realizations >= 1")
        scenario(cfg)
    except KeyError as e:
        raise ConfigError(f"missing config key {e}") from e
    except ConfigError:
        raise
    except (TypeError, ValueError) as e:
        raise ConfigError(str(e)) from e


def config_hash(cfg: dict) -> str:
    blob = json.dumps(cfg, sort_keys=True, separators=(",", ":")).encode()
    return hashlib.sha256(blob).hexdigest()[:12]


def radar_config(block: dict) -> RadarConfig:
    b = dict(block)
    omega = math.radians(b.pop("omega_deg"))
    return RadarConfig(omega=omega, **b)


def scenario(cfg: dict) -> Scenario:
    p = cfg["process"]
    o = cfg.get("options", {})
    radar = radar_config(cfg["radar"])
    tr = p.get("target_range")
    return Scenario(
        model=cfg["model"],
        radar=radar,
        lam=float(p["lam"]),
        lambda_L=float(p["lambda_L"]),
        n_B=int(p["n_B"]),
        R_g=float(p["R_g"]),
        r0=float(p.get("r0", 0.0)) if cfg["model"] == BLCP else 0.0,
        heading_mode=o.get("heading_mode", EITHER),
        ego_street_from_target=bool(o.get("ego_street_from_target", True)),
        noise=bool(o.get("noise", False)),
        target_range=None if tr is None else (float(tr[0]), float(tr[1])),
    )


def _at(scn: Scenario, variable: str, x: float) -> tuple[Scenario, Optional[float]]:
    """Scenario with one swept value applied; second item is a beta override."""
    if variable == "R":
        return replace(scn, radar=replace(scn.radar, R=x)), None
    if variable == "omega_deg":
        return replace(scn, radar=replace(scn.radar, omega=math.radians(x))), None
    if variable == "beta_db":
        return scn, x
    if variable == "n_B":
        return replace(scn, n_B=int(x)), None
    return replace(scn, **{variable: x}), None


def analytic_point(scn: Scenario, beta_db: float) -> float:
    if scn.target_range is not None:
        raise ConfigError("the analytic path needs a fixed target range")
    kw = dict(ego_street_from_target=scn.ego_street_from_target,
              heading_mode=scn.heading_mode, noise=scn.noise)
    if scn.model == PLCP:
        return p_d_plcp(beta_db, scn.radar, scn.lambda_L, scn.lam, **kw)
    return p_d_blcp(scn.r0, beta_db, scn.radar, BlpSpec(scn.n_B, scn.R_g), scn.lam, **kw)


def _analytic_job(args):
    scn, variable, x, beta = args
    s, b = _at(scn, variable, x)
    return analytic_point(s, beta if b is None else b)


def analytic_sweep(scn: Scenario, variable: str, grid: Sequence[float], beta_db: float,
                   *, threads: int = 1) -> DetectionCurve:
    grid = [float(x) for x in grid]
    jobs = [(scn, variable, x, beta_db) for x in grid]
    if threads > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=threads) as ex:
            ps = list(ex.map(_analytic_job, jobs))
    else:
        ps = [_analytic_job(j) for j in jobs]
    betas = grid if variable == "beta_db" else [beta_db] * len(grid)
    return DetectionCurve(variable, SWEEP_VARIABLES[variable], list(zip(grid, ps)),
                          "analytic", betas)


_MC_NAMES = {"R": "R", "lam": "lam", "beta_db": "beta", "lambda_L": "lambda_L", "n_B": "n_B"}


def mc_curve(scn: Scenario, variable: str, grid: Sequence[float], beta_db: float,
             n_real: int, seed: int, *, threads: int = 1) -> DetectionCurve:
    """Monte Carlo counterpart of :func:`analytic_sweep` (common random numbers)."""
    grid = [float(x) for x in grid]
    if variable == "omega_deg":
        c = mc_sweep(scn, "omega", [math.radians(x) for x in grid], beta_db, n_real, seed,
                     threads=threads)
        return DetectionCurve(variable, "deg", list(zip(grid, map(float, c.p))), c.method, c.beta_db,
                              seed=seed, stderr=c.stderr)
    if variable == "r0":
        ps = []
        for x in grid:
            s = replace(scn, r0=x)
            t = build_tables(s, n_real, seed, threads=threads)
            ps.append(float(ccdf(sir_values(t, s), [beta_db])[0]))
        se = binomial_se(np.array(ps), n_real)
        return DetectionCurve(variable, "m", list(zip(grid, ps)), "monte_carlo",
                              [beta_db] * len(grid), seed=seed, stderr=[float(v) for v in se])
    c = mc_sweep(scn, _MC_NAMES[variable], grid, beta_db, n_real, seed, threads=threads)
    return DetectionCurve(variable, SWEEP_VARIABLES[variable], c.points, c.method, c.beta_db,
                          seed=seed, stderr=c.stderr)


def run_experiment(cfg: dict, out_dir, *, threads: int = 1) -> list[Path]:
    """Write the detection curve(s) of ``cfg`` into ``out_dir``; returns the paths."""
    validate(cfg)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    scn = scenario(cfg)
    h = config_hash(cfg)
    sw = cfg["sweep"]
    var, grid = sw["variable"], sw["grid"]
    beta = float(cfg["beta_db"])
    seed = int(cfg["seed"])
    n_real = int(cfg["n_realizations"])
    method = cfg["method"]
    stem = cfg.get("name", "curve")
    written = []
    curves = {}
    if method in (ANALYTIC, BOTH):
        curves[ANALYTIC] = analytic_sweep(scn, var, grid, beta, threads=threads)
    if method in (MC, BOTH):
        curves[MC] = mc_curve(scn, var, grid, beta, n_real, seed, threads=threads)
    for key, c in curves.items():
        path = out / f"{stem}_{key}.csv"
        write_curve_csv([c], path, h)
        written.append(path)
    if method == BOTH:
        path = out / f"{stem}_comparison.csv"
        a, m = curves[ANALYTIC], curves[MC]
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["sweep_value", "p_d_analytic", "p_d_mc", "stderr", "delta",
                        "beta_db", "seed", "config_hash"])
            for (x, pa), (_, pm), se, b in zip(a.points, m.points, m.stderr, a.beta_db):
                w.writerow([*(repr(float(v)) for v in (x, pa, pm, se, pm - pa, b)), seed, h])
        written.append(path)
    return written


def run_interferers(cfg: dict, out_dir, *, threads: int = 1) -> Path:
    """Mean interferer counts along the sweep (analytic variants, plus MC when asked)."""
    validate(cfg)
    scn = scenario(cfg)
    h = config_hash(cfg)
    sw = cfg.get("sweep") or {"variable": "r0", "grid": [scn.r0]}
    var, grid = sw["variable"], [float(x) for x in sw["grid"]]
    if var == "beta_db":
        raise ConfigError("interferer counts do not depend on beta")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    path = out / f"{cfg.get('name', 'curve')}_interferers.csv"
    seed = int(cfg["seed"])
    do_mc = cfg["method"] in (MC, BOTH)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["sweep_value", "corrected", "as_printed", "mc_mean", "mc_stderr",
                    "seed", "config_hash"])
        for x in grid:
            s, _ = _at(scn, var, x)
            if s.model == BLCP:
                m = mean_interferers_blcp(s.r0, s.radar, BlpSpec(s.n_B, s.R_g), s.lam,
                                          ego_street_from_target=s.ego_street_from_target)
                corr, printed = m.corrected, m.as_printed
            else:
                corr = mean_interferers_plcp(s.radar, s.lambda_L, s.lam,
                                             ego_street_from_target=s.ego_street_from_target)
                printed = math.nan
            mc_mean = mc_se = math.nan
            if do_mc:
                t = build_tables(s, int(cfg["n_realizations"]), seed, threads=threads)
                c = interferer_counts(t, s)
                mc_mean = float(c.mean())
                mc_se = float(c.std(ddof=1) / math.sqrt(c.size)) if c.size > 1 else 0.0
            w.writerow([*(repr(float(v)) for v in (x, corr, printed, mc_mean, mc_se)),
                        seed if do_mc else "", h])
    return path


def run_pdf(cfg: dict, out_dir, *, threads: int = 1, bins: int = 200) -> tuple[Path, float]:
    """Received-power densities (dBm) with and without the target echo."""
    validate(cfg)
    scn = scenario(cfg)
    h = config_hash(cfg)
    si, i = received_powers(scn, int(cfg["n_realizations"]), int(cfg["seed"]), threads=threads)
    a, b = lin_to_db(si) + 30.0, lin_to_db(i) + 30.0
    hist = pdf_estimate([a, b], bins=bins)
    cross = density_crossing(hist)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    path = out / f"{cfg.get('name', 'curve')}_pdf.csv"
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["bin_center_db", "density_signal_plus_interference",
                    "density_interference_only", "seed", "config_hash"])
        for x, f, g in zip(hist.bin_centers_db, *hist.densities):
            w.writerow([repr(float(x)), repr(float(f)), repr(float(g)), cfg["seed"], h])
    return path, cross


# ---------------------------------------------------------------------------
# cities


def fit_city(city: cityfit.CityInputs) -> dict:
    lam_L = cityfit.fit_plp_density(city.meta.street_density_per_area)
    fit = cityfit.fit_blp_params(city.curve)
    prof = cityfit.CongestionProfile(city.congestion, fleet_size=city.meta.fleet_size,
                                     road_length_total=city.meta.road_length_m)
    return {
        "city": city.name,
        "lambda_L_hat": lam_L,
        "n_B_hat": fit.n_B_rounded,
        "n_B_continuous": fit.n_B,
        "R_g_hat_m": fit.R_g,
        "fit_residual_rms_log": fit.residual,
        "lambda_max_hat": prof.peak_lambda,
        "hourly_lambda": [float(v) for v in cityfit.hourly_lambda(prof)],
    }


def _hourly_job(args):
    radar, beta, lam_L, n_B, R_g, r0s, lam = args
    row = [p_d_plcp(beta, radar, lam_L, lam)]
    row += [p_d_blcp(r0, beta, radar, BlpSpec(n_B, R_g), lam) for r0 in r0s]
    return row


def run_cityfit(cfg: dict, city_dirs: Sequence, out_dir, *, threads: int = 1,
                hourly: bool = True) -> list[Path]:
    """Fit each city and (optionally) compute its hourly analytic detection curve."""
    if not city_dirs:
        raise ConfigError("no city directories given")
    validate(cfg)
    h = config_hash(cfg)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    fits = []
    for d in city_dirs:
        try:
            city = cityfit.read_city(d)
        except (OSError, KeyError) as e:
            raise ConfigError(f"{d}: {e}") from e
        fits.append(fit_city(city))
    fit_path = out / "city_fits.json"
    fit_path.write_text(json.dumps({"config_hash": h, "method": ANALYTIC, "cities": fits},
                                   indent=2, sort_keys=True) + "\n", encoding="utf-8")
    written = [fit_path]
    if not hourly:
        return written
    radar = radar_config(cfg["radar"])
    beta = float(cfg["beta_db"])
    r0s = [float(x) for x in cfg.get("city_r0", [0.0, 10000.0])]
    jobs = [(radar, beta, f["lambda_L_hat"], f["n_B_hat"], f["R_g_hat_m"], r0s, lam)
            for f in fits for lam in f["hourly_lambda"]]
    if threads > 1:
        with ProcessPoolExecutor(max_workers=threads) as ex:
            rows = list(ex.map(_hourly_job, jobs))
    else:
        rows = [_hourly_job(j) for j in jobs]
    path = out / "hourly_pd.csv"
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["city", "hour", "lambda", "p_d_plcp",
                    *[f"p_d_blcp_r0_{r0:g}" for r0 in r0s], "method", "config_hash"])
        k = 0
        for f in fits:
            for hour, lam in enumerate(f["hourly_lambda"]):
                w.writerow([f["city"], hour, repr(float(lam)),
                            *(repr(float(v)) for v in rows[k]), ANALYTIC, h])
                k += 1
    written.append(path)
    return written

