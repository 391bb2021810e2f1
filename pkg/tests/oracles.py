"""Brute-force references used by the tests.

Nothing here calls the closed-form interval code; the interval oracle only
uses the sector predicate on explicit plane coordinates.
"""

import math

import numpy as np

from coxradar.geometry import chord_in_disk
from coxradar.sector import mutual

SCAN_STEP = 0.05


def line_points(theta, u, v):
    """Points at signed offset ``v`` from the crossing ``(0, u)``, moving along
    the street direction with non-negative y component."""
    sgn = 1.0 if math.cos(theta) >= 0 else -1.0
    return -sgn * v * math.sin(theta), u + sgn * v * math.cos(theta)


def scan_interval(theta, u, r0, omega, R_k, step=SCAN_STEP, probe=None):
    """Interfering positions on street ``theta`` crossing the ego street at ``y = u``.

    Scans ``v`` on a ``step`` grid over the part of the street within ``R_k``
    of the ego (plus a little padding) and tests the mutual-sector predicate
    at each point. Returns ``(a, b)`` of the true points, or ``None``.
    ``probe`` adds extra candidate positions (used for slivers shorter than
    the grid step).
    """
    d = u - r0
    S, C = abs(math.sin(theta)), abs(math.cos(theta))
    half_sq = R_k * R_k - (d * S) ** 2
    vs = []
    if half_sq >= 0:
        half = math.sqrt(half_sq)
        lo, hi = -d * C - half - 0.1, -d * C + half + 0.1
        n = int(math.ceil((hi - lo) / step)) + 1
        vs.append(lo + step * np.arange(n))
    if probe is not None:
        vs.append(np.atleast_1d(np.asarray(probe, dtype=float)))
    if not vs:
        return None
    v = np.concatenate(vs)
    px, py = line_points(theta, u, v)
    ok = mutual(px, py, theta, np.ones_like(v), (0.0, r0), (0.0, 1.0), omega, R_k)
    if not ok.any():
        return None
    hit = v[ok]
    return float(hit.min()), float(hit.max())


def mc_box_length(n_B, R_g, box_side, n_real, seed):
    """Average total length of ``n_B`` uniform BLP lines clipped to a centred square."""
    g = np.random.default_rng(seed)
    h = 0.5 * box_side
    total = 0.0
    for _ in range(n_real):
        th = g.uniform(0, math.pi, n_B)
        r = g.uniform(-R_g, R_g, n_B)
        total += clipped_length(th, r, h).sum()
    return total / n_real


def clipped_length(theta, r, h):
    """Length of lines ``x cos t + y sin t = r`` inside ``|x|, |y| <= h`` (Liang-Barsky)."""
    c, s = np.cos(theta), np.sin(theta)
    px, py = r * c, r * s
    dx, dy = -s, c
    t0 = np.full_like(theta, -np.inf)
    t1 = np.full_like(theta, np.inf)
    for p0, dd in ((px, dx), (py, dy)):
        with np.errstate(divide="ignore", invalid="ignore"):
            ta = (-h - p0) / dd
            tb = (h - p0) / dd
        lo = np.minimum(ta, tb)
        hi = np.maximum(ta, tb)
        par = np.abs(dd) < 1e-15
        inside = np.abs(p0) <= h
        lo = np.where(par, np.where(inside, -np.inf, np.inf), lo)
        hi = np.where(par, np.where(inside, np.inf, -np.inf), hi)
        t0 = np.maximum(t0, lo)
        t1 = np.minimum(t1, hi)
    return np.clip(t1 - t0, 0, None)


def chord_length_in_disk(theta, r, radius):
    lo, hi = chord_in_disk(theta, r, 0.0, 0.0, radius)
    return np.nan_to_num(hi - lo)


def compare_interval(iv, theta, u, r0, omega, R_k, tol=0.1, step=SCAN_STEP):
    """Check a closed-form interval against the scan. Returns an error string or ''.

    The closed-form midpoint is offered to the scan as an extra candidate so
    slivers thinner than the grid are still seen; the predicate alone decides
    whether it interferes.
    """
    probe = None if iv.empty else [0.5 * (iv.a + iv.b)]
    got = scan_interval(theta, u, r0, omega, R_k, step=step, probe=probe)
    if got is None:
        return "" if iv.empty else f"closed form ({iv.a:.3f}, {iv.b:.3f}) but scan empty"
    if iv.empty:
        return f"closed form empty but scan found ({got[0]:.3f}, {got[1]:.3f}) [{iv.case_id}]"
    lo, hi = got
    if abs(lo - iv.a) > tol or abs(hi - iv.b) > tol:
        return f"endpoints ({iv.a:.3f}, {iv.b:.3f}) vs scan ({lo:.3f}, {hi:.3f}) [{iv.case_id}]"
    return ""


def random_config(g, model, R_g=1500.0, enrich=False):
    """One random configuration ``(theta, u, r0, omega, R_k)``.

    ``enrich`` draws the crossing near the ego (``|d| <= 1.2 c2``) instead of
    from the street process, so most configurations are non-empty.
    """
    theta = g.uniform(0, 2 * math.pi)
    omega = math.radians(g.uniform(1, 45))
    R_k = g.uniform(100, 1000)
    r0 = g.uniform(-2 * R_g, 2 * R_g) if model == "BLCP" else 0.0
    S = abs(math.sin(theta))
    if enrich:
        c2 = R_k * math.sin(omega) / max(S, 1e-12)
        d = g.uniform(-1.2, 1.2) * min(c2, 5 * R_k)
        if model == "PLCP":
            d = abs(d) if math.sin(theta) >= 0 else -abs(d)
        return theta, d + r0, r0, omega, R_k
    hi = R_g if model == "BLCP" else 1.2 * R_k
    r = g.uniform(0, hi)
    u = r / math.sin(theta) if S > 1e-12 else math.copysign(1e12, math.sin(theta) or 1.0)
    return theta, u, r0, omega, R_k
