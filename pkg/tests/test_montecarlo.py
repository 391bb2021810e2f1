import math
from dataclasses import replace

import numpy as np
import pytest

from coxradar.cox import BLCP, PLCP
from coxradar.detection import RadarConfig, p_d_blcp, p_d_plcp
from coxradar.geometry import BlpSpec
from coxradar.interference import mean_interferers_plcp
from coxradar.montecarlo import (
    Evaluation,
    Scenario,
    binomial_se,
    build_tables,
    ccdf,
    interferer_counts,
    mc_sweep,
    mean_interferer_count,
    monte_carlo_pd,
    received_powers,
    simulate_sir,
    sir_values,
)
from coxradar.sector import ACTUAL

PLCP_SCN = Scenario()
BLCP_SCN = Scenario(model=BLCP, radar=RadarConfig(omega=math.radians(15)))


def test_scenario_validation():
    with pytest.raises(ValueError):
        Scenario(model="PPP")
    with pytest.raises(ValueError):
        Scenario(lam=-1.0)
    with pytest.raises(ValueError):
        Scenario(r0=10.0)
    with pytest.raises(ValueError):
        Scenario(target_range=(10.0, 5.0))
    with pytest.raises(ValueError):
        build_tables(PLCP_SCN, 0, 1)


def test_tables_reproducible_and_thread_invariant():
    a = build_tables(PLCP_SCN, 300, 7, chunk=40)
    b = build_tables(PLCP_SCN, 300, 7, threads=2, chunk=100)
    for f in ("rid", "dist", "cos_need", "fading", "rcs_unit", "mark"):
        assert np.array_equal(getattr(a, f), getattr(b, f)), f
    c = build_tables(PLCP_SCN, 300, 8)
    assert not np.array_equal(sir_values(a, PLCP_SCN), sir_values(c, PLCP_SCN))


@pytest.mark.parametrize("scn", [PLCP_SCN, BLCP_SCN, replace(BLCP_SCN, r0=2000.0),
                                 replace(PLCP_SCN, heading_mode=ACTUAL, noise=True),
                                 replace(PLCP_SCN, target_range=(5.0, 15.0)),
                                 replace(PLCP_SCN, ego_street_from_target=False)])
def test_table_path_equals_direct_predicate(scn):
    # the direct path applies the sector predicate to each realization
    want = simulate_sir(scn, 150, 3)
    got = sir_values(build_tables(scn, 150, 3), scn)
    fin = np.isfinite(want)
    assert np.array_equal(fin, np.isfinite(got))
    assert np.allclose(got[fin], want[fin], rtol=1e-12)


def test_no_vehicles_always_detected():
    for scn in (replace(PLCP_SCN, lam=0.0), replace(BLCP_SCN, lam=0.0)):
        c = monte_carlo_pd(scn, [0.0, 10.0, 40.0], 200, 1)
        assert list(c.p) == [1.0, 1.0, 1.0]
        assert list(c.stderr) == [0.0, 0.0, 0.0]
        assert p_d_plcp(40.0, scn.radar, scn.lambda_L, 0.0) == 1.0


def test_ccdf_and_se():
    sir = np.array([0.5, 2.0, 20.0, np.inf])
    assert list(ccdf(sir, [0.0, 10.0])) == [0.75, 0.5]
    assert binomial_se(np.array([0.5]), 100)[0] == pytest.approx(0.05)


def test_thinning_matches_fresh_tables_in_distribution():
    # a table at lam = 0.02 thinned to 0.01 vs a table drawn at 0.01
    hi = replace(PLCP_SCN, lam=0.02)
    t = build_tables(hi, 2000, 5)
    thin = interferer_counts(t, hi, Evaluation(lam=0.01)).mean()
    fresh = interferer_counts(build_tables(PLCP_SCN, 2000, 6), PLCP_SCN).mean()
    se = math.sqrt(2 * 7.6 / 2000)
    assert abs(thin - fresh) < 4 * se
    with pytest.raises(ValueError):
        interferer_counts(t, hi, Evaluation(lam=0.05))
    with pytest.raises(ValueError):
        interferer_counts(t, hi, Evaluation(n_B=100))


def test_mean_count_matches_analytic():
    mu = mean_interferers_plcp(PLCP_SCN.radar, PLCP_SCN.lambda_L, PLCP_SCN.lam)
    m, se = mean_interferer_count(PLCP_SCN, 2000, 11)
    assert abs(m - mu) < 4 * se + 0.02 * mu


@pytest.mark.parametrize("scn,analytic", [
    (PLCP_SCN, lambda s: p_d_plcp(10.0, s.radar, s.lambda_L, s.lam)),
    (BLCP_SCN, lambda s: p_d_blcp(0.0, 10.0, s.radar, BlpSpec(s.n_B, s.R_g), s.lam)),
])
def test_mc_agrees_with_analytic(scn, analytic):
    c = monte_carlo_pd(scn, [10.0], 3000, 2)
    assert abs(c.p[0] - analytic(scn)) < max(0.02, 3 * c.stderr[0])


def test_sweep_monotone_under_common_random_numbers():
    t = build_tables(replace(PLCP_SCN, lam=0.04), 500, 9, omega_max=math.radians(20))
    scn = replace(PLCP_SCN, lam=0.04)
    lam = mc_sweep(scn, "lam", [0.005, 0.01, 0.02, 0.04], 10.0, 500, 9, table=t)
    # with shared draws, thinning can only remove interferers
    assert all(b <= a for a, b in zip(lam.p, lam.p[1:]))
    om = mc_sweep(PLCP_SCN, "omega", [math.radians(x) for x in (2, 5, 10, 20)], 10.0, 500, 9)
    assert all(b <= a for a, b in zip(om.p, om.p[1:]))
    beta = mc_sweep(PLCP_SCN, "beta", [-5.0, 0.0, 10.0, 20.0], 0.0, 500, 9)
    assert all(b <= a for a, b in zip(beta.p, beta.p[1:]))
    assert beta.seed == 9 and len(beta.stderr) == 4
    with pytest.raises(ValueError):
        mc_sweep(PLCP_SCN, "r0", [0.0], 10.0, 10, 1)


def test_blcp_line_subsetting():
    scn = replace(BLCP_SCN, n_B=500)
    t = build_tables(scn, 400, 4)
    c = [interferer_counts(t, scn, Evaluation(n_B=n)).mean() for n in (0, 100, 300, 500)]
    assert all(b >= a for a, b in zip(c, c[1:]))
    # with no streets left only the ego street remains
    ego = interferer_counts(t, scn, Evaluation(n_B=0))
    assert np.array_equal(ego, np.bincount(t.rid[t.on_ego_street & (t.dist >= 15.0)
                                                & (t.cos_need > math.cos(scn.radar.omega))],
                                           minlength=400))


def test_received_powers():
    si, i = received_powers(PLCP_SCN, 300, 1)
    assert np.all(si > i) and np.all(i >= 0)
    sir = sir_values(build_tables(PLCP_SCN, 300, 1), PLCP_SCN)
    fin = i > 0
    assert np.allclose((si - i)[fin] / i[fin], sir[fin])
