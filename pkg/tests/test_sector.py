import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from coxradar.cox import PLCP, NetworkRealization, VehicleArrays, palm_condition
from coxradar.detection import RadarConfig
from coxradar.geometry import PLP, LineSet, PlpSpec, sample_plp
from coxradar.sector import (
    ACTUAL,
    EITHER,
    SectorSpec,
    in_sector,
    interfering_mask,
    interfering_set,
    mutual,
)

OM = math.radians(10)


def test_in_sector_basics():
    s = SectorSpec((0.0, 0.0), 0.0, 1, OM, 100.0)  # looks along +y
    assert in_sector((0.0, 50.0), s)
    assert not in_sector((0.0, 100.0 + 1e-9), s)
    assert in_sector((0.0, 100.0), s)  # range is inclusive
    assert not in_sector((0.0, -50.0), s)
    assert not in_sector((0.0, 0.0), s)  # apex has no direction


def test_angle_boundary_is_strict():
    # a direction exactly at omega: cos(angle) == cos(omega), so it is outside
    om = math.pi / 3  # cos(pi/3) is exactly representable via the constructed point
    s = SectorSpec((0.0, 0.0), 0.0, 1, om, 10.0)
    p = (-math.sin(om), math.cos(om))
    cos_p = p[1] / math.hypot(*p)
    assert (cos_p > math.cos(om)) == in_sector(p, s)
    q = (-math.sin(om * 0.999), math.cos(om * 0.999))
    assert in_sector(q, s)
    r = (-math.sin(om * 1.001), math.cos(om * 1.001))
    assert not in_sector(r, s)


def test_sector_validation():
    with pytest.raises(ValueError):
        SectorSpec((0, 0), 0.0, 0, OM, 10.0)
    with pytest.raises(ValueError):
        SectorSpec((0, 0), 0.0, 1, math.pi / 2, 10.0)
    with pytest.raises(ValueError):
        SectorSpec((0, 0), 0.0, 1, OM, 0.0)


def _net(xs, ys, line_theta, signs, ego=(0.0, 0.0)):
    # each vehicle on its own line through its position
    th = np.asarray(line_theta, dtype=float)
    xs, ys = np.asarray(xs, float), np.asarray(ys, float)
    r = xs * np.cos(th) + ys * np.sin(th)
    lines = LineSet(th, r, PLP)
    v = VehicleArrays(np.arange(1, th.size + 1), np.zeros(th.size), xs, ys,
                      np.asarray(signs, dtype=np.int8))
    return NetworkRealization(lines, v, ego, (0.0, 1.0), 15.0, PLCP)


def test_facing_radars_on_ego_street_interfere():
    # the vehicle ahead on a line parallel to y, facing -y
    net = _net([0.0], [200.0], [1e-3], [-1])
    cfg = RadarConfig(omega=OM, R_k=500.0)
    assert interfering_mask(net, OM, 500.0, heading_mode=ACTUAL)[0]
    assert len(interfering_set(net, cfg)) == 1
    # direct evaluation of the two indicators
    ego = SectorSpec((0.0, 0.0), 0.0, 1, OM, 500.0)
    veh = SectorSpec((0.0, 200.0), 0.0, -1, OM, 500.0)
    assert in_sector((0.0, 200.0), ego) and in_sector((0.0, 0.0), veh)


def test_vehicle_behind_excluded():
    net = _net([0.0], [-200.0], [1e-3], [1])
    assert not interfering_mask(net, OM, 500.0, heading_mode=EITHER)[0]
    assert not interfering_mask(net, OM, 500.0, heading_mode=ACTUAL)[0]


def test_wrong_heading_only_matters_in_actual_mode():
    net = _net([0.0], [200.0], [1e-3], [1])  # ahead but facing away
    assert not interfering_mask(net, OM, 500.0, heading_mode=ACTUAL)[0]
    assert interfering_mask(net, OM, 500.0, heading_mode=EITHER)[0]


def test_empty_and_ego_street_min():
    empty = palm_condition(LineSet([], [], PLP), PLCP, 0.0, 0.0, 1)
    assert interfering_mask(empty, OM, 500.0).size == 0
    assert interfering_set(empty, RadarConfig()) == []
    net = palm_condition(LineSet([], [], PLP), PLCP, 0.0, 0.05, 3)
    m0 = interfering_mask(net, OM, 500.0)
    m1 = interfering_mask(net, OM, 500.0, ego_street_min=15.0)
    d = net.vehicles.y
    assert np.array_equal(m1, m0 & (d >= 15.0))


def test_unknown_heading_mode():
    with pytest.raises(ValueError):
        mutual([1.0], [1.0], [0.0], [1], (0, 0), (0, 1), OM, 10.0, heading_mode="both")


pts = st.floats(-300, 300, allow_nan=False)


@given(pts, pts, pts, pts, st.floats(0, 2 * math.pi), st.floats(0, 2 * math.pi),
       st.floats(0.02, 1.4))
def test_predicate_symmetric_under_role_swap(px, py, qx, qy, ta, tb, om):
    # v interferes with u (both oriented) iff u interferes with v
    a = (-math.sin(ta), math.cos(ta))
    b = (-math.sin(tb), math.cos(tb))
    uv = mutual([qx], [qy], [tb], [1], (px, py), a, om, 400.0, heading_mode=ACTUAL)[0]
    vu = mutual([px], [py], [ta], [1], (qx, qy), b, om, 400.0, heading_mode=ACTUAL)[0]
    assert uv == vu


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10_000), st.floats(0.02, 0.7), st.floats(0.0, 0.6),
       st.floats(50, 600), st.floats(0, 400))
def test_monotone_in_omega_and_range(seed, om, dom, rk, drk):
    net = palm_condition(sample_plp(PlpSpec(0.01, 1010.0), seed), PLCP, 0.0, 0.02, seed,
                         max_range=1000.0)
    om2 = min(om + dom, 1.5)
    small = interfering_mask(net, om, rk)
    assert np.all(interfering_mask(net, om2, rk)[small])
    assert np.all(interfering_mask(net, om, rk + drk)[small])


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10_000), st.floats(0, 2 * math.pi), st.floats(-500, 500),
       st.floats(-500, 500))
def test_rigid_motion_equivariance(seed, rot, tx, ty):
    net = palm_condition(sample_plp(PlpSpec(0.01, 510.0), seed), PLCP, 0.0, 0.02, seed)
    v = net.vehicles
    th = net.line_theta()[v.line_index]
    base = mutual(v.x, v.y, th, v.heading_sign, (0.0, 0.0), (0.0, 1.0), 0.3, 500.0,
                  heading_mode=ACTUAL)
    c, s = math.cos(rot), math.sin(rot)
    x2 = c * v.x - s * v.y + tx
    y2 = s * v.x + c * v.y + ty
    ego = (tx, ty)
    bore = (-s, c)
    moved = mutual(x2, y2, th + rot, v.heading_sign, ego, bore, 0.3, 500.0,
                   heading_mode=ACTUAL)
    # rounding can flip points sitting within ~1e-9 of a cone edge
    dx, dy = v.x, v.y
    n = np.hypot(dx, dy)
    safe = np.abs(dy / n - math.cos(0.3)) > 1e-9
    bx, by = -np.sin(th) * v.heading_sign, np.cos(th) * v.heading_sign
    safe &= np.abs(-(dx * bx + dy * by) / n - math.cos(0.3)) > 1e-9
    safe &= np.abs(n - 500.0) > 1e-6
    assert np.array_equal(base[safe], moved[safe])
