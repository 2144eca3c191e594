import numpy as np
import pytest

from conftest import random_scenario
from scaledsm import baselines as bl
from scaledsm.model import Scenario, is_feasible, logsinr_of_power, toy_set1, toy_set2, wsr
from scaledsm.scale import kkt_residual


# --- UPA -------------------------------------------------------------------------


def test_upa_equal_split():
    s = Scenario(gain=np.ones((2, 2, 4)), noise=np.ones((2, 4)), weight=[1, 1], p_total=[4.0, 8.0], p_mask=np.full((2, 4), 10.0))
    np.testing.assert_array_equal(bl.upa(s), [[1.0] * 4, [2.0] * 4])


def test_upa_mask_clipped():
    s = Scenario(gain=np.ones((1, 1, 2)), noise=np.ones((1, 2)), weight=[1], p_total=[4.0], p_mask=[[0.5, 10.0]])
    np.testing.assert_array_equal(bl.upa(s), [[0.5, 2.0]])


def test_upa_single_carrier():
    np.testing.assert_array_equal(bl.upa(toy_set1()), [[1.0], [1.0]])


# --- grid oracle -----------------------------------------------------------------


def test_grid_axis_includes_zero():
    assert bl.GridSpec(points_per_var=5, log_spaced=True).axis(1.0)[0] == 0.0
    np.testing.assert_allclose(bl.GridSpec(points_per_var=3).axis(2.0), [0.0, 1.0, 2.0])
    assert bl.GridSpec(points_per_var=3, lower=0.5).axis(2.0)[0] == 0.5


def test_grid_oracle_set1():
    p, val = bl.grid_oracle(toy_set1(), bl.GridSpec(points_per_var=2001))
    assert val == pytest.approx(3 * np.log(2), abs=1e-12)
    np.testing.assert_array_equal(p, [[1.0], [0.0]])


def test_grid_oracle_set1_floor():
    p, val = bl.grid_oracle(toy_set1(), bl.GridSpec(points_per_var=2001, lower=0.05), refine=True)
    assert val == pytest.approx(2.06, abs=0.01)
    np.testing.assert_allclose(logsinr_of_power(toy_set1(), p)[:, 0], [-0.04, -3.33], atol=0.02)


def test_grid_oracle_set2():
    _, val = bl.grid_oracle(toy_set2(), bl.GridSpec(points_per_var=2001))
    assert val == pytest.approx(1.2477, abs=5e-3)


def test_grid_oracle_size_cap():
    s = random_scenario(np.random.default_rng(0), 2, 4)
    with pytest.raises(ValueError):
        bl.grid_oracle(s, bl.GridSpec(points_per_var=3))


def test_grid_oracle_respects_budget(rng):
    s = random_scenario(rng, 2, 3, mask_frac=0.8)
    p, val = bl.grid_oracle(s, bl.GridSpec(points_per_var=9))
    assert is_feasible(s, p, tol=1e-12)[0]
    assert val == pytest.approx(wsr(s, p))


def test_grid_oracle_chunking_is_invisible(rng):
    s = random_scenario(rng, 2, 2)
    a = bl.grid_oracle(s, bl.GridSpec(points_per_var=31))
    b = bl.grid_oracle(s, bl.GridSpec(points_per_var=31), chunk=997)
    np.testing.assert_array_equal(a[0], b[0])
    assert a[1] == b[1]


def test_polish_never_worse(rng):
    for _ in range(5):
        s = random_scenario(rng, 2, 2)
        p0 = bl.upa(s)
        p, val = bl.polish(s, p0)
        assert val >= wsr(s, p0)
        assert is_feasible(s, p, tol=1e-12)[0]


# --- coordinate ascent -----------------------------------------------------------


def test_coordinate_ascent_monotone(rng):
    s = random_scenario(rng, 3, 4)
    grid = bl.GridSpec(points_per_var=21)
    p = bl.upa(s)
    prev = wsr(s, p)
    for _ in range(4):
        p = bl.coordinate_grid_ascent(s, grid, sweeps=1, p_init=p)
        assert wsr(s, p) >= prev
        assert is_feasible(s, p, tol=1e-12)[0]
        prev = wsr(s, p)


def test_coordinate_ascent_set1_near_oracle():
    p = bl.coordinate_grid_ascent(toy_set1(), bl.GridSpec(points_per_var=201))
    assert wsr(toy_set1(), p) == pytest.approx(3 * np.log(2), abs=1e-2)


def test_coordinate_ascent_stalls_on_binding_budget():
    # with the budget binding, power cannot move between carriers one entry
    # at a time, so single-coordinate ascent stops short of water filling
    rng = np.random.default_rng(5)
    s = Scenario(gain=rng.uniform(0.2, 2, (1, 1, 4)), noise=np.full((1, 4), 0.2), weight=[1.0], p_total=[2.0], p_mask=np.full((1, 4), 1.5))
    wf = wsr(s, bl.waterfilling_single_user(s, 0)[None])
    grid = bl.GridSpec(points_per_var=401)
    np.testing.assert_array_equal(bl.coordinate_grid_ascent(s, grid, sweeps=30), bl.upa(s))
    greedy = bl.coordinate_grid_ascent(s, grid, sweeps=30, p_init=s.zeros())
    assert wsr(s, greedy) < wsr(s, bl.upa(s)) < wf


# --- water filling ---------------------------------------------------------------


def test_water_filling_equal_gains():
    s = Scenario(gain=np.ones((1, 1, 4)), noise=np.ones((1, 4)), weight=[1], p_total=[2.0], p_mask=np.full((1, 4), 10.0))
    np.testing.assert_allclose(bl.waterfilling_single_user(s, 0), 0.5, rtol=1e-12)


def test_water_filling_single_carrier():
    s = Scenario(gain=np.ones((1, 1, 1)), noise=np.ones((1, 1)), weight=[1], p_total=[2.0], p_mask=[[1.5]])
    assert bl.waterfilling_single_user(s, 0)[0] == 1.5
    s = Scenario(gain=np.ones((1, 1, 1)), noise=np.ones((1, 1)), weight=[1], p_total=[1.0], p_mask=[[1.5]])
    assert bl.waterfilling_single_user(s, 0)[0] == pytest.approx(1.0, rel=1e-12)


def test_water_filling_dominant_carrier_clipped():
    gain = np.array([[[10.0, 1.0, 1.0]]])
    s = Scenario(gain=gain, noise=np.ones((1, 3)), weight=[1], p_total=[3.0], p_mask=[[0.5, 5.0, 5.0]])
    p = bl.waterfilling_single_user(s, 0)
    assert p[0] == 0.5
    np.testing.assert_allclose(p[1:], [1.25, 1.25], rtol=1e-10)


def test_water_filling_is_kkt(rng):
    for _ in range(20):
        N = int(rng.integers(1, 10))
        s = Scenario(
            gain=rng.uniform(0.1, 3.0, (1, 1, N)),
            noise=rng.uniform(0.05, 1.0, (1, N)),
            weight=[rng.uniform(0.5, 2)],
            p_total=[rng.uniform(0.5, 5)],
            p_mask=rng.uniform(0.1, 2.0, (1, N)),
            gamma=rng.uniform(1, 3),
        )
        p = bl.waterfilling_single_user(s, 0)[None]
        assert p.sum() <= s.p_total[0] * (1 + 1e-12)
        assert kkt_residual(s, p) <= 1e-10


# --- two-user region -------------------------------------------------------------


def test_two_user_only():
    with pytest.raises(ValueError):
        bl.trace_pob_2user(random_scenario(np.random.default_rng(0), 3, 1))


def test_power_for_logsinr_inverts(rng):
    s = toy_set2()
    for _ in range(50):
        p = rng.uniform(0.01, 1.0, (2, 1))
        back = bl.power_for_logsinr_2user(s, logsinr_of_power(s, p)[:, 0])
        np.testing.assert_allclose(back, p[:, 0], rtol=1e-10)


def test_unachievable_targets():
    assert bl.power_for_logsinr_2user(toy_set1(), [3.0, 3.0]) is None
    assert not bl.in_region_2user(toy_set1(), [3.0, 3.0])


def test_batch_membership_matches_scalar(rng):
    s = toy_set1()
    phi = rng.uniform(-6, 1.5, (500, 2))
    for lower in (0.0, 0.05):
        batch = bl.in_region_2user_batch(s, phi, lower)
        scalar = [bl.in_region_2user(s, x, lower) for x in phi]
        np.testing.assert_array_equal(batch, scalar)


def test_pob_is_pareto():
    pts = bl.trace_pob_2user(toy_set1(), samples=500)
    assert np.all(np.diff(pts[:, 0]) >= 0)
    # sorted by phi1 ascending, phi2 must not increase
    assert np.all(np.diff(pts[:, 1]) <= 1e-12)
    for a in pts[::25]:
        assert not np.any((pts[:, 0] > a[0]) & (pts[:, 1] > a[1]))


def test_pob_points_are_achievable():
    s = toy_set1()
    pts = bl.trace_pob_2user(s, samples=300)
    assert np.all(bl.in_region_2user_batch(s, pts, rtol=1e-8))


def test_pob_asymptotes():
    pts = bl.trace_pob_2user(toy_set1(), samples=2000)
    # one end approaches phi1 = 0 with phi2 -> -inf, the other phi2 = 0
    hi1 = pts[np.argmax(pts[:, 0])]
    hi2 = pts[np.argmax(pts[:, 1])]
    assert hi1[0] == pytest.approx(0.0, abs=1e-6) and hi1[1] < -20
    assert hi2[1] == pytest.approx(0.0, abs=1e-6) and hi2[0] < -20


def test_pareto_filter_keeps_ties_and_drops_dominated():
    pts = np.array([[0, 1], [1, 0], [0.5, 0.5], [0.2, 0.2], [0, 1]])
    out = bl.pareto_filter(pts)
    assert [0.2, 0.2] not in out.tolist()
    assert len(out) == 4


def test_convexity_probe_set1():
    s = toy_set1()
    convex, _ = bl.convexity_probe_2user(s, 0.0, samples=150)
    assert convex
    convex, fails = bl.convexity_probe_2user(s, 0.05, samples=150)
    assert not convex
    assert not np.any(bl.in_region_2user_batch(s, fails, 0.05))


def test_outline_has_lower_edges_only_with_floor():
    s = toy_set1()
    assert len(bl.region_outline_2user(s, 0.05, 100)) > len(bl.region_outline_2user(s, 0.0, 100))
