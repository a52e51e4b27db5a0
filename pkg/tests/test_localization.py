import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from leris import localization as loc
from leris.errors import (AmbiguousSolutionError, DegenerateGeometryError,
                          IllConditionedError, InfeasibleRatioError,
                          InsufficientAnchorsError, NoiseDominatedError)
from leris.geometry import Room
from leris.optical import VcselMode
from leris.scenario import synthesize_measurements

MODE_A = VcselMode(0.01, 5.6e-6, 950e-9)
MODE_B = VcselMode(0.01, 11.2e-6, 950e-9)
PD_AREA = 1e-4


def forward_powers(d, cos_psi=1.0):
    pa = loc.axial_power(MODE_A, PD_AREA, np.longdouble(d)) * np.longdouble(cos_psi)
    pb = loc.axial_power(MODE_B, PD_AREA, np.longdouble(d)) * np.longdouble(cos_psi)
    return pa, pb


# ---------------------------------------------------------------- ranging

def test_mode_ratio_round_trip_at_2m():
    pa, pb = forward_powers(2.0)
    ratio = float((pa / pb) * (loc.mode_power_coefficient(MODE_B, PD_AREA)
                               / loc.mode_power_coefficient(MODE_A, PD_AREA)))
    assert ratio == pytest.approx(0.0625, rel=1e-4)
    d = loc.mode_ratio_distance(pa, pb, MODE_A, MODE_B, PD_AREA)
    assert d == pytest.approx(2.0, rel=1e-9)


def test_mode_ratio_round_trip_sweep():
    # forward-simulate then invert across the room-scale span
    for d_true in np.geomspace(0.1, 10.0, 40):
        pa, pb = forward_powers(d_true, cos_psi=0.7)
        d = loc.mode_ratio_distance(pa, pb, MODE_A, MODE_B, PD_AREA)
        assert d == pytest.approx(d_true, rel=1e-5)


def test_mode_ratio_zero_distance():
    pa, pb = forward_powers(0.0)
    assert loc.mode_ratio_distance(pa, pb, MODE_A, MODE_B, PD_AREA) == 0.0


def test_mode_ratio_identifiability_error():
    pa, pb = forward_powers(2.0)
    with pytest.raises(InfeasibleRatioError):
        loc.mode_ratio_distance(pa, pb, MODE_A, MODE_A, PD_AREA)


def test_mode_ratio_infeasible_carries_ratio():
    # powers fabricated so the rescaled ratio exceeds 1
    pa, pb = forward_powers(2.0)
    with pytest.raises(InfeasibleRatioError) as exc:
        loc.mode_ratio_distance(pa * 20.0, pb, MODE_A, MODE_B, PD_AREA)
    assert exc.value.ratio is not None and exc.value.ratio > 1.0


# ----------------------------------------------------------- trilateration

ROOM = Room()


def test_trilaterate_wall_anchor_example():
    anchors = np.array([[0, 4.5, 1.0], [0, 5.5, 1.0], [0, 5.0, 2.0]])
    truth = np.array([3.0, 5.0, 1.5])
    dists = np.linalg.norm(anchors - truth, axis=1)
    fix = loc.trilaterate(anchors, dists, ROOM)
    np.testing.assert_allclose(fix.position, truth, atol=1e-9)
    assert fix.residual_m < 1e-9
    # the mirror root sits outside the room at negative x
    assert fix.rejected_root[0] < 0

    # the published rounded ranges land within a millimeter
    fix2 = loc.trilaterate(anchors, [3.0822, 3.0822, 3.0414], ROOM)
    np.testing.assert_allclose(fix2.position, truth, atol=2e-3)


def test_trilaterate_symmetric_simplex():
    # anchors at unit-simplex corners, equal ranges: solution on the diagonal
    # t*(1,1,1) with 3t^2 - 2t + 1 = rho^2; room excludes the second root
    anchors = np.array([[1, 0, 0], [0, 1, 0], [0, 0, 1]], dtype=float)
    rho = 1.0
    t = (1 + math.sqrt(3 * rho ** 2 - 2)) / 3
    room = Room(lo=(0.1, 0.1, 0.1), hi=(10, 10, 10))
    fix = loc.trilaterate(anchors, [rho] * 3, room)
    np.testing.assert_allclose(fix.position, [t, t, t], atol=1e-12)
    assert fix.residual_m < 1e-9


def test_trilaterate_collinear_error():
    anchors = [[0, 0, 0], [0, 1, 0], [0, 2, 0]]
    with pytest.raises(DegenerateGeometryError):
        loc.trilaterate(anchors, [1.0, 1.0, 1.0], ROOM)


def test_trilaterate_inconsistent_ranges():
    anchors = [[0, 0, 0], [4, 0, 0], [0, 4, 0]]
    with pytest.raises(Exception) as exc:
        loc.trilaterate(anchors, [0.1, 0.1, 0.1], ROOM)
    assert exc.type.__name__ in ("InconsistentRangesError",)


def test_trilaterate_ambiguous_reported():
    # anchors in the room interior: both mirror roots stay inside
    anchors = [[4, 4, 1.0], [6, 4, 1.0], [5, 6, 1.0]]
    truth = np.array([5.0, 4.8, 1.8])
    dists = np.linalg.norm(np.asarray(anchors, float) - truth, axis=1)
    with pytest.raises(AmbiguousSolutionError) as exc:
        loc.trilaterate(anchors, dists, ROOM)
    roots = np.asarray(exc.value.roots)
    assert roots.shape == (2, 3)


def test_trilaterate_scale_equivariance(rng):
    for _ in range(25):
        anchors = rng.uniform(0, 3, (3, 3))
        truth = rng.uniform(0.5, 2.5, 3)
        if np.linalg.norm(np.cross(anchors[1] - anchors[0],
                                   anchors[2] - anchors[0])) < 1e-3:
            continue
        dists = np.linalg.norm(anchors - truth, axis=1)
        big = Room(lo=(-100, -100, -100), hi=(100, 100, 100))
        try:
            fix = loc.trilaterate(anchors, dists, big)
            s = 3.7
            fix_s = loc.trilaterate(anchors * s, dists * s, big)
        except AmbiguousSolutionError:
            continue
        np.testing.assert_allclose(fix_s.position, fix.position * s,
                                   rtol=1e-9, atol=1e-9)


# ------------------------------------------------------------- orientation

def test_orientation_identity_system():
    sol = loc.orientation_solve(np.eye(3), np.array([0.6, 0.8, 0.0]))
    np.testing.assert_allclose(sol.raw, [0.6, 0.8, 0.0], atol=1e-15)
    np.testing.assert_allclose(sol.unit, [0.6, 0.8, 0.0], atol=1e-12)


def test_orientation_round_trip(rng):
    for _ in range(50):
        u = rng.normal(size=(3, 3))
        u /= np.linalg.norm(u, axis=1, keepdims=True)
        if abs(np.linalg.det(u)) < 1e-3:
            continue
        n = rng.normal(size=3)
        n /= np.linalg.norm(n)
        c = u @ n
        sol = loc.orientation_solve(u, c)
        np.testing.assert_allclose(sol.unit, n, atol=1e-9)
        np.testing.assert_allclose(u @ sol.raw, c, atol=1e-12)


def test_orientation_coplanar_error():
    u = np.array([[1, 0, 0], [0, 1, 0], [1 / math.sqrt(2), 1 / math.sqrt(2), 0]])
    with pytest.raises(IllConditionedError) as exc:
        loc.orientation_solve(u, np.array([0.5, 0.5, 0.5]))
    assert exc.value.condition_number is not None


# --------------------------------------------------------- anchor selection

def _cand(vid, pos, power=1.0, dist=1.0):
    return loc.AnchorCandidate(vcsel_id=vid, position=tuple(pos),
                               power_w=power, coarse_distance_m=dist)


def test_select_three_candidates_returned():
    cands = [_cand("a", (0, 0, 0)), _cand("b", (1, 0, 0)), _cand("c", (0, 1, 0))]
    got = loc.select_anchor_triplet(cands, ue_hint=(0.3, 0.3, 2.0))
    assert got == ("a", "b", "c")


def test_select_prefers_non_collinear():
    # candidate d is nearly collinear with a-b as seen from the hint
    cands = [
        _cand("a", (0, 0, 0)), _cand("b", (2, 0, 0)),
        _cand("c", (1, 3, 0)), _cand("d", (4.001, 0.0005, 0)),
    ]
    hint = (1.0, 1.0, 4.0)
    got = loc.select_anchor_triplet(cands, ue_hint=hint)

    # brute-force oracle over all four triplets
    from itertools import combinations
    best, best_s = None, -1.0
    for tri in combinations(sorted(cands, key=lambda c: c.vcsel_id), 3):
        dirs = np.array([np.asarray(c.position, float) - hint for c in tri])
        dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
        s = np.linalg.svd(dirs, compute_uv=False)[-1]
        if s > best_s:
            best_s, best = s, tuple(c.vcsel_id for c in tri)
    assert got == best
    assert "c" in got


def test_select_tie_breaks_lexicographic():
    # a square: the four triplets are congruent, all sigma_min equal
    cands = [
        _cand("d", (1, 1, 0)), _cand("c", (0, 1, 0)),
        _cand("b", (1, 0, 0)), _cand("a", (0, 0, 0)),
    ]
    got = loc.select_anchor_triplet(cands, ue_hint=(0.5, 0.5, 5.0))
    assert got == ("a", "b", "c")


def test_select_collinear_everything_raises():
    cands = [_cand(ch, (i, 0, 0)) for i, ch in enumerate("abcd")]
    with pytest.raises(DegenerateGeometryError):
        loc.select_anchor_triplet(cands, ue_hint=(1.5, 0, 5.0))


def test_select_insufficient():
    with pytest.raises(InsufficientAnchorsError):
        loc.select_anchor_triplet([_cand("a", (0, 0, 0)), _cand("b", (1, 0, 0))])


def test_select_beats_random_triplets(default_scenario, rng):
    # conditioning of the chosen triplet tops 100 random draws
    sc = default_scenario
    ue = np.array([4.0, 6.0, 1.5])
    cands = []
    for v in sc.vcsels:
        if v.panel_id in (1, 3):
            d = float(np.linalg.norm(np.asarray(v.position) - ue))
            cands.append(_cand(v.id, v.position, power=1.0 / d, dist=d))
    got = loc.select_anchor_triplet(cands, ue_hint=tuple(ue))

    def sigma_min(tri_ids):
        by = {c.vcsel_id: c for c in cands}
        dirs = np.array([np.asarray(by[i].position, float) - ue for i in tri_ids])
        dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
        return np.linalg.svd(dirs, compute_uv=False)[-1]

    s_best = sigma_min(got)
    ids = [c.vcsel_id for c in cands]
    for _ in range(100):
        tri = tuple(rng.choice(ids, size=3, replace=False))
        assert s_best >= sigma_min(tri) - 1e-12


# ----------------------------------------------------------------- localize

def test_localize_round_trip_noise_free(default_scenario):
    sc = default_scenario
    truth = np.array([4.0, 6.0, 1.5])
    normal = np.array([-1.0, 0.0, 0.0])     # toward the nearest panel
    meas = synthesize_measurements(sc, truth, normal, noise_mode="off")
    est = loc.localize(meas, sc.vcsels, sc.config.pd, sc.room)
    assert np.linalg.norm(est.position - truth) < 1e-6
    ang = math.acos(np.clip(np.dot(est.orientation, normal), -1, 1))
    assert ang < 1e-6
    assert est.condition_number > 0
    assert set(est.anchor_ids) <= set(est.per_link_distances)


def test_localize_two_anchors_insufficient(default_scenario):
    sc = default_scenario
    v1, v2 = sc.vcsels[0], sc.vcsels[1]
    meas = []
    for v in (v1, v2):
        for label, mode in (("a", v.mode_a), ("b", v.mode_b)):
            meas.append(loc.OpticalMeasurement(
                vcsel_id=v.id, mode_label=label,
                received_power_w=float(loc.axial_power(mode, PD_AREA, 3.0))))
    with pytest.raises(InsufficientAnchorsError):
        loc.localize(meas, sc.vcsels, sc.config.pd, sc.room)


def test_localize_below_floor_insufficient(default_scenario):
    sc = default_scenario
    truth = np.array([4.0, 6.0, 1.5])
    meas = synthesize_measurements(sc, truth, np.array([-1.0, 0, 0]),
                                   noise_mode="off")
    with pytest.raises(InsufficientAnchorsError):
        loc.localize(meas, sc.vcsels, sc.config.pd, sc.room, power_floor=1.0)


def test_localize_cross_panel_ambiguity_resolved(default_scenario):
    # facing between two panels: anchors span panels, mirror roots can land
    # in-room; a spare anchor must disambiguate rather than fail
    sc = default_scenario
    truth = np.array([3.0, 3.0, 1.5])
    normal = np.array([-1 / math.sqrt(2), -1 / math.sqrt(2), 0.0])
    meas = synthesize_measurements(sc, truth, normal, noise_mode="off")
    est = loc.localize(meas, sc.vcsels, sc.config.pd, sc.room)
    assert np.linalg.norm(est.position - truth) < 1e-6


# ------------------------------------------------------- analytic error law

Z_RA = MODE_A.rayleigh_range_m


def test_ranging_error_noise_free_limit():
    assert loc.ranging_error(3.0, Z_RA, 1e15) < 1e-9 * 3.0


def test_ranging_error_reference_value():
    dd = loc.ranging_error(2.0, 1.0371e-4, 1e6)
    assert dd == pytest.approx(1.0e-6, rel=1e-4)
    dhat = loc.estimated_distance_under_noise(2.0, 1.0371e-4, 1e6)
    assert 2.0 - dhat == pytest.approx(dd, rel=1e-9)


def test_ranging_error_boundary_noise_dominated():
    with pytest.raises(NoiseDominatedError):
        loc.ranging_error(2.0, Z_RA, (Z_RA / 2.0) ** 2)
    with pytest.raises(NoiseDominatedError):
        loc.estimated_distance_under_noise(2.0, Z_RA, (Z_RA / 2.0) ** 2)


def test_estimated_distance_limits():
    assert loc.estimated_distance_under_noise(2.0, Z_RA, 1e15) == \
        pytest.approx(2.0, rel=1e-12)
    # point-source reduction
    a = 37.0
    got = loc.estimated_distance_under_noise(2.0, 0.0, a)
    assert got == pytest.approx(2.0 * math.sqrt(a / (a + 1)), rel=1e-12)


@settings(max_examples=200, deadline=None)
@given(st.floats(0.05, 20.0), st.floats(1e-6, 1e-2), st.floats(1e-4, 1e12))
def test_ranging_error_nonnegative_property(d, z_r, alpha):
    if alpha <= (z_r / d) ** 2:
        return
    dd = loc.ranging_error(d, z_r, alpha)
    dhat = loc.estimated_distance_under_noise(d, z_r, alpha)
    assert dd >= 0.0
    assert dhat <= d
    # double-precision subtraction leaves ~eps*d of absolute slack
    assert (d - dhat) == pytest.approx(dd, rel=1e-12, abs=4e-16 * d)


def test_ranging_identity_extended_precision(rng):
    # in extended precision the two formulas agree to 1e-12 relative
    n = 20000
    d = np.asarray(rng.uniform(0.1, 10.0, n), dtype=np.longdouble)
    z = np.asarray(10 ** rng.uniform(-5, -3, n), dtype=np.longdouble)
    a = np.asarray(10 ** rng.uniform(1, 5, n), dtype=np.longdouble)
    keep = a > 10 * (z / d) ** 2
    d, z, a = d[keep], z[keep], a[keep]
    dd = loc.ranging_error(d, z, a)
    dhat = loc.estimated_distance_under_noise(d, z, a)
    assert dd.dtype == np.longdouble
    rel = np.abs((d - dhat) - dd) / dd
    assert float(rel.max()) < 1e-12
    assert np.all(dd >= 0)


def test_ranging_error_monotone_in_snr():
    alphas = np.geomspace(1e2, 1e12, 200)
    dd = loc.ranging_error(2.0, Z_RA, alphas)
    assert np.all(np.diff(dd) < 0)
