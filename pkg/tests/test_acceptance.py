"""Acceptance gate: every criterion at its stated tolerance.

Run with ``pytest tests/test_acceptance.py -s -v`` to stream the per-criterion
pass/fail lines.  The two Monte Carlo sweeps dominate the runtime (tens of
minutes at the required draw counts); everything else finishes in seconds.
"""

import math
import time

import numpy as np
import pytest

from leris import cli, config as cm, kernels, mmwave as mw, sweeps
from leris.errors import SimulationError
from leris.localization import (estimated_distance_under_noise, localize,
                                ranging_error)
from leris.montecarlo import substream
from leris.scenario import ScenarioConfig, build_scenario, synthesize_measurements

POS_TOL_M = 1e-6
ANG_TOL_RAD = 1e-6


def _report(num, passed, detail):
    state = "PASS" if passed else "FAIL"
    print(f"ACCEPTANCE {num}: {state} - {detail}")
    assert passed, f"criterion {num}: {detail}"


@pytest.fixture(scope="module")
def scenario():
    return build_scenario(ScenarioConfig())


def _sample_pose(cfg, rng):
    x = rng.uniform(cfg.ue_x[0], cfg.ue_x[1])
    y = rng.uniform(cfg.ue_y[0], cfg.ue_y[1])
    az = rng.uniform(0.0, 2.0 * math.pi)
    return (np.array([x, y, cfg.ue_z]),
            np.array([math.cos(az), math.sin(az), 0.0]))


def test_criterion_1_noise_free_round_trip(scenario):
    """1000 random poses: exact recovery or an explicitly flagged degenerate."""
    cfg = scenario.config
    n = 1000
    t0 = time.perf_counter()
    ok = flagged = wrong = 0
    worst = 0.0
    for i in range(n):
        pos, normal = _sample_pose(cfg, substream(cfg.seed, i))
        try:
            meas = synthesize_measurements(scenario, pos, normal,
                                           noise_mode="off")
            est = localize(meas, scenario.vcsels, cfg.pd, scenario.room,
                           power_floor=cfg.power_floor_w)
        except SimulationError:
            flagged += 1
            continue
        perr = float(np.linalg.norm(est.position - pos))
        aerr = math.acos(np.clip(np.dot(est.orientation, normal), -1, 1))
        worst = max(worst, perr)
        if perr < POS_TOL_M and aerr < ANG_TOL_RAD:
            ok += 1
        else:
            wrong += 1
    elapsed = time.perf_counter() - t0
    frac = ok / max(ok + wrong, 1)
    _report(1, wrong == 0 and frac >= 0.999 and elapsed < 10.0,
            f"{ok} exact, {flagged} flagged degenerate, {wrong} silently "
            f"wrong of {n}; worst position error {worst:.2e} m; "
            f"{elapsed:.1f} s (< 10 s)")


def test_criterion_2_ring_error_bound(scenario):
    """Fixed-variance noise, four panels, 3 m ring: error under 2 mm at 1 deg steps."""
    t0 = time.perf_counter()
    grid = np.arange(0.0, 360.0, 1.0)
    res = sweeps.run_error_vs_azimuth(scenario, (1, 2, 3, 4), grid,
                                      noise_mode="fixed")
    elapsed = time.perf_counter() - t0
    vals = np.array([r[2] for r in res.rows])
    covered = np.all(np.isfinite(vals))
    bound = covered and bool(np.all(vals <= 2.0))
    _report(2, bound and elapsed < 60.0,
            f"{vals.size} bearings, max error "
            f"{np.nanmax(vals):.2e} mm (<= 2 mm), all covered: {covered}, "
            f"{elapsed:.1f} s (< 60 s)")


def test_criterion_3_error_law_consistency():
    """1e5 tuples: d - d_hat matches the closed-form error to 1e-12 relative."""
    rng = np.random.default_rng(31337)
    n = 100_000
    d = np.asarray(rng.uniform(0.1, 10.0, n), dtype=np.longdouble)
    z = np.asarray(10 ** rng.uniform(-5.0, -3.0, n), dtype=np.longdouble)
    floor = 10.0 * (z / d) ** 2
    a = np.maximum(np.asarray(10 ** rng.uniform(-2.0, 5.0, n),
                              dtype=np.longdouble), floor)
    dd = ranging_error(d, z, a)
    dhat = estimated_distance_under_noise(d, z, a)
    rel = np.abs((d - dhat) - dd) / dd
    max_rel = float(rel.max())
    nonneg = bool(np.all(dd >= 0))
    _report(3, max_rel < 1e-12 and nonneg,
            f"max relative mismatch {max_rel:.2e} (< 1e-12), "
            f"all errors nonnegative: {nonneg}")


def test_criterion_4_array_factor_maximality():
    """Steered |F| hits the element count; random profiles never exceed it."""
    k0 = 2 * math.pi / 0.01
    tx = np.array([2.0, -3.0, 4.0])
    rx = np.array([1.0, 2.0, 5.0])
    rng = np.random.default_rng(2024)
    peak_ok = True
    details = []
    for side in (2, 8, 50):
        panel = mw.LerisPanel(id=1, center=(0, 5, 1.5), normal=(1, 0, 0),
                              m_rows=side, n_cols=side)
        t, p = rng.uniform(0.1, 1.4), rng.uniform(0, 2 * math.pi)
        prof = mw.steering_phase_profile(panel, t, p, tx, rx, k0)
        peak = abs(mw.array_factor(panel, prof, t, p, tx, rx, k0))
        rel = abs(peak - side * side) / (side * side)
        peak_ok &= rel < 1e-9
        details.append(f"MN={side * side}: |F|={peak:.6f} (rel err {rel:.1e})")
    bounded = True
    panel8 = mw.LerisPanel(id=1, center=(0, 5, 1.5), normal=(1, 0, 0),
                           m_rows=8, n_cols=8)
    for _ in range(200):
        phases = rng.uniform(0, 2 * math.pi, (8, 8))
        f = abs(mw.array_factor(panel8, phases, rng.uniform(0, math.pi / 2),
                                rng.uniform(0, 2 * math.pi), tx, rx, k0))
        bounded &= f <= 64.0 * (1 + 1e-12)
    _report(4, peak_ok and bounded,
            "; ".join(details) + f"; 200 random profiles bounded: {bounded}")


def test_criterion_5_gain_normalization():
    """Gain field integrates to 4 pi eta within 1% on an independent grid."""
    k0 = 2 * math.pi / 0.01
    tx = np.array([2.0, -3.0, 4.0])
    rx = np.array([1.0, 2.0, 5.0])
    rng = np.random.default_rng(77)
    panel = mw.LerisPanel(id=1, center=(0, 5, 1.5), normal=(1, 0, 0),
                          m_rows=8, n_cols=8, efficiency=0.9)
    inner = mw.GridSpec(step_deg=0.25)
    t_in, p_in = inner.axes()
    outer = mw.GridSpec(step_deg=0.4)
    t_out, p_out = outer.axes()
    target = 4 * math.pi * panel.efficiency
    worst = 0.0
    for _ in range(20):
        phases = rng.uniform(0, 2 * math.pi, (8, 8))
        denom = mw.integrate_power(
            mw.pattern_power_grid_at(panel, phases, t_in, p_in, k0, tx, rx),
            t_in, p_in)
        power_out = mw.pattern_power_grid_at(panel, phases, t_out, p_out,
                                             k0, tx, rx)
        integral = mw.integrate_power(
            panel.efficiency * 4 * math.pi * power_out / denom, t_out, p_out)
        worst = max(worst, abs(integral - target) / target)
    _report(5, worst < 0.01,
            f"20 random profiles, worst normalization deviation "
            f"{worst * 100:.3f}% (< 1%)")


def test_criterion_6_closed_form_constants():
    """Channel constants against independent hand evaluation."""
    panel = mw.LerisPanel(id=1, center=(0, 5, 1.5), normal=(1, 0, 0),
                          m_rows=50, n_cols=50, efficiency=1.0)
    params = mw.MmWaveParams()
    hand_gmax = 2500.0
    hand_aeff = 2500 * 0.01 ** 2 / (4 * math.pi)
    hand_prod = hand_aeff * hand_gmax
    hand_c0 = 0.01 ** 2 / (4 * math.pi * 1.0) ** 2
    got = {
        "G_max": (mw.max_gain(panel), hand_gmax, 2500.0),
        "A_eff": (mw.effective_aperture(panel, params.wavelength_m),
                  hand_aeff, 0.019894),
        "A_eff*G_max": (mw.cascaded_gain([panel], params.wavelength_m),
                        hand_prod, 49.736),
        "C_0": (mw.path_loss([1.0], params), hand_c0, 6.3326e-7),
    }
    ok = True
    parts = []
    for name, (value, hand, published) in got.items():
        rel = abs(value - hand) / abs(hand)
        ok &= rel < 1e-9 and abs(value - published) / published < 1e-4
        parts.append(f"{name}={value:.6g} (rel {rel:.1e})")
    _report(6, ok, "; ".join(parts))


def test_criterion_7_rate_vs_snr_trends(scenario):
    """Fig-3-style sweep: 5000 draws per point, strict SNR and panel ordering."""
    cfg = scenario.config
    kernels.warmup()
    t0 = time.perf_counter()
    means = {}
    for subset in cfg.panel_subsets:
        res = sweeps.run_rate_vs_snr(scenario, subset, iterations=5000,
                                     workers=1)
        means[len(subset)] = np.array([r[2] for r in res.rows])
    elapsed = time.perf_counter() - t0
    mono = all(np.all(np.diff(means[k]) > 0) for k in (1, 2, 4))
    ordered = bool(np.all(means[4] > means[2]) and np.all(means[2] > means[1]))
    in_band = all(np.all((means[k] >= 0) & (means[k] <= 16)) for k in means)
    _report(7, mono and ordered and in_band and elapsed < 1800,
            f"strictly increasing in SNR: {mono}; L4>L2>L1 everywhere: "
            f"{ordered}; within [0,16]: {in_band}; "
            f"R(130dB) = {means[4][-1]:.2f}/{means[2][-1]:.2f}/"
            f"{means[1][-1]:.2f} bits/s/Hz; {elapsed / 60:.1f} min (< 30 min)")


def test_criterion_8_rate_vs_elements_trends(scenario):
    """Fig-4-style sweep over the element grid (800 draws per point).

    The draw count is not pinned by the criterion; 800 common-random-number
    draws leave the coverage-driven gaps at many standard errors.
    """
    cfg = scenario.config
    kernels.warmup()
    t0 = time.perf_counter()
    means = {}
    for subset in cfg.panel_subsets:
        res = sweeps.run_rate_vs_elements(scenario, subset, iterations=800,
                                          workers=1)
        means[len(subset)] = np.array([r[2] for r in res.rows])
    elapsed = time.perf_counter() - t0
    nondec = all(np.all(np.diff(means[k]) >= 0) for k in (1, 2, 4))
    ordered = bool(np.all(means[4] > means[2]) and np.all(means[2] > means[1]))
    doubling = bool(np.any(means[4] >= 2 * means[1]))
    gap_l1 = bool(means[1][-1] > means[1][0])
    nondec = nondec and gap_l1
    _report(8, nondec and ordered and doubling,
            f"non-decreasing in N: {nondec}; L4>L2>L1 everywhere: {ordered}; "
            f"some point with R(L=4) >= 2 R(L=1): {doubling}; "
            f"R(N=2500) = {means[4][-1]:.2f}/{means[2][-1]:.2f}/"
            f"{means[1][-1]:.2f} bits/s/Hz; {elapsed / 60:.1f} min")


def test_criterion_9_byte_identical_reruns(tmp_path, scenario):
    """Figure outputs are byte-identical across reruns and worker counts."""
    cfg_obj, canonical, fp = cm.load_config(None)
    runs = {}
    for tag, workers in (("a", 1), ("b", 2), ("c", 1)):
        out = tmp_path / tag
        csv_path, _ = cli.run_figure(scenario, "fig3", fp, out,
                                     iterations=8, workers=workers)
        runs[tag] = csv_path.read_bytes()
    fig2_a, _ = cli.run_figure(scenario, "fig2", fp, tmp_path / "f2a")
    fig2_b, _ = cli.run_figure(scenario, "fig2", fp, tmp_path / "f2b")
    same_workers = runs["a"] == runs["b"]
    same_rerun = runs["a"] == runs["c"]
    same_fig2 = fig2_a.read_bytes() == fig2_b.read_bytes()
    _report(9, same_workers and same_rerun and same_fig2,
            f"fig3 workers 1 vs 2 identical: {same_workers}; rerun "
            f"identical: {same_rerun}; fig2 rerun identical: {same_fig2}")
