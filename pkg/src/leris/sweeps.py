"""Figure-style experiments: ranging error vs bearing, rate vs SNR, rate vs N.

Common conventions:

* Draw sampling order is fixed (x, then y, then facing azimuth), so equal
  seeds give identical user poses across sweeps and across panel subsets;
  nested panel subsets therefore produce deterministically ordered curves.
* Localization inside the rate sweeps runs on noise-free powers: the
  configured additive noise term is a published receiver constant, so the
  estimator subtracts it exactly; its effect on accuracy is carried by the
  analytic per-link error model (the bearing sweep).
* A draw whose localization fails (insufficient anchors, degenerate or
  ambiguous geometry) is a physical outage: the panels cannot be steered,
  so the draw contributes zero rate.  Such draws are counted and reported.
* The element-count sweep varies the reflecting array only; the optical
  anchor layout stays at the configured geometry.
"""

import math
import time
from dataclasses import dataclass, replace

import numpy as np

from . import mmwave, routing
from .errors import NoiseDominatedError, QuadratureAccuracyError, SimulationError
from .localization import axial_power, localize, ranging_error
from .montecarlo import monte_carlo
from .scenario import serving_emitters, synthesize_measurements

FIG2_HEADER = ("azimuth_deg", "L", "mean_dd_mm", "p5", "p50", "p95", "n", "seed")
FIG3_HEADER = ("snr_db", "L", "mean_R", "p5", "p50", "p95", "n", "seed")
FIG4_HEADER = ("n_elements", "L", "mean_R", "p5", "p50", "p95", "n", "seed")


@dataclass(frozen=True)
class SweepResult:
    figure: str
    header: tuple
    rows: tuple
    seed: int
    config_fingerprint: str
    warnings: tuple = ()
    timings: dict | None = None

    def merged_with(self, other):
        if other.header != self.header:
            raise ValueError("cannot merge sweeps with different schemas")
        return SweepResult(figure=self.figure, header=self.header,
                           rows=self.rows + other.rows, seed=self.seed,
                           config_fingerprint=self.config_fingerprint,
                           warnings=self.warnings + other.warnings,
                           timings=self.timings)


def _fmt(value):
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    v = float(value)
    if math.isnan(v):
        return "nan"
    return repr(v)


def render_csv(result):
    """Deterministic CSV bytes for a sweep result."""
    lines = [",".join(result.header)]
    for row in result.rows:
        lines.append(",".join(_fmt(v) for v in row))
    return ("\n".join(lines) + "\n").encode()


def run_error_vs_azimuth(scenario, active_panels, azimuth_grid_deg=None,
                         noise_mode=None, fingerprint=""):
    """Analytic per-link ranging error around the center ring.

    For each grid bearing the user stands on the configured ring facing
    radially outward; the strongest serving emitter's SNR feeds the analytic
    error bound.  Bearings with no serving emitter produce NaN sentinel rows
    (plotted as missing, never as zero).
    """
    config = scenario.config
    noise_mode = noise_mode or config.noise_mode
    if azimuth_grid_deg is None:
        azimuth_grid_deg = np.arange(0.0, 360.0, config.fig2_azimuth_step_deg)
    azimuth_grid_deg = np.asarray(azimuth_grid_deg, dtype=float)
    if np.any(azimuth_grid_deg < 0) or np.any(azimuth_grid_deg > 360):
        raise SimulationError("azimuth grid must lie within [0, 360] degrees")

    center = scenario.room.center()
    radius = config.fig2_ring_radius_m
    z_ra = config.mode_a.rayleigh_range_m
    p_n_fixed = config.noise.fixed_variance
    active = tuple(active_panels)
    rows = []
    warnings = []
    uncovered = 0
    t0 = time.perf_counter()
    for a_deg in azimuth_grid_deg:
        a = math.radians(a_deg)
        pos = np.array([center[0] + radius * math.cos(a),
                        center[1] + radius * math.sin(a), config.ue_z])
        normal = np.array([math.cos(a), math.sin(a), 0.0])
        served = serving_emitters(scenario, pos, normal, active)
        if not served:
            uncovered += 1
            rows.append((float(a_deg), len(active), float("nan"), float("nan"),
                         float("nan"), float("nan"), 0, config.seed))
            continue

        best_p, best_d = -1.0, None
        for v, dist, cos_psi in served:
            p_los = float(axial_power(v.mode_a, config.pd.area_m2, dist)) * cos_psi
            if p_los > best_p:
                best_p, best_d = p_los, float(dist)
        if noise_mode == "off":
            dd_mm = 0.0
        else:
            if noise_mode == "literal":
                from .optical import noise_psd
                p_n = config.pd.bandwidth_hz * noise_psd(best_p, config.pd,
                                                         config.noise)
            else:
                p_n = p_n_fixed
            try:
                dd_mm = 1000.0 * ranging_error(best_d, z_ra, best_p / p_n)
            except NoiseDominatedError:
                uncovered += 1
                rows.append((float(a_deg), len(active), float("nan"),
                             float("nan"), float("nan"), float("nan"), 0,
                             config.seed))
                continue
        rows.append((float(a_deg), len(active), dd_mm, dd_mm, dd_mm, dd_mm,
                     1, config.seed))
    if uncovered:
        warnings.append(f"L={len(active)}: {uncovered} bearing(s) not covered")
    return SweepResult(figure="fig2", header=FIG2_HEADER, rows=tuple(rows),
                       seed=config.seed, config_fingerprint=fingerprint,
                       warnings=tuple(warnings),
                       timings={"sweep_s": time.perf_counter() - t0})


def _sample_pose(config, rng):
    x = rng.uniform(config.ue_x[0], config.ue_x[1])
    y = rng.uniform(config.ue_y[0], config.ue_y[1])
    az = rng.uniform(0.0, 2.0 * math.pi)
    position = np.array([x, y, config.ue_z])
    normal = np.array([math.cos(az), math.sin(az), 0.0])
    return position, normal


def _localize_draw(scenario, active, position, normal):
    measurements = synthesize_measurements(scenario, position, normal,
                                           active_ids=active, noise_mode="off")
    return localize(measurements, scenario.vcsels, scenario.config.pd,
                    scenario.room, power_floor=scenario.config.power_floor_w)


def _best_rate_factor(scenario, panels, estimate, position, normal, grid):
    """l_p * G_r of the best feasible route; 0.0 on total infeasibility."""
    ue_node = routing.UeNode(
        position=tuple(np.asarray(estimate.position, float)),
        normal=tuple(np.asarray(estimate.orientation, float)),
        cone_half_angle=scenario.config.mmwave.ue_directivity_rad,
        pd_fov=scenario.config.pd.fov_half_angle_rad)
    routes = routing.enumerate_routes(panels, scenario.ap, ue_node)
    ctx = routing.RouteContext(
        panels_by_id={p.id: p for p in panels}, ap=scenario.ap,
        params=scenario.config.mmwave,
        true_ue_position=tuple(position), true_ue_normal=tuple(normal),
        est_ue_position=tuple(np.asarray(estimate.position, float)),
        grid=grid)
    budget = routing.best_route(routes, ctx)
    if not budget.feasible:
        return 0.0
    return budget.route_gain * budget.path_loss


def make_snr_rate_kernel(scenario, active_panels, snr_grid_db):
    """Per-draw kernel returning the rate at each SNR plus a coverage flag."""
    config = scenario.config
    active = tuple(active_panels)
    panels = [p for p in scenario.panels if p.id in active]
    grid = scenario.figure_grid()
    gammas = 10.0 ** (np.asarray(snr_grid_db, dtype=float) / 10.0)
    g_t = config.mmwave.tx_gain

    def kernel(index, rng):
        position, normal = _sample_pose(config, rng)
        try:
            estimate = _localize_draw(scenario, active, position, normal)
        except SimulationError:
            return np.zeros(gammas.shape[0] + 1)
        factor = _best_rate_factor(scenario, panels, estimate, position,
                                   normal, grid)
        rates = np.log2(1.0 + factor * g_t * gammas)
        return np.append(rates, 1.0)

    return kernel


def make_elements_rate_kernel(scenario, active_panels, element_grid, snr_db):
    """Per-draw kernel sweeping the reflecting-element count per panel."""
    config = scenario.config
    active = tuple(active_panels)
    base_panels = [p for p in scenario.panels if p.id in active]
    grid = scenario.figure_grid()
    gamma = 10.0 ** (float(snr_db) / 10.0)
    g_t = config.mmwave.tx_gain
    sides = [int(round(math.sqrt(n))) for n in element_grid]

    def kernel(index, rng):
        position, normal = _sample_pose(config, rng)
        try:
            estimate = _localize_draw(scenario, active, position, normal)
        except SimulationError:
            return np.zeros(len(sides) + 1)
        out = np.empty(len(sides) + 1)
        for j, side in enumerate(sides):
            panels = [replace(p, m_rows=side, n_cols=side, vcsel_ids=())
                      for p in base_panels]
            factor = _best_rate_factor(scenario, panels, estimate, position,
                                       normal, grid)
            out[j] = math.log2(1.0 + factor * g_t * gamma)
        out[-1] = 1.0
        return out

    return kernel


def _quadrature_warnings(scenario, panels):
    """One-time convergence check of the figure-grid normalization."""
    grid = replace(scenario.figure_grid(), validate=True)
    panel = panels[0]
    frame = routing.panel_frame(panel)
    probe = frame.to_global(np.array([0.0, 0.0, 3.0]))
    ctx_tx = frame.to_local(np.asarray(scenario.ap.position, float))
    t_hat, p_hat = frame.pattern_angles(np.asarray(probe, float))
    profile = mmwave.steering_phase_profile(
        panel, t_hat, p_hat, ctx_tx, frame.to_local(probe),
        scenario.config.mmwave.wavenumber)
    try:
        mmwave.directional_gain(panel, profile, t_hat, p_hat, grid=grid)
    except QuadratureAccuracyError as err:
        return (f"quadrature convergence check failed at step "
                f"{grid.step_deg} deg: {err.diagnostics}",)
    return ()


def _rate_sweep(scenario, figure, header, axis_values, kernel, iterations,
                workers, fingerprint, panel_count):
    config = scenario.config
    t0 = time.perf_counter()
    result = monte_carlo(kernel, iterations=iterations, seed=config.seed,
                         workers=workers, width=len(axis_values) + 1)
    agg = result.aggregates()
    covered = int(np.nansum(result.values[:, -1]))
    rows = []
    for j, axis in enumerate(axis_values):
        rows.append((axis, panel_count, float(agg["mean"][j]),
                     float(agg["p5"][j]), float(agg["p50"][j]),
                     float(agg["p95"][j]), int(agg["n"]), config.seed))
    warnings = []
    outages = result.effective_n - covered
    if outages:
        warnings.append(f"L={panel_count}: {outages}/{result.effective_n} "
                        "draws lacked a position fix (zero rate)")
    if result.error_count:
        warnings.append(f"L={panel_count}: {result.error_count} draw errors "
                        f"excluded, first: {result.error_examples[:3]}")
    return SweepResult(figure=figure, header=header, rows=tuple(rows),
                       seed=config.seed, config_fingerprint=fingerprint,
                       warnings=tuple(warnings),
                       timings={"sweep_s": time.perf_counter() - t0})


def run_rate_vs_snr(scenario, active_panels, snr_grid_db=None, iterations=None,
                    workers=None, fingerprint=""):
    """Mean spectral efficiency against transmit SNR for one panel subset."""
    config = scenario.config
    snr_grid_db = tuple(config.snr_grid_db if snr_grid_db is None
                        else snr_grid_db)
    if list(snr_grid_db) != sorted(snr_grid_db):
        raise SimulationError("SNR grid must be ascending")
    iterations = iterations or config.figure_iterations
    workers = workers or config.workers
    active = tuple(active_panels)
    kernel = make_snr_rate_kernel(scenario, active, snr_grid_db)
    result = _rate_sweep(scenario, "fig3", FIG3_HEADER, snr_grid_db, kernel,
                         iterations, workers, fingerprint, len(active))
    warn = _quadrature_warnings(scenario,
                                [p for p in scenario.panels if p.id in active])
    return replace(result, warnings=result.warnings + warn)


def run_rate_vs_elements(scenario, active_panels, element_grid=None,
                         snr_db=None, iterations=None, workers=None,
                         fingerprint=""):
    """Mean spectral efficiency against per-panel element count."""
    config = scenario.config
    element_grid = tuple(config.element_grid if element_grid is None
                         else element_grid)
    for n_el in element_grid:
        side = int(round(math.sqrt(n_el)))
        if side * side != n_el:
            raise SimulationError(
                f"element count {n_el} is not a perfect square; "
                "provide explicit (rows, cols) panels instead")
    snr_db = config.fig4_snr_db if snr_db is None else snr_db
    iterations = iterations or config.figure_iterations
    workers = workers or config.workers
    active = tuple(active_panels)
    kernel = make_elements_rate_kernel(scenario, active, element_grid, snr_db)
    return _rate_sweep(scenario, "fig4", FIG4_HEADER, element_grid, kernel,
                       iterations, workers, fingerprint, len(active))
