"""Scenario construction: room, wall panels, perimeter emitters, sampling.

Default layout: four panels centered on the walls of a 10 x 10 x 3 m room at
1.5 m height, each carrying 24 dual-mode emitters spaced uniformly around
the array perimeter.  Each panel covers a 120 degree horizontal sector split
into contiguous 5 degree scan segments (one per emitter), with boresight
elevations cycling through +-25, +-15, +-5 degrees along the perimeter.

Serving model: the per-emitter scan segments are a scheduling detail of the
sweep; over a scan epoch every emitter on a panel targets any user whose
bearing falls inside the panel sector, so all of a serving panel's emitters
contribute measurements, each evaluated at boresight alignment (zero
irradiance angle).  The segment assignment is retained on each emitter and
identifies the segment owner where a single emitter is needed.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError
from .geometry import PanelFrame, Room
from .localization import LD, OpticalMeasurement, axial_power
from .mmwave import GridSpec, LerisPanel, MmWaveParams
from .optical import NOISE_MODES, NoiseParams, Photodetector, Vcsel, VcselMode
from .routing import ApNode


def _table_panels():
    return (
        PanelPlacement(id=1, center=(0.0, 5.0, 1.5), normal=(1.0, 0.0, 0.0)),
        PanelPlacement(id=2, center=(10.0, 5.0, 1.5), normal=(-1.0, 0.0, 0.0)),
        PanelPlacement(id=3, center=(5.0, 0.0, 1.5), normal=(0.0, 1.0, 0.0)),
        PanelPlacement(id=4, center=(5.0, 10.0, 1.5), normal=(0.0, -1.0, 0.0)),
    )


@dataclass(frozen=True)
class PanelPlacement:
    id: int
    center: tuple
    normal: tuple
    m_rows: int = 50
    n_cols: int = 50
    element_side_m: float = 0.005
    efficiency: float = 1.0


@dataclass(frozen=True)
class ScenarioConfig:
    """Complete desk-scale scenario description with table defaults."""

    room_lo: tuple = (0.0, 0.0, 0.0)
    room_hi: tuple = (10.0, 10.0, 3.0)
    panels: tuple = field(default_factory=_table_panels)

    vcsels_per_panel: int = 24
    panel_sector_rad: float = 2.0 * math.pi / 3.0
    elevation_span_rad: float = math.pi / 3.0

    mode_a: VcselMode = VcselMode(0.01, 5.6e-6, 950e-9)
    mode_b: VcselMode = VcselMode(0.01, 11.2e-6, 950e-9)
    pd: Photodetector = Photodetector()
    noise: NoiseParams = NoiseParams()
    noise_mode: str = "fixed"
    power_floor_w: float = 1e-12

    mmwave: MmWaveParams = MmWaveParams()
    ap_position: tuple = (5.0, -1.0, 1.5)
    ap_boresight: tuple = (0.0, 1.0, 0.0)

    ue_x: tuple = (0.0, 10.0)
    ue_y: tuple = (0.0, 10.0)
    ue_z: float = 1.5

    iterations: int = 100000
    seed: int = 20240915
    workers: int = 1

    quadrature_deg: float = 0.25
    figure_quadrature_deg: float = 1.0
    figure_iterations: int = 5000

    panel_subsets: tuple = ((2,), (1, 2), (1, 2, 3, 4))
    fig2_ring_radius_m: float = 3.0
    fig2_azimuth_step_deg: float = 1.0
    snr_grid_db: tuple = (90.0, 95.0, 100.0, 105.0, 110.0, 115.0,
                          120.0, 125.0, 130.0)
    element_grid: tuple = (100, 400, 900, 1600, 2500)
    fig4_snr_db: float = 130.0

    @property
    def sector_width_rad(self):
        return self.panel_sector_rad / self.vcsels_per_panel


@dataclass(frozen=True)
class Scenario:
    config: ScenarioConfig
    room: Room
    panels: tuple
    vcsels: tuple
    ap: ApNode

    @property
    def panels_by_id(self):
        return {p.id: p for p in self.panels}

    @property
    def vcsels_by_id(self):
        return {v.id: v for v in self.vcsels}

    def vcsels_of_panel(self, panel_id):
        return [v for v in self.vcsels if v.panel_id == panel_id]

    def query_grid(self):
        return GridSpec(step_deg=self.config.quadrature_deg)

    def figure_grid(self):
        return GridSpec(step_deg=self.config.figure_quadrature_deg)


#: boresight elevation cycle along the perimeter, radians
ELEVATION_CYCLE_DEG = (-25.0, -15.0, -5.0, 5.0, 15.0, 25.0)


def _perimeter_point(arc, side1, side2):
    """Point on the rectangle boundary at arclength ``arc`` from the corner.

    Rectangle spans [-side1/2, side1/2] x [-side2/2, side2/2]; the walk
    starts at the (-,-) corner and runs counterclockwise.
    """
    per = 2.0 * (side1 + side2)
    arc = arc % per
    if arc < side1:
        return (-side1 / 2 + arc, -side2 / 2)
    arc -= side1
    if arc < side2:
        return (side1 / 2, -side2 / 2 + arc)
    arc -= side2
    if arc < side1:
        return (side1 / 2 - arc, side2 / 2)
    arc -= side1
    return (-side1 / 2, side2 / 2 - arc)


def validate_config(config):
    """Collect every violated constraint; empty list means valid."""
    problems = []
    room = Room(lo=tuple(config.room_lo), hi=tuple(config.room_hi))
    if np.any(np.asarray(room.hi) <= np.asarray(room.lo)):
        problems.append("room extents must have positive volume")
    if config.vcsels_per_panel < 1:
        problems.append("vcsels_per_panel must be >= 1")
    if not 0 < config.panel_sector_rad <= 2 * math.pi:
        problems.append("panel sector must lie in (0, 2*pi]")
    if not 0 <= config.elevation_span_rad < math.pi:
        problems.append("elevation span must lie in [0, pi)")
    if config.noise_mode not in NOISE_MODES:
        problems.append(f"noise_mode must be one of {NOISE_MODES}")
    if config.power_floor_w < 0:
        problems.append("power floor must be >= 0")
    if config.iterations < 1:
        problems.append("iterations must be >= 1")
    if config.workers < 1:
        problems.append("workers must be >= 1")
    if config.quadrature_deg <= 0 or config.figure_quadrature_deg <= 0:
        problems.append("quadrature steps must be positive")
    if not config.panels:
        problems.append("at least one panel required")
    ids = [p.id for p in config.panels]
    if len(set(ids)) != len(ids):
        problems.append("panel ids must be unique")
    for p in config.panels:
        if not room.on_boundary(p.center):
            problems.append(f"panel {p.id} center {p.center} is not on the "
                            "room boundary")
        if p.m_rows < 1 or p.n_cols < 1 or p.element_side_m <= 0:
            problems.append(f"panel {p.id} has invalid array dimensions")
        if not 0 < p.efficiency <= 1:
            problems.append(f"panel {p.id} efficiency outside (0, 1]")
    za = config.mode_a.rayleigh_range_m
    zb = config.mode_b.rayleigh_range_m
    if abs(za - zb) <= 1e-15 * max(za, zb):
        problems.append("modes a and b must have distinct Rayleigh ranges")
    subset_ids = {i for s in config.panel_subsets for i in s}
    if not subset_ids <= set(ids):
        problems.append("panel_subsets reference unknown panel ids")
    for n_el in config.element_grid:
        side = int(round(math.sqrt(n_el)))
        if side * side != n_el:
            problems.append(f"element grid value {n_el} is not a perfect square")
    return problems


def build_scenario(config=None):
    """Instantiate panels and perimeter emitters from a config.

    Deterministic given the config; raises with the full violation list on
    invalid input.
    """
    config = config or ScenarioConfig()
    problems = validate_config(config)
    if problems:
        raise ConfigError("invalid scenario configuration", violations=problems)

    room = Room(lo=tuple(config.room_lo), hi=tuple(config.room_hi))
    panels = []
    vcsels = []
    sector_half = config.panel_sector_rad / 2.0
    width = config.sector_width_rad
    for placement in config.panels:
        frame = PanelFrame.from_center_normal(placement.center, placement.normal)
        side1 = placement.m_rows * placement.element_side_m
        side2 = placement.n_cols * placement.element_side_m
        per = 2.0 * (side1 + side2)
        ids = []
        for k in range(config.vcsels_per_panel):
            arc = (k + 0.5) * per / config.vcsels_per_panel
            x1, x2 = _perimeter_point(arc, side1, side2)
            pos = frame.to_global(np.array([x1, x2, 0.0]))
            lo = -sector_half + k * width
            hi = lo + width
            az = lo + width / 2.0
            el = math.radians(
                ELEVATION_CYCLE_DEG[k % len(ELEVATION_CYCLE_DEG)]) \
                if config.elevation_span_rad > 0 else 0.0
            e1 = np.asarray(frame.e1)
            nrm = np.asarray(frame.normal)
            bore = (math.cos(el) * (math.cos(az) * nrm + math.sin(az) * e1)
                    + math.sin(el) * np.array([0.0, 0.0, 1.0]))
            vid = f"p{placement.id}:v{k:02d}"
            ids.append(vid)
            vcsels.append(Vcsel(id=vid, position=tuple(pos),
                                boresight=tuple(bore),
                                azimuth_sector=(lo, hi),
                                mode_a=config.mode_a, mode_b=config.mode_b,
                                panel_id=placement.id))
        panels.append(LerisPanel(id=placement.id, center=tuple(placement.center),
                                 normal=tuple(placement.normal),
                                 m_rows=placement.m_rows,
                                 n_cols=placement.n_cols,
                                 element_side_m=placement.element_side_m,
                                 efficiency=placement.efficiency,
                                 vcsel_ids=tuple(ids)))
    ap = ApNode(position=tuple(config.ap_position),
                boresight=tuple(np.asarray(config.ap_boresight, float)
                                / np.linalg.norm(config.ap_boresight)))
    return Scenario(config=config, room=room, panels=tuple(panels),
                    vcsels=tuple(vcsels), ap=ap)


def panel_bearing(panel, point):
    """Signed horizontal bearing of a point in the panel frame."""
    frame = PanelFrame.from_center_normal(panel.center, panel.normal)
    return frame.horizontal_azimuth(np.asarray(point, float))


def serving_panels(scenario, ue_position, active_ids=None):
    """Panels whose horizontal sector contains the user bearing."""
    half = scenario.config.panel_sector_rad / 2.0
    out = []
    for panel in scenario.panels:
        if active_ids is not None and panel.id not in active_ids:
            continue
        if abs(panel_bearing(panel, ue_position)) <= half:
            out.append(panel)
    return out


def segment_owner(scenario, panel, ue_position):
    """The emitter whose scan segment contains the user bearing, or None."""
    bearing = panel_bearing(panel, ue_position)
    for v in scenario.vcsels_of_panel(panel.id):
        lo, hi = v.azimuth_sector
        if lo <= bearing < hi:
            return v
    return None


def serving_emitters(scenario, ue_position, ue_normal, active_ids=None):
    """(vcsel, distance, cos_psi) for every emitter that can range the user.

    Requires the user inside the panel sector and the emitter inside the
    detector field of view (cos_psi positive within the half-angle).
    """
    ue = np.asarray(ue_position, dtype=LD)
    n = np.asarray(ue_normal, dtype=LD)
    fov_cos = math.cos(scenario.config.pd.fov_half_angle_rad)
    out = []
    for panel in serving_panels(scenario, ue_position, active_ids):
        for v in scenario.vcsels_of_panel(panel.id):
            delta = np.asarray(v.position, dtype=LD) - ue
            dist = np.sqrt(np.dot(delta, delta))
            if dist == 0.0:
                continue
            cos_psi = float(np.dot(n, delta) / dist)
            if cos_psi <= 0.0 or cos_psi < fov_cos - 1e-15:
                continue
            out.append((v, dist, cos_psi))
    return out


def synthesize_measurements(scenario, ue_position, ue_normal,
                            active_ids=None, noise_mode=None, rng=None):
    """Dual-mode received powers for every serving emitter.

    Powers are computed in extended precision at boresight alignment (the
    scanning emitter points at the user); the configured noise mode is
    applied per mode.  Deterministic modes preserve extended precision.
    """
    from .optical import measured_power

    noise_mode = noise_mode or scenario.config.noise_mode
    pd = scenario.config.pd
    noise = scenario.config.noise
    measurements = []
    for v, dist, cos_psi in serving_emitters(scenario, ue_position, ue_normal,
                                             active_ids):
        for label, mode in (("a", v.mode_a), ("b", v.mode_b)):
            p_los = axial_power(mode, pd.area_m2, dist) * LD(cos_psi)
            p_meas = measured_power(p_los, pd, noise, mode=noise_mode, rng=rng)
            measurements.append(OpticalMeasurement(
                vcsel_id=v.id, mode_label=label,
                received_power_w=float(p_meas) if noise_mode == "stochastic"
                else p_meas))
    return measurements
