"""Reflecting-array far-field pattern, directional gains, and link budget.

All pattern math happens in the panel-local frame (z along the panel normal,
elements at ((m-1/2) D, (n-1/2) D, 0)); callers transform transmitter and
receiver coordinates into that frame first.  The element indexing convention
is kept exactly as stated (never re-derived from a centered layout).

The path-delay term omega uses the row index in both in-plane shift terms; a
``symmetric_n`` switch substitutes the column index into the z-shift for
comparison, at the cost of the separable fast path.

Directional gain normalizes the squared pattern over the front hemisphere by
default (a reflecting panel radiates into a half space); a full-sphere mode
is available behind a switch.
"""

import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import ArgumentError, QuadratureAccuracyError

#: element count at or above which steered quadrature uses the separable path
SEPARABLE_MIN_ELEMENTS = 1024


@dataclass(frozen=True)
class LerisPanel:
    """Reflecting array: M x N square elements of side D plus its emitters."""

    id: int
    center: tuple
    normal: tuple
    m_rows: int = 50
    n_cols: int = 50
    element_side_m: float = 0.005
    efficiency: float = 1.0
    vcsel_ids: tuple = ()

    def __post_init__(self):
        if self.m_rows < 1 or self.n_cols < 1:
            raise ArgumentError("element counts must be >= 1")
        if self.element_side_m <= 0:
            raise ArgumentError("element side must be positive")
        if not 0.0 < self.efficiency <= 1.0:
            raise ArgumentError("efficiency must lie in (0, 1]")

    @property
    def element_count(self):
        return self.m_rows * self.n_cols


@dataclass(frozen=True)
class MmWaveParams:
    wavelength_m: float = 0.01
    tx_power_w: float = 1.0
    tx_gain: float = 10.0                  # linear
    noise_power: float = 1e-13             # linear W (-130 dB)
    path_loss_exponent: float = 2.0
    ref_distance_m: float = 1.0
    ue_directivity_rad: float = math.pi / 3

    def __post_init__(self):
        for name in ("wavelength_m", "tx_power_w", "tx_gain", "noise_power",
                     "path_loss_exponent", "ref_distance_m"):
            if getattr(self, name) <= 0:
                raise ArgumentError(f"{name} must be positive")
        if not 0.0 < self.ue_directivity_rad <= math.pi:
            raise ArgumentError("ue_directivity_rad must lie in (0, pi]")

    @property
    def wavenumber(self):
        return 2.0 * math.pi / self.wavelength_m

    @property
    def tx_snr(self):
        """gamma_t = P_t / sigma^2."""
        return self.tx_power_w / self.noise_power


@dataclass(frozen=True)
class PhaseProfile:
    """Per-element phase Phi_mn on an M x N grid.

    Profiles produced by :func:`steering_phase_profile` carry the steering
    context (target angles, wavenumber, endpoint coordinates), which is what
    enables the separable evaluation path.
    """

    phases: np.ndarray
    steer_theta: float | None = None
    steer_phi: float | None = None
    k0: float | None = None
    tx_local: tuple | None = None
    rx_local: tuple | None = None

    def __post_init__(self):
        p = np.asarray(self.phases, dtype=float)
        if p.ndim != 2:
            raise ArgumentError("phase profile must be a 2-D grid")
        if not np.all(np.isfinite(p)):
            raise ArgumentError("phase profile entries must be finite")
        object.__setattr__(self, "phases", p)

    @property
    def is_steering(self):
        return self.steer_theta is not None


@dataclass(frozen=True)
class GridSpec:
    """Uniform (theta, phi) tensor quadrature grid.

    ``validate=True`` re-integrates at half step and rejects results that
    move by more than ``tol`` (a plain Richardson check).
    """

    step_deg: float = 0.25
    full_sphere: bool = False
    validate: bool = False
    tol: float = 0.01

    def __post_init__(self):
        if self.step_deg <= 0:
            raise ArgumentError("quadrature step must be positive")

    def axes(self, halve=False):
        step = math.radians(self.step_deg) / (2.0 if halve else 1.0)
        theta_max = math.pi if self.full_sphere else math.pi / 2
        n_t = max(2, int(round(theta_max / step)) + 1)
        theta = np.linspace(0.0, theta_max, n_t)
        n_p = max(4, int(round(2.0 * math.pi / step)))
        phi = np.arange(n_p) * (2.0 * math.pi / n_p)
        return theta, phi


def _check_indices(panel, m, n):
    if not 1 <= m <= panel.m_rows:
        raise ArgumentError(f"row index {m} outside 1..{panel.m_rows}")
    if n is not None and not 1 <= n <= panel.n_cols:
        raise ArgumentError(f"column index {n} outside 1..{panel.n_cols}")


def geometric_phase(panel, m, n, theta, phi, tx, rx):
    """Array-geometry path term zeta_mn (meters; multiplied by k0 in the sum).

    tx and rx are 3-vectors in the panel-local frame.
    """
    _check_indices(panel, m, n)
    tx = np.asarray(tx, dtype=float)
    rx = np.asarray(rx, dtype=float)
    d = panel.element_side_m
    st = math.sin(theta)
    return (d * st * ((m - 0.5) * math.cos(phi) + (n - 0.5) * math.sin(phi))
            + (tx[0] - rx[0]) * st * math.cos(phi)
            + (tx[1] - rx[1]) * st * math.sin(phi)
            + (tx[2] - rx[2]) * math.cos(theta))


def path_delay_phase(panel, m, theta, phi, tx, rx, k0, symmetric_n=None):
    """Transmitter-to-element path-delay phase omega_m (radians).

    Depends on the row index only, as written; passing ``symmetric_n``
    substitutes that column index into the z-shift term (the documented
    comparison variant).
    """
    _check_indices(panel, m, symmetric_n)
    tx = np.asarray(tx, dtype=float)
    rx = np.asarray(rx, dtype=float)
    d = panel.element_side_m
    z_index = m if symmetric_n is None else symmetric_n
    sc = math.sin(theta) * math.cos(phi)
    ss = math.sin(theta) * math.sin(phi)
    xs = (tx[0] - d * (m - 0.5) * sc) - rx[0]
    zs = (tx[2] - d * (z_index - 0.5) * ss) - rx[2]
    return k0 * math.sqrt(xs * xs + (tx[1] - rx[1]) ** 2 + zs * zs)


def steering_phase_profile(panel, target_theta, target_phi, tx, rx, k0):
    """Element phases that align the pattern on (target_theta, target_phi).

    Phi_mn = -k0 D sin(t) (m cos(p) + n sin(p)) - omega_m(t, p); the applied
    phase cancels the path-delay term at the target so the total phase is
    element-independent there.
    """
    d = panel.element_side_m
    st = math.sin(target_theta)
    cp = math.cos(target_phi)
    sp = math.sin(target_phi)
    m_idx = np.arange(1, panel.m_rows + 1)
    n_idx = np.arange(1, panel.n_cols + 1)
    linear = -k0 * d * st * (m_idx[:, None] * cp + n_idx[None, :] * sp)
    omega = np.array([path_delay_phase(panel, int(m), target_theta, target_phi,
                                       tx, rx, k0)
                      for m in m_idx])
    phases = linear - omega[:, None]
    return PhaseProfile(phases=phases, steer_theta=float(target_theta),
                        steer_phi=float(target_phi), k0=float(k0),
                        tx_local=tuple(np.asarray(tx, float)),
                        rx_local=tuple(np.asarray(rx, float)))


def array_factor(panel, profile, theta, phi, tx, rx, k0, symmetric_n=False):
    """Complex far-field sum F(theta, phi) for an arbitrary profile.

    |F| is bounded by the element count; single-direction evaluation, plain
    numpy (use the grid kernels for quadrature).
    """
    phases = profile.phases if isinstance(profile, PhaseProfile) \
        else np.asarray(profile, dtype=float)
    if phases.shape != (panel.m_rows, panel.n_cols):
        raise ArgumentError(
            f"profile shape {phases.shape} does not match panel "
            f"({panel.m_rows}, {panel.n_cols})")
    tx = np.asarray(tx, dtype=float)
    rx = np.asarray(rx, dtype=float)
    d = panel.element_side_m
    st = math.sin(theta)
    sc = st * math.cos(phi)
    ss = st * math.sin(phi)
    m_idx = np.arange(1, panel.m_rows + 1)
    n_idx = np.arange(1, panel.n_cols + 1)
    um = d * (m_idx - 0.5)
    un = d * (n_idx - 0.5)
    zeta = (um[:, None] * sc + un[None, :] * ss
            + (tx[0] - rx[0]) * sc + (tx[1] - rx[1]) * ss
            + (tx[2] - rx[2]) * math.cos(theta))
    xs = (tx[0] - um * sc) - rx[0]
    dy2 = (tx[1] - rx[1]) ** 2
    if symmetric_n:
        zs = (tx[2] - un * ss) - rx[2]
        omega = k0 * np.sqrt(xs[:, None] ** 2 + dy2 + zs[None, :] ** 2)
    else:
        zs = (tx[2] - um * ss) - rx[2]
        omega = (k0 * np.sqrt(xs ** 2 + dy2 + zs ** 2))[:, None]
    return complex(np.exp(1j * (k0 * zeta + omega + phases)).sum())


def pattern_power_grid(panel, profile, grid_theta, grid_phi, k0,
                       symmetric_n=False, force_direct=False):
    """|F|^2 over a (theta, phi) grid, choosing the fastest valid kernel."""
    use_separable = (isinstance(profile, PhaseProfile) and profile.is_steering
                     and not symmetric_n and not force_direct
                     and panel.element_count >= SEPARABLE_MIN_ELEMENTS)
    if use_separable:
        return kernels.separable_power_grid(
            grid_theta, grid_phi, profile.steer_theta, profile.steer_phi,
            panel.m_rows, panel.n_cols, k0, panel.element_side_m,
            profile.tx_local, profile.rx_local)
    phases = profile.phases if isinstance(profile, PhaseProfile) \
        else np.asarray(profile, dtype=float)
    if isinstance(profile, PhaseProfile) and profile.is_steering:
        tx, rx = profile.tx_local, profile.rx_local
    else:
        raise ArgumentError(
            "pattern_power_grid needs endpoint coordinates; use a steering "
            "profile or call direct_power_grid via pattern_power_grid_at")
    return kernels.direct_power_grid(grid_theta, grid_phi, phases, k0,
                                     panel.element_side_m, tx, rx,
                                     z_from_col=symmetric_n)


def pattern_power_grid_at(panel, phases, grid_theta, grid_phi, k0, tx, rx,
                          symmetric_n=False):
    """|F|^2 over a grid for an arbitrary phase array and explicit endpoints."""
    return kernels.direct_power_grid(grid_theta, grid_phi,
                                     np.asarray(phases, dtype=float), k0,
                                     panel.element_side_m,
                                     np.asarray(tx, float),
                                     np.asarray(rx, float),
                                     z_from_col=symmetric_n)


def integrate_power(power, theta, phi):
    """Integral of |F|^2 sin(theta) over the grid.

    Trapezoid along theta, periodic rectangle along phi.
    """
    weighted = power * np.sin(theta)[:, None]
    col = np.trapezoid(weighted, theta, axis=0)
    dphi = 2.0 * math.pi / phi.shape[0]
    return float(col.sum() * dphi)


def _denominator(panel, profile, grid, k0, symmetric_n, halve=False):
    theta, phi = grid.axes(halve=halve)
    if isinstance(profile, PhaseProfile) and profile.is_steering:
        power = pattern_power_grid(panel, profile, theta, phi, k0,
                                   symmetric_n=symmetric_n)
    else:
        raise ArgumentError("directional gain needs a steering profile; "
                            "for raw phase arrays use directional_gain_at")
    return integrate_power(power, theta, phi)


def directional_gain(panel, profile, theta, phi, grid=None, k0=None,
                     symmetric_n=False):
    """eta * 4 pi |F(theta, phi)|^2 / integral(|F|^2 sin) over the domain.

    With ``grid.validate`` set, the normalization integral is recomputed at
    half step and a relative change above ``grid.tol`` raises with both
    values attached.
    """
    grid = grid or GridSpec()
    if k0 is None:
        k0 = profile.k0
    if k0 is None:
        raise ArgumentError("wavenumber required (profile lacks steering context)")
    denom = _denominator(panel, profile, grid, k0, symmetric_n)
    if grid.validate:
        fine = _denominator(panel, profile, grid, k0, symmetric_n, halve=True)
        rel = abs(fine - denom) / max(abs(fine), 1e-300)
        if rel > grid.tol:
            raise QuadratureAccuracyError(
                "pattern normalization integral did not converge",
                diagnostics={"coarse": denom, "fine": fine,
                             "rel_change": rel, "step_deg": grid.step_deg})
        denom = fine
    tx, rx = profile.tx_local, profile.rx_local
    num = abs(array_factor(panel, profile, theta, phi, tx, rx, k0,
                           symmetric_n=symmetric_n)) ** 2
    return panel.efficiency * 4.0 * math.pi * num / denom


def directional_gain_at(panel, phases, theta, phi, k0, tx, rx, grid=None,
                        symmetric_n=False):
    """Directional gain for an arbitrary phase array with explicit endpoints."""
    grid = grid or GridSpec()
    gt, gp = grid.axes()
    power = pattern_power_grid_at(panel, phases, gt, gp, k0, tx, rx,
                                  symmetric_n=symmetric_n)
    denom = integrate_power(power, gt, gp)
    if grid.validate:
        ft, fp = grid.axes(halve=True)
        fine = integrate_power(
            pattern_power_grid_at(panel, phases, ft, fp, k0, tx, rx,
                                  symmetric_n=symmetric_n), ft, fp)
        rel = abs(fine - denom) / max(abs(fine), 1e-300)
        if rel > grid.tol:
            raise QuadratureAccuracyError(
                "pattern normalization integral did not converge",
                diagnostics={"coarse": denom, "fine": fine,
                             "rel_change": rel, "step_deg": grid.step_deg})
        denom = fine
    num = abs(array_factor(panel, phases, theta, phi, tx, rx, k0,
                           symmetric_n=symmetric_n)) ** 2
    return panel.efficiency * 4.0 * math.pi * num / denom


def max_gain(panel):
    """Peak gain under fully constructive interference: eta * M * N."""
    return panel.efficiency * panel.element_count


def effective_aperture(panel, wavelength_m):
    """Aperture M N lambda^2 / (4 pi), square meters."""
    return panel.element_count * wavelength_m ** 2 / (4.0 * math.pi)


def cascaded_gain(panels, wavelength_m):
    """Product of aperture x peak gain over the perfectly steered hops.

    Pass the first L-1 panels of an L-hop route; the empty list gives 1.
    """
    g = 1.0
    for p in panels:
        g *= effective_aperture(p, wavelength_m) * max_gain(p)
    return g


def ue_antenna_gain(theta_u, theta_m):
    """Receive gain 2 pi / theta_m inside the cone |theta_u| <= theta_m, else 0."""
    if not 0.0 < theta_m <= math.pi:
        raise ArgumentError("directivity angle must lie in (0, pi]")
    return 2.0 * math.pi / theta_m if abs(theta_u) <= theta_m else 0.0


def total_route_gain(route_panels, params, final_gain, theta_u):
    """Gain accumulated along a route whose final hop has gain ``final_gain``.

    Product of the perfectly steered cascade over all but the last panel,
    the last panel's aperture, the estimate-steered directional gain of the
    last panel evaluated at the true direction, and the receive-cone gain.
    """
    if not route_panels:
        raise ArgumentError("route must contain at least one panel")
    cas = cascaded_gain(route_panels[:-1], params.wavelength_m)
    aperture = effective_aperture(route_panels[-1], params.wavelength_m)
    return cas * aperture * final_gain * ue_antenna_gain(
        theta_u, params.ue_directivity_rad)


def path_loss(segment_lengths, params):
    """Product of per-segment reference losses C0 (d/d0)^(-n), linear."""
    lengths = np.asarray(segment_lengths, dtype=float)
    if lengths.size == 0:
        raise ArgumentError("at least one segment required")
    if np.any(lengths <= 0):
        raise ArgumentError("segment lengths must be positive")
    d0 = params.ref_distance_m
    c0 = params.wavelength_m ** 2 / (4.0 * math.pi * d0) ** 2
    exps = np.broadcast_to(np.asarray(params.path_loss_exponent, dtype=float),
                           lengths.shape)
    return float(np.prod(c0 * (lengths / d0) ** (-exps)))


def spectral_efficiency(route_gain, loss, params, literal_extra_sigma=False):
    """Achievable bits/s/Hz: log2(1 + l_p * G_t * gamma_t * G_r).

    ``literal_extra_sigma`` divides the argument by the noise power once
    more, reproducing the doubled-denominator variant verbatim; default is
    the physically consistent received SNR.
    """
    if route_gain < 0 or loss < 0:
        raise ArgumentError("gain and loss must be >= 0")
    snr = loss * params.tx_gain * params.tx_snr * route_gain
    if literal_extra_sigma:
        snr /= params.noise_power
    return math.log2(1.0 + snr)
