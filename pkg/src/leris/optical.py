"""Gaussian-beam propagation, received optical power, and receiver noise.

The emitters are narrow-beam lasers operated in two transverse modes with
distinct waists; received power follows the Gaussian transverse profile
filtered by the photodetector field of view.

Noise units caveat: the measured-power model adds a quantity with
photocurrent-variance units (A^2) to optical watts.  Rather than silently
"fixing" the inconsistency, three explicit noise modes are provided:

* ``literal``    - add bandwidth times the one-sided PSD, exactly as written;
* ``fixed``      - add the configured constant noise variance as a bias
                   (this is the form the analytic ranging-error model uses);
* ``stochastic`` - add a zero-mean Gaussian draw whose variance equals the
                   fixed value, clamped at zero (requires an RNG);
* ``off``        - return the line-of-sight power unchanged.

Default is ``fixed``.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import ArgumentError, BehindEmitterError, ConfigError

#: exact SI values
BOLTZMANN = 1.380649e-23
ELECTRON_CHARGE = 1.602176634e-19

NOISE_MODES = ("literal", "fixed", "stochastic", "off")


@dataclass(frozen=True)
class VcselMode:
    """One transverse lasing mode of an emitter.

    The Rayleigh range and divergence are derived from (waist, wavelength)
    and never configured independently, keeping the quadruple consistent by
    construction.
    """

    transmit_power_w: float
    beam_waist_m: float
    wavelength_m: float

    def __post_init__(self):
        if self.transmit_power_w <= 0:
            raise ArgumentError("transmit power must be positive")
        if self.beam_waist_m <= 0 or self.wavelength_m <= 0:
            raise ArgumentError("waist and wavelength must be positive")

    @property
    def rayleigh_range_m(self):
        return math.pi * self.beam_waist_m ** 2 / self.wavelength_m

    @property
    def divergence_rad(self):
        return self.wavelength_m / (math.pi * self.beam_waist_m)


@dataclass(frozen=True)
class Vcsel:
    """Dual-mode emitter mounted on a panel perimeter.

    ``azimuth_sector`` is the (lo, hi) horizontal scan segment assigned to
    this emitter within its panel's sector, radians in the panel frame.
    """

    id: str
    position: tuple
    boresight: tuple
    azimuth_sector: tuple
    mode_a: VcselMode
    mode_b: VcselMode
    panel_id: int

    def __post_init__(self):
        za = self.mode_a.rayleigh_range_m
        zb = self.mode_b.rayleigh_range_m
        if abs(za - zb) <= 1e-15 * max(za, zb):
            raise ArgumentError(
                "modes must have distinct Rayleigh ranges for identifiability")


@dataclass(frozen=True)
class Photodetector:
    area_m2: float = 1e-4
    fov_half_angle_rad: float = math.pi / 2
    responsivity_a_per_w: float = 0.7
    bandwidth_hz: float = 1e9
    normal: tuple | None = None

    def __post_init__(self):
        if self.area_m2 <= 0:
            raise ArgumentError("detector area must be positive")
        if not 0.0 < self.fov_half_angle_rad <= math.pi / 2:
            raise ArgumentError("FoV half-angle must lie in (0, pi/2]")


@dataclass(frozen=True)
class NoiseParams:
    """Receiver noise constants; noise figure stored linear, RIN per Hz."""

    boltzmann: float = BOLTZMANN
    temperature_k: float = 300.0
    noise_figure: float = 10 ** 0.5          # 5 dB
    load_ohms: float = 50.0
    electron_charge: float = ELECTRON_CHARGE
    rin_per_hz: float = 10 ** (-15.5)        # -155 dB/Hz
    fixed_variance: float = 2.5e-12

    def __post_init__(self):
        for name in ("boltzmann", "temperature_k", "noise_figure", "load_ohms",
                     "electron_charge"):
            if getattr(self, name) <= 0:
                raise ArgumentError(f"{name} must be positive")
        if self.rin_per_hz < 0 or self.fixed_variance < 0:
            raise ArgumentError("rin_per_hz and fixed_variance must be >= 0")

    @property
    def thermal_term(self):
        """4 k_B T F_n / R_L."""
        return (4.0 * self.boltzmann * self.temperature_k * self.noise_figure
                / self.load_ohms)


def spot_size(mode, axial_distance):
    """Beam radius w0 * sqrt(1 + (d/z_R)^2) at axial distance d >= 0."""
    d = np.asarray(axial_distance)
    if np.any(d < 0):
        raise ArgumentError("axial distance must be >= 0")
    zr = mode.rayleigh_range_m
    return mode.beam_waist_m * np.sqrt(1.0 + (d / zr) ** 2)


def gaussian_intensity(mode, radial_offset, axial_distance):
    """Transverse Gaussian irradiance 2P/(pi w^2) exp(-2 r^2 / w^2), W/m^2."""
    w = spot_size(mode, axial_distance)
    r = np.asarray(radial_offset)
    return (2.0 * mode.transmit_power_w / (np.pi * w ** 2)
            * np.exp(-2.0 * r ** 2 / w ** 2))


def angular_intensity(mode, distance, irradiance_angle):
    """Irradiance at range ``distance`` and off-axis angle ``irradiance_angle``.

    The axial argument is d*cos(phi) and the radial argument d*sin(phi); the
    receiver must be in front of the emitter (|phi| < pi/2).
    """
    phi = np.asarray(irradiance_angle)
    if np.any(np.abs(phi) >= np.pi / 2):
        raise BehindEmitterError("irradiance angle must satisfy |phi| < pi/2")
    d = np.asarray(distance)
    if np.any(d < 0):
        raise ArgumentError("distance must be >= 0")
    return gaussian_intensity(mode, d * np.sin(phi), d * np.cos(phi))


def received_los_power(mode, distance, irradiance_angle, pd, incidence_angle):
    """Line-of-sight optical power on the detector, zero outside its FoV.

    The FoV gate is the indicator psi <= Psi with Psi the configured
    half-angle (boundary inclusive); never negative.
    """
    if np.any(np.asarray(distance) <= 0):
        raise ArgumentError("distance must be > 0")
    psi = np.asarray(incidence_angle)
    inten = angular_intensity(mode, distance, irradiance_angle)
    gate = np.abs(psi) <= pd.fov_half_angle_rad
    p = inten * pd.area_m2 * np.cos(psi) * gate
    return np.maximum(p, 0.0)


def noise_psd_terms(p_los, pd, noise):
    """(thermal, shot, RIN) contributions to the one-sided PSD."""
    if np.any(np.asarray(p_los) < 0):
        raise ArgumentError("line-of-sight power must be >= 0")
    i_ph = pd.responsivity_a_per_w * np.asarray(p_los)
    thermal = noise.thermal_term
    shot = 2.0 * noise.electron_charge * i_ph
    rin = noise.rin_per_hz * i_ph ** 2
    return thermal, shot, rin


def noise_psd(p_los, pd, noise):
    """One-sided PSD: A_K + R*P*(2q + RIN*R*P); strictly increasing in P."""
    thermal, shot, rin = noise_psd_terms(p_los, pd, noise)
    return thermal + shot + rin


def noise_power(p_los, pd, noise, mode="fixed"):
    """Noise term added to the line-of-sight power under each mode."""
    p = np.asarray(p_los)
    if mode == "off":
        return np.zeros_like(p)
    if mode == "fixed":
        return np.full_like(p, noise.fixed_variance)
    if mode == "literal":
        return pd.bandwidth_hz * noise_psd(p, pd, noise)
    raise ArgumentError(f"unknown deterministic noise mode {mode!r}")


def measured_power(p_los, pd, noise, mode="fixed", rng=None):
    """Measured power at the detector under the selected noise mode.

    The stochastic mode draws from N(0, fixed_variance) and clamps the sum
    at zero; it requires an explicit RNG for reproducibility.
    """
    if mode not in NOISE_MODES:
        raise ArgumentError(f"noise mode must be one of {NOISE_MODES}")
    p = np.asarray(p_los)
    if np.any(p < 0):
        raise ArgumentError("line-of-sight power must be >= 0")
    if mode == "stochastic":
        if rng is None:
            raise ConfigError("stochastic noise mode requires an explicit RNG seed")
        draw = rng.normal(0.0, math.sqrt(noise.fixed_variance), size=np.shape(p))
        return np.maximum(p + draw, 0.0)
    return p + noise_power(p, pd, noise, mode)
