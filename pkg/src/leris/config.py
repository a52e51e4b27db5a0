"""JSON configuration: defaults, canonicalization, fingerprint, unit boundary.

The canonical form of a configuration is the user's document deep-merged
over the full defaults (unknown keys rejected).  Merging is idempotent, so
parse -> canonicalize -> re-parse is a fixed point byte for byte.  The
fingerprint is the SHA-256 of the canonical JSON.

All decibel and degree fields live only in this file; the dataclasses built
here carry linear units and radians exclusively.
"""

import hashlib
import json
import math

from .errors import ConfigError
from .mmwave import MmWaveParams
from .optical import NoiseParams, Photodetector, VcselMode
from .scenario import PanelPlacement, ScenarioConfig


def default_config_dict():
    """Complete table-default configuration document."""
    return {
        "room": {"lo": [0.0, 0.0, 0.0], "hi": [10.0, 10.0, 3.0]},
        "panels": [
            {"id": 1, "center": [0.0, 5.0, 1.5], "normal": [1.0, 0.0, 0.0],
             "m_rows": 50, "n_cols": 50, "element_side_m": 0.005,
             "efficiency": 1.0},
            {"id": 2, "center": [10.0, 5.0, 1.5], "normal": [-1.0, 0.0, 0.0],
             "m_rows": 50, "n_cols": 50, "element_side_m": 0.005,
             "efficiency": 1.0},
            {"id": 3, "center": [5.0, 0.0, 1.5], "normal": [0.0, 1.0, 0.0],
             "m_rows": 50, "n_cols": 50, "element_side_m": 0.005,
             "efficiency": 1.0},
            {"id": 4, "center": [5.0, 10.0, 1.5], "normal": [0.0, -1.0, 0.0],
             "m_rows": 50, "n_cols": 50, "element_side_m": 0.005,
             "efficiency": 1.0},
        ],
        "optical": {
            "vcsels_per_panel": 24,
            "panel_sector_deg": 120.0,
            "elevation_span_deg": 60.0,
            "mode_a": {"transmit_power_w": 0.01, "beam_waist_m": 5.6e-6,
                       "wavelength_m": 9.5e-7},
            "mode_b": {"transmit_power_w": 0.01, "beam_waist_m": 1.12e-5,
                       "wavelength_m": 9.5e-7},
            "pd": {"area_m2": 1e-4, "fov_half_angle_deg": 90.0,
                   "responsivity_a_per_w": 0.7, "bandwidth_hz": 1e9},
            "noise": {"temperature_k": 300.0, "noise_figure_db": 5.0,
                      "load_ohms": 50.0, "rin_db_per_hz": -155.0,
                      "fixed_variance": 2.5e-12},
            "noise_mode": "fixed",
            "power_floor_w": 1e-12,
        },
        "mmwave": {
            "wavelength_m": 0.01, "tx_power_w": 1.0, "tx_gain_db": 10.0,
            "noise_power_db": -130.0, "path_loss_exponent": 2.0,
            "ref_distance_m": 1.0, "ue_directivity_deg": 60.0,
            "ap_position": [5.0, -1.0, 1.5], "ap_boresight": [0.0, 1.0, 0.0],
        },
        "sampling": {
            "ue_x": [0.0, 10.0], "ue_y": [0.0, 10.0], "ue_z": 1.5,
            "iterations": 100000, "seed": 20240915, "workers": 1,
        },
        "quadrature": {"query_step_deg": 0.25, "figure_step_deg": 1.0},
        "figures": {
            "iterations": 5000,
            "panel_subsets": [[2], [1, 2], [1, 2, 3, 4]],
            "fig2": {"ring_radius_m": 3.0, "azimuth_step_deg": 1.0},
            "fig3": {"snr_grid_db": [90.0, 95.0, 100.0, 105.0, 110.0,
                                     115.0, 120.0, 125.0, 130.0]},
            "fig4": {"element_grid": [100, 400, 900, 1600, 2500],
                     "snr_db": 130.0},
        },
    }


def _merge(defaults, user, path=""):
    """Deep merge with unknown-key rejection; lists replace wholesale."""
    if not isinstance(user, dict):
        raise ConfigError(f"expected an object at {path or 'top level'}",
                          violations=[f"{path or '<root>'}: not an object"])
    unknown = set(user) - set(defaults)
    if unknown:
        raise ConfigError(
            "unknown configuration keys",
            violations=[f"{path}{k}" for k in sorted(unknown)])
    out = {}
    for key, base in defaults.items():
        if key not in user:
            out[key] = base
        elif isinstance(base, dict):
            out[key] = _merge(base, user[key], path=f"{path}{key}.")
        else:
            out[key] = user[key]
    return out


def canonicalize(user_dict=None):
    """Fill defaults and normalize; idempotent."""
    return _merge(default_config_dict(), user_dict or {})


def canonical_json(canonical_dict):
    return json.dumps(canonical_dict, sort_keys=True, separators=(",", ":"))


def fingerprint(canonical_dict):
    return hashlib.sha256(canonical_json(canonical_dict).encode()).hexdigest()


def _db_to_linear(db):
    return 10.0 ** (db / 10.0)


def config_from_dict(canonical):
    """Build the runtime configuration from a canonical document.

    This is the unit boundary: decibels and degrees convert here.
    """
    c = canonical
    try:
        panels = tuple(PanelPlacement(
            id=int(p["id"]), center=tuple(p["center"]),
            normal=tuple(p["normal"]), m_rows=int(p["m_rows"]),
            n_cols=int(p["n_cols"]),
            element_side_m=float(p["element_side_m"]),
            efficiency=float(p["efficiency"])) for p in c["panels"])
        opt = c["optical"]
        mmw = c["mmwave"]
        samp = c["sampling"]
        figs = c["figures"]
        return ScenarioConfig(
            room_lo=tuple(c["room"]["lo"]), room_hi=tuple(c["room"]["hi"]),
            panels=panels,
            vcsels_per_panel=int(opt["vcsels_per_panel"]),
            panel_sector_rad=math.radians(opt["panel_sector_deg"]),
            elevation_span_rad=math.radians(opt["elevation_span_deg"]),
            mode_a=VcselMode(**opt["mode_a"]),
            mode_b=VcselMode(**opt["mode_b"]),
            pd=Photodetector(
                area_m2=float(opt["pd"]["area_m2"]),
                fov_half_angle_rad=math.radians(opt["pd"]["fov_half_angle_deg"]),
                responsivity_a_per_w=float(opt["pd"]["responsivity_a_per_w"]),
                bandwidth_hz=float(opt["pd"]["bandwidth_hz"])),
            noise=NoiseParams(
                temperature_k=float(opt["noise"]["temperature_k"]),
                noise_figure=_db_to_linear(opt["noise"]["noise_figure_db"]),
                load_ohms=float(opt["noise"]["load_ohms"]),
                rin_per_hz=_db_to_linear(opt["noise"]["rin_db_per_hz"]),
                fixed_variance=float(opt["noise"]["fixed_variance"])),
            noise_mode=str(opt["noise_mode"]),
            power_floor_w=float(opt["power_floor_w"]),
            mmwave=MmWaveParams(
                wavelength_m=float(mmw["wavelength_m"]),
                tx_power_w=float(mmw["tx_power_w"]),
                tx_gain=_db_to_linear(mmw["tx_gain_db"]),
                noise_power=_db_to_linear(mmw["noise_power_db"]),
                path_loss_exponent=float(mmw["path_loss_exponent"]),
                ref_distance_m=float(mmw["ref_distance_m"]),
                ue_directivity_rad=math.radians(mmw["ue_directivity_deg"])),
            ap_position=tuple(mmw["ap_position"]),
            ap_boresight=tuple(mmw["ap_boresight"]),
            ue_x=tuple(samp["ue_x"]), ue_y=tuple(samp["ue_y"]),
            ue_z=float(samp["ue_z"]),
            iterations=int(samp["iterations"]), seed=int(samp["seed"]),
            workers=int(samp["workers"]),
            quadrature_deg=float(c["quadrature"]["query_step_deg"]),
            figure_quadrature_deg=float(c["quadrature"]["figure_step_deg"]),
            figure_iterations=int(figs["iterations"]),
            panel_subsets=tuple(tuple(s) for s in figs["panel_subsets"]),
            fig2_ring_radius_m=float(figs["fig2"]["ring_radius_m"]),
            fig2_azimuth_step_deg=float(figs["fig2"]["azimuth_step_deg"]),
            snr_grid_db=tuple(figs["fig3"]["snr_grid_db"]),
            element_grid=tuple(figs["fig4"]["element_grid"]),
            fig4_snr_db=float(figs["fig4"]["snr_db"]),
        )
    except ConfigError:
        raise
    except (KeyError, TypeError, ValueError) as err:
        raise ConfigError(f"malformed configuration: {err}",
                          violations=[str(err)]) from err


def load_config(path=None, overrides=None):
    """Read a JSON config file (or use defaults) and apply CLI overrides.

    Returns (ScenarioConfig, canonical dict, fingerprint).
    """
    raw = {}
    if path is not None:
        try:
            with open(path, encoding="utf-8") as fh:
                raw = json.load(fh)
        except OSError as err:
            raise ConfigError(f"cannot read config file: {err}",
                              violations=[str(err)]) from err
        except json.JSONDecodeError as err:
            raise ConfigError(f"config file is not valid JSON: {err}",
                              violations=[str(err)]) from err
    canonical = canonicalize(raw)
    for dotted, value in (overrides or {}).items():
        node = canonical
        *parents, leaf = dotted.split(".")
        for key in parents:
            node = node[key]
        if leaf not in node:
            raise ConfigError(f"unknown override target {dotted!r}",
                              violations=[dotted])
        node[leaf] = value
    cfg = config_from_dict(canonical)
    return cfg, canonical, fingerprint(canonical)
