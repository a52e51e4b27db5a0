"""Simulator for light-emitting reconfigurable-surface indoor wireless links.

Dual-mode laser anchors on the panel perimeters localize the user optically;
the panels then steer a cascaded mmWave route toward the estimated position.
See the README for the CLI and the acceptance suite.
"""

__version__ = "0.1.0"
