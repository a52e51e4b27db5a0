"""Vector math and scenario geometry shared by all modules.

Conventions: right-handed frame, z up, room corner at the origin.  Points and
directions are plain numpy arrays of shape (3,); directions are unit norm.
Angles are radians everywhere inside the library; degrees appear only at the
CLI/config boundary.
"""

from dataclasses import dataclass

import numpy as np

from .errors import ArgumentError, DegenerateGeometryError

UNIT_TOL = 1e-12


def as_vec(v, dtype=float):
    out = np.asarray(v, dtype=dtype)
    if out.shape != (3,):
        raise ArgumentError(f"expected a 3-vector, got shape {out.shape}")
    return out


def norm(v):
    v = np.asarray(v)
    return np.sqrt(np.dot(v, v))


def unit(v):
    """Normalize, rejecting near-zero input."""
    v = np.asarray(v)
    n = norm(v)
    if n == 0.0:
        raise DegenerateGeometryError("cannot normalize a zero vector")
    return v / n


def unit_from_to(a, b):
    """Unit direction from point a toward point b: (b - a) / |b - a|."""
    a = np.asarray(a)
    b = np.asarray(b)
    d = b - a
    n = norm(d)
    if n == 0.0:
        raise DegenerateGeometryError("coincident points have no direction")
    return d / n


def incidence_cos(receiver_normal, source, receiver):
    """Cosine of the incidence angle at the receiver.

    Dot product of the receiver normal with the unit direction from the
    receiver toward the source; in [-1, 1].
    """
    return float(np.dot(np.asarray(receiver_normal),
                        unit_from_to(receiver, source)))


def spherical_direction(theta, phi):
    """Unit direction for polar angle theta in [0, pi], azimuth phi in [0, 2*pi)."""
    if not 0.0 <= theta <= np.pi:
        raise ArgumentError(f"polar angle {theta} outside [0, pi]")
    if not 0.0 <= phi < 2.0 * np.pi:
        raise ArgumentError(f"azimuth {phi} outside [0, 2*pi)")
    st = np.sin(theta)
    return np.array([st * np.cos(phi), st * np.sin(phi), np.cos(theta)])


def direction_angles(d):
    """Inverse of spherical_direction: (theta, phi) with phi in [0, 2*pi)."""
    d = unit(d)
    theta = float(np.arccos(np.clip(d[2], -1.0, 1.0)))
    phi = float(np.arctan2(d[1], d[0])) % (2.0 * np.pi)
    return theta, phi


def angle_between(a, b):
    """Angle in [0, pi] between two directions."""
    c = np.dot(unit(a), unit(b))
    return float(np.arccos(np.clip(c, -1.0, 1.0)))


@dataclass(frozen=True)
class Room:
    """Axis-aligned box; default 10 m x 10 m x 3 m with a corner at the origin."""

    lo: tuple = (0.0, 0.0, 0.0)
    hi: tuple = (10.0, 10.0, 3.0)

    def contains(self, p, tol=1e-9):
        p = np.asarray(p, dtype=float)
        lo = np.asarray(self.lo)
        hi = np.asarray(self.hi)
        return bool(np.all(p >= lo - tol) and np.all(p <= hi + tol))

    def on_boundary(self, p, tol=1e-9):
        if not self.contains(p, tol):
            return False
        p = np.asarray(p, dtype=float)
        lo = np.asarray(self.lo)
        hi = np.asarray(self.hi)
        return bool(np.any(np.abs(p - lo) <= tol) or np.any(np.abs(p - hi) <= tol))

    def center(self):
        return 0.5 * (np.asarray(self.lo) + np.asarray(self.hi))


@dataclass(frozen=True)
class PanelFrame:
    """Orthonormal frame attached to a wall-mounted panel.

    e1 is horizontal in the panel plane, e2 vertical, normal points into the
    room; (e1, e2, normal) is right-handed.
    """

    origin: tuple
    e1: tuple
    e2: tuple
    normal: tuple

    @classmethod
    def from_center_normal(cls, center, normal):
        n = unit(np.asarray(normal, dtype=float))
        if abs(n[2]) > 0.99:
            raise ArgumentError("panel normal must not be vertical")
        e2 = np.array([0.0, 0.0, 1.0])
        e1 = unit(np.cross(e2, n))
        return cls(tuple(np.asarray(center, float)), tuple(e1), tuple(e2), tuple(n))

    def to_local(self, p):
        """Global point -> panel coordinates (e1, e2, normal components)."""
        d = np.asarray(p, dtype=float) - np.asarray(self.origin)
        return np.array([np.dot(d, self.e1), np.dot(d, self.e2), np.dot(d, self.normal)])

    def to_global(self, p_local):
        p_local = np.asarray(p_local, dtype=float)
        return (np.asarray(self.origin)
                + p_local[0] * np.asarray(self.e1)
                + p_local[1] * np.asarray(self.e2)
                + p_local[2] * np.asarray(self.normal))

    def direction_to_local(self, d):
        d = np.asarray(d, dtype=float)
        return np.array([np.dot(d, self.e1), np.dot(d, self.e2), np.dot(d, self.normal)])

    def horizontal_azimuth(self, p):
        """Signed horizontal bearing of a global point, zero along the normal."""
        local = self.to_local(p)
        return float(np.arctan2(local[0], local[2]))

    def pattern_angles(self, p):
        """(theta, phi) of a global point as seen from the panel.

        theta measured from the panel normal, phi in the panel plane from e1.
        """
        local = self.to_local(p)
        r = norm(local)
        if r == 0.0:
            raise DegenerateGeometryError("point coincides with panel reference")
        theta = float(np.arccos(np.clip(local[2] / r, -1.0, 1.0)))
        phi = float(np.arctan2(local[1], local[0])) % (2.0 * np.pi)
        return theta, phi
