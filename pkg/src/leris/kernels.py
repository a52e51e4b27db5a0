"""Hot numeric kernels for far-field pattern evaluation.

Two implementations of each kernel are provided: a numba ``@njit`` version
(parallel over polar rows) and a pure-numpy fallback.  The fallback is
selected automatically when numba is unavailable, or explicitly by setting
the environment variable ``LERIS_NO_NUMBA=1`` before import (or by calling
:func:`set_backend`).  ``benchmarks/bench_kernels.py`` compares the two.

Geometry convention: everything here lives in the panel-local frame (z along
the panel normal, elements in the x-y plane at positions ((m-1/2) D,
(n-1/2) D, 0) for m=1..M, n=1..N).  The per-element phase of the radiated
field in direction (theta, phi) is

    k0 * zeta_mn(theta, phi) + omega_m(theta, phi) + Phi_mn

with zeta the array-geometry term, omega the transmitter path-delay term
(depends on the row index m only, see below) and Phi the applied element
phase.  A steering profile sets Phi_mn = -k0 D sin(t) (m cos(p) + n sin(p))
- omega_m(t, p) for target angles (t, p), which makes the total phase
independent of (m, n) at the target direction.

The steered form keeps the double sum separable: the n-sum is a closed-form
geometric series and the m-sum costs O(M) per direction, which is what makes
dense quadrature over the hemisphere affordable at M = N = 50.
"""

import math
import os

import numpy as np

# workqueue is the one threading layer that stays safe across fork(), which
# the draw-parallel Monte Carlo harness relies on (omp deadlocks after fork)
os.environ.setdefault("NUMBA_THREADING_LAYER", "workqueue")

try:
    import numba
    from numba import njit, prange
    HAVE_NUMBA = True
except ImportError:                                    # pragma: no cover
    numba = None
    HAVE_NUMBA = False

    def njit(*args, **kwargs):
        def wrap(f):
            return f
        if args and callable(args[0]):
            return args[0]
        return wrap

    prange = range

_ENV_DISABLED = os.environ.get("LERIS_NO_NUMBA", "").strip().lower() in (
    "1", "true", "yes", "on")
_BACKEND = "numba" if (HAVE_NUMBA and not _ENV_DISABLED) else "numpy"

#: |sin(B/2)| below this uses the coherent limit for the geometric series
_SIN_EPS = 1e-9


def active_backend():
    return _BACKEND


def set_backend(name):
    """Force 'numba' or 'numpy'; returns the previous backend."""
    global _BACKEND
    if name not in ("numba", "numpy"):
        raise ValueError("backend must be 'numba' or 'numpy'")
    if name == "numba" and not HAVE_NUMBA:
        raise RuntimeError("numba is not importable in this environment")
    prev = _BACKEND
    _BACKEND = name
    return prev


# ----------------------------------------------------------------------
# numba kernels
# ----------------------------------------------------------------------

@njit(cache=True, fastmath=True)
def _geo_series_power(b, n_count):
    """|sum_{n=1..N} exp(j*b*n)|^2 via the closed-form ratio."""
    s = math.sin(0.5 * b)
    if abs(s) < _SIN_EPS:
        return float(n_count * n_count)
    r = math.sin(0.5 * n_count * b) / s
    return r * r


@njit(cache=True, fastmath=True)
def _omega_fill(out, m_count, k0, d_elem, sc, ss, tx, rx):
    """Path-delay phase omega_m for every row index at one direction."""
    dx = tx[0] - rx[0]
    dy = tx[1] - rx[1]
    dz = tx[2] - rx[2]
    for m in range(m_count):
        u = d_elem * (m + 0.5)
        xs = dx - u * sc
        zs = dz - u * ss
        out[m] = k0 * math.sqrt(xs * xs + dy * dy + zs * zs)


@njit(cache=True, fastmath=True, parallel=True)
def _separable_grid_numba(theta, phi, steer_theta, steer_phi,
                          m_count, n_count, k0, d_elem, tx, rx, out):
    sc_hat = math.sin(steer_theta) * math.cos(steer_phi)
    ss_hat = math.sin(steer_theta) * math.sin(steer_phi)
    omega_hat = np.empty(m_count)
    _omega_fill(omega_hat, m_count, k0, d_elem, sc_hat, ss_hat, tx, rx)

    kd = k0 * d_elem
    dx = tx[0] - rx[0]
    dy2 = (tx[1] - rx[1]) * (tx[1] - rx[1])
    dz = tx[2] - rx[2]
    for it in prange(theta.shape[0]):
        st = math.sin(theta[it])
        for ip in range(phi.shape[0]):
            sc = st * math.cos(phi[ip])
            ss = st * math.sin(phi[ip])
            a = kd * (sc - sc_hat)
            b = kd * (ss - ss_hat)
            sre = 0.0
            sim = 0.0
            for m in range(m_count):
                u = d_elem * (m + 0.5)
                xs = dx - u * sc
                zs = dz - u * ss
                w = k0 * math.sqrt(xs * xs + dy2 + zs * zs) - omega_hat[m]
                ph = a * (m + 1) + w
                sre += math.cos(ph)
                sim += math.sin(ph)
            out[it, ip] = (sre * sre + sim * sim) * _geo_series_power(b, n_count)


@njit(cache=True, fastmath=True, parallel=True)
def _direct_grid_numba(theta, phi, phases, m_count, n_count,
                       k0, d_elem, tx, rx, z_from_col, out):
    dx = tx[0] - rx[0]
    dy = tx[1] - rx[1]
    dz = tx[2] - rx[2]
    for it in prange(theta.shape[0]):
        st = math.sin(theta[it])
        ct = math.cos(theta[it])
        for ip in range(phi.shape[0]):
            cp = math.cos(phi[ip])
            sp = math.sin(phi[ip])
            sc = st * cp
            ss = st * sp
            common = k0 * (dx * sc + dy * ss + dz * ct)
            sre = 0.0
            sim = 0.0
            omega = 0.0
            for m in range(m_count):
                um = d_elem * (m + 0.5)
                zeta_m = um * sc
                if z_from_col == 0:
                    xs = dx - um * sc
                    zs = dz - um * ss
                    omega = k0 * math.sqrt(xs * xs + dy * dy + zs * zs)
                for n in range(n_count):
                    un = d_elem * (n + 0.5)
                    if z_from_col == 1:
                        xs = dx - um * sc
                        zs = dz - un * ss
                        omega = k0 * math.sqrt(xs * xs + dy * dy + zs * zs)
                    ph = k0 * (zeta_m + un * ss) + common + omega + phases[m, n]
                    sre += math.cos(ph)
                    sim += math.sin(ph)
            out[it, ip] = sre * sre + sim * sim


# ----------------------------------------------------------------------
# pure-numpy fallbacks
# ----------------------------------------------------------------------

def _omega_rows_numpy(m_count, k0, d_elem, sc, ss, tx, rx):
    """omega_m for broadcastable direction arrays; shape (..., M)."""
    u = d_elem * (np.arange(m_count) + 0.5)
    sc = np.asarray(sc)[..., None]
    ss = np.asarray(ss)[..., None]
    xs = (tx[0] - rx[0]) - u * sc
    zs = (tx[2] - rx[2]) - u * ss
    return k0 * np.sqrt(xs ** 2 + (tx[1] - rx[1]) ** 2 + zs ** 2)


def _separable_grid_numpy(theta, phi, steer_theta, steer_phi,
                          m_count, n_count, k0, d_elem, tx, rx, out):
    sc_hat = math.sin(steer_theta) * math.cos(steer_phi)
    ss_hat = math.sin(steer_theta) * math.sin(steer_phi)
    omega_hat = _omega_rows_numpy(m_count, k0, d_elem,
                                  np.array(sc_hat), np.array(ss_hat), tx, rx)
    kd = k0 * d_elem
    m_idx = np.arange(1, m_count + 1)
    cosp = np.cos(phi)
    sinp = np.sin(phi)
    for it in range(theta.shape[0]):
        st = math.sin(theta[it])
        sc = st * cosp
        ss = st * sinp
        a = kd * (sc - sc_hat)
        b = kd * (ss - ss_hat)
        w = _omega_rows_numpy(m_count, k0, d_elem, sc, ss, tx, rx) - omega_hat
        ph = a[:, None] * m_idx + w
        srow = np.exp(1j * ph).sum(axis=-1)
        sb = np.sin(0.5 * b)
        small = np.abs(sb) < _SIN_EPS
        ratio = np.empty_like(b)
        ratio[~small] = np.sin(0.5 * n_count * b[~small]) / sb[~small]
        ratio[small] = n_count
        out[it] = (srow.real ** 2 + srow.imag ** 2) * ratio ** 2


def _direct_grid_numpy(theta, phi, phases, m_count, n_count,
                       k0, d_elem, tx, rx, z_from_col, out):
    um = d_elem * (np.arange(m_count) + 0.5)
    un = d_elem * (np.arange(n_count) + 0.5)
    dx, dy, dz = tx[0] - rx[0], tx[1] - rx[1], tx[2] - rx[2]
    chunk = max(1, int(4e6 // (m_count * n_count)))
    for it in range(theta.shape[0]):
        st = math.sin(theta[it])
        ct = math.cos(theta[it])
        for start in range(0, phi.shape[0], chunk):
            p = phi[start:start + chunk]
            sc = st * np.cos(p)
            ss = st * np.sin(p)
            common = k0 * (dx * sc + dy * ss + dz * ct)
            if z_from_col:
                # broadcast shapes: (P, M, N)
                xs = dx - sc[:, None, None] * um[None, :, None]
                zs = dz - ss[:, None, None] * un[None, None, :]
                omega = k0 * np.sqrt(xs ** 2 + dy ** 2 + zs ** 2)
            else:
                xs = dx - sc[:, None] * um
                zs = dz - ss[:, None] * um
                omega = (k0 * np.sqrt(xs ** 2 + dy ** 2 + zs ** 2))[:, :, None]
            zeta = sc[:, None, None] * um[None, :, None] \
                + ss[:, None, None] * un[None, None, :]
            ph = k0 * zeta + common[:, None, None] + omega + phases[None, :, :]
            s = np.exp(1j * ph).sum(axis=(1, 2))
            out[it, start:start + chunk] = s.real ** 2 + s.imag ** 2


# ----------------------------------------------------------------------
# dispatch
# ----------------------------------------------------------------------

def _prep(theta, phi, tx, rx):
    theta = np.ascontiguousarray(np.atleast_1d(np.asarray(theta, dtype=float)))
    phi = np.ascontiguousarray(np.atleast_1d(np.asarray(phi, dtype=float)))
    tx = np.ascontiguousarray(np.asarray(tx, dtype=float))
    rx = np.ascontiguousarray(np.asarray(rx, dtype=float))
    return theta, phi, tx, rx


def separable_power_grid(theta, phi, steer_theta, steer_phi,
                         m_count, n_count, k0, d_elem, tx, rx):
    """|F|^2 on the (theta x phi) grid for a steering profile.

    tx and rx are 3-vectors in the panel-local frame.
    """
    theta, phi, tx, rx = _prep(theta, phi, tx, rx)
    out = np.empty((theta.shape[0], phi.shape[0]))
    fn = _separable_grid_numba if _BACKEND == "numba" else _separable_grid_numpy
    fn(theta, phi, float(steer_theta), float(steer_phi),
       int(m_count), int(n_count), float(k0), float(d_elem), tx, rx, out)
    return out


def direct_power_grid(theta, phi, phases, k0, d_elem, tx, rx,
                      z_from_col=False):
    """|F|^2 on the grid for an arbitrary element phase array (M, N).

    ``z_from_col`` switches the path-delay z-term to the column index (the
    symmetric variant); the separable path does not support it.
    """
    theta, phi, tx, rx = _prep(theta, phi, tx, rx)
    phases = np.ascontiguousarray(np.asarray(phases, dtype=float))
    m_count, n_count = phases.shape
    out = np.empty((theta.shape[0], phi.shape[0]))
    fn = _direct_grid_numba if _BACKEND == "numba" else _direct_grid_numpy
    fn(theta, phi, phases, int(m_count), int(n_count),
       float(k0), float(d_elem), tx, rx, int(bool(z_from_col)), out)
    return out


def warmup():
    """Trigger JIT compilation once (cheap no-op on the numpy backend)."""
    if _BACKEND != "numba":
        return
    t = np.array([0.1, 0.2])
    p = np.array([0.0, 1.0, 2.0])
    xyz = np.array([0.0, 0.0, 1.0])
    separable_power_grid(t, p, 0.3, 0.4, 2, 2, 628.3, 0.005, xyz, -xyz)
    direct_power_grid(t, p, np.zeros((2, 2)), 628.3, 0.005, xyz, -xyz)
    direct_power_grid(t, p, np.zeros((2, 2)), 628.3, 0.005, xyz, -xyz,
                      z_from_col=True)
