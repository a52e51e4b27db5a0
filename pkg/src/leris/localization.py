"""Dual-mode ranging, trilateration, and orientation recovery.

Ranging inverts the ratio of the two mode powers received from one emitter;
because the ratio approaches its asymptote like (z_R/d)^2, the inversion is
badly conditioned at room scale and is therefore carried out in extended
precision (x86 80-bit long double) with no premature rounding.  The analytic
error model quantifies what measurement noise does to a single-link range.

Position follows from three ranges by intersecting the radical line of the
sphere system with one sphere and keeping the in-room root; orientation then
solves a 3x3 linear system built from the unit directions toward the anchors.
"""

from dataclasses import dataclass

import numpy as np

from .errors import (AmbiguousSolutionError, ArgumentError,
                     DegenerateGeometryError, IllConditionedError,
                     InconsistentRangesError, InfeasibleRatioError,
                     InsufficientAnchorsError, NoiseDominatedError)

LD = np.longdouble

#: determinant threshold below which the orientation system is rejected
DET_TOL = 1e-9

#: candidates above this count are pruned before the exhaustive triplet search
MAX_EXHAUSTIVE_CANDIDATES = 24


@dataclass(frozen=True)
class OpticalMeasurement:
    """Received power for one emitter and one mode label ('a' or 'b')."""

    vcsel_id: str
    mode_label: str
    received_power_w: float

    def __post_init__(self):
        if self.mode_label not in ("a", "b"):
            raise ArgumentError("mode_label must be 'a' or 'b'")
        if self.received_power_w < 0:
            raise ArgumentError("received power must be >= 0")


@dataclass(frozen=True)
class TrilaterationFix:
    position: np.ndarray
    residual_m: float
    rejected_root: np.ndarray | None


@dataclass(frozen=True)
class OrientationSolution:
    raw: np.ndarray
    unit: np.ndarray
    condition_number: float


@dataclass(frozen=True)
class LocalizationEstimate:
    position: np.ndarray
    orientation: np.ndarray
    orientation_raw: np.ndarray
    per_link_distances: dict
    anchor_ids: tuple
    condition_number: float
    residual_m: float


def mode_power_coefficient(mode, pd_area):
    """B = 2 * A_pd * P_t / (pi * w0^2) for one mode, long double."""
    return (LD(2.0) * LD(pd_area) * LD(mode.transmit_power_w)
            / (LD(np.pi) * LD(mode.beam_waist_m) ** 2))


def axial_power(mode, pd_area, distance):
    """On-axis received power before the incidence cosine, long double."""
    zr = LD(np.pi) * LD(mode.beam_waist_m) ** 2 / LD(mode.wavelength_m)
    t = (LD(distance) / zr) ** 2
    return mode_power_coefficient(mode, pd_area) / (LD(1.0) + t)


def mode_ratio_distance(p_a, p_b, mode_a, mode_b, pd_area):
    """Invert the dual-mode power ratio into the emitter-receiver distance.

    d = sqrt((1 - R) / (R / z_Ra^2 - 1 / z_Rb^2)) with R the ratio of the
    received powers rescaled by the mode power coefficients.  Feasible only
    for R in (z_Ra^2 / z_Rb^2, 1]; anything else raises with the raw ratio
    attached for diagnostics.
    """
    if p_a <= 0 or p_b <= 0:
        raise ArgumentError("mode powers must be positive for ranging")
    za = LD(np.pi) * LD(mode_a.beam_waist_m) ** 2 / LD(mode_a.wavelength_m)
    zb = LD(np.pi) * LD(mode_b.beam_waist_m) ** 2 / LD(mode_b.wavelength_m)
    if za == zb:
        raise InfeasibleRatioError(
            "modes with equal Rayleigh ranges are not identifiable",
            ratio=float(p_a) / float(p_b))
    ba = mode_power_coefficient(mode_a, pd_area)
    bb = mode_power_coefficient(mode_b, pd_area)
    ratio = (LD(p_a) / LD(p_b)) * (bb / ba)
    one = LD(1.0)
    denom = ratio / za ** 2 - one / zb ** 2
    num = one - ratio
    if num == 0.0:
        return 0.0
    if denom <= 0.0 or num < 0.0:
        raise InfeasibleRatioError(
            "power ratio outside the invertible interval", ratio=float(ratio))
    d2 = num / denom
    return float(np.sqrt(d2))


def _lstsq_2x3(rows, rhs):
    """Least-norm solution of a full-rank 2x3 system, long double."""
    g11 = np.dot(rows[0], rows[0])
    g12 = np.dot(rows[0], rows[1])
    g22 = np.dot(rows[1], rows[1])
    det = g11 * g22 - g12 * g12
    if det == 0.0:
        raise DegenerateGeometryError("rank-deficient trilateration system")
    y0 = (g22 * rhs[0] - g12 * rhs[1]) / det
    y1 = (g11 * rhs[1] - g12 * rhs[0]) / det
    return y0 * rows[0] + y1 * rows[1]


def _sphere_line_roots(anchors, distances):
    """Both intersection points of the radical line with the first sphere."""
    s = np.asarray(anchors, dtype=LD)
    d = np.asarray(distances, dtype=LD)
    if s.shape != (3, 3) or d.shape != (3,):
        raise ArgumentError("trilateration needs exactly three anchors and ranges")
    if np.any(d <= 0):
        raise ArgumentError("ranges must be positive")
    v21 = s[1] - s[0]
    v31 = s[2] - s[0]
    axis = np.cross(v21, v31)
    scale = np.sqrt(np.dot(v21, v21)) * np.sqrt(np.dot(v31, v31))
    axis_norm = np.sqrt(np.dot(axis, axis))
    if scale == 0.0 or axis_norm < 1e-12 * scale:
        raise DegenerateGeometryError("collinear anchors cannot trilaterate")
    axis = axis / axis_norm

    rows = 2.0 * np.stack([v21, v31])
    rhs = np.array(
        [np.dot(s[1], s[1]) - np.dot(s[0], s[0]) - (d[1] ** 2 - d[0] ** 2),
         np.dot(s[2], s[2]) - np.dot(s[0], s[0]) - (d[2] ** 2 - d[0] ** 2)],
        dtype=LD)
    p0 = _lstsq_2x3(rows, rhs)

    w = p0 - s[0]
    b = np.dot(w, axis)
    c = np.dot(w, w) - d[0] ** 2
    disc = b * b - c
    if disc < 0.0:
        raise InconsistentRangesError(
            "ranges admit no real intersection with the anchor spheres")
    root = np.sqrt(disc)
    return p0 + (-b - root) * axis, p0 + (-b + root) * axis


def _range_residual(point, anchors, distances):
    s = np.asarray(anchors, dtype=LD)
    d = np.asarray(distances, dtype=LD)
    errs = [abs(float(np.sqrt(np.dot(point - s[i], point - s[i])) - d[i]))
            for i in range(len(d))]
    return max(errs)


def trilaterate(anchors, distances, room):
    """Recover the position from three anchors and ranges, in-room root only.

    Raises if the anchors are collinear, if the spheres do not intersect, or
    if both candidate roots fall inside the room (reported, never guessed).
    """
    r1, r2 = _sphere_line_roots(anchors, distances)
    in1 = room.contains(np.asarray(r1, dtype=float))
    in2 = room.contains(np.asarray(r2, dtype=float))
    same = bool(np.all(np.abs(r1 - r2) <= 1e-12))
    if in1 and in2 and not same:
        raise AmbiguousSolutionError(
            "both trilateration roots lie inside the room",
            roots=(np.asarray(r1, float), np.asarray(r2, float)))
    if not in1 and not in2:
        raise InconsistentRangesError(
            "no trilateration root lies inside the room")
    chosen, other = (r1, r2) if in1 else (r2, r1)
    residual = _range_residual(chosen, anchors, distances)
    return TrilaterationFix(position=np.asarray(chosen, dtype=float),
                            residual_m=residual,
                            rejected_root=np.asarray(other, dtype=float))


def _adjugate_solve_3x3(mat, rhs):
    """Cramer solve of a 3x3 system in the dtype of the inputs."""
    a = np.asarray(mat)
    det = (a[0, 0] * (a[1, 1] * a[2, 2] - a[1, 2] * a[2, 1])
           - a[0, 1] * (a[1, 0] * a[2, 2] - a[1, 2] * a[2, 0])
           + a[0, 2] * (a[1, 0] * a[2, 1] - a[1, 1] * a[2, 0]))
    if det == 0.0:
        return None, 0.0
    cols = [a.copy() for _ in range(3)]
    sol = np.empty(3, dtype=a.dtype)
    for j in range(3):
        cols[j][:, j] = rhs
        m = cols[j]
        dj = (m[0, 0] * (m[1, 1] * m[2, 2] - m[1, 2] * m[2, 1])
              - m[0, 1] * (m[1, 0] * m[2, 2] - m[1, 2] * m[2, 0])
              + m[0, 2] * (m[1, 0] * m[2, 1] - m[1, 1] * m[2, 0]))
        sol[j] = dj / det
    return sol, det


def orientation_solve(unit_dirs, normalized_powers):
    """Solve U n = c for the receiver normal and normalize the result.

    ``unit_dirs`` stacks the unit directions toward the three anchors as
    rows; ``normalized_powers`` are the powers divided by the on-axis model
    value at the estimated ranges.  Rejects |det U| below 1e-9 with the
    condition number attached.
    """
    u = np.asarray(unit_dirs, dtype=LD)
    c = np.asarray(normalized_powers, dtype=LD)
    if u.shape != (3, 3) or c.shape != (3,):
        raise ArgumentError("orientation solve needs three directions and powers")
    cond = float(np.linalg.cond(np.asarray(u, dtype=float)))
    sol, det = _adjugate_solve_3x3(u, c)
    if sol is None or abs(float(det)) < DET_TOL:
        raise IllConditionedError(
            "anchor directions too close to coplanar for orientation recovery",
            condition_number=cond)
    raw = np.asarray(sol, dtype=float)
    nrm = float(np.sqrt(np.dot(sol, sol)))
    if nrm == 0.0:
        raise IllConditionedError("orientation solution vanished",
                                  condition_number=cond)
    unit_n = np.asarray(sol / nrm, dtype=float)
    return OrientationSolution(raw=raw, unit=unit_n, condition_number=cond)


@dataclass(frozen=True)
class AnchorCandidate:
    vcsel_id: str
    position: tuple
    power_w: float
    coarse_distance_m: float


def _min_singular_values(mats):
    """Smallest singular value of each 3x3 matrix in a (k,3,3) stack.

    Closed-form symmetric eigenvalue solve (trigonometric Cardano) on
    U^T U; cheap enough to run exhaustively over candidate triplets.
    """
    g = np.einsum("kij,kil->kjl", mats, mats)
    tr = np.trace(g, axis1=1, axis2=2)
    q = tr / 3.0
    eye = np.eye(3)
    b = g - q[:, None, None] * eye
    p2 = np.einsum("kij,kij->k", b, b) / 6.0
    p = np.sqrt(np.maximum(p2, 0.0))
    detb = np.linalg.det(b)
    with np.errstate(divide="ignore", invalid="ignore"):
        r = np.where(p > 0, detb / (2.0 * np.maximum(p, 1e-300) ** 3), 0.0)
    r = np.clip(r, -1.0, 1.0)
    ang = np.arccos(r) / 3.0
    lam_min = q + 2.0 * p * np.cos(ang + 2.0 * np.pi / 3.0)
    return np.sqrt(np.maximum(lam_min, 0.0))


def select_anchor_triplet(candidates, ue_hint=None):
    """Pick three anchors maximizing the conditioning of the direction matrix.

    Directions are evaluated at a coarse position: the caller-provided hint,
    or a coarse trilateration of the three strongest candidates, or the
    centroid of the candidate positions as a last resort.  Ties break on
    lexicographic id order; the search is exhaustive after pruning to the
    strongest candidates.
    """
    cands = sorted(candidates, key=lambda a: a.vcsel_id)
    if len(cands) < 3:
        raise InsufficientAnchorsError(
            f"need at least 3 candidates, got {len(cands)}", usable=len(cands))

    if ue_hint is not None:
        ref = np.asarray(ue_hint, dtype=float)
    else:
        strongest = sorted(cands, key=lambda a: (-a.power_w, a.vcsel_id))[:3]
        ref = None
        try:
            roots = _sphere_line_roots(
                [a.position for a in strongest],
                [a.coarse_distance_m for a in strongest])
            ref = np.asarray(roots[0], dtype=float)
        except Exception:
            pass
        if ref is None:
            ref = np.mean([np.asarray(a.position, float) for a in cands], axis=0)

    if len(cands) > MAX_EXHAUSTIVE_CANDIDATES:
        by_panel = {}
        for a in cands:
            by_panel.setdefault(a.vcsel_id.split(":")[0], []).append(a)
        pruned = []
        for _, group in sorted(by_panel.items()):
            group = sorted(group, key=lambda a: (-a.power_w, a.vcsel_id))
            pruned.extend(group[:max(2, MAX_EXHAUSTIVE_CANDIDATES // len(by_panel))])
        if len(pruned) < 3:
            pruned = cands[:MAX_EXHAUSTIVE_CANDIDATES]
        cands = sorted(pruned, key=lambda a: a.vcsel_id)[:MAX_EXHAUSTIVE_CANDIDATES]

    pos = np.array([a.position for a in cands], dtype=float)
    diff = pos - ref
    nrm = np.linalg.norm(diff, axis=1)
    if np.any(nrm == 0):
        raise DegenerateGeometryError("candidate coincides with reference point")
    dirs = diff / nrm[:, None]

    k = len(cands)
    tri = [(i, j, l) for i in range(k) for j in range(i + 1, k)
           for l in range(j + 1, k)]
    idx = np.array(tri)
    mats = dirs[idx]
    sig = _min_singular_values(mats)
    best = int(np.argmax(sig))
    # the closed-form eigenvalue solve cannot resolve sigma_min below
    # ~sqrt(machine eps); anything under 1e-7 is degenerate for our purposes
    if sig[best] <= 1e-7:
        raise DegenerateGeometryError("all candidate triplets are collinear")
    i, j, l = tri[best]
    return (cands[i].vcsel_id, cands[j].vcsel_id, cands[l].vcsel_id)


def _group_measurements(measurements):
    grouped = {}
    for m in measurements:
        grouped.setdefault(m.vcsel_id, {})[m.mode_label] = m.received_power_w
    return grouped


def localize(measurements, registry, pd, room, power_floor=1e-12):
    """Full position-and-orientation fix from dual-mode power measurements.

    Emitters outside the detector FoV contribute no power and are screened
    by the floor; the fix needs at least three screened emitters.  If the
    chosen triplet's trilateration is ambiguous in-room, a spare anchor's
    range disambiguates; with no spare the ambiguity propagates.
    """
    by_id = {v.id: v for v in registry}
    grouped = _group_measurements(measurements)

    usable = {}
    for vid, modes in grouped.items():
        if vid not in by_id:
            raise ArgumentError(f"measurement references unknown emitter {vid!r}")
        if "a" in modes and "b" in modes \
                and modes["a"] > power_floor and modes["b"] > power_floor:
            usable[vid] = modes
    if len(usable) < 3:
        raise InsufficientAnchorsError(
            f"only {len(usable)} emitters above the power floor",
            usable=len(usable))

    candidates = []
    ranges = {}
    for vid in sorted(usable):
        v = by_id[vid]
        try:
            d = mode_ratio_distance(usable[vid]["a"], usable[vid]["b"],
                                    v.mode_a, v.mode_b, pd.area_m2)
        except InfeasibleRatioError:
            continue        # noise pushed this link out of the invertible band
        if d <= 0:
            continue
        ranges[vid] = d
        candidates.append(AnchorCandidate(
            vcsel_id=vid, position=tuple(v.position),
            power_w=float(usable[vid]["a"]), coarse_distance_m=d))
    if len(candidates) < 3:
        raise InsufficientAnchorsError(
            f"only {len(candidates)} emitters produced a usable range",
            usable=len(candidates))

    hint = None
    strongest = sorted(candidates, key=lambda a: (-a.power_w, a.vcsel_id))[:3]
    try:
        hint = trilaterate([a.position for a in strongest],
                           [a.coarse_distance_m for a in strongest],
                           room).position
    except AmbiguousSolutionError as err:
        hint = np.asarray(err.roots[0], dtype=float)
    except Exception:
        hint = None

    triplet = select_anchor_triplet(candidates, ue_hint=hint)
    anchors = [np.asarray(by_id[vid].position, dtype=float) for vid in triplet]
    dists = [ranges[vid] for vid in triplet]

    try:
        fix = trilaterate(anchors, dists, room)
    except AmbiguousSolutionError as err:
        spare = [c for c in candidates if c.vcsel_id not in triplet]
        if not spare:
            raise
        roots = [np.asarray(r, dtype=float) for r in err.roots]
        extra = spare[0]
        sp = np.asarray(extra.position, dtype=float)
        errs = [abs(float(np.linalg.norm(r - sp)) - extra.coarse_distance_m)
                for r in roots]
        chosen = roots[int(np.argmin(errs))]
        fix = TrilaterationFix(position=chosen,
                               residual_m=_range_residual(
                                   np.asarray(chosen, dtype=LD), anchors, dists),
                               rejected_root=roots[int(np.argmax(errs))])

    r_hat = np.asarray(fix.position, dtype=LD)
    u_rows = []
    c_vals = []
    for vid, dist in zip(triplet, dists):
        v = by_id[vid]
        s = np.asarray(v.position, dtype=LD)
        delta = s - r_hat
        dn = np.sqrt(np.dot(delta, delta))
        u_rows.append(delta / dn)
        c_vals.append(LD(usable[vid]["a"]) / axial_power(v.mode_a, pd.area_m2, dn))
    sol = orientation_solve(np.stack(u_rows), np.array(c_vals, dtype=LD))

    return LocalizationEstimate(
        position=np.asarray(fix.position, dtype=float),
        orientation=sol.unit,
        orientation_raw=sol.raw,
        per_link_distances={vid: float(d) for vid, d in ranges.items()},
        anchor_ids=tuple(triplet),
        condition_number=sol.condition_number,
        residual_m=float(fix.residual_m),
    )


def ranging_error(d, z_r, alpha):
    """Analytic single-link range error d * (1 - sqrt((a - z^2/d^2)/(1+a))).

    Requires alpha > (z_R/d)^2, otherwise the distance is not recoverable
    from the noisy power; always >= 0 and vanishing as alpha grows.

    Evaluated in extended precision through the rationalized form
    (d^2 + z^2) / ((1 + a) (d + d_hat)), which is free of the subtractive
    cancellation that the textbook form suffers at high SNR, so the identity
    with ``d - estimated_distance_under_noise(...)`` holds to tight relative
    tolerance.
    """
    out_dtype = np.result_type(np.asarray(d), np.asarray(z_r),
                               np.asarray(alpha), float)
    d = np.asarray(d, dtype=LD)
    z = np.asarray(z_r, dtype=LD)
    a = np.asarray(alpha, dtype=LD)
    if np.any(d <= 0):
        raise ArgumentError("distance must be positive")
    num = a * d ** 2 - z ** 2
    if np.any(num <= 0):
        raise NoiseDominatedError(
            "SNR at or below (z_R/d)^2; distance not recoverable")
    d_hat = np.sqrt(num / (a + 1.0))
    out = np.asarray((d ** 2 + z ** 2) / ((1.0 + a) * (d + d_hat)),
                     dtype=out_dtype)
    return out if out.shape else out[()]


def estimated_distance_under_noise(d, z_r, alpha):
    """Range the noisy-power inversion would report: sqrt((a d^2 - z^2)/(a+1))."""
    out_dtype = np.result_type(np.asarray(d), np.asarray(z_r),
                               np.asarray(alpha), float)
    d = np.asarray(d, dtype=LD)
    z = np.asarray(z_r, dtype=LD)
    a = np.asarray(alpha, dtype=LD)
    if np.any(d <= 0):
        raise ArgumentError("distance must be positive")
    num = a * d ** 2 - z ** 2
    if np.any(num <= 0):
        raise NoiseDominatedError(
            "SNR at or below (z_R/d)^2; distance not recoverable")
    out = np.asarray(np.sqrt(num / (a + 1.0)), dtype=out_dtype)
    return out if out.shape else out[()]
