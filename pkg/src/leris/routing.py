"""Candidate route enumeration, feasibility, and rate-maximizing selection.

A route is an ordered sequence of distinct panels between the access point
and the user.  Every hop except the last is assumed perfectly steered toward
a known node; only the final panel-to-user hop carries the estimate-steered
directional gain.  Feasibility of a segment demands the arrival direction
inside the receiver's acceptance region (panels: open front hemisphere; the
user: closed cone of its antenna directivity and detector field of view) and
the departure direction inside the transmitter's open front hemisphere.
"""

import math
from dataclasses import dataclass
from itertools import permutations

import numpy as np

from . import mmwave
from .errors import ArgumentError
from .geometry import PanelFrame, angle_between, unit_from_to


@dataclass(frozen=True)
class ApNode:
    position: tuple
    boresight: tuple


@dataclass(frozen=True)
class PanelNode:
    panel: mmwave.LerisPanel

    @property
    def position(self):
        return self.panel.center

    @property
    def boresight(self):
        return self.panel.normal


@dataclass(frozen=True)
class UeNode:
    position: tuple
    normal: tuple
    cone_half_angle: float = math.pi / 3
    pd_fov: float = math.pi / 2


@dataclass(frozen=True)
class Route:
    """Ordered panel ids plus per-segment geometry and feasibility flags."""

    panel_ids: tuple
    segment_lengths: tuple
    feasibility: tuple
    aggregate_feasible: bool

    def __post_init__(self):
        if len(set(self.panel_ids)) != len(self.panel_ids):
            raise ArgumentError("route panels must be distinct")
        if len(self.segment_lengths) != len(self.panel_ids) + 1:
            raise ArgumentError("segment count must be panel count + 1")
        if len(self.feasibility) != len(self.segment_lengths):
            raise ArgumentError("one feasibility flag per segment required")

    @property
    def hop_count(self):
        return len(self.panel_ids)


@dataclass(frozen=True)
class LinkBudget:
    route: Route | None
    route_gain: float
    path_loss: float
    spectral_efficiency: float

    def __post_init__(self):
        feasible = self.route is not None and self.route.aggregate_feasible
        if not feasible and self.spectral_efficiency != 0.0:
            raise ArgumentError("infeasible budgets must carry zero rate")

    @property
    def feasible(self):
        return self.route is not None and self.route.aggregate_feasible


def panel_frame(panel):
    """Local frame with the element grid in the positive quadrant.

    The frame origin sits at the array corner so that element (m, n) lies at
    ((m-1/2) D, (n-1/2) D, 0) while the physical array stays centered on the
    panel center.
    """
    centered = PanelFrame.from_center_normal(panel.center, panel.normal)
    half1 = 0.5 * panel.m_rows * panel.element_side_m
    half2 = 0.5 * panel.n_cols * panel.element_side_m
    corner = (np.asarray(panel.center, float)
              - half1 * np.asarray(centered.e1)
              - half2 * np.asarray(centered.e2))
    return PanelFrame(origin=tuple(corner), e1=centered.e1, e2=centered.e2,
                      normal=centered.normal)


def _departs_front(node, direction):
    axis = np.asarray(node.boresight if not isinstance(node, UeNode)
                      else node.normal, dtype=float)
    return float(np.dot(direction, axis)) > 0.0


def _arrives_ok(node, arrival_from):
    """arrival_from: unit direction from the receiver toward the sender."""
    if isinstance(node, UeNode):
        theta_u = angle_between(node.normal, arrival_from)
        return theta_u <= node.cone_half_angle and theta_u <= node.pd_fov
    axis = np.asarray(node.boresight, dtype=float)
    return float(np.dot(arrival_from, axis)) > 0.0


def segment_feasible(sender, receiver):
    """True iff the hop passes both endpoint angular acceptance tests.

    Hemisphere tests are boundary exclusive (grazing along a panel plane
    does not count); the user cone test is boundary inclusive.
    """
    d = unit_from_to(np.asarray(sender.position, float),
                     np.asarray(receiver.position, float))
    return bool(_departs_front(sender, d) and _arrives_ok(receiver, -d))


def enumerate_routes(panels, ap, ue):
    """All ordered sequences of distinct panels, AP -> ... -> user.

    Deterministic order: by length, then lexicographic panel ids.  Four
    panels yield 64 candidates.
    """
    if not panels:
        raise ArgumentError("at least one panel required")
    panels = sorted(panels, key=lambda p: p.id)
    by_id = {p.id: p for p in panels}
    ids = [p.id for p in panels]
    routes = []
    for length in range(1, len(ids) + 1):
        for combo in permutations(ids, length):
            nodes = [ap] + [PanelNode(by_id[i]) for i in combo] + [ue]
            lengths = []
            flags = []
            for a, b in zip(nodes[:-1], nodes[1:]):
                lengths.append(float(np.linalg.norm(
                    np.asarray(b.position, float) - np.asarray(a.position, float))))
                flags.append(segment_feasible(a, b))
            routes.append(Route(panel_ids=tuple(combo),
                                segment_lengths=tuple(lengths),
                                feasibility=tuple(flags),
                                aggregate_feasible=all(flags)))
    routes.sort(key=lambda r: (r.hop_count, r.panel_ids))
    return routes


@dataclass(frozen=True)
class RouteContext:
    """Everything needed to price a route.

    Steering uses the estimated user position; the delivered gain is
    evaluated at the true position and orientation.
    """

    panels_by_id: dict
    ap: ApNode
    params: mmwave.MmWaveParams
    true_ue_position: tuple
    true_ue_normal: tuple
    est_ue_position: tuple
    grid: mmwave.GridSpec


def final_hop_gain(ctx, prev_position, last_panel):
    """Estimate-steered directional gain of the final panel at the true UE."""
    frame = panel_frame(last_panel)
    tx_local = frame.to_local(np.asarray(prev_position, float))
    rx_local = frame.to_local(np.asarray(ctx.est_ue_position, float))
    t_hat, p_hat = frame.pattern_angles(np.asarray(ctx.est_ue_position, float))
    t_true, p_true = frame.pattern_angles(np.asarray(ctx.true_ue_position, float))
    if t_true > math.pi / 2 and not ctx.grid.full_sphere:
        return 0.0
    k0 = ctx.params.wavenumber
    profile = mmwave.steering_phase_profile(last_panel, t_hat, p_hat,
                                            tx_local, rx_local, k0)
    return mmwave.directional_gain(last_panel, profile, t_true, p_true,
                                   grid=ctx.grid, k0=k0)


def evaluate_route(route, ctx, gain_cache=None):
    """Link budget of one route; zero-rate if any segment is infeasible."""
    if not route.aggregate_feasible:
        return LinkBudget(route=route, route_gain=0.0, path_loss=0.0,
                          spectral_efficiency=0.0)
    panels = [ctx.panels_by_id[i] for i in route.panel_ids]
    prev_position = (ctx.ap.position if len(panels) == 1
                     else panels[-2].center)
    key = (route.panel_ids[-2] if len(panels) > 1 else None,
           route.panel_ids[-1])
    if gain_cache is not None and key in gain_cache:
        g_final = gain_cache[key]
    else:
        g_final = final_hop_gain(ctx, prev_position, panels[-1])
        if gain_cache is not None:
            gain_cache[key] = g_final
    theta_u = angle_between(
        np.asarray(ctx.true_ue_normal, float),
        unit_from_to(np.asarray(ctx.true_ue_position, float),
                     np.asarray(panels[-1].center, float)))
    gain = mmwave.total_route_gain(panels, ctx.params, g_final, theta_u)
    loss = mmwave.path_loss(route.segment_lengths, ctx.params)
    rate = mmwave.spectral_efficiency(gain, loss, ctx.params)
    return LinkBudget(route=route, route_gain=gain, path_loss=loss,
                      spectral_efficiency=rate)


def best_route(routes, ctx):
    """Highest-rate feasible budget; zero-rate infeasible budget if none.

    Ties break toward the shorter route, then lexicographic panel ids.
    The final-hop gain is cached per (previous node, last panel) pair.
    """
    if not routes:
        raise ArgumentError("route list must not be empty")
    cache = {}
    best = None
    for route in routes:
        if not route.aggregate_feasible:
            continue
        budget = evaluate_route(route, ctx, gain_cache=cache)
        if best is None:
            best = budget
            continue
        cand_key = (-budget.spectral_efficiency, budget.route.hop_count,
                    budget.route.panel_ids)
        best_key = (-best.spectral_efficiency, best.route.hop_count,
                    best.route.panel_ids)
        if cand_key < best_key:
            best = budget
    if best is None:
        return LinkBudget(route=None, route_gain=0.0, path_loss=0.0,
                          spectral_efficiency=0.0)
    return best
