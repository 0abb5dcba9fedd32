"""Least anisotropic gradient via boundary transport.

A function u of least phi-gradient with boundary datum g is recovered
from the optimal transport between the positive and negative parts of
g's tangential derivative: the transport rays are the level lines of u,
and u jumps by the ray mass across each ray.  The cost norm is phi
composed with a quarter turn, which undoes w = R_{pi/2} grad u.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .density import GridField, grid_for_domain
from .geom import ChordCost, Domain, Norm
from .measures import BoundaryDatum, remove_common_mass, tangential_derivative
from .ot import TransportPlan, solve_kantorovich

# scan paths dodging a segment endpoint: hit window and detour size,
# both relative to the domain diameter
EPS_HIT_REL = 1e-12
DETOUR_REL = 1e-9


@dataclass
class SegmentFlow:
    """Oriented transport rays carrying mass from source to target."""

    a: np.ndarray
    b: np.ndarray
    mass: np.ndarray

    def __len__(self) -> int:
        return len(self.mass)


def flow_from_plan(plan: TransportPlan) -> SegmentFlow:
    """One oriented segment per plan entry."""
    a, b = plan.entry_segments()
    return SegmentFlow(a=a, b=b, mass=plan.mass.copy())


def _generic_anchor(
    anchor_s: float, flow: SegmentFlow, domain: Domain, clear: float
) -> float:
    """First arclength at or after anchor_s whose boundary point stays
    at least ``clear`` away from every flow endpoint."""
    ends = np.concatenate([flow.a, flow.b])
    step = 1e-7 * domain.perimeter
    for k in range(256):
        s = anchor_s + k * step
        p = np.asarray(domain.boundary_point(s), dtype=float).reshape(2)
        if np.min(np.hypot(*(ends - p).T)) >= clear:
            return s
    raise RuntimeError("could not find a generic anchor position")


def reconstruct_u(
    flow: SegmentFlow,
    g: BoundaryDatum,
    grid: GridField,
    domain: Domain,
    anchor_s: float = 0.0,
) -> GridField:
    """Crossing-number reconstruction of u on grid cell centers.

    u(center) accumulates signed ray masses along the straight scan
    path from the boundary anchor to the center, starting from
    g(anchor).  Crossing a ray from its left to its right adds the
    mass.  Paths grazing a ray endpoint take a deterministic two-leg
    detour instead.

    An anchor sitting exactly on a ray endpoint (or on a jump of g,
    which is the same point) has no well-defined side, so the anchor
    is nudged forward along the boundary to the first generic
    position before any rays are shot.
    """
    out = grid.copy_empty(kind="function")
    if len(flow) == 0:
        out.values[:] = float(g.eval(float(anchor_s))[0])
        return out
    diam = domain.diameter
    anchor_s = _generic_anchor(float(anchor_s), flow, domain, clear=1e-8 * diam)
    anchor = np.asarray(domain.boundary_point(anchor_s), dtype=float).reshape(2)
    u0 = float(g.eval(anchor_s)[0])
    centers = grid.centers().reshape(-1, 2)
    acc = kernels.crossing_field(
        centers,
        anchor,
        flow.a,
        flow.b,
        flow.mass,
        eps_hit=EPS_HIT_REL * diam,
        detour=DETOUR_REL * diam,
    )
    out.values[:] = u0 + acc.reshape(grid.ny, grid.nx)
    return out


def interior_mask(grid: GridField, domain: Domain) -> np.ndarray:
    """Cells whose centers lie in the closed domain."""
    c = grid.centers().reshape(-1, 2)
    return domain.contains(c).reshape(grid.ny, grid.nx)


def gradient_norm_field(u: GridField, phi: Norm, domain: Domain) -> GridField:
    """phi of the forward-difference gradient, zero outside the domain.

    The returned field is density-kind: its integral is the anisotropic
    total variation and its L^p norms are the W^{1,p} statistics.
    """
    if u.kind != "function":
        raise ValueError("gradient_norm_field expects a function field")
    h = u.cell
    gx = np.zeros_like(u.values)
    gy = np.zeros_like(u.values)
    gx[:, :-1] = (u.values[:, 1:] - u.values[:, :-1]) / h
    gy[:-1, :] = (u.values[1:, :] - u.values[:-1, :]) / h
    grad = np.stack([gx, gy], axis=-1)
    vals = phi(grad)
    vals[~interior_mask(u, domain)] = 0.0
    out = u.copy_empty(kind="density")
    out.values[:] = vals
    return out


def total_variation(u: GridField, phi: Norm, domain: Domain) -> float:
    """Anisotropic TV over cells with centers in the domain."""
    return gradient_norm_field(u, phi, domain).integral()


def trace_error(
    u: GridField,
    g: BoundaryDatum,
    domain: Domain,
    n_samples: int = 1024,
) -> float:
    """Max boundary mismatch, read 2h inside along the normal."""
    s = np.linspace(0.0, domain.perimeter, n_samples, endpoint=False)
    p = domain.boundary_point(s) + 2.0 * u.cell * domain.inward_normal(s)
    ix = np.clip(((p[:, 0] - u.origin[0]) / u.cell).astype(int), 0, u.nx - 1)
    iy = np.clip(((p[:, 1] - u.origin[1]) / u.cell).astype(int), 0, u.ny - 1)
    return float(np.max(np.abs(u.values[iy, ix] - g.eval(s))))


@dataclass
class LeastGradientResult:
    """Everything the least-gradient pipeline produces."""

    u: GridField
    plan: TransportPlan
    flow: SegmentFlow
    cost: float
    tv: float
    trace_err: float


def solve_least_gradient(
    g: BoundaryDatum,
    domain: Domain,
    phi: Norm,
    grid: GridField = None,
    grid_n: int = 512,
    anchor_s: float = 0.0,
    init: str = "boundary",
    n_quad: int = 1,
) -> LeastGradientResult:
    """Full pipeline: datum -> derivative -> transport -> u.

    The transport cost is phi turned by a quarter, so the plan cost
    equals the anisotropic TV of the minimizer.  n_quad is the number
    of derivative atoms per linear piece of g; finely sampled data
    should keep it at 1, coarse data with long linear pieces may want
    more.
    """
    f_plus, f_minus = tangential_derivative(g, n_quad=n_quad)
    f_plus, f_minus = remove_common_mass(f_plus, f_minus)
    if grid is None:
        grid = grid_for_domain(domain, grid_n)
    if len(f_plus) == 0:
        # constant datum: nothing moves
        flow = SegmentFlow(np.zeros((0, 2)), np.zeros((0, 2)), np.zeros(0))
        u = reconstruct_u(flow, g, grid, domain, anchor_s)
        return LeastGradientResult(
            u=u,
            plan=None,
            flow=flow,
            cost=0.0,
            tv=total_variation(u, phi, domain),
            trace_err=trace_error(u, g, domain),
        )
    cost = ChordCost(domain, phi.rotated())
    plan = solve_kantorovich(f_plus, f_minus, cost, init=init)
    flow = flow_from_plan(plan)
    u = reconstruct_u(flow, g, grid, domain, anchor_s)
    return LeastGradientResult(
        u=u,
        plan=plan,
        flow=flow,
        cost=plan.cost,
        tv=total_variation(u, phi, domain),
        trace_err=trace_error(u, g, domain),
    )
