"""Transport densities on cartesian grids.

The density of a plan spreads each entry's mass along its chord; the
partial density stops every particle after a fraction tau of its trip.
Deposition computes exact per-cell intersection lengths, so the
partial density integrates to exactly tau * cost (to roundoff) and the
L^p statistics are free of sampling noise.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .geom import Domain
from .ot import TransportPlan, displacement_lengths


@dataclass
class GridField:
    """Square-cell grid holding either a density or function samples.

    values[iy, ix] belongs to the cell with lower-left corner
    origin + cell*(ix, iy).  kind is "density" (measure per unit area,
    nonnegative) or "function" (plain samples).
    """

    origin: tuple
    cell: float
    nx: int
    ny: int
    values: np.ndarray
    kind: str = "density"

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (self.ny, self.nx):
            raise ValueError(
                f"values shape {self.values.shape} does not match "
                f"(ny, nx) = {(self.ny, self.nx)}"
            )
        if self.kind not in ("density", "function"):
            raise ValueError(f"unknown field kind {self.kind!r}")

    def centers(self) -> np.ndarray:
        """Cell centers, shape (ny, nx, 2)."""
        x = self.origin[0] + self.cell * (np.arange(self.nx) + 0.5)
        y = self.origin[1] + self.cell * (np.arange(self.ny) + 0.5)
        out = np.empty((self.ny, self.nx, 2))
        out[..., 0] = x[None, :]
        out[..., 1] = y[:, None]
        return out

    def integral(self) -> float:
        return float(self.values.sum() * self.cell**2)

    def copy_empty(self, kind: str = None) -> "GridField":
        return GridField(
            origin=self.origin,
            cell=self.cell,
            nx=self.nx,
            ny=self.ny,
            values=np.zeros((self.ny, self.nx)),
            kind=kind or self.kind,
        )


def grid_for_domain(domain: Domain, n: int = 512) -> GridField:
    """Empty density grid of square cells covering the domain's box.

    n counts cells along the longer box side.
    """
    if n < 1:
        raise ValueError("grid needs at least one cell")
    x0, y0, x1, y1 = domain.bbox()
    w, h = x1 - x0, y1 - y0
    cell = max(w, h) / n
    nx = max(1, int(math.ceil(w / cell - 1e-12)))
    ny = max(1, int(math.ceil(h / cell - 1e-12)))
    return GridField(
        origin=(x0, y0),
        cell=cell,
        nx=nx,
        ny=ny,
        values=np.zeros((ny, nx)),
        kind="density",
    )


@dataclass
class InterpolatedMeasure:
    """Snapshot of the moving mass at one instant of the transport."""

    points: np.ndarray
    mass: np.ndarray

    @property
    def total_mass(self) -> float:
        return float(self.mass.sum())


def interpolate_plan(plan: TransportPlan, t: float) -> InterpolatedMeasure:
    """Plan entries pushed to (1-t)x + t*y, weighted by chord cost.

    Each entry becomes one atom of mass entry_cost * entry_mass, so the
    total mass equals the plan cost for every t.
    """
    if not 0.0 <= t <= 1.0:
        raise ValueError(f"t must lie in [0, 1], got {t!r}")
    a, b = plan.entry_segments()
    pts = (1.0 - t) * a + t * b
    return InterpolatedMeasure(points=pts, mass=plan.entry_costs * plan.mass)


def deposit_partial_density(
    plan: TransportPlan, tau: float, grid: GridField
) -> GridField:
    """Density of the transport truncated at trip fraction tau.

    Every entry deposits onto the sub-segment from its source x to
    x + tau*(y - x), with constant linear density
    mass * cost_norm(x - y) / euclidean(x - y) per unit length.  Cell
    increments are exact intersection lengths, so the field integrates
    to tau * plan.cost up to roundoff.
    """
    if not 0.0 < tau <= 1.0:
        raise ValueError(f"tau must lie in (0, 1], got {tau!r}")
    a, b = plan.entry_segments()
    end = a + tau * (b - a)
    seg_len = np.hypot(*(b - a).T)
    ok = seg_len > 0
    lam = np.zeros(len(seg_len))
    lam[ok] = plan.mass[ok] * plan.entry_costs[ok] / seg_len[ok]
    out = grid.copy_empty(kind="density")
    kernels.deposit_segments(
        out.values, out.origin, out.cell, a[ok], end[ok], lam[ok]
    )
    return out


def deposit_density(plan: TransportPlan, grid: GridField) -> GridField:
    """Full transport density (tau = 1)."""
    return deposit_partial_density(plan, 1.0, grid)


def lp_norm(field: GridField, p) -> float:
    """L^p norm of a density field by the midpoint rule.

    p may be any real >= 1 or math.inf.
    """
    if field.kind != "density":
        raise ValueError("lp_norm expects a density field")
    if p == math.inf:
        return float(field.values.max(initial=0.0))
    p = float(p)
    if p < 1.0:
        raise ValueError(f"p must be >= 1, got {p!r}")
    v = field.values
    return float((np.sum(v**p) * field.cell**2) ** (1.0 / p))


def density_mass(plan: TransportPlan) -> float:
    """Total mass of the transport density; coincides with plan.cost."""
    return float(np.dot(plan.mass, plan.entry_costs))


def time_factor(p: float, tau: float) -> float:
    """Closed form of the trip-time integral of (1-t)^(1-p) over [0, tau].

    Diverges (returns inf) when tau = 1 and p >= 2.
    """
    if p <= 1.0:
        raise ValueError(f"p must exceed 1, got {p!r}")
    if not 0.0 < tau <= 1.0:
        raise ValueError(f"tau must lie in (0, 1], got {tau!r}")
    if tau == 1.0 and p >= 2.0:
        return math.inf
    if p == 2.0:
        return -math.log1p(-tau)
    return ((1.0 - tau) ** (2.0 - p) - 1.0) / (p - 2.0)


def lp_bound_factors(plan: TransportPlan, p: float, tau: float) -> tuple[float, float]:
    """The two factors bounding the p-th power of the partial density.

    Returns (time_integral, data_integral).  time_integral is the trip
    integral from time_factor.  data_integral converts source atoms to
    boundary densities via their quadrature sublengths and sums
    density^p * sublength * displacement^(2-p); atoms without a
    sublength (explicit jumps) have no density in L^p, making the
    factor a flagged infinity rather than an error.
    """
    if p <= 1.0:
        raise ValueError(f"p must exceed 1, got {p!r}")
    ti = time_factor(p, tau)
    src = plan.source
    D, _ = displacement_lengths(plan)
    m = src.mass
    sub = src.sublength
    if np.any(sub <= 0):
        return ti, math.inf
    dens = m / sub
    with np.errstate(divide="ignore"):
        dpow = np.where(D > 0, D ** (2.0 - p), np.where(p <= 2.0, 0.0, math.inf))
    data = float(np.sum(dens**p * sub * dpow))
    return ti, data


def write_csv(field: GridField, path: str) -> None:
    """Row-major CSV dump with a grid-geometry header line."""
    with open(path, "w") as fh:
        fh.write(
            f"# origin={float(field.origin[0])!r},{float(field.origin[1])!r} "
            f"cell={float(field.cell)!r} nx={field.nx} ny={field.ny} "
            f"kind={field.kind}\n"
        )
        for row in field.values:
            fh.write(",".join(repr(float(v)) for v in row))
            fh.write("\n")


def read_csv(path: str) -> GridField:
    with open(path) as fh:
        header = fh.readline()
        if not header.startswith("# origin="):
            raise ValueError(f"{path} is not a grid CSV (bad header)")
        fields = dict(
            part.split("=", 1) for part in header[2:].strip().split(" ")
        )
        ox, oy = (float(v) for v in fields["origin"].split(","))
        values = np.loadtxt(fh, delimiter=",", ndmin=2)
    return GridField(
        origin=(ox, oy),
        cell=float(fields["cell"]),
        nx=int(fields["nx"]),
        ny=int(fields["ny"]),
        values=values,
        kind=fields.get("kind", "density"),
    )


def write_pgm(field: GridField, path: str) -> None:
    """8-bit PGM preview, max-normalized, top row = largest y."""
    vmax = float(field.values.max(initial=0.0))
    scale = 255.0 / vmax if vmax > 0 else 0.0
    img = np.clip(field.values * scale, 0, 255).astype(np.uint8)[::-1]
    with open(path, "wb") as fh:
        fh.write(f"P5\n{field.nx} {field.ny}\n255\n".encode())
        fh.write(img.tobytes())
