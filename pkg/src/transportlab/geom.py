"""Planar domains and strictly convex norms.

Domains are uniformly convex, bounded, and described by their boundary:
a closed counterclockwise curve parameterized by arclength ``s`` starting
at the intersection with the positive x-axis.  Three kinds are supported:
disks, axis-aligned ellipses, and star-shaped domains given by a smooth
positive radial profile ``rho(theta)``.

Norms are strictly convex norms on R^2 with an evaluable dual norm:
the euclidean norm, the l^q norms for 1 < q < inf, and quadratic norms
sqrt(v' A v) for symmetric positive definite A.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicSpline, PchipInterpolator

TWO_PI = 2.0 * math.pi

# Gauss-Legendre rule used for all arclength quadrature.
_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(12)


class _ArclengthTable:
    """Cumulative arclength over a periodic parameter, with inversion.

    Panels use Gauss-Legendre quadrature of the supplied speed function;
    inversion combines a monotone cubic initial guess with Newton steps.
    Round trips s -> t -> s are accurate to well below 1e-10 * perimeter.
    """

    def __init__(self, speed, period: float = TWO_PI, n_panels: int = 4096):
        self.speed = speed
        self.period = period
        self.knots = np.linspace(0.0, period, n_panels + 1)
        h = period / n_panels
        # quadrature nodes for every panel at once
        t_nodes = self.knots[:-1, None] + 0.5 * h * (_GL_NODES[None, :] + 1.0)
        panel = 0.5 * h * (speed(t_nodes) * _GL_WEIGHTS[None, :]).sum(axis=1)
        self.cumulative = np.concatenate([[0.0], np.cumsum(panel)])
        self.total = float(self.cumulative[-1])
        self._inverse_guess = PchipInterpolator(self.cumulative, self.knots)

    def _length_from_knot(self, k: np.ndarray, t: np.ndarray) -> np.ndarray:
        """Arclength from knot index k to parameter t (t within panel reach)."""
        t0 = self.knots[k]
        half = 0.5 * (t - t0)
        nodes = t0[:, None] + half[:, None] * (_GL_NODES[None, :] + 1.0)
        return half * (self.speed(nodes) * _GL_WEIGHTS[None, :]).sum(axis=1)

    def param_of_arclength(self, s) -> np.ndarray:
        s = np.atleast_1d(np.asarray(s, dtype=float))
        s = np.mod(s, self.total)
        t = np.clip(self._inverse_guess(s), 0.0, self.period)
        for _ in range(4):
            k = np.clip(
                np.searchsorted(self.knots, t, side="right") - 1, 0, len(self.knots) - 2
            )
            resid = self.cumulative[k] + self._length_from_knot(k, t) - s
            t = t - resid / self.speed(t)
        return t

    def arclength_of_param(self, t) -> np.ndarray:
        t = np.atleast_1d(np.asarray(t, dtype=float))
        t = np.mod(t, self.period)
        k = np.clip(
            np.searchsorted(self.knots, t, side="right") - 1, 0, len(self.knots) - 2
        )
        return self.cumulative[k] + self._length_from_knot(k, t)


def _as_points(x, y) -> np.ndarray:
    return np.stack([x, y], axis=-1)


class Domain:
    """Base class for uniformly convex planar domains."""

    kind: str = ""
    perimeter: float
    diameter: float
    curvature_min: float

    def _param_of_s(self, s) -> np.ndarray:
        raise NotImplementedError

    def boundary_point(self, s) -> np.ndarray:
        """Boundary point at arclength s (wraps modulo the perimeter)."""
        raise NotImplementedError

    def inward_normal(self, s) -> np.ndarray:
        raise NotImplementedError

    def curvature(self, s) -> np.ndarray:
        raise NotImplementedError

    def contains(self, points) -> np.ndarray:
        """True for points inside or on the boundary."""
        raise NotImplementedError

    def bbox(self) -> tuple[float, float, float, float]:
        """(xmin, ymin, xmax, ymax) of the closed domain."""
        raise NotImplementedError

    def config(self) -> dict:
        raise NotImplementedError


@dataclass
class Disk(Domain):
    radius: float

    kind = "disk"

    def __post_init__(self):
        if self.radius <= 0:
            raise ValueError(f"disk radius must be positive, got {self.radius}")
        self.perimeter = TWO_PI * self.radius
        self.diameter = 2.0 * self.radius
        self.curvature_min = 1.0 / self.radius

    def _param_of_s(self, s):
        return np.atleast_1d(np.asarray(s, dtype=float)) / self.radius

    def boundary_point(self, s):
        th = self._param_of_s(s)
        return _as_points(self.radius * np.cos(th), self.radius * np.sin(th))

    def inward_normal(self, s):
        th = self._param_of_s(s)
        return _as_points(-np.cos(th), -np.sin(th))

    def curvature(self, s):
        th = self._param_of_s(s)
        return np.full_like(th, 1.0 / self.radius)

    def contains(self, points):
        p = np.asarray(points, dtype=float)
        return p[..., 0] ** 2 + p[..., 1] ** 2 <= self.radius**2 * (1 + 1e-12)

    def bbox(self):
        r = self.radius
        return (-r, -r, r, r)

    def config(self):
        return {"kind": "disk", "radius": self.radius}


@dataclass
class Ellipse(Domain):
    a: float
    b: float

    kind = "ellipse"

    def __post_init__(self):
        if self.a <= 0 or self.b <= 0:
            raise ValueError(f"ellipse semi-axes must be positive, got {self.a}, {self.b}")
        self._table = _ArclengthTable(self._speed)
        self.perimeter = self._table.total
        self.diameter = 2.0 * max(self.a, self.b)
        self.curvature_min = min(self.a / self.b**2, self.b / self.a**2)

    def _speed(self, t):
        return np.sqrt((self.a * np.sin(t)) ** 2 + (self.b * np.cos(t)) ** 2)

    def _param_of_s(self, s):
        return self._table.param_of_arclength(s)

    def boundary_point(self, s):
        t = self._param_of_s(s)
        return _as_points(self.a * np.cos(t), self.b * np.sin(t))

    def inward_normal(self, s):
        t = self._param_of_s(s)
        speed = self._speed(t)
        # tangent (-a sin, b cos)/speed rotated by +pi/2
        return _as_points(-self.b * np.cos(t) / speed, -self.a * np.sin(t) / speed)

    def curvature(self, s):
        t = self._param_of_s(s)
        return self.a * self.b / self._speed(t) ** 3

    def contains(self, points):
        p = np.asarray(points, dtype=float)
        return (p[..., 0] / self.a) ** 2 + (p[..., 1] / self.b) ** 2 <= 1 + 1e-12

    def bbox(self):
        return (-self.a, -self.b, self.a, self.b)

    def config(self):
        return {"kind": "ellipse", "a": self.a, "b": self.b}


@dataclass
class RadialDomain(Domain):
    """Star-shaped domain r <= rho(theta) for a smooth positive profile.

    The constructor samples rho on a fine grid, builds a periodic cubic
    spline, and rejects profiles whose boundary curvature is not strictly
    positive on 4096 samples (the domain would not be uniformly convex).
    """

    rho: object = field(repr=False)
    n_check: int = 4096

    kind = "radial"

    def __post_init__(self):
        theta = np.linspace(0.0, TWO_PI, self.n_check + 1)
        vals = np.asarray([float(self.rho(t)) for t in theta])
        vals[-1] = vals[0]
        if np.any(vals <= 0):
            raise ValueError("radial profile must be strictly positive")
        self._spline = CubicSpline(theta, vals, bc_type="periodic")
        self._d1 = self._spline.derivative(1)
        self._d2 = self._spline.derivative(2)
        check = theta[:-1]
        kappa = self._curvature_of_theta(check)
        if np.any(kappa <= 0):
            worst = check[int(np.argmin(kappa))]
            raise ValueError(
                f"radial profile is not uniformly convex: curvature "
                f"{kappa.min():.3e} at theta={worst:.6f}"
            )
        self.curvature_min = float(kappa.min())
        self._table = _ArclengthTable(self._speed)
        self.perimeter = self._table.total
        pts = self.boundary_point(np.linspace(0, self.perimeter, 4096, endpoint=False))
        self.diameter = 2.0 * float(np.max(np.hypot(pts[:, 0], pts[:, 1])))
        pad = 1e-9 * self.diameter
        self._bbox = (
            float(pts[:, 0].min()) - pad,
            float(pts[:, 1].min()) - pad,
            float(pts[:, 0].max()) + pad,
            float(pts[:, 1].max()) + pad,
        )

    def _curvature_of_theta(self, th):
        r = self._spline(th)
        r1 = self._d1(th)
        r2 = self._d2(th)
        return (r**2 + 2 * r1**2 - r * r2) / (r**2 + r1**2) ** 1.5

    def _speed(self, th):
        return np.sqrt(self._spline(th) ** 2 + self._d1(th) ** 2)

    def _param_of_s(self, s):
        return self._table.param_of_arclength(s)

    def boundary_point(self, s):
        th = self._param_of_s(s)
        r = self._spline(th)
        return _as_points(r * np.cos(th), r * np.sin(th))

    def inward_normal(self, s):
        th = self._param_of_s(s)
        r = self._spline(th)
        r1 = self._d1(th)
        # derivative of (r cos, r sin) with respect to theta, normalized
        tx = r1 * np.cos(th) - r * np.sin(th)
        ty = r1 * np.sin(th) + r * np.cos(th)
        speed = np.hypot(tx, ty)
        return _as_points(-ty / speed, tx / speed)

    def curvature(self, s):
        return self._curvature_of_theta(self._param_of_s(s))

    def contains(self, points):
        p = np.asarray(points, dtype=float)
        th = np.mod(np.arctan2(p[..., 1], p[..., 0]), TWO_PI)
        return np.hypot(p[..., 0], p[..., 1]) <= self._spline(th) * (1 + 1e-12)

    def bbox(self):
        return self._bbox

    def config(self):
        return {"kind": "radial"}


def disk(radius: float) -> Disk:
    return Disk(float(radius))


def ellipse(a: float, b: float) -> Ellipse:
    return Ellipse(float(a), float(b))


def radial(rho, n_check: int = 4096) -> RadialDomain:
    return RadialDomain(rho, n_check)


_ROT_MINUS_90 = np.array([[0.0, 1.0], [-1.0, 0.0]])


class Norm:
    """Base class for strictly convex norms on the plane."""

    kind: str = ""

    def __call__(self, v) -> np.ndarray:
        raise NotImplementedError

    def dual_norm(self) -> "Norm":
        """The norm ||v||_* = sup { v . xi : ||xi|| <= 1 }."""
        raise NotImplementedError

    def dual(self, v) -> np.ndarray:
        return self.dual_norm()(v)

    def rotated(self) -> "Norm":
        """The norm v -> ||R_{-pi/2} v||.

        Maps a least-gradient anisotropy to the matching transport cost
        and back; the map is an involution because norms are even.
        """
        raise NotImplementedError

    def config(self) -> dict:
        raise NotImplementedError


@dataclass
class EuclideanNorm(Norm):
    kind = "euclidean"

    def __call__(self, v):
        v = np.asarray(v, dtype=float)
        return np.hypot(v[..., 0], v[..., 1])

    def dual_norm(self):
        return self

    def rotated(self):
        return self

    def config(self):
        return {"kind": "euclidean"}


@dataclass
class LqNorm(Norm):
    q: float

    kind = "lq"

    def __post_init__(self):
        if not 1.0 < self.q < math.inf:
            raise ValueError(f"lq norm requires 1 < q < inf, got q={self.q}")

    def __call__(self, v):
        v = np.asarray(v, dtype=float)
        return (np.abs(v[..., 0]) ** self.q + np.abs(v[..., 1]) ** self.q) ** (
            1.0 / self.q
        )

    def dual_norm(self):
        return LqNorm(self.q / (self.q - 1.0))

    def rotated(self):
        # l^q balls are invariant under quarter turns
        return self

    def config(self):
        return {"kind": "lq", "q": self.q}


@dataclass
class QuadraticNorm(Norm):
    a: np.ndarray

    kind = "quadratic"

    def __post_init__(self):
        a = np.asarray(self.a, dtype=float)
        if a.shape != (2, 2):
            raise ValueError(f"quadratic norm needs a 2x2 matrix, got shape {a.shape}")
        if not np.allclose(a, a.T, rtol=0, atol=1e-12 * max(1.0, np.abs(a).max())):
            raise ValueError("quadratic norm matrix must be symmetric")
        eigs = np.linalg.eigvalsh(a)
        if eigs.min() <= 0:
            raise ValueError(f"quadratic norm matrix must be positive definite, eigenvalues {eigs}")
        self.a = a
        self._inv = np.linalg.inv(a)

    def __call__(self, v):
        v = np.asarray(v, dtype=float)
        return np.sqrt(np.einsum("...i,ij,...j->...", v, self.a, v))

    def dual_norm(self):
        return QuadraticNorm(self._inv)

    def rotated(self):
        return QuadraticNorm(_ROT_MINUS_90.T @ self.a @ _ROT_MINUS_90)

    def config(self):
        return {"kind": "quadratic", "a": self.a.tolist()}


def euclidean() -> EuclideanNorm:
    return EuclideanNorm()


def lq(q: float) -> LqNorm:
    return LqNorm(float(q))


def quadratic(a) -> QuadraticNorm:
    return QuadraticNorm(np.asarray(a, dtype=float))


def norm_eval(norm: Norm, v) -> np.ndarray:
    return norm(v)


def dual_norm_eval(norm: Norm, v) -> np.ndarray:
    return norm.dual(v)


def chord_cost(norm: Norm, domain: Domain, s1, s2) -> np.ndarray:
    """Cost ||x(s2) - x(s1)|| between two boundary points."""
    p1 = domain.boundary_point(s1)
    p2 = domain.boundary_point(s2)
    return norm(p2 - p1)


@dataclass
class ChordCost:
    """Boundary transport cost bundling a domain with a cost norm."""

    domain: Domain
    norm: Norm

    def __call__(self, s1, s2):
        return chord_cost(self.norm, self.domain, s1, s2)

    def points(self, s) -> np.ndarray:
        return self.domain.boundary_point(s)

    def matrix(self, s_sources, s_targets) -> np.ndarray:
        """Full cost matrix between two arclength families."""
        p = self.domain.boundary_point(np.asarray(s_sources, dtype=float))
        q = self.domain.boundary_point(np.asarray(s_targets, dtype=float))
        return self.norm(p[:, None, :] - q[None, :, :])


def domain_from_config(cfg: dict) -> Domain:
    kind = cfg.get("kind")
    if kind == "disk":
        return disk(cfg["radius"])
    if kind == "ellipse":
        return ellipse(cfg["a"], cfg["b"])
    raise ValueError(f"unknown domain kind {kind!r} (radial domains are code-only)")


def norm_from_config(cfg: dict) -> Norm:
    kind = cfg.get("kind")
    if kind == "euclidean":
        return euclidean()
    if kind == "lq":
        return lq(cfg["q"])
    if kind == "quadratic":
        return quadratic(cfg["a"])
    raise ValueError(f"unknown norm kind {kind!r}")
