"""Seeded instance generators for the test suites and benchmarks.

Every generator takes an explicit numpy Generator so suites can be
replayed; nothing here draws from global randomness.
"""

from __future__ import annotations

import numpy as np

from .geom import Domain, disk
from .measures import BoundaryDatum, BoundaryMeasure, quadrature_atoms


def random_atoms_instance(
    rng: np.random.Generator, domain: Domain, n: int
) -> tuple[BoundaryMeasure, BoundaryMeasure]:
    """n unit-mass atoms per side at distinct random boundary positions."""
    P = domain.perimeter
    while True:
        s = rng.uniform(0.0, P, 2 * n)
        f_plus = BoundaryMeasure(s[:n], np.ones(n), P)
        f_minus = BoundaryMeasure(s[n:], np.ones(n), P)
        # merge tolerance may collapse colliding draws; just redraw
        if len(f_plus) == n and len(f_minus) == n:
            return f_plus, f_minus


def smooth_arc_instance(
    rng: np.random.Generator,
    domain: Domain,
    n_atoms: int = 400,
) -> tuple[BoundaryMeasure, BoundaryMeasure]:
    """Bounded smooth densities on two disjoint random arcs.

    Each side carries a raised-cosine bump (so the density vanishes at
    the arc ends and stays in L^infty), discretized by midpoint
    quadrature; the minus side is rescaled to balance exactly.
    """
    P = domain.perimeter
    # two disjoint arcs: split the circle at a random phase into four
    # blocks gap/arc/gap/arc with random proportions
    phase = rng.uniform(0.0, P)
    w = rng.uniform(0.35, 1.0, 4)
    w = w / w.sum() * P
    a_lo = phase + w[0]
    a_hi = a_lo + w[1]
    b_lo = a_hi + w[2]
    b_hi = b_lo + w[3]
    amp_p = rng.uniform(0.5, 2.0)
    amp_m = rng.uniform(0.5, 2.0)

    def bump(lo, hi, amp):
        return lambda s: amp * (1.0 - np.cos(2 * np.pi * (s - lo) / (hi - lo))) / 2.0

    f_plus = quadrature_atoms(bump(a_lo, a_hi, amp_p), (a_lo, a_hi), n_atoms, P)
    f_minus = quadrature_atoms(bump(b_lo, b_hi, amp_m), (b_lo, b_hi), n_atoms, P)
    f_minus = BoundaryMeasure(
        f_minus.s,
        f_minus.mass * (f_plus.total_mass / f_minus.total_mass),
        P,
        sublength=f_minus.sublength,
    )
    return f_plus, f_minus


def cosine_datum(n_samples: int, domain: Domain = None) -> BoundaryDatum:
    """g = cos(angle) sampled on a disk boundary.

    The least-gradient solution for this datum on the unit disk is
    u(x, y) = x, with vertical level chords; it anchors the benchmark
    and convergence suites.
    """
    if domain is None:
        domain = disk(1.0)
    P = domain.perimeter
    s = np.linspace(0.0, P, n_samples, endpoint=False)
    theta = s / domain.radius
    return BoundaryDatum(
        samples=np.stack([s, np.cos(theta)], axis=1), jumps=None, perimeter=P
    )


def mirror_cosine_measures(
    n_per_side: int, domain: Domain = None
) -> tuple[BoundaryMeasure, BoundaryMeasure]:
    """Quadrature of f+ = cos^+ and f- = cos^- on a disk boundary.

    The optimal plan reflects across the vertical axis; used for the
    large-instance duality and runtime checks.
    """
    if domain is None:
        domain = disk(1.0)
    P = domain.perimeter
    R = domain.radius
    half = np.pi * R / 2.0
    f_plus = quadrature_atoms(
        lambda s: np.cos(s / R), (-half, half), n_per_side, P
    )
    f_minus = quadrature_atoms(
        lambda s: -np.cos(s / R), (half, 3 * half), n_per_side, P
    )
    return f_plus, f_minus


def holder_half_measures(
    n_per_side: int, domain: Domain = None
) -> tuple[BoundaryMeasure, BoundaryMeasure]:
    """Quadrature of the sqrt(|sin|) density split by sign pattern.

    The generating boundary datum has derivative -sign(sin)*|sin|^(1/2),
    which is Holder continuous of exponent 1/2 at its zeros; its
    transport density is the marginal L^4 test case.
    """
    if domain is None:
        domain = disk(1.0)
    P = domain.perimeter
    R = domain.radius
    dens = lambda s: np.sqrt(np.abs(np.sin(s / R)))
    f_minus = quadrature_atoms(dens, (0.0, np.pi * R), n_per_side, P)
    f_plus = quadrature_atoms(dens, (np.pi * R, 2 * np.pi * R), n_per_side, P)
    return f_plus, f_minus
