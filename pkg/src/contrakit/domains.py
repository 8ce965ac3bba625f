"""Convex state-space regions: boxes and positive-orthant boxes.

A region is an axis-aligned product of intervals.  Facets may be open, in
which case sampling keeps a configurable margin away from them.  A region
may carry a nested-family generator ``zeta -> DomainSpec`` producing
shrinking subregions used by the nested-contraction pipeline.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import RegionError

# Default distance kept from open facets when sampling initial conditions.
DEFAULT_BOUNDARY_MARGIN = 1e-6

BOX = "box"
POSITIVE_ORTHANT_BOX = "positive_orthant_box"


@dataclass(frozen=True)
class DomainSpec:
    """Axis-aligned box region ``prod_i [lower_i, upper_i]``.

    ``open_lower``/``open_upper`` flag per-axis open facets.  ``kind`` is
    ``positive_orthant_box`` when the box is anchored at the origin, which
    the boundary-repelling checker requires.
    """

    kind: str
    lower: tuple
    upper: tuple
    open_lower: tuple = None
    open_upper: tuple = None
    nested_family: Optional[Callable] = field(default=None, compare=False)

    def __post_init__(self):
        lo = tuple(float(v) for v in self.lower)
        hi = tuple(float(v) for v in self.upper)
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)
        if self.kind not in (BOX, POSITIVE_ORTHANT_BOX):
            raise RegionError(f"unknown region kind {self.kind!r}")
        if len(lo) != len(hi):
            raise RegionError("lower/upper bound lengths differ")
        if any(l >= u for l, u in zip(lo, hi)):
            raise RegionError(f"empty region: lower {lo} not below upper {hi}")
        if self.kind == POSITIVE_ORTHANT_BOX and any(l != 0.0 for l in lo):
            raise RegionError("positive_orthant_box must be anchored at 0")
        ol = self.open_lower if self.open_lower is not None else (False,) * len(lo)
        ou = self.open_upper if self.open_upper is not None else (False,) * len(lo)
        object.__setattr__(self, "open_lower", tuple(bool(b) for b in ol))
        object.__setattr__(self, "open_upper", tuple(bool(b) for b in ou))
        if len(self.open_lower) != len(lo) or len(self.open_upper) != len(lo):
            raise RegionError("facet flag lengths do not match dimension")

    @property
    def dim(self) -> int:
        return len(self.lower)

    def contains(self, x, slack: float = 0.0) -> bool:
        x = np.asarray(x, dtype=float)
        lo = np.asarray(self.lower)
        hi = np.asarray(self.upper)
        return bool(np.all(x >= lo - slack) and np.all(x <= hi + slack))

    def excursion(self, x) -> float:
        """Distance outside the box (0 for interior points), sup-norm."""
        x = np.asarray(x, dtype=float)
        below = np.asarray(self.lower) - x
        above = x - np.asarray(self.upper)
        return float(max(0.0, np.max(below), np.max(above)))

    def distance_to_boundary(self, x) -> float:
        """Distance from an interior point to the nearest facet (negative
        of the excursion for exterior points)."""
        x = np.asarray(x, dtype=float)
        gaps = np.concatenate(
            [x - np.asarray(self.lower), np.asarray(self.upper) - x]
        )
        return float(np.min(gaps))

    def interior_box(self, margin: float = DEFAULT_BOUNDARY_MARGIN) -> "DomainSpec":
        """Box shrunk by ``margin`` on every open facet (closed facets are
        kept) so that samples avoid open boundaries."""
        lo = [l + margin if o else l for l, o, in zip(self.lower, self.open_lower)]
        hi = [u - margin if o else u for u, o in zip(self.upper, self.open_upper)]
        return DomainSpec(BOX, tuple(lo), tuple(hi))

    def shrink(self, factor: float) -> "DomainSpec":
        """Box shrunk on every facet by ``factor`` times the axis width."""
        lo, hi = [], []
        for l, u in zip(self.lower, self.upper):
            w = (u - l) * factor
            lo.append(l + w)
            hi.append(u - w)
        return DomainSpec(BOX, tuple(lo), tuple(hi))

    def contains_region(self, other: "DomainSpec", slack: float = 1e-12) -> bool:
        return all(
            ol >= sl - slack and ou <= su + slack
            for sl, su, ol, ou in zip(self.lower, self.upper, other.lower, other.upper)
        )

    def grid(self, resolution) -> np.ndarray:
        """Deterministic product grid, ``resolution`` points per axis
        (scalar or per-axis sequence, each >= 2)."""
        if np.isscalar(resolution):
            resolution = (int(resolution),) * self.dim
        if len(resolution) != self.dim:
            raise RegionError("grid resolution length does not match dimension")
        if any(r < 2 for r in resolution):
            raise RegionError("grid resolution must be >= 2 per axis")
        axes = [
            np.linspace(l, u, r)
            for l, u, r in zip(self.lower, self.upper, resolution)
        ]
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=-1)

    def sample(self, rng: np.random.Generator, n: int,
               margin: float = DEFAULT_BOUNDARY_MARGIN) -> np.ndarray:
        """Uniform samples strictly inside the margin-shrunk box."""
        box = self.interior_box(margin)
        lo = np.asarray(box.lower)
        hi = np.asarray(box.upper)
        return lo + rng.random((n, self.dim)) * (hi - lo)

    def center(self) -> np.ndarray:
        return (np.asarray(self.lower) + np.asarray(self.upper)) / 2.0

    def facet_points(self, per_facet: int = 3) -> np.ndarray:
        """Deterministic sample points on every facet, corners included."""
        pts = []
        interior = [np.linspace(l, u, per_facet) for l, u in zip(self.lower, self.upper)]
        for axis in range(self.dim):
            for bound in (self.lower[axis], self.upper[axis]):
                axes = list(interior)
                axes[axis] = np.array([bound])
                mesh = np.meshgrid(*axes, indexing="ij")
                pts.append(np.stack([m.ravel() for m in mesh], axis=-1))
        return np.unique(np.concatenate(pts, axis=0), axis=0)


def box(lower, upper, open_lower=None, open_upper=None, nested_family=None) -> DomainSpec:
    return DomainSpec(BOX, tuple(lower), tuple(upper),
                      open_lower, open_upper, nested_family)


def positive_orthant_box(upper, nested_family=None) -> DomainSpec:
    upper = tuple(upper)
    return DomainSpec(POSITIVE_ORTHANT_BOX, (0.0,) * len(upper), upper,
                      nested_family=nested_family)


def check_nested_family_monotone(family, zetas, t1: float = 0.0) -> None:
    """Assert the inclusion Omega_{z1} subset Omega_{z2} for z1 >= z2 on
    the sampled zeta values; raises RegionError otherwise."""
    zetas = sorted(zetas)
    for small, big in zip(zetas[:-1], zetas[1:]):
        inner = _family_region(family, big, t1)
        outer = _family_region(family, small, t1)
        if not outer.contains_region(inner):
            raise RegionError(
                f"nested family not monotone: Omega_{big} not inside Omega_{small}"
            )


def _family_region(family, zeta, t1):
    try:
        return family(zeta, t1)
    except TypeError:
        return family(zeta)
