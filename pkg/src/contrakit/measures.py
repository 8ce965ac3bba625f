"""Induced matrix measures (logarithmic norms) and region bounds.

Supported norms: L1, L2, L-infinity, and their weighted variants
``|z|_P := |Pz|`` for an invertible weight ``P``.  The measure induced by
the weighted norm is the base measure of ``P A P^{-1}``.  Each closed form
can be validated against the finite-epsilon limit quotient
``(||I + eps*A|| - 1) / eps``.
"""

from __future__ import annotations

import hashlib
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .domains import DomainSpec
from .errors import (DimensionError, InvalidWeightError, NumericError,
                     ParameterError, RegionError)

L1 = "l1"
L2 = "l2"
LINF = "linf"
_BASES = (L1, L2, LINF)

# Weight matrices with a larger condition number do not define a
# numerically meaningful norm.
MAX_WEIGHT_CONDITION = 1e12


def as_matrix(a) -> np.ndarray:
    """Validate and return a finite square 2-d float array."""
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DimensionError(f"expected a square matrix, got shape {a.shape}")
    if a.shape[0] < 1:
        raise DimensionError("matrix dimension must be >= 1")
    if not np.all(np.isfinite(a)):
        raise DimensionError("matrix entries must be finite")
    return a


@dataclass(frozen=True, eq=False)
class MeasureSpec:
    """A norm identity: base norm plus optional invertible weight matrix."""

    base: str = L1
    weight: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.base not in _BASES:
            raise ParameterError(f"unknown base norm {self.base!r}; use one of {_BASES}")
        if self.weight is not None:
            w = as_matrix(self.weight)
            cond = np.linalg.cond(w)
            if not np.isfinite(cond) or cond > MAX_WEIGHT_CONDITION:
                raise InvalidWeightError(
                    f"weight condition number {cond:.3e} exceeds {MAX_WEIGHT_CONDITION:.0e}"
                )
            object.__setattr__(self, "weight", w)
            object.__setattr__(self, "_weight_inv", np.linalg.inv(w))
        else:
            object.__setattr__(self, "_weight_inv", None)

    def key(self) -> tuple:
        """Hashable identity used for caching."""
        if self.weight is None:
            return (self.base, None)
        digest = hashlib.sha256(np.ascontiguousarray(self.weight).tobytes()).hexdigest()
        return (self.base, digest)

    def describe(self) -> dict:
        d = {"base": self.base}
        if self.weight is not None:
            d["weight"] = self.weight.tolist()
        return d


def mu_one(A) -> float:
    """L1 matrix measure: max over columns j of A_jj + sum_{i!=j} |A_ij|."""
    A = as_matrix(A)
    cols = np.sum(np.abs(A), axis=0) + np.diag(A) - np.abs(np.diag(A))
    return float(np.max(cols))


def mu_inf(A) -> float:
    """L-infinity matrix measure: max over rows i of A_ii + sum_{j!=i} |A_ij|."""
    A = as_matrix(A)
    rows = np.sum(np.abs(A), axis=1) + np.diag(A) - np.abs(np.diag(A))
    return float(np.max(rows))


def mu_two(A) -> float:
    """L2 matrix measure: largest eigenvalue of the symmetric part."""
    A = as_matrix(A)
    sym = (A + A.T) / 2.0
    try:
        vals = np.linalg.eigvalsh(sym)
    except np.linalg.LinAlgError as exc:  # convergence failure is an error
        raise NumericError(f"symmetric eigensolve failed: {exc}") from exc
    return float(vals[-1])


def is_metzler(A) -> bool:
    """True iff every off-diagonal entry is nonnegative."""
    A = as_matrix(A)
    off = A - np.diag(np.diag(A))
    return bool(np.all(off >= 0.0))


def _base_measure(A, base: str) -> float:
    if base == L1:
        return mu_one(A)
    if base == LINF:
        return mu_inf(A)
    return mu_two(A)


def mu_weighted(A, spec: MeasureSpec) -> float:
    """Measure induced by ``|z|_P = |Pz|``: base measure of P A P^{-1}."""
    A = as_matrix(A)
    if spec.weight is None:
        return _base_measure(A, spec.base)
    P = spec.weight
    if P.shape != A.shape:
        raise DimensionError(
            f"weight shape {P.shape} does not match matrix shape {A.shape}"
        )
    return _base_measure(P @ A @ spec._weight_inv, spec.base)


def measure(A, spec: MeasureSpec) -> float:
    """Closed-form matrix measure for the given norm identity."""
    return mu_weighted(A, spec)


def induced_norm(A, spec: MeasureSpec) -> float:
    """Induced matrix norm ||A|| for the norm identity."""
    A = as_matrix(A)
    if spec.weight is not None:
        A = spec.weight @ A @ spec._weight_inv
    if spec.base == L1:
        return float(np.max(np.sum(np.abs(A), axis=0)))
    if spec.base == LINF:
        return float(np.max(np.sum(np.abs(A), axis=1)))
    return float(np.linalg.norm(A, 2))


def vector_norm(z, spec: MeasureSpec) -> float:
    """Vector norm |z| (or |Pz| when weighted)."""
    z = np.asarray(z, dtype=float)
    if spec.weight is not None:
        z = spec.weight @ z
    if spec.base == L1:
        return float(np.sum(np.abs(z)))
    if spec.base == LINF:
        return float(np.max(np.abs(z)))
    return float(np.linalg.norm(z))


def mu_limit_estimate(A, spec: MeasureSpec, eps: float) -> float:
    """Finite-eps quotient (||I + eps*A|| - 1)/eps.

    Approximates the measure from above; the quotient is nonincreasing as
    eps decreases to 0.
    """
    if eps <= 0:
        raise ParameterError(f"eps must be > 0, got {eps}")
    A = as_matrix(A)
    return (induced_norm(np.eye(A.shape[0]) + eps * A, spec) - 1.0) / eps


@dataclass(frozen=True)
class RegionBound:
    """Supremum of mu(J(t, x)) over a gridded region, with its evidence."""

    region: DomainSpec
    sup_measure: float
    argmax_point: tuple
    argmax_time: float
    grid_resolution: tuple


def _worker_count() -> int:
    raw = os.environ.get("CONTRAKIT_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def _evaluate_chunks(fn, items, workers):
    # Deterministic regardless of schedule: results are reassembled in
    # submission order and reduced by index.
    if workers <= 1 or len(items) < 4 * workers:
        return [fn(it) for it in items]
    chunks = np.array_split(np.arange(len(items)), workers)
    out = [None] * len(items)
    with ThreadPoolExecutor(max_workers=workers) as pool:
        futures = [pool.submit(lambda idx: [(i, fn(items[i])) for i in idx], c)
                   for c in chunks]
        for fut in futures:
            for i, val in fut.result():
                out[i] = val
    return out


def sup_measure_over_region(model, region: DomainSpec, spec: MeasureSpec,
                            grid=9, t_samples=(), refine_rounds: int = 2,
                            refine_samples: int = 64, seed: int = 0) -> RegionBound:
    """Grid bound on sup of mu(J(t, x)) over ``region`` x ``t_samples``.

    For time-invariant models ``t_samples`` is ignored.  The deterministic
    grid maximum (ties broken at the lowest grid index) is optionally
    refined with random samples in a shrinking box around the argmax.
    """
    if not model.domain.contains_region(region, slack=1e-9):
        raise RegionError("region is not contained in the model domain")
    points = region.grid(grid)
    if np.isscalar(grid):
        resolution = (int(grid),) * region.dim
    else:
        resolution = tuple(int(g) for g in grid)
    times = (0.0,) if model.time_invariant or not t_samples else tuple(t_samples)

    def value(tx):
        t, x = tx
        return measure(model.jacobian(t, np.asarray(x)), spec)

    items = [(t, tuple(p)) for t in times for p in points]
    vals = _evaluate_chunks(value, items, _worker_count())
    best = int(np.argmax(vals))
    best_val = vals[best]
    best_t, best_x = items[best]
    best_x = np.asarray(best_x)

    rng = np.random.default_rng(seed)
    widths = (np.asarray(region.upper) - np.asarray(region.lower))
    for r in range(refine_rounds):
        radius = widths / (2.0 ** (r + 2))
        lo = np.maximum(best_x - radius, region.lower)
        hi = np.minimum(best_x + radius, region.upper)
        cand = lo + rng.random((refine_samples, region.dim)) * (hi - lo)
        for t in times:
            for p in cand:
                v = measure(model.jacobian(t, p), spec)
                if v > best_val:
                    best_val, best_x, best_t = v, p.copy(), t
    return RegionBound(region=region, sup_measure=float(best_val),
                       argmax_point=tuple(float(v) for v in best_x),
                       argmax_time=float(best_t), grid_resolution=resolution)
