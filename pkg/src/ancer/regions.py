"""Certified-region geometry: membership, proxy radius, volume, enclosed balls, superset tests."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, InputShapeError
from .stats import RngStream

REGION_KINDS = ("l1_ball", "l2_ball", "ellipsoid", "gen_cross_polytope", "empty")
_RTOL = 1e-12  # boundary points count as members despite rounding


@dataclass(frozen=True)
class Region:
    """Origin-centred certified set of perturbations.

    ellipsoid: sum (d_i / theta_i)^2 <= scale^2
    gen_cross_polytope: sum |d_i| / theta_i <= scale
    l2_ball / l1_ball: ||d||_p <= scale (theta is None)
    empty: contains nothing
    """

    kind: str
    scale: float
    dim: int
    theta: np.ndarray | None = None

    def __post_init__(self):
        if self.kind not in REGION_KINDS:
            raise DomainError(f"unknown region kind {self.kind!r}")
        if not (self.scale >= 0.0) or not math.isfinite(self.scale):
            raise DomainError(f"region scale must be finite and >= 0, got {self.scale}")
        if self.kind in ("ellipsoid", "gen_cross_polytope"):
            theta = np.array(self.theta, dtype=np.float64).reshape(-1)
            if theta.shape != (self.dim,) or np.any(theta <= 0.0):
                raise DomainError("anisotropic regions need a positive theta of length dim")
            theta.setflags(write=False)
            object.__setattr__(self, "theta", theta)
        else:
            object.__setattr__(self, "theta", None)

    @classmethod
    def empty(cls, dim: int) -> "Region":
        return cls("empty", 0.0, dim)

    @classmethod
    def ellipsoid(cls, theta, scale: float) -> "Region":
        theta = np.asarray(theta, dtype=np.float64)
        return cls("ellipsoid", float(scale), theta.shape[0], theta)

    @classmethod
    def cross_polytope(cls, theta, scale: float) -> "Region":
        theta = np.asarray(theta, dtype=np.float64)
        return cls("gen_cross_polytope", float(scale), theta.shape[0], theta)

    @classmethod
    def ball(cls, p: int, radius: float, dim: int) -> "Region":
        return cls({1: "l1_ball", 2: "l2_ball"}[p], float(radius), dim)

    @property
    def is_empty(self) -> bool:
        return self.kind == "empty" or self.scale == 0.0

    @property
    def norm(self) -> int:
        """1 for the cross-polytope family, 2 for the ellipsoid family."""
        return 1 if self.kind in ("l1_ball", "gen_cross_polytope") else 2

    def semi_axes(self) -> np.ndarray:
        """Extent of the region along each coordinate axis."""
        if self.kind == "empty":
            return np.zeros(self.dim)
        if self.theta is None:
            return np.full(self.dim, self.scale)
        return self.theta * self.scale


def _check_dim(region: Region, delta) -> np.ndarray:
    delta = np.asarray(delta, dtype=np.float64)
    if delta.shape[-1] != region.dim:
        raise InputShapeError(f"perturbation dimension {delta.shape[-1]} != region dimension {region.dim}")
    return delta


def norm_value(region: Region, delta) -> np.ndarray:
    """The region's defining norm of ``delta`` (last axis), normalised so membership is <= scale."""
    delta = _check_dim(region, delta)
    if region.kind == "ellipsoid":
        return np.sqrt(np.sum((delta / region.theta) ** 2, axis=-1))
    if region.kind == "gen_cross_polytope":
        return np.sum(np.abs(delta) / region.theta, axis=-1)
    if region.kind == "l2_ball":
        return np.sqrt(np.sum(delta * delta, axis=-1))
    if region.kind == "l1_ball":
        return np.sum(np.abs(delta), axis=-1)
    return np.full(delta.shape[:-1], np.inf)


def contains(region: Region, delta):
    """Membership of ``delta`` (or each row of a batch) in the region."""
    delta = _check_dim(region, delta)
    if region.kind == "empty":
        out = np.zeros(delta.shape[:-1], dtype=bool)
    else:
        out = norm_value(region, delta) <= region.scale * (1.0 + _RTOL)
    return bool(out) if np.ndim(out) == 0 else out


def _log_geomean(theta: np.ndarray) -> float:
    return float(np.mean(np.log(theta)))


def proxy_radius(region: Region) -> float:
    """scale * geometric mean of theta; the radius itself for isotropic balls; 0 if empty."""
    if region.is_empty:
        return 0.0
    if region.theta is None:
        return region.scale
    return region.scale * math.exp(_log_geomean(region.theta))


def log_volume(region: Region) -> float:
    """Natural log of the Lebesgue volume; -inf for an empty region."""
    if region.is_empty:
        return -math.inf
    n = region.dim
    log_theta = float(np.sum(np.log(region.theta))) if region.theta is not None else n * 0.0
    if region.norm == 2:
        log_r = math.log(region.scale)
        return n * log_r + 0.5 * n * math.log(math.pi) - math.lgamma(0.5 * n + 1.0) + log_theta
    return n * math.log(2.0 * region.scale) - math.lgamma(n + 1.0) + log_theta


def max_enclosed_ball(region: Region) -> Region:
    """Largest isotropic ball of the same norm inside the region."""
    if region.kind in ("l1_ball", "l2_ball", "empty"):
        return region
    return Region.ball(region.norm, float(np.min(region.theta)) * region.scale, region.dim)


def iso_radius(region: Region) -> float:
    return 0.0 if region.is_empty else max_enclosed_ball(region).scale


class Relation(enum.Enum):
    SUPERSET = "superset"
    NOT_SUPERSET = "not_superset"
    UNDETERMINED = "undetermined"


@dataclass(frozen=True)
class Superiority:
    relation: Relation
    strict: bool = False

    @property
    def is_superset(self) -> bool:
        return self.relation is Relation.SUPERSET


def is_superior(a: Region, b: Region) -> Superiority:
    """Whether ``a`` contains ``b`` (non-strict), with ``strict`` set when a is strictly larger.

    Both regions are origin-centred and axis-aligned. Within one norm family
    (ellipsoid / l2 ball, or cross-polytope / l1 ball) containment holds exactly
    when every semi-axis of ``a`` is at least that of ``b``: the extreme points
    of ``b`` along the axes are its vertices (l1) or its farthest points in the
    a-norm (l2). Comparisons across families are undetermined.
    """
    if a.dim != b.dim:
        raise InputShapeError(f"cannot compare regions of dimension {a.dim} and {b.dim}")
    if b.is_empty:
        return Superiority(Relation.SUPERSET, strict=not a.is_empty)
    if a.is_empty:
        return Superiority(Relation.NOT_SUPERSET)
    if a.norm != b.norm:
        return Superiority(Relation.UNDETERMINED)
    axes_a, axes_b = a.semi_axes(), b.semi_axes()
    if np.all(axes_a >= axes_b):
        return Superiority(Relation.SUPERSET, strict=bool(np.any(axes_a > axes_b)))
    return Superiority(Relation.NOT_SUPERSET)


def cross_polytope_volume_bounds(theta, r: float) -> tuple[float, float]:
    """Log lower/upper volume bounds from the zonotope sandwich.

    (2r/n)^n V(Z) <= V <= (2r)^n V(Z), with V(Z) = prod theta_i for diagonal theta.
    """
    theta = np.asarray(theta, dtype=np.float64).reshape(-1)
    if np.any(theta <= 0.0) or r <= 0.0:
        raise DomainError("theta and r must be positive")
    n = theta.shape[0]
    log_z = float(np.sum(np.log(theta)))
    return n * math.log(2.0 * r / n) + log_z, n * math.log(2.0 * r) + log_z


MC_MAX_DIM = 8


def mc_volume(region: Region, draws: int, rng: RngStream) -> tuple[float, float]:
    """Rejection-sampling volume estimate over the bounding box; returns (estimate, std error)."""
    if region.dim > MC_MAX_DIM:
        raise DomainError(f"mc_volume supports dimension <= {MC_MAX_DIM}, got {region.dim}")
    if region.is_empty:
        return 0.0, 0.0
    half = region.semi_axes()
    box = float(np.prod(2.0 * half))
    hits = 0
    chunk = 200_000
    done = 0
    while done < draws:
        k = min(chunk, draws - done)
        pts = (2.0 * rng.uniform((k, region.dim)) - 1.0) * half
        hits += int(np.count_nonzero(contains(region, pts)))
        done += k
    frac = hits / draws
    return box * frac, box * math.sqrt(frac * (1.0 - frac) / draws)
