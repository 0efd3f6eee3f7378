"""Smoothing distributions (diagonal Gaussian, diagonal uniform, zero-mean Gaussian mixture)."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import DomainError, ParseError
from .stats import RngStream

KINDS = ("gaussian", "uniform", "gmm")


def _positive_vector(values, what="theta") -> np.ndarray:
    arr = np.array(values, dtype=np.float64).reshape(-1)
    if arr.size == 0:
        raise DomainError(f"{what} must be non-empty")
    if not np.all(np.isfinite(arr)) or np.any(arr <= 0.0):
        raise DomainError(f"{what} entries must be finite and strictly positive")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class GmmComponent:
    weight: float
    theta: np.ndarray  # per-axis standard deviations

    def __post_init__(self):
        if not (0.0 < self.weight <= 1.0):
            raise DomainError(f"mixture weight must lie in (0, 1], got {self.weight}")
        object.__setattr__(self, "theta", _positive_vector(self.theta, "component theta"))


@dataclass(frozen=True)
class SmoothingSpec:
    """Smoothing distribution with a diagonal scale vector.

    gaussian: eps ~ N(0, diag(theta^2)); uniform: eps = theta * U[-1, 1]^n;
    gmm: sum_k w_k N(0, diag(theta_k^2)). For gmm, ``theta`` holds the square
    root of the diagonal of the effective matrix B (see ``gmm_effective_matrix``).
    """

    kind: str
    theta: np.ndarray
    components: tuple[GmmComponent, ...] = ()

    def __post_init__(self):
        if self.kind not in KINDS:
            raise DomainError(f"unknown smoothing kind {self.kind!r}")
        object.__setattr__(self, "theta", _positive_vector(self.theta))
        comps = tuple(self.components)
        if self.kind == "gmm":
            if not comps:
                raise DomainError("gmm smoothing needs at least one component")
            total = sum(c.weight for c in comps)
            if abs(total - 1.0) > 1e-12:
                raise DomainError(f"mixture weights sum to {total!r}, not 1")
            if any(c.theta.shape != self.theta.shape for c in comps):
                raise DomainError("component dimensions disagree")
        elif comps:
            raise DomainError(f"{self.kind} smoothing takes no mixture components")
        object.__setattr__(self, "components", comps)

    @property
    def dim(self) -> int:
        return self.theta.shape[0]

    @classmethod
    def gaussian(cls, theta) -> "SmoothingSpec":
        return cls("gaussian", theta)

    @classmethod
    def uniform(cls, theta) -> "SmoothingSpec":
        return cls("uniform", theta)

    @classmethod
    def gmm(cls, components: Sequence[tuple[float, Sequence[float]] | GmmComponent]) -> "SmoothingSpec":
        comps = tuple(c if isinstance(c, GmmComponent) else GmmComponent(float(c[0]), c[1])
                      for c in components)
        if not comps:
            raise DomainError("gmm smoothing needs at least one component")
        return cls("gmm", np.sqrt(gmm_effective_matrix(comps)), comps)

    @classmethod
    def isotropic(cls, kind: str, sigma: float, dim: int) -> "SmoothingSpec":
        return cls(kind, np.full(dim, float(sigma)))

    def with_theta(self, theta) -> "SmoothingSpec":
        return SmoothingSpec(self.kind, theta)

    def __eq__(self, other):
        if not isinstance(other, SmoothingSpec):
            return NotImplemented
        return (self.kind == other.kind and np.array_equal(self.theta, other.theta)
                and len(self.components) == len(other.components)
                and all(a.weight == b.weight and np.array_equal(a.theta, b.theta)
                        for a, b in zip(self.components, other.components)))

    __hash__ = None


def gmm_effective_matrix(components) -> np.ndarray:
    """Diagonal of B where B^{-1} = sum_k w_k diag(theta_k)^{-2}."""
    comps = [c if isinstance(c, GmmComponent) else GmmComponent(float(c[0]), c[1])
             for c in components]
    if not comps:
        raise DomainError("empty component list")
    inv = np.zeros_like(comps[0].theta)
    for c in comps:
        inv = inv + c.weight / (c.theta * c.theta)
    return 1.0 / inv


def draw_noise(spec: SmoothingSpec, rng: RngStream, m: int) -> np.ndarray:
    """Parameter-free noise ``eps`` for m draws, shape (m, n); gaussian or uniform only."""
    if spec.kind == "gaussian":
        return rng.normal((m, spec.dim))
    if spec.kind == "uniform":
        return 2.0 * rng.uniform((m, spec.dim)) - 1.0
    raise DomainError("mixtures have no single reparameterization vector")


def sample_perturbed(spec: SmoothingSpec, x, rng: RngStream, m: int | None = None):
    """Draw perturbed copies of ``x``.

    Returns ``(eps_raw, x_perturbed)`` with x_perturbed = x + theta * eps_raw for
    the gaussian and uniform kinds. For gmm, eps_raw is the standard-normal draw
    and x_perturbed = x + theta_k * eps_raw with k the sampled component.
    With ``m`` given, both arrays have shape (m, n); otherwise shape (n,).
    """
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (spec.dim,):
        raise DomainError(f"x has shape {x.shape}, smoothing dimension is {spec.dim}")
    count = 1 if m is None else int(m)
    if spec.kind == "gmm":
        which = rng.choice([c.weight for c in spec.components], count)
        eps = rng.normal((count, spec.dim))
        scales = np.stack([c.theta for c in spec.components])[which]
        xp = x + scales * eps
    else:
        eps = draw_noise(spec, rng, count)
        xp = x + spec.theta * eps
    if m is None:
        return eps[0], xp[0]
    return eps, xp


# -- serialization -----------------------------------------------------------

def write_theta_file(path, specs: Sequence[SmoothingSpec]) -> None:
    """One CSV row per sample: ``kind,theta_0,...,theta_{n-1}``.

    Mixture specs additionally go to ``<path>.gmm``.
    """
    path = Path(path)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        for spec in specs:
            writer.writerow([spec.kind] + [repr(float(v)) for v in spec.theta])
    gmm_rows = [(i, s) for i, s in enumerate(specs) if s.kind == "gmm"]
    sidecar = Path(str(path) + ".gmm")
    if gmm_rows:
        lines = []
        for i, spec in gmm_rows:
            lines.append(f"# sample {i} components {len(spec.components)}")
            for c in spec.components:
                lines.append(" ".join([repr(float(c.weight))] + [repr(float(v)) for v in c.theta]))
        sidecar.write_text("\n".join(lines) + "\n")
    elif sidecar.exists():
        sidecar.unlink()


def _read_gmm_sidecar(path: Path) -> dict[int, list[GmmComponent]]:
    out: dict[int, list[GmmComponent]] = {}
    current = None
    for lineno, line in enumerate(path.read_text().splitlines(), start=1):
        if not line.strip():
            continue
        if line.startswith("#"):
            parts = line[1:].split()
            if len(parts) != 4 or parts[0] != "sample" or parts[2] != "components":
                raise ParseError("bad block header", path=path, line=lineno)
            current = int(parts[1])
            out[current] = []
            continue
        if current is None:
            raise ParseError("component line before any sample header", path=path, line=lineno)
        try:
            vals = [float(v) for v in line.split()]
            out[current].append(GmmComponent(vals[0], vals[1:]))
        except (ValueError, IndexError, DomainError) as exc:
            raise ParseError(f"bad component: {exc}", path=path, line=lineno) from exc
    return out


def read_theta_file(path) -> list[SmoothingSpec]:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ParseError(f"cannot read theta file: {exc}", path=path) from exc
    sidecar = Path(str(path) + ".gmm")
    mixtures = _read_gmm_sidecar(sidecar) if sidecar.exists() else {}
    specs = []
    for lineno, row in enumerate(csv.reader(text.splitlines()), start=1):
        if not row:
            continue
        kind = row[0].strip()
        try:
            if kind == "gmm":
                if len(specs) not in mixtures:
                    raise ParseError("gmm row without sidecar components", path=path, line=lineno)
                specs.append(SmoothingSpec.gmm(mixtures[len(specs)]))
            else:
                specs.append(SmoothingSpec(kind, [float(v) for v in row[1:]]))
        except (ValueError, DomainError) as exc:
            if isinstance(exc, ParseError):
                raise
            raise ParseError(str(exc), path=path, line=lineno) from exc
    return specs
