"""Monte Carlo certification for ellipsoid, generalized cross-polytope and mixture certificates."""

from __future__ import annotations

import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import DataError, DomainError, SpecKindError
from .nn_core import Classifier, Dataset, forward_batch, predict_batch
from .regions import Region, iso_radius, proxy_radius
from .report import ABSTAIN, CertificationReport, ReportRow, fingerprint, region_for
from .smoothing import SmoothingSpec, sample_perturbed
from .stats import SQRT2PI, RngStream, clopper_pearson_lower, std_normal_icdf, stream_id

PHASE_CERTIFY = 3
BATCH = 2_000  # cache-sized chunks; part of the noise layout, so fixed


@dataclass(frozen=True)
class CertifyConfig:
    n0: int = 100
    n: int = 100_000
    alpha: float = 0.001
    seed: int = 0
    batch: int = BATCH
    workers: int = 1
    record_time: bool = True


@dataclass(frozen=True)
class Certificate:
    predicted_class: int
    p_lower: float
    gap: float
    region: Region
    spec: SmoothingSpec
    selection_counts: np.ndarray = field(repr=False)
    top_count: int = 0

    @property
    def abstain(self) -> bool:
        return self.predicted_class == ABSTAIN


def predict_counts(model: Classifier, x, spec: SmoothingSpec, m: int, rng: RngStream,
                   batch: int = BATCH) -> np.ndarray:
    """Per-class counts of the base classifier's hard decision over m noisy copies of x."""
    if m < 1:
        raise DomainError(f"draw count must be >= 1, got {m}")
    counts = np.zeros(model.num_classes, dtype=np.int64)
    left = int(m)
    while left > 0:
        k = min(batch, left)
        _, xp = sample_perturbed(spec, x, rng, k)
        counts += np.bincount(predict_batch(model, xp), minlength=model.num_classes)
        left -= k
    return counts


def ellipsoid_gap(p_lower: float) -> float:
    # (Phi^-1(p) - Phi^-1(1 - p)) / 2 == Phi^-1(p) by symmetry of Phi
    return std_normal_icdf(p_lower)


def cross_polytope_gap(p_lower: float) -> float:
    return p_lower - (1.0 - p_lower)


def gmm_gap(p_lower: float) -> float:
    return (p_lower - (1.0 - p_lower)) / SQRT2PI


_GAPS = {"gaussian": ellipsoid_gap, "uniform": cross_polytope_gap, "gmm": gmm_gap}


def certificate_from_bound(spec: SmoothingSpec, predicted: int, p_lower: float,
                           selection_counts=None, top_count: int = 0) -> Certificate:
    """Assemble a certificate from a top-class lower bound; abstains when p_lower <= 1/2."""
    if selection_counts is None:
        selection_counts = np.zeros(0, dtype=np.int64)
    if p_lower <= 0.5:
        return Certificate(ABSTAIN, p_lower, 0.0, Region.empty(spec.dim), spec,
                           selection_counts, top_count)
    gap = _GAPS[spec.kind](p_lower)
    return Certificate(int(predicted), p_lower, gap, region_for(spec, gap), spec,
                       selection_counts, top_count)


def _certify(model, x, spec, n0, n, alpha, rng, batch=BATCH) -> Certificate:
    selection = predict_counts(model, x, spec, n0, rng, batch)
    top = int(np.argmax(selection))
    estimate = predict_counts(model, x, spec, n, rng, batch)
    k = int(estimate[top])
    p_lower = clopper_pearson_lower(k, n, alpha)
    return certificate_from_bound(spec, top, p_lower, selection, k)


def _require(spec: SmoothingSpec, kind: str):
    if spec.kind != kind:
        raise SpecKindError(f"expected {kind} smoothing, got {spec.kind}")


def certify_ellipsoid(model, x, spec, n0=100, n=100_000, alpha=0.001, rng=None, batch=BATCH):
    """Certify {d : ||d||_{Sigma,2} <= Phi^-1(p_lower)} under N(0, diag(theta^2))."""
    _require(spec, "gaussian")
    return _certify(model, x, spec, n0, n, alpha, rng or RngStream(0), batch)


def certify_cross_polytope(model, x, spec, n0=100, n=100_000, alpha=0.001, rng=None, batch=BATCH):
    """Certify {d : ||d / theta||_1 <= 2 p_lower - 1} under x + theta * U[-1, 1]^n."""
    _require(spec, "uniform")
    return _certify(model, x, spec, n0, n, alpha, rng or RngStream(0), batch)


def certify_gmm(model, x, spec, n0=100, n=100_000, alpha=0.001, rng=None, batch=BATCH):
    """Certify {d : ||d||_{B,2} <= (2 p_lower - 1) / sqrt(2 pi)} under a Gaussian mixture."""
    _require(spec, "gmm")
    return _certify(model, x, spec, n0, n, alpha, rng or RngStream(0), batch)


_CERTIFIERS = {"gaussian": certify_ellipsoid, "uniform": certify_cross_polytope, "gmm": certify_gmm}


def certify(model, x, spec, n0=100, n=100_000, alpha=0.001, rng=None, batch=BATCH) -> Certificate:
    return _CERTIFIERS[spec.kind](model, x, spec, n0, n, alpha, rng, batch)


def _certify_row(args) -> ReportRow:
    model, x, label, idx, spec, cfg = args
    rng = RngStream(cfg.seed, stream_id(idx, PHASE_CERTIFY))
    start = time.perf_counter()
    cert = certify(model, x, spec, cfg.n0, cfg.n, cfg.alpha, rng, cfg.batch)
    elapsed = (time.perf_counter() - start) * 1e3 if cfg.record_time else 0.0
    return ReportRow(idx=idx, label=int(label), predicted=cert.predicted_class,
                     p_lower=cert.p_lower, gap=cert.gap, iso_radius=iso_radius(cert.region),
                     proxy_radius=proxy_radius(cert.region), spec=spec, time_ms=elapsed)


def certify_dataset(model: Classifier, data: Dataset, specs: Sequence[SmoothingSpec],
                    cfg: CertifyConfig = CertifyConfig()) -> CertificationReport:
    """One certification row per sample; sample i always uses stream id derived from i."""
    if len(specs) != len(data):
        raise DataError(f"{len(specs)} smoothing specs for {len(data)} samples")
    jobs = [(model, data.inputs[i], data.labels[i], i, specs[i], cfg) for i in range(len(data))]
    if cfg.workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            rows = list(pool.map(_certify_row, jobs, chunksize=max(1, len(jobs) // (4 * cfg.workers))))
    else:
        rows = [_certify_row(j) for j in jobs]
    settings = {"n0": cfg.n0, "n": cfg.n, "alpha": cfg.alpha, "seed": cfg.seed}
    return CertificationReport(rows, fingerprint(settings), dict(settings))


def isotropic_radius_formula(kind: str, sigma: float, p_lower: float) -> float:
    """Prior-work isotropic radius: sigma Phi^-1(p) (Gaussian) or lambda (2p - 1) (uniform)."""
    if kind == "gaussian":
        return sigma * std_normal_icdf(p_lower)
    if kind == "uniform":
        return sigma * (2.0 * p_lower - 1.0)
    raise SpecKindError(kind)


def smoothed_scores(model: Classifier, x, spec: SmoothingSpec, m: int, rng: RngStream,
                    hard: bool = True, batch: int = BATCH) -> np.ndarray:
    """Monte Carlo estimate of the smoothed class scores (hard votes or mean softmax)."""
    if hard:
        return predict_counts(model, x, spec, m, rng, batch) / float(m)
    total = np.zeros(model.num_classes)
    left = int(m)
    while left > 0:
        k = min(batch, left)
        _, xp = sample_perturbed(spec, x, rng, k)
        total += forward_batch(model, xp).sum(axis=0)
        left -= k
    return total / float(m)


__all__ = [
    "ABSTAIN", "Certificate", "CertifyConfig", "certificate_from_bound", "certify",
    "certify_cross_polytope", "certify_dataset", "certify_ellipsoid", "certify_gmm",
    "cross_polytope_gap", "ellipsoid_gap", "gmm_gap", "isotropic_radius_formula",
    "predict_counts", "smoothed_scores",
]
