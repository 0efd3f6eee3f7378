"""Certified-accuracy curves, average certified (proxy) radius, superset tables,
sigma/gap factor histograms and witness perturbations."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import DataError, DomainError
from .regions import Relation, contains, is_superior, iso_radius
from .report import CertificationReport, ReportRow, rows_match


def _radius(row: ReportRow, use_proxy: bool) -> float:
    return row.proxy_radius if use_proxy else row.iso_radius


def certified_accuracy_curve(report: CertificationReport, radii: Sequence[float],
                             use_proxy: bool = False) -> list[tuple[float, float]]:
    """Fraction of rows that are correct, not abstained, and certified to at least R."""
    radii = [float(r) for r in radii]
    if any(b < a for a, b in zip(radii, radii[1:])):
        raise DomainError("radii must be sorted ascending")
    total = len(report.rows)
    if total == 0:
        raise DataError("certified accuracy of an empty report is undefined")
    got = np.array([_radius(r, use_proxy) for r in report.rows if r.correct])
    return [(R, int(np.count_nonzero(got >= R)) / total) for R in radii]


def acr(report: CertificationReport, use_proxy: bool = False) -> float:
    """Average certified radius; with ``use_proxy`` the average certified proxy radius."""
    if len(report.rows) == 0:
        raise DataError("average certified radius of an empty report is undefined")
    return float(sum(_radius(r, use_proxy) for r in report.rows if r.correct) / len(report.rows))


@dataclass(frozen=True)
class SupersetTable:
    """Percentages of rows where report a certifies at least what report b certifies."""

    radius: float
    region: float
    undetermined: int
    rows: int

    def as_dict(self) -> dict:
        return {"radius_pct": self.radius, "region_pct": self.region,
                "undetermined": self.undetermined, "rows": self.rows}


def superset_stats(report_a: CertificationReport, report_b: CertificationReport) -> SupersetTable:
    """Per-row comparison of a against b.

    An abstaining row certifies the empty set, which every region contains. Rows
    whose two non-abstain predictions differ certify different statements and
    count as not superset. ``radius`` compares the largest enclosed isotropic
    balls; ``region`` compares the full certified sets. Cross-family region
    comparisons are tallied as undetermined and count against a.
    """
    if not rows_match(report_a.rows, report_b.rows):
        raise DataError("superset_stats needs reports over the same rows in the same order")
    n = len(report_a.rows)
    if n == 0:
        raise DataError("superset_stats of empty reports is undefined")
    by_radius = by_region = undetermined = 0
    for ra, rb in zip(report_a.rows, report_b.rows):
        if not ra.abstain and not rb.abstain and ra.predicted != rb.predicted:
            continue
        reg_a, reg_b = ra.region, rb.region
        by_radius += iso_radius(reg_a) >= iso_radius(reg_b) or reg_b.is_empty
        sup = is_superior(reg_a, reg_b)
        if sup.relation is Relation.UNDETERMINED:
            undetermined += 1
        by_region += sup.is_superset
    return SupersetTable(100.0 * by_radius / n, 100.0 * by_region / n, undetermined, n)


@dataclass(frozen=True)
class FactorHistograms:
    """Paired per-sample sigma and gap columns with fixed-width histograms."""

    idx: np.ndarray
    sigma_iso: np.ndarray
    sigma_min: np.ndarray
    gap_iso: np.ndarray
    gap_ancer: np.ndarray
    sigma_edges: np.ndarray
    sigma_counts: tuple[np.ndarray, np.ndarray]
    gap_edges: np.ndarray
    gap_counts: tuple[np.ndarray, np.ndarray]

    @property
    def medians(self) -> dict:
        def med(v):
            return float(np.median(v)) if v.size else float("nan")
        return {"sigma_iso": med(self.sigma_iso), "sigma_min": med(self.sigma_min),
                "gap_iso": med(self.gap_iso), "gap_ancer": med(self.gap_ancer)}


def _edges(a: np.ndarray, b: np.ndarray, bins: int) -> np.ndarray:
    both = np.concatenate([a, b])
    if both.size == 0:
        return np.linspace(0.0, 1.0, bins + 1)
    lo, hi = float(both.min()), float(both.max())
    if hi <= lo:
        hi = lo + 1.0
    return np.linspace(lo, hi, bins + 1)


def factor_histograms(report_iso: CertificationReport, report_ancer: CertificationReport,
                      bins: int = 20) -> FactorHistograms:
    """Split the radius change into a sigma factor (theta-bar vs min_i theta_i) and a gap factor.

    Only rows where neither report abstains contribute.
    """
    if not rows_match(report_iso.rows, report_ancer.rows):
        raise DataError("factor_histograms needs matched rows")
    if bins < 1:
        raise DomainError("bins must be >= 1")
    keep = [(a, b) for a, b in zip(report_iso.rows, report_ancer.rows) if not a.abstain and not b.abstain]
    idx = np.array([a.idx for a, _ in keep], dtype=np.int64)
    s_iso = np.array([float(np.min(a.spec.theta)) for a, _ in keep])
    s_min = np.array([float(np.min(b.spec.theta)) for _, b in keep])
    g_iso = np.array([a.gap for a, _ in keep])
    g_anc = np.array([b.gap for _, b in keep])
    se, ge = _edges(s_iso, s_min, bins), _edges(g_iso, g_anc, bins)
    hist = lambda v, e: np.histogram(v, bins=e)[0]  # noqa: E731
    return FactorHistograms(idx, s_iso, s_min, g_iso, g_anc,
                            se, (hist(s_iso, se), hist(s_min, se)),
                            ge, (hist(g_iso, ge), hist(g_anc, ge)))


def write_factor_csvs(h: FactorHistograms, pairs_path, hist_path) -> None:
    """Paired columns in one file; both histograms (bin edges and counts) in another."""
    with Path(pairs_path).open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["idx", "sigma_iso", "sigma_min", "gap_iso", "gap_ancer"])
        for row in zip(h.idx, h.sigma_iso, h.sigma_min, h.gap_iso, h.gap_ancer):
            w.writerow([int(row[0])] + [repr(float(v)) for v in row[1:]])
    with Path(hist_path).open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["factor", "bin_lo", "bin_hi", "count_iso", "count_ancer"])
        for name, edges, (ca, cb) in (("sigma", h.sigma_edges, h.sigma_counts),
                                      ("gap", h.gap_edges, h.gap_counts)):
            for i in range(len(ca)):
                w.writerow([name, repr(float(edges[i])), repr(float(edges[i + 1])), int(ca[i]), int(cb[i])])


def find_witness_delta(cert_aniso, cert_iso) -> np.ndarray | None:
    """A perturbation covered by the anisotropic certificate but outside the isotropic one.

    Takes the longest anisotropic semi-axis j and returns 0.99 * r * theta_j * e_j
    when that point clears the isotropic radius. Both memberships are checked.
    """
    if getattr(cert_aniso, "abstain", False) or getattr(cert_iso, "abstain", False):
        raise DomainError("witness search needs two non-abstain certificates")
    aniso, iso = cert_aniso.region, cert_iso.region
    if aniso.is_empty or aniso.dim != iso.dim:
        return None
    axes = aniso.semi_axes()
    j = int(np.argmax(axes))
    rho = iso_radius(iso)
    if not axes[j] > rho:
        return None
    delta = np.zeros(aniso.dim)
    delta[j] = 0.99 * axes[j]
    if contains(aniso, delta) and not contains(iso, delta):
        return delta
    return None
