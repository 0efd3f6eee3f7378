"""Per-sample certification rows and their CSV form."""

from __future__ import annotations

import csv
import hashlib
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

from .errors import ParseError
from .regions import Region
from .smoothing import SmoothingSpec, read_theta_file, write_theta_file

ABSTAIN = -1
REPORT_COLUMNS = ("idx", "label", "predicted", "abstain", "p_lower", "gap",
                  "iso_radius", "proxy_radius", "kind", "time_ms")


def region_for(spec: SmoothingSpec, gap: float) -> Region:
    """Region certified by ``spec`` with scale ``gap`` (empty when gap is 0)."""
    if gap <= 0.0:
        return Region.empty(spec.dim)
    if spec.kind == "uniform":
        return Region.cross_polytope(spec.theta, gap)
    return Region.ellipsoid(spec.theta, gap)


@dataclass
class ReportRow:
    idx: int
    label: int
    predicted: int
    p_lower: float
    gap: float
    iso_radius: float
    proxy_radius: float
    spec: SmoothingSpec
    time_ms: float = 0.0

    @property
    def abstain(self) -> bool:
        return self.predicted == ABSTAIN

    @property
    def correct(self) -> bool:
        return not self.abstain and self.predicted == self.label

    @property
    def kind(self) -> str:
        return self.spec.kind

    @property
    def region(self) -> Region:
        return region_for(self.spec, 0.0 if self.abstain else self.gap)


@dataclass
class CertificationReport:
    rows: list[ReportRow]
    fingerprint: str = ""
    meta: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.rows)

    def __iter__(self):
        return iter(self.rows)


def theta_path_for(path) -> Path:
    path = Path(path)
    return path.with_name(path.stem + ".thetas.csv")


def _fmt(v: float) -> str:
    return repr(float(v))


def write_report(report: CertificationReport, path) -> None:
    """Write the row CSV plus the companion theta file ``<stem>.thetas.csv``."""
    path = Path(path)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(REPORT_COLUMNS)
        for r in report.rows:
            writer.writerow([r.idx, r.label, r.predicted, int(r.abstain), _fmt(r.p_lower),
                             _fmt(r.gap), _fmt(r.iso_radius), _fmt(r.proxy_radius), r.kind,
                             f"{r.time_ms:.3f}"])
    write_theta_file(theta_path_for(path), [r.spec for r in report.rows])


def read_report(path) -> CertificationReport:
    path = Path(path)
    try:
        lines = path.read_text().splitlines()
    except OSError as exc:
        raise ParseError(f"cannot read report: {exc}", path=path) from exc
    if not lines or tuple(lines[0].split(",")) != REPORT_COLUMNS:
        raise ParseError(f"missing header {','.join(REPORT_COLUMNS)}", path=path, line=1)
    specs = read_theta_file(theta_path_for(path))
    body = [l for l in lines[1:] if l.strip()]
    if len(specs) != len(body):
        raise ParseError(f"{len(body)} report rows but {len(specs)} theta rows", path=path)
    rows = []
    for lineno, (rec, spec) in enumerate(zip(csv.reader(body), specs), start=2):
        if len(rec) != len(REPORT_COLUMNS):
            raise ParseError(f"expected {len(REPORT_COLUMNS)} fields", path=path, line=lineno)
        try:
            row = ReportRow(idx=int(rec[0]), label=int(rec[1]), predicted=int(rec[2]),
                            p_lower=float(rec[4]), gap=float(rec[5]), iso_radius=float(rec[6]),
                            proxy_radius=float(rec[7]), spec=spec, time_ms=float(rec[9]))
        except ValueError as exc:
            raise ParseError(f"bad field: {exc}", path=path, line=lineno) from exc
        if rec[8] != spec.kind:
            raise ParseError(f"kind {rec[8]!r} disagrees with theta file", path=path, line=lineno)
        rows.append(row)
    return CertificationReport(rows)


def fingerprint(items: dict) -> str:
    """Stable hash of a flat settings mapping."""
    text = "\n".join(f"{k}={items[k]!r}" for k in sorted(items))
    return hashlib.sha256(text.encode()).hexdigest()[:16]


def rows_match(a: Sequence[ReportRow], b: Sequence[ReportRow]) -> bool:
    return len(a) == len(b) and all(x.idx == y.idx and x.label == y.label for x, y in zip(a, b))
