"""Toy radial dataset plus CSV and IDX loaders."""

from __future__ import annotations

import csv
import struct
from pathlib import Path

import numpy as np

from .errors import DataError, FormatError, ParseError
from .nn_core import Dataset
from .stats import RngStream

INNER_RADIUS = 1.0
ANNULUS = (1.4, 2.4)
IDX_IMAGES_MAGIC = 0x00000803
IDX_LABELS_MAGIC = 0x00000801


def generate_radial_dataset(count: int, noise: float = 0.0, seed: int = 0) -> Dataset:
    """2-D disk-vs-annulus binary task.

    Labels alternate 0, 1, 0, ...; label 0 points are uniform on the open unit
    disk and label 1 points uniform on the annulus 1.4 < |x| < 2.4. Gaussian
    coordinate noise with std ``noise`` is added after labelling.
    """
    if count < 2:
        raise DataError("radial dataset needs count >= 2")
    rng = RngStream(seed, 0)
    labels = np.arange(count) % 2
    u = rng.uniform(count)
    angle = 2.0 * np.pi * rng.uniform(count)
    lo, hi = ANNULUS
    radius = np.where(
        labels == 0,
        INNER_RADIUS * np.sqrt(u),
        np.sqrt(lo * lo + u * (hi * hi - lo * lo)),
    )
    # u is in [0, 1): the disk radius stays < 1; the annulus edge u == 0 is nudged inside
    radius = np.where((labels == 1) & (radius <= lo), np.nextafter(lo, hi), radius)
    pts = np.stack([radius * np.cos(angle), radius * np.sin(angle)], axis=1)
    if noise > 0.0:
        pts = pts + noise * rng.normal(pts.shape)
    return Dataset(pts, labels)


def save_csv(data: Dataset, path) -> None:
    with Path(path).open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        for x, y in zip(data.inputs, data.labels):
            writer.writerow([repr(float(v)) for v in x] + [int(y)])


def load_csv(path) -> Dataset:
    """One sample per line, features first and the integer label last."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ParseError(f"cannot read: {exc}", path=path) from exc
    inputs, labels = [], []
    width = None
    for lineno, row in enumerate(csv.reader(text.splitlines()), start=1):
        if not row or all(not c.strip() for c in row):
            continue
        if width is None:
            width = len(row)
            if width < 2:
                raise ParseError("need at least one feature and a label", path=path, line=lineno)
        elif len(row) != width:
            raise ParseError(f"ragged row: {len(row)} fields, expected {width}", path=path, line=lineno)
        try:
            inputs.append([float(c) for c in row[:-1]])
            label = float(row[-1])
        except ValueError as exc:
            raise ParseError(f"bad number: {exc}", path=path, line=lineno) from exc
        if label != int(label) or label < 0:
            raise ParseError(f"label must be a non-negative integer, got {row[-1]!r}",
                             path=path, line=lineno)
        labels.append(int(label))
    if not labels:
        return Dataset(np.zeros((0, 0)), np.zeros(0, dtype=np.int64))
    return Dataset(np.array(inputs), np.array(labels))


def _read_idx(path: Path, magic: int) -> np.ndarray:
    try:
        raw = path.read_bytes()
    except OSError as exc:
        raise ParseError(f"cannot read: {exc}", path=path) from exc
    if len(raw) < 4:
        raise ParseError("file shorter than the magic number", path=path, offset=0)
    (found,) = struct.unpack(">I", raw[:4])
    if found != magic:
        raise FormatError(f"bad magic 0x{found:08x}, expected 0x{magic:08x}", path=path, offset=0)
    ndim = magic & 0xFF
    header = 4 + 4 * ndim
    if len(raw) < header:
        raise ParseError("truncated dimension header", path=path, offset=len(raw))
    dims = struct.unpack(">" + "I" * ndim, raw[4:header])
    size = int(np.prod(dims))
    if len(raw) != header + size:
        raise ParseError(f"expected {size} data bytes, found {len(raw) - header}",
                         path=path, offset=header)
    return np.frombuffer(raw, dtype=np.uint8, offset=header).reshape(dims)


def load_idx(images_path, labels_path) -> Dataset:
    """MNIST-style IDX pair; pixels are flattened and scaled to [0, 1]."""
    images = _read_idx(Path(images_path), IDX_IMAGES_MAGIC)
    labels = _read_idx(Path(labels_path), IDX_LABELS_MAGIC)
    if images.shape[0] != labels.shape[0]:
        raise DataError(f"{images.shape[0]} images but {labels.shape[0]} labels")
    return Dataset(images.reshape(images.shape[0], -1).astype(np.float64) / 255.0,
                   labels.astype(np.int64))


def write_idx(images: np.ndarray, labels: np.ndarray, images_path, labels_path) -> None:
    """Inverse of ``load_idx`` for uint8 arrays (used to build fixtures)."""
    images = np.asarray(images, dtype=np.uint8)
    labels = np.asarray(labels, dtype=np.uint8)
    Path(images_path).write_bytes(
        struct.pack(">I", IDX_IMAGES_MAGIC) + struct.pack(">III", *images.shape) + images.tobytes())
    Path(labels_path).write_bytes(
        struct.pack(">I", IDX_LABELS_MAGIC) + struct.pack(">I", labels.shape[0]) + labels.tobytes())
