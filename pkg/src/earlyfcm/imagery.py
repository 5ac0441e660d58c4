"""Image and file I/O: feature extraction, label-map export, CSV plumbing.

Images (8-bit PNG or PPM) become row-major feature matrices with one row per
pixel and the three color channels scaled into [0, 1].  Cluster assignments
travel the other way as indexed-color PNGs drawn from a fixed eight-color
palette, so a written label image can be decoded back to the exact labels.
Plain CSV files carry arbitrary feature matrices, per-iteration traces, and
calibration points.
"""

from __future__ import annotations

import csv
import hashlib
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
from PIL import Image, UnidentifiedImageError

from .errors import IngestionError, InputError, OutputError, ParseError

__all__ = [
    "PALETTE8",
    "ImageRecord",
    "LabelMap",
    "load_image_features",
    "load_feature_csv",
    "write_feature_csv",
    "write_label_image",
    "read_label_image",
    "write_trace_csv",
    "write_points_csv",
    "fingerprint_corpus",
    "load_corpus_dir",
]

#: Fixed display palette: one RGB color per label, cycled in this order.
PALETTE8: tuple[tuple[int, int, int], ...] = (
    (230, 25, 75),    # red
    (60, 180, 75),    # green
    (255, 225, 25),   # yellow
    (0, 130, 200),    # blue
    (245, 130, 48),   # orange
    (145, 30, 180),   # purple
    (70, 240, 240),   # cyan
    (240, 50, 230),   # magenta
)

#: Pillow modes accepted as 8-bit-per-channel input.
_ACCEPTED_MODES = frozenset({"1", "L", "LA", "P", "PA", "RGB", "RGBA"})


@dataclass(frozen=True)
class ImageRecord:
    """One corpus entry: an identifier plus its per-point feature matrix.

    For images the matrix has ``width * height`` rows in row-major pixel
    order and one column per color channel.  CSV-backed records keep their
    native column count and use ``height == 1``.
    """

    image_id: str
    width: int
    height: int
    features: np.ndarray

    def __post_init__(self) -> None:
        if not self.image_id:
            raise InputError("image_id must be a non-empty string")
        if self.width < 1 or self.height < 1:
            raise InputError(
                f"image dimensions must be positive, got {self.width}x{self.height}"
            )
        feats = np.asarray(self.features, dtype=np.float64)
        if feats.ndim != 2 or feats.shape[0] == 0 or feats.shape[1] == 0:
            raise InputError("features must be a non-empty 2-D matrix")
        if feats.shape[0] != self.width * self.height:
            raise InputError(
                f"expected {self.width * self.height} feature rows for a "
                f"{self.width}x{self.height} image, got {feats.shape[0]}"
            )
        if not np.isfinite(feats).all():
            raise InputError("features must be finite")
        object.__setattr__(self, "features", feats)

    @property
    def n_points(self) -> int:
        return self.features.shape[0]


@dataclass(frozen=True)
class LabelMap:
    """Per-pixel integer labels for one image, with a display palette."""

    width: int
    height: int
    labels: np.ndarray
    palette: tuple[tuple[int, int, int], ...] = field(default=PALETTE8)

    def __post_init__(self) -> None:
        if self.width < 1 or self.height < 1:
            raise InputError(
                f"label map dimensions must be positive, got {self.width}x{self.height}"
            )
        labels = np.asarray(self.labels)
        if not np.issubdtype(labels.dtype, np.integer):
            raise InputError("labels must be integers")
        labels = labels.reshape(-1).astype(np.int32)
        if labels.shape[0] != self.width * self.height:
            raise InputError(
                f"expected {self.width * self.height} labels for a "
                f"{self.width}x{self.height} map, got {labels.shape[0]}"
            )
        if labels.size and labels.min() < 0:
            raise InputError("labels must be non-negative")
        if not self.palette:
            raise InputError("palette must not be empty")
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "palette", tuple(tuple(int(v) for v in c) for c in self.palette))


def load_image_features(path: str | Path) -> ImageRecord:
    """Load an 8-bit PNG or PPM image as a normalized feature matrix.

    Pixels are flattened in row-major order; each channel is divided by 255.
    Alpha channels are dropped and grayscale values are replicated across the
    three columns.
    """
    p = Path(path)
    try:
        with Image.open(p) as im:
            if im.mode not in _ACCEPTED_MODES:
                raise IngestionError(
                    f"cannot load image '{p}': unsupported pixel mode '{im.mode}'"
                    " (expected 8-bit grayscale or RGB)"
                )
            rgb = im.convert("RGB")
            width, height = rgb.size
            raw = np.asarray(rgb, dtype=np.uint8)
    except IngestionError:
        raise
    except (FileNotFoundError, UnidentifiedImageError, OSError, ValueError) as exc:
        raise IngestionError(f"cannot load image '{p}': {exc}") from exc
    features = raw.reshape(height * width, 3).astype(np.float64) / 255.0
    return ImageRecord(image_id=p.stem, width=width, height=height, features=features)


def load_feature_csv(path: str | Path, *, header: bool = False) -> np.ndarray:
    """Load a numeric CSV as a feature matrix, one row per point.

    No normalization is applied.  With ``header=True`` the first line is
    skipped.  Ragged rows, non-numeric cells, and non-finite values raise a
    parse error naming the offending line.
    """
    p = Path(path)
    try:
        text_lines = p.read_text(encoding="utf-8").splitlines()
    except (FileNotFoundError, OSError, UnicodeDecodeError) as exc:
        raise ParseError(f"cannot read '{p}': {exc}") from exc

    rows: list[list[float]] = []
    n_cols: int | None = None
    start = 2 if header else 1
    for line_no, row in enumerate(csv.reader(text_lines), start=1):
        if line_no < start:
            continue
        if n_cols is None:
            if not row:
                raise ParseError(f"{p}: line {line_no}: empty row")
            n_cols = len(row)
        elif len(row) != n_cols:
            raise ParseError(
                f"{p}: line {line_no}: expected {n_cols} fields, found {len(row)}"
            )
        values: list[float] = []
        for cell in row:
            try:
                value = float(cell)
            except ValueError:
                raise ParseError(
                    f"{p}: line {line_no}: non-numeric value {cell.strip()!r}"
                ) from None
            if not np.isfinite(value):
                raise ParseError(
                    f"{p}: line {line_no}: non-finite value {cell.strip()!r}"
                )
            values.append(value)
        rows.append(values)

    if not rows:
        raise ParseError(f"{p}: no data rows")
    return np.array(rows, dtype=np.float64)


def write_feature_csv(features: np.ndarray, path: str | Path) -> None:
    """Write a feature matrix as CSV with full-precision float text.

    Values are rendered with ``repr``, which round-trips every float exactly
    through :func:`load_feature_csv`.
    """
    feats = np.asarray(features, dtype=np.float64)
    if feats.ndim != 2 or feats.shape[0] == 0 or feats.shape[1] == 0:
        raise InputError("features must be a non-empty 2-D matrix")
    lines = [",".join(repr(v) for v in row) for row in feats.tolist()]
    _write_text(path, "\n".join(lines) + "\n")


def write_label_image(labelmap: LabelMap, path: str | Path) -> None:
    """Write a label map as an indexed-color PNG using its palette."""
    max_label = int(labelmap.labels.max())
    if max_label >= len(labelmap.palette):
        raise OutputError(
            f"label {max_label} has no palette entry "
            f"(palette holds {len(labelmap.palette)} colors)"
        )
    grid = labelmap.labels.reshape(labelmap.height, labelmap.width).astype(np.uint8)
    im = Image.fromarray(grid, mode="P")
    flat: list[int] = []
    for color in labelmap.palette:
        flat.extend(color)
    im.putpalette(flat)
    try:
        im.save(Path(path), format="PNG")
    except (OSError, ValueError) as exc:
        raise OutputError(f"cannot write label image '{path}': {exc}") from exc


def read_label_image(
    path: str | Path,
    palette: Sequence[tuple[int, int, int]] = PALETTE8,
) -> LabelMap:
    """Decode a written label image back to labels by palette lookup."""
    p = Path(path)
    try:
        with Image.open(p) as im:
            rgb = im.convert("RGB")
            width, height = rgb.size
            raw = np.asarray(rgb, dtype=np.uint8).reshape(height * width, 3)
    except (FileNotFoundError, UnidentifiedImageError, OSError, ValueError) as exc:
        raise IngestionError(f"cannot load label image '{p}': {exc}") from exc

    lookup = {tuple(int(v) for v in color): i for i, color in enumerate(palette)}
    labels = np.empty(height * width, dtype=np.int32)
    for i, pixel in enumerate(raw.tolist()):
        key = tuple(pixel)
        if key not in lookup:
            raise IngestionError(
                f"cannot decode label image '{p}': pixel {i} has color {key} "
                "not present in the palette"
            )
        labels[i] = lookup[key]
    return LabelMap(
        width=width,
        height=height,
        labels=labels,
        palette=tuple(tuple(int(v) for v in c) for c in palette),
    )


def write_trace_csv(trace, path: str | Path, labels_path: str | Path | None = None) -> Path:
    """Write a clustering trace as CSV plus a sidecar per-iteration label file.

    The main file has header ``iter,objective,elapsed_seconds`` with one row
    per recorded iteration.  The sidecar (default: same name with a
    ``.labels.csv`` suffix) holds one comma-separated row of integer labels
    per iteration.  Returns the sidecar path.
    """
    p = Path(path)
    if labels_path is None:
        sidecar = p.with_name(p.stem + ".labels.csv")
    else:
        sidecar = Path(labels_path)

    lines = ["iter,objective,elapsed_seconds"]
    for i, (obj, elapsed) in enumerate(zip(trace.objectives, trace.iter_times), start=1):
        lines.append(f"{i},{float(obj)!r},{float(elapsed)!r}")
    _write_text(p, "\n".join(lines) + "\n")

    label_lines = [
        ",".join(str(int(v)) for v in np.asarray(labels).reshape(-1).tolist())
        for labels in trace.labels
    ]
    _write_text(sidecar, "\n".join(label_lines) + "\n")
    return sidecar


def write_points_csv(points: Iterable, path: str | Path) -> None:
    """Write calibration points as CSV: image_id,iteration,accuracy,change_rate."""
    lines = ["image_id,iteration,accuracy,change_rate"]
    for pt in points:
        lines.append(
            f"{pt.image_id},{int(pt.iteration)},"
            f"{float(pt.accuracy)!r},{float(pt.change_rate)!r}"
        )
    _write_text(path, "\n".join(lines) + "\n")


def fingerprint_corpus(records: Iterable[ImageRecord]) -> str:
    """Digest a corpus: SHA-256 over sorted (id, content-hash) pairs.

    The content hash covers the feature bytes and shape, so the fingerprint
    is independent of load order and of the on-disk file format.
    """
    outer = hashlib.sha256()
    for rec in sorted(records, key=lambda r: r.image_id):
        inner = hashlib.sha256()
        feats = np.ascontiguousarray(rec.features, dtype=np.float64)
        inner.update(repr(feats.shape).encode("ascii"))
        inner.update(feats.tobytes())
        outer.update(rec.image_id.encode("utf-8"))
        outer.update(b"\x00")
        outer.update(inner.digest())
        outer.update(b"\x00")
    return outer.hexdigest()


def load_corpus_dir(path: str | Path, *, header: bool = False) -> list[ImageRecord]:
    """Load every PNG, PPM, and CSV file in a directory, sorted by id.

    The id is the file stem; two files sharing a stem are rejected.  CSV
    files become single-row-strip records (``height == 1``) with their
    native column count and no normalization.
    """
    dirp = Path(path)
    if not dirp.is_dir():
        raise IngestionError(f"'{dirp}' is not a readable directory")

    files = sorted(
        (f for f in dirp.iterdir() if f.suffix.lower() in {".png", ".ppm", ".csv"}),
        key=lambda f: (f.stem, f.suffix),
    )
    records: list[ImageRecord] = []
    seen: dict[str, Path] = {}
    for f in files:
        if f.stem in seen:
            raise IngestionError(
                f"duplicate corpus id '{f.stem}': {seen[f.stem].name} and {f.name}"
            )
        seen[f.stem] = f
        if f.suffix.lower() == ".csv":
            features = load_feature_csv(f, header=header)
            records.append(
                ImageRecord(
                    image_id=f.stem,
                    width=features.shape[0],
                    height=1,
                    features=features,
                )
            )
        else:
            records.append(load_image_features(f))
    if not records:
        raise IngestionError(f"no loadable inputs in '{dirp}'")
    return records


def _write_text(path: str | Path, text: str) -> None:
    try:
        Path(path).write_text(text, encoding="utf-8")
    except OSError as exc:
        raise OutputError(f"cannot write '{path}': {exc}") from exc
