"""Partial-print cropping and the enrolled template store."""

from __future__ import annotations

import json
import logging
import re
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import NamedTuple, Optional

import numpy as np

from .errors import CorruptTemplate, NotEnrollable, SpecTooLarge
from .features import MIN_GOOD, Template, load_template, save_template

logger = logging.getLogger(__name__)

MANIFEST = "manifest.json"


@dataclass(frozen=True)
class CropSpec:
    rows: int = 4
    cols: int = 5
    crop_w: int = 150
    crop_h: int = 150

    def as_dict(self) -> dict:
        return {"rows": self.rows, "cols": self.cols, "cropW": self.crop_w, "cropH": self.crop_h}

    @classmethod
    def from_dict(cls, d: dict) -> "CropSpec":
        return cls(int(d["rows"]), int(d["cols"]), int(d["cropW"]), int(d["cropH"]))


class Crop(NamedTuple):
    row: int
    col: int
    x0: int
    y0: int
    image: np.ndarray


def _stride(extent, size, count):
    if extent < size:
        raise SpecTooLarge(f"crop of {size} px does not fit a source of {extent} px")
    if count == 1:
        return 0
    stride = (extent - size) // (count - 1)
    if stride <= 0:
        raise SpecTooLarge(f"{count} crops of {size} px need a stride > 0 on {extent} px")
    return stride


def grid_layout(width: int, height: int, spec: CropSpec) -> dict:
    """Strides, offsets and actual overlap fractions of the crop grid."""
    sx = _stride(width, spec.crop_w, spec.cols)
    sy = _stride(height, spec.crop_h, spec.rows)
    return {
        "strideX": sx,
        "strideY": sy,
        "offsetsX": [c * sx for c in range(spec.cols)],
        "offsetsY": [r * sy for r in range(spec.rows)],
        "overlapX": (spec.crop_w - sx) / spec.crop_w if spec.cols > 1 else None,
        "overlapY": (spec.crop_h - sy) / spec.crop_h if spec.rows > 1 else None,
    }


def crop_grid(full: np.ndarray, spec: CropSpec = CropSpec()) -> list[Crop]:
    h, w = full.shape
    lay = grid_layout(w, h, spec)
    return [
        Crop(r, c, x0, y0, full[y0 : y0 + spec.crop_h, x0 : x0 + spec.crop_w].copy())
        for r, y0 in enumerate(lay["offsetsY"])
        for c, x0 in enumerate(lay["offsetsX"])
    ]


@dataclass
class GalleryIndex:
    """Templates keyed by ``(subject, finger, impression, crop_row, crop_col)``.

    Built by a single writer through :meth:`enroll`; :meth:`freeze` then
    forbids further changes so the index can be shared read-only.
    """

    subjects: int = 0
    fingers: int = 1
    impressions: int = 1
    partials: int = 20
    crop_spec: CropSpec = field(default_factory=CropSpec)
    source: str = "unknown"
    entries: dict = field(default_factory=dict)
    notes: list = field(default_factory=list, compare=False)
    frozen: bool = field(default=False, compare=False)

    def __len__(self):
        return len(self.entries)

    @property
    def prints_per_subject(self) -> int:
        return self.fingers * self.impressions

    def enroll(self, t: Template) -> "GalleryIndex":
        if self.frozen:
            raise RuntimeError("gallery is frozen")
        if not t.enrollable:
            logger.info("rejected %s: %d good tuples", t.key, len(t.tuples))
            raise NotEnrollable(len(t.tuples), MIN_GOOD)
        if t.key in self.entries:
            logger.warning("replacing duplicate gallery entry %s", t.key)
        self.entries[t.key] = t
        return self

    def freeze(self) -> "GalleryIndex":
        self.frozen = True
        return self

    def keys(self) -> list:
        return sorted(self.entries)

    def templates(self) -> list[Template]:
        return [self.entries[k] for k in self.keys()]

    def subject_ids(self) -> list[int]:
        return sorted({k[0] for k in self.entries})

    def manifest(self) -> dict:
        return {
            "N": self.subjects,
            "J": self.fingers,
            "K": self.impressions,
            "L": self.partials,
            "cropSpec": self.crop_spec.as_dict(),
            "sourceDatasetName": self.source,
            "notes": list(self.notes),
        }


def save_gallery(store: GalleryIndex, directory) -> None:
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    for t in store.templates():
        save_template(t, d / t.filename)
    (d / MANIFEST).write_text(json.dumps(store.manifest(), indent=2) + "\n", encoding="utf-8")


def load_gallery(directory, errors: Optional[list] = None) -> GalleryIndex:
    """Load every ``*.tpl.json`` under ``directory``; corrupt files are skipped.

    Skipped files are logged and, when ``errors`` is given, appended to it as
    ``(path, message)``.
    """
    d = Path(directory)
    store = GalleryIndex()
    manifest = d / MANIFEST
    if manifest.exists():
        m = json.loads(manifest.read_text(encoding="utf-8"))
        store = GalleryIndex(subjects=m["N"], fingers=m["J"], impressions=m["K"], partials=m["L"],
                             crop_spec=CropSpec.from_dict(m["cropSpec"]), source=m["sourceDatasetName"],
                             notes=list(m.get("notes", [])))
    for path in sorted(d.glob("*.tpl.json")):
        try:
            t = load_template(path)
            if t.filename != path.name:
                raise CorruptTemplate(f"identity fields do not match file name {path.name}")
            store.enroll(t)
        except (CorruptTemplate, NotEnrollable) as exc:
            logger.warning("skipping %s: %s", path, exc)
            if errors is not None:
                errors.append((str(path), str(exc)))
    if not manifest.exists() and store.entries:
        keys = store.keys()
        store.subjects = len({k[0] for k in keys})
        store.fingers = len({k[1] for k in keys})
        store.impressions = len({k[2] for k in keys})
        store.partials = len({(k[3], k[4]) for k in keys})
    return store


_FVC_RE = re.compile(r"^(\d+)_(\d+)\.(tif|tiff|png|pgm|bmp)$", re.IGNORECASE)


def iter_fvc_images(directory):
    """``(subject, impression, path)`` for FVC-style ``<finger>_<impression>.<ext>`` files.

    FVC 2002 DB1-A has one finger per subject, so the finger index is the subject.
    """
    found = []
    for p in Path(directory).iterdir():
        m = _FVC_RE.match(p.name)
        if m:
            found.append((int(m.group(1)), int(m.group(2)), p))
    return sorted(found)


def partial_filename(subject, finger, impression, row, col, ext="pgm") -> str:
    return f"S{subject}_F{finger}_I{impression}_R{row}C{col}.{ext}"
