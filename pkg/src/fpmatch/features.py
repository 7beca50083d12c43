"""Per-minutia feature tuples and identity-tagged templates.

A tuple is ``(mq, rcr[8], dsq[3])``: a quality bit, ridge counts along eight
18-pixel axes ordered from the minutia direction, and the squared distances
to the three nearest minutiae. Distances stay squared so every comparison is
exact integer equality.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .errors import CorruptTemplate, NotEnrollable, TooFewMinutiae
from .minutiae import RING, FalseMinutiaeConfig, Minutia, extract_minutiae
from .preprocess import RoiMask

AXIS_LEN = 18
MIN_GOOD = 10
AXIS_NAMES = ["+X", "X=Y", "+Y", "-X=Y", "-X", "-X=-Y", "-Y", "-Y=X"]


@dataclass(frozen=True)
class MinutiaTuple:
    mq: int
    rcr: tuple
    dsq: tuple

    @property
    def vector(self) -> tuple:
        """The eleven integers compared during matching."""
        return self.rcr + self.dsq

    def as_dict(self) -> dict:
        return {"mq": self.mq, "rcr": list(self.rcr), "dsq": list(self.dsq)}


@dataclass(frozen=True)
class Template:
    subject: int
    finger: int
    impression: int
    crop_row: int
    crop_col: int
    tuples: tuple = ()
    minutiae: tuple = field(default=(), compare=True)

    @property
    def key(self) -> tuple:
        return (self.subject, self.finger, self.impression, self.crop_row, self.crop_col)

    @property
    def enrollable(self) -> bool:
        return len(self.tuples) >= MIN_GOOD

    @property
    def filename(self) -> str:
        return template_filename(*self.key)


def template_filename(subject, finger, impression, row, col) -> str:
    return f"S{subject}_F{finger}_I{impression}_R{row}C{col}.tpl.json"


_NAME_RE = re.compile(r"S(\d+)_F(\d+)_I(\d+)_R(\d+)C(\d+)")


def parse_identity(name: str) -> Optional[tuple]:
    """``(subject, finger, impression, row, col)`` from a partial-print filename."""
    m = _NAME_RE.search(Path(name).name)
    return tuple(int(g) for g in m.groups()) if m else None


def neighbor_distances(ms: Sequence[Minutia], k: int) -> tuple:
    if len(ms) < 4:
        raise TooFewMinutiae(f"need at least 4 minutiae, got {len(ms)}")
    me = ms[k]
    d = sorted(
        ((o.x - me.x) ** 2 + (o.y - me.y) ** 2, o.x, o.y) for i, o in enumerate(ms) if i != k
    )
    return tuple(v[0] for v in d[:3])


def start_axis(theta: int) -> int:
    """Index (into ``AXIS_NAMES``) of the axis that supplies the first ridge count."""
    if not 0 <= theta <= 359:
        raise ValueError(f"theta out of range: {theta}")
    return ((theta + 22) // 45) % 8


def ridge_crossings_raw(skel: np.ndarray, x: int, y: int, roi: Optional[RoiMask] = None) -> list[int]:
    """Ridge counts on the eight axes in fixed ``AXIS_NAMES`` order; -1 when truncated."""
    h, w = skel.shape
    out = []
    for dx, dy in RING:
        vals = []
        for k in range(1, AXIS_LEN + 1):
            px, py = x + k * dx, y + k * dy
            if not (0 <= px < w and 0 <= py < h) or (roi is not None and not roi.mask[py, px]):
                vals = None
                break
            v = skel[py, px] != 0
            if dx and dy:
                # a diagonal step can slip between two pixels of a crossing ridge
                fx, fy = px - dx, py - dy
                v = v or (0 <= fx < w and 0 <= fy < h and skel[py, fx] != 0 and skel[fy, px] != 0)
            vals.append(v)
        if vals is None:
            out.append(-1)
            continue
        i = 0
        while i < len(vals) and vals[i]:
            i += 1
        runs = 0
        prev = False
        for v in vals[i:]:
            if v and not prev:
                runs += 1
            prev = v
        out.append(runs)
    return out


def ridge_crossings(skel: np.ndarray, m: Minutia, roi: Optional[RoiMask] = None) -> tuple:
    raw = ridge_crossings_raw(skel, m.x, m.y, roi)
    s = start_axis(m.theta)
    return tuple(raw[(s + i) % 8] for i in range(8))


def quality(rcr: Sequence[int]) -> int:
    return 1 if sum(abs(v) for v in rcr) - sum(rcr) == 0 else 0


def build_tuple(skel: np.ndarray, ms: Sequence[Minutia], k: int, roi: Optional[RoiMask] = None) -> MinutiaTuple:
    rcr = ridge_crossings(skel, ms[k], roi)
    return MinutiaTuple(quality(rcr), rcr, neighbor_distances(ms, k))


def build_template(skel: np.ndarray, roi: Optional[RoiMask], identity: Sequence[int] = (0, 0, 0, 0, 0),
                   minutiae: Optional[Sequence[Minutia]] = None, trace_len: int = 10,
                   cfg: Optional[FalseMinutiaeConfig] = None, strict: bool = True) -> Template:
    """Template of good-quality tuples for one skeleton.

    ``minutiae`` defaults to the cleaned minutiae of ``skel``. With ``strict``
    a template below the enrolment minimum raises :class:`NotEnrollable`
    (the partially built template is attached as ``exc.template``).
    """
    if minutiae is None:
        minutiae = extract_minutiae(skel, roi, trace_len, cfg)
    ms = list(minutiae)
    tuples = []
    if len(ms) >= 4:
        for k in range(len(ms)):
            t = build_tuple(skel, ms, k, roi)
            if t.mq == 1:
                tuples.append(t)
    tpl = Template(*identity, tuples=tuple(tuples), minutiae=tuple(ms))
    if strict and not tpl.enrollable:
        exc = NotEnrollable(len(tuples), MIN_GOOD)
        exc.template = tpl
        raise exc
    return tpl


# --- persistence ------------------------------------------------------------


def template_to_dict(t: Template) -> dict:
    return {
        "subject": t.subject,
        "finger": t.finger,
        "impression": t.impression,
        "cropRow": t.crop_row,
        "cropCol": t.crop_col,
        "tuples": [u.as_dict() for u in t.tuples],
        "minutiae": [m.as_dict() for m in t.minutiae],
    }


def template_to_json(t: Template) -> str:
    return json.dumps(template_to_dict(t), separators=(",", ":"))


def _int(v, what):
    if type(v) is not int:
        raise CorruptTemplate(f"{what} must be an integer, got {v!r}")
    return v


def template_from_dict(d: dict) -> Template:
    try:
        ident = [_int(d[k], k) for k in ("subject", "finger", "impression", "cropRow", "cropCol")]
        tuples = []
        for i, u in enumerate(d["tuples"]):
            mq = _int(u["mq"], "mq")
            rcr = tuple(_int(v, "rcr") for v in u["rcr"])
            dsq = tuple(_int(v, "dsq") for v in u["dsq"])
            if len(rcr) != 8 or len(dsq) != 3:
                raise CorruptTemplate(f"tuple {i}: expected 8 rcr and 3 dsq values")
            if mq != quality(rcr) or mq != 1:
                raise CorruptTemplate(f"tuple {i}: mq={mq} inconsistent with rcr {list(rcr)}")
            if any(v > 9 for v in rcr) or list(dsq) != sorted(dsq) or dsq[0] < 0:
                raise CorruptTemplate(f"tuple {i}: values out of range")
            tuples.append(MinutiaTuple(mq, rcr, dsq))
        ms = []
        for m in d.get("minutiae", []):
            if m["type"] not in ("ending", "bifurcation"):
                raise CorruptTemplate(f"unknown minutia type {m['type']!r}")
            ms.append(Minutia(_int(m["x"], "x"), _int(m["y"], "y"), _int(m["theta"], "theta"), m["type"]))
    except (KeyError, TypeError) as exc:
        raise CorruptTemplate(f"malformed template: {exc}") from None
    return Template(*ident, tuples=tuple(tuples), minutiae=tuple(ms))


def save_template(t: Template, path) -> None:
    Path(path).write_text(template_to_json(t) + "\n", encoding="utf-8")


def load_template(path) -> Template:
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, ValueError) as exc:
        raise CorruptTemplate(f"{path}: {exc}") from None
    if not isinstance(data, dict):
        raise CorruptTemplate(f"{path}: not a JSON object")
    return template_from_dict(data)
