"""Crossing-number minutiae detection, orientation tracing and false-minutiae removal.

Coordinates follow image convention: ``x`` is the column, ``y`` the row
(growing downwards). Angles are ``atan2(dy, dx)`` in that frame, in integer
degrees ``[0, 359]``.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, replace
from typing import Iterable, Optional

import numpy as np
from scipy import ndimage

from .errors import OutOfBounds, TruncatedRidge
from .preprocess import RoiMask

ENDING = "ending"
BIFURCATION = "bifurcation"

# 8-neighbourhood as (dx, dy), counter-clockwise in the angle frame, starting at +x.
RING = [(1, 0), (1, 1), (0, 1), (-1, 1), (-1, 0), (-1, -1), (0, -1), (1, -1)]


@dataclass(frozen=True)
class Minutia:
    x: int
    y: int
    theta: int
    mtype: str

    def as_dict(self) -> dict:
        return {"x": self.x, "y": self.y, "theta": self.theta, "type": self.mtype}


@dataclass
class FalseMinutiaeConfig:
    edge_dist: int = 8
    break_dist: int = 6
    break_angle: int = 30
    spur_len: int = 9
    bridge_len: int = 9
    bridge_angle: int = 70
    hole_len: int = 16


def crossing_number(skel: np.ndarray, x: int, y: int) -> int:
    h, w = skel.shape
    if not (1 <= x < w - 1 and 1 <= y < h - 1):
        raise OutOfBounds(f"pixel ({x}, {y}) has neighbours outside a {w}x{h} raster")
    p = [int(skel[y + dy, x + dx]) for dx, dy in RING]
    return sum(abs(p[i] - p[(i + 1) % 8]) for i in range(8)) // 2


def crossing_number_map(skel: np.ndarray) -> np.ndarray:
    """CN of every pixel; border pixels (missing neighbours) get -1."""
    s = (np.asarray(skel) > 0).astype(np.int16)
    h, w = s.shape
    total = np.zeros((h - 2, w - 2), dtype=np.int16) if h > 2 and w > 2 else np.zeros((0, 0), np.int16)
    if total.size:
        views = [s[1 + dy : h - 1 + dy, 1 + dx : w - 1 + dx] for dx, dy in RING]
        for i in range(8):
            total += np.abs(views[i] - views[(i + 1) % 8])
    out = np.full((h, w), -1, dtype=np.int16)
    out[1 : h - 1, 1 : w - 1] = total // 2
    return out


def detect_minutiae(skel: np.ndarray, roi: Optional[RoiMask] = None) -> list[Minutia]:
    """Every interior ridge pixel inside the ROI with CN 1 or 3, in row-major order.

    ``theta`` is left at 0; see :func:`estimate_theta`.
    """
    cn = crossing_number_map(skel)
    cand = (np.asarray(skel) > 0) & ((cn == 1) | (cn == 3))
    if roi is not None:
        cand &= roi.mask
    ys, xs = np.nonzero(cand)
    return [Minutia(int(x), int(y), 0, ENDING if cn[y, x] == 1 else BIFURCATION) for y, x in zip(ys, xs)]


def _ridge(skel, x, y) -> bool:
    h, w = skel.shape
    return 0 <= x < w and 0 <= y < h and skel[y, x] != 0


def _neighbours(skel, x, y):
    return [(x + dx, y + dy) for dx, dy in RING if _ridge(skel, x + dx, y + dy)]


def _trace(skel, start, visited, steps):
    """Follow a ridge from ``start`` for up to ``steps`` moves; stops at junctions.

    Returns ``(end_pixel, moves)``. Four-connected moves are preferred so the
    walk does not cut staircase corners.
    """
    visited = set(visited)
    visited.add(start)
    cur = start
    moves = 0
    while moves < steps:
        cands = [n for n in _neighbours(skel, *cur) if n not in visited]
        four = [n for n in cands if n[0] == cur[0] or n[1] == cur[1]]
        if len(four) == 1 and all(max(abs(n[0] - four[0][0]), abs(n[1] - four[0][1])) <= 1 for n in cands):
            nxt = four[0]
        elif not four and len(cands) == 1:
            nxt = cands[0]
        else:
            break
        visited.add(nxt)
        cur = nxt
        moves += 1
    return cur, moves


def _angle(dx, dy) -> float:
    return math.degrees(math.atan2(dy, dx)) % 360.0


def _round_deg(a: float) -> int:
    return int(math.floor(a + 0.5)) % 360


def _ang_dist(a: float, b: float) -> float:
    d = abs(a - b) % 360.0
    return min(d, 360.0 - d)


def _branch_starts(skel, x, y):
    """``(start_pixel, run_pixels)`` for each run of ridge pixels around (x, y)."""
    vals = [_ridge(skel, x + dx, y + dy) for dx, dy in RING]
    if all(vals):
        return []
    first = vals.index(False)
    runs, cur = [], []
    for i in range(first + 1, first + 9):
        k = i % 8
        if vals[k]:
            cur.append(k)
        elif cur:
            runs.append(cur)
            cur = []
    if cur:
        runs.append(cur)
    starts = []
    for run in runs:
        if len(run) % 2:
            k = run[len(run) // 2]
        else:
            mid = run[len(run) // 2 - 1 : len(run) // 2 + 1]
            k = mid[0] if mid[0] % 2 == 0 else mid[1]
        starts.append(((x + RING[k][0], y + RING[k][1]), {(x + RING[j][0], y + RING[j][1]) for j in run}))
    return starts


def estimate_theta(skel: np.ndarray, m: Minutia, trace_len: int = 10) -> int:
    """Orientation of a minutia by tracing the skeleton.

    Endings point from the end pixel into the ridge body. Bifurcations point
    along the branch that is angularly farthest from the other two.
    """
    if trace_len < 3:
        raise ValueError("trace_len must be >= 3")
    origin = (m.x, m.y)
    if m.mtype == ENDING:
        end, moves = _trace(skel, origin, (), trace_len)
        if moves < 3:
            raise TruncatedRidge(f"ending at {origin} traces only {moves} steps")
        return _round_deg(_angle(end[0] - m.x, end[1] - m.y))

    starts = _branch_starts(skel, m.x, m.y)
    if len(starts) != 3:
        raise TruncatedRidge(f"bifurcation at {origin} has {len(starts)} branches")
    angles = []
    for i, (s, _) in enumerate(starts):
        others = set().union(*(run for j, (_, run) in enumerate(starts) if j != i))
        end, moves = _trace(skel, s, others | {origin}, trace_len - 1)
        if moves + 1 < 3:
            raise TruncatedRidge(f"bifurcation branch at {s} traces only {moves + 1} steps")
        angles.append(_angle(end[0] - m.x, end[1] - m.y))
    spread = [round(sum(_ang_dist(a, b) for b in angles), 9) for a in angles]
    best = max(spread)
    tied = [i for i in range(3) if spread[i] == best]
    if len(tied) == 2:
        # pick the tied branch met first turning counter-clockwise from the odd one out
        (other,) = set(range(3)) - set(tied)
        pick = min(tied, key=lambda i: round((angles[i] - angles[other]) % 360.0, 9))
    else:
        pick = tied[0]
    return _round_deg(angles[pick])


def orient_minutiae(skel: np.ndarray, ms: Iterable[Minutia], trace_len: int = 10) -> list[Minutia]:
    """Attach theta to each minutia, dropping those whose ridge is too short to trace."""
    out = []
    for m in ms:
        try:
            out.append(replace(m, theta=estimate_theta(skel, m, trace_len)))
        except TruncatedRidge:
            continue
    return out


# --- false minutiae -------------------------------------------------------


def _geodesic(skel, junction, src, limit):
    """BFS distances along the skeleton from ``src``; junction pixels are reached but not crossed."""
    dist = {src: 0}
    queue = deque([src])
    while queue:
        p = queue.popleft()
        d = dist[p]
        if d == limit or (p != src and junction[p[1], p[0]]):
            continue
        for n in _neighbours(skel, *p):
            if n not in dist:
                dist[n] = d + 1
                queue.append(n)
    return dist


def _axial(a: float) -> float:
    return a % 180.0


def _axial_dist(a: float, b: float) -> float:
    d = abs(_axial(a) - _axial(b))
    return min(d, 180.0 - d)


def remove_false_minutiae(skel: np.ndarray, ms: list[Minutia], cfg: Optional[FalseMinutiaeConfig] = None,
                          roi: Optional[RoiMask] = None) -> list[Minutia]:
    """Filter boundary, broken-ridge, short-ridge, bridge, hole and triangle artifacts.

    Stages run in that fixed order, each on the survivors of the previous
    one. Every rule removes a pair (or triple) only when all its members are
    still present, so running the filter twice changes nothing.
    """
    cfg = cfg or FalseMinutiaeConfig()
    skel = (np.asarray(skel) > 0).astype(np.uint8)
    h, w = skel.shape
    cn = crossing_number_map(skel)
    junction = (cn >= 3) & (skel > 0)
    alive = list(ms)

    # (a) boundary: raster-edge and ROI-edge artifacts (endings and forks alike)
    if roi is not None and not roi.mask.all():
        roi_dist = ndimage.distance_transform_edt(roi.mask)
    else:
        roi_dist = None

    def near_edge(m):
        if min(m.x, m.y, w - 1 - m.x, h - 1 - m.y) <= cfg.edge_dist:
            return True
        return roi_dist is not None and roi_dist[m.y, m.x] <= cfg.edge_dist

    alive = [m for m in alive if not near_edge(m)]

    # (b) broken ridge: facing endings across a small gap
    endings = [m for m in alive if m.mtype == ENDING]
    drop = set()
    for i, a in enumerate(endings):
        for b in endings[i + 1 :]:
            dx, dy = b.x - a.x, b.y - a.y
            if dx * dx + dy * dy > cfg.break_dist**2:
                continue
            if abs(_ang_dist(a.theta, b.theta) - 180.0) > cfg.break_angle:
                continue
            gap = _angle(dx, dy)
            # each ending's ridge body points away from the gap
            if (round(_ang_dist(gap, a.theta + 180), 9) <= cfg.break_angle
                    and round(_ang_dist(gap + 180, b.theta + 180), 9) <= cfg.break_angle):
                drop.update((a, b))
    alive = [m for m in alive if m not in drop]

    # (c) short ridge: an ending that reaches another minutia within spur_len
    at = {(m.x, m.y): m for m in alive}
    drop = set()
    for e in (m for m in alive if m.mtype == ENDING):
        dist = _geodesic(skel, junction, (e.x, e.y), cfg.spur_len)
        hits = [(d, at[p]) for p, d in dist.items() if d > 0 and p in at]
        if hits:
            dmin = min(d for d, _ in hits)
            drop.add(e)
            drop.update(m for d, m in hits if d == dmin)
    alive = [m for m in alive if m not in drop]

    # (d) bridge: short link between bifurcations running across the ridge flow
    bifs = [m for m in alive if m.mtype == BIFURCATION]
    at = {(m.x, m.y): m for m in bifs}
    drop = set()
    for a in bifs:
        dist = _geodesic(skel, junction, (a.x, a.y), cfg.bridge_len)
        for p, d in dist.items():
            b = at.get(p)
            if b is None or d == 0 or (b.y, b.x) < (a.y, a.x):
                continue
            s = math.sin(math.radians(2 * a.theta)) + math.sin(math.radians(2 * b.theta))
            c = math.cos(math.radians(2 * a.theta)) + math.cos(math.radians(2 * b.theta))
            if math.hypot(s, c) < 1e-9:
                continue
            flow = math.degrees(math.atan2(s, c)) / 2.0
            if round(_axial_dist(_angle(b.x - a.x, b.y - a.y), flow), 6) >= cfg.bridge_angle:
                drop.update((a, b))
    alive = [m for m in alive if m not in drop]

    # (e) hole: small enclosed background region bounded by exactly two bifurcations
    bif_px = {(m.x, m.y): m for m in alive if m.mtype == BIFURCATION}
    drop = set()
    if bif_px:
        holes, count = ndimage.label(skel == 0)
        border = set(np.unique(np.concatenate([holes[0], holes[-1], holes[:, 0], holes[:, -1]])))
        sizes = np.bincount(holes.ravel(), minlength=count + 1)
        for lab in range(1, count + 1):
            if lab in border or sizes[lab] > cfg.hole_len**2:
                continue
            region = holes == lab
            ring = ndimage.binary_dilation(region, structure=np.ones((3, 3))) & (skel > 0)
            if ring.sum() > 2 * cfg.hole_len + 2:
                continue
            near = ndimage.binary_dilation(ring, structure=np.ones((3, 3)))
            structural = [(int(x), int(y)) for y, x in zip(*np.nonzero(near & (cn == 3) & (skel > 0)))]
            if len(structural) == 2 and all(p in bif_px for p in structural):
                drop.update(bif_px[p] for p in structural)
    alive = [m for m in alive if m not in drop]

    # (f) triangle: three bifurcations pairwise linked within hole_len
    bifs = [m for m in alive if m.mtype == BIFURCATION]
    at = {(m.x, m.y): i for i, m in enumerate(bifs)}
    links = {i: set() for i in range(len(bifs))}
    for i, a in enumerate(bifs):
        for p, d in _geodesic(skel, junction, (a.x, a.y), cfg.hole_len).items():
            j = at.get(p)
            if j is not None and j != i:
                links[i].add(j)
    drop = set()
    for i in links:
        for j in links[i]:
            if j <= i:
                continue
            for k in links[i] & links[j]:
                if k > j:
                    drop.update((bifs[i], bifs[j], bifs[k]))
    return [m for m in alive if m not in drop]


def extract_minutiae(skel: np.ndarray, roi: Optional[RoiMask] = None, trace_len: int = 10,
                     cfg: Optional[FalseMinutiaeConfig] = None) -> list[Minutia]:
    """Detect, orient and clean minutiae on a skeleton."""
    ms = orient_minutiae(skel, detect_minutiae(skel, roi), trace_len)
    return remove_false_minutiae(skel, ms, cfg, roi)


def write_minutiae_csv(path, ms: Iterable[Minutia]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("x,y,theta,type\n")
        for m in ms:
            fh.write(f"{m.x},{m.y},{m.theta},{m.mtype}\n")
