"""Deterministic synthetic fingerprint-like rasters with known minutiae.

Ridges are the dark level sets of a phase field

    phase(x, y) = k * (x cos a + y sin a) + bend(x, y) + sum_i s_i * atan2(y - y_i, x - x_i)

Each ``atan2`` term is a fork dislocation: one ridge more on one side of the
core than on the other. Whether the dark ridge ends at the core or the light
valley ends there (a ridge bifurcation) depends on the phase seen at the
core, so every core is nudged along the local wave vector until that phase
gives the requested type.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .errors import FpError, SpecInfeasible
from .minutiae import BIFURCATION, ENDING

logger = logging.getLogger(__name__)

BORDER = 18
MIN_SPACING = 12
AMPLITUDE = 100.0


@dataclass(frozen=True)
class SynthSpec:
    width: int = 388
    height: int = 374
    ridge_period: float = 9.0
    orientation_seed: int = 0
    planted_minutiae: tuple = ()  # (x, y, type)
    noise_level: float = 0.0
    noise_seed: int = 0


@dataclass
class _Field:
    k: float
    alpha: float
    bend: float
    beta: float
    offset: float
    cx: float
    cy: float
    radius: float

    def base(self, x, y):
        u = (x - self.cx) * math.cos(self.beta) + (y - self.cy) * math.sin(self.beta)
        lin = self.k * (x * math.cos(self.alpha) + y * math.sin(self.alpha))
        return lin + self.k * self.bend * u * u / (2 * self.radius) + self.offset

    def base_grad(self, x, y):
        u = (x - self.cx) * math.cos(self.beta) + (y - self.cy) * math.sin(self.beta)
        g = self.k * self.bend * u / self.radius
        return (self.k * math.cos(self.alpha) + g * math.cos(self.beta),
                self.k * math.sin(self.alpha) + g * math.sin(self.beta))


def _field(spec: SynthSpec) -> _Field:
    rng = np.random.default_rng(spec.orientation_seed)
    return _Field(
        k=2 * math.pi / spec.ridge_period,
        alpha=float(rng.uniform(0, math.pi)),
        bend=float(rng.uniform(-0.4, 0.4)),
        beta=float(rng.uniform(0, math.pi)),
        offset=float(rng.uniform(0, 2 * math.pi)),
        cx=spec.width / 2,
        cy=spec.height / 2,
        radius=float(max(spec.width, spec.height)),
    )


def check_spec(spec: SynthSpec) -> None:
    pts = spec.planted_minutiae
    for x, y, t in pts:
        if t not in (ENDING, BIFURCATION):
            raise SpecInfeasible(f"unknown minutia type {t!r}")
        if min(x, y, spec.width - 1 - x, spec.height - 1 - y) < BORDER:
            raise SpecInfeasible(f"planted minutia ({x}, {y}) closer than {BORDER} px to the border")
    for i, (x1, y1, _) in enumerate(pts):
        for x2, y2, _ in pts[i + 1 :]:
            if math.hypot(x1 - x2, y1 - y2) < MIN_SPACING:
                raise SpecInfeasible(f"planted minutiae ({x1}, {y1}) and ({x2}, {y2}) closer than {MIN_SPACING} px")
    if not 0.0 <= spec.noise_level <= 1.0:
        raise SpecInfeasible("noise_level must lie in [0, 1]")


def _wrap(a):
    return (a + math.pi) % (2 * math.pi) - math.pi


def _place_cores(fld: _Field, planted, iterations=8):
    """Nudge each core so the local phase produces the requested minutia type."""
    pos = [[float(x), float(y)] for x, y, _ in planted]
    signs = [1 if i % 2 == 0 else -1 for i in range(len(planted))]
    inserts = [0.0] * len(planted)
    for _ in range(iterations):
        for i, (_, _, mtype) in enumerate(planted):
            x, y = pos[i]
            phase = fld.base(x, y)
            gx, gy = fld.base_grad(x, y)
            for j, (xj, yj) in enumerate(pos):
                if j == i:
                    continue
                dx, dy = x - xj, y - yj
                r2 = dx * dx + dy * dy
                phase += signs[j] * math.atan2(dy, dx)
                gx += signs[j] * -dy / r2
                gy += signs[j] * dx / r2
            s = signs[i]
            # extra fringe opens towards the wave vector turned by -90 degrees
            insert = inserts[i] = math.atan2(-s * gx, s * gy)
            target = math.pi - s * insert if mtype == ENDING else -s * insert
            step = _wrap(target - phase)
            g2 = gx * gx + gy * gy
            pos[i][0] += step * gx / g2
            pos[i][1] += step * gy / g2
    return pos, signs, inserts


def generate(spec: SynthSpec):
    """Render ``spec``; returns ``(uint8 image, ground truth [(x, y, type), ...])``.

    The ground-truth point sits a quarter ridge period from the dislocation
    core along the minutia direction (into the ridge for endings, along the
    stem for bifurcations), which is where the thinned ridge puts it.
    """
    check_spec(spec)
    fld = _field(spec)
    pos, signs, inserts = _place_cores(fld, spec.planted_minutiae)
    yy, xx = np.mgrid[0 : spec.height, 0 : spec.width].astype(np.float64)
    phase = fld.base(xx, yy)
    for (px, py), s in zip(pos, signs):
        phase += s * np.arctan2(yy - py, xx - px)
    img = 128.0 + AMPLITUDE * np.cos(phase)
    if spec.noise_level > 0:
        rng = np.random.default_rng(spec.noise_seed)
        img += rng.normal(0.0, spec.noise_level * AMPLITUDE, img.shape)
    truth = []
    for (px, py), ins, (_, _, t) in zip(pos, inserts, spec.planted_minutiae):
        d = ins if t == ENDING else ins + math.pi
        q = spec.ridge_period / 4
        truth.append((int(round(px + q * math.cos(d))), int(round(py + q * math.sin(d))), t))
    return np.clip(np.rint(img), 0, 255).astype(np.uint8), truth


def random_planted(seed: int, width: int, height: int, spacing: float = 24.0, margin: int = BORDER + 4,
                   attempts: int = 4000):
    """Dart-throwing layout of planted minutiae with random types."""
    rng = np.random.default_rng(seed)
    pts = []
    for _ in range(attempts):
        x = int(rng.integers(margin, width - margin))
        y = int(rng.integers(margin, height - margin))
        if all((x - a) ** 2 + (y - b) ** 2 >= spacing * spacing for a, b, _ in pts):
            pts.append((x, y, ENDING if rng.random() < 0.5 else BIFURCATION))
    return tuple(pts)


def subject_spec(seed: int, width: int = 388, height: int = 374, spacing: float = 24.0, **overrides) -> SynthSpec:
    """A subject's base field: orientation, bend and minutia layout all drawn from ``seed``."""
    planted = random_planted(seed + 7919, width, height, spacing)
    return replace(SynthSpec(width=width, height=height, orientation_seed=seed, planted_minutiae=planted),
                   **overrides)


def make_synthetic_dataset(out_dir, subjects: int, impressions: int, seed: int = 0,
                           noise_level: float = 0.0, field_seeds: Optional[Sequence[int]] = None,
                           crop_spec=None, config=None, width: int = 388, height: int = 374,
                           spacing: float = 24.0):
    """Render, crop, extract and enrol a synthetic gallery; saves it under ``out_dir``.

    Impressions of one subject share the base field and differ only in noise.
    ``field_seeds`` (one per subject) lets several subjects share a base field.
    """
    from .config import Config
    from .gallery import GalleryIndex, crop_grid, save_gallery
    from .pipeline import extract_template
    from .preprocess import write_pgm

    if subjects < 1 or impressions < 1:
        raise ValueError("subjects and impressions must be >= 1")
    config = config or Config()
    crop_spec = crop_spec or config.crop_spec()
    out = Path(out_dir)
    (out / "images").mkdir(parents=True, exist_ok=True)
    if field_seeds is None:
        field_seeds = [seed * 1000 + s for s in range(1, subjects + 1)]
    if len(field_seeds) != subjects:
        raise ValueError("need one field seed per subject")

    gallery = GalleryIndex(subjects=subjects, fingers=1, impressions=impressions,
                           partials=crop_spec.rows * crop_spec.cols, crop_spec=crop_spec,
                           source="synthetic")
    for subject, fseed in enumerate(field_seeds, start=1):
        base = subject_spec(fseed, width, height, spacing)
        for imp in range(1, impressions + 1):
            spec = replace(base, noise_level=noise_level, noise_seed=seed * 100003 + subject * 101 + imp)
            img, _ = generate(spec)
            write_pgm(out / "images" / f"{subject}_{imp}.pgm", img)
            for crop in crop_grid(img, crop_spec):
                ident = (subject, 1, imp, crop.row, crop.col)
                try:
                    tpl = extract_template(crop.image, ident, config)
                except FpError as exc:
                    gallery.notes.append(f"S{subject}_F1_I{imp}_R{crop.row}C{crop.col}: {exc.code}: {exc}")
                    continue
                gallery.enroll(tpl)
    save_gallery(gallery, out)
    return gallery
