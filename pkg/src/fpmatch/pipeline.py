"""Image -> template glue used by the CLI and the synthetic dataset builder."""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from typing import Optional, Sequence

import numpy as np

from .config import Config
from .features import Template, build_template
from .minutiae import extract_minutiae
from .preprocess import skeletonize


def extract_skeleton(gray: np.ndarray, config: Optional[Config] = None):
    c = config or Config()
    return skeletonize(gray, c.block_size, c.var_threshold, c.target_mean, c.target_var)


def extract_template(gray: np.ndarray, identity: Sequence[int] = (0, 0, 0, 0, 0),
                     config: Optional[Config] = None, strict: bool = True) -> Template:
    """Full pipeline for one partial print; raises ``EmptyRoi`` / ``NotEnrollable``."""
    c = config or Config()
    skel, roi = extract_skeleton(gray, c)
    ms = extract_minutiae(skel, roi, c.trace_len, c.false_minutiae())
    return build_template(skel, roi, identity, ms, strict=strict)


def _extract_one(job):
    path, ident, config = job
    from .errors import FpError
    from .preprocess import read_image

    try:
        gray = path if isinstance(path, np.ndarray) else read_image(path)
        return extract_template(gray, ident, config), None
    except FpError as exc:
        name = "S{}_F{}_I{}_R{}C{}".format(*ident)
        return None, f"{name}: {exc.code}: {exc}"


def extract_many(jobs: Sequence, config: Optional[Config] = None, workers: int = 1) -> list:
    """Run :func:`extract_template` over ``[(image path or array, identity), ...]``.

    Returns ``[(template or None, error note or None)]`` in input order,
    whatever the worker count.
    """
    c = config or Config()
    tasks = [(p, ident, c) for p, ident in jobs]
    if workers <= 1:
        return [_extract_one(t) for t in tasks]
    with ProcessPoolExecutor(workers) as pool:
        return list(pool.map(_extract_one, tasks, chunksize=16))
