"""CSV/JSON report writers for an evaluation run.

Every real number is written with six decimals and nothing time-dependent
goes into the files, so two runs over the same gallery give identical bytes.
"""

from __future__ import annotations

import csv
import json
import logging
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .evaluation import Evaluation, EvalReport
from .features import template_filename

logger = logging.getLogger(__name__)

METRICS_HEADER = ["threshold", "NT", "NC", "NF", "NR", "TMR", "FMR", "FNMR", "masterprintCount", "maxIMR"]


def fmt(x: float) -> str:
    return f"{x:.6f}"


def key_name(key) -> str:
    return template_filename(*key).removesuffix(".tpl.json")


def _r6(x):
    """JSON-friendly value rounded to six decimals (None for undefined)."""
    if x is None or (isinstance(x, float) and not np.isfinite(x)):
        return None
    return float(fmt(x))


def _write_csv(path: Path, header, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def _write_json(path: Path, obj):
    path.write_text(json.dumps(obj, indent=2) + "\n", encoding="utf-8")


def write_metrics(path, reports: Sequence[EvalReport]) -> None:
    _write_csv(Path(path), METRICS_HEADER, [
        [fmt(r.threshold), r.nt, r.nc, r.nf, r.nr, fmt(r.tmr), fmt(r.fmr), fmt(r.fnmr),
         len(r.masterprints), fmt(r.max_imr)]
        for r in reports
    ])


def masterprint_payload(ev: Evaluation, theta: float) -> dict:
    return {
        "threshold": _r6(theta),
        "fraction": _r6(ev.fraction),
        "subjects": ev.n_subjects,
        "masterprints": [{"probe": key_name(k), "matchedSubjects": subs} for k, subs in ev.masterprints(theta)],
    }


def write_masterprints(path, ev: Evaluation, theta: float) -> None:
    _write_json(Path(path), masterprint_payload(ev, theta))


def write_evaluation(out_dir, ev: Evaluation, thresholds: Sequence[float], theta: Optional[float] = None,
                     figures: bool = True) -> dict:
    """Run the sweep and write every report into ``out_dir``.

    The single-threshold outputs (CMC, MasterPrint list, verification
    histogram, per-probe IMR) use ``theta`` when given, otherwise the smallest
    swept threshold with no MasterPrint, otherwise the largest swept one.
    Returns a small summary dict.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    reports, zero = ev.sweep(thresholds)
    if theta is None:
        theta = zero if zero is not None else thresholds[-1]
    write_metrics(out / "metrics.csv", reports)

    arg, top, _ = ev.top()
    correct = arg == ev.own
    _write_csv(out / "scatter.csv", ["probe", "score", "genuine"],
               [[key_name(k), fmt(s), int(c)] for k, s, c in zip(ev.keys, top, correct)])

    cmc = ev.cmc(theta)
    _write_csv(out / "cmc.csv", ["rank", "rate"], [[k, fmt(v)] for k, v in enumerate(cmc, start=1)])

    try:
        eer, eer_t = ev.eer()
    except Exception as exc:  # EmptyScoreList on single-subject galleries
        logger.warning("EER undefined: %s", exc)
        eer, eer_t = None, None
    gen, imp = ev.score_lists()
    _write_json(out / "eer.json", {"eer": _r6(eer), "threshold": _r6(eer_t),
                                   "genuinePairs": int(gen.size), "impostorPairs": int(imp.size)})

    write_masterprints(out / "masterprints.json", ev, theta)

    ver = ev.verify(theta)
    _write_json(out / "verify.json", {
        "threshold": _r6(theta),
        "histogram": ver["histogram"],
        "over4": _r6(ver["over4"]),
        "over8": _r6(ver["over8"]),
        "VR": _r6(ev.report(theta).vr),
    })

    imr = ev.imr(theta)
    _write_csv(out / "imr.csv", ["probe", "IMR"], [[key_name(k), fmt(v)] for k, v in zip(ev.keys, imr)])

    summary = {
        "templates": len(ev.keys),
        "pairs": len(ev.table),
        "reportThreshold": _r6(theta),
        "zeroMasterprintThreshold": _r6(zero),
        "eer": _r6(eer),
        "eerThreshold": _r6(eer_t),
    }
    _write_json(out / "summary.json", summary)

    if figures:
        from . import plotting

        plotting.plot_rates(out / "rates.png", reports)
        plotting.plot_cmc(out / "cmc.png", cmc, theta)
        plotting.plot_scatter(out / "scatter.png", top, correct)
        plotting.plot_verify(out / "verify.png", ver["histogram"], theta)
    return summary
