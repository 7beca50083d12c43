"""Command-line entry point: ``fpmatch <subcommand> ...``.

Any pipeline error ends the process with a single ``error: CODE: message``
line on stderr and exit status 2.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .config import load_config, parse_sweep
from .errors import FpError

logger = logging.getLogger("fpmatch")

IMAGE_SUFFIXES = {".pgm", ".png", ".tif", ".tiff", ".bmp"}


def _gallery(path):
    from .gallery import load_gallery

    errors = []
    g = load_gallery(path, errors)
    for p, msg in errors:
        logger.warning("skipped %s: %s", p, msg)
    return g.freeze()


def cmd_crop(args, cfg):
    from .gallery import CropSpec, crop_grid, iter_fvc_images, partial_filename
    from .preprocess import read_image, write_pgm

    spec = CropSpec(args.rows or cfg.crop_rows, args.cols or cfg.crop_cols,
                    args.size or cfg.crop_size, args.size or cfg.crop_size)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    sources = iter_fvc_images(args.inp)
    n = 0
    for subject, imp, path in sources:
        for c in crop_grid(read_image(path), spec):
            write_pgm(out / partial_filename(subject, 1, imp, c.row, c.col), c.image)
            n += 1
    print(f"sources={len(sources)} partials={n}")
    return 0


def cmd_extract(args, cfg):
    from .features import parse_identity
    from .gallery import GalleryIndex, save_gallery
    from .pipeline import extract_many

    spec = cfg.crop_spec()
    store = GalleryIndex(crop_spec=spec, partials=spec.rows * spec.cols, source=args.source)
    jobs = []
    for path in sorted(Path(args.inp).iterdir()):
        if path.suffix.lower() not in IMAGE_SUFFIXES:
            continue
        ident = parse_identity(path.name)
        if ident is None:
            logger.warning("skipping %s: name carries no S_F_I_RC identity", path.name)
            continue
        jobs.append((path, ident))
    rejected = 0
    for tpl, note in extract_many(jobs, cfg, args.workers):
        if tpl is None:
            rejected += 1
            store.notes.append(note)
        else:
            store.enroll(tpl)
    keys = store.keys()
    store.subjects = len({k[0] for k in keys})
    store.fingers = max(len({k[1] for k in keys}), 1)
    store.impressions = max(len({k[2] for k in keys}), 1)
    save_gallery(store, args.out)
    print(f"enrollable={len(store)} rejected={rejected}")
    return 0


def cmd_match(args, cfg):
    from .features import load_template
    from .matcher import similarity

    r = similarity(load_template(args.a), load_template(args.b), force=args.force)
    score = r.score
    print(f"score={score:.6f} mc={r.mc} n={r.n} m={r.m}")
    return 0 if score >= args.threshold else 1


def cmd_identify(args, cfg):
    from .evaluation import identify
    from .features import load_template

    res = identify(_gallery(args.gallery), load_template(args.probe), args.threshold)
    print(f"outcome={res.outcome}" + (" tie=1" if res.tie else ""))
    for rank, (subject, score) in enumerate(res.ranking[: args.top], start=1):
        print(f"{rank} subject={subject} score={score:.6f}")
    return 0


def cmd_masterprint(args, cfg):
    from .evaluation import Evaluation
    from .reports import masterprint_payload

    fraction = args.fraction if args.fraction is not None else cfg.masterprint_fraction
    ev = Evaluation(_gallery(args.gallery), workers=args.workers, fraction=fraction)
    payload = masterprint_payload(ev, args.threshold)
    text = json.dumps(payload, indent=2) + "\n"
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
        print(f"masterprints={len(payload['masterprints'])}")
    else:
        sys.stdout.write(text)
    return 0


def cmd_eval(args, cfg):
    from .evaluation import Evaluation
    from .reports import write_evaluation

    thresholds = parse_sweep(args.sweep or cfg.sweep)
    ev = Evaluation(_gallery(args.gallery), workers=args.workers,
                    fraction=cfg.masterprint_fraction, max_rank=cfg.max_rank)
    summary = write_evaluation(args.out, ev, thresholds, args.threshold, figures=not args.no_figures)
    print(" ".join(f"{k}={v}" for k, v in summary.items()))
    return 0


def cmd_synth(args, cfg):
    from .synth import make_synthetic_dataset

    g = make_synthetic_dataset(args.out, args.subjects, args.impressions, seed=args.seed,
                               noise_level=args.noise, config=cfg, spacing=args.spacing)
    print(f"templates={len(g)} skipped={len(g.notes)}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="fpmatch", description="Partial-fingerprint matching and MasterPrint audit")
    p.add_argument("--config", help="key = value config file (default: $FPMATCH_CONFIG)")
    p.add_argument("-v", "--verbose", action="count", default=0)
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("crop", help="cut every source print into a grid of partials")
    s.add_argument("--in", dest="inp", required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--rows", type=int)
    s.add_argument("--cols", type=int)
    s.add_argument("--size", type=int)
    s.set_defaults(func=cmd_crop)

    s = sub.add_parser("extract", help="extract templates from partial images into a gallery")
    s.add_argument("--in", dest="inp", required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--source", default="unknown", help="dataset name recorded in the manifest")
    s.add_argument("--workers", type=int, default=1)
    s.set_defaults(func=cmd_extract)

    s = sub.add_parser("match", help="score two templates")
    s.add_argument("a")
    s.add_argument("b")
    s.add_argument("--threshold", type=float, default=0.0)
    s.add_argument("--force", action="store_true", help="score templates below the enrolment minimum")
    s.set_defaults(func=cmd_match)

    s = sub.add_parser("identify", help="rank gallery subjects for one probe")
    s.add_argument("--gallery", required=True)
    s.add_argument("--probe", required=True)
    s.add_argument("--threshold", type=float, required=True)
    s.add_argument("--top", type=int, default=10)
    s.set_defaults(func=cmd_identify)

    s = sub.add_parser("masterprint", help="list probes that match too many other subjects")
    s.add_argument("--gallery", required=True)
    s.add_argument("--threshold", type=float, required=True)
    s.add_argument("--fraction", type=float)
    s.add_argument("--workers", type=int, default=1)
    s.add_argument("--out", help="write masterprints.json here instead of stdout")
    s.set_defaults(func=cmd_masterprint)

    s = sub.add_parser("eval", help="threshold sweep with CSV/JSON reports and figures")
    s.add_argument("--gallery", required=True)
    s.add_argument("--sweep", help="lo:hi:step (default from config)")
    s.add_argument("--threshold", type=float, help="threshold for CMC/MasterPrint/verify outputs")
    s.add_argument("--workers", type=int, default=1)
    s.add_argument("--out", required=True)
    s.add_argument("--no-figures", action="store_true")
    s.set_defaults(func=cmd_eval)

    s = sub.add_parser("synth", help="build a synthetic gallery")
    s.add_argument("--subjects", type=int, required=True)
    s.add_argument("--impressions", type=int, default=2)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--noise", type=float, default=0.0)
    s.add_argument("--spacing", type=float, default=24.0, help="minimum distance between planted minutiae")
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_synth)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args.config)
        return args.func(args, cfg)
    except FpError as exc:
        print(f"error: {exc.code}: {exc}", file=sys.stderr)
        return 2
    except (OSError, ValueError) as exc:
        print(f"error: IO_ERROR: {exc}".replace("\n", " "), file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
