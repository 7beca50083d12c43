"""All-vs-all scoring, identification metrics and the MasterPrint audit.

Scores come from exact vector equality, so almost every pair scores 0. The
scorer therefore walks an inverted index (vector -> templates holding it)
and stores only pairs with at least one correspondence; all other pairs are
implicit zeros.
"""

from __future__ import annotations

import logging
import multiprocessing
from bisect import bisect_right
from collections import defaultdict
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Iterator, Optional, Sequence

import numpy as np

from .errors import EmptyScoreList
from .features import Template
from .gallery import GalleryIndex
from .matcher import count_correspondence, score_from_counts, vector_counts

logger = logging.getLogger(__name__)

CORRECT = "correct"
FALSE_MATCH = "falseMatch"
REJECTED = "rejected"


@dataclass(frozen=True)
class ScoreRecord:
    probe: tuple
    gallery: tuple
    score: float
    genuine: bool


# --- all-pairs scoring ---------------------------------------------------------

_counts = None
_postings = None


def _init_worker(counts, postings):
    global _counts, _postings
    _counts, _postings = counts, postings


def _score_rows(rows):
    out_i, out_j, out_mc = [], [], []
    for i in rows:
        acc = defaultdict(int)
        for vec, c in _counts[i]:
            ids, cnts = _postings[vec]
            for pos in range(bisect_right(ids, i), len(ids)):
                acc[ids[pos]] += min(c, cnts[pos])
        for j in sorted(acc):
            out_i.append(i)
            out_j.append(j)
            out_mc.append(acc[j])
    return out_i, out_j, out_mc


class ScoreTable:
    """Correspondence counts of every unordered template pair (zeros implicit)."""

    def __init__(self, keys, sizes, i, j, mc):
        self.keys = list(keys)
        self.sizes = np.asarray(sizes, dtype=np.int64)
        self.i = np.asarray(i, dtype=np.int64)
        self.j = np.asarray(j, dtype=np.int64)
        self.mc = np.asarray(mc, dtype=np.int64)

    def __len__(self):
        t = len(self.keys)
        return t * (t - 1) // 2

    @property
    def scores(self) -> np.ndarray:
        """Scores of the stored (non-zero) pairs."""
        n, m = self.sizes[self.i], self.sizes[self.j]
        return (self.mc * (n + m)) / (2 * n * m)

    def records(self) -> Iterator[ScoreRecord]:
        lookup = {(int(a), int(b)): int(c) for a, b, c in zip(self.i, self.j, self.mc)}
        t = len(self.keys)
        for a in range(t):
            for b in range(a + 1, t):
                mc = lookup.get((a, b), 0)
                ka, kb = self.keys[a], self.keys[b]
                yield ScoreRecord(ka, kb, score_from_counts(mc, int(self.sizes[a]), int(self.sizes[b])),
                                  ka[0] == kb[0])


def score_table(gallery: GalleryIndex, workers: int = 1, chunk: int = 64) -> ScoreTable:
    """Score every unordered pair once.

    Rows are split into fixed-size chunks whose results are concatenated in
    chunk order, so the table is identical for any ``workers``.
    """
    templates = gallery.templates()
    counts = [sorted(vector_counts(t.tuples).items()) for t in templates]
    post = defaultdict(lambda: ([], []))
    for idx, items in enumerate(counts):
        for vec, c in items:
            post[vec][0].append(idx)
            post[vec][1].append(c)
    postings = dict(post)
    chunks = [range(s, min(s + chunk, len(templates))) for s in range(0, len(templates), chunk)]
    if workers <= 1 or len(chunks) <= 1:
        _init_worker(counts, postings)
        parts = [_score_rows(c) for c in chunks]
    else:
        ctx = multiprocessing.get_context("fork" if "fork" in multiprocessing.get_all_start_methods() else "spawn")
        with ProcessPoolExecutor(workers, mp_context=ctx, initializer=_init_worker,
                                 initargs=(counts, postings)) as pool:
            parts = list(pool.map(_score_rows, chunks))
    i = [v for p in parts for v in p[0]]
    j = [v for p in parts for v in p[1]]
    mc = [v for p in parts for v in p[2]]
    return ScoreTable(gallery.keys(), [len(t.tuples) for t in templates], i, j, mc)


def all_pairs_scores(gallery: GalleryIndex, workers: int = 1) -> Iterator[ScoreRecord]:
    """Every unordered pair of enrolled templates, scored exactly once."""
    return score_table(gallery, workers).records()


# --- EER -------------------------------------------------------------------------


def eer_compute(genuine, impostor):
    """Equal error rate and its threshold.

    FMR(t) is the share of impostor scores >= t, FNMR(t) the share of genuine
    scores < t. Candidates are the distinct scores and the midpoints between
    neighbours; the first candidate minimising |FMR - FNMR| wins.
    """
    gen = np.sort(np.asarray(genuine, dtype=np.float64))
    imp = np.sort(np.asarray(impostor, dtype=np.float64))
    if gen.size == 0 or imp.size == 0:
        raise EmptyScoreList("EER needs non-empty genuine and impostor score lists")
    uniq = np.unique(np.concatenate([gen, imp]))
    cand = np.sort(np.concatenate([uniq, (uniq[:-1] + uniq[1:]) / 2]))
    imp_hi = imp.size - np.searchsorted(imp, cand, side="left")
    gen_lo = np.searchsorted(gen, cand, side="left")
    # compare |FMR - FNMR| on integer cross-products so near-ties are decided exactly
    gap = np.abs(imp_hi * gen.size - gen_lo * imp.size)
    k = int(np.argmin(gap))
    return float((imp_hi[k] / imp.size + gen_lo[k] / gen.size) / 2), float(cand[k])


# --- single-probe operations -------------------------------------------------------


@dataclass
class IdentifyResult:
    outcome: str
    ranking: list  # [(subject, score)] best first
    tie: bool = False

    @property
    def best(self):
        return self.ranking[0] if self.ranking else (None, float("-inf"))


def _subject_scores(gallery: GalleryIndex, probe: Template) -> dict:
    best = {}
    n = len(probe.tuples)
    for t in gallery.templates():
        if t.key == probe.key:
            continue
        s = score_from_counts(count_correspondence(probe.tuples, t.tuples), n, len(t.tuples)) if n else 0.0
        best[t.subject] = max(best.get(t.subject, 0.0), s)
    return best


def identify(gallery: GalleryIndex, probe: Template, theta: float) -> IdentifyResult:
    """Rank subjects by their best-scoring partial; the probe itself is excluded."""
    ranking = sorted(_subject_scores(gallery, probe).items(), key=lambda kv: (-kv[1], kv[0]))
    if not ranking or ranking[0][1] < theta:
        return IdentifyResult(REJECTED, ranking)
    tie = len(ranking) > 1 and ranking[1][1] == ranking[0][1]
    if tie:
        logger.info("tie at top score %.6f for probe %s; subject %s wins", ranking[0][1], probe.key, ranking[0][0])
    outcome = CORRECT if ranking[0][0] == probe.subject else FALSE_MATCH
    return IdentifyResult(outcome, ranking, tie)


def imr_denominator(gallery: GalleryIndex) -> int:
    return max(gallery.subjects - 1, 1) * gallery.partials * gallery.prints_per_subject


def imr(gallery: GalleryIndex, probe: Template, theta: float) -> float:
    """Share of impostor partials whose score with ``probe`` exceeds ``theta``."""
    n = len(probe.tuples)
    hits = 0
    for t in gallery.templates():
        if t.subject == probe.subject or t.key == probe.key:
            continue
        s = score_from_counts(count_correspondence(probe.tuples, t.tuples), n, len(t.tuples)) if n else 0.0
        hits += s > theta
    return hits / imr_denominator(gallery)


# --- whole-gallery evaluation ---------------------------------------------------------


@dataclass
class EvalReport:
    threshold: float
    nt: int
    nc: int
    nf: int
    nr: int
    tmr: float
    fmr: float
    fnmr: float
    imr: np.ndarray = field(repr=False)  # per probe, aligned with Evaluation.keys
    masterprints: list = field(default_factory=list)
    eer: float = float("nan")
    eer_threshold: float = float("nan")
    cmc: list = field(default_factory=list)
    ties: int = 0

    @property
    def vr(self) -> float:
        return self.tmr

    @property
    def max_imr(self) -> float:
        return float(self.imr.max()) if self.imr.size else 0.0


class Evaluation:
    """Every enrolled partial used as a probe against all the others."""

    def __init__(self, gallery: GalleryIndex, table: Optional[ScoreTable] = None, workers: int = 1,
                 fraction: float = 0.04, max_rank: int = 20):
        self.gallery = gallery
        self.table = table if table is not None else score_table(gallery, workers)
        self.fraction = fraction
        self.max_rank = max_rank
        self.keys = self.table.keys
        t = len(self.keys)
        subj = np.array([k[0] for k in self.keys], dtype=np.int64)
        self.subject_ids = np.unique(subj)
        self.n_subjects = max(gallery.subjects, len(self.subject_ids))
        col = np.searchsorted(self.subject_ids, subj)
        self.own = col
        per_subject = np.bincount(col, minlength=len(self.subject_ids))

        i, j = self.table.i, self.table.j
        s = self.table.scores
        self.probe = np.concatenate([i, j])
        self.other = np.concatenate([j, i])
        self.score = np.concatenate([s, s])
        self.genuine = subj[self.probe] == subj[self.other]

        best = np.zeros((t, len(self.subject_ids)))
        lonely = per_subject[col] == 1  # no other partial of the own subject
        best[np.arange(t)[lonely], col[lonely]] = -np.inf
        np.maximum.at(best, (self.probe, col[self.other]), self.score)
        self.best = best
        self.genuine_total = per_subject[col] - 1
        self.impostor_total = t - per_subject[col]
        self.imr_den = imr_denominator(gallery)

    # per-probe counts of partials scoring strictly above theta
    def _above(self, theta: float, genuine: bool) -> np.ndarray:
        mask = (self.genuine == genuine) & (self.score > theta)
        counts = np.bincount(self.probe[mask], minlength=len(self.keys))
        if theta < 0:
            nonzero = np.bincount(self.probe[self.genuine == genuine], minlength=len(self.keys))
            counts = counts + (self.genuine_total if genuine else self.impostor_total) - nonzero
        return counts

    def imr(self, theta: float) -> np.ndarray:
        return self._above(theta, genuine=False) / self.imr_den

    def masterprint_mask(self, theta: float) -> np.ndarray:
        hits = self.best > theta
        hits[np.arange(len(self.keys)), self.own] = False
        return hits.sum(axis=1) / self.n_subjects >= self.fraction

    def masterprints(self, theta: float) -> list:
        """``[(probe key, [other subjects matched])]`` for every flagged probe."""
        out = []
        for p in np.nonzero(self.masterprint_mask(theta))[0]:
            row = self.best[p] > theta
            row[self.own[p]] = False
            out.append((self.keys[p], [int(s) for s in self.subject_ids[row]]))
        return out

    def ranks(self, theta: float) -> np.ndarray:
        """Rank of the true subject per probe; ``inf`` when it scores below ``theta``."""
        t = len(self.keys)
        own = self.best[np.arange(t), self.own]
        cols = np.arange(len(self.subject_ids))
        ahead = (self.best > own[:, None]).sum(axis=1) + (
            (self.best == own[:, None]) & (cols[None, :] < self.own[:, None])).sum(axis=1)
        return np.where(np.isfinite(own) & (own >= theta), ahead + 1, np.inf)

    def cmc(self, theta: float, max_rank: Optional[int] = None) -> list:
        max_rank = self.max_rank if max_rank is None else max_rank
        if max_rank < 1:
            raise ValueError("max_rank must be >= 1")
        r = self.ranks(theta)
        if r.size == 0:
            return [0.0] * max_rank
        return [float((r <= k).mean()) for k in range(1, max_rank + 1)]

    def top(self):
        """Best subject column, its score and whether the top score is shared, per probe."""
        top = self.best.max(axis=1)
        arg = self.best.argmax(axis=1)  # first maximum = smallest subject id
        tied = (self.best == top[:, None]).sum(axis=1) > 1
        return arg, top, tied

    def report(self, theta: float, eer=None) -> EvalReport:
        arg, top, tied = self.top()
        rejected = top < theta
        correct = ~rejected & (arg == self.own)
        nt = len(self.keys)
        nc, nr = int(correct.sum()), int(rejected.sum())
        nf = nt - nc - nr
        eer_v, eer_t = eer if eer is not None else (float("nan"), float("nan"))
        return EvalReport(
            threshold=theta, nt=nt, nc=nc, nf=nf, nr=nr,
            tmr=nc / nt if nt else 0.0, fmr=nf / nt if nt else 0.0, fnmr=nr / nt if nt else 0.0,
            imr=self.imr(theta),
            masterprints=[self.keys[p] for p in np.nonzero(self.masterprint_mask(theta))[0]],
            eer=eer_v, eer_threshold=eer_t, cmc=self.cmc(theta),
            ties=int((tied & ~rejected).sum()),
        )

    def score_lists(self):
        """Genuine and impostor scores of all unordered pairs, zeros included."""
        subj = np.array([k[0] for k in self.keys])
        gen_mask = subj[self.table.i] == subj[self.table.j]
        s = self.table.scores
        t = len(self.keys)
        counts = np.bincount(self.own)
        n_gen = int((counts * (counts - 1) // 2).sum())
        n_imp = t * (t - 1) // 2 - n_gen
        gen = np.concatenate([s[gen_mask], np.zeros(n_gen - int(gen_mask.sum()))])
        imp = np.concatenate([s[~gen_mask], np.zeros(n_imp - int((~gen_mask).sum()))])
        return gen, imp

    def eer(self):
        return eer_compute(*self.score_lists())

    def sweep(self, thresholds: Sequence[float]):
        """One report per threshold plus the smallest threshold with no MasterPrint."""
        thresholds = list(thresholds)
        if any(b < a for a, b in zip(thresholds, thresholds[1:])):
            raise ValueError("thresholds must be ascending")
        try:
            eer = self.eer()
        except EmptyScoreList:
            eer = None
        reports = [self.report(th, eer) for th in thresholds]
        zero = next((r.threshold for r in reports if not r.masterprints), None)
        return reports, zero

    def verify(self, theta: float) -> dict:
        """Per-probe count of same-subject partials scoring above ``theta``."""
        counts = self._above(theta, genuine=True)
        hist = np.bincount(counts) if counts.size else np.zeros(1, dtype=np.int64)
        nt = max(len(counts), 1)
        return {
            "threshold": theta,
            "histogram": [int(v) for v in hist],
            "over4": float((counts > 4).sum() / nt),
            "over8": float((counts > 8).sum() / nt),
            "counts": counts,
        }


# spec-level conveniences that take a gallery directly


def masterprint_scan(gallery: GalleryIndex, theta: float, fraction: float = 0.04, workers: int = 1) -> list:
    return [k for k, _ in Evaluation(gallery, workers=workers, fraction=fraction).masterprints(theta)]


def sweep(gallery: GalleryIndex, thresholds: Sequence[float], workers: int = 1, fraction: float = 0.04):
    return Evaluation(gallery, workers=workers, fraction=fraction).sweep(thresholds)


def cmc_curve(gallery: GalleryIndex, theta: float, max_rank: int, workers: int = 1) -> list:
    return Evaluation(gallery, workers=workers).cmc(theta, max_rank)


def verify_distribution(gallery: GalleryIndex, theta: float, workers: int = 1) -> dict:
    return Evaluation(gallery, workers=workers).verify(theta)
