"""Scan estimators over neighborhood families.

Phase 1 computes one neighborhood average per root (data-parallel, exactly
rounded so the result is independent of worker count and accumulation
order); phase 2 is an associative min/max reduction with smallest-root-id
tie-breaking.  The final estimate is recomputed from the selected
neighborhood with a shifted compensated mean, which is exact for constant
observations and exactly shift-equivariant.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .errors import FamilyError, ValidationError
from .graph import AttributedGraph
from .neighborhoods import ExactNeighborhood, NeighborhoodFamily, _scan_all_roots

SUBLEVEL = "sublevel"
SUPERLEVEL = "superlevel"


@dataclass(frozen=True)
class ScanResult:
    """Selected neighborhood and estimate of one sublevel/superlevel scan."""

    k: int
    mode: str
    selected: ExactNeighborhood
    estimate: float
    per_vertex_avg: np.ndarray   # NaN for skipped roots
    ties: tuple
    skipped_count: int

    def to_json_dict(self) -> dict:
        return {
            "k": self.k,
            "mode": self.mode,
            "root": int(self.selected.root),
            "estimate": self.estimate,
            "ties": [int(t) for t in self.ties],
            "skipped_count": self.skipped_count,
        }

    def save_json(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_json_dict(), fh, indent=2)
            fh.write("\n")

    def dump_averages_csv(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("root,average\n")
            for v, a in enumerate(self.per_vertex_avg):
                if not math.isnan(a):
                    fh.write(f"{v},{float(a)!r}\n")


def neighborhood_sum(g: AttributedGraph, K: ExactNeighborhood) -> float:
    """Exactly rounded sum of observed activities over the members of K."""
    if g.observed is None:
        raise ValidationError("graph has no observations attached")
    if len(K.members) and (K.members[0] < 0 or K.members[-1] >= g.n):
        raise ValidationError("neighborhood member outside vertex range")
    return math.fsum(g.observed[K.members])


def shifted_mean(values: np.ndarray, mode: str = SUBLEVEL) -> float:
    """Compensated mean anchored at the extreme member value.

    Anchoring at min (sublevel) or max (superlevel) keeps the mean exact for
    constant inputs and makes the superlevel mean the exact negation of the
    sublevel mean of the negated inputs.
    """
    base = float(values.min() if mode == SUBLEVEL else values.max())
    return base + math.fsum(values - base) / len(values)


def scan_phase1(g: AttributedGraph, family: NeighborhoodFamily,
                workers: int | None = None) -> np.ndarray:
    """Per-root neighborhood averages (NaN at skipped roots).

    Reuses averages cached at family construction when they were computed
    from the same observation vector; otherwise reruns the fused kernel.
    """
    if g.observed is None:
        raise ValidationError("graph has no observations attached")
    if g.n != family.graph.n:
        raise ValidationError("family was built on a different graph")
    cached = family.cached_averages(g.observed)
    if cached is not None:
        return cached
    avg, _, _, _ = _scan_all_roots(g, g.observed, family.k, workers)
    return avg


def phase2_combine(best: tuple, cand: tuple, mode: str = SUBLEVEL) -> tuple:
    """Associative, commutative reduction step on (root, average) pairs.

    Prefers the smaller average (sublevel) or larger (superlevel); equal
    averages resolve to the smaller root id, so any reduction tree gives the
    same answer.
    """
    if best is None:
        return cand
    if cand is None:
        return best
    rb, vb = best
    rc, vc = cand
    if vc == vb:
        return (min(rb, rc), vb)
    better = vc < vb if mode == SUBLEVEL else vc > vb
    return (rc, vc) if better else (rb, vb)


def scan_phase2(averages: np.ndarray, mode: str = SUBLEVEL):
    """Reduce per-root averages to (root, extremum, ties)."""
    finite = ~np.isnan(averages)
    if not finite.any():
        raise FamilyError("phase 2: no finite neighborhood averages")
    vals = averages[finite]
    value = float(vals.min() if mode == SUBLEVEL else vals.max())
    ties = np.flatnonzero(finite & (averages == value))
    return int(ties[0]), value, tuple(int(t) for t in ties)


def _scan(g, family, mode, workers):
    avg = scan_phase1(g, family, workers)
    root, _, ties = scan_phase2(avg, mode)
    selected = family.neighborhood(root)
    estimate = shifted_mean(g.observed[selected.members], mode)
    public = avg.copy()
    return ScanResult(
        k=family.k,
        mode=mode,
        selected=selected,
        estimate=estimate,
        per_vertex_avg=public,
        ties=ties,
        skipped_count=family.skipped_count,
    )


def scan_sublevel(g: AttributedGraph, family: NeighborhoodFamily,
                  workers: int | None = None) -> ScanResult:
    """Estimate the inactive baseline: argmin of neighborhood averages."""
    return _scan(g, family, SUBLEVEL, workers)


def scan_superlevel(g: AttributedGraph, family: NeighborhoodFamily,
                    workers: int | None = None) -> ScanResult:
    """Estimate the active threshold: argmax of neighborhood averages."""
    return _scan(g, family, SUPERLEVEL, workers)


@dataclass(frozen=True)
class CrawlerEstimate:
    """Nonparametric estimates of the crawler noise: variance and ECDF."""

    sigma2_hat: float
    samples: np.ndarray    # sorted observations of the selected neighborhood

    def __post_init__(self):
        self.samples.setflags(write=False)

    def cdf(self, t):
        """Right-continuous empirical CDF evaluated at scalar or array t."""
        pos = np.searchsorted(self.samples, t, side="right")
        return pos / len(self.samples)

    def dump_csv(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("t,F\n")
            for i, t in enumerate(self.samples):
                fh.write(f"{float(t)!r},{(i + 1) / len(self.samples)!r}\n")


def crawler_estimates(g: AttributedGraph, scan: ScanResult) -> CrawlerEstimate:
    """ECDF and unbiased variance of observations over the selected neighborhood."""
    if scan.mode != SUBLEVEL:
        raise ValidationError("crawler estimates are defined for sublevel scans")
    members = scan.selected.members
    if len(members) < 2:
        raise ValidationError("selected neighborhood too small for a variance estimate")
    x = g.observed[members]
    dev = x - scan.estimate
    sigma2 = math.fsum(dev * dev) / (len(members) - 1)
    return CrawlerEstimate(sigma2_hat=sigma2, samples=np.sort(x))
