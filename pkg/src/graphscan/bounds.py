"""Concentration machinery: Bernstein tail, selection-risk functional,
union bound over competing neighborhoods, and test oracles (pairing trick,
inactive-ball witness search).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .graph import AttributedGraph, GroundTruth
from .neighborhoods import ExactNeighborhood, NeighborhoodFamily


def r_functional(s1: int, b_minus_a: float, excess: float) -> float:
    """Signal margin of a neighborhood: (b-a) * s1 + excess.

    s1 is the number of active vertices in the neighborhood, excess the total
    activity above the threshold among them.
    """
    if s1 < 0:
        raise ValidationError(f"active count must be >= 0, got {s1}")
    if b_minus_a <= 0:
        raise ValidationError(f"b - a must be > 0, got {b_minus_a}")
    if excess < 0:
        raise ValidationError(f"excess must be >= 0, got {excess}")
    return b_minus_a * s1 + excess


def bernstein_tail(t: float, sum_var: float, M: float) -> float:
    """Bernstein upper tail bound for a sum of independent bounded zero-mean
    variables: exp(-(t^2/2) / (sum_var + M*t/3)).
    """
    if t <= 0:
        raise ValidationError(f"t must be > 0, got {t}")
    if sum_var < 0:
        raise ValidationError(f"variance sum must be >= 0, got {sum_var}")
    if M <= 0:
        raise ValidationError(f"bound M must be > 0, got {M}")
    val = math.exp(-(t * t / 2.0) / (sum_var + M * t / 3.0))
    return min(max(val, 5e-324), 1.0)


@dataclass(frozen=True)
class NeighborhoodSummary:
    """Per-neighborhood inputs to the selection bound."""

    s1: int                # active vertices in K
    excess: float          # sum of (A_v - b) over active members
    overlap_defect: int    # |K \ K0|

    def __post_init__(self):
        if self.s1 < 0 or self.excess < 0 or self.overlap_defect < 0:
            raise ValidationError("negative neighborhood summary field")
        if self.s1 > self.overlap_defect:
            raise ValidationError(
                f"s1={self.s1} exceeds |K \\ K0|={self.overlap_defect}; "
                "active members of K cannot lie in the inactive reference set")


@dataclass(frozen=True)
class BoundInputs:
    a: float
    b: float
    sigma2: float
    M: float | None
    k: int
    terms: tuple  # NeighborhoodSummary per competing neighborhood

    def __post_init__(self):
        if not self.b > self.a:
            raise ValidationError(f"need b > a, got b={self.b}, a={self.a}")
        if self.sigma2 < 0:
            raise ValidationError("sigma2 must be >= 0")


@dataclass(frozen=True)
class BoundReport:
    raw_sum: float
    clamped: float
    degenerate_terms: int
    per_term_top10: tuple

    def to_json_dict(self) -> dict:
        return {
            "raw_sum": self.raw_sum,
            "clamped": self.clamped,
            "degenerate_terms": self.degenerate_terms,
            "per_term_top10": [
                {"term": t, "s1": s.s1, "excess": s.excess,
                 "overlap_defect": s.overlap_defect}
                for t, s in self.per_term_top10
            ],
        }


def selection_bound(inputs: BoundInputs) -> BoundReport:
    """Union bound on selecting a contaminated neighborhood over the reference.

    Each competing neighborhood K contributes
    exp(-3 R^2 / (12 sigma2 |K \\ K0| + 4 M R)) with R its signal margin.
    Terms with R = 0 are mathematically 1; they are counted as degenerate
    and the sum is reported both raw and clamped at 1.  Requires the
    almost-sure noise bound M.
    """
    if inputs.M is None or inputs.M <= 0:
        raise ValidationError(
            "selection bound requires an almost-sure noise bound M > 0 (bounded noise)")
    b_minus_a = inputs.b - inputs.a
    degenerate = 0
    values = []
    for s in inputs.terms:
        r = r_functional(s.s1, b_minus_a, s.excess)
        if r == 0.0:
            degenerate += 1
            values.append((1.0, s))
            continue
        denom = 12.0 * inputs.sigma2 * s.overlap_defect + 4.0 * inputs.M * r
        values.append((math.exp(-3.0 * r * r / denom), s))
    raw = math.fsum(v for v, _ in values)
    top = tuple(sorted(values, key=lambda vs: -vs[0])[:10])
    return BoundReport(
        raw_sum=raw,
        clamped=min(raw, 1.0),
        degenerate_terms=degenerate,
        per_term_top10=top,
    )


def summarize_neighborhood(truth: GroundTruth, K: ExactNeighborhood,
                           k0_members) -> NeighborhoodSummary:
    """Compute the selection-bound summary of one neighborhood against a
    reference inactive member set."""
    members = K.members
    active = truth.active[members]
    s1 = int(active.sum())
    excess = float(math.fsum(truth.A[members[active]] - truth.b)) if s1 else 0.0
    k0 = set(int(v) for v in k0_members)
    defect = sum(1 for v in members if int(v) not in k0)
    return NeighborhoodSummary(s1=s1, excess=excess, overlap_defect=defect)


def family_summaries(truth: GroundTruth, family: NeighborhoodFamily,
                     k0_members, contaminated_only: bool = True):
    """Summaries for every neighborhood in a family (small-graph audit path).

    With ``contaminated_only`` the collection is restricted to neighborhoods
    containing at least one active vertex, which is where the bound is
    informative; the all-inactive reference itself is always excluded.
    """
    k0 = frozenset(int(v) for v in k0_members)
    out = []
    for v in family.roots():
        K = family.neighborhood(int(v))
        if K.member_set == k0:
            continue
        s = summarize_neighborhood(truth, K, k0)
        if contaminated_only and s.s1 == 0:
            continue
        out.append(s)
    return tuple(out)


def pairing_deltas(eps) -> np.ndarray:
    """Pair a 2r-vector of noise draws into r differences eps_i - eps_{i+r}."""
    eps = np.asarray(eps, dtype=np.float64)
    if eps.ndim != 1 or len(eps) % 2 != 0:
        raise ValidationError(f"pairing requires an even-length vector, got shape {eps.shape}")
    r = len(eps) // 2
    return eps[:r] - eps[r:]


def check_assumption1(g: AttributedGraph, truth: GroundTruth, k: int):
    """Search for an inactive vertex whose full k-neighborhood is all inactive.

    Returns (True, witness_vertex) or (False, None).  The per-candidate BFS
    aborts as soon as an active vertex enters any layer, so failing
    candidates are cheap.
    """
    if k < 1:
        raise ValidationError(f"k must be >= 1, got {k}")
    active = truth.active
    for v in np.flatnonzero(~active):
        v = int(v)
        seen = {v}
        frontier = [v]
        total = 1
        good = True
        while total < k:
            nxt = []
            for u in frontier:
                for w in g.neighbors(u):
                    w = int(w)
                    if w not in seen:
                        if active[w]:
                            good = False
                            break
                        seen.add(w)
                        nxt.append(w)
                if not good:
                    break
            if not good or not nxt:
                break
            frontier = nxt
            total += len(nxt)
        if good and total >= k:
            return True, v
    return False, None
