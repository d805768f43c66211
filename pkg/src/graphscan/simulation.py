"""Synthetic experiments: two-subgraph generator, noise channels, adversary
strategies, the multi-step game, and Monte Carlo drivers.

All randomness flows through counter-based Philox streams keyed by
(seed, stream role), so parallel or repeated runs reproduce bit-identical
graphs and noise vectors.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ValidationError
from .graph import AttributedGraph, GroundTruth, set_observations
from .neighborhoods import build_family
from .estimators import ScanResult, scan_sublevel

# stream roles for seed derivation
_STREAM_GRAPH = 0
_STREAM_NOISE = 1


def _rng(seed: int, stream: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, stream])))


@dataclass(frozen=True)
class TwoSubgraphSpec:
    """Two random out-degree-regular subgraphs joined by a few bridge edges."""

    n_big: int = 1_000_000
    n_small: int = 1_000
    out_degree: int = 3
    bridges: int = 20
    seed: int = 0
    a: float = 2.0
    active_level: float = 10.0
    active_prob: float = 0.5

    def __post_init__(self):
        if self.n_big < 1 or self.n_small < 1:
            raise ValidationError("subgraph sizes must be >= 1")
        if self.out_degree >= min(self.n_big, self.n_small):
            raise ValidationError("out_degree must be smaller than both subgraph sizes")
        if not self.active_level > self.a:
            raise ValidationError("active level must exceed the baseline")


def _random_out_edges(n_sub: int, d: int, offset: int, rng) -> tuple:
    """Each vertex draws d distinct random targets within its own subgraph."""
    src = np.repeat(np.arange(n_sub, dtype=np.int64), d)
    # draw in [0, n_sub-1) then shift past self to avoid loops
    tgt = rng.integers(0, n_sub - 1, size=n_sub * d)
    tgt[tgt >= src] += 1
    # redraw rows with duplicate targets until all d are distinct
    tgt = tgt.reshape(n_sub, d)
    while True:
        dup = (np.sort(tgt, axis=1)[:, 1:] == np.sort(tgt, axis=1)[:, :-1]).any(axis=1)
        bad = np.flatnonzero(dup)
        if not len(bad):
            break
        redraw = rng.integers(0, n_sub - 1, size=(len(bad), d))
        redraw[redraw >= bad[:, None]] += 1
        tgt[bad] = redraw
    return src + offset, tgt.ravel() + offset


def generate_two_subgraph(spec: TwoSubgraphSpec):
    """Build the two-subgraph benchmark graph and its ground truth.

    Vertices [0, n_big) form the big subgraph with coin-flip activity;
    [n_big, n_big + n_small) form the all-inactive small subgraph.  Bridges
    connect random cross pairs.  Reciprocal random draws may coincide after
    symmetrization, so the edge count is at most
    out_degree * (n_big + n_small) + bridges.
    """
    rng = _rng(spec.seed, _STREAM_GRAPH)
    n = spec.n_big + spec.n_small
    s1, t1 = _random_out_edges(spec.n_big, spec.out_degree, 0, rng)
    s2, t2 = _random_out_edges(spec.n_small, spec.out_degree, spec.n_big, rng)
    bs = rng.integers(0, spec.n_big, size=spec.bridges)
    bt = rng.integers(0, spec.n_small, size=spec.bridges) + spec.n_big
    u = np.concatenate([s1, s2, bs])
    w = np.concatenate([t1, t2, bt])

    # symmetrize + dedup directly on dense ids
    su = np.concatenate([u, w])
    sw = np.concatenate([w, u])
    key = np.unique(su * n + sw)
    su = (key // n).astype(np.int64)
    sw = (key % n).astype(np.int32)
    indptr = np.zeros(n + 1, dtype=np.int64)
    np.add.at(indptr, su + 1, 1)
    indptr = np.cumsum(indptr)
    g = AttributedGraph(n=n, indptr=indptr, indices=sw,
                        label_map={str(i): i for i in range(n)})

    active = np.zeros(n, dtype=np.bool_)
    active[:spec.n_big] = rng.random(spec.n_big) < spec.active_prob
    A = np.full(n, spec.a)
    A[active] = spec.active_level
    truth = GroundTruth(a=spec.a, b=spec.active_level, A=A, active=active)
    return g, truth


@dataclass(frozen=True)
class NoiseModel:
    """Zero-mean i.i.d. noise channel standing in for the crawler's error."""

    kind: str = "gaussian"           # gaussian | uniform_bounded | custom_discrete
    sigma: float = 1.0               # gaussian std deviation
    bound: float | None = None       # uniform_bounded half-width M
    values: tuple | None = None      # custom_discrete support
    probs: tuple | None = None
    seed: int = 0

    def __post_init__(self):
        if self.kind == "gaussian":
            if self.sigma < 0:
                raise ValidationError("sigma must be >= 0")
        elif self.kind == "uniform_bounded":
            if self.bound is None or self.bound < 0:
                raise ValidationError("uniform_bounded noise needs a bound M >= 0")
        elif self.kind == "custom_discrete":
            if not self.values or not self.probs or len(self.values) != len(self.probs):
                raise ValidationError("custom_discrete noise needs matching values/probs")
            if abs(math.fsum(self.probs) - 1.0) > 1e-12:
                raise ValidationError("custom_discrete probabilities must sum to 1")
            mean = math.fsum(v * p for v, p in zip(self.values, self.probs))
            if abs(mean) > 1e-12:
                raise ValidationError(f"custom_discrete noise must have mean 0, got {mean}")
        else:
            raise ValidationError(f"unknown noise kind {self.kind!r}")

    @property
    def variance(self) -> float:
        if self.kind == "gaussian":
            return self.sigma ** 2
        if self.kind == "uniform_bounded":
            return self.bound ** 2 / 3.0
        return math.fsum(v * v * p for v, p in zip(self.values, self.probs))

    @property
    def M(self) -> float | None:
        """Almost-sure noise bound, None for unbounded kinds."""
        if self.kind == "uniform_bounded":
            return self.bound
        if self.kind == "custom_discrete":
            return max(abs(v) for v in self.values)
        return None

    def sample(self, n: int, seed: int | None = None) -> np.ndarray:
        rng = _rng(self.seed if seed is None else seed, _STREAM_NOISE)
        if self.kind == "gaussian":
            return rng.normal(0.0, self.sigma, size=n)
        if self.kind == "uniform_bounded":
            return rng.uniform(-self.bound, self.bound, size=n)
        return rng.choice(np.asarray(self.values, dtype=np.float64), size=n,
                          p=np.asarray(self.probs, dtype=np.float64))


def apply_noise(truth: GroundTruth, noise: NoiseModel, seed: int | None = None) -> np.ndarray:
    """Observed activities: true activity plus one draw of the noise channel."""
    return truth.A + noise.sample(truth.n, seed=seed)


@dataclass(frozen=True)
class AdversaryStrategy:
    kind: str = "none"            # none | weak_local | strong_global | multi_step
    influence_value: float = 1e6
    max_steps: int = 10

    def __post_init__(self):
        if self.kind not in ("none", "weak_local", "strong_global", "multi_step"):
            raise ValidationError(f"unknown adversary kind {self.kind!r}")


def adversary_act(truth: GroundTruth, observations: np.ndarray, scan: ScanResult,
                  strategy: AdversaryStrategy):
    """One adversary move: raise the activity of targeted active vertices.

    weak_local and multi_step target active vertices inside the selected
    neighborhood; strong_global targets every active vertex.  Inactive
    vertices are never touched, and observations keep their original realized
    noise, so X is re-derived as mutated A plus the unchanged residuals.

    Returns (mutated truth, mutated observations, mutated vertex ids).
    """
    if strategy.kind == "none":
        raise ValidationError("adversary_act called with the 'none' strategy")
    if strategy.influence_value < truth.b:
        raise ValidationError(
            "influence value would break the active/inactive separation")
    if strategy.kind == "strong_global":
        targets = np.flatnonzero(truth.active)
    else:
        members = scan.selected.members
        targets = members[truth.active[members]]
    if not len(targets):
        return truth, observations, targets
    eps = observations - truth.A
    A2 = truth.A.copy()
    A2[targets] = strategy.influence_value
    truth2 = GroundTruth(a=truth.a, b=truth.b, A=A2, active=truth.active)
    return truth2, A2 + eps, targets


@dataclass(frozen=True)
class GameStep:
    root: int
    estimate: float
    active_in_selected: int
    mutated: tuple


@dataclass(frozen=True)
class GameRecord:
    steps: tuple
    n_w: int | None     # winning step index, None if max_steps exhausted
    won: bool

    @property
    def final_estimate(self) -> float:
        return self.steps[-1].estimate


def play_multistep_game(g: AttributedGraph, truth: GroundTruth, noise: NoiseModel,
                        k: int, strategy: AdversaryStrategy,
                        max_steps: int | None = None, seed: int | None = None,
                        workers: int | None = None) -> GameRecord:
    """Alternate scans and adversary moves until a clean neighborhood wins.

    The game is won at the first step whose selected neighborhood contains no
    active vertex; the adversary then has nothing left to influence there.
    The noise realization is drawn once and never redrawn.
    """
    if max_steps is None:
        max_steps = strategy.max_steps
    x = apply_noise(truth, noise, seed=seed)
    g = set_observations(g, x)
    family = build_family(g, k, workers=workers)
    steps = []
    for step in range(max_steps + 1):
        scan = scan_sublevel(g, family, workers=workers)
        members = scan.selected.members
        n_active = int(truth.active[members].sum())
        if n_active == 0:
            steps.append(GameStep(scan.selected.root, scan.estimate, 0, ()))
            return GameRecord(steps=tuple(steps), n_w=step, won=True)
        if step == max_steps:
            steps.append(GameStep(scan.selected.root, scan.estimate, n_active, ()))
            break
        truth, x, mutated = adversary_act(truth, x, scan, strategy)
        steps.append(GameStep(scan.selected.root, scan.estimate, n_active,
                              tuple(int(v) for v in mutated)))
        g = set_observations(g, x)
    return GameRecord(steps=tuple(steps), n_w=None, won=False)


def run_adversary_scenario(g: AttributedGraph, truth: GroundTruth, x: np.ndarray,
                           k: int, strategy: AdversaryStrategy,
                           workers: int | None = None):
    """Single-shot adversary experiment: scan, let the adversary act, re-scan.

    Returns (pre ScanResult, post ScanResult); with the 'none' strategy the
    two results are the same object.
    """
    g = set_observations(g, x)
    family = build_family(g, k, workers=workers)
    pre = scan_sublevel(g, family, workers=workers)
    if strategy.kind == "none":
        return pre, pre
    _, x2, mutated = adversary_act(truth, x, pre, strategy)
    if not len(mutated):
        return pre, pre
    g2 = set_observations(g, x2)
    post = scan_sublevel(g2, family, workers=workers)
    return pre, post


# --- Monte Carlo driver -----------------------------------------------------

@dataclass(frozen=True)
class ExperimentConfig:
    """Reproducible experiment description (JSON-serializable)."""

    spec: TwoSubgraphSpec
    noise: NoiseModel
    k_values: tuple
    seeds: tuple
    adversary: AdversaryStrategy = AdversaryStrategy()
    redraw_graph: bool = True      # redraw graph per seed, not only the noise
    histogram_bins: int = 20
    workers: int | None = None

    def to_json_dict(self) -> dict:
        d = {
            "spec": vars(self.spec) | {},
            "noise": {k: v for k, v in vars(self.noise).items() if v is not None},
            "k_values": list(self.k_values),
            "seeds": list(self.seeds),
            "adversary": vars(self.adversary) | {},
            "redraw_graph": self.redraw_graph,
            "histogram_bins": self.histogram_bins,
        }
        return d

    @classmethod
    def from_json_dict(cls, d: dict) -> "ExperimentConfig":
        return cls(
            spec=TwoSubgraphSpec(**d["spec"]),
            noise=NoiseModel(**{k: tuple(v) if isinstance(v, list) else v
                                for k, v in d["noise"].items()}),
            k_values=tuple(d["k_values"]),
            seeds=tuple(d["seeds"]),
            adversary=AdversaryStrategy(**d.get("adversary", {})),
            redraw_graph=d.get("redraw_graph", True),
            histogram_bins=d.get("histogram_bins", 20),
        )


@dataclass(frozen=True)
class KSummary:
    k: int
    estimates: tuple
    mean: float
    variance: float
    histogram_counts: tuple
    histogram_edges: tuple
    n_w: tuple = ()       # winning step per seed (multi_step only)

    def to_json_dict(self) -> dict:
        d = {
            "k": self.k,
            "mean": self.mean,
            "variance": self.variance,
            "estimates": list(self.estimates),
            "histogram_counts": list(self.histogram_counts),
            "histogram_edges": list(self.histogram_edges),
        }
        if self.n_w:
            nw = [s for s in self.n_w]
            d["n_w"] = nw
            d["n_w_counts"] = {
                "0": nw.count(0), "1": nw.count(1), "2": nw.count(2),
                "3": nw.count(3), ">=4": sum(1 for s in nw if s is None or s >= 4),
            }
        return d


def run_monte_carlo(config: ExperimentConfig) -> dict:
    """Run the configured experiment; returns {k: KSummary}.

    Per seed the graph is regenerated (or reused, with only the noise
    redrawn, when redraw_graph is off) and each requested k is scanned.
    """
    if not config.k_values:
        raise ValidationError("at least one k value required")
    if not config.seeds:
        raise ValidationError("at least one seed required")
    base_graph = base_truth = None
    if not config.redraw_graph:
        base_graph, base_truth = generate_two_subgraph(config.spec)

    per_k = {k: {"est": [], "n_w": []} for k in config.k_values}
    for seed in config.seeds:
        if config.redraw_graph:
            g, truth = generate_two_subgraph(replace(config.spec, seed=seed))
        else:
            g, truth = base_graph, base_truth
        for k in config.k_values:
            if config.adversary.kind == "multi_step":
                rec = play_multistep_game(g, truth, config.noise, k,
                                          config.adversary, seed=seed,
                                          workers=config.workers)
                per_k[k]["est"].append(rec.final_estimate)
                per_k[k]["n_w"].append(rec.n_w)
            elif config.adversary.kind == "none":
                x = apply_noise(truth, config.noise, seed=seed)
                gg = set_observations(g, x)
                fam = build_family(gg, k, workers=config.workers)
                per_k[k]["est"].append(scan_sublevel(gg, fam, workers=config.workers).estimate)
            else:
                x = apply_noise(truth, config.noise, seed=seed)
                _, post = run_adversary_scenario(g, truth, x, k, config.adversary,
                                                 workers=config.workers)
                per_k[k]["est"].append(post.estimate)

    out = {}
    for k in config.k_values:
        est = np.asarray(per_k[k]["est"])
        counts, edges = np.histogram(est, bins=config.histogram_bins)
        out[k] = KSummary(
            k=k,
            estimates=tuple(float(e) for e in est),
            mean=float(est.mean()),
            variance=float(est.var(ddof=1)) if len(est) > 1 else 0.0,
            histogram_counts=tuple(int(c) for c in counts),
            histogram_edges=tuple(float(e) for e in edges),
            n_w=tuple(per_k[k]["n_w"]),
        )
    return out
