import json
import math
import random
from functools import reduce

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import graphscan as gs
from graphscan.errors import FamilyError, ValidationError

from conftest import (adjacency_dict, oracle_exact_members,
                      random_connected_graph)


def brute_force_scan(g, x, k, mode):
    """Independent scan: materialize every admissible neighborhood, average
    with math.fsum, pick the extremum with smallest-root tie-breaking."""
    adj = adjacency_dict(g)
    best = None
    ties = []
    for v in range(g.n):
        members = oracle_exact_members(adj, v, k)
        if members is None:
            continue
        avg = math.fsum(x[m] for m in members) / k
        if best is None or (avg < best if mode == gs.SUBLEVEL else avg > best):
            best, ties = avg, [v]
        elif avg == best:
            ties.append(v)
    return best, ties


class TestScan:
    def test_two_triangles_sublevel(self, two_triangle_graph):
        g = two_triangle_graph
        fam = gs.build_family(g, 3, workers=1)
        res = gs.scan_sublevel(g, fam)
        assert res.estimate == 0.0
        assert res.selected.root == 0
        assert set(res.ties) == {0, 1, 2}
        assert res.selected.members.tolist() == [0, 1, 2]

    def test_two_triangles_superlevel(self, two_triangle_graph):
        g = two_triangle_graph
        fam = gs.build_family(g, 3, workers=1)
        res = gs.scan_superlevel(g, fam)
        assert res.estimate == 9.0
        assert set(res.ties) <= {3, 4, 5}
        assert res.selected.members.tolist() == [3, 4, 5]

    def test_matches_brute_force_scan(self):
        rng = random.Random(17)
        np_rng = np.random.default_rng(17)
        for _ in range(20):
            n = rng.randrange(4, 40)
            g = random_connected_graph(rng, n, rng.randrange(0, 2 * n))
            x = np_rng.normal(size=n)
            gx = gs.set_observations(g, x)
            k = rng.randrange(1, n + 1)
            fam = gs.build_family(gx, k, workers=1)
            for mode in (gs.SUBLEVEL, gs.SUPERLEVEL):
                want_avg, want_ties = brute_force_scan(g, gx.observed, k, mode)
                res = gs.scan_sublevel(gx, fam) if mode == gs.SUBLEVEL \
                    else gs.scan_superlevel(gx, fam)
                assert res.per_vertex_avg[res.selected.root] == want_avg
                assert list(res.ties) == want_ties
                assert res.selected.root == want_ties[0]

    def test_sublevel_superlevel_duality(self):
        """Superlevel scan of x is the exact mirror of a sublevel scan of -x."""
        rng = random.Random(19)
        np_rng = np.random.default_rng(19)
        for _ in range(10):
            n = rng.randrange(4, 30)
            g = random_connected_graph(rng, n, rng.randrange(0, 2 * n))
            x = np_rng.normal(size=n)
            k = rng.randrange(1, n + 1)
            hi = gs.scan_superlevel(gs.set_observations(g, x),
                                    gs.build_family(gs.set_observations(g, x), k, workers=1))
            lo = gs.scan_sublevel(gs.set_observations(g, -x),
                                  gs.build_family(gs.set_observations(g, -x), k, workers=1))
            assert hi.selected.root == lo.selected.root
            assert hi.estimate == -lo.estimate

    def test_estimate_exact_on_constant_neighborhood(self):
        rng = random.Random(23)
        for _ in range(40):
            n = rng.randrange(3, 20)
            g = random_connected_graph(rng, n, rng.randrange(0, 2 * n))
            a = rng.uniform(-1e6, 1e6)
            gx = gs.set_observations(g, np.full(n, a))
            res = gs.scan_sublevel(gx, gs.build_family(gx, rng.randrange(1, n + 1), workers=1))
            assert res.estimate == a

    def test_shift_equivariance_of_estimate(self):
        rng = random.Random(29)
        np_rng = np.random.default_rng(29)
        g = random_connected_graph(rng, 30, 40)
        x = np_rng.normal(size=30)
        for shift in (1.0, -256.0, 0.03125):
            r0 = gs.scan_sublevel(gs.set_observations(g, x),
                                  gs.build_family(gs.set_observations(g, x), 7, workers=1))
            r1 = gs.scan_sublevel(gs.set_observations(g, x + shift),
                                  gs.build_family(gs.set_observations(g, x + shift), 7, workers=1))
            assert r1.estimate == r0.estimate + shift

    def test_requires_observations(self, two_triangle_graph):
        g = two_triangle_graph
        fam = gs.build_family(g, 3, workers=1)
        import dataclasses
        bare = dataclasses.replace(g, observed=None)
        with pytest.raises(ValidationError):
            gs.scan_sublevel(bare, fam)

    def test_result_serialization(self, two_triangle_graph, tmp_path):
        g = two_triangle_graph
        res = gs.scan_sublevel(g, gs.build_family(g, 3, workers=1))
        path = tmp_path / "res.json"
        res.save_json(path)
        d = json.loads(path.read_text())
        assert d == {"k": 3, "mode": "sublevel", "root": 0, "estimate": 0.0,
                     "ties": [0, 1, 2], "skipped_count": 0}
        avg_path = tmp_path / "avg.csv"
        res.dump_averages_csv(avg_path)
        lines = avg_path.read_text().splitlines()
        assert lines[0] == "root,average"
        assert len(lines) == 7


class TestPhaseSplit:
    def test_phase1_fresh_observations_recompute(self, two_triangle_graph):
        g = two_triangle_graph
        fam = gs.build_family(g, 3, workers=1)
        x2 = np.array([1.0, 1.0, 1.0, 5.0, 5.0, 5.0])
        g2 = gs.set_observations(g, x2)
        avg = gs.scan_phase1(g2, fam, workers=1)
        assert avg.tolist() == [1.0, 1.0, 1.0, 11.0 / 3, 5.0, 5.0]

    def test_phase2_reduction_order_invariance(self):
        rng = random.Random(37)
        for _ in range(50):
            pairs = [(v, rng.choice([0.0, 1.0, rng.random()]))
                     for v in range(rng.randrange(1, 12))]
            for mode in (gs.SUBLEVEL, gs.SUPERLEVEL):
                seq = list(pairs)
                rng.shuffle(seq)
                from graphscan.estimators import phase2_combine
                left = reduce(lambda b, c: phase2_combine(b, c, mode), seq, None)
                # compare against a balanced tree reduction
                def tree(items):
                    if len(items) == 1:
                        return items[0]
                    mid = len(items) // 2
                    return phase2_combine(tree(items[:mid]), tree(items[mid:]), mode)
                assert left == tree(seq)

    def test_phase2_matches_full_scan(self):
        rng = random.Random(41)
        np_rng = np.random.default_rng(41)
        g = random_connected_graph(rng, 40, 60)
        gx = gs.set_observations(g, np_rng.normal(size=40))
        fam = gs.build_family(gx, 5, workers=1)
        avg = gs.scan_phase1(gx, fam)
        from graphscan.estimators import phase2_combine
        best = None
        for v in range(40):
            if not math.isnan(avg[v]):
                best = phase2_combine(best, (v, avg[v]), gs.SUBLEVEL)
        root, value, _ = gs.scan_phase2(avg, gs.SUBLEVEL)
        assert (root, value) == best

    def test_phase2_all_nan(self):
        with pytest.raises(FamilyError):
            gs.scan_phase2(np.array([np.nan, np.nan]))


class TestShiftedMean:
    @settings(max_examples=100, deadline=None)
    @given(st.lists(st.floats(-1e9, 1e9), min_size=1, max_size=50),
           st.sampled_from([gs.SUBLEVEL, gs.SUPERLEVEL]))
    def test_close_to_fsum_mean(self, vals, mode):
        arr = np.array(vals)
        got = gs.shifted_mean(arr, mode)
        want = math.fsum(vals) / len(vals)
        assert got == pytest.approx(want, rel=1e-12, abs=1e-6)

    @settings(max_examples=100, deadline=None)
    @given(st.floats(-1e12, 1e12), st.integers(1, 40))
    def test_exact_on_constants(self, a, k):
        assert gs.shifted_mean(np.full(k, a)) == a

    def test_neighborhood_sum_matches_fsum(self, two_triangle_graph):
        g = two_triangle_graph
        fam = gs.build_family(g, 4, workers=1)
        nb = fam.neighborhood(2)
        assert gs.neighborhood_sum(g, nb) == math.fsum(g.observed[nb.members])


class TestCrawler:
    def test_variance_and_cdf_small_example(self, two_triangle_graph):
        g = two_triangle_graph
        x = np.array([1.0, 2.0, 3.0, 9.0, 9.0, 9.0])
        gx = gs.set_observations(g, x)
        res = gs.scan_sublevel(gx, gs.build_family(gx, 3, workers=1))
        assert res.selected.members.tolist() == [0, 1, 2]
        assert res.estimate == 2.0
        est = gs.crawler_estimates(gx, res)
        assert est.sigma2_hat == 1.0
        assert est.cdf(0.5) == 0.0
        assert est.cdf(1.0) == pytest.approx(1 / 3)
        assert est.cdf(2.5) == pytest.approx(2 / 3)
        assert est.cdf(100.0) == 1.0
        assert est.cdf([1.0, 3.0]) == pytest.approx([1 / 3, 1.0])

    def test_rejects_superlevel(self, two_triangle_graph):
        g = two_triangle_graph
        res = gs.scan_superlevel(g, gs.build_family(g, 3, workers=1))
        with pytest.raises(ValidationError):
            gs.crawler_estimates(g, res)

    def test_cdf_dump(self, two_triangle_graph, tmp_path):
        g = two_triangle_graph
        res = gs.scan_sublevel(g, gs.build_family(g, 3, workers=1))
        est = gs.crawler_estimates(g, res)
        p = tmp_path / "cdf.csv"
        est.dump_csv(p)
        assert p.read_text().splitlines()[0] == "t,F"
