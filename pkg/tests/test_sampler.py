from __future__ import annotations

import math

import numpy as np
import pytest

from ergmkit.errors import ConfigError
from ergmkit.exact import exact_distribution, exact_expected_stats
from ergmkit.graph import Graph
from ergmkit.model import Edges, GwDegree, ModelSpec, NodeMatch, statistics
from ergmkit.sampler import ChainState, SamplerConfig, mh_step, sample

from conftest import rng, two_level_attrs


EDGES = ModelSpec([Edges()])


class TestConfig:
    def test_defaults_scale_with_n(self):
        cfg = SamplerConfig()
        assert cfg.resolve(10) == (1000, 100)

    def test_invalid_rejected(self):
        with pytest.raises(ConfigError):
            SamplerConfig(sample_count=0)
        with pytest.raises(ConfigError):
            SamplerConfig(thin=0)
        with pytest.raises(ConfigError):
            SamplerConfig(burn_in=-1)


class TestMhStep:
    def test_zero_theta_always_accepts(self):
        attrs = two_level_attrs(5, 3)
        state = ChainState(Graph(5), np.zeros(1), EDGES, attrs)
        r = rng(1)
        assert all(mh_step(state, r) for _ in range(200))

    def test_strongly_negative_edges_keeps_empty_graph_absorbing(self):
        attrs = two_level_attrs(5, 3)
        state = ChainState(Graph(5), np.array([-50.0]), EDGES, attrs)
        r = rng(2)
        for _ in range(2000):
            mh_step(state, r)
        assert state.graph().edge_count == 0

    def test_long_run_density_matches_logit(self):
        # independent dyads: long-run tie probability is sigmoid(theta);
        # thinning well past n^2 keeps retained samples near-independent
        attrs = two_level_attrs(6, 3)
        target = 0.3
        theta = np.array([math.log(target / (1 - target))])
        cfg = SamplerConfig(burn_in=2000, thin=120, sample_count=10000, seed=9)
        _, stats = sample(Graph(6), theta, EDGES, attrs, cfg, keep_graphs=False)
        mean_edges = stats[:, 0].mean()
        want = 15 * target
        se = stats[:, 0].std() / math.sqrt(len(stats))
        assert abs(mean_edges - want) <= 3 * max(se, 1e-6)


class TestSample:
    def test_single_proposal_run(self):
        attrs = two_level_attrs(4, 2)
        cfg = SamplerConfig(burn_in=0, thin=1, sample_count=1, seed=5)
        g0 = Graph(4, [(0, 1)])
        graphs, stats = sample(g0, np.zeros(1), EDGES, attrs, cfg)
        assert len(graphs) == 1
        flipped = graphs[0].edges ^ g0.edges
        assert len(flipped) == 1  # theta=0 accepts, so exactly one toggle

    def test_uniform_mean_edge_count(self):
        attrs = two_level_attrs(5, 3)
        cfg = SamplerConfig(burn_in=1000, thin=10, sample_count=50000, seed=31)
        _, stats = sample(Graph(5), np.zeros(1), EDGES, attrs, cfg, keep_graphs=False)
        mean = stats[:, 0].mean()
        se = stats[:, 0].std() / math.sqrt(len(stats))
        assert abs(mean - 5.0) <= 3 * se

    def test_moments_match_enumeration(self):
        attrs = two_level_attrs(5, 3)
        model = ModelSpec([Edges(), NodeMatch("grp", differential=False)])
        theta = np.array([-0.5, 0.9])
        cfg = SamplerConfig(burn_in=2000, thin=25, sample_count=30000, seed=17)
        _, stats = sample(Graph(5), theta, model, attrs, cfg, keep_graphs=False)
        want = exact_expected_stats(exact_distribution(5, attrs, model, theta))
        se = stats.std(axis=0) / math.sqrt(len(stats))
        assert np.all(np.abs(stats.mean(axis=0) - want) <= 3 * np.maximum(se, 1e-9))

    def test_seed_determinism(self):
        attrs = two_level_attrs(5, 3)
        model = ModelSpec([Edges(), NodeMatch("grp")])
        theta = np.array([-0.2, 0.4, 0.1])
        cfg = SamplerConfig(burn_in=100, thin=5, sample_count=50, seed=77)
        g1, s1 = sample(Graph(5), theta, model, attrs, cfg)
        g2, s2 = sample(Graph(5), theta, model, attrs, cfg)
        assert g1 == g2
        np.testing.assert_array_equal(s1, s2)
        g3, _ = sample(Graph(5), theta, model, attrs, SamplerConfig(100, 5, 50, seed=78))
        assert g3 != g1

    def test_retained_stats_equal_full_recompute(self):
        attrs = two_level_attrs(6, 3)
        model = ModelSpec([Edges(), NodeMatch("grp"), GwDegree(0.5)])
        theta = np.array([-0.5, 0.6, 0.2, 0.3])
        cfg = SamplerConfig(burn_in=500, thin=30, sample_count=40, seed=13)
        graphs, stats = sample(Graph(6), theta, model, attrs, cfg)
        for g, row in zip(graphs, stats):
            np.testing.assert_allclose(
                row, statistics(g, attrs, model), atol=1e-9
            )

    def test_gwdegree_chain_matches_enumeration(self):
        attrs = two_level_attrs(5, 3)
        model = ModelSpec([Edges(), GwDegree(0.5)])
        theta = np.array([-0.8, 0.5])
        cfg = SamplerConfig(burn_in=3000, thin=30, sample_count=30000, seed=23)
        _, stats = sample(Graph(5), theta, model, attrs, cfg, keep_graphs=False)
        want = exact_expected_stats(exact_distribution(5, attrs, model, theta))
        se = stats.std(axis=0) / math.sqrt(len(stats))
        assert np.all(np.abs(stats.mean(axis=0) - want) <= 3.5 * np.maximum(se, 1e-9))

    def test_initial_graph_untouched(self):
        attrs = two_level_attrs(5, 3)
        g0 = Graph(5, [(0, 1), (2, 3)])
        before = set(g0.edges)
        sample(g0, np.zeros(1), EDGES, attrs, SamplerConfig(10, 2, 5, seed=3))
        assert set(g0.edges) == before
