"""Metropolis-Hastings sampling over graphs.

The kernel proposes a uniformly random dyad toggle and accepts with
probability min(1, exp(s * theta . delta)), where delta is the dyad's
change statistic and s is +1 for adding the edge, -1 for removing it. This
is the conditional log-odds form, so detailed balance with respect to the
model distribution holds by construction.

Randomness comes from numpy's PCG64 stream seeded from SamplerConfig.seed;
proposal dyads and acceptance uniforms are drawn in blocks, in that order,
which fixes the bit stream for golden tests. One chain is single threaded;
run independent chains with distinct seeds for parallelism.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .graph import AttributeTable, Graph
from .model import CompiledModel, ModelSpec, compile_model, dyad_list

_BLOCK = 1 << 15


@dataclass(frozen=True)
class SamplerConfig:
    """Chain controls. burn_in / thin of None mean 10*n^2 and n^2 proposals."""

    burn_in: int | None = None
    thin: int | None = None
    sample_count: int = 1
    seed: int = 0

    def __post_init__(self):
        if self.burn_in is not None and self.burn_in < 0:
            raise ConfigError("burn_in must be >= 0")
        if self.thin is not None and self.thin < 1:
            raise ConfigError("thin must be >= 1")
        if self.sample_count < 1:
            raise ConfigError("sample_count must be >= 1")

    def resolve(self, n: int) -> tuple[int, int]:
        burn = 10 * n * n if self.burn_in is None else self.burn_in
        thin = max(1, n * n) if self.thin is None else self.thin
        return burn, thin


class ChainState:
    """Private mutable chain state: dyad bits, degrees, running statistics."""

    def __init__(self, g0: Graph, theta: np.ndarray, model: ModelSpec, attrs: AttributeTable):
        theta = np.asarray(theta, dtype=np.float64)
        if not np.all(np.isfinite(theta)):
            raise ValueError("theta must be finite")
        cm = compile_model(model, attrs, g0.n)
        if len(theta) != cm.p:
            raise ValueError(f"theta has length {len(theta)}, model needs {cm.p}")
        self.n = g0.n
        self.cm = cm
        self.theta = theta
        self.dyads = dyad_list(g0.n)
        self.dyad_pairs = [(int(a), int(b)) for a, b in self.dyads]
        self.D = len(self.dyads)
        self.bits = [0] * self.D
        for i, j in g0.edges:
            self.bits[_dyad_pos(g0.n, i, j)] = 1
        self.deg = [int(d) for d in g0.degrees()]
        # static part: change rows of every dyad-independent term; these do
        # not depend on the current graph so they are computed once
        X = _static_rows(cm)
        self.eta = [float(v) for v in X @ theta]
        self.sparse = _sparsify(X)
        self.gw_offset = cm._gw_offset
        if self.gw_offset is not None:
            self.theta_gw = float(theta[self.gw_offset])
            self.wdiff = [float(v) for v in cm._wdiff]
        else:
            self.theta_gw = 0.0
            self.wdiff = None
        self.stats = cm.statistics(g0)

    def graph(self) -> Graph:
        edges = [tuple(self.dyads[d]) for d in range(self.D) if self.bits[d]]
        return Graph(self.n, edges)

    def revalidate(self, tol: float = 1e-9) -> None:
        """Check incrementally maintained statistics against a recompute."""
        fresh = self.cm.statistics(self.graph())
        drift = float(np.max(np.abs(fresh - self.stats))) if self.cm.p else 0.0
        if drift > tol:
            raise RuntimeError(f"incremental statistic drift {drift:g} exceeds {tol:g}")
        self.stats = fresh


def _dyad_pos(n: int, i: int, j: int) -> int:
    if i > j:
        i, j = j, i
    return i * n - i * (i + 1) // 2 + (j - i - 1)


def _static_rows(cm: CompiledModel) -> np.ndarray:
    empty = Graph(cm.n)
    X, _ = cm.design_matrix(empty)
    if cm._gw_offset is not None:
        X = X.copy()
        X[:, cm._gw_offset] = 0.0
    return X

def _sparsify(X: np.ndarray) -> list[tuple[tuple[int, float], ...]]:
    rows = []
    for r in range(X.shape[0]):
        nz = np.nonzero(X[r])[0]
        rows.append(tuple((int(k), float(X[r, k])) for k in nz))
    return rows


def mh_step(state: ChainState, rng: np.random.Generator) -> bool:
    """One toggle proposal; the state is updated in place on acceptance."""
    d = int(rng.integers(0, state.D))
    u = float(rng.random())
    return _apply(state, d, u)


def _apply(state: ChainState, d: int, u: float) -> bool:
    bits = state.bits
    bit = bits[d]
    i, j = state.dyad_pairs[d]
    deg = state.deg
    if bit:
        sign = -1
        bi, bj = deg[i] - 1, deg[j] - 1
    else:
        sign = 1
        bi, bj = deg[i], deg[j]
    gw = 0.0
    if state.wdiff is not None:
        gw = state.wdiff[bi] + state.wdiff[bj]
    logodds = sign * (state.eta[d] + state.theta_gw * gw)
    if logodds < 0.0 and u >= math.exp(logodds):
        return False
    stats = state.stats
    for k, v in state.sparse[d]:
        stats[k] += sign * v
    if state.gw_offset is not None:
        stats[state.gw_offset] += sign * gw
    deg[i] += sign
    deg[j] += sign
    bits[d] = 1 - bit
    return True


def sample(
    g0: Graph,
    theta: np.ndarray,
    model: ModelSpec,
    attrs: AttributeTable,
    cfg: SamplerConfig,
    keep_graphs: bool = True,
) -> tuple[list[Graph], np.ndarray]:
    """Run one chain; return retained graphs and their statistic vectors.

    Retains a sample every ``thin`` proposals after ``burn_in`` proposals.
    The statistics are maintained incrementally and re-validated against a
    full recompute on the final sample. Fully determined by inputs + seed.
    """
    state = ChainState(g0, theta, model, attrs)
    burn, thin = cfg.resolve(g0.n)
    rng = np.random.Generator(np.random.PCG64(cfg.seed))
    total = burn + thin * cfg.sample_count
    retained_stats = np.empty((cfg.sample_count, state.cm.p))
    graphs: list[Graph] = []
    done = 0
    next_retain = burn + thin
    kept = 0
    while done < total:
        block = min(_BLOCK, total - done)
        ds = rng.integers(0, state.D, size=block).tolist()
        us = rng.random(block).tolist()
        apply = _apply
        for k in range(block):
            apply(state, ds[k], us[k])
            done += 1
            if done == next_retain:
                retained_stats[kept] = state.stats
                if keep_graphs:
                    graphs.append(state.graph())
                kept += 1
                next_retain += thin
    state.revalidate()
    return graphs, retained_stats


def write_stats_trace(path, names: tuple[str, ...], stats: np.ndarray) -> None:
    """One CSV row per retained sample, for mixing diagnostics."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(",".join(names) + "\n")
        for row in stats:
            fh.write(",".join(repr(float(v)) for v in row) + "\n")
