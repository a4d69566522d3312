"""Forward simulation of a weighted resampling particle system.

Each generation, every particle is assigned a weight proportional to its
potential; children pick parents by i.i.d. categorical draws from those
weights and then move through the transition kernel.  The full record
(positions, weights, parent indices) of every generation is kept so the
genealogy can be read back later.

Randomness contract: one uniform is consumed per draw, through inverse
transform over index-ordered cumulative weights, in this fixed order per
run: N initial-position draws, then for each step first N parent draws,
then N kernel moves.  Identical (model, N, T, seed) give bit-identical
trajectories.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .analytic import CounterexampleParams
from .errors import ParameterError
from .rng import check_seed, make_rng

__all__ = [
    "DiscreteModel",
    "Trajectory",
    "OffspringCounts",
    "two_state_model",
    "categorical_ancestors",
    "simulate",
    "offspring_counts",
]

_SUM_TOL = 1e-12


def _readonly(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class DiscreteModel:
    """Finite-state model: display labels, initial law, row-stochastic
    kernel, strictly positive potential."""

    labels: tuple[str, ...]
    initial_law: np.ndarray
    kernel: np.ndarray
    potential: np.ndarray

    def __post_init__(self):
        labels = tuple(str(x) for x in self.labels)
        if not labels:
            raise ParameterError("model needs at least one state")
        s = len(labels)
        law = np.asarray(self.initial_law, dtype=float).copy()
        kernel = np.asarray(self.kernel, dtype=float).copy()
        pot = np.asarray(self.potential, dtype=float).copy()
        if law.shape != (s,):
            raise ParameterError(f"initial_law must have shape ({s},)")
        if np.any(law < 0) or abs(law.sum() - 1.0) > _SUM_TOL:
            raise ParameterError("initial_law must be a probability vector")
        if kernel.shape != (s, s):
            raise ParameterError(f"kernel must have shape ({s}, {s})")
        if np.any(kernel < 0) or np.any(np.abs(kernel.sum(axis=1) - 1.0) > _SUM_TOL):
            raise ParameterError("kernel rows must be probability vectors")
        if pot.shape != (s,) or np.any(pot <= 0) or not np.all(np.isfinite(pot)):
            raise ParameterError("potential must be strictly positive")
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "initial_law", _readonly(law))
        object.__setattr__(self, "kernel", _readonly(kernel))
        object.__setattr__(self, "potential", _readonly(pot))

    @property
    def state_count(self) -> int:
        return len(self.labels)


def two_state_model(params: CounterexampleParams) -> DiscreteModel:
    """Two states a/b, initial law (alpha, 1-alpha), identity kernel,
    potentials (p_a, p_b)."""
    return DiscreteModel(
        labels=("a", "b"),
        initial_law=np.array([params.alpha, 1.0 - params.alpha]),
        kernel=np.eye(2),
        potential=np.array([params.p_a, params.p_b]),
    )


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Complete record of one run.

    ``positions[g, i]`` is the 0-based state index of particle ``i+1`` in
    generation ``g`` (g = 0..T, forward order).  ``weights`` holds the
    normalized potentials of each generation.  ``ancestors[g, i]`` is the
    1-based parent, in generation ``g``, of particle ``i+1`` in generation
    ``g+1`` (g = 0..T-1).  Arrays are read-only after construction.
    """

    N: int
    T: int
    seed: int
    labels: tuple[str, ...]
    positions: np.ndarray
    weights: np.ndarray
    ancestors: np.ndarray

    def __post_init__(self):
        n, t = int(self.N), int(self.T)
        if n < 1 or t < 0:
            raise ParameterError("trajectory needs N >= 1 and T >= 0")
        pos = np.asarray(self.positions, dtype=np.int64)
        wts = np.asarray(self.weights, dtype=float)
        anc = np.asarray(self.ancestors, dtype=np.int64)
        if anc.size == 0:
            anc = anc.reshape(t, n) if t == 0 else anc
        if pos.shape != (t + 1, n) or wts.shape != (t + 1, n):
            raise ParameterError("positions/weights must have shape (T+1, N)")
        if anc.shape != (t, n):
            raise ParameterError("ancestors must have shape (T, N)")
        if t and (np.any(anc < 1) or np.any(anc > n)):
            raise ParameterError("ancestor indices must lie in 1..N")
        object.__setattr__(self, "N", n)
        object.__setattr__(self, "T", t)
        object.__setattr__(self, "seed", check_seed(self.seed))
        object.__setattr__(self, "labels", tuple(str(x) for x in self.labels))
        object.__setattr__(self, "positions", _readonly(pos))
        object.__setattr__(self, "weights", _readonly(wts))
        object.__setattr__(self, "ancestors", _readonly(anc))


@dataclass(frozen=True, eq=False)
class OffspringCounts:
    """Children per parent for one resampling step; entries sum to the
    population size."""

    counts: np.ndarray

    def __post_init__(self):
        counts = np.asarray(self.counts, dtype=np.int64)
        if counts.ndim != 1 or counts.size < 1:
            raise ParameterError("offspring counts must be a nonempty vector")
        if np.any(counts < 0) or int(counts.sum()) != counts.size:
            raise ParameterError("offspring counts must be nonnegative and sum to N")
        object.__setattr__(self, "counts", _readonly(counts))

    @property
    def N(self) -> int:
        return int(self.counts.size)


def categorical_ancestors(weights, count: int, uniforms) -> np.ndarray:
    """Map uniforms to 1-based parent indices by inverse transform.

    Entry ``j`` is the unique ``k`` with
    ``cum(k-1) <= uniforms[j] < cum(k)`` for the index-ordered cumulative
    weights.  ``weights`` must sum to 1 within 1e-9.
    """
    w = np.asarray(weights, dtype=float)
    count = int(count)
    if w.ndim != 1 or w.size < 1:
        raise ParameterError("weights must be a nonempty vector")
    if np.any(w < 0) or abs(float(w.sum()) - 1.0) > 1e-9:
        raise ParameterError("weights must be nonnegative and sum to 1 (tol 1e-9)")
    if count < 1:
        raise ParameterError("count must be positive")
    u = np.asarray(uniforms, dtype=float)
    if u.ndim != 1 or u.size < count:
        raise ParameterError(f"need at least {count} uniforms, got {u.size}")
    u = u[:count]
    if np.any(u < 0) or np.any(u >= 1):
        raise ParameterError("uniforms must lie in [0, 1)")
    cum = np.cumsum(w)
    idx = np.searchsorted(cum, u, side="right")
    return np.minimum(idx, w.size - 1).astype(np.int64) + 1


def simulate(model: DiscreteModel, N: int, T: int, seed) -> Trajectory:
    """Run the particle system and record every generation.

    Generation 0 positions are i.i.d. from the initial law; each later
    generation is built by parent draws from the current normalized
    potentials followed by one kernel step per particle.
    """
    if not isinstance(model, DiscreteModel):
        raise ParameterError("model must be a DiscreteModel")
    N, T = int(N), int(T)
    if N < 1:
        raise ParameterError(f"need N >= 1, got {N}")
    if T < 0:
        raise ParameterError(f"need T >= 0, got {T}")
    seed = check_seed(seed)
    rng = make_rng(seed)

    g = model.potential
    init_cum = np.cumsum(model.initial_law)
    kernel_cum = np.cumsum(model.kernel, axis=1)
    last = model.state_count - 1

    positions = np.empty((T + 1, N), dtype=np.int64)
    weights = np.empty((T + 1, N), dtype=float)
    ancestors = np.empty((T, N), dtype=np.int64)

    u = rng.random(N)
    positions[0] = np.minimum(np.searchsorted(init_cum, u, side="right"), last)
    gv = g[positions[0]]
    weights[0] = gv / gv.sum()
    for t in range(T):
        ancestors[t] = categorical_ancestors(weights[t], N, rng.random(N))
        parent_state = positions[t][ancestors[t] - 1]
        u = rng.random(N)
        rows = kernel_cum[parent_state]
        positions[t + 1] = np.minimum(
            (rows <= u[:, None]).sum(axis=1), last
        )
        gv = g[positions[t + 1]]
        weights[t + 1] = gv / gv.sum()

    return Trajectory(
        N=N,
        T=T,
        seed=seed,
        labels=model.labels,
        positions=positions,
        weights=weights,
        ancestors=ancestors,
    )


def offspring_counts(ancestors, N: int) -> OffspringCounts:
    """Multiplicity of each parent index ``1..N`` in an ancestor vector."""
    N = int(N)
    a = np.asarray(ancestors, dtype=np.int64)
    if a.ndim != 1:
        raise ParameterError("ancestor vector must be one-dimensional")
    if np.any(a < 1) or np.any(a > N):
        raise ParameterError(f"ancestor indices must lie in 1..{N}")
    return OffspringCounts(counts=np.bincount(a, minlength=N + 1)[1:])
