"""Reverse-time ancestry of a recorded particle trajectory.

Observing ``n`` of the final-generation particles (the leaves) induces a
partition process: two leaves sit in the same block after ``s`` reverse
steps when their ancestral lines have met by then.  Blocks only merge as
``s`` grows.

Given the offspring counts of one resampling step, the probability that
a set of lineages coalesces according to a prescribed block merge has a
closed falling-factorial form (``mohle_transition``).  Its independent
check here (``brute_force_transition``) enumerates every parent
assignment consistent with the offspring counts, all equally likely,
and counts the assignments that realize the merge.  Both evaluate in
exact integer arithmetic and convert to float at the boundary.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

import numpy as np

from .errors import CoarseningError, ParameterError, ResourceError

__all__ = [
    "Partition",
    "MergeSpec",
    "parse_partition",
    "merge_spec",
    "mohle_transition",
    "brute_force_transition",
    "partition_at",
    "mrca_time",
    "all_partitions",
    "coarsenings",
]

# Permutation budget for the falling-factorial sum; beyond this the
# enumeration-based evaluation is refused rather than left to crawl.
_PERMUTATION_LIMIT = 2_000_000


@dataclass(frozen=True)
class Partition:
    """Canonical partition of {1, ..., n}.

    Blocks are ordered by least element, elements ascending inside each
    block.  Instances compare and hash by value; build them through
    :meth:`from_blocks` or :func:`parse_partition` so the canonical form
    and the cover/disjointness checks are enforced.
    """

    blocks: tuple[tuple[int, ...], ...]
    n: int

    @classmethod
    def from_blocks(cls, blocks) -> "Partition":
        canon = []
        seen: set[int] = set()
        for block in blocks:
            elems = sorted(int(e) for e in block)
            if not elems:
                raise ParameterError("empty block in partition")
            for e in elems:
                if e < 1:
                    raise ParameterError(f"partition elements start at 1, got {e}")
                if e in seen:
                    raise ParameterError(f"duplicate element {e} in partition")
                seen.add(e)
            canon.append(tuple(elems))
        if not canon:
            raise ParameterError("partition needs at least one block")
        n = max(seen)
        if len(seen) != n:
            missing = sorted(set(range(1, n + 1)) - seen)
            raise ParameterError(f"partition has gaps, missing {missing}")
        canon.sort(key=lambda b: b[0])
        return cls(blocks=tuple(canon), n=n)

    @classmethod
    def discrete(cls, n: int) -> "Partition":
        if n < 1:
            raise ParameterError("ground set must be nonempty")
        return cls(blocks=tuple((i,) for i in range(1, n + 1)), n=n)

    @classmethod
    def single_block(cls, n: int) -> "Partition":
        if n < 1:
            raise ParameterError("ground set must be nonempty")
        return cls(blocks=(tuple(range(1, n + 1)),), n=n)

    @property
    def block_count(self) -> int:
        return len(self.blocks)

    def block_index_of(self) -> dict[int, int]:
        """Map each element to the index of its block."""
        out = {}
        for i, block in enumerate(self.blocks):
            for e in block:
                out[e] = i
        return out

    def __str__(self) -> str:
        return "|".join(",".join(str(e) for e in block) for block in self.blocks)


def parse_partition(text: str) -> Partition:
    """Parse the ``1,2|3`` grammar: ``|`` separates blocks, ``,`` elements."""
    blocks = []
    for part in text.strip().split("|"):
        items = [s.strip() for s in part.split(",")]
        if any(not s for s in items):
            raise ParameterError(f"malformed partition text: {text!r}")
        try:
            blocks.append([int(s) for s in items])
        except ValueError as exc:
            raise ParameterError(f"malformed partition text: {text!r}") from exc
    return Partition.from_blocks(blocks)


@dataclass(frozen=True)
class MergeSpec:
    """How many source blocks merged into each target block, in target
    block order."""

    b: tuple[int, ...]


def merge_spec(xi: Partition, eta: Partition) -> Optional[MergeSpec]:
    """Merge multiplicities of ``eta`` relative to ``xi``.

    Returns ``None`` when ``eta`` is not a coarsening of ``xi`` (some block
    of ``xi`` straddles two blocks of ``eta``, or ``eta`` refines ``xi``).
    """
    if xi.n != eta.n:
        raise ParameterError(
            f"partitions on different ground sets: {xi.n} vs {eta.n}"
        )
    eta_index = eta.block_index_of()
    counts = [0] * eta.block_count
    for block in xi.blocks:
        targets = {eta_index[e] for e in block}
        if len(targets) != 1:
            return None
        counts[targets.pop()] += 1
    return MergeSpec(b=tuple(counts))


def _falling(x: int, b: int) -> int:
    out = 1
    for k in range(b):
        out *= x - k
        if out == 0:
            return 0
    return out


def _as_counts(nu, N: int) -> np.ndarray:
    counts = np.asarray(getattr(nu, "counts", nu), dtype=np.int64)
    if counts.ndim != 1 or counts.shape[0] != N:
        raise ParameterError(f"offspring counts must have length N={N}")
    if np.any(counts < 0):
        raise ParameterError("offspring counts must be nonnegative")
    if int(counts.sum()) != N:
        raise ParameterError(
            f"offspring counts must sum to N={N}, got {int(counts.sum())}"
        )
    return counts


def mohle_transition(xi: Partition, eta: Partition, nu, N: int) -> float:
    """Coalescence probability of one reverse step by the falling-factorial
    formula.

    With ``k`` target blocks and merge multiplicities ``b_1..b_k``, sums
    ``prod_j (nu[i_j])_(b_j)`` over ordered tuples of ``k`` distinct parent
    indices and divides by ``(N)_(|xi|)``.  Exact integer accumulation; the
    result is converted to float once.
    """
    N = int(N)
    counts = _as_counts(nu, N)
    if xi.block_count > N:
        raise ParameterError("more lineages than particles")
    ms = merge_spec(xi, eta)
    if ms is None:
        raise CoarseningError(f"{eta} is not a coarsening of {xi}")
    b = ms.b
    k = len(b)

    positive = [i for i in range(N) if counts[i] > 0]
    n_perms = _falling(len(positive), k)
    if n_perms > _PERMUTATION_LIMIT:
        raise ResourceError(
            f"{n_perms} index tuples exceed the enumeration budget"
        )
    total = 0
    for idx in itertools.permutations(positive, k):
        term = 1
        for j in range(k):
            term *= _falling(int(counts[idx[j]]), b[j])
            if term == 0:
                break
        total += term
    return float(Fraction(total, _falling(N, xi.block_count)))


def _multiset_permutations(values: list[int]):
    """All distinct orderings of ``values`` (with repeats), as tuples."""
    values = sorted(values)
    n = len(values)
    distinct = sorted(set(values))
    remaining = {v: values.count(v) for v in distinct}
    prefix: list[int] = []

    def rec():
        if len(prefix) == n:
            yield tuple(prefix)
            return
        for v in distinct:
            if remaining[v] > 0:
                remaining[v] -= 1
                prefix.append(v)
                yield from rec()
                prefix.pop()
                remaining[v] += 1

    yield from rec()


def brute_force_transition(xi: Partition, eta: Partition, nu, N: int) -> float:
    """Coalescence probability of one reverse step by direct enumeration.

    Every parent-assignment vector with the given offspring counts is
    equally likely.  One representative child hosts each lineage (children
    ``1..|xi|``; any distinct choice is equivalent by exchangeability), and
    the returned value is the exact fraction of assignments whose induced
    block merge equals ``eta``.  Only feasible for ``N <= 8``.
    """
    N = int(N)
    if N > 8:
        raise ResourceError(f"brute-force enumeration is limited to N <= 8, got {N}")
    counts = _as_counts(nu, N)
    if xi.block_count > N:
        raise ParameterError("more lineages than particles")
    ms = merge_spec(xi, eta)
    if ms is None:
        raise CoarseningError(f"{eta} is not a coarsening of {xi}")

    # Target grouping of xi's blocks: lineages j, l merge iff group[j] == group[l].
    eta_index = eta.block_index_of()
    k = xi.block_count
    group = [eta_index[block[0]] for block in xi.blocks]

    parent_pool = []
    for i in range(N):
        parent_pool.extend([i + 1] * int(counts[i]))

    matches = 0
    total = 0
    for assignment in _multiset_permutations(parent_pool):
        total += 1
        value_of_group: dict[int, int] = {}
        used_values: set[int] = set()
        ok = True
        for j in range(k):
            g = group[j]
            v = assignment[j]
            if g in value_of_group:
                if value_of_group[g] != v:
                    ok = False
                    break
            else:
                if v in used_values:
                    ok = False
                    break
                value_of_group[g] = v
                used_values.add(v)
        if ok:
            matches += 1
    return float(Fraction(matches, total))


def partition_at(trajectory, n: int, s: int) -> Partition:
    """Ancestral partition of leaves ``1..n`` after ``s`` reverse steps.

    ``s = 0`` gives the discrete partition; leaves share a block at ``s``
    exactly when their iterated parent pointers agree.
    """
    n = int(n)
    s = int(s)
    if not 1 <= n <= trajectory.N:
        raise ParameterError(f"need 1 <= n <= N={trajectory.N}, got n={n}")
    if not 0 <= s <= trajectory.T:
        raise ParameterError(f"need 0 <= s <= T={trajectory.T}, got s={s}")
    cur = np.arange(1, n + 1, dtype=np.int64)
    for step in range(s):
        cur = trajectory.ancestors[trajectory.T - 1 - step][cur - 1]
    groups: dict[int, list[int]] = {}
    for leaf, anc in enumerate(cur, start=1):
        groups.setdefault(int(anc), []).append(leaf)
    return Partition.from_blocks(groups.values())


def mrca_time(trajectory, n: int) -> Optional[int]:
    """Smallest reverse time at which leaves ``1..n`` share one ancestor.

    Returns ``None`` when the lineages never fully coalesce within the
    recorded horizon.  ``n = 1`` returns 0.
    """
    n = int(n)
    if not 1 <= n <= trajectory.N:
        raise ParameterError(f"need 1 <= n <= N={trajectory.N}, got n={n}")
    if n == 1:
        return 0
    cur = np.arange(1, n + 1, dtype=np.int64)
    for s in range(1, trajectory.T + 1):
        cur = trajectory.ancestors[trajectory.T - s][cur - 1]
        if np.all(cur == cur[0]):
            return s
    return None


def all_partitions(n: int):
    """Yield every partition of {1, ..., n} in canonical form."""
    if n < 1:
        raise ParameterError("ground set must be nonempty")

    def rec(element: int, blocks: list[list[int]]):
        if element > n:
            yield Partition.from_blocks([list(b) for b in blocks])
            return
        for block in blocks:
            block.append(element)
            yield from rec(element + 1, blocks)
            block.pop()
        blocks.append([element])
        yield from rec(element + 1, blocks)
        blocks.pop()

    yield from rec(1, [])


def coarsenings(xi: Partition):
    """Yield every partition obtainable from ``xi`` by merging whole blocks
    (including ``xi`` itself)."""
    k = xi.block_count
    for grouping in all_partitions(k):
        merged = []
        for index_block in grouping.blocks:
            elems: list[int] = []
            for j in index_block:
                elems.extend(xi.blocks[j - 1])
            merged.append(elems)
        yield Partition.from_blocks(merged)
