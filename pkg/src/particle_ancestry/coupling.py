"""Coupled surrogate statistics for the two-step two-state system.

One realization shares its uniforms between the true system and two
surrogates built alongside it:

* a *hat* child count for root particle 1, computed by thresholding the
  same parent-draw uniforms against the deterministic weight
  ``g(root 1 state) / (N * mean potential)`` instead of the realized
  normalized weight.  It depends on the other roots only through nothing
  at all, which is the point.
* a *tilde* first mid particle obtained by skipping every child of root
  particle 1: scanning child indices 1, 2, ... (drawing fresh uniforms
  past N when needed) keeps the first N children whose parent is not
  root 1.  The tilde mid particle is the first kept child, and its tilde
  child count reuses the leaf uniforms with weights renormalized over
  the kept children.

The pair (tilde state, tilde count) is exactly independent of (root-1
state, hat count), and each surrogate coincides with its true
counterpart except on events of probability O(1/N) (tilde) and
O(1/sqrt(N)) (hat).  ``independence_test`` and ``mismatch_rates`` check
both statements empirically; statistical acceptance thresholds are
pinned to fixed seeds.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.stats import chi2 as chi2_dist

from .analytic import CounterexampleParams
from .errors import DegenerateTableError, ParameterError
from .rng import check_seed, make_rng

__all__ = [
    "CoupledDraw",
    "MismatchRow",
    "MismatchReport",
    "IndependenceResult",
    "coupled_draw",
    "mismatch_rates",
    "independence_test",
]

_WORKER_BLOCK = 4096  # replicates per task; tallies are order-independent ints


@dataclass(frozen=True)
class CoupledDraw:
    """One realization of the coupled system.

    States are the labels "a"/"b".  ``first_index`` is the position, in
    the extended child sequence, of the first child not attached to root
    particle 1 (it exceeds N only when all N real children attached).
    """

    x2_1: str
    nu2_1: int
    nu2_hat: int
    x1_1: str
    nu1_1: int
    x1_tilde: str
    nu1_tilde: int
    first_index: int
    seed: int

    def __post_init__(self):
        for name in ("nu2_1", "nu2_hat", "nu1_1", "nu1_tilde"):
            if getattr(self, name) < 0:
                raise ParameterError(f"{name} must be nonnegative")
        if self.first_index < 1:
            raise ParameterError("first_index must be >= 1")
        for name in ("x2_1", "x1_1", "x1_tilde"):
            if getattr(self, name) not in ("a", "b"):
                raise ParameterError(f"{name} must be 'a' or 'b'")


def _draw_core(al: float, pa: float, pb: float, N: int, rng) -> tuple:
    """One coupled realization.

    Draw order: N root-state uniforms, N parent-draw uniforms, lazy extra
    parent-draw uniforms one at a time until N children avoid root 1,
    then N leaf uniforms reused by both leaf assignments.
    Returns (root1_is_a, nu2, nu2_hat, mid1_is_a, nu1, tilde_is_a,
    nu1_tilde, first_index).
    """
    u = rng.random(N)
    is_a = u < al
    g_root = np.where(is_a, pa, pb)
    cum = np.cumsum(g_root / g_root.sum())

    u2 = rng.random(N)
    parents = np.minimum(np.searchsorted(cum, u2, side="right"), N - 1) + 1
    nu2 = int((parents == 1).sum())
    w_hat = g_root[0] / (N * (al * pa + (1.0 - al) * pb))
    nu2_hat = int((u2 <= w_hat).sum())

    mid_is_a = is_a[parents - 1]
    g_mid_total = float(np.where(mid_is_a, pa, pb).sum())

    # Keep the first N children not attached to root 1, extending the
    # sequence with fresh uniforms; track their total weight and the
    # first kept child.
    extra_non1_g = 0.0
    extra_first: Optional[tuple[int, bool]] = None
    pos = N
    needed = nu2
    while needed > 0:
        pos += 1
        ux = rng.random()
        p = min(int(np.searchsorted(cum, ux, side="right")), N - 1) + 1
        if p != 1:
            s_is_a = bool(is_a[p - 1])
            extra_non1_g += pa if s_is_a else pb
            if extra_first is None:
                extra_first = (pos, s_is_a)
            needed -= 1
    kept_g_total = (g_mid_total - nu2 * float(g_root[0])) + extra_non1_g

    if parents[0] != 1:
        first_index, tilde_is_a = 1, bool(mid_is_a[0])
    elif np.any(parents != 1):
        i = int(np.argmax(parents != 1))
        first_index, tilde_is_a = i + 1, bool(mid_is_a[i])
    else:
        first_index, tilde_is_a = extra_first  # type: ignore[misc]

    w1_first = (pa if mid_is_a[0] else pb) / g_mid_total
    w_tilde_first = (pa if tilde_is_a else pb) / kept_g_total
    u1 = rng.random(N)
    nu1 = int((u1 < w1_first).sum())
    nu1_tilde = int((u1 < w_tilde_first).sum())
    return (
        bool(is_a[0]),
        nu2,
        nu2_hat,
        bool(mid_is_a[0]),
        nu1,
        tilde_is_a,
        nu1_tilde,
        first_index,
    )


def _label(is_a: bool) -> str:
    return "a" if is_a else "b"


def coupled_draw(params, N: int, seed) -> CoupledDraw:
    """One coupled realization from its own seed; same seed, same draw."""
    params = params if isinstance(params, CounterexampleParams) else CounterexampleParams(*params)
    N = int(N)
    if N < 2:
        raise ParameterError(f"need N >= 2, got {N}")
    seed = check_seed(seed)
    rng = make_rng(seed)
    (
        root1_is_a,
        nu2,
        nu2_hat,
        mid1_is_a,
        nu1,
        tilde_is_a,
        nu1_tilde,
        first_index,
    ) = _draw_core(params.alpha, params.p_a, params.p_b, N, rng)
    return CoupledDraw(
        x2_1=_label(root1_is_a),
        nu2_1=nu2,
        nu2_hat=nu2_hat,
        x1_1=_label(mid1_is_a),
        nu1_1=nu1,
        x1_tilde=_label(tilde_is_a),
        nu1_tilde=nu1_tilde,
        first_index=first_index,
        seed=seed,
    )


@dataclass(frozen=True)
class MismatchRow:
    N: int
    tilde_mismatch: float
    tilde_se: float
    hat_mismatch: float
    hat_se: float


@dataclass(frozen=True)
class MismatchReport:
    """Per-N surrogate mismatch rates with log-log decay slopes.

    Zero-rate points are excluded from the corresponding slope fit; a
    slope is None when fewer than two points remain.
    """

    reps: int
    seed: int
    rows: tuple[MismatchRow, ...]
    tilde_slope: Optional[float]
    hat_slope: Optional[float]


def _blocks(reps: int):
    out = []
    start = 0
    while start < reps:
        stop = min(start + _WORKER_BLOCK, reps)
        out.append((start, stop))
        start = stop
    return out


def _run_blocks(task, blocks, workers):
    if workers <= 1:
        return [task(b) for b in blocks]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(task, blocks))


def _fit_slope(ns, rates) -> Optional[float]:
    pts = [(math.log(n), math.log(r)) for n, r in zip(ns, rates) if r > 0]
    if len(pts) < 2:
        return None
    x = np.array([p[0] for p in pts])
    y = np.array([p[1] for p in pts])
    return float(np.polyfit(x, y, 1)[0])


def mismatch_rates(
    params, N_list, reps: int, seed, workers: int = 1
) -> MismatchReport:
    """Estimate both surrogate mismatch probabilities along a ladder of N.

    For each N: P((tilde state, tilde count) != (true state, true count))
    and P(hat count != true count), Wald standard errors, and least-squares
    slopes of log(rate) against log(N).  Replicate r of ladder entry i
    draws from the substream (seed, i, r).
    """
    params = params if isinstance(params, CounterexampleParams) else CounterexampleParams(*params)
    ns = [int(n) for n in N_list]
    if len(ns) < 3:
        raise ParameterError("need at least 3 population sizes for slope fits")
    if any(n < 2 for n in ns) or any(b <= a for a, b in zip(ns, ns[1:])):
        raise ParameterError("N_list must be strictly increasing, entries >= 2")
    reps = int(reps)
    if reps < 1:
        raise ParameterError("reps must be >= 1")
    seed = check_seed(seed)
    workers = int(workers)
    if workers < 1:
        raise ParameterError("workers must be >= 1")
    al, pa, pb = params.alpha, params.p_a, params.p_b

    rows = []
    for i, n in enumerate(ns):
        def task(block, _n=n, _i=i):
            start, stop = block
            tilde_bad = hat_bad = 0
            for r in range(start, stop):
                rng = make_rng(seed, _i, r)
                (_, nu2, nu2_hat, mid1_is_a, nu1, tilde_is_a, nu1_tilde, _) = _draw_core(
                    al, pa, pb, _n, rng
                )
                if (tilde_is_a, nu1_tilde) != (mid1_is_a, nu1):
                    tilde_bad += 1
                if nu2_hat != nu2:
                    hat_bad += 1
            return tilde_bad, hat_bad

        tallies = _run_blocks(task, _blocks(reps), workers)
        tilde_bad = sum(t[0] for t in tallies)
        hat_bad = sum(t[1] for t in tallies)
        t_rate, h_rate = tilde_bad / reps, hat_bad / reps
        rows.append(
            MismatchRow(
                N=n,
                tilde_mismatch=t_rate,
                tilde_se=math.sqrt(t_rate * (1 - t_rate) / reps),
                hat_mismatch=h_rate,
                hat_se=math.sqrt(h_rate * (1 - h_rate) / reps),
            )
        )
    return MismatchReport(
        reps=reps,
        seed=seed,
        rows=tuple(rows),
        tilde_slope=_fit_slope(ns, [r.tilde_mismatch for r in rows]),
        hat_slope=_fit_slope(ns, [r.hat_mismatch for r in rows]),
    )


@dataclass(frozen=True)
class IndependenceResult:
    """Chi-square independence check of the surrogate pair against the
    root-1 pair."""

    raw_table: np.ndarray
    table: np.ndarray
    row_labels: tuple[str, ...]
    col_labels: tuple[str, ...]
    chi2: float
    dof: int
    p_value: float


def _initial_categories():
    # (state, low bin, high bin or None for open-ended)
    return [(s, b, b if b < 3 else None) for s in ("a", "b") for b in range(4)]


def _category_label(cat) -> str:
    state, lo, hi = cat
    if hi is None:
        return f"{state}:{lo}+"
    if lo == hi:
        return f"{state}:{lo}"
    return f"{state}:{lo}-{hi}"


def _merge_pair(table, cats, axis, k, partner):
    lo, hi = min(k, partner), max(k, partner)
    if axis == 0:
        table[lo] += table[hi]
        table = np.delete(table, hi, axis=0)
    else:
        table[:, lo] += table[:, hi]
        table = np.delete(table, hi, axis=1)
    a, b = cats[lo], cats[hi]
    if a[0] == b[0] and a[2] is not None and b[1] == a[2] + 1:
        merged = (a[0], a[1], b[2])
    else:
        merged = (f"{_category_label(a)}+{_category_label(b)}", 0, 0)
    cats = cats[:lo] + [merged] + cats[lo + 1 : hi] + cats[hi + 1 :]
    return table, cats


def _pick_partner(cats, marginals, k):
    same = [
        j
        for j in (k - 1, k + 1)
        if 0 <= j < len(cats) and cats[j][0] == cats[k][0]
    ]
    if same:
        return min(same, key=lambda j: (marginals[j], j))
    return k - 1 if k > 0 else k + 1


def _merge_small_expected(table, row_cats, col_cats):
    """Merge adjacent categories until every expected cell is >= 5.

    The offending cell's smaller-marginal side is merged first, into the
    neighboring bin of the same state when one exists.  Deterministic.
    """
    table = table.copy()
    while True:
        rows = table.sum(axis=1)
        cols = table.sum(axis=0)
        if (rows > 0).sum() < 2 or (cols > 0).sum() < 2:
            raise DegenerateTableError(
                "a table side is concentrated in a single category"
            )
        expected = np.outer(rows, cols) / table.sum()
        if expected.min() >= 5.0:
            return table, row_cats, col_cats
        if table.shape[0] <= 2 and table.shape[1] <= 2:
            raise DegenerateTableError("cannot reach expected counts >= 5")
        i, j = np.unravel_index(int(np.argmin(expected)), expected.shape)
        if (rows[i] <= cols[j] and table.shape[0] > 2) or table.shape[1] <= 2:
            table, row_cats = _merge_pair(
                table, row_cats, 0, int(i), _pick_partner(row_cats, rows, int(i))
            )
        else:
            table, col_cats = _merge_pair(
                table, col_cats, 1, int(j), _pick_partner(col_cats, cols, int(j))
            )


def independence_test(
    params, N: int, reps: int, seed, workers: int = 1
) -> IndependenceResult:
    """Cross-tabulate (tilde state, tilde count binned 0/1/2/3+) against
    (root-1 state, hat count binned likewise) and run a chi-square test.

    Exact independence holds by construction, so small p-values indicate
    an implementation fault rather than sampling noise.  Replicate r draws
    from the substream (seed, r).
    """
    params = params if isinstance(params, CounterexampleParams) else CounterexampleParams(*params)
    N = int(N)
    if N < 2:
        raise ParameterError(f"need N >= 2, got {N}")
    reps = int(reps)
    if reps < 10_000:
        raise ParameterError("independence test needs reps >= 10^4")
    seed = check_seed(seed)
    workers = int(workers)
    if workers < 1:
        raise ParameterError("workers must be >= 1")
    al, pa, pb = params.alpha, params.p_a, params.p_b

    def task(block):
        start, stop = block
        counts = np.zeros((8, 8), dtype=np.int64)
        for r in range(start, stop):
            rng = make_rng(seed, r)
            (root1_is_a, _, nu2_hat, _, _, tilde_is_a, nu1_tilde, _) = _draw_core(
                al, pa, pb, N, rng
            )
            row = (0 if tilde_is_a else 1) * 4 + min(nu1_tilde, 3)
            col = (0 if root1_is_a else 1) * 4 + min(nu2_hat, 3)
            counts[row, col] += 1
        return counts

    raw = sum(_run_blocks(task, _blocks(reps), workers))
    merged, row_cats, col_cats = _merge_small_expected(
        raw, _initial_categories(), _initial_categories()
    )
    rows = merged.sum(axis=1)
    cols = merged.sum(axis=0)
    expected = np.outer(rows, cols) / merged.sum()
    stat = float(((merged - expected) ** 2 / expected).sum())
    dof = (merged.shape[0] - 1) * (merged.shape[1] - 1)
    return IndependenceResult(
        raw_table=raw,
        table=merged,
        row_labels=tuple(_category_label(c) for c in row_cats),
        col_labels=tuple(_category_label(c) for c in col_cats),
        chi2=stat,
        dof=dof,
        p_value=float(chi2_dist.sf(stat, dof)),
    )
