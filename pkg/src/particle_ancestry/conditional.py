"""Conditional parent-attachment probability in the two-state model.

The system runs two resampling steps: a *root* generation drawn i.i.d.
from the initial law, a *mid* generation whose particles each pick a
root parent with probability proportional to the root potentials, and a
leaf generation picking mid parents likewise (the kernel is the
identity, so every child keeps its parent's state).

Everything here evaluates one tagged quantity and its surroundings:

    P(mid particle 1 attached to root particle 1
      | root particle 1 has exactly 2 children
        and mid particle 1 has exactly 2 children)

A prediction based on offspring counts alone would put this at ``2/N``.
The exact calculator, its full-enumeration oracle, and the conditioned
Monte Carlo estimator let that prediction be checked at finite N.

The exact calculator conditions on the root state of particle 1 and the
number of other roots in state ``a``; each child then lands in one of
three parent categories (root 1, another a-root, another b-root), which
makes the child placement a three-cell multinomial and leaves an O(N^2)
summation, evaluated in log space.  The mid particle's child count given
its state and the mid-generation composition is exactly binomial.
"""

from __future__ import annotations

import itertools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

import numpy as np
from scipy.special import gammaln, logsumexp, xlogy
from scipy.stats import binom

from .analytic import CounterexampleParams, analytic_report, f_weight
from .errors import ParameterError, ResourceError, ZeroSupportError
from .rng import check_seed, make_rng

__all__ = [
    "StateCounts",
    "ConditionalEstimate",
    "DiagnosticEntry",
    "DiagnosticsReport",
    "ReportRow",
    "exact_conditional",
    "brute_force_conditional",
    "mc_conditional",
    "limit_diagnostics",
    "counterexample_report",
]

# Uniform draws per vectorized batch; the replicate count per chunk is
# derived from it so memory stays flat in N.  Fixed so that chunk
# boundaries (and hence streams) never depend on worker count.
_CHUNK_DRAWS = 1 << 22


def _resolve(params) -> CounterexampleParams:
    if isinstance(params, CounterexampleParams):
        return params
    return CounterexampleParams(*params)


@dataclass(frozen=True)
class StateCounts:
    """How many particles of one generation sit in each state."""

    n_a: int
    n_b: int

    def __post_init__(self):
        if self.n_a < 0 or self.n_b < 0:
            raise ParameterError("state counts must be nonnegative")

    @property
    def total(self) -> int:
        return self.n_a + self.n_b


@dataclass(frozen=True)
class ConditionalEstimate:
    """Rejection-sampling estimate of the attachment probability."""

    raw_reps: int
    conditioned_hits: int
    target_hits: int
    p_hat: float
    scaled: float
    std_err: float
    seed: int

    def __post_init__(self):
        if not 0 <= self.target_hits <= self.conditioned_hits <= self.raw_reps:
            raise ParameterError("inconsistent hit counts")


@dataclass(frozen=True)
class DiagnosticEntry:
    """One empirical frequency next to its large-N analytic value.

    ``empirical`` and ``std_err`` are None when the conditioning cell
    received no samples.
    """

    name: str
    empirical: Optional[float]
    std_err: Optional[float]
    analytic: float
    samples: int

    @property
    def ok(self) -> bool:
        return self.empirical is not None


@dataclass(frozen=True)
class DiagnosticsReport:
    """Empirical generation statistics against their analytic limits."""

    alpha: float
    p_a: float
    p_b: float
    N: int
    reps: int
    seed: int
    entries: tuple[DiagnosticEntry, ...]

    def entry(self, name: str) -> DiagnosticEntry:
        for e in self.entries:
            if e.name == name:
                return e
        raise KeyError(name)


@dataclass(frozen=True)
class ReportRow:
    """One line of the attachment-probability comparison table."""

    N: int
    exact: float
    predicted: float
    scaled: float
    mc_p_hat: Optional[float]
    mc_std_err: Optional[float]
    R: float


def exact_conditional(params, N: int) -> float:
    """Exact finite-N attachment probability, via the sufficient-statistic
    decomposition described in the module docstring.

    All probability masses are evaluated in log space with log-gamma, so
    any N for which the O(N^2) grids fit in memory is fine.
    """
    params = _resolve(params)
    N = int(N)
    if N < 2:
        raise ParameterError(f"need N >= 2, got {N}")
    al, pa, pb = params.alpha, params.p_a, params.p_b

    m = np.arange(N)  # other roots in state a
    log_pm = binom.logpmf(m, N - 1, al)
    c = np.arange(N)  # non-first children attached to other a-roots

    log_num = []
    log_den = []
    for root1_a in (True, False):
        log_px1 = math.log(al if root1_a else 1.0 - al)
        n2a = m + int(root1_a)
        g2_total = n2a * pa + (N - n2a) * pb
        w_p1 = (pa if root1_a else pb) / g2_total
        w_oa = (n2a - int(root1_a)) * pa / g2_total
        w_ob = ((N - n2a) - int(not root1_a)) * pb / g2_total

        for cat in ("p1", "oa", "ob"):
            c_p1 = 1 if cat == "p1" else 2  # root-1 children among the others
            if c_p1 > N - 1:
                continue
            c_ob = (N - 1) - c_p1 - c
            valid = c_ob >= 0

            mid1_is_a = root1_a if cat == "p1" else (cat == "oa")
            n1a = 2 * int(root1_a) + c + int(cat == "oa")
            g1_total = n1a * pa + (N - n1a) * pb
            w_mid1 = (pa if mid1_is_a else pb) / g1_total
            log_children2 = binom.logpmf(2, N, w_mid1)

            with np.errstate(divide="ignore"):
                log_w_cat = np.log(
                    {"p1": w_p1, "oa": w_oa, "ob": w_ob}[cat]
                )
                log_multi = (
                    gammaln(N)
                    - gammaln(c_p1 + 1)
                    - gammaln(c + 1)
                    - gammaln(np.where(valid, c_ob, 0) + 1)
                    + c_p1 * np.log(w_p1)[:, None]
                    + xlogy(c[None, :], w_oa[:, None])
                    + xlogy(c_ob[None, :].clip(min=0), w_ob[:, None])
                )
            terms = (
                log_px1
                + log_pm[:, None]
                + log_w_cat[:, None]
                + log_multi
                + log_children2[None, :]
            )
            terms = np.where(valid[None, :], terms, -np.inf)
            block = logsumexp(terms)
            log_den.append(block)
            if cat == "p1":
                log_num.append(block)

    return float(np.exp(logsumexp(log_num) - logsumexp(log_den)))


def brute_force_conditional(params, N: int) -> float:
    """Full-enumeration oracle for :func:`exact_conditional`.

    Visits every root-state vector (product initial law) and every parent
    assignment vector (categorical weights), weighs each by its exact
    probability as a rational number, and folds in the exact binomial law
    of the mid particle's child count.  ``N <= 6`` only.
    """
    params = _resolve(params)
    N = int(N)
    if N < 2:
        raise ParameterError(f"need N >= 2, got {N}")
    if N > 6:
        raise ResourceError(f"full enumeration is limited to N <= 6, got {N}")
    fa = Fraction(params.alpha)
    fpa = Fraction(params.p_a)
    fpb = Fraction(params.p_b)
    comb2 = math.comb(N, 2)

    assignments = np.array(
        list(itertools.product(range(N), repeat=N)), dtype=np.int64
    )
    keep = (assignments == 0).sum(axis=1) == 2  # root 1 has exactly 2 children
    assignments = assignments[keep]
    child1_attached = assignments[:, 0] == 0

    num = Fraction(0)
    den = Fraction(0)
    for state_bits in itertools.product((0, 1), repeat=N):  # 0 = a, 1 = b
        states = np.array(state_bits, dtype=np.int64)
        n2a = int((states == 0).sum())
        p_states = fa**n2a * (1 - fa) ** (N - n2a)
        g2_total = n2a * fpa + (N - n2a) * fpb

        parent_state = states[assignments]
        n1a = (parent_state == 0).sum(axis=1)
        mid1_state = parent_state[:, 0]
        key = (child1_attached * 2 + mid1_state) * (N + 1) + n1a
        tallies = np.bincount(key, minlength=4 * (N + 1))

        for flat, count in enumerate(tallies):
            if count == 0:
                continue
            attached, rest = divmod(flat, 2 * (N + 1))
            mid1, n1a_val = divmod(rest, N + 1)
            p_assign = fpa**n1a_val * fpb ** (N - n1a_val) / g2_total**N
            g1_total = n1a_val * fpa + (N - n1a_val) * fpb
            w_mid1 = (fpa if mid1 == 0 else fpb) / g1_total
            p_children2 = comb2 * w_mid1**2 * (1 - w_mid1) ** (N - 2)
            contrib = p_states * p_assign * p_children2 * int(count)
            den += contrib
            if attached:
                num += contrib
    return float(num / den)


def _chunks(reps: int, N: int):
    size = max(1, _CHUNK_DRAWS // max(N, 1))
    out = []
    start = 0
    index = 0
    while start < reps:
        out.append((index, min(size, reps - start)))
        start += size
        index += 1
    return out


def _sample_chunk(al, pa, pb, N, rng, size):
    """One vectorized batch of two-step runs.

    Children pick a parent *category* (root 1, another a-root, another
    b-root) by inverse transform on one uniform each; the recorded
    statistics depend on the parent assignment only through these
    categories, whose joint law does not depend on how the parent
    intervals are ordered.  Draw order: root states, child categories,
    then the binomial child count of mid particle 1.
    """
    u = rng.random((size, N))
    is_a = u < al
    root1_is_a = is_a[:, 0]
    n2a = is_a.sum(axis=1)
    g2_total = n2a * pa + (N - n2a) * pb
    t_root1 = np.where(root1_is_a, pa, pb) / g2_total
    t_other_a = t_root1 + (n2a - root1_is_a) * pa / g2_total

    u = rng.random((size, N))
    to_root1 = u < t_root1[:, None]
    to_other_a = (~to_root1) & (u < t_other_a[:, None])
    root1_children = to_root1.sum(axis=1)
    child1_to_root1 = to_root1[:, 0]
    mid1_is_a = np.where(child1_to_root1, root1_is_a, to_other_a[:, 0])
    mid_a_count = root1_children * root1_is_a + to_other_a.sum(axis=1)

    g1_total = mid_a_count * pa + (N - mid_a_count) * pb
    w_mid1 = np.where(mid1_is_a, pa, pb) / g1_total
    mid1_children = rng.binomial(N, w_mid1)
    return {
        "root1_is_a": root1_is_a,
        "root1_children": root1_children,
        "child1_to_root1": child1_to_root1,
        "mid1_is_a": mid1_is_a,
        "mid_a_count": mid_a_count.astype(np.int64),
        "mid1_children": mid1_children,
    }


def _run_chunks(task, chunks, workers):
    if workers <= 1:
        return [task(c) for c in chunks]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(task, chunks))


def mc_conditional(
    params, N: int, reps: int, seed, workers: int = 1
) -> ConditionalEstimate:
    """Estimate the attachment probability by rejection.

    Simulates ``reps`` independent two-step runs, keeps those where both
    tagged particles have exactly two children, and counts how often the
    first child attached to root particle 1.  Chunk ``c`` draws from the
    substream (seed, c), so the result is identical for any worker count.

    Raises :class:`ZeroSupportError` when no run satisfies the
    conditioning event.
    """
    params = _resolve(params)
    N = int(N)
    reps = int(reps)
    if N < 1:
        raise ParameterError(f"need N >= 1, got {N}")
    if reps < 1:
        raise ParameterError(f"need reps >= 1, got {reps}")
    seed = check_seed(seed)
    workers = int(workers)
    if workers < 1:
        raise ParameterError("workers must be >= 1")
    al, pa, pb = params.alpha, params.p_a, params.p_b

    def task(chunk):
        index, size = chunk
        rng = make_rng(seed, index)
        s = _sample_chunk(al, pa, pb, N, rng, size)
        cond = (s["root1_children"] == 2) & (s["mid1_children"] == 2)
        return int(cond.sum()), int((cond & s["child1_to_root1"]).sum())

    tallies = _run_chunks(task, _chunks(reps, N), workers)
    hits = sum(t[0] for t in tallies)
    target = sum(t[1] for t in tallies)
    if hits == 0:
        raise ZeroSupportError(reps)
    p_hat = target / hits
    return ConditionalEstimate(
        raw_reps=reps,
        conditioned_hits=hits,
        target_hits=target,
        p_hat=p_hat,
        scaled=N * p_hat / 2.0,
        std_err=math.sqrt(p_hat * (1.0 - p_hat) / hits),
        seed=seed,
    )


def limit_diagnostics(
    params, N: int, reps: int, seed, workers: int = 1
) -> DiagnosticsReport:
    """Empirical generation statistics with their analytic limits.

    Six entries: the mean fraction of mid-generation particles in state
    a; the probability that mid particle 1 is in state a; the probability
    that mid particle 1 has exactly two children given its state (both
    states); and the probability that root particle 1 has exactly two
    children given its state (both states).  Standard errors are Wald
    (binomial) except for the mean fraction, which uses the sample
    standard deviation over runs.  An empty conditioning cell flags its
    entry instead of failing the whole report.
    """
    params = _resolve(params)
    N = int(N)
    reps = int(reps)
    if N < 1:
        raise ParameterError(f"need N >= 1, got {N}")
    if reps < 2:
        raise ParameterError(f"need reps >= 2, got {reps}")
    seed = check_seed(seed)
    workers = int(workers)
    if workers < 1:
        raise ParameterError("workers must be >= 1")
    al, pa, pb = params.alpha, params.p_a, params.p_b

    def task(chunk):
        index, size = chunk
        rng = make_rng(seed, index)
        s = _sample_chunk(al, pa, pb, N, rng, size)
        mid_a = s["mid_a_count"]
        root2 = s["root1_children"] == 2
        mid2 = s["mid1_children"] == 2
        return np.array(
            [
                int(mid_a.sum()),
                int((mid_a * mid_a).sum()),
                int(s["mid1_is_a"].sum()),
                int((s["mid1_is_a"] & mid2).sum()),
                int((~s["mid1_is_a"] & mid2).sum()),
                int(s["root1_is_a"].sum()),
                int((s["root1_is_a"] & root2).sum()),
                int((~s["root1_is_a"] & root2).sum()),
            ],
            dtype=np.int64,
        )

    totals = sum(_run_chunks(task, _chunks(reps, N), workers))
    (
        sum_mid_a,
        sum_mid_a_sq,
        cnt_mid1_a,
        cnt_mid1_a_2,
        cnt_mid1_b_2,
        cnt_root1_a,
        cnt_root1_a_2,
        cnt_root1_b_2,
    ) = (int(x) for x in totals)

    rep = analytic_report(params)
    lim_frac_a = al * rep.q_a
    lims = {
        "mid": (f_weight(rep.q_a_prime), f_weight(rep.q_b_prime)),
        "root": (f_weight(rep.q_a), f_weight(rep.q_b)),
    }

    def wald(hits: int, n: int) -> tuple[Optional[float], Optional[float]]:
        if n == 0:
            return None, None
        p = hits / n
        return p, math.sqrt(p * (1.0 - p) / n)

    mean_frac = sum_mid_a / (reps * N)
    var_frac = (sum_mid_a_sq / N**2 - reps * mean_frac**2) / (reps - 1)
    se_frac = math.sqrt(max(var_frac, 0.0) / reps)

    p_mid_a, se_mid_a = wald(cnt_mid1_a, reps)
    p_m2a, se_m2a = wald(cnt_mid1_a_2, cnt_mid1_a)
    p_m2b, se_m2b = wald(cnt_mid1_b_2, reps - cnt_mid1_a)
    p_r2a, se_r2a = wald(cnt_root1_a_2, cnt_root1_a)
    p_r2b, se_r2b = wald(cnt_root1_b_2, reps - cnt_root1_a)

    entries = (
        DiagnosticEntry("mid_state_a_fraction", mean_frac, se_frac, lim_frac_a, reps),
        DiagnosticEntry("mid_first_state_a", p_mid_a, se_mid_a, lim_frac_a, reps),
        DiagnosticEntry(
            "mid_offspring2_given_a", p_m2a, se_m2a, lims["mid"][0], cnt_mid1_a
        ),
        DiagnosticEntry(
            "mid_offspring2_given_b", p_m2b, se_m2b, lims["mid"][1], reps - cnt_mid1_a
        ),
        DiagnosticEntry(
            "root_offspring2_given_a", p_r2a, se_r2a, lims["root"][0], cnt_root1_a
        ),
        DiagnosticEntry(
            "root_offspring2_given_b",
            p_r2b,
            se_r2b,
            lims["root"][1],
            reps - cnt_root1_a,
        ),
    )
    return DiagnosticsReport(
        alpha=al, p_a=pa, p_b=pb, N=N, reps=reps, seed=seed, entries=entries
    )


def counterexample_report(
    params, N_list, reps: int, seed, workers: int = 1
) -> tuple[ReportRow, ...]:
    """Comparison table: exact value, the 2/N prediction, the scaled value
    N*exact/2, Monte Carlo columns, and the analytic bound R.

    MC columns are filled when ``reps > 0``; a zero-support outcome leaves
    them empty for that row instead of failing the table.
    """
    params = _resolve(params)
    ns = [int(n) for n in N_list]
    if not ns or any(n < 2 for n in ns):
        raise ParameterError("N_list entries must all be >= 2")
    reps = int(reps)
    if reps < 0:
        raise ParameterError("reps must be >= 0")
    seed = check_seed(seed)
    r_value = analytic_report(params).R

    rows = []
    for n in ns:
        exact = exact_conditional(params, n)
        mc_p: Optional[float] = None
        mc_se: Optional[float] = None
        if reps > 0:
            try:
                est = mc_conditional(params, n, reps, seed, workers=workers)
                mc_p, mc_se = est.p_hat, est.std_err
            except ZeroSupportError:
                pass
        rows.append(
            ReportRow(
                N=n,
                exact=exact,
                predicted=2.0 / n,
                scaled=n * exact / 2.0,
                mc_p_hat=mc_p,
                mc_std_err=mc_se,
                R=r_value,
            )
        )
    return tuple(rows)
