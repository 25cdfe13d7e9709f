"""The slow-ratio slope construction and the attainment-failure probe.

The slope sequence is assembled from four auxiliary sequences:

    alpha(0) = alpha(1) = alpha(2) = 1,  alpha(j) = (e/j)^j  for j >= 3
    c(0) = 1,  c(j+1) = alpha(j) * alpha(2 j^2) * c(j)
    s(n) = n (n + 1) / 2,  t(n) = 2^(-s(n))
    b(0) = c(0),  b(1) = c(1),
    b(s(n) + k) = c(n + 1) / alpha(n + 1 - k)   for n >= 1, 1 <= k <= n + 1

The b-indexing is a bijection onto the nonnegative integers: row n covers
exactly [s(n) + 1, s(n + 1)].  The induced piecewise-linear function has
M(2^m t(n)) / M(t(n)) bounded in n for every fixed m, which is what the
greedy probe below exercises.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .logreal import LogReal, Tolerance, log2_add
from .orlicz import (
    DEFAULT_TAIL_TOL,
    DyadicOrliczFunction,
    SlopeSequence,
    make_dyadic_plf,
)
from .renorm import EtaSequence
from .reports import CheckRow, Report
from .vectors import DEFAULT_NORM_TOL, FiniteVector, _head_norms_log2

_LOG2E = 1.0 / math.log(2.0)

DEFAULT_SLACK_LOG2 = 1e-9


def triangular(n: int) -> int:
    return n * (n + 1) // 2


def row_of_index(i: int) -> tuple[int, int]:
    """The unique (n, k) with i = s(n) + k, n >= 1, 1 <= k <= n + 1 (i >= 2)."""
    if i < 2:
        raise IndexError(f"rows start at index 2, got {i}")
    n = (math.isqrt(8 * (i - 1) + 1) - 1) // 2
    while triangular(n + 1) < i:
        n += 1
    while triangular(n) >= i:
        n -= 1
    return n, i - triangular(n)


class CounterexampleSequences:
    """Memoized accessors for alpha, c, s, b and t.

    The c recursion is taken with equality and c(0) = 1, the canonical
    reproducible choice; `c_factor` exists for deliberately corrupted variants
    in tests and must stay at 1.0 for a valid construction.
    """

    def __init__(self, depth: int, c_factor: float = 1.0, validate: bool = True):
        if depth < 1:
            raise ValueError(f"depth must be >= 1, got {depth}")
        self.depth = depth
        self._c_factor = c_factor
        self._log2_c: dict[int, float] = {0: 0.0}
        self._lock = threading.Lock()
        if validate:
            self._validate()

    # -- raw sequences -----------------------------------------------------

    @staticmethod
    def log2_alpha(j: int) -> float:
        if j < 0:
            raise IndexError(f"alpha index must be >= 0, got {j}")
        if j <= 2:
            return 0.0
        return j * (_LOG2E - math.log2(j))

    def alpha(self, j: int) -> LogReal:
        return LogReal.from_log2(self.log2_alpha(j))

    def log2_c(self, j: int) -> float:
        if j < 0:
            raise IndexError(f"c index must be >= 0, got {j}")
        with self._lock:
            top = max(self._log2_c)
            while top < j:
                nxt = (
                    self._log2_c[top]
                    + self.log2_alpha(top)
                    + self.log2_alpha(2 * top * top)
                    + math.log2(self._c_factor)
                )
                top += 1
                self._log2_c[top] = nxt
            return self._log2_c[j]

    def c(self, j: int) -> LogReal:
        return LogReal.from_log2(self.log2_c(j))

    @staticmethod
    def s(n: int) -> int:
        if n < 1:
            raise IndexError(f"s index must be >= 1, got {n}")
        return triangular(n)

    def t(self, n: int) -> LogReal:
        return LogReal.two_pow(-float(self.s(n)))

    def log2_b(self, i: int) -> float:
        if i < 0:
            raise IndexError(f"b index must be >= 0, got {i}")
        if i <= 1:
            return self.log2_c(i)
        n, k = row_of_index(i)
        return self.log2_c(n + 1) - self.log2_alpha(n + 1 - k)

    def b(self, i: int) -> LogReal:
        return LogReal.from_log2(self.log2_b(i))

    # -- derived objects -----------------------------------------------------

    def max_b_index(self) -> int:
        """Largest b index covered by the declared depth."""
        return triangular(self.depth) + self.depth + 1

    def slopes(self) -> SlopeSequence:
        return SlopeSequence(
            self.log2_b,
            kind="counterexample",
            label=f"counterexample(depth={self.depth})",
            source=self,
        )

    def make_function(self, tail_tol: Tolerance = DEFAULT_TAIL_TOL) -> DyadicOrliczFunction:
        return make_dyadic_plf(self.slopes(), tail_tol)

    def _validate(self) -> None:
        prev_a = math.inf
        for j in range(0, 2 * self.depth + 2):
            a = self.log2_alpha(j)
            if a > prev_a + 1e-15:
                raise AssertionError(f"alpha increases at {j}")
            prev_a = a
        if self.log2_alpha(0) != 0.0 or self.log2_alpha(2) != 0.0:
            raise AssertionError("alpha must start at 1, 1, 1")
        prev_c = math.inf
        for j in range(0, self.depth + 2):
            cj = self.log2_c(j)
            if cj > prev_c + 1e-12:
                raise AssertionError(f"c increases at {j}")
            prev_c = cj
        for i in range(2, min(self.max_b_index(), 500) + 1):
            n, k = row_of_index(i)
            if not (1 <= k <= n + 1 and triangular(n) + k == i):
                raise AssertionError(f"b-index map broken at {i}")


def gen_sequences(depth: int) -> CounterexampleSequences:
    """Sequences with every accessor defined for indices reachable at depth."""
    return CounterexampleSequences(depth)


# -- claim verification ------------------------------------------------------


def verify_claims(
    seqs: CounterexampleSequences,
    j_max: int,
    K_list: list[int],
    slack_log2: float = DEFAULT_SLACK_LOG2,
) -> Report:
    """Check the three structural facts about the slope sequence.

    claim1: b is nonincreasing up to j_max.
    claim2: b(m+n) <= alpha(m) b(n) for 0 <= m, 2 <= n, m + n <= j_max.
    claim3: per K, the grid supremum of b(m+n) K^m / b(n) together with the
    two supporting scans: row maxima of b(s_i + k) K^(s_i + k) must fall off
    after an interior peak, and alpha(m) K^m must peak strictly inside the
    scanned m-range.
    """
    if j_max < 3:
        raise ValueError(f"j_max must be >= 3, got {j_max}")
    rows: list[CheckRow] = []
    summary: dict[str, object] = {}

    for i in range(j_max):
        lhs = seqs.log2_b(i + 1)
        rhs = seqs.log2_b(i)
        rows.append(
            CheckRow(
                check="claim1-monotone",
                indices=(i,),
                lhs_log2=lhs,
                rhs_log2=rhs,
                margin_log2=rhs - lhs,
                passed=lhs <= rhs + slack_log2,
            )
        )

    for n in range(2, j_max + 1):
        for m in range(0, j_max - n + 1):
            lhs = seqs.log2_b(m + n)
            rhs = seqs.log2_alpha(m) + seqs.log2_b(n)
            rows.append(
                CheckRow(
                    check="claim2-alpha-shift",
                    indices=(m, n),
                    lhs_log2=lhs,
                    rhs_log2=rhs,
                    margin_log2=rhs - lhs,
                    passed=lhs <= rhs + slack_log2,
                )
            )

    for K in K_list:
        logK = math.log2(K)
        sup = -math.inf
        arg = (0, 0)
        for n in range(1, j_max):
            for m in range(0, j_max - n + 1):
                v = seqs.log2_b(m + n) - seqs.log2_b(n) + m * logK
                if v > sup:
                    sup = v
                    arg = (m, n)
        summary[f"claim3-sup-log2-K{K}"] = sup
        summary[f"claim3-arg-K{K}"] = arg

        # row maxima u_i = max_k b(s_i + k) K^(s_i + k): interior peak, then
        # strictly decreasing to the end of the scanned rows
        u: list[float] = []
        i = 1
        while triangular(i) + i + 1 <= j_max:
            si = triangular(i)
            u.append(max(seqs.log2_b(si + k) + (si + k) * logK for k in range(1, i + 2)))
            i += 1
        peak = max(range(len(u)), key=lambda idx: u[idx])
        falls = all(u[idx + 1] < u[idx] + slack_log2 for idx in range(peak, len(u) - 1))
        ok = peak < len(u) - 1 and falls and u[-1] < u[peak]
        rows.append(
            CheckRow(
                check="claim3-row-decay",
                indices=(K, peak + 1),
                lhs_log2=u[-1],
                rhs_log2=u[peak],
                margin_log2=u[peak] - u[-1],
                passed=ok,
                note=f"rows scanned: {len(u)}",
            )
        )

        a_vals = [seqs.log2_alpha(mm) + mm * logK for mm in range(0, j_max)]
        a_peak = max(range(len(a_vals)), key=lambda idx: a_vals[idx])
        a_ok = a_peak < len(a_vals) - 1 and all(
            a_vals[idx + 1] <= a_vals[idx] + slack_log2
            for idx in range(a_peak, len(a_vals) - 1)
        )
        rows.append(
            CheckRow(
                check="claim3-alpha-bounded",
                indices=(K, a_peak),
                lhs_log2=a_vals[-1],
                rhs_log2=a_vals[a_peak],
                margin_log2=a_vals[a_peak] - a_vals[-1],
                passed=a_ok,
            )
        )

    failures = [r for r in rows if not r.passed]
    summary["checks"] = len(rows)
    summary["failures"] = len(failures)
    if failures:
        w = failures[0]
        summary["first-witness"] = f"{w.check} at {w.indices}: lhs={w.lhs_log2} rhs={w.rhs_log2}"
    return Report(name="claims", rows=rows, summary=summary)


def ratio_bound_check(
    seqs: CounterexampleSequences,
    M: DyadicOrliczFunction,
    m: int,
    n_max: int,
    slack_log2: float = DEFAULT_SLACK_LOG2,
) -> Report:
    """For m < n <= n_max verify M(2^m t(n))/M(t(n)) <= 2^(m+1)/alpha(m),
    that the ratio is >= 1, and the identity b(s(n) - m) = c(n)/alpha(m)."""
    if n_max <= m:
        raise ValueError(f"need n_max > m, got n_max={n_max} m={m}")
    rows: list[CheckRow] = []
    for n in range(m + 1, n_max + 1):
        sn = triangular(n)
        ratio = M.eval_log2(float(m - sn)) - M.breakpoint_log2(sn)
        bound = (m + 1.0) - seqs.log2_alpha(m)
        rows.append(
            CheckRow(
                check="tail-ratio-bound",
                indices=(m, n),
                lhs_log2=ratio,
                rhs_log2=bound,
                margin_log2=bound - ratio,
                passed=ratio <= bound + slack_log2,
            )
        )
        rows.append(
            CheckRow(
                check="tail-ratio-at-least-one",
                indices=(m, n),
                lhs_log2=0.0,
                rhs_log2=ratio,
                margin_log2=ratio,
                passed=ratio >= -slack_log2,
            )
        )
        ident_lhs = seqs.log2_b(sn - m)
        ident_rhs = seqs.log2_c(n) - seqs.log2_alpha(m)
        rows.append(
            CheckRow(
                check="shifted-slope-identity",
                indices=(m, n),
                lhs_log2=ident_lhs,
                rhs_log2=ident_rhs,
                margin_log2=abs(ident_lhs - ident_rhs),
                passed=abs(ident_lhs - ident_rhs) <= slack_log2,
            )
        )
    failures = sum(not r.passed for r in rows)
    return Report(
        name="ratio-bound",
        rows=rows,
        summary={"m": m, "n_max": n_max, "checks": len(rows), "failures": failures},
    )


# -- greedy construction -------------------------------------------------------


class GreedySearchError(RuntimeError):
    """The candidate scan hit its cap without satisfying the norm budget."""

    def __init__(self, step: int, n_reached: int):
        super().__init__(
            f"greedy step {step}: no candidate n <= {n_reached} satisfied the "
            "budget; the t-sequence does not appear to be null"
        )
        self.step = step
        self.n_reached = n_reached


@dataclass
class GreedyTrace:
    """Chosen indices and renormed prefix values of the greedy construction."""

    alpha_threshold: LogReal
    chosen: list[int]
    prefix_value_log2: list[float]     # renormed value of each prefix
    budget_margin_log2: list[float]    # alpha - eta_k * value, in log2 terms
    stabilization_checks: list[bool]   # triangle-bound implication held
    candidates_tried: list[int]

    @property
    def depth(self) -> int:
        return len(self.chosen)


def greedy_nk(
    M: DyadicOrliczFunction,
    eta: EtaSequence,
    alpha_threshold: LogReal,
    t_seq: Callable[[int], LogReal],
    depth: int,
    search_cap: int = 5000,
    tol: Tolerance = DEFAULT_NORM_TOL,
) -> GreedyTrace:
    """Smallest-index greedy fill-in under the weighted-norm budget.

    Step k picks the least n >= n_{k-1} with
    eta_k * |prefix + t(n) e_k| <= alpha; existence is guaranteed for null
    t-sequences because eta strictly decreases, and the scan errors out at
    search_cap instead of looping.

    Each accepted coordinate is <= every earlier one, so the prefix is its own
    rearrangement and the new renormed value is max(previous value,
    eta_k * head-k norm): one fresh bisection per candidate.
    """
    if alpha_threshold.sign <= 0:
        raise ValueError(f"alpha threshold must be positive, got {alpha_threshold}")
    if depth < 1:
        raise ValueError(f"depth must be >= 1, got {depth}")
    slack = 1e-12
    alpha_log2 = alpha_threshold.log2mag
    chosen: list[int] = []
    coords_log2: list[float] = []
    values: list[float] = []
    margins: list[float] = []
    stab_checks: list[bool] = []
    tried: list[int] = []
    prev_value = -math.inf
    n = 1
    eta.ensure_valid(depth + 1)
    for k in range(1, depth + 1):
        # triangle-inequality bound: if it already fits the budget, minimality
        # must keep n unchanged at this step
        force_same = False
        if chosen:
            single = eta.log2(1) + _single_norm_log2(M, t_seq(chosen[-1]).log2mag, tol)
            bound = eta.log2(k) + log2_add(prev_value, single)
            force_same = bound <= alpha_log2 + slack
        count = 0
        while True:
            t_n = t_seq(n)
            if t_n.sign <= 0:
                raise ValueError(f"t({n}) must be positive, got {t_n}")
            cand = coords_log2 + [t_n.log2mag]
            if len(cand) >= 2 and cand[-1] > cand[-2] + 1e-12:
                raise ValueError("t-sequence must be nonincreasing along the scan")
            head = _head_norms_log2(M, np.array(cand), tol, heads=np.array([k - 1]))
            new_value = max(prev_value, eta.log2(k) + float(head[0]))
            if eta.log2(k) + new_value <= alpha_log2 + slack:
                break
            n += 1
            count += 1
            if count > search_cap:
                raise GreedySearchError(k, n)
        stab_checks.append((not force_same) or n == chosen[-1])
        chosen.append(n)
        coords_log2.append(t_seq(n).log2mag)
        prev_value = new_value
        values.append(new_value)
        margins.append(alpha_log2 - (eta.log2(k) + new_value))
        tried.append(count + 1)
    return GreedyTrace(
        alpha_threshold=alpha_threshold,
        chosen=chosen,
        prefix_value_log2=values,
        budget_margin_log2=margins,
        stabilization_checks=stab_checks,
        candidates_tried=tried,
    )


def _single_norm_log2(M: DyadicOrliczFunction, coord_log2: float, tol: Tolerance) -> float:
    return coord_log2 - M.inverse_log2(0.0)


def greedy_vector(trace: GreedyTrace, t_seq: Callable[[int], LogReal]) -> FiniteVector:
    return FiniteVector({j + 1: t_seq(n) for j, n in enumerate(trace.chosen)})


# -- the dichotomy probe -------------------------------------------------------

PROBE_INCREASING = "strictly-increasing"
PROBE_STABILIZED = "stabilized"
PROBE_INCONCLUSIVE = "inconclusive"


def default_probe_t(n: int) -> LogReal:
    """t(n) = 2^(-n(n+1)/2), the triangular-exponent dyadic sequence."""
    return LogReal.two_pow(-float(triangular(n)))


def attainment_failure_probe(
    M: DyadicOrliczFunction,
    eta: EtaSequence,
    depth: int,
    t_seq: Callable[[int], LogReal] = default_probe_t,
    alpha_threshold: LogReal | None = None,
    search_cap: int = 5000,
    tol: Tolerance = DEFAULT_NORM_TOL,
    slack_log2: float = 1e-11,
) -> Report:
    """Greedy-fill a vector, then watch the renormed truncation values v_k.

    Strictly increasing v_k through the whole scan is the non-attainment
    signature; a plateau v_m = ... = v_depth with m < depth is the attainment
    signature.  The verdict is about the scanned range only.

    alpha defaults to 1: the renormed value dominates the base norm, so the
    unit budget keeps the base norm of every prefix at most 1.
    """
    if depth < 1:
        raise ValueError(f"depth must be >= 1, got {depth}")
    alpha = alpha_threshold if alpha_threshold is not None else LogReal.one()
    trace = greedy_nk(M, eta, alpha, t_seq, depth, search_cap=search_cap, tol=tol)
    v = trace.prefix_value_log2
    rows = []
    strict = True
    for k in range(depth):
        rose = k == 0 or v[k] > v[k - 1] + slack_log2
        if k > 0:
            strict = strict and rose
        rows.append(
            CheckRow(
                check="truncation-value",
                indices=(k + 1, trace.chosen[k]),
                lhs_log2=v[k],
                rhs_log2=alpha.log2mag,
                margin_log2=alpha.log2mag - v[k],
                passed=v[k] <= alpha.log2mag + slack_log2,
                note="rose" if rose else "flat",
            )
        )
    stabilized_at = depth
    for k in range(depth):
        if v[k] >= v[-1] - slack_log2:
            stabilized_at = k + 1
            break
    if strict and depth > 1:
        verdict = PROBE_INCREASING
    elif stabilized_at < depth:
        verdict = PROBE_STABILIZED
    else:
        verdict = PROBE_INCONCLUSIVE
    summary = {
        "verdict": verdict,
        "stabilized_at": stabilized_at if verdict == PROBE_STABILIZED else None,
        "depth": depth,
        "alpha_log2": alpha.log2mag,
        "chosen": list(trace.chosen),
    }
    return Report(name="probe", rows=rows, summary=summary)
