"""Polyhedral-style renorming of a dyadic Orlicz space.

The scheme has three ingredients: the scaling exponent m (K = 2^m), the
infima b_k of M(Kt)/M(t) over shrinking t-ranges, and a sequence eta_k
strictly decreasing to 1 with eta_k > (1 - 1/b_{k+1})^(-1).  The renormed
value of x is

    sup_k  eta_k * || (x*_1, ..., x*_k, 0, ...) ||

over rearranged heads; for finitely supported x the supremum is a finite
maximum because all heads beyond the support coincide while eta keeps
decreasing.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .logreal import LogReal, Tolerance, ZERO
from .orlicz import DyadicOrliczFunction, ratio_inf
from .vectors import DEFAULT_NORM_TOL, FiniteVector, _head_norms_log2

# slack used when locating maxima / attainment among independently bisected
# norm values; ties resolve to the smallest index
_TIE_SLACK_LOG2 = 1e-11


class EtaInfeasibleError(ValueError):
    """No sequence decreasing to 1 satisfies the eta constraints seen in the scan."""

    def __init__(self, k: int, floor: float, message: str):
        super().__init__(message)
        self.k = k
        self.floor = floor


class EtaSequence:
    """Weights eta_1 > eta_2 > ... > 1 with an optional validated prefix.

    The rule is stored as k -> log2(eta_k), which keeps eta_k - 1 resolvable
    far below the float epsilon around 1 (eta_k = 1 + 2^(-60) is a perfectly
    good weight).  Rules built by the constructors below are strictly
    decreasing by construction; user-supplied rules may skip validation, in
    which case the sequence is marked unchecked.
    """

    def __init__(self, log2_fn: Callable[[int], float], description: str, validated: bool):
        self._log2_fn = log2_fn
        self.description = description
        self.validated = validated
        self._lock = threading.Lock()
        self._checked_upto = 0
        self._last_checked = math.inf

    def __call__(self, k: int) -> float:
        return 2.0 ** self.log2(k)

    def log2(self, k: int) -> float:
        if k < 1:
            raise IndexError(f"eta index must be >= 1, got {k}")
        return self._log2_fn(k)

    def ensure_valid(self, upto: int) -> None:
        """Lazily extend the strict-decrease check; idempotent and thread-safe."""
        if not self.validated or upto <= self._checked_upto:
            return
        with self._lock:
            prev = self._last_checked
            for k in range(self._checked_upto + 1, upto + 1):
                v = self._log2_fn(k)
                if not v > 0.0:
                    raise EtaInfeasibleError(k, v, f"eta_{k} = 2^{v} is not > 1")
                if not v < prev:
                    raise EtaInfeasibleError(
                        k, v, f"log2 eta_{k} = {v} does not strictly decrease from {prev}"
                    )
                prev = v
            self._checked_upto = upto
            self._last_checked = prev

    @staticmethod
    def one_plus_pow2() -> "EtaSequence":
        """eta_k = 1 + 2^(-k)."""
        return EtaSequence(
            lambda k: math.log1p(2.0 ** (-k)) / math.log(2.0), "1+2^-k", validated=True
        )

    @staticmethod
    def unchecked(fn: Callable[[int], float], description: str = "user") -> "EtaSequence":
        """Accept a user rule eta_k (plain values) with validation skipped."""
        return EtaSequence(
            lambda k: math.log2(fn(k)), f"{description} (unchecked)", validated=False
        )


def build_eta(
    bk: Callable[[int], LogReal],
    k_max: int,
    tail_gap: float = 0.5,
) -> EtaSequence:
    """Construct eta from computed b_k values.

    Each eta_k must exceed (1 - 1/b_{k+1})^(-1); the constructor takes the
    suffix maximum of those floors over k..k_max, holds the last floor as the
    analytic tail (valid because b_k is nondecreasing), and multiplies by the
    strictly decreasing factor (1 + 2^(-k)).  The result is strictly
    decreasing whatever the floors do, and tends to 1 exactly when the floors
    do.

    Raises EtaInfeasibleError when the floor at the end of the scan still
    exceeds 1 + tail_gap: the b_k seen were bounded, so no sequence decreasing
    to 1 can satisfy the constraints.
    """
    if k_max < 1:
        raise ValueError(f"k_max must be >= 1, got {k_max}")
    ln2 = math.log(2.0)
    floors_log2 = np.empty(k_max)
    for k in range(1, k_max + 2):
        b = bk(k)
        if b.sign <= 0 or b.log2mag <= 0.0:
            raise EtaInfeasibleError(
                k,
                math.inf,
                f"b_{k} = {b} does not exceed 1; the constraint "
                f"eta_{k - 1} > (1 - 1/b_{k})^(-1) is unsatisfiable",
            )
        if k >= 2:
            # log2 of (1 - 1/b_k)^(-1), stable for huge b_k
            one_minus = -math.expm1(-b.log2mag * ln2)
            floors_log2[k - 2] = -math.log(one_minus) / ln2
    # floors[j] binds eta_{j+1}; suffix maximum makes the rule monotone even
    # if the computed b_k wobble
    suffix = np.maximum.accumulate(floors_log2[::-1])[::-1]
    tail_floor_log2 = float(floors_log2[-1])
    if tail_floor_log2 > math.log2(1.0 + tail_gap):
        floor_value = 2.0 ** tail_floor_log2
        raise EtaInfeasibleError(
            k_max + 1,
            floor_value,
            "eta construction infeasible: the binding constraint "
            f"eta_k > (1 - 1/b_{k_max + 1})^(-1) = {floor_value:.6g} persists at the "
            f"end of the validated range (k_max = {k_max}); the scanned b_k are "
            "bounded, so no sequence decreasing to 1 satisfies it",
        )
    suffix_list = suffix.tolist()

    def log2_fn(k: int) -> float:
        g = suffix_list[k - 1] if k <= k_max else tail_floor_log2
        return g + math.log1p(2.0 ** (-k)) / ln2

    return EtaSequence(log2_fn, f"suffix-max floors, k_max={k_max}", validated=True)


@dataclass
class BkValue:
    """A computed infimum of M(2^m t)/M(t) with its scan verdict."""

    value: LogReal
    trend: str
    t_max: LogReal

    @property
    def conclusive(self) -> bool:
        return self.trend != "inconclusive"


def compute_bk(
    M: DyadicOrliczFunction, m: int, k: int, depth: int = 64
) -> BkValue:
    """b_k = inf of M(2^m t)/M(t) over 0 < t <= M^(-1)(1/k)."""
    if k < 1:
        raise ValueError(f"index k must be >= 1, got {k}")
    t_max = LogReal.from_log2(M.inverse_log2(-math.log2(k)))
    report = ratio_inf(M, m, t_max, depth=depth)
    return BkValue(report.infimum, report.trend, t_max)


def compute_bk_at_scale(
    M: DyadicOrliczFunction, m: int, k: int, depth: int = 64
) -> BkValue:
    """Scale-indexed variant: the k-th infimum is taken over 0 < t <= 2^(-k).

    The t-range shrinks geometrically with k instead of through M^(-1)(1/k),
    which makes the b_k grow at the rate of the function's dyadic ratios; this
    is the indexing a renorm scheme is built on.
    """
    if k < 1:
        raise ValueError(f"index k must be >= 1, got {k}")
    t_max = LogReal.two_pow(-float(k))
    report = ratio_inf(M, m, t_max, depth=depth)
    return BkValue(report.infimum, report.trend, t_max)


@dataclass
class RenormScheme:
    """K = 2^m, the validated b_k table, and the eta rule built from it."""

    m: int
    k_max: int
    bk_table: dict[int, LogReal]
    eta: EtaSequence
    inconclusive_k: list[int] = field(default_factory=list)

    def bk(self, k: int) -> LogReal:
        return self.bk_table[k]

    def render(self) -> str:
        lines = [f"m = {self.m}", f"k_max = {self.k_max}"]
        for k in sorted(self.bk_table):
            lines.append(f"bk {k} = {self.bk_table[k].render()}")
        lines.append(f"eta_rule = {self.eta.description}")
        for k in sorted(self.bk_table):
            lines.append(f"eta {k} = {self.eta(k)!r}")
        if self.inconclusive_k:
            lines.append("inconclusive = " + " ".join(map(str, self.inconclusive_k)))
        return "\n".join(lines) + "\n"


def build_renorm_scheme(
    M: DyadicOrliczFunction,
    m: int,
    k_max: int,
    depth: int = 64,
    tail_gap: float = 0.5,
) -> RenormScheme:
    """Compute the scale-indexed b_k table and a feasible eta, or fail loudly."""
    table: dict[int, LogReal] = {}
    inconclusive: list[int] = []
    for k in range(1, k_max + 2):
        bv = compute_bk_at_scale(M, m, k, depth=depth)
        table[k] = bv.value
        if not bv.conclusive:
            inconclusive.append(k)
    eta = build_eta(lambda k: table[k], k_max, tail_gap=tail_gap)
    return RenormScheme(
        m=m, k_max=k_max, bk_table=table, eta=eta, inconclusive_k=inconclusive
    )


# -- the renormed value ------------------------------------------------------


def _triple_norm_log2(
    M: DyadicOrliczFunction,
    eta: EtaSequence,
    sorted_log2: np.ndarray,
    tol: Tolerance,
) -> tuple[float, int]:
    n = len(sorted_log2)
    if n == 0:
        return -math.inf, 0
    eta.ensure_valid(n + 1)
    head_norms = _head_norms_log2(M, sorted_log2, tol)
    vals = np.array([eta.log2(k) for k in range(1, n + 1)]) + head_norms
    best = float(vals.max())
    attaining = int(np.argmax(vals >= best - _TIE_SLACK_LOG2)) + 1
    return best, attaining


def triple_norm(
    M: DyadicOrliczFunction,
    eta: EtaSequence,
    x: FiniteVector,
    tol: Tolerance = DEFAULT_NORM_TOL,
) -> tuple[LogReal, int]:
    """max over 1 <= k <= N of eta_k * ||(x*_1..x*_k)||, with the smallest
    maximizing k.

    Heads beyond the support equal the full rearrangement while eta keeps
    strictly decreasing, so the finite maximum is the exact supremum.
    """
    if x.is_zero:
        return ZERO, 0
    best, attaining = _triple_norm_log2(M, eta, x.sorted_log2_magnitudes(), tol)
    return LogReal.from_log2(best), attaining


def head_attainment_index(
    M: DyadicOrliczFunction,
    eta: EtaSequence,
    x: FiniteVector,
    tol: Tolerance = DEFAULT_NORM_TOL,
) -> int:
    """Smallest m >= 0 whose basis-order truncation already has the full
    renormed value; 0 for the zero vector."""
    m, _ = _head_attainment_search(M, eta, x, tol)
    return m


def _head_attainment_search(
    M: DyadicOrliczFunction,
    eta: EtaSequence,
    x: FiniteVector,
    tol: Tolerance = DEFAULT_NORM_TOL,
) -> tuple[int, list[tuple[int, float]]]:
    """Attainment index plus the (m, value) pairs probed on the way.

    The truncation value is nondecreasing in m, so the smallest attaining m is
    found by bisection over the support indices; between support indices the
    truncation does not change.
    """
    if x.is_zero:
        return 0, []
    target, _ = _triple_norm_log2(M, eta, x.sorted_log2_magnitudes(), tol)
    slack = _TIE_SLACK_LOG2 + abs(target) * 1e-12
    support = sorted(x.coords)
    probes: list[tuple[int, float]] = []

    def value_at(pos: int) -> float:
        head = x.head(support[pos])
        v, _ = _triple_norm_log2(M, eta, head.sorted_log2_magnitudes(), tol)
        probes.append((support[pos], v))
        return v

    lo, hi = 0, len(support) - 1
    if value_at(lo) >= target - slack:
        return support[0], probes
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if value_at(mid) >= target - slack:
            hi = mid
        else:
            lo = mid
    return support[hi], probes


def growth_index(
    M: DyadicOrliczFunction,
    eta: EtaSequence,
    x: FiniteVector,
    tol: Tolerance = DEFAULT_NORM_TOL,
) -> int:
    """Smallest k with ||x|| <= eta_k * ||(a_1..a_k)|| for positive
    nonincreasing packed coordinates; k = N always qualifies."""
    if x.is_zero:
        raise ValueError("growth index needs a nonzero vector")
    n = x.support_size
    if x.max_index != n:
        raise ValueError("coordinates must be packed into indices 1..N")
    prev = math.inf
    for i in range(1, n + 1):
        v = x.get(i)
        if v.sign <= 0:
            raise ValueError(f"coordinate {i} must be positive, got {v}")
        if v.log2mag > prev:
            raise ValueError(f"coordinates must be nonincreasing, violated at index {i}")
        prev = v.log2mag
    eta.ensure_valid(n + 1)
    logs = x.sorted_log2_magnitudes()
    head_norms = _head_norms_log2(M, logs, tol)
    full = float(head_norms[-1])
    for k in range(1, n + 1):
        if eta.log2(k) + float(head_norms[k - 1]) >= full - _TIE_SLACK_LOG2:
            return k
    raise AssertionError("growth index must exist at k = N")


def parse_scheme(text: str) -> dict[str, object]:
    """Parse the plain-text scheme block back into its table form."""
    out: dict[str, object] = {"bk": {}, "eta": {}}
    for raw in text.splitlines():
        line = raw.strip()
        if not line:
            continue
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if key == "m":
            out["m"] = int(value)
        elif key == "k_max":
            out["k_max"] = int(value)
        elif key.startswith("bk "):
            out["bk"][int(key[3:])] = LogReal.parse(value)
        elif key.startswith("eta "):
            out["eta"][int(key[4:])] = float(value)
        elif key == "eta_rule":
            out["eta_rule"] = value
        elif key == "inconclusive":
            out["inconclusive"] = [int(tok) for tok in value.split()]
    return out
