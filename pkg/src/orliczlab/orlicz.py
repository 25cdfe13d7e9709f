"""Dyadic piecewise-linear Orlicz functions.

A nonincreasing positive slope sequence b(0) >= b(1) >= ... > 0 determines the
convex function M with M(0) = 0 whose derivative is b(n) on the dyadic
interval (2^(-n-1), 2^(-n)) and b(0) above 1/2.  Breakpoint values are the
tail sums M(2^(-n)) = sum_{j>=n} b(j) 2^(-j-1), truncated once the geometric
remainder bound b(J) 2^(-J) is negligible relative to the partial sum.

Everything is computed in the base-2 log domain; breakpoint tables are cached
with at-most-once insertion and are safe for concurrent readers.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .logreal import LogReal, Tolerance, ZERO, log2_add, log2_sub

_LN2 = math.log(2.0)
_LOG2E = 1.0 / _LN2

DEFAULT_TAIL_TOL = Tolerance(rel=1e-16)

# Hard cap on breakpoint table depth; beyond this the caller is asking for
# scales this laboratory is not meant to reach.
_MAX_TABLE_DEPTH = 4_000_000


class SlopeSequenceError(ValueError):
    """A slope sequence violated positivity or monotonicity."""

    def __init__(self, index: int, message: str):
        super().__init__(message)
        self.index = index


class SlopeSequence:
    """Accessor for a nonincreasing, strictly positive slope sequence.

    kind is one of 'list', 'pow2_poly', 'counterexample' or 'custom'; the
    accessor must be defined for every n >= 0.
    """

    def __init__(
        self,
        log2_fn: Callable[[int], float],
        kind: str = "custom",
        length_hint: int | None = None,
        label: str = "",
        source: object | None = None,
    ):
        self._log2_fn = log2_fn
        self.kind = kind
        self.length_hint = length_hint
        self.label = label or kind
        self.source = source

    def log2_slope(self, n: int) -> float:
        if n < 0:
            raise IndexError(f"slope index must be >= 0, got {n}")
        return self._log2_fn(n)

    def b(self, n: int) -> LogReal:
        return LogReal.from_log2(self.log2_slope(n))

    def validate(self, upto: int) -> None:
        """Check positivity and monotonicity on indices [0, upto]."""
        prev = math.inf
        for n in range(upto + 1):
            v = self.log2_slope(n)
            if math.isnan(v) or v == math.inf:
                raise SlopeSequenceError(n, f"slope at index {n} is not a positive real")
            if v > prev:
                raise SlopeSequenceError(
                    n, f"slope sequence increases at index {n}: "
                       f"log2 b({n - 1}) = {prev} < log2 b({n}) = {v}"
                )
            prev = v


def slopes_from_list(values: Sequence[LogReal]) -> SlopeSequence:
    """Explicit slope list; the final entry is held constant as the tail."""
    if not values:
        raise SlopeSequenceError(0, "empty slope list")
    logs = []
    for n, v in enumerate(values):
        if v.sign <= 0:
            raise SlopeSequenceError(n, f"slope at index {n} must be positive, got {v}")
        logs.append(v.log2mag)
    tail = logs[-1]

    def fn(n: int) -> float:
        return logs[n] if n < len(logs) else tail

    seq = SlopeSequence(fn, kind="list", length_hint=len(logs), label=f"list[{len(logs)}]")
    seq.validate(len(logs))
    return seq


def slopes_pow2_poly(a: float, b: float, c: float) -> SlopeSequence:
    """Closed-form family b(n) = 2^(-(a n^2 + b n + c)) with a, b >= 0."""
    if a < 0 or b < 0:
        raise SlopeSequenceError(0, f"pow2_poly needs a, b >= 0 for monotone slopes, got a={a} b={b}")

    def fn(n: int) -> float:
        return -(a * n * n + b * n + c)

    seq = SlopeSequence(fn, kind="pow2_poly", label=f"pow2_poly(a={a},b={b},c={c})")
    seq.validate(8)
    return seq


def identity_slopes() -> SlopeSequence:
    """b(n) = 1 for all n, so M(t) = t."""
    return slopes_pow2_poly(0.0, 0.0, 0.0)


def geometric_slopes() -> SlopeSequence:
    """b(n) = 2^(-n), giving M(2^(-n)) = (2/3) 4^(-n)."""
    return slopes_pow2_poly(0.0, 1.0, 0.0)


def squares_slopes() -> SlopeSequence:
    """b(n) = 2^(-n^2); the ratio M(2t)/M(t) blows up toward 0."""
    return slopes_pow2_poly(1.0, 0.0, 0.0)


class DyadicOrliczFunction:
    """Piecewise-linear convex M built from a dyadic slope sequence."""

    def __init__(self, slopes: SlopeSequence, tail_tol: Tolerance = DEFAULT_TAIL_TOL):
        slopes.validate(min(64, _MAX_TABLE_DEPTH))
        self.slopes = slopes
        self.tail_tol = tail_tol
        # slopes are nonincreasing, so sum_{j>J} b(j) 2^(-j-1) <= b(J') 2^(-J)
        # for any J' <= J; `lookahead` extra terms push the relative remainder
        # below tail_tol.rel regardless of the slopes.
        self._lookahead = max(8, int(math.ceil(-math.log2(tail_tol.rel))) + 2)
        self._lock = threading.Lock()
        self._logb = np.empty(0, dtype=np.float64)   # log2 b(n)
        self._logM = np.empty(0, dtype=np.float64)   # log2 M(2^(-n))
        self._depth = -1
        self._ensure_depth(8)

    # -- breakpoint tables ---------------------------------------------------

    def _ensure_depth(self, depth: int) -> None:
        """Extend cached tables so logM[0..depth] and logb[0..depth] exist."""
        if depth <= self._depth:
            return
        if depth > _MAX_TABLE_DEPTH:
            raise ValueError(f"breakpoint depth {depth} exceeds the table cap {_MAX_TABLE_DEPTH}")
        with self._lock:
            if depth <= self._depth:
                return
            depth = max(depth, 2 * max(self._depth, 4))
            depth = min(depth, _MAX_TABLE_DEPTH)
            hi = depth + self._lookahead
            logb_ext = np.array(
                [self.slopes.log2_slope(n) for n in range(self._depth + 1, hi + 1)],
                dtype=np.float64,
            )
            # monotonicity across the extension seam and inside the new window
            prev = self._logb[-1] if self._logb.size else math.inf
            for off, v in enumerate(logb_ext):
                n = self._depth + 1 + off
                if math.isnan(v) or v == math.inf:
                    raise SlopeSequenceError(n, f"slope at index {n} is not a positive real")
                if v > prev:
                    raise SlopeSequenceError(n, f"slope sequence increases at index {n}")
                prev = v
            logb_all = np.concatenate([self._logb, logb_ext]) if self._logb.size else logb_ext
            # tail sums, deepest first: logM[n] = log2(b(n) 2^(-n-1) + M(2^(-n-1)))
            acc = -math.inf
            new_logM = np.empty(depth - self._depth, dtype=np.float64)
            for n in range(hi, self._depth, -1):
                acc = log2_add(acc, logb_all[n] - n - 1.0)
                if n <= depth:
                    new_logM[n - self._depth - 1] = acc
            # existing shallow entries keep their first-computed values
            self._logM = np.concatenate([self._logM, new_logM]) if self._logM.size else new_logM
            self._logb = logb_all[: depth + 1].copy()
            self._depth = depth

    def breakpoint_log2(self, n: int) -> float:
        """log2 of M(2^(-n))."""
        if n < 0:
            raise IndexError(f"breakpoint index must be >= 0, got {n}")
        self._ensure_depth(n)
        return float(self._logM[n])

    def breakpoint_value(self, n: int) -> LogReal:
        return LogReal.from_log2(self.breakpoint_log2(n))

    def slope(self, n: int) -> LogReal:
        return self.slopes.b(n)

    # -- evaluation ------------------------------------------------------------

    def eval_log2(self, u: float) -> float:
        """log2 M(t) for t = 2^u; -inf maps to -inf."""
        if u == -math.inf:
            return -math.inf
        n = int(math.floor(-u))
        if n < 0:
            n = 0
        self._ensure_depth(n + 1)
        base = float(self._logM[n + 1])          # M at the left breakpoint 2^(-n-1)
        d = -(n + 1.0) - u                       # < 0 except float fuzz
        if d >= 0.0:
            return base
        one_minus = -math.expm1(d * _LN2)        # 1 - 2^d, accurate near d = 0
        seg = float(self._logb[n]) + u + math.log(one_minus) * _LOG2E
        return log2_add(base, seg)

    def eval_log2_array(self, u: np.ndarray) -> np.ndarray:
        """Vectorized eval_log2; entries of -inf pass through."""
        u = np.asarray(u, dtype=np.float64)
        finite = u != -np.inf
        out = np.full(u.shape, -np.inf)
        if not finite.any():
            return out
        uf = u[finite]
        n = np.floor(-uf).astype(np.int64)
        np.maximum(n, 0, out=n)
        self._ensure_depth(int(n.max()) + 1)
        base = self._logM[n + 1]
        d = -(n + 1.0) - uf
        np.minimum(d, -1e-300, out=d)  # guard the excluded boundary d == 0
        with np.errstate(divide="ignore"):
            seg = self._logb[n] + uf + np.log2(-np.expm1(d * _LN2))
        out[finite] = np.logaddexp2(base, seg)
        return out

    def eval(self, t: LogReal) -> LogReal:
        """M(t) for t >= 0."""
        if t.sign < 0:
            raise ValueError(f"M is defined for t >= 0, got {t}")
        if t.sign == 0:
            return ZERO
        return LogReal.from_log2(self.eval_log2(t.log2mag))

    # -- inversion --------------------------------------------------------------

    def inverse_log2(self, ylog: float) -> float:
        """log2 of M^(-1)(y) for y = 2^ylog."""
        if ylog == -math.inf:
            return -math.inf
        self._ensure_depth(8)
        if ylog >= float(self._logM[1]):
            # single ray of slope b(0) above t = 1/2
            diff = log2_sub(ylog, float(self._logM[1]))
            return log2_add(-1.0, diff - float(self._logb[0]))
        n = 1
        while True:
            self._ensure_depth(n + 2)
            if float(self._logM[n + 1]) < ylog:
                break
            n += 1
            if n > _MAX_TABLE_DEPTH:
                raise ValueError("inverse argument below the supported scale")
        diff = log2_sub(ylog, float(self._logM[n + 1]))
        return log2_add(-(n + 1.0), diff - float(self._logb[n]))

    def inverse(self, y: LogReal) -> LogReal:
        """The t >= 0 with M(t) = y; exact on the located linear segment."""
        if y.sign < 0:
            raise ValueError(f"M^(-1) is defined for y >= 0, got {y}")
        if y.sign == 0:
            return ZERO
        return LogReal.from_log2(self.inverse_log2(y.log2mag))


def make_dyadic_plf(slopes: SlopeSequence, tail_tol: Tolerance = DEFAULT_TAIL_TOL) -> DyadicOrliczFunction:
    """Build the piecewise-linear convex function induced by a slope sequence."""
    return DyadicOrliczFunction(slopes, tail_tol)


# -- ratio scans ----------------------------------------------------------------

TREND_INCREASING = "increasing"
TREND_BOUNDED = "bounded"
TREND_INCONCLUSIVE = "inconclusive"


def classify_tail(values_log2: Sequence[float], band: float = 1e-9) -> str:
    """Describe the tail of a scanned series (ordered toward t -> 0).

    'increasing' if the tail window rises monotonically, 'bounded' if it is
    flat within the band, 'inconclusive' otherwise or when the running minimum
    was still improving inside the tail window.
    """
    vals = list(values_log2)
    if len(vals) < 3:
        return TREND_INCONCLUSIVE
    window = max(4, len(vals) // 4)
    window = min(window, len(vals) - 1)
    running = vals[0]
    last_improve = 0
    for i, v in enumerate(vals):
        if v < running - band:
            running = v
            last_improve = i
    if last_improve >= len(vals) - window:
        return TREND_INCONCLUSIVE
    tail = vals[-window:]
    monotone_up = all(tail[i + 1] >= tail[i] - band for i in range(len(tail) - 1))
    if monotone_up and tail[-1] > tail[0] + band:
        return TREND_INCREASING
    if max(tail) - min(tail) <= band:
        return TREND_BOUNDED
    return TREND_INCONCLUSIVE


@dataclass
class RatioReport:
    """Scan of a ratio over a grid, with extrema and a tail-trend verdict."""

    grid: list[tuple[float, ...]]        # scan labels (log2 t, or (m, n) pairs)
    values: list[LogReal]
    infimum: LogReal
    supremum: LogReal
    arg_inf: tuple[float, ...]
    arg_sup: tuple[float, ...]
    trend: str
    approximate: bool = False
    aux: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        for v in self.values:
            if v < self.infimum or v > self.supremum:
                raise AssertionError("scanned value outside [infimum, supremum]")


def _report_from_scan(grid, logs, trend, approximate=False, aux=None) -> RatioReport:
    i_min = min(range(len(logs)), key=lambda i: logs[i])
    i_max = max(range(len(logs)), key=lambda i: logs[i])
    return RatioReport(
        grid=list(grid),
        values=[LogReal.from_log2(v) for v in logs],
        infimum=LogReal.from_log2(logs[i_min]),
        supremum=LogReal.from_log2(logs[i_max]),
        arg_inf=grid[i_min],
        arg_sup=grid[i_max],
        trend=trend,
        approximate=approximate,
        aux=aux or {},
    )


def ratio_inf(
    M: DyadicOrliczFunction,
    m: int,
    t_max: LogReal,
    depth: int = 64,
    band: float = 1e-9,
) -> RatioReport:
    """Scan inf of M(2^m t) / M(t) over (0, t_max].

    With K = 2^m the numerator and denominator are simultaneously linear on
    every dyadic interval, so the ratio is monotone there and the infimum over
    the scanned range is attained at the interval endpoints: the breakpoints
    2^(-n) <= t_max plus t_max itself.  The tail below the scan depth is
    reported as a trend, never extrapolated.
    """
    if m < 1 or m != int(m):
        raise ValueError(f"scaling exponent m must be a positive integer, got {m}")
    if t_max.sign <= 0:
        raise ValueError(f"t_max must be positive, got {t_max}")
    u_top = t_max.log2mag
    n0 = int(math.ceil(-u_top))
    n0 = max(n0, 0)
    grid: list[tuple[float, ...]] = []
    logs: list[float] = []
    if -float(n0) < u_top:
        # t_max sits strictly inside a dyadic interval
        grid.append((u_top,))
        logs.append(M.eval_log2(u_top + m) - M.eval_log2(u_top))
    M._ensure_depth(n0 + depth + 1)
    bp_logs = []
    for n in range(n0, n0 + depth + 1):
        num = float(M._logM[n - m]) if n >= m else M.eval_log2(float(m - n))
        r = num - float(M._logM[n])
        grid.append((-float(n),))
        logs.append(r)
        bp_logs.append(r)
    trend = classify_tail(bp_logs, band=band)
    return _report_from_scan(grid, logs, trend)


def ratio_inf_general(
    M: DyadicOrliczFunction,
    K: float,
    t_max: LogReal,
    depth: int = 64,
    samples_per_interval: int = 8,
    band: float = 1e-9,
) -> RatioReport:
    """Sampling fallback for a scaling factor that is not a power of two.

    The breakpoints of t -> M(Kt) no longer align with those of M, so the
    per-interval monotonicity argument fails; the scan samples geometrically
    inside each dyadic interval and the result is flagged approximate.
    """
    if K <= 1.0:
        raise ValueError(f"scaling factor must exceed 1, got {K}")
    if t_max.sign <= 0:
        raise ValueError(f"t_max must be positive, got {t_max}")
    logK = math.log2(K)
    u_top = t_max.log2mag
    n0 = max(int(math.ceil(-u_top)), 0)
    grid: list[tuple[float, ...]] = []
    logs: list[float] = []
    per_bp: list[float] = []
    for n in range(n0, n0 + depth + 1):
        for i in range(samples_per_interval):
            u = -float(n) - i / samples_per_interval
            if u > u_top:
                continue
            r = M.eval_log2(u + logK) - M.eval_log2(u)
            grid.append((u,))
            logs.append(r)
            if i == 0:
                per_bp.append(r)
    trend = classify_tail(per_bp, band=band)
    return _report_from_scan(grid, logs, trend, approximate=True)


def compute_cq(
    M: DyadicOrliczFunction,
    q: float,
    m_max: int,
    n_max: int,
    band: float = 1e-9,
) -> RatioReport:
    """Grid supremum of M(2^(-m-n)) / M(2^(-n)) * 2^(mq).

    Also reports the slope-side bound 2 * sup b(m+n)/b(n) * 2^((q-1)m) over
    the same grid; the trend flag says whether the grid supremum was attained
    away from the expanding edges.
    """
    if q < 1.0:
        raise ValueError(f"exponent q must be >= 1, got {q}")
    if m_max < 1 or n_max < 1:
        raise ValueError("grid ranges must be >= 1")
    M._ensure_depth(m_max + n_max + 1)
    grid: list[tuple[float, ...]] = []
    logs: list[float] = []
    slope_best = -math.inf
    slope_arg = (0, 0)
    for mm in range(1, m_max + 1):
        for nn in range(1, n_max + 1):
            v = float(M._logM[mm + nn]) - float(M._logM[nn]) + mm * q
            grid.append((float(mm), float(nn)))
            logs.append(v)
            s = float(M._logb[mm + nn]) - float(M._logb[nn]) + mm * (q - 1.0)
            if s > slope_best:
                slope_best = s
                slope_arg = (mm, nn)
    i_max = max(range(len(logs)), key=lambda i: logs[i])
    am, an = grid[i_max]
    interior = am <= m_max - 1 and an <= n_max - 1
    trend = TREND_BOUNDED if interior else TREND_INCONCLUSIVE
    aux = {
        "slope_bound_log2": 1.0 + slope_best,
        "slope_bound_arg": slope_arg,
    }
    return _report_from_scan(grid, logs, trend, aux=aux)


# -- plain-text function specs -----------------------------------------------


def parse_key_values(text: str) -> dict[str, str]:
    """Parse 'key = value' lines; '#' starts a comment."""
    out: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, value = line.split("=", 1)
        out[key.strip()] = value.strip()
    return out


def parse_function_spec(text: str) -> DyadicOrliczFunction:
    """Build a function from its plain-text spec.

    Grammar::

        kind = list | pow2_poly | counterexample
        # kind = list
        slopes = <LogReal tokens, whitespace separated>
        # kind = pow2_poly  (slope(n) = 2^-(a n^2 + b n + c))
        a = <real>; b = <real>; c = <real>
        # kind = counterexample
        depth = <int>
        # any kind
        tail_rel = <real>
    """
    kv = parse_key_values(text)
    kind = kv.get("kind")
    if kind is None:
        raise ValueError("function spec is missing 'kind'")
    tail = DEFAULT_TAIL_TOL
    if "tail_rel" in kv:
        tail = Tolerance(rel=float(kv["tail_rel"]))
    if kind == "list":
        if "slopes" not in kv:
            raise ValueError("kind = list needs a 'slopes' entry")
        values = [LogReal.parse(tok) for tok in kv["slopes"].split()]
        return make_dyadic_plf(slopes_from_list(values), tail)
    if kind == "pow2_poly":
        a = float(kv.get("a", "0"))
        b = float(kv.get("b", "0"))
        c = float(kv.get("c", "0"))
        return make_dyadic_plf(slopes_pow2_poly(a, b, c), tail)
    if kind == "counterexample":
        from .counterexample import gen_sequences

        depth = int(kv.get("depth", "40"))
        return gen_sequences(depth).make_function(tail)
    raise ValueError(f"unknown function kind {kind!r}")
