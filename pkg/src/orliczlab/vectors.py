"""Finitely supported coordinate vectors and the Luxemburg norm.

Vectors live against the unit-vector basis with 1-based indices; only nonzero
coordinates are stored.  The norm of x is the unique rho > 0 at which the
modular sum M(|a_i| / rho) equals 1, located by bisection on log2(rho); the
modular is strictly decreasing and continuous in rho, so the standard bracket

    [ max|a_i| / M^(-1)(1),  N max|a_i| / M^(-1)(1/N) ]

always changes sign.
"""

from __future__ import annotations

import math
from typing import Iterable, Mapping

import numpy as np

from .logreal import LogReal, Tolerance, ZERO, log_sum
from .orlicz import DyadicOrliczFunction

_LN2 = math.log(2.0)

DEFAULT_NORM_TOL = Tolerance(rel=1e-13)

# padding applied to bracket endpoints so that M(M^(-1)(1)) round-off cannot
# break the sign-change invariant
_BRACKET_PAD = 1e-11


class FiniteVector:
    """Immutable finitely supported vector with LogReal coordinates."""

    __slots__ = ("_coords", "_sorted_log2", "_max_index")

    def __init__(self, coords: Mapping[int, LogReal] | Iterable[tuple[int, LogReal]]):
        items = coords.items() if isinstance(coords, Mapping) else coords
        stored: dict[int, LogReal] = {}
        for idx, val in items:
            if idx < 1 or idx != int(idx):
                raise ValueError(f"coordinate indices must be positive integers, got {idx}")
            if val.sign != 0:
                stored[int(idx)] = val
        self._coords = dict(sorted(stored.items()))
        self._sorted_log2 = np.sort(
            np.array([v.log2mag for v in self._coords.values()], dtype=np.float64)
        )[::-1]
        self._max_index = max(self._coords) if self._coords else 0

    @staticmethod
    def from_floats(values: Iterable[float]) -> "FiniteVector":
        return FiniteVector(
            {i: LogReal.from_float(v) for i, v in enumerate(values, start=1)}
        )

    @staticmethod
    def parse(text: str) -> "FiniteVector":
        """Whitespace-separated decimal or '±2^e' tokens, index-implicit."""
        tokens = text.split()
        return FiniteVector(
            {i: LogReal.parse(tok) for i, tok in enumerate(tokens, start=1)}
        )

    # -- views -----------------------------------------------------------

    @property
    def coords(self) -> dict[int, LogReal]:
        return dict(self._coords)

    @property
    def support_size(self) -> int:
        return len(self._coords)

    @property
    def max_index(self) -> int:
        return self._max_index

    @property
    def is_zero(self) -> bool:
        return not self._coords

    def sorted_log2_magnitudes(self) -> np.ndarray:
        """log2 of the nonzero magnitudes, nonincreasing."""
        return self._sorted_log2.copy()

    def get(self, index: int) -> LogReal:
        return self._coords.get(index, ZERO)

    def head(self, m: int) -> "FiniteVector":
        """Truncation to basis indices <= m."""
        return FiniteVector({i: v for i, v in self._coords.items() if i <= m})

    def __eq__(self, other: object) -> bool:
        return isinstance(other, FiniteVector) and self._coords == other._coords

    def __hash__(self):
        return hash(tuple(self._coords.items()))

    def __add__(self, other: "FiniteVector") -> "FiniteVector":
        out = dict(self._coords)
        for i, v in other._coords.items():
            out[i] = out.get(i, ZERO) + v
        return FiniteVector(out)

    def scale(self, factor: LogReal) -> "FiniteVector":
        return FiniteVector({i: v * factor for i, v in self._coords.items()})

    def render(self) -> str:
        if not self._coords:
            return "0"
        dense = []
        for i in range(1, self._max_index + 1):
            dense.append(self.get(i).render())
        return " ".join(dense)

    def __repr__(self) -> str:
        return f"FiniteVector({self.render()})"


def rearrange(x: FiniteVector) -> FiniteVector:
    """Decreasing rearrangement of the magnitudes, packed into indices 1..N."""
    vals = sorted((abs(v) for v in x.coords.values()), reverse=True)
    return FiniteVector({i: v for i, v in enumerate(vals, start=1)})


def modular(M: DyadicOrliczFunction, x: FiniteVector, rho: LogReal) -> LogReal:
    """Sum of M(|a_i| / rho) over the support of x."""
    if rho.sign <= 0:
        raise ValueError(f"modular scale rho must be positive, got {rho}")
    return log_sum(M.eval(abs(v) / rho) for v in x.coords.values())


def luxemburg_norm(
    M: DyadicOrliczFunction, x: FiniteVector, tol: Tolerance = DEFAULT_NORM_TOL
) -> LogReal:
    """The norm inf{rho > 0 : modular(x, rho) <= 1}; zero for the zero vector.

    The displayed infimum is the root of the strictly decreasing map
    rho -> modular(x, rho) = 1, found by bisection until the bracket's
    relative width drops below tol.rel.
    """
    if x.is_zero:
        return ZERO
    logmags = x.sorted_log2_magnitudes()
    out = _head_norms_log2(M, logmags, tol, heads=np.array([len(logmags) - 1]))
    return LogReal.from_log2(float(out[0]))


def _head_norms_log2(
    M: DyadicOrliczFunction,
    sorted_log2: np.ndarray,
    tol: Tolerance = DEFAULT_NORM_TOL,
    heads: np.ndarray | None = None,
) -> np.ndarray:
    """log2 Luxemburg norms of prefixes of a sorted-descending magnitude array.

    heads holds 0-based prefix end indices (default: all prefixes).  All
    bisections run in lockstep on shared numpy state, which is what keeps
    rearranged-head norm computations affordable.
    """
    n_total = len(sorted_log2)
    if n_total == 0:
        return np.empty(0)
    if heads is None:
        heads = np.arange(n_total)
    logmax = float(sorted_log2[0])
    minv1 = M.inverse_log2(0.0)
    sizes = heads + 1.0
    minv_k = np.array([M.inverse_log2(-math.log2(k)) for k in sizes])
    lo0 = logmax - minv1
    hi0 = np.log2(sizes) + logmax - minv_k
    # the exponent grid cannot resolve below one ulp at the bracket's own
    # magnitude; both the endpoint padding and the width target scale with it
    scale = max(1.0, abs(lo0), float(np.max(np.abs(hi0))))
    pad = max(_BRACKET_PAD, scale * 2.0 ** -46)
    lo = np.full(len(heads), lo0 - pad)
    hi = hi0 + pad
    target = max(math.log1p(tol.rel) / _LN2, scale * 2.0 ** -50)
    tri = np.arange(n_total)[None, :] <= heads[:, None]
    sanity = _modular_rows(M, sorted_log2, tri, lo)
    if not np.all(sanity >= 1.0):
        raise AssertionError("luxemburg bracket failed on the low side")
    sanity = _modular_rows(M, sorted_log2, tri, hi)
    if not np.all(sanity <= 1.0):
        raise AssertionError("luxemburg bracket failed on the high side")
    while float(np.max(hi - lo)) > target:
        mid = 0.5 * (lo + hi)
        mods = _modular_rows(M, sorted_log2, tri, mid)
        above = mods > 1.0
        lo = np.where(above, mid, lo)
        hi = np.where(above, hi, mid)
    return 0.5 * (lo + hi)


def _modular_rows(
    M: DyadicOrliczFunction,
    sorted_log2: np.ndarray,
    tri: np.ndarray,
    logrho: np.ndarray,
) -> np.ndarray:
    u = sorted_log2[None, :] - logrho[:, None]
    u = np.where(tri, u, -np.inf)
    lm = M.eval_log2_array(u)
    return np.exp2(lm).sum(axis=1)
