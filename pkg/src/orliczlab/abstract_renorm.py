"""Finite norming machinery on low-dimensional basis sections.

Two seminorm shapes are implemented.  The projection seminorm takes a list of
functionals w_k with cutoffs n_k and weights (1 + eps_k) and evaluates

    sup_k (1 + eps_k) max_{1 <= n <= n_k} |<P_n x, w_k>| .

The leveled seminorm takes, for each section dimension j <= J, a finite set
W_j that (1 + eps_j)-norms the section, and evaluates

    sup_{n <= J} (1 + eta_n) max_{j <= n} max_{w in W_j} |<P_j x, w>| .

Norming sets are built from an angular direction net: each direction
contributes a finite-difference supporting functional of the section norm,
rescaled into the dual ball; the two-sided sandwich is validated on a seeded
sample grid at construction (a finite certificate, not a proof).  The
dimension cap of 3 keeps every net small enough to check in seconds.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from typing import Callable, Sequence

from .logreal import LogReal, Tolerance, ZERO
from .reports import CheckRow, Report
from .vectors import FiniteVector

NormOracle = Callable[[FiniteVector], LogReal]

_MAX_SECTION_DIM = 3


@dataclass(frozen=True)
class SectionFunctional:
    """Linear action on span{e_1..e_level} by coordinate pairing."""

    level: int
    coefficients: tuple[float, ...]
    scale: float = 1.0

    def __post_init__(self) -> None:
        if len(self.coefficients) != self.level:
            raise ValueError(
                f"coefficient list has length {len(self.coefficients)}, "
                f"expected level {self.level}"
            )

    def pair(self, x: FiniteVector, upto: int | None = None) -> LogReal:
        """<P_j x, w> with j = min(upto, level); upto None means the level."""
        j = self.level if upto is None else min(upto, self.level)
        acc = ZERO
        for i in range(1, j + 1):
            coef = self.coefficients[i - 1] * self.scale
            if coef == 0.0:
                continue
            xi = x.get(i)
            if xi.sign != 0:
                acc = acc + xi * LogReal.from_float(coef)
        return acc

    def pair_floats(self, coords: Sequence[float]) -> float:
        j = min(len(coords), self.level)
        return self.scale * sum(self.coefficients[i] * coords[i] for i in range(j))


@dataclass
class ProjectionSeminormSpec:
    """Functionals, cutoffs and weight/defect sequences for the projection
    seminorm; (1 + eps_k)(1 - 2 delta_k) must exceed 1 for every k."""

    functionals: list[SectionFunctional]
    cutoffs: list[int]
    eps: list[float]
    delta: list[float]

    def __post_init__(self) -> None:
        n = len(self.functionals)
        if n == 0:
            raise ValueError("projection seminorm needs at least one functional")
        if not (len(self.cutoffs) == len(self.eps) == len(self.delta) == n):
            raise ValueError("functionals, cutoffs, eps and delta must have equal length")
        for k, (e, d) in enumerate(zip(self.eps, self.delta), start=1):
            if not (0.0 < e < 1.0 and 0.0 <= d < 0.5):
                raise ValueError(f"eps_{k} = {e}, delta_{k} = {d} out of range")
            if not (1.0 + e) * (1.0 - 2.0 * d) > 1.0:
                raise ValueError(
                    f"(1 + eps_{k})(1 - 2 delta_{k}) = {(1 + e) * (1 - 2 * d)} is not > 1"
                )


def projection_seminorm(spec: ProjectionSeminormSpec, x: FiniteVector) -> LogReal:
    """sup over k of (1 + eps_k) max_{n <= n_k} |<P_n x, w_k>|."""
    best = ZERO
    for w, n_k, e in zip(spec.functionals, spec.cutoffs, spec.eps):
        weight = LogReal.from_float(1.0 + e)
        for n in range(1, n_k + 1):
            v = abs(w.pair(x, upto=n)) * weight
            if v > best:
                best = v
    return best


@dataclass
class NormingLevel:
    level: int
    functionals: list[SectionFunctional]
    eps: float
    eta: float

    def __post_init__(self) -> None:
        if not (1.0 > self.eta > self.eps > 0.0):
            raise ValueError(
                f"need 1 > eta > eps > 0 at level {self.level}, "
                f"got eta={self.eta} eps={self.eps}"
            )


@dataclass
class NormingFamily:
    levels: list[NormingLevel] = field(default_factory=list)

    @property
    def top_level(self) -> int:
        return max(l.level for l in self.levels) if self.levels else 0

    def render(self) -> str:
        """Plain-text block: one `level` header plus one line per functional."""
        lines = []
        for lvl in sorted(self.levels, key=lambda l: l.level):
            lines.append(f"level {lvl.level} eps = {lvl.eps!r} eta = {lvl.eta!r}")
            for w in lvl.functionals:
                coeffs = " ".join(repr(c * w.scale) for c in w.coefficients)
                lines.append(f"w {lvl.level} = {coeffs}")
        return "\n".join(lines) + "\n"


def parse_norming_family(text: str) -> NormingFamily:
    levels: dict[int, NormingLevel] = {}
    for raw in text.splitlines():
        line = raw.strip()
        if not line:
            continue
        if line.startswith("level "):
            head, _, rest = line.partition(" eps = ")
            j = int(head.split()[1])
            eps_text, _, eta_text = rest.partition(" eta = ")
            levels[j] = NormingLevel(j, [], eps=float(eps_text), eta=float(eta_text))
        elif line.startswith("w "):
            head, _, coeffs = line.partition("=")
            j = int(head.split()[1])
            vec = tuple(float(tok) for tok in coeffs.split())
            levels[j].functionals.append(SectionFunctional(j, vec))
        else:
            raise ValueError(f"unrecognized family line {raw!r}")
    return NormingFamily(sorted(levels.values(), key=lambda l: l.level))


def _directions(dim: int, count: int) -> list[tuple[float, ...]]:
    """Roughly uniform unit directions; count is a per-circle resolution."""
    if dim == 1:
        return [(1.0,), (-1.0,)]
    if dim == 2:
        out = []
        for i in range(count):
            a = 2.0 * math.pi * (i + 0.5) / count
            out.append((math.cos(a), math.sin(a)))
        return out
    out = [(0.0, 0.0, 1.0), (0.0, 0.0, -1.0)]
    rings = max(3, count // 2)
    for r in range(1, rings):
        incl = math.pi * r / rings
        for i in range(count):
            a = 2.0 * math.pi * (i + 0.5) / count
            out.append(
                (math.sin(incl) * math.cos(a), math.sin(incl) * math.sin(a), math.cos(incl))
            )
    return out


def _norm_float(oracle: NormOracle, coords: Sequence[float]) -> float:
    vec = FiniteVector.from_floats(coords)
    return oracle(vec).to_float()


def _subgradient(oracle: NormOracle, point: Sequence[float], step: float) -> list[float]:
    """Central finite differences of the section norm at a generic point."""
    g = []
    for i in range(len(point)):
        up = list(point)
        dn = list(point)
        up[i] += step
        dn[i] -= step
        g.append((_norm_float(oracle, up) - _norm_float(oracle, dn)) / (2.0 * step))
    return g


def _sample_points(dim: int, count: int, rng: random.Random) -> list[list[float]]:
    pts = []
    while len(pts) < count:
        p = [rng.uniform(-1.0, 1.0) for _ in range(dim)]
        if max(abs(c) for c in p) > 1e-3:
            pts.append(p)
    return pts


def build_norming_family(
    norm_oracle: NormOracle,
    dim: int,
    eps: float,
    seed: int = 0,
    validation_samples: int = 256,
    max_refinements: int = 6,
    fd_step_rel: float = 1e-7,
) -> list[SectionFunctional]:
    """Finite W with (1+eps)^(-1) ||x|| <= max_W |w(x)| <= ||x|| on the section.

    Directions on an angular net each contribute a finite-difference
    supporting functional, deduplicated and rescaled into the dual ball; the
    net is refined until the sandwich holds on a seeded validation sample.
    """
    if dim < 1 or dim > _MAX_SECTION_DIM:
        raise ValueError(f"section dimension must be 1..{_MAX_SECTION_DIM}, got {dim}")
    if not eps > 0.0:
        raise ValueError(f"eps must be positive, got {eps}")

    for i in range(dim):
        unit = [0.0] * dim
        unit[i] = 1.0
        if _norm_float(norm_oracle, unit) <= 0.0:
            raise ValueError(f"norm oracle vanishes on e_{i + 1}; not a norm")

    if dim == 1:
        # the two dual-ball extreme points: w(c e_1) = c ||e_1|| = ||c e_1||
        n1 = _norm_float(norm_oracle, [1.0])
        return [
            SectionFunctional(1, (n1,)),
            SectionFunctional(1, (-n1,)),
        ]

    rng = random.Random(seed)
    samples = _sample_points(dim, validation_samples, rng)
    sample_norms = [_norm_float(norm_oracle, p) for p in samples]
    # initial angular resolution from the euclidean support-function bound
    # 1/cos(theta/2) - 1 <= eps/2, then refine on validation failure
    theta = 2.0 * math.acos(1.0 / (1.0 + min(eps, 1.0) / 2.0))
    count = max(6, int(math.ceil(2.0 * math.pi / theta)))
    lower = 1.0 / (1.0 + eps)

    for _ in range(max_refinements):
        funcs: list[SectionFunctional] = []
        seen: set[tuple[float, ...]] = set()
        for d in _directions(dim, count):
            nd = _norm_float(norm_oracle, d)
            if nd <= 0.0:
                raise ValueError(f"norm oracle vanishes at direction {d}; not a norm")
            point = [c / nd for c in d]  # on the unit sphere of the section norm
            g = _subgradient(norm_oracle, point, fd_step_rel)
            for vec in (tuple(g), tuple(-c for c in g)):
                # finite differences carry ~1e-9 noise; key well above it
                key = tuple(round(c, 6) for c in vec)
                if key not in seen:
                    seen.add(key)
                    funcs.append(SectionFunctional(dim, vec))
        # rescale into the dual ball as witnessed on net + samples
        probe = samples + [list(d) for d in _directions(dim, count)]
        probe_norms = sample_norms + [
            _norm_float(norm_oracle, d) for d in _directions(dim, count)
        ]
        rescaled: list[SectionFunctional] = []
        for w in funcs:
            c_w = max(
                abs(w.pair_floats(p)) / n for p, n in zip(probe, probe_norms)
            )
            scale = 1.0 / c_w if c_w > 1.0 else 1.0
            rescaled.append(SectionFunctional(w.level, w.coefficients, w.scale * scale))
        ok = True
        for p, n in zip(samples, sample_norms):
            best = max(abs(w.pair_floats(p)) for w in rescaled)
            if best < lower * n * (1.0 - 1e-9):
                ok = False
                break
        if ok:
            return rescaled
        count *= 2
    raise ValueError(
        f"could not reach the (1+{eps})-sandwich after {max_refinements} net refinements"
    )


def assemble_norming_family(
    norm_oracle: NormOracle,
    eps: Sequence[float],
    eta: Sequence[float],
    seed: int = 0,
    validation_samples: int = 256,
) -> NormingFamily:
    """Per-level norming sets over sections of dimension 1..len(eps)."""
    if len(eps) != len(eta):
        raise ValueError("eps and eta must have equal length")
    levels = []
    for j, (e, h) in enumerate(zip(eps, eta), start=1):
        funcs = build_norming_family(
            norm_oracle, j, e, seed=seed + j, validation_samples=validation_samples
        )
        levels.append(NormingLevel(level=j, functionals=funcs, eps=e, eta=h))
    return NormingFamily(levels=levels)


def rho_eval(family: NormingFamily, x: FiniteVector) -> LogReal:
    """sup over n <= J of (1 + eta_n) max_{j <= n} max_{W_j} |<P_j x, w>|."""
    top = family.top_level
    if x.max_index > top:
        raise ValueError(
            f"support reaches index {x.max_index}, beyond the family's top level {top}"
        )
    best = ZERO
    inner = ZERO
    for lvl in sorted(family.levels, key=lambda l: l.level):
        for w in lvl.functionals:
            v = abs(w.pair(x, upto=lvl.level))
            if v > inner:
                inner = v
        weighted = inner * LogReal.from_float(1.0 + lvl.eta)
        if weighted > best:
            best = weighted
    return best


def check_precisely_norming(
    W: Sequence[SectionFunctional],
    norm_oracle: NormOracle,
    samples: Sequence[FiniteVector],
    tol: Tolerance,
) -> Report:
    """Per-sample attainment certificate: does max_W |w(x)| reach ||x||?

    This is a finite-sample check; it can refute but never prove the
    precise-norming property.
    """
    if not W:
        raise ValueError("empty functional set")
    rows = []
    worst_gap = 0.0
    for i, x in enumerate(samples):
        nx = norm_oracle(x).to_float()
        best = max(abs(w.pair(x)).to_float() for w in W)
        gap = (nx - best) / nx if nx > 0 else 0.0
        worst_gap = max(worst_gap, gap)
        rows.append(
            CheckRow(
                check="attainment",
                indices=(i,),
                lhs_log2=math.log2(best) if best > 0 else -math.inf,
                rhs_log2=math.log2(nx) if nx > 0 else -math.inf,
                margin_log2=gap,
                passed=gap <= tol.rel,
                note="attained" if gap <= tol.rel else f"gap={gap:.3e}",
            )
        )
    attained = sum(1 for r in rows if r.passed)
    return Report(
        name="precisely-norming",
        rows=rows,
        summary={
            "samples": len(rows),
            "attained": attained,
            "worst_gap_rel": worst_gap,
        },
    )
