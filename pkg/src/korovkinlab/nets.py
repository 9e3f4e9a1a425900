"""Nets, summability matrices, densities, convergence modes and rate classes.

A `Net` is a real-valued family indexed by 1..horizon (single index) or by
pairs (i, j) with both coordinates in 1..horizon.  All convergence modes act
on nets truncated at a finite horizon; infinite limits over the row index
are replaced by last-quarter-of-rows statistics with oscillation-based
convergence flags.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Sequence

import numpy as np

from .tolerances import DEFAULT_TOLERANCES, Tolerances

MIN_HORIZON = 8
MIN_AXIOM_HORIZON = 32

RowPredicate = Callable[[int, np.ndarray], np.ndarray]


# ---------------------------------------------------------------------------
# nets


@dataclass(frozen=True, eq=False)
class Net:
    """A truncated real net.  `values[w-1]` (single) or `values[i-1, j-1]` (pair)."""

    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "values", vals)
        if vals.ndim not in (1, 2):
            raise ValueError("net values must be a 1-D or square 2-D array")
        if vals.ndim == 2 and vals.shape[0] != vals.shape[1]:
            raise ValueError("pair nets must be square")
        if vals.shape[0] < MIN_HORIZON:
            raise ValueError(f"horizon must be at least {MIN_HORIZON}")
        if not np.all(np.isfinite(vals)):
            raise ValueError("net values must be finite")

    @property
    def horizon(self) -> int:
        return self.values.shape[0]

    @property
    def is_pair(self) -> bool:
        return self.values.ndim == 2

    @classmethod
    def from_function(cls, fn: Callable[[np.ndarray], np.ndarray], horizon: int) -> "Net":
        w = np.arange(1, horizon + 1)
        return cls(np.asarray(fn(w), dtype=float))

    @classmethod
    def from_pair_function(cls, fn, horizon: int) -> "Net":
        i, j = np.meshgrid(np.arange(1, horizon + 1), np.arange(1, horizon + 1),
                           indexing="ij")
        return cls(np.asarray(fn(i, j), dtype=float))

    def single_view(self) -> np.ndarray:
        """Values seen by single-index modes: the diagonal for pair nets."""
        if self.is_pair:
            return np.diagonal(self.values).copy()
        return self.values

    def pair_entry_predicate(self, test: Callable[[np.ndarray], np.ndarray]) -> RowPredicate:
        """Row predicate (i, j_array) -> bool selecting entries whose value passes `test`.

        Single nets are extended to pairs by x_{i,j} := x_j, so row i of the
        extended net weighs the original sequence.  Indices beyond the
        horizon are never selected.
        """
        h = self.horizon
        if self.is_pair:
            def pred(i: int, j: np.ndarray) -> np.ndarray:
                ok = (j <= h) & (i <= h)
                out = np.zeros(j.shape, dtype=bool)
                if i <= h:
                    jj = j[ok]
                    out[ok] = test(self.values[i - 1, jj - 1])
                return out
        else:
            def pred(i: int, j: np.ndarray) -> np.ndarray:
                ok = j <= h
                out = np.zeros(j.shape, dtype=bool)
                jj = j[ok]
                out[ok] = test(self.values[jj - 1])
                return out
        return pred


# ---------------------------------------------------------------------------
# summability matrices and shape functions


@dataclass(frozen=True, eq=False)
class SummabilityMatrix:
    """Nonnegative matrix a_{i,j} with per-row support bound J(i)."""

    entry: Callable[[int, int], float]
    row_support: Callable[[int], int]
    row_values: Callable[[int, np.ndarray], np.ndarray] | None = None
    name: str = "custom"

    def row(self, i: int, j: np.ndarray) -> np.ndarray:
        if self.row_values is not None:
            return np.asarray(self.row_values(i, j), dtype=float)
        return np.array([self.entry(i, int(jj)) for jj in j], dtype=float)


@dataclass(frozen=True, eq=False)
class ShapeFunction:
    """Shape function on index pairs; rows are restricted to psi(i, j) >= 0."""

    psi: Callable[[int, np.ndarray], np.ndarray]
    name: str = "custom"


def triangular_shape() -> ShapeFunction:
    return ShapeFunction(psi=lambda i, j: i - j, name="triangular")


def cesaro_entry(i: int, j: int) -> float:
    """Cesaro matrix entry: 1/i for j <= i, else 0."""
    if i < 1 or j < 1:
        raise ValueError("indices must be >= 1")
    return 1.0 / i if j <= i else 0.0


def degenerate_entry(i: int, j: int) -> float:
    """Degenerate matrix entry 1/i^2 for j <= i^2; its restricted row sums vanish."""
    if i < 1 or j < 1:
        raise ValueError("indices must be >= 1")
    return 1.0 / (i * i) if j <= i * i else 0.0


def cesaro_matrix() -> SummabilityMatrix:
    return SummabilityMatrix(
        entry=cesaro_entry,
        row_support=lambda i: i,
        row_values=lambda i, j: np.where(j <= i, 1.0 / i, 0.0),
        name="cesaro",
    )


def degenerate_matrix() -> SummabilityMatrix:
    return SummabilityMatrix(
        entry=degenerate_entry,
        row_support=lambda i: i * i,
        row_values=lambda i, j: np.where(j <= i * i, 1.0 / (i * i), 0.0),
        name="degenerate",
    )


def identity_matrix() -> SummabilityMatrix:
    return SummabilityMatrix(
        entry=lambda i, j: 1.0 if i == j else 0.0,
        row_support=lambda i: i,
        row_values=lambda i, j: np.where(j == i, 1.0, 0.0),
        name="identity",
    )


# ---------------------------------------------------------------------------
# convergence modes


@dataclass(frozen=True)
class Ordinary:
    pass


@dataclass(frozen=True)
class Frechet:
    pass


@dataclass(frozen=True, eq=False)
class DensityFilter:
    """Filter generated by a declared large set of indices (vectorized predicate)."""

    member: Callable[[np.ndarray], np.ndarray]
    name: str = "custom"


@dataclass(frozen=True, eq=False)
class PsiAStatistical:
    matrix: SummabilityMatrix
    shape: ShapeFunction = field(default_factory=triangular_shape)


@dataclass(frozen=True)
class Almost:
    m_max: int


ConvergenceMode = Ordinary | Frechet | DensityFilter | PsiAStatistical | Almost


# ---------------------------------------------------------------------------
# reports


@dataclass(frozen=True)
class SummabilityReport:
    a1: bool
    a2: bool
    a2_estimate: float
    a3: bool


@dataclass(frozen=True)
class DensityReport:
    estimate: float
    partial_sums: list
    converged: bool
    oscillation: float


class RateKind(Enum):
    LITTLE_O = "LittleO"
    BIG_O = "BigO"
    NEITHER = "Neither"


@dataclass(frozen=True)
class RateClass:
    kind: RateKind
    limsup_estimate: float
    evidence: list

    @property
    def satisfies_big_o(self) -> bool:
        # LittleO verdicts also satisfy the BigO bound.
        return self.kind is not RateKind.NEITHER


@dataclass(frozen=True)
class EpsCheck:
    eps: float
    ok: bool
    worst: float


@dataclass(frozen=True)
class LimitReport:
    converges: bool
    checks: list


# ---------------------------------------------------------------------------
# axiom checks and densities


def _tail_start(horizon: int) -> int:
    """First index (1-based) strictly beyond ceil(3*horizon/4)."""
    return math.ceil(3 * horizon / 4) + 1


def _last_quarter_start(i_max: int) -> int:
    return math.ceil(3 * i_max / 4) + 1


def _restricted_row_sum(matrix: SummabilityMatrix, shape: ShapeFunction, i: int,
                        keep: RowPredicate | None = None) -> float:
    support = int(matrix.row_support(i))
    if support < 1:
        return 0.0
    j = np.arange(1, support + 1)
    mask = np.asarray(shape.psi(i, j)) >= 0
    if keep is not None:
        mask &= np.asarray(keep(i, j), dtype=bool)
    if not mask.any():
        return 0.0
    return math.fsum(matrix.row(i, j)[mask].tolist())


def check_summability_axioms(matrix: SummabilityMatrix, shape: ShapeFunction,
                             i_max: int, tol: Tolerances = DEFAULT_TOLERANCES
                             ) -> SummabilityReport:
    """Check (A1) restricted row sums <= 1, (A2) liminf of row sums > 0 and
    (A3) vanishing columns, at horizon i_max."""
    if i_max < MIN_AXIOM_HORIZON:
        raise ValueError(f"horizon too small: i_max must be >= {MIN_AXIOM_HORIZON}")
    row_sums = np.array([_restricted_row_sum(matrix, shape, i)
                         for i in range(1, i_max + 1)])
    a1 = bool(np.all(row_sums <= 1.0 + 1e-12))
    lo = _last_quarter_start(i_max)
    a2_estimate = float(np.min(row_sums[lo - 1:]))
    a2 = a2_estimate >= tol.a2_tol
    probe_js = sorted({1, 2, math.ceil(i_max / 4)})
    a3 = True
    for j in probe_js:
        jarr = np.array([j])
        col = np.array([float(matrix.row(i, jarr)[0]) for i in range(lo, i_max + 1)])
        if col[-1] > tol.a3_tol:
            a3 = False
        if np.any(np.diff(col) > 1e-12):
            a3 = False
    return SummabilityReport(a1=a1, a2=a2, a2_estimate=a2_estimate, a3=a3)


def triangular_density(K: RowPredicate, matrix: SummabilityMatrix,
                       shape: ShapeFunction, i_max: int,
                       tol: Tolerances = DEFAULT_TOLERANCES) -> DensityReport:
    """Horizon estimate of the density of a pair-index set under the matrix.

    Partial sums S_i run over the row slices where the shape function is
    nonnegative; the estimate is the mean over the last quarter of rows and
    `converged` reflects the oscillation within that window.
    """
    if i_max < MIN_AXIOM_HORIZON:
        raise ValueError(f"horizon too small: i_max must be >= {MIN_AXIOM_HORIZON}")
    partials = []
    for i in range(1, i_max + 1):
        partials.append((i, _restricted_row_sum(matrix, shape, i, keep=K)))
    lo = _last_quarter_start(i_max)
    window = [s for (i, s) in partials if i >= lo]
    estimate = math.fsum(window) / len(window)
    oscillation = max(window) - min(window)
    return DensityReport(estimate=estimate, partial_sums=partials,
                         converged=oscillation <= tol.density_tol,
                         oscillation=oscillation)


_PSI_VALIDATION_CACHE: set = set()


def _validate_psi_a(mode: PsiAStatistical, horizon: int,
                    tol: Tolerances) -> None:
    i_max = max(horizon, MIN_AXIOM_HORIZON)
    key = (id(mode.matrix), id(mode.shape), i_max, tol)
    if key in _PSI_VALIDATION_CACHE:
        return
    report = check_summability_axioms(mode.matrix, mode.shape, i_max, tol)
    if not report.a1:
        raise ValueError(f"matrix '{mode.matrix.name}' violates (A1); "
                         "its limit statements cannot be trusted")
    if not report.a2:
        raise ValueError(
            f"(A2) fails for matrix '{mode.matrix.name}' "
            f"(liminf estimate {report.a2_estimate:.3g}); under such a matrix "
            "every bounded net would pass every limit query")
    if not report.a3:
        raise ValueError(f"matrix '{mode.matrix.name}' violates (A3)")
    _PSI_VALIDATION_CACHE.add(key)


def _density_filter_indices(mode: DensityFilter, horizon: int) -> np.ndarray:
    idx = np.arange(1, horizon + 1)
    try:
        memb = np.asarray(mode.member(idx), dtype=bool)
        if memb.shape != idx.shape:
            raise TypeError
    except (TypeError, ValueError):
        memb = np.array([bool(mode.member(int(j))) for j in idx])
    if memb.sum() < math.ceil(horizon / 2):
        raise ValueError("density filter predicate admits fewer than half of "
                         "the indices up to the horizon; not a sane free filter")
    return idx[memb]


def mode_limit(x: Net, mode: ConvergenceMode, candidate: float,
               eps_schedule: Sequence[float],
               tol: Tolerances = DEFAULT_TOLERANCES) -> LimitReport:
    """Decide convergence of the net to `candidate` under the mode, for each
    epsilon in a decreasing schedule."""
    if not np.isfinite(candidate):
        raise ValueError("candidate must be finite")
    eps_schedule = list(eps_schedule)
    if not eps_schedule or any(e <= 0 for e in eps_schedule):
        raise ValueError("eps schedule must be non-empty and positive")
    if any(b > a for a, b in zip(eps_schedule, eps_schedule[1:])):
        raise ValueError("eps schedule must be decreasing")

    h = x.horizon
    checks = []
    if isinstance(mode, (Ordinary, Frechet)):
        vals = x.single_view()
        tail = vals[_tail_start(h) - 1:]
        worst = float(np.max(np.abs(tail - candidate)))
        for eps in eps_schedule:
            checks.append(EpsCheck(eps=eps, ok=worst <= eps, worst=worst))
    elif isinstance(mode, DensityFilter):
        vals = x.single_view()
        idx = _density_filter_indices(mode, h)
        idx = idx[idx >= _tail_start(h)]
        if idx.size == 0:
            raise ValueError("density filter has no members in the tail window")
        worst = float(np.max(np.abs(vals[idx - 1] - candidate)))
        for eps in eps_schedule:
            checks.append(EpsCheck(eps=eps, ok=worst <= eps, worst=worst))
    elif isinstance(mode, PsiAStatistical):
        _validate_psi_a(mode, h, tol)
        for eps in eps_schedule:
            K = x.pair_entry_predicate(lambda v, e=eps: np.abs(v - candidate) >= e)
            report = triangular_density(K, mode.matrix, mode.shape, h, tol)
            checks.append(EpsCheck(eps=eps, ok=report.estimate <= tol.density_tol,
                                   worst=report.estimate))
    elif isinstance(mode, Almost):
        vals = x.single_view()
        n = h - mode.m_max
        if n < 1:
            raise ValueError("horizon insufficient for the largest shifted block")
        csum = np.concatenate([[0.0], np.cumsum(vals)])
        means = (csum[np.arange(mode.m_max + 1) + n]
                 - csum[np.arange(mode.m_max + 1)]) / n
        worst = float(np.max(np.abs(means - candidate)))
        for eps in eps_schedule:
            checks.append(EpsCheck(eps=eps, ok=worst <= eps, worst=worst))
    else:
        raise TypeError(f"unknown convergence mode: {mode!r}")

    return LimitReport(converges=all(c.ok for c in checks), checks=checks)


# ---------------------------------------------------------------------------
# filter limsup / liminf


_PSI_WEIGHT_CACHE: dict = {}


def _psi_a_column_weights(mode: PsiAStatistical, horizon: int) -> np.ndarray:
    """Weights c_j so that the density estimate of a column set S is
    sum_{j in S} c_j (mean of last-quarter restricted row entries)."""
    key = (id(mode.matrix), id(mode.shape), horizon)
    cached = _PSI_WEIGHT_CACHE.get(key)
    if cached is not None:
        return cached
    lo = _last_quarter_start(horizon)
    rows = range(lo, horizon + 1)
    c = np.zeros(horizon)
    for i in rows:
        support = min(int(mode.matrix.row_support(i)), horizon)
        if support < 1:
            continue
        j = np.arange(1, support + 1)
        mask = np.asarray(mode.shape.psi(i, j)) >= 0
        c[:support][mask] += mode.matrix.row(i, j)[mask]
    c /= (horizon - lo + 1)
    _PSI_WEIGHT_CACHE[key] = c
    return c


def _measure_system(x: Net, mode: ConvergenceMode, tol: Tolerances):
    """Flatten the net into (values, weights, threshold) so that a set of
    indices is filter-large iff the weight of its complement is <= threshold."""
    h = x.horizon
    if isinstance(mode, (Ordinary, Frechet)):
        vals = x.single_view()[_tail_start(h) - 1:]
        k = vals.size
        weights = np.full(k, 1.0 / k)
        return vals, weights, 0.5 / k
    if isinstance(mode, DensityFilter):
        idx = _density_filter_indices(mode, h)
        idx = idx[idx >= _tail_start(h)]
        if idx.size == 0:
            raise ValueError("density filter has no members in the tail window")
        vals = x.single_view()[idx - 1]
        weights = np.full(vals.size, 1.0 / vals.size)
        return vals, weights, 0.5 / vals.size
    if isinstance(mode, PsiAStatistical):
        _validate_psi_a(mode, h, tol)
        if x.is_pair:
            lo = _last_quarter_start(h)
            vals_list, w_list = [], []
            nrows = h - lo + 1
            for i in range(lo, h + 1):
                support = min(int(mode.matrix.row_support(i)), h)
                if support < 1:
                    continue
                j = np.arange(1, support + 1)
                mask = np.asarray(mode.shape.psi(i, j)) >= 0
                if not mask.any():
                    continue
                vals_list.append(x.values[i - 1, :support][mask])
                w_list.append(mode.matrix.row(i, j)[mask] / nrows)
            return (np.concatenate(vals_list), np.concatenate(w_list),
                    tol.density_tol)
        c = _psi_a_column_weights(mode, h)
        return x.values, c, tol.density_tol
    raise ValueError("limsup/liminf is not defined for this mode (almost "
                     "convergence has no filter representation)")


def filter_limsup_liminf(x: Net, mode: ConvergenceMode,
                         tol: Tolerances = DEFAULT_TOLERANCES
                         ) -> tuple[float, float]:
    """Filter limit superior and inferior by bisection over candidate levels.

    A level b lies below the limsup iff the set where the net exceeds b is
    not filter-small; 60 bisection iterations over [min-1, max+1] pin the
    threshold to well below `level_tol` for bounded nets.
    """
    vals, weights, thr = _measure_system(x, mode, tol)
    order = np.argsort(vals, kind="stable")
    sv = vals[order]
    sw = weights[order]
    # suffix[i] = weight of entries with position >= i
    suffix = np.concatenate([np.cumsum(sw[::-1])[::-1], [0.0]])
    prefix = np.concatenate([[0.0], np.cumsum(sw)])
    total = float(prefix[-1])

    def measure_above(b: float) -> float:
        return float(suffix[np.searchsorted(sv, b, side="right")])

    def measure_below(a: float) -> float:
        return float(prefix[np.searchsorted(sv, a, side="left")])

    vmin, vmax = float(sv[0]), float(sv[-1])

    if total <= thr:
        return -math.inf, math.inf

    lo, hi = vmin - 1.0, vmax + 1.0
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if measure_above(mid) > thr:
            lo = mid
        else:
            hi = mid
    limsup = 0.5 * (lo + hi)

    lo, hi = vmin - 1.0, vmax + 1.0
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if measure_below(mid) > thr:
            hi = mid
        else:
            lo = mid
    liminf = 0.5 * (lo + hi)
    return limsup, liminf


# ---------------------------------------------------------------------------
# rate classification


def _evidence_ladder(ratio: Net) -> list:
    vals = ratio.single_view()
    out = []
    w = 1
    while w <= ratio.horizon:
        out.append((w, float(vals[w - 1])))
        w *= 2
    return out


def rate_classify(num: Net, den: Net, mode: ConvergenceMode,
                  tol: Tolerances = DEFAULT_TOLERANCES) -> RateClass:
    """Classify num = o(den), O(den) or neither under the mode, from the
    filter limsup of the ratio net |num|/|den|."""
    if num.is_pair != den.is_pair or num.horizon != den.horizon:
        raise ValueError("nets must share index kind and horizon")
    if np.any(den.values == 0.0):
        raise ValueError("denominator net must be nonzero at every index")
    ratio = Net(np.abs(num.values) / np.abs(den.values))
    limsup, _ = filter_limsup_liminf(ratio, mode, tol)
    if limsup <= tol.o_tol:
        kind = RateKind.LITTLE_O
    elif limsup <= tol.big_c_cap:
        kind = RateKind.BIG_O
    else:
        kind = RateKind.NEITHER
    return RateClass(kind=kind, limsup_estimate=limsup,
                     evidence=_evidence_ladder(ratio))


# ---------------------------------------------------------------------------
# convenience predicates


def is_perfect_square(w: int) -> bool:
    r = math.isqrt(w)
    return r * r == w


def squares_predicate(idx: np.ndarray) -> np.ndarray:
    r = np.sqrt(idx).round().astype(np.int64)
    return r * r == idx


def non_squares_predicate(idx: np.ndarray) -> np.ndarray:
    return ~squares_predicate(idx)


def non_squares_filter() -> DensityFilter:
    return DensityFilter(member=non_squares_predicate, name="non-squares")
