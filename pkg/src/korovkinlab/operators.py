"""Positive linear operator families: multivariate Mellin moment kernels and
bivariate Kantorovich operators on the simplex, plus gating and positivity checks.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable

import numpy as np
from scipy.linalg import eigh_tridiagonal
from scipy.special import gammaln

from .modular import Box, FunctionSample, Grid, Simplex2, point_eval
from .tolerances import DEFAULT_TOLERANCES, Tolerances
from .nets import is_perfect_square

KANTOROVICH_N_MAX = 400
MOMENT_QUAD_POINTS = 40


@dataclass(frozen=True, eq=False)
class OperatorFamily:
    """w -> positive linear operator acting on sampled functions."""

    apply: Callable[[int, FunctionSample], FunctionSample]
    positivity_declared: bool
    domain_note: str


# ---------------------------------------------------------------------------
# Mellin moment operators


@dataclass(frozen=True, eq=False)
class MellinParams:
    N: int = 1
    in_F: Callable[[int], bool] = lambda w: not is_perfect_square(w)
    w_range: int = 1000

    def __post_init__(self):
        if self.N < 1:
            raise ValueError("dimension must be >= 1")
        flags = [self.in_F(w) for w in range(1, self.w_range + 1)]
        if sum(flags) < 2 or sum(not f for f in flags) < 2:
            raise ValueError("the distinguished set and its complement must "
                             "both be infinite (>= 2 members up to horizon)")


@lru_cache(maxsize=4096)
def _moment_rule(w: int, n: int = MOMENT_QUAD_POINTS):
    """Gauss rule for the weight t^w on [0, 1]: nodes t_q and weights v_q with
    sum v_q g(t_q) = integral of t^w g(t) dt, exact for polynomial g up to
    degree 2n - 1.  Built by Golub-Welsch from the Jacobi recurrence, which
    stays finite for arbitrarily large w."""
    k = np.arange(n, dtype=float)
    diag = np.where(k == 0, w / (w + 2.0), w * w / ((2 * k + w) * (2 * k + w + 2.0)))
    kk = np.arange(1, n, dtype=float)
    off = (2 * kk * (kk + w) / (2 * kk + w)) ** 2 / ((2 * kk + w + 1.0) * (2 * kk + w - 1.0))
    x, vec = eigh_tridiagonal(diag, np.sqrt(off))
    t = (x + 1.0) / 2.0
    v = vec[0] ** 2 / (w + 1.0)
    return t, v


def _require_unit_box(grid: Grid, N: int) -> None:
    if not isinstance(grid.region, Box) or grid.dimension != N:
        raise ValueError(f"Mellin operators need a box grid of dimension {N}")
    for a, b in grid.region.intervals:
        if abs(a) > 1e-12 or abs(b - 1.0) > 1e-12:
            raise ValueError("Mellin operators are defined on the unit box")


def mellin_apply(f: FunctionSample, w: int, params: MellinParams) -> FunctionSample:
    """Moment-kernel convolution: at each node s, the integral of
    K_w(t) f(s t) dt over the unit box, with kernel mass 1 on the
    distinguished set F and mass w + 1 off it."""
    _require_unit_box(f.grid, params.N)
    if w < 1 or w > params.w_range:
        raise ValueError("w out of range")
    t, v = _moment_rule(w)
    N = params.N
    norm = (w + 1.0) ** (N if params.in_F(w) else N + 1)
    nodes = f.grid.nodes                      # (n, N)
    if N == 1:
        pts = nodes[:, 0][:, None] * t[None, :]
        fv = point_eval(f, pts[..., None].reshape(-1, 1)).reshape(pts.shape)
        out = norm * (fv @ v)
    else:
        mesh = np.meshgrid(*([t] * N), indexing="ij")
        tq = np.stack([m.ravel() for m in mesh], axis=-1)       # (q^N, N)
        wmesh = np.meshgrid(*([v] * N), indexing="ij")
        vq = np.prod(np.stack([m.ravel() for m in wmesh], axis=-1), axis=-1)
        pts = nodes[:, None, :] * tq[None, :, :]                # (n, q^N, N)
        fv = point_eval(f, pts.reshape(-1, N)).reshape(pts.shape[:2])
        out = norm * (fv @ vq)
    return FunctionSample(grid=f.grid, values=out)


def mellin_error_closed_form(tag: str, w: int, params: MellinParams) -> float:
    """Closed-form sup errors of the moment operators on the test functions:
    zero for the constant on F (mass w off F), 1/(w+2) for coordinates and
    2/(w+3) for squared coordinates."""
    in_f = params.in_F(w)
    if tag == "e0":
        return 0.0 if in_f else float(w)
    if not in_f:
        raise ValueError("closed forms for er/er2 require w in F")
    if tag == "er":
        return 1.0 / (w + 2)
    if tag == "er2":
        return 2.0 / (w + 3)
    raise ValueError(f"invalid tag {tag!r}")


def mellin_family(params: MellinParams) -> OperatorFamily:
    return OperatorFamily(
        apply=lambda w, f: mellin_apply(f, w, params),
        positivity_declared=True,
        domain_note="continuous samples on the unit box [0,1]^N",
    )


# ---------------------------------------------------------------------------
# bivariate Kantorovich operators


@dataclass(frozen=True, eq=False)
class KantorovichParams:
    n_range: int = KANTOROVICH_N_MAX
    H: Callable[[int], bool] = is_perfect_square

    def __post_init__(self):
        idx = np.arange(1, self.n_range + 1)
        frac = sum(self.H(int(n)) for n in idx) / self.n_range
        if frac > DEFAULT_TOLERANCES.density_tol + 1.0 / math.sqrt(self.n_range):
            raise ValueError("gating set must have vanishing density")


_KANT_CACHE: dict = {}


def _kantorovich_terms(n: int):
    ks, js = np.meshgrid(np.arange(n + 1), np.arange(n + 1), indexing="ij")
    keep = (ks + js) <= n
    return ks[keep], js[keep]


def _kantorovich_basis(n: int, grid: Grid) -> np.ndarray:
    """Multinomial basis matrix p_{n,k,j}(x, y), shape (terms, nodes).
    Log-space evaluation keeps n up to the stability cap overflow-free."""
    key = (n, id(grid))
    cached = _KANT_CACHE.get(key)
    if cached is not None:
        return cached
    k, j = _kantorovich_terms(n)
    x = grid.nodes[:, 0]
    y = grid.nodes[:, 1]
    z = 1.0 - x - y
    # simplex centroids are interior, so all three coordinates are positive
    logx, logy, logz = np.log(x), np.log(y), np.log(z)
    logc = (gammaln(n + 1) - gammaln(k + 1) - gammaln(j + 1)
            - gammaln(n - k - j + 1))
    logp = (logc[:, None] + k[:, None] * logx[None, :]
            + j[:, None] * logy[None, :]
            + (n - k - j)[:, None] * logz[None, :])
    basis = np.exp(logp)
    if len(_KANT_CACHE) > 2:
        _KANT_CACHE.clear()
    _KANT_CACHE[key] = basis
    return basis


def kantorovich_apply(f: FunctionSample, n: int) -> FunctionSample:
    """Bernstein-type simplex operator with cell averages: at each node the
    multinomial basis is paired with the mean of f over the matching cell of
    side 1/(n+1), refined by a 2x2 midpoint stencil."""
    if not isinstance(f.grid.region, Simplex2):
        raise ValueError("Kantorovich operators need the planar simplex grid")
    if n < 1 or n > KANTOROVICH_N_MAX:
        raise ValueError(f"n must be within [1, {KANTOROVICH_N_MAX}] for "
                         "stable multinomial evaluation")
    k, j = _kantorovich_terms(n)
    h = 1.0 / (n + 1)
    offs = np.array([0.25, 0.75]) * h
    # (terms, 4, 2) sub-points; (n+1)^2 * cell integral = mean of the 4 values
    us = k[:, None] * h + offs[None, :]
    vs = j[:, None] * h + offs[None, :]
    pts = np.stack([np.repeat(us, 2, axis=1),
                    np.tile(vs, (1, 2))], axis=-1)
    fv = point_eval(f, pts.reshape(-1, 2)).reshape(len(k), 4)
    cell_means = fv.mean(axis=1)
    basis = _kantorovich_basis(n, f.grid)
    return FunctionSample(grid=f.grid, values=cell_means @ basis)


def kantorovich_family(params: KantorovichParams | None = None) -> OperatorFamily:
    return OperatorFamily(
        apply=lambda n, f: kantorovich_apply(f, n),
        positivity_declared=True,
        domain_note="locally integrable samples on the planar simplex",
    )


# ---------------------------------------------------------------------------
# gating and positivity


def gate_family(base: OperatorFamily, H: Callable[[int], bool]) -> OperatorFamily:
    """Multiply the family by the 0/1 sequence vanishing on H."""

    def apply(w: int, f: FunctionSample) -> FunctionSample:
        if H(w):
            return FunctionSample(grid=f.grid, values=np.zeros_like(f.values))
        return base.apply(w, f)

    return OperatorFamily(apply=apply,
                          positivity_declared=base.positivity_declared,
                          domain_note=base.domain_note + " (gated)")


@dataclass(frozen=True)
class PositivityReport:
    positive_set: list
    complement_density_ok: bool


def check_positivity_set(family: OperatorFamily, grid: Grid, w_max: int,
                         trials: int = 10, seed: int = 0,
                         tol: Tolerances = DEFAULT_TOLERANCES) -> PositivityReport:
    """Indices w at which the family maps random nonnegative convex-generated
    probes (sums of squares of affine functions) to nonnegative outputs."""
    if trials < 10:
        raise ValueError("at least 10 trials are required")
    rng = np.random.default_rng(seed)
    dim = grid.dimension
    probes = []
    for _ in range(trials):
        coeffs = rng.uniform(-1.0, 1.0, size=(2, dim + 1))

        def fn(pts, c=coeffs):
            pts = np.atleast_2d(pts)
            aff = c[:, 0][:, None] + c[:, 1:] @ pts.T
            return (aff ** 2).sum(axis=0)

        probes.append(FunctionSample.from_function(grid, fn))
    passed = []
    for w in range(1, w_max + 1):
        ok = all(np.min(family.apply(w, p).values) >= -1e-8 for p in probes)
        if ok:
            passed.append(w)
    frac_failed = 1.0 - len(passed) / w_max
    return PositivityReport(positive_set=passed,
                            complement_density_ok=frac_failed <= tol.density_tol)
