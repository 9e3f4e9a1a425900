"""Quadrature grids, sampled functions, Orlicz modulars and moduli of continuity."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np


# ---------------------------------------------------------------------------
# regions and grids


@dataclass(frozen=True)
class Box:
    intervals: tuple

    def __post_init__(self):
        ivs = tuple((float(a), float(b)) for a, b in self.intervals)
        object.__setattr__(self, "intervals", ivs)
        for a, b in ivs:
            if not (b > a):
                raise ValueError(f"degenerate interval [{a}, {b}]")

    @property
    def dimension(self) -> int:
        return len(self.intervals)

    @property
    def volume(self) -> float:
        return math.prod(b - a for a, b in self.intervals)


@dataclass(frozen=True)
class Simplex2:
    """The planar simplex x, y >= 0, x + y <= 1."""

    @property
    def dimension(self) -> int:
        return 2

    @property
    def volume(self) -> float:
        return 0.5


Region = Box | Simplex2


@dataclass(frozen=True, eq=False)
class Grid:
    """Midpoint-type quadrature grid with positive weights and Euclidean metric."""

    region: Region
    nodes: np.ndarray          # (n, dim)
    weights: np.ndarray        # (n,)
    h_min: float
    resolution: int
    axes: tuple | None = None  # per-axis midpoints for box grids

    @property
    def dimension(self) -> int:
        return self.nodes.shape[1]

    @property
    def measure(self) -> float:
        return float(math.fsum(self.weights.tolist()))


def build_grid(region: Region, resolution: int) -> Grid:
    """Box regions get a tensor midpoint rule; the simplex gets centroids of
    the triangulated unit square cells that lie inside it (weights = areas)."""
    if resolution < 4:
        raise ValueError("resolution must be >= 4")
    if isinstance(region, Box):
        axes = []
        for a, b in region.intervals:
            h = (b - a) / resolution
            axes.append(a + (np.arange(resolution) + 0.5) * h)
        mesh = np.meshgrid(*axes, indexing="ij")
        nodes = np.stack([m.ravel() for m in mesh], axis=-1)
        n = nodes.shape[0]
        weights = np.full(n, region.volume / n)
        h_min = min((b - a) / resolution for a, b in region.intervals)
        total = math.fsum(weights.tolist())
        assert abs(total - region.volume) <= 1e-10 * max(1.0, region.volume)
        return Grid(region=region, nodes=nodes, weights=weights,
                    h_min=h_min, resolution=resolution, axes=tuple(axes))
    if isinstance(region, Simplex2):
        res = resolution
        pts = []
        for p in range(res):
            for q in range(res):
                if p + q <= res - 1:       # lower-left triangle of cell (p, q)
                    pts.append(((p + 1 / 3) / res, (q + 1 / 3) / res))
                if p + q <= res - 2:       # upper-right triangle
                    pts.append(((p + 2 / 3) / res, (q + 2 / 3) / res))
        nodes = np.array(pts)
        weights = np.full(len(pts), 0.5 / (res * res))
        total = math.fsum(weights.tolist())
        assert abs(total - 0.5) <= 1e-6
        h_min = math.sqrt(2.0) / (3 * res)
        return Grid(region=region, nodes=nodes, weights=weights,
                    h_min=h_min, resolution=res)
    raise TypeError(f"unknown region {region!r}")


# ---------------------------------------------------------------------------
# function samples


@dataclass(frozen=True, eq=False)
class FunctionSample:
    """Values at grid nodes, with an optional analytic evaluator for
    off-node quadrature refinement."""

    grid: Grid
    values: np.ndarray
    evaluator: Callable[[np.ndarray], np.ndarray] | None = None

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "values", vals)
        if vals.shape != (self.grid.nodes.shape[0],):
            raise ValueError("values must have one entry per grid node")
        if not np.all(np.isfinite(vals)):
            raise ValueError("sample values must be finite")

    @classmethod
    def from_function(cls, grid: Grid, fn: Callable[[np.ndarray], np.ndarray]
                      ) -> "FunctionSample":
        return cls(grid=grid, values=np.asarray(fn(grid.nodes), dtype=float),
                   evaluator=fn)

    def sup_abs(self) -> float:
        return float(np.max(np.abs(self.values)))


_INTERP_CACHE: dict = {}


def point_eval(sample: FunctionSample, pts: np.ndarray) -> np.ndarray:
    """Evaluate a sample at arbitrary points: the analytic evaluator when
    present, otherwise multilinear interpolation between nodes."""
    pts = np.asarray(pts, dtype=float)
    if sample.evaluator is not None:
        return np.asarray(sample.evaluator(pts), dtype=float)
    key = id(sample)
    interp = _INTERP_CACHE.get(key)
    if interp is None:
        grid = sample.grid
        if isinstance(grid.region, Box):
            from scipy.interpolate import RegularGridInterpolator
            shape = tuple([grid.resolution] * grid.dimension)
            interp = RegularGridInterpolator(
                grid.axes, sample.values.reshape(shape),
                bounds_error=False, fill_value=None)
        else:
            from scipy.interpolate import LinearNDInterpolator, NearestNDInterpolator
            lin = LinearNDInterpolator(sample.grid.nodes, sample.values)
            near = NearestNDInterpolator(sample.grid.nodes, sample.values)

            def interp(p, _lin=lin, _near=near):
                out = _lin(p)
                bad = ~np.isfinite(out)
                if np.any(bad):
                    out[bad] = _near(p[bad])
                return out
        _INTERP_CACHE[key] = interp
    return np.asarray(interp(pts), dtype=float)


def sample_from_csv(path, grid: Grid) -> FunctionSample:
    """Load a sample from CSV rows `coord_1, ..., coord_dim, value`; every
    grid node must be matched by exactly one row (within half a spacing)."""
    rows = []
    with open(path, newline="") as fh:
        for row in csv.reader(fh):
            if not row or row[0].lstrip().startswith("#"):
                continue
            rows.append([float(c) for c in row])
    if len(rows) != grid.nodes.shape[0]:
        raise ValueError(f"expected {grid.nodes.shape[0]} rows, got {len(rows)}")
    coords = np.array([r[:-1] for r in rows])
    vals = np.array([r[-1] for r in rows])
    if coords.shape[1] != grid.dimension:
        raise ValueError("coordinate column count does not match grid dimension")
    values = np.full(grid.nodes.shape[0], np.nan)
    from scipy.spatial import cKDTree
    dist, idx = cKDTree(grid.nodes).query(coords)
    if np.max(dist) > 0.5 * grid.h_min:
        raise ValueError("some rows do not match any grid node")
    if len(set(idx.tolist())) != grid.nodes.shape[0]:
        raise ValueError("rows do not cover every grid node exactly once")
    values[idx] = vals
    return FunctionSample(grid=grid, values=values)


# ---------------------------------------------------------------------------
# phi functions and Orlicz modulars


@dataclass(frozen=True)
class PhiFunction:
    family: str                 # "linear" | "power" | "expm1"
    p: float = 1.0

    def __post_init__(self):
        if self.family not in ("linear", "power", "expm1"):
            raise ValueError(f"unknown phi family {self.family!r}")
        if self.family == "power" and self.p < 1:
            raise ValueError("power exponent must be >= 1")
        ladder = np.linspace(0.0, 5.0, 11)
        vals = self(ladder)
        if vals[0] != 0.0 or np.any(np.diff(vals) < 0) or np.any(vals[1:] <= 0):
            raise ValueError("phi must vanish at 0, be nondecreasing and "
                             "positive for positive arguments")

    def __call__(self, u):
        u = np.asarray(u, dtype=float)
        if self.family == "linear":
            return u
        if self.family == "power":
            return u ** self.p
        return np.expm1(u)


def phi_linear() -> PhiFunction:
    return PhiFunction("linear")


def phi_power(p: float) -> PhiFunction:
    return PhiFunction("power", p=p)


def phi_expm1() -> PhiFunction:
    return PhiFunction("expm1")


@dataclass(frozen=True, eq=False)
class OrliczModular:
    """Integral modular: sum of weights times phi of the absolute sample values."""

    phi: PhiFunction
    grid: Grid
    Q: float = 1.0   # quasi-semiconvexity constant; 1 for convex phi

    def __post_init__(self):
        if self.Q < 1:
            raise ValueError("Q must be >= 1")


def orlicz_modular(f: FunctionSample, rho: OrliczModular) -> float:
    if f.grid is not rho.grid and not (
            f.grid.nodes.shape == rho.grid.nodes.shape
            and np.array_equal(f.grid.nodes, rho.grid.nodes)):
        raise ValueError("sample and modular must share a grid")
    terms = rho.grid.weights * rho.phi(np.abs(f.values))
    return math.fsum(terms.tolist())


def modular_of_constant(c: float, rho: OrliczModular) -> float:
    """rho applied to the constant function |c| on the grid."""
    return float(rho.phi(abs(c))) * rho.grid.measure


# ---------------------------------------------------------------------------
# modulus of continuity


def modulus_of_continuity(f: FunctionSample, delta: float) -> float:
    """Max of |f(s) - f(t)| over node pairs at distance <= delta."""
    if delta < f.grid.h_min:
        raise ValueError("delta below the grid spacing; the supremum is vacuous")
    nodes = f.grid.nodes
    vals = f.values
    n = nodes.shape[0]
    best = 0.0
    chunk = 512
    for start in range(0, n, chunk):
        block = nodes[start:start + chunk]
        d = np.sqrt(((block[:, None, :] - nodes[None, :, :]) ** 2).sum(-1))
        close = d <= delta
        if not close.any():
            continue
        diff = np.abs(vals[start:start + chunk, None] - vals[None, :])
        best = max(best, float(diff[close].max()))
    return best


# ---------------------------------------------------------------------------
# modular property checks


@dataclass(frozen=True)
class ModularPropertyReport:
    monotone: bool
    finite: bool
    strongly_finite: bool
    quasi_semiconvex_ok: bool


def check_modular_properties(rho: OrliczModular,
                             probes: Sequence[FunctionSample]
                             ) -> ModularPropertyReport:
    """Numeric spot-checks of monotonicity, (strong) finiteness and
    Q-quasi semiconvexity on the supplied probes."""
    if not probes:
        raise ValueError("probes must be non-empty")
    monotone = True
    for f in probes:
        for g in probes:
            if np.all(np.abs(f.values) <= np.abs(g.values)):
                if orlicz_modular(f, rho) > orlicz_modular(g, rho) + 1e-12:
                    monotone = False
    finite = all(np.isfinite(modular_of_constant(lam, rho))
                 for lam in (0.1, 1.0, 10.0))
    strongly_finite = finite
    quasi = True
    Q = rho.Q
    for f in probes:
        if np.any(f.values < 0):
            continue
        right_ref = FunctionSample(grid=f.grid, values=Q * f.values)
        rr = orlicz_modular(right_ref, rho)
        for a in (0.1, 0.5, 1.0):
            left = orlicz_modular(FunctionSample(grid=f.grid, values=a * f.values),
                                  rho)
            if left > Q * a * rr + 1e-12:
                quasi = False
    return ModularPropertyReport(monotone=monotone, finite=finite,
                                 strongly_finite=strongly_finite,
                                 quasi_semiconvex_ok=quasi)
