"""Test-function systems and the two rate-of-approximation pipelines."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable, Sequence

import numpy as np

from .modular import (Box, FunctionSample, Grid, OrliczModular,
                      modular_of_constant, modulus_of_continuity,
                      orlicz_modular, point_eval)
from .nets import (ConvergenceMode, Net, RateClass, RateKind, rate_classify)
from .operators import OperatorFamily
from .tolerances import DEFAULT_TOLERANCES, Tolerances


# ---------------------------------------------------------------------------
# test systems


@dataclass(frozen=True, eq=False)
class TestSystem:
    """Functions e_0..e_m and coefficients a_0..a_m so that the combination
    P_s(t) = sum_r a_r(s) e_r(t) vanishes on the diagonal and dominates the
    metric away from it."""

    grid: Grid
    m: int
    e: tuple          # FunctionSample, length m + 1, e[0] constant one
    a: tuple          # FunctionSample, length m + 1
    N_bound: float
    C1: float | None = None
    C0: float | None = None

    def __post_init__(self):
        if len(self.e) != self.m + 1 or len(self.a) != self.m + 1:
            raise ValueError("need exactly m + 1 test and coefficient functions")
        if np.max(np.abs(self.e[0].values - 1.0)) > 1e-12:
            raise ValueError("e_0 must be the constant one sample")

    def p_matrix(self) -> np.ndarray:
        """P_s(t) over node pairs; rows index s, columns index t."""
        A = np.stack([a.values for a in self.a], axis=-1)     # (n, m+1)
        E = np.stack([e.values for e in self.e], axis=-1)     # (n, m+1)
        return A @ E.T

    def p_slice(self, s_index: int) -> FunctionSample:
        """The function t -> P_s(t) for the node s at `s_index`, with an
        analytic evaluator so operator families can integrate it."""
        coeffs = np.array([a.values[s_index] for a in self.a])
        evaluators = [e.evaluator for e in self.e]
        if any(ev is None for ev in evaluators):
            raise ValueError("test functions need analytic evaluators")

        def fn(pts, _c=coeffs, _ev=evaluators):
            pts = np.atleast_2d(pts)
            out = np.zeros(pts.shape[0])
            for c, ev in zip(_c, _ev):
                out += c * np.asarray(ev(pts), dtype=float)
            return out

        return FunctionSample.from_function(self.grid, fn)


def _const_one(grid: Grid) -> FunctionSample:
    return FunctionSample.from_function(grid, lambda p: np.ones(np.atleast_2d(p).shape[0]))


def build_test_system_euclidean(phi_map: str, m: int, grid: Grid) -> TestSystem:
    """Quadratic system P_s(t) = sum_i [phi(s_i) - phi(t_i)]^2 on a box of
    dimension m, with phi the identity or the exponential."""
    if not isinstance(grid.region, Box) or grid.dimension != m:
        raise ValueError(f"grid must be a box of dimension {m}")
    if phi_map == "identity":
        phi = lambda u: u
    elif phi_map == "exp":
        phi = np.exp
    else:
        raise ValueError(f"unknown phi map {phi_map!r}")

    def coord(i):
        return lambda p, _i=i: phi(np.atleast_2d(p)[:, _i])

    def sq_sum(p):
        p = np.atleast_2d(p)
        return (phi(p) ** 2).sum(axis=1)

    e = [_const_one(grid)]
    e += [FunctionSample.from_function(grid, coord(i)) for i in range(m)]
    e.append(FunctionSample.from_function(grid, sq_sum))
    a = [FunctionSample.from_function(grid, sq_sum)]
    a += [FunctionSample.from_function(grid,
                                       lambda p, _i=i: -2.0 * phi(np.atleast_2d(p)[:, _i]))
          for i in range(m)]
    a.append(_const_one(grid))
    n_bound = max(s.sup_abs() for s in a)
    return TestSystem(grid=grid, m=m + 1, e=tuple(e), a=tuple(a), N_bound=n_bound)


def build_test_system_trig(a_end: float, b_end: float, grid: Grid) -> TestSystem:
    """Trigonometric system P_s(t) = 1 - cos(s - t) on [a, b] inside (0, pi/2);
    the second-derivative constant cos(b - a) is recorded."""
    if not (0.0 < a_end < b_end < math.pi / 2):
        raise ValueError("interval must satisfy 0 < a < b < pi/2")
    if not isinstance(grid.region, Box) or grid.dimension != 1:
        raise ValueError("grid must be a 1-D box")
    (ga, gb), = grid.region.intervals
    if abs(ga - a_end) > 1e-12 or abs(gb - b_end) > 1e-12:
        raise ValueError("grid interval must match [a, b]")
    e = (_const_one(grid),
         FunctionSample.from_function(grid, lambda p: np.cos(np.atleast_2d(p)[:, 0])),
         FunctionSample.from_function(grid, lambda p: np.sin(np.atleast_2d(p)[:, 0])))
    a = (_const_one(grid),
         FunctionSample.from_function(grid, lambda p: -np.cos(np.atleast_2d(p)[:, 0])),
         FunctionSample.from_function(grid, lambda p: -np.sin(np.atleast_2d(p)[:, 0])))
    n_bound = max(s.sup_abs() for s in a)
    return TestSystem(grid=grid, m=2, e=e, a=a, N_bound=n_bound,
                      C0=math.cos(b_end - a_end))


@dataclass(frozen=True)
class PAxiomReport:
    P1_ok: bool
    C1_est: float
    C0_est: float | None
    delta_min: float


def verify_P_axioms(system: TestSystem, delta_min: float) -> PAxiomReport:
    """Grid estimates of the system constants: the diagonal must vanish, the
    metric-domination constant is the minimum of P_s(t)/d(s, t) over pairs at
    distance >= delta_min, and on 1-D grids the second-difference floor of
    t -> P_s(t) is reported."""
    grid = system.grid
    if delta_min < grid.h_min:
        raise ValueError("delta_min must be at least the grid spacing")
    P = system.p_matrix()
    P1_ok = bool(np.max(np.abs(np.diagonal(P))) <= 1e-10)
    nodes = grid.nodes
    d = np.sqrt(((nodes[:, None, :] - nodes[None, :, :]) ** 2).sum(-1))
    far = d >= delta_min
    if not far.any():
        raise ValueError("no node pair at distance >= delta_min")
    C1_est = float(np.min(P[far] / d[far]))
    C0_est = None
    if grid.dimension == 1:
        order = np.argsort(nodes[:, 0])
        h = float(np.diff(nodes[order, 0]).min())
        Ps = P[:, order]
        second = (Ps[:, 2:] - 2.0 * Ps[:, 1:-1] + Ps[:, :-2]) / (h * h)
        C0_est = float(second.min())
    return PAxiomReport(P1_ok=P1_ok, C1_est=C1_est, C0_est=C0_est,
                        delta_min=delta_min)


def with_constants(system: TestSystem, report: PAxiomReport) -> TestSystem:
    return replace(system, C1=report.C1_est,
                   C0=report.C0_est if report.C0_est is not None else system.C0)


# ---------------------------------------------------------------------------
# tau selection


def tau_lipschitz(gamma: float, C1: float, C2: float, m: int,
                  N_bound: float, M: float, Q: float) -> float:
    """Scaling for Lipschitz probes: the smaller of the metric-domination
    budget and the sup-norm budget."""
    if min(gamma, C1, C2, N_bound, M, Q) <= 0 or m < 0:
        raise ValueError("parameters must be positive")
    return min(gamma * C1 / (2.0 * C2 * (m + 1) * N_bound * Q * Q),
               gamma / (2.0 * M * Q * Q))


def tau_continuity(gamma: float, M: float, Q: float) -> float:
    if min(gamma, M, Q) <= 0:
        raise ValueError("parameters must be positive")
    return gamma / (8.0 * M * Q * Q)


# ---------------------------------------------------------------------------
# property (rho)-(*)


@dataclass(frozen=True)
class RhoStarReport:
    E_est: float
    holds: bool


def check_rho_star(family: OperatorFamily, rho: OrliczModular,
                   probes: Sequence[FunctionSample], mode: ConvergenceMode,
                   tau_list: Sequence[float], horizon: int,
                   tol: Tolerances = DEFAULT_TOLERANCES) -> RhoStarReport:
    """Estimate the uniform bound E in the limsup comparison of the modular
    of transformed probes against the modular of the probes themselves."""
    from .nets import filter_limsup_liminf
    worst = 0.0
    for f in probes:
        for tau in tau_list:
            denom = orlicz_modular(
                FunctionSample(grid=f.grid, values=tau * f.values), rho)
            if denom <= 0:
                raise ValueError("vanishing denominator: rho[tau f] must be > 0")
            ratios = np.empty(horizon)
            for w in range(1, horizon + 1):
                tw = family.apply(w, f)
                num = orlicz_modular(
                    FunctionSample(grid=f.grid, values=tau * tw.values), rho)
                ratios[w - 1] = num / denom
            limsup, _ = filter_limsup_liminf(Net(ratios), mode, tol)
            worst = max(worst, limsup)
    return RhoStarReport(E_est=worst, holds=worst <= tol.big_c_cap)


# ---------------------------------------------------------------------------
# rate reports and pipelines


@dataclass(frozen=True, eq=False)
class RateReport:
    gamma: float
    tau: dict               # probe name -> tau used
    xi: dict                # label -> xi array over w
    error_nets: dict        # label -> error array over w
    classifications: dict   # label -> RateClass
    implication_little_o: bool | None
    implication_big_o: bool | None
    delta_net: np.ndarray | None = None


@dataclass(frozen=True, eq=False)
class LipschitzProbe:
    sample: FunctionSample
    C2: float
    name: str


def _normalize_xi(xi, horizon: int) -> np.ndarray:
    if callable(xi):
        arr = np.array([float(xi(w)) for w in range(1, horizon + 1)])
    else:
        arr = np.asarray(xi, dtype=float)
        if arr.shape != (horizon,):
            raise ValueError("xi net length must match the horizon")
    if np.any(arr == 0.0):
        raise ValueError("xi nets must be nonzero at every index")
    return arr


def _modular_error_net(family: OperatorFamily, f: FunctionSample, scale: float,
                       rho: OrliczModular, horizon: int) -> np.ndarray:
    errs = np.empty(horizon)
    for w in range(1, horizon + 1):
        tw = family.apply(w, f)
        diff = FunctionSample(grid=f.grid, values=scale * (tw.values - f.values))
        errs[w - 1] = orlicz_modular(diff, rho)
    return errs


def rates_pipeline_lipschitz(family: OperatorFamily, system: TestSystem,
                             rho: OrliczModular, xi: dict, gamma: float,
                             probes: Sequence[LipschitzProbe],
                             mode: ConvergenceMode, horizon: int,
                             tol: Tolerances = DEFAULT_TOLERANCES) -> RateReport:
    """Classify the modular errors of the test functions against their xi
    nets, then derive the probe scaling tau and classify each Lipschitz probe
    against the combined net."""
    if system.C1 is None or system.C1 <= 0:
        raise ValueError("system not verified: C1 missing (run verify_P_axioms)")
    if gamma <= 0:
        raise ValueError("gamma must be positive")
    xi_arrays = {r: _normalize_xi(xi[r], horizon) for r in range(system.m + 1)}
    xi_combined = np.max(np.stack(list(xi_arrays.values())), axis=0)

    error_nets: dict = {}
    classifications: dict = {}
    for r in range(system.m + 1):
        label = f"e{r}"
        errs = _modular_error_net(family, system.e[r], gamma, rho, horizon)
        error_nets[label] = errs
        classifications[label] = rate_classify(Net(errs), Net(xi_arrays[r]),
                                               mode, tol)

    taus: dict = {}
    for probe in probes:
        M = 1.0 + probe.sample.sup_abs()
        tau = tau_lipschitz(gamma, system.C1, probe.C2, system.m,
                            system.N_bound, M, rho.Q)
        taus[probe.name] = tau
        errs = _modular_error_net(family, probe.sample, tau, rho, horizon)
        error_nets[probe.name] = errs
        classifications[probe.name] = rate_classify(Net(errs), Net(xi_combined),
                                                    mode, tol)

    e_labels = [f"e{r}" for r in range(system.m + 1)]
    probe_labels = [p.name for p in probes]
    all_e_little = all(classifications[l].kind is RateKind.LITTLE_O
                       for l in e_labels)
    all_e_big = all(classifications[l].satisfies_big_o for l in e_labels)
    impl_little = (all(classifications[l].kind is RateKind.LITTLE_O
                       for l in probe_labels) if all_e_little else None)
    impl_big = (all(classifications[l].satisfies_big_o
                    for l in probe_labels) if all_e_big else None)

    xi_out = {f"e{r}": xi_arrays[r] for r in xi_arrays}
    xi_out["combined"] = xi_combined
    return RateReport(gamma=gamma, tau=taus, xi=xi_out, error_nets=error_nets,
                      classifications=classifications,
                      implication_little_o=impl_little,
                      implication_big_o=impl_big)


def distance_slice(grid: Grid, s_index: int) -> FunctionSample:
    """The function t -> d(s, t) for a fixed node s, with analytic evaluator."""
    s = grid.nodes[s_index]

    def fn(pts, _s=s):
        pts = np.atleast_2d(pts)
        return np.sqrt(((pts - _s[None, :]) ** 2).sum(axis=1))

    return FunctionSample.from_function(grid, fn)


def rates_pipeline_continuity(family: OperatorFamily, f: FunctionSample,
                              rho: OrliczModular, xi0, xistar, gamma: float,
                              mode: ConvergenceMode, horizon: int,
                              tol: Tolerances = DEFAULT_TOLERANCES) -> RateReport:
    """Modulus-of-continuity pipeline: the distance slices transported by the
    family give the per-index modulus argument; the constant-one error and
    the modulus term are classified separately, the probe against their max."""
    grid = f.grid
    xi0_arr = _normalize_xi(xi0, horizon)
    xistar_arr = _normalize_xi(xistar, horizon)
    xi_combined = np.maximum(xi0_arr, xistar_arr)

    sup_f = f.sup_abs()
    support = np.where(np.abs(f.values) > 1e-12 * max(sup_f, 1e-300))[0]
    if support.size == 0:
        support = np.arange(grid.nodes.shape[0])
    slices = [distance_slice(grid, int(s)) for s in support]

    one = _const_one(grid)
    delta_net = np.empty(horizon)
    e0_errs = np.empty(horizon)
    omega_errs = np.empty(horizon)
    for w in range(1, horizon + 1):
        delta = max(float(family.apply(w, sl).values[s])
                    for s, sl in zip(support, slices))
        delta_net[w - 1] = delta
        tw1 = family.apply(w, one)
        e0_errs[w - 1] = orlicz_modular(
            FunctionSample(grid=grid, values=gamma * (tw1.values - 1.0)), rho)
        omega = modulus_of_continuity(f, max(delta, grid.h_min))
        omega_errs[w - 1] = modular_of_constant(gamma * omega, rho)

    M = sup_f if sup_f > 0 else 1.0
    tau = tau_continuity(gamma, M, rho.Q)
    f_errs = _modular_error_net(family, f, tau, rho, horizon)

    classifications = {
        "e0": rate_classify(Net(e0_errs), Net(xi0_arr), mode, tol),
        "omega": rate_classify(Net(omega_errs), Net(xistar_arr), mode, tol),
        "f": rate_classify(Net(f_errs), Net(xi_combined), mode, tol),
    }
    ant_little = (classifications["e0"].kind is RateKind.LITTLE_O
                  and classifications["omega"].kind is RateKind.LITTLE_O)
    ant_big = (classifications["e0"].satisfies_big_o
               and classifications["omega"].satisfies_big_o)
    return RateReport(
        gamma=gamma, tau={"f": tau},
        xi={"xi0": xi0_arr, "xistar": xistar_arr, "combined": xi_combined},
        error_nets={"e0": e0_errs, "omega": omega_errs, "f": f_errs},
        classifications=classifications,
        implication_little_o=(classifications["f"].kind is RateKind.LITTLE_O
                              if ant_little else None),
        implication_big_o=(classifications["f"].satisfies_big_o
                           if ant_big else None),
        delta_net=delta_net)


# ---------------------------------------------------------------------------
# proof-decomposition check


def decomposition_check(family: OperatorFamily, system: TestSystem,
                        rho: OrliczModular, probe: LipschitzProbe,
                        gamma: float, ws: Sequence[int]) -> list:
    """Both sides of the error split through the combination function and the
    constant-one error, at the given indices.  Returns (w, left, right) rows."""
    if system.C1 is None or system.C1 <= 0:
        raise ValueError("system not verified: C1 missing")
    grid = system.grid
    f = probe.sample
    M = 1.0 + f.sup_abs()
    tau = tau_lipschitz(gamma, system.C1, probe.C2, system.m,
                        system.N_bound, M, rho.Q)
    n_nodes = grid.nodes.shape[0]
    rows = []
    for w in ws:
        twf = family.apply(w, f)
        left = orlicz_modular(
            FunctionSample(grid=grid, values=tau * (twf.values - f.values)), rho)
        twp_diag = np.empty(n_nodes)
        for s in range(n_nodes):
            twp_diag[s] = family.apply(w, system.p_slice(s)).values[s]
        tw1 = family.apply(w, system.e[0])
        term1 = orlicz_modular(
            FunctionSample(grid=grid,
                           values=2.0 * tau * probe.C2 / system.C1 * twp_diag),
            rho)
        term2 = orlicz_modular(
            FunctionSample(grid=grid, values=2.0 * tau * M * (tw1.values - 1.0)),
            rho)
        rows.append((w, left, term1 + term2))
    return rows
