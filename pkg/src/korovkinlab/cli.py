"""Reproducible experiment runner: strict JSON configs in, CSV/JSON evidence out.

Exit codes: 0 all expectations hold, 1 expectation failure, 2 invalid
configuration, 3 I/O error.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys

import numpy as np

from .engine import (LipschitzProbe, build_test_system_euclidean,
                     build_test_system_trig, check_rho_star,
                     rates_pipeline_lipschitz, verify_P_axioms, with_constants)
from .modular import (Box, FunctionSample, OrliczModular, Simplex2, build_grid,
                      orlicz_modular, phi_expm1, phi_linear, phi_power)
from .nets import (Almost, DensityFilter, Frechet, Net, Ordinary,
                   PsiAStatistical, cesaro_matrix, check_summability_axioms,
                   degenerate_matrix, filter_limsup_liminf, identity_matrix,
                   is_perfect_square, mode_limit, non_squares_predicate,
                   rate_classify, squares_predicate, triangular_density,
                   triangular_shape)
from .operators import (MellinParams, gate_family, kantorovich_family,
                        mellin_family)
from .tolerances import DEFAULT_TOLERANCES

EXPERIMENTS = ("mellin-rates", "kantorovich-rates", "density", "limit",
               "limsup", "check-system", "rho-star")

EXIT_OK, EXIT_EXPECTATION, EXIT_CONFIG, EXIT_IO = 0, 1, 2, 3


class ConfigError(ValueError):
    pass


def _check_fields(d: dict, allowed: set, context: str) -> None:
    unknown = set(d) - allowed
    if unknown:
        raise ConfigError(f"unknown field(s) in {context}: {sorted(unknown)}")


_MATRICES = {"cesaro": cesaro_matrix, "degenerate": degenerate_matrix,
             "identity": identity_matrix}
_SETS = {
    "squares": lambda i, j: squares_predicate(np.asarray(j)),
    "even": lambda i, j: np.asarray(j) % 2 == 0,
    "all": lambda i, j: np.ones(np.shape(j), dtype=bool),
}
_NETS = {
    "alternating": lambda h: Net(np.arange(1, h + 1) % 2.0),
    "square-indicator": lambda h: Net(
        squares_predicate(np.arange(1, h + 1)).astype(float)),
    "constant": lambda h: Net(np.full(h, 0.5)),
    "harmonic": lambda h: Net(1.0 / np.arange(1, h + 1)),
}


def _parse_mode(spec: dict, horizon: int):
    _check_fields(spec, {"variant", "parameters"}, "mode")
    variant = spec.get("variant", "ordinary")
    params = dict(spec.get("parameters", {}))
    if variant == "ordinary":
        _check_fields(params, set(), "mode.parameters")
        return Ordinary()
    if variant == "frechet":
        _check_fields(params, set(), "mode.parameters")
        return Frechet()
    if variant == "density-filter":
        _check_fields(params, {"member"}, "mode.parameters")
        member = params.get("member", "non-squares")
        if member == "non-squares":
            return DensityFilter(member=non_squares_predicate,
                                 name="non-squares")
        if member == "odd":
            return DensityFilter(member=lambda idx: np.asarray(idx) % 2 == 1,
                                 name="odd")
        raise ConfigError(f"unknown filter member {member!r}")
    if variant == "psi-a":
        _check_fields(params, {"matrix"}, "mode.parameters")
        name = params.get("matrix", "cesaro")
        if name not in _MATRICES:
            raise ConfigError(f"unknown matrix {name!r}")
        return PsiAStatistical(matrix=_MATRICES[name](), shape=triangular_shape())
    if variant == "almost":
        _check_fields(params, {"m_max"}, "mode.parameters")
        m_max = int(params.get("m_max", min(100, horizon // 4)))
        return Almost(m_max=m_max)
    raise ConfigError(f"unknown mode variant {variant!r}")


def _parse_phi(spec: dict):
    _check_fields(spec, {"family", "p"}, "phi")
    family = spec.get("family", "linear")
    if family == "linear":
        return phi_linear()
    if family == "power":
        return phi_power(float(spec.get("p", 2.0)))
    if family == "expm1":
        return phi_expm1()
    raise ConfigError(f"unknown phi family {family!r}")


def _parse_xi(spec: dict):
    _check_fields(spec, {"family", "p"}, "xi")
    if spec.get("family", "power") != "power":
        raise ConfigError("only the power family 1/w^p is supported for xi")
    p = float(spec.get("p", 1.0))
    if p <= 0:
        raise ConfigError("xi exponent p must be > 0")
    return lambda w, _p=p: 1.0 / w ** _p


def _random_lipschitz_probes(grid, seed: int, count: int = 3):
    """Seeded hat-shaped probes |x - c| summed over coordinates; Lipschitz
    constant 1 per coordinate."""
    rng = np.random.default_rng(seed)
    probes = []
    for q in range(count):
        centers = rng.uniform(0.2, 0.8, size=grid.dimension)

        def fn(pts, _c=centers):
            pts = np.atleast_2d(pts)
            return np.abs(pts - _c[None, :]).sum(axis=1)

        probes.append(LipschitzProbe(
            sample=FunctionSample.from_function(grid, fn),
            C2=float(grid.dimension), name=f"probe{q}"))
    return probes


def load_config(path: str) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    _check_fields(raw, {"experiment", "mode", "horizon", "grid", "phi",
                        "gamma", "xi", "seed", "output_dir"}, "config")
    if raw.get("experiment") not in EXPERIMENTS:
        raise ConfigError(f"experiment must be one of {EXPERIMENTS}")
    raw.setdefault("mode", {"variant": "ordinary", "parameters": {}})
    raw.setdefault("horizon", 200)
    raw.setdefault("grid", {"region": "box", "resolution": 32})
    raw.setdefault("phi", {"family": "linear"})
    raw.setdefault("gamma", 1.0)
    raw.setdefault("xi", {"family": "power", "p": 1.0})
    raw.setdefault("seed", 0)
    raw.setdefault("output_dir", ".")
    if int(raw["horizon"]) < 32:
        raise ConfigError("horizon must be >= 32")
    _check_fields(raw["grid"], {"region", "resolution", "set", "matrix",
                                "net", "candidate", "system"}, "grid")
    if int(raw["grid"].get("resolution", 32)) < 4:
        raise ConfigError("resolution must be >= 4")
    if float(raw["gamma"]) <= 0:
        raise ConfigError("gamma must be > 0")
    return raw


def _threads_from_env() -> int:
    raw = os.environ.get("KOROVKIN_LAB_THREADS", "1")
    try:
        n = int(raw)
    except ValueError:
        raise ConfigError(f"KOROVKIN_LAB_THREADS must be an integer, got {raw!r}")
    if n < 1:
        raise ConfigError("KOROVKIN_LAB_THREADS must be >= 1")
    return n


# ---------------------------------------------------------------------------
# experiment bodies; each returns (classifications, limsup_estimates, rows, ok)


def _run_mellin_rates(cfg: dict, mode):
    horizon = int(cfg["horizon"])
    grid = build_grid(Box(((0.0, 1.0),)), int(cfg["grid"]["resolution"]))
    system = build_test_system_euclidean("identity", 1, grid)
    system = with_constants(system, verify_P_axioms(system, 0.5))
    rho = OrliczModular(_parse_phi(cfg["phi"]), grid)
    family = mellin_family(MellinParams(N=1, w_range=max(horizon, 1000)))
    xi_fn = _parse_xi(cfg["xi"])
    xi = {r: xi_fn for r in range(system.m + 1)}
    probes = _random_lipschitz_probes(grid, int(cfg["seed"]))
    report = rates_pipeline_lipschitz(family, system, rho, xi,
                                      float(cfg["gamma"]), probes, mode, horizon)
    classes = {k: v.kind.value for k, v in report.classifications.items()}
    estimates = {k: v.limsup_estimate for k, v in report.classifications.items()}
    f_label = probes[0].name
    xi_arr = np.array([xi_fn(w) for w in range(1, horizon + 1)])
    rows = []
    for w in range(1, horizon + 1):
        row = [w]
        row += [report.error_nets[f"e{r}"][w - 1] for r in range(system.m + 1)]
        err_f = report.error_nets[f_label][w - 1]
        row += [err_f, err_f / xi_arr[w - 1], classes[f_label]]
        rows.append(row)
    header = (["w"] + [f"err_e{r}" for r in range(system.m + 1)]
              + ["err_f", "ratio_f", "class"])
    ok = all(v != "Neither" for v in classes.values())
    return classes, estimates, header, rows, ok


def _run_kantorovich_rates(cfg: dict, mode):
    horizon = int(cfg["horizon"])
    grid = build_grid(Simplex2(), int(cfg["grid"]["resolution"]))
    rho = OrliczModular(_parse_phi(cfg["phi"]), grid)
    family = gate_family(kantorovich_family(), is_perfect_square)
    xi_fn = _parse_xi(cfg["xi"])
    gamma = float(cfg["gamma"])
    tests = {
        "e0": lambda p: np.ones(np.atleast_2d(p).shape[0]),
        "e1": lambda p: np.atleast_2d(p)[:, 0],
        "e2": lambda p: np.atleast_2d(p)[:, 1],
        "e3": lambda p: (np.atleast_2d(p) ** 2).sum(axis=1),
    }
    probe = _random_lipschitz_probes(grid, int(cfg["seed"]), count=1)[0]
    xi_arr = np.array([xi_fn(n) for n in range(1, horizon + 1)])
    error_nets = {}
    for label, fn in list(tests.items()) + [(probe.name, None)]:
        sample = (probe.sample if fn is None
                  else FunctionSample.from_function(grid, fn))
        errs = np.empty(horizon)
        for n in range(1, horizon + 1):
            out = family.apply(n, sample)
            diff = FunctionSample(grid=grid,
                                  values=gamma * (out.values - sample.values))
            errs[n - 1] = orlicz_modular(diff, rho)
        error_nets[label] = errs
    classes, estimates = {}, {}
    for label, errs in error_nets.items():
        cls = rate_classify(Net(errs), Net(xi_arr), mode)
        classes[label] = cls.kind.value
        estimates[label] = cls.limsup_estimate
    rows = []
    for n in range(1, horizon + 1):
        row = [n] + [error_nets[f"e{r}"][n - 1] for r in range(4)]
        err_f = error_nets[probe.name][n - 1]
        row += [err_f, err_f / xi_arr[n - 1], classes[probe.name]]
        rows.append(row)
    header = ["w", "err_e0", "err_e1", "err_e2", "err_e3",
              "err_f", "ratio_f", "class"]
    ok = all(v != "Neither" for v in classes.values())
    return classes, estimates, header, rows, ok


def _run_density(cfg: dict):
    name = cfg["grid"].get("matrix", "cesaro")
    set_name = cfg["grid"].get("set", "squares")
    if name not in _MATRICES:
        raise ConfigError(f"unknown matrix {name!r}")
    if set_name not in _SETS:
        raise ConfigError(f"unknown set {set_name!r}")
    i_max = int(cfg["horizon"])
    matrix, shape = _MATRICES[name](), triangular_shape()
    axioms = check_summability_axioms(matrix, shape, i_max)
    if not axioms.a2:
        msg = (f"(A2) fails for matrix '{matrix.name}' "
               f"(liminf estimate {axioms.a2_estimate:.3g})")
        return {"density": msg}, {"density": axioms.a2_estimate}, \
            ["w", "err_e0", "err_f", "ratio_f", "class"], [], False
    report = triangular_density(_SETS[set_name], matrix, shape, i_max)
    classes = {"density": "Converged" if report.converged else "NotConverged"}
    estimates = {"density": report.estimate}
    header = ["w", "err_e0", "err_f", "ratio_f", "class"]
    return classes, estimates, header, [], report.converged


def _run_limit(cfg: dict, mode):
    horizon = int(cfg["horizon"])
    net_name = cfg["grid"].get("net", "alternating")
    if net_name not in _NETS:
        raise ConfigError(f"unknown net {net_name!r}")
    candidate = float(cfg["grid"].get("candidate", 0.5))
    x = _NETS[net_name](horizon)
    report = mode_limit(x, mode, candidate, [0.1, 0.05, 0.02])
    classes = {"limit": "Converges" if report.converges else "Diverges"}
    estimates = {f"eps_{c.eps}": c.worst for c in report.checks}
    header = ["w", "err_e0", "err_f", "ratio_f", "class"]
    return classes, estimates, header, [], report.converges


def _run_limsup(cfg: dict, mode):
    horizon = int(cfg["horizon"])
    net_name = cfg["grid"].get("net", "alternating")
    if net_name not in _NETS:
        raise ConfigError(f"unknown net {net_name!r}")
    x = _NETS[net_name](horizon)
    hi, lo = filter_limsup_liminf(x, mode)
    classes = {"limsup": "Computed"}
    estimates = {"limsup": hi, "liminf": lo}
    header = ["w", "err_e0", "err_f", "ratio_f", "class"]
    return classes, estimates, header, [], True


def _run_check_system(cfg: dict):
    name = cfg["grid"].get("system", "euclid")
    res = int(cfg["grid"]["resolution"])
    if name == "euclid":
        grid = build_grid(Box(((0.0, 1.0),)), res)
        system = build_test_system_euclidean("identity", 1, grid)
    elif name == "trig":
        grid = build_grid(Box(((0.2, 1.2),)), res)
        system = build_test_system_trig(0.2, 1.2, grid)
    else:
        raise ConfigError(f"unknown system {name!r}")
    report = verify_P_axioms(system, max(0.25, grid.h_min))
    classes = {"P1": "Holds" if report.P1_ok else "Fails"}
    estimates = {"C1": report.C1_est}
    if report.C0_est is not None:
        estimates["C0"] = report.C0_est
    header = ["w", "err_e0", "err_f", "ratio_f", "class"]
    ok = report.P1_ok and report.C1_est > 0
    return classes, estimates, header, [], ok


def _run_rho_star(cfg: dict, mode):
    horizon = int(cfg["horizon"])
    grid = build_grid(Box(((0.0, 1.0),)), int(cfg["grid"]["resolution"]))
    rho = OrliczModular(_parse_phi(cfg["phi"]), grid)
    family = mellin_family(MellinParams(N=1, w_range=max(horizon, 1000)))
    probes = [p.sample for p in _random_lipschitz_probes(grid, int(cfg["seed"]))]
    report = check_rho_star(family, rho, probes, mode, [0.5, 1.0], horizon)
    classes = {"rho_star": "Holds" if report.holds else "Fails"}
    estimates = {"E": report.E_est}
    header = ["w", "err_e0", "err_f", "ratio_f", "class"]
    return classes, estimates, header, [], report.holds


# ---------------------------------------------------------------------------
# artifact emission


def _format_cell(v) -> str:
    if isinstance(v, str):
        return v
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return repr(float(v))


def emit_report(config: dict, classes: dict, estimates: dict, header, rows,
                ok: bool, output_dir: str, threads: int) -> None:
    os.makedirs(output_dir, exist_ok=True)
    echo = dict(config)
    echo["threads"] = threads
    payload = {
        "config": echo,
        "tolerances": DEFAULT_TOLERANCES.as_dict(),
        "classifications": classes,
        "limsup_estimates": {k: float(v) for k, v in estimates.items()},
        "pass": bool(ok),
    }
    with open(os.path.join(output_dir, "report.json"), "w",
              encoding="utf-8", newline="\n") as fh:
        json.dump(payload, fh, sort_keys=True, indent=2)
        fh.write("\n")
    with open(os.path.join(output_dir, "evidence.csv"), "w",
              encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_format_cell(c) for c in row) + "\n")


def run_experiment(config: dict) -> int:
    threads = _threads_from_env()
    mode = _parse_mode(config["mode"], int(config["horizon"]))
    name = config["experiment"]
    if name == "mellin-rates":
        out = _run_mellin_rates(config, mode)
    elif name == "kantorovich-rates":
        out = _run_kantorovich_rates(config, mode)
    elif name == "density":
        out = _run_density(config)
    elif name == "limit":
        out = _run_limit(config, mode)
    elif name == "limsup":
        out = _run_limsup(config, mode)
    elif name == "check-system":
        out = _run_check_system(config)
    elif name == "rho-star":
        out = _run_rho_star(config, mode)
    else:  # pragma: no cover - guarded by load_config
        raise ConfigError(f"unknown experiment {name!r}")
    classes, estimates, header, rows, ok = out
    try:
        emit_report(config, classes, estimates, header, rows, ok,
                    config["output_dir"], threads)
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO
    for k in sorted(classes):
        print(f"{k}: {classes[k]}")
    print(f"pass: {ok}")
    return EXIT_OK if ok else EXIT_EXPECTATION


# ---------------------------------------------------------------------------
# argument parsing


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="korovkin-lab",
        description="Korovkin approximation laboratory experiment runner")
    sub = parser.add_subparsers(dest="command", required=True)
    p_run = sub.add_parser("run", help="run an experiment from a JSON config")
    p_run.add_argument("--config", required=True)
    p_den = sub.add_parser("density", help="matrix density of an index set")
    p_den.add_argument("--matrix", choices=("cesaro", "degenerate"),
                       required=True)
    p_den.add_argument("--set", choices=("squares", "even", "all"),
                       required=True)
    p_den.add_argument("--imax", type=int, required=True)
    p_sys = sub.add_parser("check-system",
                           help="verify a test-function system")
    p_sys.add_argument("--system", choices=("euclid", "trig"), required=True)
    p_sys.add_argument("--resolution", type=int, required=True)
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "run":
            config = load_config(args.config)
            return run_experiment(config)
        if args.command == "density":
            _threads_from_env()
            if args.imax < 32:
                raise ConfigError("imax must be >= 32")
            matrix, shape = _MATRICES[args.matrix](), triangular_shape()
            axioms = check_summability_axioms(matrix, shape, args.imax)
            if not axioms.a2:
                print(f"(A2) fails for matrix '{matrix.name}' "
                      f"(liminf estimate {axioms.a2_estimate:.3g})")
                return EXIT_EXPECTATION
            report = triangular_density(_SETS[args.set], matrix, shape,
                                        args.imax)
            print(f"density estimate: {report.estimate!r} "
                  f"(converged: {report.converged})")
            return EXIT_OK if report.converged else EXIT_EXPECTATION
        if args.command == "check-system":
            _threads_from_env()
            cfg = {"grid": {"system": args.system,
                            "resolution": args.resolution}}
            classes, estimates, _, _, ok = _run_check_system(cfg)
            for k in sorted(estimates):
                print(f"{k}: {estimates[k]!r}")
            print(f"P1: {classes['P1']}")
            return EXIT_OK if ok else EXIT_EXPECTATION
    except ConfigError as exc:
        print(f"invalid config: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ValueError, KeyError) as exc:
        print(f"invalid config: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return EXIT_CONFIG  # pragma: no cover


if __name__ == "__main__":
    sys.exit(main())
