"""Command-line front end.

Every subcommand reads an optional JSON config, applies flag overrides,
validates the lot in one pass and writes CSV tables plus ``manifest.json``
into the output directory. Exit codes: 0 success, 1 configuration error,
2 numerical failure, 3 capacity guard.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import math
import sys
import time
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Any

import numpy as np

from . import __version__
from .errors import CapacityError, DivergentIntegral, InvalidSpec, PadicFTError, TooLarge
from .gibbs import (
    GENERATOR_ID,
    THREADS_ENV,
    FreeMeasure,
    exact_covariance,
    mc_moment,
    propagator_values,
    sample_free,
)
from .interacting import (
    InteractionSpec,
    correlation,
    partition_interacting,
    perturbative_correlation,
    perturbative_terms,
    wick_rotated_Z,
)
from .landau import GLParams, MinimizeConfig, minimize, ssb_scan
from .lattice import (
    DENSE_MAX_POINTS,
    Lattice,
    ModelParams,
    assemble_A,
    assemble_U,
    assemble_W,
    momentum_diagonal,
)
from .padic import PrimeConfig, is_prime
from .radial import KernelSpec, continuum_propagator, symbol

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL, EXIT_CAPACITY = 0, 1, 2, 3

COMMANDS = (
    "operator",
    "spectrum",
    "propagator",
    "sample",
    "correlate",
    "partition",
    "perturb",
    "minimize",
    "sweep",
    "selftest",
)
MEASURE_COMMANDS = {"propagator", "sample", "correlate", "partition", "perturb"}


class ConfigError(Exception):
    def __init__(self, problems: list[str]):
        super().__init__("; ".join(problems))
        self.problems = problems


class NumericalFailure(Exception):
    pass


@dataclass
class RunConfig:
    """Flat run configuration; JSON files may group keys into sections."""

    p: int | None = None
    N: int | None = None
    l: int | None = None
    kernel: str = "power"
    delta: float | None = None
    scale: float = 1.0
    beta: float | None = None
    gamma: float = 1.0
    alpha2: float = 1.0
    alpha4: float = 0.1
    poly: list[float] = field(default_factory=lambda: [0.0, 1.0])
    n: int = 10_000
    seed: int = 0
    batches: int = 32
    order: int = 2
    points: list[int] = field(default_factory=lambda: [0, 1])
    free: bool = False
    T: float = -1.0
    Tc: float = 0.0
    T_grid: list[float] = field(default_factory=lambda: [-1.0, -0.5, -0.25, 0.25, 0.5, 1.0])
    constraint: float | None = None
    max_iter: int = 5000
    tol: float = 1e-10
    init_noise: float = 0.0
    write_samples: bool = True
    out: str = "padicft-out"

    def prime_config(self) -> PrimeConfig:
        return PrimeConfig(self.p, self.N, self.l)

    def kernel_spec(self) -> KernelSpec:
        if self.kernel == "taibleson":
            return KernelSpec.taibleson(self.beta, self.N, self.p)
        return KernelSpec(self.delta, self.N, self.scale)


SECTIONS = {"kernel", "couplings", "mc", "gl", "output", "lattice"}
_FIELD_NAMES = {f.name for f in fields(RunConfig)}


def _flatten(raw: dict, problems: list[str]) -> dict:
    flat: dict[str, Any] = {}
    for key, val in raw.items():
        if key in SECTIONS and isinstance(val, dict):
            for k2, v2 in val.items():
                name = "kernel" if (key == "kernel" and k2 in ("preset", "name")) else k2
                if name not in _FIELD_NAMES:
                    problems.append(f"{key}.{k2}: unknown field")
                else:
                    flat[name] = v2
        elif key in _FIELD_NAMES:
            flat[key] = val
        else:
            problems.append(f"{key}: unknown field")
    return flat


def _load_file(path: str) -> dict:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError([f"{path}: cannot read ({exc.strerror})"])
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError([f"{path}: line {exc.lineno} column {exc.colno}: {exc.msg}"])
    if not isinstance(raw, dict):
        raise ConfigError([f"{path}: top level must be a JSON object"])
    return raw


def _is_int(v) -> bool:
    return isinstance(v, int) and not isinstance(v, bool)


def _is_num(v) -> bool:
    return isinstance(v, (int, float)) and not isinstance(v, bool) and math.isfinite(v)


def validate(cfg: RunConfig, command: str) -> RunConfig:
    """Check every precondition at once; raise ConfigError listing all problems."""
    problems: list[str] = []
    if command == "selftest":
        return cfg
    for name in ("p", "N", "l"):
        v = getattr(cfg, name)
        if v is None:
            problems.append(f"{name}: required field is missing")
        elif not _is_int(v):
            problems.append(f"{name}: must be an integer, got {v!r}")
    if _is_int(cfg.p) and (cfg.p < 3 or not is_prime(cfg.p)):
        problems.append(f"p: must be an odd prime >= 3, got {cfg.p}")
    if _is_int(cfg.N) and cfg.N < 1:
        problems.append(f"N: must be >= 1, got {cfg.N}")
    if _is_int(cfg.l) and cfg.l < 1:
        problems.append(f"l: must be >= 1, got {cfg.l}")
    if cfg.kernel not in ("power", "taibleson"):
        problems.append(f"kernel: unknown preset {cfg.kernel!r} (power, taibleson)")
    if cfg.kernel == "taibleson":
        if not (_is_num(cfg.beta) and cfg.beta > 0):
            problems.append("beta: taibleson kernel needs beta > 0")
    elif _is_int(cfg.N):
        if cfg.delta is None:
            cfg.delta = 2.0 * cfg.N
        if not _is_num(cfg.delta) or not cfg.delta > cfg.N:
            problems.append(
                f"delta: kernel bound requires delta > N (got delta={cfg.delta}, N={cfg.N})"
            )
    if not (_is_num(cfg.scale) and cfg.scale > 0):
        problems.append(f"scale: must be positive, got {cfg.scale!r}")
    if not (_is_num(cfg.gamma) and cfg.gamma > 0):
        problems.append(f"gamma: must be positive, got {cfg.gamma!r}")
    if not _is_num(cfg.alpha2):
        problems.append(f"alpha2: must be a finite number, got {cfg.alpha2!r}")
    elif command in MEASURE_COMMANDS and not cfg.alpha2 > 0:
        problems.append(f"alpha2: the free measure needs alpha2 > 0, got {cfg.alpha2}")
    if not (_is_num(cfg.alpha4) and cfg.alpha4 >= 0):
        problems.append(f"alpha4: must be >= 0, got {cfg.alpha4!r}")
    if not (isinstance(cfg.poly, list) and all(_is_num(a) for a in cfg.poly)):
        problems.append("poly: must be a list of numbers (coefficients of X^3, X^4, ...)")
    elif command in {"correlate", "partition", "perturb"}:
        try:
            InteractionSpec(tuple(cfg.poly), max(float(cfg.alpha4), 0.0) if _is_num(cfg.alpha4) else 0.0)
        except InvalidSpec as exc:
            problems.append(f"poly: {exc}")
    if not (_is_int(cfg.batches) and cfg.batches >= 16):
        problems.append(f"batches: need at least 16 batches, got {cfg.batches!r}")
    if not (_is_int(cfg.n) and cfg.n >= 1):
        problems.append(f"n: must be a positive integer, got {cfg.n!r}")
    elif _is_int(cfg.batches) and cfg.n < cfg.batches and command != "sample":
        problems.append(f"n: need at least one draw per batch (n={cfg.n} < batches={cfg.batches})")
    if not (_is_int(cfg.seed) and 0 <= cfg.seed < 2**64):
        problems.append(f"seed: must be an integer in [0, 2^64), got {cfg.seed!r}")
    if not (_is_int(cfg.order) and 0 <= cfg.order <= 2):
        problems.append(f"order: perturbative order must be 0, 1 or 2, got {cfg.order!r}")
    if not (isinstance(cfg.points, list) and all(_is_int(x) and x >= 0 for x in cfg.points)):
        problems.append("points: must be a list of lattice indices")
    if not (_is_num(cfg.T) and _is_num(cfg.Tc)):
        problems.append("T, Tc: must be finite numbers")
    if not (isinstance(cfg.T_grid, list) and cfg.T_grid and all(_is_num(t) for t in cfg.T_grid)):
        problems.append("T_grid: must be a non-empty list of temperatures")
    if cfg.constraint is not None and not _is_num(cfg.constraint):
        problems.append("constraint: must be a number")
    if not (_is_num(cfg.tol) and cfg.tol > 0):
        problems.append("tol: must be positive")
    if not (_is_int(cfg.max_iter) and cfg.max_iter > 0):
        problems.append("max_iter: must be a positive integer")
    if command in ("minimize", "sweep") and _is_num(cfg.alpha4) and cfg.alpha4 == 0:
        if command == "sweep" or (_is_num(cfg.T) and cfg.T - cfg.Tc <= 0):
            problems.append("alpha4: minimization needs alpha4 > 0 or alpha2 = T - Tc > 0")
    if problems:
        raise ConfigError(problems)
    return cfg


def _parse_list(text: str, kind=float) -> list:
    text = text.strip()
    if ":" in text and kind is float:
        lo, hi, k = text.split(":")
        return [float(x) for x in np.linspace(float(lo), float(hi), int(k))]
    return [kind(x) for x in text.split(",") if x.strip()]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="padicft", description="p-adic lattice field theory laboratory")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON configuration file")
    common.add_argument("--out", help="output directory")
    common.add_argument("--json", action="store_true", help="machine-readable stdout")
    g = common.add_argument_group("lattice and kernel")
    g.add_argument("--p", type=int)
    g.add_argument("--N", type=int)
    g.add_argument("--l", type=int)
    g.add_argument("--kernel", choices=("power", "taibleson"))
    g.add_argument("--delta", type=float)
    g.add_argument("--scale", type=float)
    g.add_argument("--beta", type=float)
    g = common.add_argument_group("couplings")
    g.add_argument("--gamma", type=float)
    g.add_argument("--alpha2", type=float)
    g.add_argument("--alpha4", type=float)
    g.add_argument("--poly", type=_parse_list, help="coefficients of X^3, X^4, ... (comma separated)")
    g = common.add_argument_group("Monte Carlo")
    g.add_argument("--n", type=int)
    g.add_argument("--seed", type=int)
    g.add_argument("--batches", type=int)
    g.add_argument("--order", type=int)
    g.add_argument("--points", type=lambda s: _parse_list(s, int))
    g.add_argument("--free", action="store_true", default=None)
    g.add_argument("--no-samples", dest="write_samples", action="store_false", default=None)
    g = common.add_argument_group("Ginzburg-Landau")
    g.add_argument("--T", type=float)
    g.add_argument("--Tc", type=float)
    g.add_argument("--T-grid", dest="T_grid", type=_parse_list, help="comma list or lo:hi:count")
    g.add_argument("--constraint", type=float)
    g.add_argument("--max-iter", dest="max_iter", type=int)
    g.add_argument("--tol", type=float)
    g.add_argument("--init-noise", dest="init_noise", type=float)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sub.add_parser(name, parents=[common])
    return parser


def parse_config(args: argparse.Namespace) -> RunConfig:
    problems: list[str] = []
    values: dict[str, Any] = {}
    if args.config:
        values.update(_flatten(_load_file(args.config), problems))
    for name in _FIELD_NAMES:
        v = getattr(args, name, None)
        if v is not None:
            values[name] = v
    if problems:
        raise ConfigError(problems)
    cfg = RunConfig(**values)
    return validate(cfg, args.command)


def _cell(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        x = float(v)
        if not math.isfinite(x):
            raise NumericalFailure(f"non-finite value {x} in output table")
        return repr(x)
    return str(v)


class Output:
    def __init__(self, directory: str):
        self.dir = Path(directory)
        self.dir.mkdir(parents=True, exist_ok=True)
        self.files: list[str] = []

    def csv(self, name: str, header: list[str], rows) -> Path:
        path = self.dir / name
        with path.open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            for row in rows:
                w.writerow([_cell(v) for v in row])
        self.files.append(name)
        return path

    def json(self, name: str, payload: dict) -> Path:
        path = self.dir / name
        path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
        self.files.append(name)
        return path

    def hashes(self) -> dict[str, str]:
        return {f: hashlib.sha256((self.dir / f).read_bytes()).hexdigest() for f in self.files}


def _lattice(cfg: RunConfig) -> Lattice:
    pc = cfg.prime_config()
    if pc.size > DENSE_MAX_POINTS:
        raise CapacityError(f"#G_l = {pc.size} exceeds the dense-matrix limit of {DENSE_MAX_POINTS}")
    return Lattice(pc)


def _params(cfg: RunConfig) -> ModelParams:
    return ModelParams(cfg.gamma, cfg.alpha2, cfg.kernel_spec(), cfg.alpha4)


def _interaction(cfg: RunConfig) -> InteractionSpec:
    return InteractionSpec(tuple(cfg.poly), cfg.alpha4)


def _check_points(points: list[int], lat: Lattice) -> None:
    bad = [x for x in points if x >= lat.n]
    if bad:
        raise ConfigError([f"points: indices {bad} outside the lattice (size {lat.n})"])


def _matrix_rows(M: np.ndarray):
    for i, row in enumerate(M):
        yield [i] + list(row)


def cmd_operator(cfg: RunConfig, out: Output) -> dict:
    lat = _lattice(cfg)
    kernel = cfg.kernel_spec()
    header = ["row"] + [f"c{j}" for j in range(lat.n)]
    out.csv("A.csv", header, _matrix_rows(assemble_A(lat, kernel)))
    out.csv("W.csv", header, _matrix_rows(assemble_W(lat, kernel)))
    out.csv("U.csv", header, _matrix_rows(assemble_U(lat, _params(cfg))))
    D = momentum_diagonal(lat, _params(cfg))
    out.csv(
        "momentum_diagonal.csv",
        ["index", "norm_exponent", "value"],
        ([j, "zero" if j == 0 else int(lat.norm_exponent[j]), D[j]] for j in range(lat.n)),
    )
    exps = range(-lat.cfg.l + 1, lat.cfg.l + 1)
    out.csv("symbol.csv", ["norm_exponent", "value"], ([e, symbol(kernel, e, lat.cfg)] for e in exps))
    return {"points": lat.n}


def cmd_spectrum(cfg: RunConfig, out: Output) -> dict:
    lat = _lattice(cfg)
    kernel = cfg.kernel_spec()
    mats = {"A": assemble_A(lat, kernel), "W": assemble_W(lat, kernel), "U": assemble_U(lat, _params(cfg))}
    rows = []
    for name, M in mats.items():
        for k, ev in enumerate(np.linalg.eigvalsh(M)):
            rows.append([name, k, ev])
    out.csv("spectrum.csv", ["operator", "k", "eigenvalue"], rows)
    return {"min_eig_U": float(np.linalg.eigvalsh(mats["U"])[0])}


def cmd_propagator(cfg: RunConfig, out: Output) -> dict:
    lat = _lattice(cfg)
    params = _params(cfg)
    spec = FreeMeasure(lat, params)
    G = propagator_values(spec)
    exps = lat.norm_exponent
    rows = []
    for e in np.unique(exps[1:]):
        x = int(np.flatnonzero(exps == e)[0])
        cont = continuum_propagator(params.kernel, params.gamma, params.alpha2, int(e), lat.cfg)
        rows.append([int(e), cont, G[x], G[x] / cont if cont != 0 else 0.0])
    try:
        c0 = continuum_propagator(params.kernel, params.gamma, params.alpha2, None, lat.cfg)
        rows.insert(0, ["zero", c0, G[0], G[0] / c0])
    except DivergentIntegral:
        pass
    out.csv("propagator.csv", ["norm_exponent", "value", "lattice", "lattice_over_continuum"], rows)
    return {"G_l(0)": float(G[0])}


def cmd_sample(cfg: RunConfig, out: Output) -> dict:
    lat = _lattice(cfg)
    spec = FreeMeasure(lat, _params(cfg))
    batch = sample_free(spec, cfg.seed, cfg.n)
    if cfg.write_samples:
        out.csv("samples.csv", [f"x{i}" for i in range(lat.n)], batch.fields)
    exact = spec.mode_var
    emp_re = batch.mode_re.var(axis=0)
    emp_im = batch.mode_im.var(axis=0)
    out.csv(
        "modes.csv",
        ["mode_index", "norm_exponent", "sigma2", "mean_re", "var_re", "mean_im", "var_im"],
        (
            [int(j), int(lat.norm_exponent[j]), exact[k], batch.mode_re[:, k].mean(), emp_re[k], batch.mode_im[:, k].mean(), emp_im[k]]
            for k, j in enumerate(spec.plus)
        ),
    )
    spec_hash = hashlib.sha256(
        json.dumps({"p": cfg.p, "N": cfg.N, "l": cfg.l, "kernel": repr(spec.params.kernel), "gamma": cfg.gamma, "alpha2": cfg.alpha2}, sort_keys=True).encode()
    ).hexdigest()
    out.json(
        "summary.json",
        {
            "seed": cfg.seed,
            "n": cfg.n,
            "generator": batch.generator,
            "spec_hash": spec_hash,
            "empirical_mean_re": [float(x) for x in batch.mode_re.mean(axis=0)],
            "empirical_var_re": [float(x) for x in emp_re],
            "sigma2": [float(x) for x in exact],
        },
    )
    return {"draws": cfg.n, "max_abs_field_sum": float(np.abs(batch.fields.sum(axis=1)).max())}


def cmd_correlate(cfg: RunConfig, out: Output) -> dict:
    lat = _lattice(cfg)
    _check_points(cfg.points, lat)
    spec = FreeMeasure(lat, _params(cfg))
    rows = []
    if cfg.free:
        C = exact_covariance(spec)
        for x in range(lat.n):
            r = mc_moment(spec, [0, x], cfg.n, cfg.seed + x, cfg.batches)
            rows.append([f"G2(0,{x})", C[0, x], r.value, r.stderr, r.n, r.seed])
        for x in range(lat.n):
            r = mc_moment(spec, [0, 0, x, x], cfg.n, cfg.seed + lat.n + x, cfg.batches)
            exact = C[0, 0] * C[x, x] + 2 * C[0, x] ** 2
            rows.append([f"G4(0,0,{x},{x})", exact, r.value, r.stderr, r.n, r.seed])
        out.csv("correlate.csv", ["quantity", "exact", "value", "stderr", "n", "seed"], rows)
        return {"rows": len(rows)}
    r = correlation(cfg.points, spec, _interaction(cfg), cfg.n, cfg.seed, cfg.batches)
    label = "G(" + ",".join(str(x) for x in cfg.points) + ")"
    out.csv("correlate.csv", ["quantity", "value", "stderr", "n", "seed"], [[label, r.value, r.stderr, r.n, r.seed]])
    return {"value": r.value, "stderr": r.stderr}


def cmd_partition(cfg: RunConfig, out: Output) -> dict:
    lat = _lattice(cfg)
    spec = FreeMeasure(lat, _params(cfg))
    inter = _interaction(cfg)
    z = partition_interacting(spec, inter, cfg.n, cfg.seed, cfg.batches)
    w = wick_rotated_Z(np.zeros(lat.n), spec, inter, cfg.n, cfg.seed + 1, cfg.batches)
    rows = [
        ["Z", z.value, z.stderr, z.n, z.seed],
        ["Zc_numerator_re", w.numerator.value.real, w.numerator.stderr, w.numerator.n, w.numerator.seed],
        ["Zc_numerator_im", w.numerator.value.imag, w.numerator.stderr, w.numerator.n, w.numerator.seed],
        ["Zc_denominator_re", w.denominator.value.real, w.denominator.stderr, w.denominator.n, w.denominator.seed],
        ["Zc_denominator_im", w.denominator.value.imag, w.denominator.stderr, w.denominator.n, w.denominator.seed],
    ]
    if not w.sign_problem:
        rows += [
            ["Zc_ratio_re", w.ratio.value.real, w.ratio.stderr, w.ratio.n, w.ratio.seed],
            ["Zc_ratio_im", w.ratio.value.imag, w.ratio.stderr, w.ratio.n, w.ratio.seed],
        ]
    out.csv("partition.csv", ["quantity", "value", "stderr", "n", "seed"], rows)
    return {"Z": z.value, "stderr": z.stderr, "sign_problem": w.sign_problem}


def cmd_perturb(cfg: RunConfig, out: Output) -> dict:
    lat = _lattice(cfg)
    _check_points(cfg.points, lat)
    spec = FreeMeasure(lat, _params(cfg))
    inter = _interaction(cfg)
    terms = perturbative_terms(spec, inter, cfg.order)
    z = partition_interacting(spec, inter, cfg.n, cfg.seed, cfg.batches)
    rows = [[f"Z_{m}", t, 0.0, 0, cfg.seed] for m, t in enumerate(terms)]
    rows.append([f"Z_pert(M={cfg.order})", sum(terms), 0.0, 0, cfg.seed])
    rows.append(["Z_mc", z.value, z.stderr, z.n, z.seed])
    label = ",".join(str(x) for x in cfg.points)
    for M in range(cfg.order + 1):
        try:
            rows.append([f"G_pert(M={M};{label})", perturbative_correlation(cfg.points, spec, inter, M), 0.0, 0, cfg.seed])
        except TooLarge:
            break
    c = correlation(cfg.points, spec, inter, cfg.n, cfg.seed, cfg.batches)
    rows.append([f"G_mc({label})", c.value, c.stderr, c.n, c.seed])
    out.csv("perturb.csv", ["quantity", "value", "stderr", "n", "seed"], rows)
    return {"Z_pert": sum(terms), "Z_mc": z.value}


def _gl(cfg: RunConfig, T: float) -> GLParams:
    return GLParams(T=T, Tc=cfg.Tc, gamma0=cfg.gamma, alpha4_0=cfg.alpha4, kernel=cfg.kernel_spec())


def cmd_minimize(cfg: RunConfig, out: Output) -> dict:
    lat = _lattice(cfg)
    init = np.random.default_rng(cfg.seed).normal(size=lat.n) * cfg.init_noise
    mc = MinimizeConfig(initial=init, max_iter=cfg.max_iter, tol=cfg.tol, constraint=cfg.constraint)
    res = minimize(None, _gl(cfg, cfg.T), mc, lat)
    out.csv("field.csv", ["index", "phi"], ([i, v] for i, v in enumerate(res.field)))
    out.csv(
        "minimize.csv",
        ["quantity", "value"],
        [
            ["energy", res.energy],
            ["grad_norm", res.grad_norm],
            ["iterations", res.iterations],
            ["spread", res.spread],
            ["mean", res.mean],
            ["converged", res.converged],
        ],
    )
    if not res.converged:
        raise NumericalFailure(f"minimizer stopped after {res.iterations} iterations at gradient {res.grad_norm:.3e}")
    return {"energy": res.energy, "mean": res.mean, "iterations": res.iterations}


def cmd_sweep(cfg: RunConfig, out: Output) -> dict:
    lat = _lattice(cfg)
    mc = MinimizeConfig(max_iter=cfg.max_iter, tol=cfg.tol)
    T_values = [cfg.Tc + float(t) for t in cfg.T_grid]
    rows = ssb_scan(T_values, cfg.Tc, cfg.gamma, cfg.alpha4, cfg.kernel_spec(), lat, mc)
    out.csv(
        "sweep.csv",
        ["T", "alpha2", "m_plus", "m_minus", "energy", "iterations", "converged"],
        ([r.T, r.alpha2, r.m_plus, r.m_minus, r.energy, r.iterations, r.converged] for r in rows),
    )
    if not all(r.converged for r in rows):
        raise NumericalFailure("at least one temperature did not converge")
    return {"temperatures": len(rows)}


def cmd_selftest(cfg: RunConfig, out: Output) -> dict:
    from .selftest import run_selftest

    results = run_selftest()
    out.csv("selftest.csv", ["check", "ok", "detail"], ([r.name, r.ok, r.detail] for r in results))
    passed = sum(r.ok for r in results)
    summary = {"passed": passed, "failed": len(results) - passed}
    if passed != len(results):
        failed = [r.name for r in results if not r.ok]
        raise NumericalFailure(f"selftest failures: {', '.join(failed)}")
    return summary


HANDLERS = {name: globals()[f"cmd_{name}"] for name in COMMANDS}


def _emit(args, payload: dict, human: str) -> None:
    if getattr(args, "json", False):
        print(json.dumps(payload, sort_keys=True))
    else:
        print(human)


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = parse_config(args)
    except ConfigError as exc:
        _emit(args, {"status": "config_error", "problems": exc.problems}, "configuration error:\n  " + "\n  ".join(exc.problems))
        return EXIT_CONFIG
    except (ValueError, TypeError) as exc:
        _emit(args, {"status": "config_error", "problems": [str(exc)]}, f"configuration error:\n  {exc}")
        return EXIT_CONFIG
    out = Output(cfg.out)
    t0 = time.perf_counter()
    status, code, summary = "ok", EXIT_OK, {}
    try:
        summary = HANDLERS[args.command](cfg, out)
    except ConfigError as exc:
        status, code, summary = "config_error", EXIT_CONFIG, {"problems": exc.problems}
    except CapacityError as exc:
        status, code, summary = "capacity", EXIT_CAPACITY, {"error": str(exc)}
    except (NumericalFailure, PadicFTError, np.linalg.LinAlgError) as exc:
        status, code, summary = "numerical_failure", EXIT_NUMERICAL, {"error": str(exc)}
    wall = time.perf_counter() - t0
    manifest = {
        "command": args.command,
        "config": asdict(cfg),
        "version": __version__,
        "generator": GENERATOR_ID,
        "threads_env": THREADS_ENV,
        "status": status,
        "exit_code": code,
        "wall_seconds": {args.command: wall},
        "outputs": out.hashes(),
        "summary": summary,
    }
    (out.dir / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True, default=str) + "\n")
    human = f"{args.command}: {status} ({wall:.2f}s) -> {out.dir}"
    if summary:
        human += "\n" + "\n".join(f"  {k}: {v}" for k, v in summary.items())
    _emit(args, {"status": status, "exit_code": code, "summary": summary, "out": str(out.dir)}, human)
    return code


if __name__ == "__main__":
    sys.exit(main())
