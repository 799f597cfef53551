"""``specgap`` command line: one analysis per subcommand, results as files.

Exit codes: 0 success, 1 numerical failure, 2 configuration or input error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from typing import Any, Dict, List

import numpy as np

from specgap.bands import (
    DEFAULT_GRID,
    borg_check,
    interlace_submatrices,
    perturbation_certificate,
    sample_bands,
    symbol_exact_certificates,
)
from specgap.config import RunConfig, load_config
from specgap.detection import (
    DEFAULT_K,
    delta_grid,
    kb1_criterion,
    parse_scheme,
    section_data,
)
from specgap.errors import (
    ConfigError,
    ContractError,
    DomainError,
    InsufficientDataError,
    NumericalError,
    SpecError,
)
from specgap.family import essential_bound_functions, gap_stability_radius, sweep
from specgap.model import JacobiSpec, SchrodingerSpec, SymbolOperator, as_operator
from specgap.truncation import classify_point, eigenvalue_trajectories, estimate_bounds

DEFAULT_NMAX = 1600
DEFAULT_KMAX = 8
DEFAULT_WINDOW = 0.1
DIGITS = 12


# ----------------------------------------------------------------------------
# deterministic output
# ----------------------------------------------------------------------------


def fmt(x: float) -> str:
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    text = format(x, f".{DIGITS}g")
    return "0" if text == "-0" else text


def _json(value, indent=0) -> str:
    pad = "  " * (indent + 1)
    end = "  " * indent
    if value is None:
        return "null"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return "null" if not math.isfinite(value) else fmt(value)
    if isinstance(value, str):
        return json.dumps(value)
    if isinstance(value, dict):
        if not value:
            return "{}"
        items = [f"{pad}{_json(str(k))}: {_json(v, indent + 1)}" for k, v in value.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(value, (list, tuple, np.ndarray)):
        seq = list(value)
        if not seq:
            return "[]"
        if all(not isinstance(v, (dict, list, tuple, np.ndarray)) for v in seq):
            return "[" + ", ".join(_json(v) for v in seq) + "]"
        return "[\n" + ",\n".join(pad + _json(v, indent + 1) for v in seq) + "\n" + end + "]"
    raise TypeError(f"cannot serialise {type(value).__name__}")


def write_json(path: str, payload) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(_json(payload) + "\n")


def write_csv(path: str, header: List[str], rows) -> None:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([fmt(v) if isinstance(v, (float, np.floating)) else v for v in row])
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(buf.getvalue())


# ----------------------------------------------------------------------------
# parameter resolution (flag > config params > default)
# ----------------------------------------------------------------------------


def _param(args, cfg: RunConfig, name: str, default=None):
    flag = getattr(args, name, None)
    if flag is not None:
        return flag
    return cfg.params.get(name, default)


def _n_list(args, cfg: RunConfig) -> List[int]:
    if args.nmax is None and "n_list" in cfg.params:
        return list(cfg.params["n_list"])
    nmax = _param(args, cfg, "nmax", DEFAULT_NMAX)
    if nmax < 8:
        raise ConfigError("--nmax", "must be at least 8")
    return [nmax // 8, nmax // 4, nmax // 2, nmax]


def _check_positive(value, name):
    if value is not None and not value > 0:
        raise ConfigError(name, "must be positive")


def _symbol_source(cfg: RunConfig):
    op = cfg.operator
    if isinstance(op, (SchrodingerSpec, JacobiSpec)):
        return op
    if isinstance(op, SymbolOperator):
        return op.symbol
    raise ConfigError("operator.kind", f"'{cfg.kind}' operators have no symbol; use truncation or gapdetect")


def _emit(args, name_json, payload, name_csv=None, header=None, rows=None):
    if args.format in ("json", "both") and name_json:
        write_json(os.path.join(args.out, name_json), payload)
    if args.format in ("csv", "both") and name_csv:
        write_csv(os.path.join(args.out, name_csv), header, rows)


# ----------------------------------------------------------------------------
# commands
# ----------------------------------------------------------------------------


def cmd_bands(args, cfg: RunConfig) -> None:
    grid = _param(args, cfg, "grid", DEFAULT_GRID)
    bands = sample_bands(_symbol_source(cfg), grid)
    payload = bands.to_dict()
    payload["certificates"] = [c.to_dict() for c in symbol_exact_certificates(bands)]
    p = bands.values.shape[1]
    header = ["theta"] + [f"lambda_{j}" for j in range(1, p + 1)]
    rows = ([t] + list(v) for t, v in zip(bands.theta, bands.values))
    _emit(args, "bands.json", payload, "branches.csv", header, rows)


def cmd_truncation(args, cfg: RunConfig) -> None:
    ns = _n_list(args, cfg)
    kmax = _param(args, cfg, "kmax", DEFAULT_KMAX)
    if kmax > ns[0]:
        raise ConfigError("kmax", f"must not exceed the smallest truncation order {ns[0]}")
    trajs = eigenvalue_trajectories(cfg.operator, ns, kmax)
    est = estimate_bounds(trajs)
    delta = _param(args, cfg, "delta", DEFAULT_WINDOW)
    cap = _param(args, cfg, "cap", DEFAULT_K)
    op = as_operator(cfg.operator)
    points = [float(np.real(op.section(1)[0, 0]))] + list(cfg.params.get("points", []))
    classes = []
    if len(ns) >= 3 and ns[-1] >= 4 * ns[0]:
        for lam0 in points:
            pc = classify_point(cfg.operator, lam0, delta, ns, cap, spectra=trajs.spectra)
            classes.append(dict({"point": lam0}, **pc.to_dict()))
    payload: Dict[str, Any] = {
        "n_list": ns,
        "k_max": kmax,
        "estimate": est.to_dict(),
        "monotone": all(t.is_monotone() for t in trajs.top + trajs.bottom),
        "lambda_set_size": len(est.lambda_set_sample),
        "classification": classes,
    }
    _emit(
        args, "estimate.json", payload,
        "trajectories.csv", ["n", "k", "direction", "lambda", "residual"], trajs.rows(),
    )


def cmd_gapdetect(args, cfg: RunConfig) -> None:
    ns = _n_list(args, cfg)
    scheme = parse_scheme(_param(args, cfg, "scheme", "entry:1"))
    cap = _param(args, cfg, "cap", DEFAULT_K)
    kmax = min(_param(args, cfg, "kmax", DEFAULT_KMAX), ns[0])
    data = section_data(cfg.operator, ns, vectors=scheme.needs_vectors)
    delta = _param(args, cfg, "delta")
    if delta is None:
        final = data.decomps[ns[-1]].values
        deltas = delta_grid(max(1.0, float(np.max(np.abs(final)))))
    else:
        deltas = [delta]
    evidence = [kb1_criterion(cfg.operator, scheme, d, cap, ns, kmax, data=data) for d in deltas]
    payload = {
        "evidence": [e.to_dict() for e in evidence],
        "fired": [[e.delta, e.K] for e in evidence if e.found],
    }
    _emit(args, "evidence.json", payload)


def cmd_certify(args, cfg: RunConfig) -> None:
    spec = cfg.operator
    if not isinstance(spec, (SchrodingerSpec, JacobiSpec)):
        raise ConfigError("operator.kind", "certify needs a schrodinger or jacobi operator")
    grid = _param(args, cfg, "grid", DEFAULT_GRID)
    report = perturbation_certificate(spec, grid)
    bands = sample_bands(spec, grid)
    payload: Dict[str, Any] = report.to_dict()
    payload["symbol_exact"] = [c.to_dict() for c in symbol_exact_certificates(bands)]
    payload["bands"] = bands.union.to_list()
    payload["bands_outside_inclusion"] = bands.union.difference_measure(report.inclusion)
    payload["inclusion_outside_bands"] = report.inclusion.difference_measure(bands.union)
    if isinstance(spec, SchrodingerSpec):
        payload["borg"] = borg_check(spec, grid).to_dict()
        payload["interlace"] = interlace_submatrices(spec).to_dict()
    else:
        payload["borg"] = None
        payload["interlace"] = None
    _emit(args, "certificates.json", payload)


def cmd_family(args, cfg: RunConfig) -> None:
    fam = cfg.family
    if fam is None:
        raise ConfigError("operator.family", "family command needs a family block")
    ns = _n_list(args, cfg)
    kmax = min(_param(args, cfg, "kmax", DEFAULT_KMAX), ns[0])
    xs = cfg.params.get("x_grid")
    if xs is None:
        lo, hi = fam.domain
        xs = sorted({float(x) for x in np.linspace(lo, hi, 5)} | {0.0})
    table = sweep(fam, xs, ns, kmax)
    bounds = essential_bound_functions(table)
    payload: Dict[str, Any] = {
        "x_grid": list(table.x_grid),
        "n_list": list(table.n_list),
        "lipschitz": table.lipschitz,
        "bounds": [
            {"x": p.x, "nu_hat": p.nu_hat, "mu_hat": p.mu_hat,
             "nu_residual": p.nu_residual, "mu_residual": p.mu_residual}
            for p in bounds.points
        ],
        "continuity_violations": bounds.continuity_violations,
        "sweep_violations": table.violations,
        "stability": None,
    }
    gap = cfg.params.get("gap")
    if gap is not None:
        eps = _param(args, cfg, "eps", 0.25 * (gap[1] - gap[0]))
        grid = _param(args, cfg, "grid", DEFAULT_GRID)
        payload["stability"] = gap_stability_radius(fam, tuple(gap), eps, grid).to_dict()
    _emit(
        args, "stability.json", payload,
        "sweep.csv", ["x", "n", "k", "direction", "lambda"], table.rows(),
    )


COMMANDS = {
    "bands": cmd_bands,
    "truncation": cmd_truncation,
    "gapdetect": cmd_gapdetect,
    "certify": cmd_certify,
    "family": cmd_family,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="specgap", description="Spectral gaps of periodic band operators.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="operator configuration (JSON)")
        p.add_argument("--out", default=".", help="output directory")
        p.add_argument("--grid", type=int, help="theta grid size")
        p.add_argument("--nmax", type=int, help="largest truncation order")
        p.add_argument("--kmax", type=int, help="number of trajectories per end")
        p.add_argument("--delta", type=float, help="window half-width")
        p.add_argument("--cap", type=int, help="count bound K")
        p.add_argument("--scheme", help="uniform | entry:I | twopoint:T:L:M")
        p.add_argument("--eps", type=float, help="gap margin for the stability radius")
        p.add_argument("--format", choices=("json", "csv", "both"), default="both")
    return parser


def _validate_flags(args):
    if args.grid is not None and args.grid < 16:
        raise ConfigError("--grid", "must be at least 16")
    for name in ("kmax", "cap"):
        value = getattr(args, name)
        if value is not None and value < 1:
            raise ConfigError(f"--{name}", "must be at least 1")
    _check_positive(args.delta, "--delta")
    _check_positive(args.eps, "--eps")
    if args.scheme is not None:
        try:
            parse_scheme(args.scheme)
        except ContractError as exc:
            raise ConfigError("--scheme", str(exc)) from None


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        _validate_flags(args)
        cfg = load_config(args.config)
        os.makedirs(args.out, exist_ok=True)
        COMMANDS[args.command](args, cfg)
    except ConfigError as exc:
        print(f"specgap: config error: {exc}", file=sys.stderr)
        return 2
    except (SpecError, DomainError, ContractError) as exc:
        print(f"specgap: invalid input: {exc}", file=sys.stderr)
        return 2
    except (NumericalError, InsufficientDataError) as exc:
        print(f"specgap: numerical failure: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
