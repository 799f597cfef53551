"""JSON run configuration: operator description plus analysis parameters.

Every validation failure raises ConfigError naming the offending key path
(``operator.corner.1``, ``params.n_list[2]``). Unknown keys are errors.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Any, Dict, Optional

import numpy as np

from specgap.errors import ConfigError, SpecgapError
from specgap.model import (
    ExplicitBand,
    FamilySpec,
    JacobiSpec,
    MatrixSymbol,
    SchrodingerSpec,
    SymbolOperator,
)

KINDS = ("schrodinger", "jacobi", "symbol", "band")
OPERATOR_KEYS = {
    "schrodinger": {"kind", "period", "potential", "corner", "lattice", "ordered", "family"},
    "jacobi": {"kind", "period", "offdiag", "diag", "rotation", "lattice"},
    "symbol": {"kind", "period", "blocks", "lattice"},
    "band": {"kind", "diagonals", "lattice"},
}
FAMILY_KEYS = {"coeffs", "domain", "lipschitz"}
PARAM_KEYS = {"grid", "n_list", "nmax", "kmax", "delta", "cap", "scheme", "eps", "x_grid", "gap", "points"}


@dataclass
class RunConfig:
    kind: str
    operator: Any
    family: Optional[FamilySpec] = None
    params: Dict[str, Any] = field(default_factory=dict)


def _join(path, key):
    return f"{path}.{key}" if path else str(key)


def _real(value, path) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(path, f"expected a real number, got {value!r}")
    if not math.isfinite(value):
        raise ConfigError(path, "must be finite")
    return float(value)


def _complex(value, path) -> complex:
    if isinstance(value, list):
        if len(value) != 2:
            raise ConfigError(path, "complex entries are [re, im] pairs")
        return complex(_real(value[0], f"{path}[0]"), _real(value[1], f"{path}[1]"))
    return complex(_real(value, path))


def _int(value, path, minimum=None) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(path, f"expected an integer, got {value!r}")
    if minimum is not None and value < minimum:
        raise ConfigError(path, f"must be >= {minimum}, got {value}")
    return value


def _positive(value, path) -> float:
    x = _real(value, path)
    if x <= 0:
        raise ConfigError(path, f"must be positive, got {value}")
    return x


def _list(value, path, min_len=0):
    if not isinstance(value, list):
        raise ConfigError(path, f"expected a list, got {type(value).__name__}")
    if len(value) < min_len:
        raise ConfigError(path, f"needs at least {min_len} entries")
    return value


def _reals(value, path, min_len=0):
    return [_real(v, f"{path}[{i}]") for i, v in enumerate(_list(value, path, min_len))]


def _object(value, path, allowed):
    if not isinstance(value, dict):
        raise ConfigError(path, f"expected an object, got {type(value).__name__}")
    for key in value:
        if key not in allowed:
            raise ConfigError(_join(path, key), "unknown key")
    return value


def _require(obj, key, path):
    if key not in obj:
        raise ConfigError(_join(path, key), "missing required key")
    return obj[key]


def _int_key(key, path) -> int:
    try:
        return int(key)
    except ValueError:
        raise ConfigError(_join(path, key), "keys must be integers") from None


def _lattice(obj, path, default):
    lattice = obj.get("lattice", default)
    if lattice not in ("half", "full"):
        raise ConfigError(_join(path, "lattice"), "must be 'half' or 'full'")
    return lattice


def _period(obj, path, length):
    if "period" in obj:
        p = _int(obj["period"], _join(path, "period"), minimum=2)
        if length is not None and p != length:
            raise ConfigError(_join(path, "period"), f"is {p} but the lists have length {length}")
        return p
    return length


def _build(path, factory, *args, **kwargs):
    try:
        return factory(*args, **kwargs)
    except SpecgapError as exc:
        raise ConfigError(path, str(exc)) from None


def _schrodinger(op, path):
    potential = _reals(_require(op, "potential", path), _join(path, "potential"), 2)
    _period(op, path, len(potential))
    corner_raw = op.get("corner", {})
    if not isinstance(corner_raw, dict):
        raise ConfigError(_join(path, "corner"), "expected an object of k -> a_k")
    corner = {
        _int_key(k, _join(path, "corner")): _real(v, _join(_join(path, "corner"), k))
        for k, v in corner_raw.items()
    }
    ordered = op.get("ordered")
    if ordered is not None and not isinstance(ordered, bool):
        raise ConfigError(_join(path, "ordered"), "must be true or false")
    spec = _build(path, SchrodingerSpec, potential, corner, _lattice(op, path, "half"), ordered)
    family = None
    if "family" in op:
        fpath = _join(path, "family")
        fam = _object(op["family"], fpath, FAMILY_KEYS)
        rows = _list(_require(fam, "coeffs", fpath), _join(fpath, "coeffs"), 1)
        coeffs = [_reals(r, f"{fpath}.coeffs[{i}]", 1) for i, r in enumerate(rows)]
        domain = _reals(_require(fam, "domain", fpath), _join(fpath, "domain"), 2)
        if len(domain) != 2 or domain[0] > domain[1]:
            raise ConfigError(_join(fpath, "domain"), "must be [lo, hi] with lo <= hi")
        lip = fam.get("lipschitz")
        if lip is not None:
            lip = _real(lip, _join(fpath, "lipschitz"))
        family = _build(fpath, FamilySpec, spec, coeffs, tuple(domain), lip)
    return spec, family


def _jacobi(op, path):
    offdiag = _reals(_require(op, "offdiag", path), _join(path, "offdiag"), 2)
    diag = _reals(_require(op, "diag", path), _join(path, "diag"), 2)
    _period(op, path, len(diag))
    rotation = _int(op.get("rotation", 0), _join(path, "rotation"), minimum=0)
    return _build(path, JacobiSpec, offdiag, diag, rotation, _lattice(op, path, "full")), None


def _symbol(op, path):
    p = _int(_require(op, "period", path), _join(path, "period"), minimum=1)
    bpath = _join(path, "blocks")
    raw = _require(op, "blocks", path)
    if not isinstance(raw, dict) or not raw:
        raise ConfigError(bpath, "expected a nonempty object of k -> p x p matrix")
    blocks = {}
    for key, rows in raw.items():
        kpath = _join(bpath, key)
        k = _int_key(key, bpath)
        rows = _list(rows, kpath, p)
        if len(rows) != p:
            raise ConfigError(kpath, f"needs {p} rows")
        mat = np.zeros((p, p), dtype=np.complex128)
        for i, row in enumerate(rows):
            row = _list(row, f"{kpath}[{i}]", p)
            if len(row) != p:
                raise ConfigError(f"{kpath}[{i}]", f"needs {p} entries")
            for j, v in enumerate(row):
                mat[i, j] = _complex(v, f"{kpath}[{i}][{j}]")
        blocks[k] = mat
    symbol = _build(bpath, MatrixSymbol, p, blocks)
    return _build(path, SymbolOperator, symbol, _lattice(op, path, "full")), None


def _band(op, path):
    dpath = _join(path, "diagonals")
    raw = _require(op, "diagonals", path)
    if not isinstance(raw, dict) or not raw:
        raise ConfigError(dpath, "expected a nonempty object of d -> periodic values")
    diags = {}
    for key, vals in raw.items():
        vpath = _join(dpath, key)
        d = _int_key(key, dpath)
        vals = _list(vals, vpath, 1)
        diags[d] = [_complex(v, f"{vpath}[{i}]") for i, v in enumerate(vals)]
    return _build(dpath, ExplicitBand.periodic, diags, _lattice(op, path, "half")), None


def _params(raw) -> Dict[str, Any]:
    path = "params"
    obj = _object(raw, path, PARAM_KEYS)
    out: Dict[str, Any] = {}
    for key, value in obj.items():
        kp = _join(path, key)
        if key == "grid":
            out[key] = _int(value, kp, minimum=16)
        elif key in ("nmax", "kmax", "cap"):
            out[key] = _int(value, kp, minimum=8 if key == "nmax" else 1)
        elif key in ("delta", "eps"):
            out[key] = _positive(value, kp)
        elif key == "n_list":
            ns = [_int(v, f"{kp}[{i}]", minimum=1) for i, v in enumerate(_list(value, kp, 2))]
            if any(b <= a for a, b in zip(ns, ns[1:])):
                raise ConfigError(kp, "must be strictly increasing")
            out[key] = ns
        elif key == "scheme":
            if not isinstance(value, str):
                raise ConfigError(kp, "expected a scheme string")
            from specgap.detection import parse_scheme

            _build(kp, parse_scheme, value)
            out[key] = value
        elif key == "x_grid":
            xs = _reals(value, kp, 1)
            if any(b <= a for a, b in zip(xs, xs[1:])):
                raise ConfigError(kp, "must be strictly increasing")
            out[key] = xs
        elif key == "gap":
            gap = _reals(value, kp, 2)
            if len(gap) != 2 or not gap[0] < gap[1]:
                raise ConfigError(kp, "must be [a, b] with a < b")
            out[key] = gap
        elif key == "points":
            out[key] = _reals(value, kp)
    return out


BUILDERS = {"schrodinger": _schrodinger, "jacobi": _jacobi, "symbol": _symbol, "band": _band}


def parse_config(tree) -> RunConfig:
    """Validate a decoded JSON tree and build the operator objects."""
    top = _object(tree, "", {"operator", "params"})
    op = _require(top, "operator", "")
    if not isinstance(op, dict):
        raise ConfigError("operator", "expected an object")
    kind = _require(op, "kind", "operator")
    if kind not in KINDS:
        raise ConfigError("operator.kind", f"must be one of {', '.join(KINDS)}")
    _object(op, "operator", OPERATOR_KEYS[kind])
    spec, family = BUILDERS[kind](op, "operator")
    params = _params(top.get("params", {}))
    return RunConfig(kind, spec, family, params)


def load_config(path) -> RunConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError("", f"cannot read {path}: {exc.strerror}") from None
    try:
        tree = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError("", f"invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    return parse_config(tree)
