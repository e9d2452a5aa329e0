"""JSON configuration files describing an algebroid, a bivector and an endomorphism.

Format (indices are 0-based frame positions; all expressions use the
expression language of :mod:`pnalgebroid.exprlang`)::

    {
      "name": "example",
      "coords": ["x", "y"],
      "frame": ["e0", "e1"],
      "anchor": [["1", "0"], ["0", "x"]],          # r rows of n expressions
      "structure": {"0,1": ["0", "1"]},            # [e_i, e_j] components
      "pi": {"0,1": "x"},                           # optional bivector
      "N": [["x", "0"], ["0", "1"]],               # optional endomorphism
      "domain": {"x": [0.5, 2], "y": [-1, 1]}
    }

Missing ``frame`` defaults to ``e0..e(r-1)`` with ``r`` taken from the anchor
(or from ``N``/``structure`` when the base is a point).
"""

from __future__ import annotations

import json

from . import exprlang
from .algebroid import LieAlgebroid
from .exterior import EndomorphismField, Multivector
from .poisson import PNStructure


class ConfigError(ValueError):
    """A configuration problem, with a location such as ``structure["0,1"][1]``."""

    def __init__(self, location, message):
        super().__init__(f"{location}: {message}" if location else message)
        self.location = location


def _expr(text, coords, where):
    if isinstance(text, (int, float)) and not isinstance(text, bool):
        text = repr(float(text))
    if not isinstance(text, str):
        raise ConfigError(where, f"expected an expression string, got {type(text).__name__}")
    try:
        return exprlang.parse(text, coords)
    except exprlang.ExprError as exc:
        raise ConfigError(where, str(exc)) from None


def _pair(key, r, where):
    try:
        i, j = (int(t) for t in str(key).split(","))
    except ValueError:
        raise ConfigError(where, f"key {key!r} must look like 'i,j'") from None
    if not (0 <= i < r and 0 <= j < r) or i == j:
        raise ConfigError(where, f"key {key!r} needs distinct indices in 0..{r - 1}")
    return i, j


def _list(obj, where, length=None):
    if not isinstance(obj, list):
        raise ConfigError(where, "expected a list")
    if length is not None and len(obj) != length:
        raise ConfigError(where, f"expected {length} entries, got {len(obj)}")
    return obj


def _rank(data):
    if "frame" in data:
        return len(_list(data["frame"], "frame"))
    for key in ("anchor", "N"):
        if key in data:
            return len(_list(data[key], key))
    raise ConfigError("frame", "cannot infer the rank; give 'frame' or 'anchor'")


def build(data):
    """Build ``(algebroid, pn_or_None, extras)`` from parsed JSON data."""
    if not isinstance(data, dict):
        raise ConfigError("", "top level must be a JSON object")
    unknown = set(data) - {"name", "coords", "frame", "anchor", "structure", "pi", "N", "domain"}
    if unknown:
        raise ConfigError(sorted(unknown)[0], "unknown field")
    coords = [str(c) for c in _list(data.get("coords", []), "coords")]
    n = len(coords)
    r = _rank(data)
    frame = [str(f) for f in data.get("frame", [f"e{i}" for i in range(r)])]
    anchor_rows = _list(data.get("anchor", [["0"] * n for _ in range(r)]), "anchor", r)
    anchor = [[_expr(v, coords, f"anchor[{i}][{u}]") for u, v in enumerate(_list(row, f"anchor[{i}]", n))]
              for i, row in enumerate(anchor_rows)]
    structure = {}
    raw = data.get("structure", {})
    if not isinstance(raw, dict):
        raise ConfigError("structure", "expected an object")
    for key, comps in raw.items():
        where = f"structure[{key!r}]"
        i, j = _pair(key, r, where)
        comps = [_expr(v, coords, f"{where}[{k}]") for k, v in enumerate(_list(comps, where, r))]
        if (i, j) in structure or (j, i) in structure:
            raise ConfigError(where, "bracket given twice")
        structure[(i, j)] = comps
    domain = {}
    for c, box in data.get("domain", {}).items():
        if c not in coords:
            raise ConfigError(f"domain[{c!r}]", "not a coordinate")
        try:
            lo, hi = (float(v) for v in box)
        except (TypeError, ValueError):
            raise ConfigError(f"domain[{c!r}]", "expected [lo, hi]") from None
        if not lo < hi:
            raise ConfigError(f"domain[{c!r}]", "empty interval")
        domain[c] = (lo, hi)
    try:
        A = LieAlgebroid(str(data.get("name", "config")), coords, frame, structure, anchor, domain)
    except ValueError as exc:
        raise ConfigError("", str(exc)) from None
    pi = N = None
    if "pi" in data:
        if not isinstance(data["pi"], dict):
            raise ConfigError("pi", "expected an object")
        coeffs = {}
        for key, v in data["pi"].items():
            i, j = _pair(key, r, f"pi[{key!r}]")
            coeffs[(i, j)] = _expr(v, coords, f"pi[{key!r}]")
        pi = Multivector(A, 2, coeffs, label="pi")
    if "N" in data:
        rows = _list(data["N"], "N", r)
        entries = [[_expr(v, coords, f"N[{i}][{k}]") for k, v in enumerate(_list(row, f"N[{i}]", r))]
                   for i, row in enumerate(rows)]
        N = EndomorphismField(A, entries, label="N")
    pn = PNStructure(A, pi, N, name=A.name) if pi is not None and N is not None else None
    return A, pn, {"pi": pi, "N": N}


def load(path):
    """Read and build a configuration file; JSON syntax errors carry line and column."""
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(str(path), exc.strerror or str(exc)) from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}:{exc.colno}", exc.msg) from None
    return build(data)
