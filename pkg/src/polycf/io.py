"""JSON and CSV interchange for specs, CF approximations and sample tables.

Spec schema (one JSON document)::

    {"name": str, "volume": num, "surface": num, "angularity": num,
     "sharpness": num, "breakpoints": [num, ...],
     "intervals": [{"right_expansion": {"a": [...], "b": [...]},
                    "left_expansion":  {"a": [...], "b": [...]}}, ...]}

A number is a JSON number or a rational string such as ``"-3/2"`` (kept
exact).  CSV files carry metadata lines prefixed with ``#`` followed by a
header row; floats are written with ``repr`` so they parse back bit-exactly.
"""

from __future__ import annotations

import csv
import io
import json
import math
from fractions import Fraction
from pathlib import Path

import numpy as np

from .approximator import (
    CfPiece,
    CldSpec,
    CorrectionTerm,
    Diagnostics,
    EndpointExpansion,
    IntervalExpansions,
    PiecewiseCf,
    SpecError,
)
from .series import RadicalPiece


class SpecFormatError(ValueError):
    """Schema violation in a spec document (with a field path or line number)."""


# --------------------------------------------------------------------------
# numbers
# --------------------------------------------------------------------------

def _num(x, where: str):
    if isinstance(x, bool):
        raise SpecFormatError(f"{where}: expected a number, got a boolean")
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, float):
        if not math.isfinite(x):
            raise SpecFormatError(f"{where}: non-finite number")
        return x
    if isinstance(x, str):
        try:
            return Fraction(x.strip())
        except (ValueError, ZeroDivisionError):
            raise SpecFormatError(f"{where}: cannot parse {x!r} as a number") from None
    raise SpecFormatError(f"{where}: expected a number, got {type(x).__name__}")


def _out(x):
    if isinstance(x, Fraction):
        return x.numerator if x.denominator == 1 else f"{x.numerator}/{x.denominator}"
    if isinstance(x, (int, np.integer)):
        return int(x)
    return float(x)


# --------------------------------------------------------------------------
# spec documents
# --------------------------------------------------------------------------

_REQUIRED = ("name", "volume", "surface", "angularity", "sharpness", "breakpoints", "intervals")


def spec_to_dict(spec: CldSpec) -> dict:
    def exp(e: EndpointExpansion):
        return {"a": [_out(c) for c in e.a], "b": [_out(c) for c in e.b]}

    return {
        "name": spec.name,
        "volume": _out(spec.volume),
        "surface": _out(spec.surface),
        "angularity": _out(spec.angularity),
        "sharpness": _out(spec.sharpness),
        "breakpoints": [_out(d) for d in spec.breakpoints],
        "intervals": [{"right_expansion": exp(iv.right_expansion), "left_expansion": exp(iv.left_expansion)}
                      for iv in spec.intervals],
    }


def spec_from_dict(doc: dict) -> CldSpec:
    if not isinstance(doc, dict):
        raise SpecFormatError("spec document must be a JSON object")
    missing = [k for k in _REQUIRED if k not in doc]
    if missing:
        raise SpecFormatError(f"missing field(s): {', '.join(missing)}")
    if not isinstance(doc["breakpoints"], list) or not isinstance(doc["intervals"], list):
        raise SpecFormatError("breakpoints and intervals must be arrays")
    bps = tuple(_num(x, f"breakpoints[{i}]") for i, x in enumerate(doc["breakpoints"]))
    intervals = []
    for i, iv in enumerate(doc["intervals"]):
        parts = []
        for key in ("right_expansion", "left_expansion"):
            e = iv.get(key) if isinstance(iv, dict) else None
            if not isinstance(e, dict) or "a" not in e or "b" not in e:
                raise SpecFormatError(f"intervals[{i}].{key}: expected an object with arrays 'a' and 'b'")
            a = tuple(_num(x, f"intervals[{i}].{key}.a[{j}]") for j, x in enumerate(e["a"]))
            b = tuple(_num(x, f"intervals[{i}].{key}.b[{j}]") for j, x in enumerate(e["b"]))
            parts.append(EndpointExpansion(a, b))
        intervals.append(IntervalExpansions(*parts))
    return CldSpec(str(doc["name"]), bps, tuple(intervals), _num(doc["volume"], "volume"),
                   _num(doc["surface"], "surface"), _num(doc["angularity"], "angularity"),
                   _num(doc["sharpness"], "sharpness"))


def load_cld_spec(path) -> CldSpec:
    """Parse and validate a spec file; errors name the line or the field."""
    text = Path(path).read_text()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SpecFormatError(f"{path}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    try:
        return spec_from_dict(doc)
    except SpecError as exc:
        raise SpecFormatError(f"{path}: {exc}") from None


def save_cld_spec(spec: CldSpec, path):
    Path(path).write_text(json.dumps(spec_to_dict(spec), indent=2) + "\n")


# --------------------------------------------------------------------------
# CF documents
# --------------------------------------------------------------------------

def _radical_to_dict(p: RadicalPiece) -> dict:
    return {"left": float(p.left), "right": float(p.right),
            "poly": [float(c) for c in p.poly],
            "left_radical": [float(c) for c in p.left_radical],
            "right_radical": [float(c) for c in p.right_radical]}


def _radical_from_dict(d: dict) -> RadicalPiece:
    return RadicalPiece(d["left"], d["right"], tuple(d["poly"]), tuple(d["left_radical"]),
                        tuple(d["right_radical"]))


def diagnostics_to_dict(d: Diagnostics) -> dict:
    out = {}
    for k, v in vars(d).items():
        if k == "continuity":
            v = [{"breakpoint": b, "value_jump": dv, "slope_jump": ds} for b, dv, ds in v]
        out[k] = v
    return out


def cf_to_dict(cf: PiecewiseCf) -> dict:
    pieces = []
    for p in cf.pieces:
        c = p.correction
        pieces.append({
            "second": _radical_to_dict(p.second),
            "body": _radical_to_dict(p.body),
            "A": float(p.A), "B": float(p.B), "anchoring": p.anchoring, "exact": p.exact,
            "correction": None if c is None else {"alpha": c.alpha, "beta": c.beta, "K": c.K,
                                                  "left": float(c.left), "right": float(c.right),
                                                  "side": c.side, "condition": c.condition},
        })
    return {"spec": spec_to_dict(cf.spec), "orders": list(cf.orders), "pieces": pieces,
            "diagnostics": diagnostics_to_dict(cf.diagnostics)}


def cf_from_dict(doc: dict) -> PiecewiseCf:
    spec = spec_from_dict(doc["spec"])
    pieces = []
    for d in doc["pieces"]:
        c = d.get("correction")
        corr = None if c is None else CorrectionTerm(c["alpha"], c["beta"], c["K"], c["left"], c["right"],
                                                     c["side"], c.get("condition", float("nan")))
        pieces.append(CfPiece(_radical_from_dict(d["second"]), _radical_from_dict(d["body"]), d["A"], d["B"],
                              d["anchoring"], corr, d.get("exact", False)))
    diag = Diagnostics()
    for k, v in doc.get("diagnostics", {}).items():
        if k == "continuity":
            v = [(x["breakpoint"], x["value_jump"], x["slope_jump"]) for x in v]
        setattr(diag, k, v)
    return PiecewiseCf(pieces, spec, tuple(doc["orders"]), diag)


def save_json(obj, path):
    Path(path).write_text(json.dumps(obj, indent=2, default=_json_default) + "\n")


def _json_default(x):
    if isinstance(x, (np.floating, np.integer)):
        return x.item()
    if isinstance(x, np.ndarray):
        return x.tolist()
    if isinstance(x, Fraction):
        return _out(x)
    return str(x)


# --------------------------------------------------------------------------
# CSV
# --------------------------------------------------------------------------

def write_csv(path, columns: dict, meta: dict | None = None):
    """Columns of equal length with ``# key: value`` metadata lines on top."""
    names = list(columns)
    data = [np.asarray(columns[k], dtype=float) for k in names]
    n = {len(d) for d in data}
    if len(n) > 1:
        raise ValueError("all CSV columns must have the same length")
    buf = io.StringIO()
    for k, v in (meta or {}).items():
        buf.write(f"# {k}: {json.dumps(v, default=_json_default)}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(names)
    for row in zip(*data):
        w.writerow([repr(float(x)) for x in row])
    Path(path).write_text(buf.getvalue())


def read_csv(path):
    """Inverse of :func:`write_csv`: ``(meta, {name: array})``."""
    meta, rows = {}, []
    for line in Path(path).read_text().splitlines():
        if line.startswith("#"):
            key, _, val = line[1:].strip().partition(":")
            meta[key.strip()] = json.loads(val)
        elif line.strip():
            rows.append(line)
    reader = csv.reader(rows)
    header = next(reader)
    values = [[float(x) for x in r] for r in reader]
    arr = np.array(values, dtype=float).reshape(len(values), len(header))
    return meta, {h: arr[:, i] for i, h in enumerate(header)}
