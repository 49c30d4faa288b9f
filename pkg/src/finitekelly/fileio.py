"""JSON and CSV formats used by the command line."""

from __future__ import annotations

import csv
import io
import json
import math
import sys
from pathlib import Path
from typing import Iterable, List, Optional

import numpy as np

from .divergence import Dist
from .sideinfo import TripartiteDist


class InputError(ValueError):
    """Malformed or invalid input file."""


def _read_json(path) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            obj = json.load(fh)
    except FileNotFoundError:
        raise InputError(f"{path}: no such file") from None
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: invalid JSON ({exc.msg} at line {exc.lineno})") from None
    if not isinstance(obj, dict):
        raise InputError(f"{path}: expected a JSON object")
    return obj


def dist_to_json(p: Dist) -> dict:
    return {"alphabet": p.alphabet_size, "probs": p.tolist()}


def dist_from_json(obj: dict, where: str = "input") -> Dist:
    try:
        k, probs = obj["alphabet"], obj["probs"]
    except KeyError as exc:
        raise InputError(f"{where}: missing key {exc.args[0]!r}") from None
    if not isinstance(probs, list) or len(probs) != k:
        raise InputError(f"{where}: 'probs' must be a list of length alphabet={k}")
    try:
        return Dist(probs)
    except (TypeError, ValueError) as exc:
        raise InputError(f"{where}: {exc}") from None


def load_dist(path) -> Dist:
    return dist_from_json(_read_json(path), str(path))


def tensor_to_json(p: TripartiteDist) -> dict:
    return {"sizes": list(p.sizes), "probs": p.flat()}


def tensor_from_json(obj: dict, where: str = "input") -> TripartiteDist:
    try:
        sizes, probs = obj["sizes"], obj["probs"]
    except KeyError as exc:
        raise InputError(f"{where}: missing key {exc.args[0]!r}") from None
    try:
        return TripartiteDist.from_flat(sizes, probs)
    except (TypeError, ValueError) as exc:
        raise InputError(f"{where}: {exc}") from None


def load_tensor(path) -> TripartiteDist:
    return tensor_from_json(_read_json(path), str(path))


def _clean(obj):
    # strict JSON: no NaN/Infinity literals
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        if math.isnan(x):
            return None
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return x
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def dumps_json(obj) -> str:
    return json.dumps(_clean(obj), indent=2) + "\n"


def _cell(v):
    v = _clean(v)
    if v is None:
        return ""
    return repr(v) if isinstance(v, float) else v


def dumps_csv(rows: List[dict], columns: Iterable[str]) -> str:
    columns = list(columns)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([_cell(r[c]) for c in columns])
    return buf.getvalue()


def write_text(text: str, path: Optional[str]) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
        return
    Path(path).write_text(text, encoding="utf-8")
