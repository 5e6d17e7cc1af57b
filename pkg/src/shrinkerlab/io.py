"""Deterministic JSON/CSV emitters and the provenance stamp."""

from __future__ import annotations

import csv
import io
import json
import math
from pathlib import Path

import numpy as np

from . import __version__

TOOL = "shrinkerlab"
SCHEMA_VERSION = 1


def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        # JSON has no inf/nan; keep them readable and round-trippable
        return x if math.isfinite(x) else str(x)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    return obj


def stamp(geom=None, config=None):
    out = {"tool": TOOL, "version": __version__, "schema": SCHEMA_VERSION}
    if geom is not None:
        out["geometry"] = geom.to_dict()
    if config is not None:
        out["config"] = config
    return out


def dumps_json(payload) -> str:
    return json.dumps(_clean(payload), sort_keys=True, indent=2) + "\n"


def csv_text(header, rows, comment=None) -> str:
    buf = io.StringIO()
    if comment:
        for line in comment.splitlines():
            buf.write(f"# {line}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([repr(float(x)) if isinstance(x, (float, np.floating)) else x for x in row])
    return buf.getvalue()


def write_text(path, text):
    p = Path(path)
    p.parent.mkdir(parents=True, exist_ok=True)
    p.write_text(text, encoding="utf-8", newline="\n")
    return p


def stamp_comment(st) -> str:
    return "stamp " + json.dumps(_clean(st), sort_keys=True)
