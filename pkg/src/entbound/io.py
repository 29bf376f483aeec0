"""Config loading, CSV tables and density-matrix snapshots."""
from __future__ import annotations

import copy
import csv
import json
import math
import os

import numpy as np


def load_config(path):
    if path is None:
        return {}
    with open(path) as fh:
        return json.load(fh)


def merge(base, override):
    """Recursive dict merge; values in ``override`` win."""
    out = copy.deepcopy(base)
    for k, v in override.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


def set_path(cfg, dotted, value):
    """Copy of ``cfg`` with ``a.b.c`` set to ``value``."""
    out = copy.deepcopy(cfg)
    node = out
    keys = dotted.split(".")
    for k in keys[:-1]:
        node = node.setdefault(k, {})
    node[keys[-1]] = value
    return out


def format_value(v):
    """17 significant digits for floats, blank for None."""
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if math.isnan(v):
            return "nan"
        return "%.17g" % v
    return str(v)


def write_csv(path, columns, rows):
    """Write rows (dicts) with a fixed header; missing keys become blank."""
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([format_value(row.get(c)) for c in columns])


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else str(v)
    return obj


def write_json(path, obj):
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "w") as fh:
        json.dump(_jsonable(obj), fh, indent=2, sort_keys=True)
        fh.write("\n")


def save_snapshot(path, step, rho, meta=None):
    """Text snapshot of a density matrix; %.17g round-trips doubles exactly."""
    rho = np.asarray(rho, dtype=complex)
    header = json.dumps({"step": int(step), "dim": int(rho.shape[0]), **_jsonable(meta or {})}, sort_keys=True)
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    np.savetxt(path, np.hstack([rho.real, rho.imag]), fmt="%.17g", header=header)


def load_snapshot(path):
    """Returns ``(step, rho, meta)``."""
    with open(path) as fh:
        first = fh.readline()
    meta = json.loads(first.lstrip("#").strip())
    data = np.loadtxt(path, ndmin=2)
    d = meta["dim"]
    rho = data[:, :d] + 1j * data[:, d:]
    return int(meta["step"]), rho, meta
