"""Readers and writers for the CSV and JSON artifacts.

Floats in CSV are written with 17 significant digits; infinities use the
literals ``inf`` and ``-inf`` in CSV and the strings ``"inf"``/``"-inf"`` in
JSON.  Every writer has a matching reader that restores the values exactly.
"""
from __future__ import annotations

import csv
import json
import math
from pathlib import Path as FsPath

import numpy as np

from .invariant import DensityTable
from .occupation import GridMeasure
from .rare_event import Estimate

ESTIMATE_FIELDS = ("eps", "delta", "n", "p_hat", "stderr", "log_p")


def fmt(x) -> str:
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return f"{x:.17g}"


def _write_rows(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([v if isinstance(v, str) else fmt(v) for v in row])


def _read_rows(path):
    with open(path, newline="") as fh:
        r = csv.reader(fh)
        header = next(r)
        return header, [row for row in r if row]


def write_path_csv(path, t, X, xi=None) -> None:
    """``t,X,xi`` (or ``t,X`` when there is no fast component)."""
    if xi is None:
        _write_rows(path, ("t", "X"), zip(t, X))
    else:
        _write_rows(path, ("t", "X", "xi"), zip(t, X, xi))


def read_path_csv(path) -> dict:
    header, rows = _read_rows(path)
    cols = np.array(rows, dtype=float).reshape(-1, len(header)).T
    return dict(zip(header, cols))


def write_measure_csv(path, m: GridMeasure) -> None:
    """Rows ``t_lo,t_hi,z_lo,z_hi,mass``; overflow cells use infinite bounds."""
    z_lo = np.concatenate([[-np.inf], m.z_edges])
    z_hi = np.concatenate([m.z_edges, [np.inf]])
    rows = []
    for i in range(m.t_edges.size - 1):
        for j in range(z_lo.size):
            rows.append((m.t_edges[i], m.t_edges[i + 1], z_lo[j], z_hi[j], m.mass[i, j]))
    _write_rows(path, ("t_lo", "t_hi", "z_lo", "z_hi", "mass"), rows)


def read_measure_csv(path) -> GridMeasure:
    _, rows = _read_rows(path)
    a = np.array(rows, dtype=float)
    t_edges = np.unique(np.concatenate([a[:, 0], a[:, 1]]))
    z_edges = np.unique(a[:, 3][np.isfinite(a[:, 3])])
    mass = np.zeros((t_edges.size - 1, z_edges.size + 1))
    ti = np.searchsorted(t_edges, a[:, 0])
    zj = np.where(np.isinf(a[:, 2]), 0, np.searchsorted(z_edges, a[:, 2]) + 1)
    mass[ti, zj] = a[:, 4]
    return GridMeasure(t_edges, z_edges, mass)


def write_density_csv(path, p: DensityTable) -> None:
    _write_rows(path, ("z", "p", "score"), p.to_rows())


def write_estimates_csv(path, estimates) -> None:
    rows = [(e.eps, e.delta, str(int(e.n)), e.p_hat, e.stderr, e.log_p) for e in estimates]
    _write_rows(path, ESTIMATE_FIELDS, rows)


def read_estimates_csv(path, method: str = "crude") -> list[Estimate]:
    _, rows = _read_rows(path)
    out = []
    for eps, delta, n, p_hat, stderr, log_p in rows:
        out.append(Estimate(float(p_hat), float(log_p), float(stderr), int(n), method, float(eps), float(delta)))
    return out


def _encode(obj):
    if isinstance(obj, dict):
        return {str(k): _encode(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_encode(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_encode(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else fmt(x)
    return obj


def _decode(obj):
    if isinstance(obj, dict):
        return {k: _decode(v) for k, v in obj.items()}
    if isinstance(obj, list):
        return [_decode(v) for v in obj]
    if obj in ("inf", "-inf", "nan"):
        return float(obj)
    return obj


def write_json(path, obj) -> None:
    """JSON with sorted keys; floats use the shortest exact representation."""
    FsPath(path).write_text(json.dumps(_encode(obj), indent=2, sort_keys=True, allow_nan=False) + "\n")


def read_json(path):
    return _decode(json.loads(FsPath(path).read_text()))
