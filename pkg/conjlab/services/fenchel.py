"""
Legendre-Fenchel transforms of functions sampled on rectangular grids.

The brute-force sweep f*(s) = max_x <s, x> - f(x) over finite grid nodes is the
reference; the 1-D hull walk is an O(M + K) shortcut checked against it.
Off-domain nodes carry +inf and are removed before any arithmetic.
"""
import csv
import json
import logging
import math
from pathlib import Path
from typing import List, Sequence, Tuple

import numpy as np
from scipy.interpolate import RegularGridInterpolator

from conjlab.config import settings
from conjlab.errors import DimensionMismatch, InvalidGrid, OutOfBox
from conjlab.models import NEG_INF, POS_INF, Axis, GriddedFunction, grid_points
from conjlab.utils import (
    PLUS_INF_LITERAL,
    block_slices,
    format_real,
    make_rng,
    parallel_map,
    parse_real,
    write_json,
)

logger = logging.getLogger(__name__)


def conjugate_at(f: GriddedFunction, points, threads: int | None = None) -> np.ndarray:
    """Brute-force conjugate of f at arbitrary dual points (K, d)"""
    S = np.atleast_2d(np.asarray(points, dtype=float))
    if S.shape[1] != f.dim:
        raise DimensionMismatch(f"dual points have dimension {S.shape[1]}, function has {f.dim}")
    X, fx = f.finite_nodes()
    threads = settings.THREADS if threads is None else threads
    rows = max(1, settings.SWEEP_BLOCK_ENTRIES // max(1, X.shape[0]))

    def sweep(sl: slice) -> np.ndarray:
        return np.max(S[sl] @ X.T - fx, axis=1)

    # max is order independent, so the sweep matches the sequential one exactly
    return np.concatenate(parallel_map(sweep, block_slices(S.shape[0], rows), threads))


def _check_axes(f: GriddedFunction, axes: Sequence[Axis]) -> Tuple[Axis, ...]:
    axes = tuple(axes)
    if len(axes) != f.dim:
        raise DimensionMismatch(f"{len(axes)} axes given for a {f.dim}-dimensional function")
    return axes


def conjugate_grid(f: GriddedFunction, dual_axes: Sequence[Axis], threads: int | None = None) -> GriddedFunction:
    dual_axes = _check_axes(f, dual_axes)
    values = conjugate_at(f, grid_points(dual_axes), threads)
    return GriddedFunction(dual_axes, values.reshape(tuple(a.count for a in dual_axes)))


def biconjugate_grid(f: GriddedFunction, dual_axes: Sequence[Axis],
                     primal_axes: Sequence[Axis] | None = None,
                     threads: int | None = None) -> GriddedFunction:
    """(f*)* on primal_axes: the closed convex minorant of f seen through the dual box"""
    fstar = conjugate_grid(f, dual_axes, threads)
    return conjugate_grid(fstar, primal_axes if primal_axes is not None else f.axes, threads)


def _lower_hull(x: np.ndarray, v: np.ndarray) -> List[int]:
    hull: List[int] = []
    for i in range(x.size):
        while len(hull) >= 2:
            a, b = hull[-2], hull[-1]
            if (x[b] - x[a]) * (v[i] - v[a]) - (v[b] - v[a]) * (x[i] - x[a]) <= 0:
                hull.pop()
            else:
                break
        hull.append(i)
    return hull


def conjugate_1d_fast(f: GriddedFunction, dual_axis: Axis) -> GriddedFunction:
    """Linear-time 1-D conjugate: walk the lower hull while slopes increase"""
    if f.dim != 1:
        raise DimensionMismatch("the hull walk only handles one-dimensional functions")
    X, v = f.finite_nodes()
    x = X[:, 0]
    hull = _lower_hull(x, v)
    hx, hv = x[hull], v[hull]
    slopes = dual_axis.nodes
    out = np.empty(slopes.size)
    j = 0
    for k, s in enumerate(slopes):
        while j + 1 < hx.size and s * hx[j + 1] - hv[j + 1] >= s * hx[j] - hv[j]:
            j += 1
        out[k] = s * hx[j] - hv[j]
    return GriddedFunction((dual_axis,), out)


def suggest_dual_axes(f: GriddedFunction, count: int = 101) -> Tuple[Axis, ...]:
    """Dual box spanning the finite-difference slopes of f along each axis"""
    axes = []
    dom = f.domain
    for k, axis in enumerate(f.axes):
        diffs = np.diff(f.values, axis=k) / axis.step
        lead = [slice(None)] * f.dim
        lag = [slice(None)] * f.dim
        lead[k], lag[k] = slice(1, None), slice(None, -1)
        valid = dom[tuple(lead)] & dom[tuple(lag)]
        slopes = diffs[valid]
        if slopes.size == 0:
            logger.warning("axis %d has no adjacent finite nodes; using slopes [-1, 1]", k)
            lo, hi = -1.0, 1.0
        else:
            lo, hi = float(slopes.min()), float(slopes.max())
            if hi - lo < 1e-12:
                lo, hi = lo - 0.5, hi + 0.5
        axes.append(Axis(lo, hi, count))
    return tuple(axes)


def evaluate(f: GriddedFunction, x) -> float:
    """Multilinear interpolation; +inf as soon as an off-domain corner carries weight"""
    point = np.asarray(x, dtype=float).ravel()
    if point.size != f.dim:
        raise DimensionMismatch(f"point has dimension {point.size}, function has {f.dim}")
    for k, axis in enumerate(f.axes):
        slack = 1e-12 * (axis.hi - axis.lo)
        if not axis.contains(point[k], slack):
            raise OutOfBox(f"coordinate {k} = {point[k]!r} outside [{axis.lo}, {axis.hi}]")
    point = np.clip(point, [a.lo for a in f.axes], [a.hi for a in f.axes])
    nodes = tuple(a.nodes for a in f.axes)
    dom = f.domain
    off = RegularGridInterpolator(nodes, (~dom).astype(float), method="linear")(point[None, :])[0]
    if off > 1e-12:
        return POS_INF
    filled = np.where(dom, f.values, 0.0)
    return float(RegularGridInterpolator(nodes, filled, method="linear")(point[None, :])[0])


def fenchel_young_gap(f: GriddedFunction, fstar: GriddedFunction, x, s) -> float:
    """f(x) + f*(s) - <s, x>; nonnegative up to grid error"""
    fx = evaluate(f, x)
    fs = evaluate(fstar, s)
    if fx == POS_INF or fs == POS_INF:
        return POS_INF
    return fx + fs - float(np.dot(np.ravel(s), np.ravel(x)))


def convexity_probe(f: GriddedFunction, trials: int, seed: int) -> float:
    """
    Largest midpoint excess f(mid) - (f(a) + f(b)) / 2 over random node pairs.

    Pairs are drawn with equal index parity on every axis so the midpoint is a
    grid node and no interpolation enters the comparison.
    """
    if trials < 1:
        raise ValueError("trials must be at least 1")
    rng = make_rng(seed)
    shape = np.array(f.shape)
    values = f.values
    dom = f.domain
    best = NEG_INF
    admissible = attempts = 0
    while admissible < trials and attempts < 50 * trials:
        attempts += 1
        i = rng.integers(0, shape)
        j = rng.integers(0, shape)
        odd = (i - j) % 2 != 0
        j = np.where(odd, np.where(j + 1 < shape, j + 1, j - 1), j)
        mid = (i + j) // 2
        ti, tj, tm = tuple(i), tuple(j), tuple(mid)
        if not (dom[ti] and dom[tj] and dom[tm]):
            continue
        admissible += 1
        best = max(best, float(values[tm] - 0.5 * (values[ti] + values[tj])))
    if admissible == 0:
        logger.warning("convexity probe found no admissible segment in %d attempts", attempts)
    return best


# CSV columns: x0..x{d-1}, value; the off-domain sentinel is written as "+inf"

def gridded_to_csv(f: GriddedFunction, path: Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow([f"x{k}" for k in range(f.dim)] + ["value"])
        for point, value in zip(f.points(), f.values.ravel()):
            w.writerow([format_real(c) for c in point] + [format_real(value)])
    return path


def _read_rows(path: Path) -> Tuple[List[str], np.ndarray]:
    with Path(path).open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = [[parse_real(cell) for cell in row] for row in reader if row]
    return header, np.array(rows, dtype=float)


def gridded_from_csv(path: Path) -> GriddedFunction:
    """Rebuild a gridded function from its CSV; axes are recovered from the coordinates"""
    header, data = _read_rows(path)
    dim = len(header) - 1
    axes = []
    for k in range(dim):
        coords = np.unique(data[:, k])
        axes.append(Axis(float(coords[0]), float(coords[-1]), int(coords.size)))
    if data.shape[0] != math.prod(a.count for a in axes):
        raise InvalidGrid("CSV rows do not form a complete rectangular grid")
    return GriddedFunction(tuple(axes), data[:, -1])


def write_gridded(f: GriddedFunction, stem: Path) -> Tuple[Path, Path]:
    """JSON header plus CSV payload sharing the same stem"""
    stem = Path(stem)
    payload = gridded_to_csv(f, stem.with_suffix(".csv"))
    header = {
        "dim": f.dim,
        "axes": [{"lo": a.lo, "hi": a.hi, "count": a.count} for a in f.axes],
        "payload": payload.name,
        "columns": [f"x{k}" for k in range(f.dim)] + ["value"],
        "sentinel": PLUS_INF_LITERAL,
    }
    return write_json(header, stem.with_suffix(".json")), payload


def read_gridded(header_path: Path) -> GriddedFunction:
    header_path = Path(header_path)
    header = json.loads(header_path.read_text(encoding="utf-8"))
    axes = tuple(Axis(float(a["lo"]), float(a["hi"]), int(a["count"])) for a in header["axes"])
    _, data = _read_rows(header_path.parent / header["payload"])
    return GriddedFunction(axes, data[:, -1])
