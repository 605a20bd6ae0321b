import logging
from typing import Callable, Dict

import numpy as np
from scipy.special import logsumexp, xlogy

from conjlab.errors import ConfigInvalid
from conjlab.models import CommandResult, GriddedFunction
from conjlab.schemas import ConjugateParams
from conjlab.services.fenchel import (
    biconjugate_grid,
    conjugate_1d_fast,
    conjugate_at,
    conjugate_grid,
    convexity_probe,
    read_gridded,
    suggest_dual_axes,
)

logger = logging.getLogger(__name__)

# Built-in primal functions, evaluated on (M, d) node arrays
SAMPLERS: Dict[str, Callable[[np.ndarray], np.ndarray]] = {
    "logsumexp": lambda X: logsumexp(X, axis=1),
    "quadratic": lambda X: 0.5 * np.sum(X ** 2, axis=1),
    "abs": lambda X: np.sum(np.abs(X), axis=1),
    "double_well": lambda X: np.min(np.stack([np.abs(X - 1.0), np.abs(X + 1.0)]), axis=0).sum(axis=1),
}

COMPARATORS: Dict[str, Callable[[np.ndarray], np.ndarray]] = {
    # conjugate of logsumexp restricted to the simplex
    "neg_entropy": lambda S: np.sum(xlogy(S, S), axis=1),
    "quadratic": lambda S: 0.5 * np.sum(S ** 2, axis=1),
}


def build_primal(params: ConjugateParams) -> GriddedFunction:
    if params.function == "grid":
        return read_gridded(params.grid_path)
    axes = tuple(a.to_model() for a in params.primal)
    return GriddedFunction.sample(axes, SAMPLERS[params.function])


def run(params: ConjugateParams, seed: int, threads: int) -> CommandResult:
    f = build_primal(params)
    if params.dual and len(params.dual) != f.dim:
        raise ConfigInvalid("params.dual", f"{len(params.dual)} axes for a {f.dim}-dimensional function")
    dual_axes = tuple(a.to_model() for a in params.dual) if params.dual else suggest_dual_axes(f, count=41)
    fstar = conjugate_grid(f, dual_axes, threads)
    grids = {"conjugate": fstar}
    payload = {
        "function": params.function,
        "dim": f.dim,
        "primal_nodes": int(f.values.size),
        "finite_nodes": int(f.domain.sum()),
        "dual_axes": [{"lo": a.lo, "hi": a.hi, "count": a.count} for a in dual_axes],
    }
    tolerances = {f"primal_step_{k}": a.step for k, a in enumerate(f.axes)}

    if params.fast_1d:
        if f.dim != 1:
            raise ConfigInvalid("params.fast_1d", "the hull walk needs a one-dimensional function")
        fast = conjugate_1d_fast(f, dual_axes[0])
        payload["fast_1d_max_deviation"] = float(np.max(np.abs(fast.values - fstar.values)))

    if params.biconjugate:
        grids["biconjugate"] = biconjugate_grid(f, dual_axes, threads=threads)
        fin = f.domain
        payload["biconjugate_max_gap"] = float(np.max(f.values[fin] - grids["biconjugate"].values[fin]))

    rows = []
    if params.dual_points:
        S = np.asarray(params.dual_points, dtype=float)
        if S.ndim != 2 or S.shape[1] != f.dim:
            raise ConfigInvalid("params.dual_points", f"points must have {f.dim} coordinates")
        values = conjugate_at(f, S, threads)
        reference = COMPARATORS[params.compare](S) if params.compare != "none" else None
        probes = []
        for k, (s, v) in enumerate(zip(S, values)):
            probe = {"s": list(s), "conjugate": float(v)}
            row = list(map(float, s)) + [float(v)]
            if reference is not None:
                probe["reference"] = float(reference[k])
                probe["error"] = abs(float(v) - float(reference[k]))
                row += [probe["reference"], probe["error"]]
            probes.append(probe)
            rows.append(row)
        payload["probes"] = probes
        if reference is not None:
            payload["max_error"] = max(p["error"] for p in probes)

    if params.convexity_trials:
        payload["convexity_max_violation"] = convexity_probe(f, params.convexity_trials, seed)

    header = [f"s{k}" for k in range(f.dim)] + ["conjugate"]
    if params.compare != "none":
        header += ["reference", "error"]
    logger.info("conjugated %s on %d nodes", params.function, f.values.size)
    return CommandResult(payload=payload, header=header, rows=rows, tolerances=tolerances, grids=grids)
