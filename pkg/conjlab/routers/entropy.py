import logging
import math

import numpy as np

from conjlab.config import settings
from conjlab.models import CoefficientSeq, CommandResult, SimplexWeights
from conjlab.schemas import EntropyParams
from conjlab.services.entropy import (
    divergence_diagnostic,
    g_r,
    h_r_segment_record,
    inverse_n_log_sq_normalizer,
    mean_entropy_bound,
    neg_entropy,
    relative_entropy,
    tilted_min_entropy,
)
from conjlab.services.series import geometric_weights, mean_index, suggest_truncation
from conjlab.utils import make_rng

logger = logging.getLogger(__name__)


def _a_log(params: EntropyParams) -> CoefficientSeq:
    if params.a_log == "zeros":
        return CoefficientSeq.zeros(params.N)
    return CoefficientSeq(params.a_log)


def _geometric(params: EntropyParams) -> CommandResult:
    r = params.r
    N = params.N if params.N is not None else suggest_truncation(CoefficientSeq.zeros(0), r)
    t = geometric_weights(r, N)
    ref = CoefficientSeq(np.arange(N + 1) * math.log(r))
    payload = {
        "N": N,
        "r": r,
        "neg_entropy": neg_entropy(t),
        "relative_entropy": relative_entropy(t, ref),
        "g_r": g_r(t, r),
        "mean_index": mean_index(t),
        "closed_form_min": math.log1p(-r),
    }
    rows = [[n, float(w)] for n, w in enumerate(t.weights)]
    return CommandResult(payload=payload, header=["n", "t_n"], rows=rows,
                         tolerances={"simplex": settings.SIMPLEX_TOL})


def _divergence(params: EntropyParams, threads: int) -> CommandResult:
    trace = divergence_diagnostic(params.generator, params.schedule, threads)
    payload = {
        "generator": params.generator.value,
        "checkpoints": [{"N": n, "value": v} for n, v in trace.checkpoints],
        "final": trace.final,
        "tail_bound": trace.tail_bound,
    }
    if params.generator.value == "inverse_n_log_sq":
        payload["normalizer"] = inverse_n_log_sq_normalizer()
    rows = [[n, v] for n, v in trace.checkpoints]
    return CommandResult(payload=payload, header=["N", "partial_sum"], rows=rows,
                         tolerances={"summation_chunk": settings.SUMMATION_CHUNK})


def _tilted(params: EntropyParams) -> CommandResult:
    a_log = _a_log(params)
    N = params.N if params.N is not None else a_log.trunc_N
    sol = tilted_min_entropy(a_log, params.target_mean, N)
    payload = {
        "N": N,
        "target_mean": params.target_mean,
        "tilt": sol.tilt,
        "value": sol.value,
        "achieved_mean": mean_index(sol.weights),
    }
    rows = [[n, float(w)] for n, w in enumerate(sol.weights.weights)]
    return CommandResult(payload=payload, header=["n", "t_n"], rows=rows,
                         tolerances={"mean_index": settings.MEAN_TOL,
                                     "bisection_width": settings.BISECTION_WIDTH_TOL})


def _mean_bound(params: EntropyParams, seed: int) -> CommandResult:
    rng = make_rng(seed)
    rows = []
    worst = -math.inf
    for _ in range(params.trials):
        t = SimplexWeights.normalized(rng.dirichlet(np.ones(params.N + 1)))
        mu = mean_index(t)
        entropy, bound = -neg_entropy(t), mean_entropy_bound(mu)
        worst = max(worst, entropy - bound)
        rows.append([mu, entropy, bound])
    payload = {"N": params.N, "trials": params.trials, "max_excess": worst}
    return CommandResult(payload=payload, header=["mean_index", "entropy", "bound"], rows=rows)


def _h_r(params: EntropyParams, seed: int) -> CommandResult:
    record = h_r_segment_record(params.r, params.N, params.trials, seed)
    payload = {"N": params.N, "rho": params.r, "trials": record.trials,
               "max_midpoint_excess": record.max_violation}
    rows = [[i, v] for i, v in enumerate(record.violations)]
    return CommandResult(payload=payload, header=["trial", "midpoint_excess"], rows=rows)


def run(params: EntropyParams, seed: int, threads: int) -> CommandResult:
    logger.info("entropy task %s", params.task)
    if params.task == "geometric":
        return _geometric(params)
    if params.task == "divergence":
        return _divergence(params, threads)
    if params.task == "tilted":
        return _tilted(params)
    if params.task == "mean_bound":
        return _mean_bound(params, seed)
    return _h_r(params, seed)
