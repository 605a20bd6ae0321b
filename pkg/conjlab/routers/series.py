import logging

from conjlab.config import settings
from conjlab.errors import ConfigInvalid
from conjlab.models import CoefficientSeq, CommandResult
from conjlab.schemas import SeriesParams
from conjlab.services.series import (
    derivative_ratio,
    gibbs_maximizer,
    log_partition,
    mean_index,
    suggest_truncation,
    tail_bound,
)

logger = logging.getLogger(__name__)


def resolve_truncation(params: SeriesParams) -> int:
    if params.N is not None:
        return params.N
    if params.c != "zeros":
        return len(params.c) - 1
    if params.rho >= 1:
        raise ConfigInvalid("params.N", "required when rho >= 1")
    return suggest_truncation(CoefficientSeq.zeros(0), params.rho, params.eps)


def run(params: SeriesParams, seed: int, threads: int) -> CommandResult:
    N = resolve_truncation(params)
    c = params.coefficients(N)
    t = gibbs_maximizer(c, params.rho, N)
    payload = {
        "N": N,
        "rho": params.rho,
        "log_partition": log_partition(c, params.rho, N),
        "maximizer_head": list(t.weights[: params.head]),
        "mean_index": mean_index(t),
        "derivative_ratio": derivative_ratio(c, params.rho, N),
    }
    tolerances = {"simplex": settings.SIMPLEX_TOL}
    if params.rho < 1:
        payload["tail_bound"] = tail_bound(c, params.rho, N)
        tolerances["truncation_eps"] = params.eps or settings.TRUNCATION_EPS
    logger.info("series: N=%d rho=%r log_partition=%r", N, params.rho, payload["log_partition"])
    rows = [[n, float(c.coeffs[n]), float(w)] for n, w in enumerate(t.weights)]
    return CommandResult(payload=payload, header=["n", "c_n", "t_n"], rows=rows, tolerances=tolerances)
