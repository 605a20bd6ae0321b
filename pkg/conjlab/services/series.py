"""
Log-partition functionals of the analytic series f_c(r) = sum_n e^{c_n} r^n.

All sums are evaluated on an explicit truncation 0..N in max-shifted form, so
e^{c_n} r^n may underflow or overflow individually without affecting the result.
"""
import logging
import math

import numpy as np
from scipy.special import logsumexp

from conjlab.config import settings
from conjlab.errors import NonPositiveRho, SeriesNotConvergent, TruncationMismatch
from conjlab.models import CoefficientSeq, SimplexWeights

logger = logging.getLogger(__name__)


def _check_truncation(c: CoefficientSeq, N: int) -> int:
    N = int(N)
    if N < 0 or N > c.trunc_N:
        raise TruncationMismatch(f"N={N} outside the stored truncation 0..{c.trunc_N}")
    return N


def _log_rho(rho: float) -> float:
    if not rho > 0:
        raise NonPositiveRho(f"rho must be positive, got {rho!r}")
    return math.log(rho)


def _exponents(c: CoefficientSeq, log_rho: float, N: int) -> np.ndarray:
    return c.head(N) + np.arange(N + 1) * log_rho


def log_partition_exponent(c: CoefficientSeq, lam: float, N: int) -> float:
    """ln sum_{n<=N} e^{c_n + n*lam} for a finite exponent lam"""
    N = _check_truncation(c, N)
    return float(logsumexp(_exponents(c, lam, N)))


def log_partition(c: CoefficientSeq, rho: float, N: int) -> float:
    """ln sum_{n<=N} e^{c_n} rho^n (exact partial sum, no tail added)"""
    log_rho = _log_rho(rho)
    return log_partition_exponent(c, log_rho, N)


def gibbs_maximizer(c: CoefficientSeq, rho: float, N: int) -> SimplexWeights:
    """Weights t_n = e^{c_n} rho^n / f_c(rho) attaining the log-partition maximum"""
    log_rho = _log_rho(rho)
    N = _check_truncation(c, N)
    exps = _exponents(c, log_rho, N)
    weights = np.exp(exps - logsumexp(exps))
    return SimplexWeights(weights / weights.sum())


def mean_index(t: SimplexWeights) -> float:
    return math.fsum(np.arange(t.weights.size) * t.weights)


def derivative_ratio(c: CoefficientSeq, rho: float, N: int) -> float:
    """rho f'(rho) / f(rho), summed term-wise from the derivative series"""
    log_rho = _log_rho(rho)
    N = _check_truncation(c, N)
    if N == 0:
        return 0.0
    exps = _exponents(c, log_rho, N)
    n = np.arange(1, N + 1)
    log_num = logsumexp(exps[1:] + np.log(n))
    return float(math.exp(log_num - logsumexp(exps)))


def tail_bound(c: CoefficientSeq, rho: float, N: int) -> float:
    """Bound e^{sup c} rho^{N+1} / (1 - rho) on the omitted tail of f_c(rho)"""
    log_rho = _log_rho(rho)
    if rho >= 1:
        raise SeriesNotConvergent(f"no tail bound for rho={rho} >= 1")
    return math.exp(c.sup + (N + 1) * log_rho - math.log1p(-rho))


def suggest_truncation(c: CoefficientSeq, rho: float, eps: float | None = None) -> int:
    """Smallest N whose tail bound is at most eps"""
    eps = settings.TRUNCATION_EPS if eps is None else eps
    log_rho = _log_rho(rho)
    if rho >= 1:
        raise SeriesNotConvergent(f"series diverges or has no tail control for rho={rho}")
    needed = (math.log(eps) + math.log1p(-rho) - c.sup) / log_rho
    N = max(0, math.ceil(needed) - 1)
    logger.debug("suggest_truncation rho=%s eps=%s -> N=%d", rho, eps, N)
    return N


def geometric_weights(r: float, N: int) -> SimplexWeights:
    """(1-r) r^n renormalized on 0..N"""
    return gibbs_maximizer(CoefficientSeq.zeros(N), r, N)
