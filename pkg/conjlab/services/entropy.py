"""
Entropy functionals on the probability simplex.

Convention throughout: 0 ln 0 = 0 (scipy.special.xlogy).
"""
import logging
import math
from functools import lru_cache
from typing import Iterable, List, Sequence

import numpy as np
from scipy.special import logsumexp, xlogy

from conjlab.config import settings
from conjlab.errors import (
    EmptySchedule,
    InvalidSchedule,
    InvalidSimplexPoint,
    LengthMismatch,
    RhoOutOfRange,
    TargetMeanOutOfRange,
    TruncationMismatch,
)
from conjlab.models import (
    NEG_INF,
    POS_INF,
    CoefficientSeq,
    ConvexityRecord,
    DivergenceGenerator,
    PartialSumTrace,
    SimplexWeights,
    TiltedSolution,
)
from conjlab.services.series import mean_index
from conjlab.utils import block_slices, compensated_sum, make_rng, parallel_map

logger = logging.getLogger(__name__)


def neg_entropy(t: SimplexWeights) -> float:
    w = t.weights
    return compensated_sum(xlogy(w, w))


def relative_entropy(t: SimplexWeights, ref_log_weights: CoefficientSeq) -> float:
    """sum t_n (ln t_n - ref_n), i.e. sum t_n ln(t_n / b_n) with b_n = e^{ref_n}"""
    w = t.weights
    ref = ref_log_weights.coeffs
    if w.size != ref.size:
        raise LengthMismatch(f"weights have {w.size} entries, reference has {ref.size}")
    return compensated_sum(xlogy(w, w) - w * ref)


def log_partition_bracket(c: CoefficientSeq, rho: float, t: SimplexWeights) -> float:
    """sum c_n t_n + ln(rho) * mean(t) - sum t_n ln t_n"""
    N = t.trunc_N
    if N > c.trunc_N:
        raise TruncationMismatch(f"weights reach n={N} but coefficients stop at {c.trunc_N}")
    linear = compensated_sum(c.head(N) * t.weights)
    return linear + math.log(rho) * mean_index(t) - neg_entropy(t)


def g_r(t, rho: float) -> float:
    """
    Entropy minus ln(rho) times the mean index.

    Accepts either validated SimplexWeights or a raw sequence; a raw sequence
    that is not a probability vector lies outside the restricted simplex and
    maps to +inf.
    """
    if not 0 < rho < 1:
        raise RhoOutOfRange(f"rho must lie in (0, 1), got {rho!r}")
    if not isinstance(t, SimplexWeights):
        try:
            t = SimplexWeights(t)
        except InvalidSimplexPoint:
            return POS_INF
    return neg_entropy(t) - math.log(rho) * mean_index(t)


def mean_entropy_bound(mu: float) -> float:
    """Largest entropy at mean index mu: (mu+1) ln(mu+1) - mu ln mu"""
    return float(xlogy(mu + 1.0, mu + 1.0) - xlogy(mu, mu))


def h_r_trace(t: SimplexWeights, rho: float, schedule: Sequence[int]) -> PartialSumTrace:
    """Partial sums of t_n ln(t_n / rho^n) at each checkpoint of the schedule"""
    if not 0 < rho < 1:
        raise RhoOutOfRange(f"rho must lie in (0, 1), got {rho!r}")
    schedule = _checked_schedule(schedule)
    if schedule[-1] > t.trunc_N:
        raise InvalidSchedule(f"checkpoint {schedule[-1]} beyond truncation {t.trunc_N}")
    w = t.weights
    terms = xlogy(w, w) - w * np.arange(w.size) * math.log(rho)
    return PartialSumTrace(tuple((N, compensated_sum(terms[: N + 1])) for N in schedule))


def h_r_segment_record(rho: float, N: int, trials: int, seed: int) -> ConvexityRecord:
    """
    Midpoint excesses of the N-th partial sum of h_r along random simplex segments.

    Recorded as data only; nothing is asserted about the lower limit itself.
    """
    rng = make_rng(seed)
    schedule = [N]
    excesses: List[float] = []
    for _ in range(trials):
        t1, t2 = (SimplexWeights.normalized(rng.dirichlet(np.ones(N + 1))) for _ in range(2))
        mid = SimplexWeights.normalized(0.5 * (t1.weights + t2.weights))
        h1, h2, hm = (h_r_trace(t, rho, schedule).final for t in (t1, t2, mid))
        excesses.append(hm - 0.5 * (h1 + h2))
    return ConvexityRecord(max_violation=max(excesses), trials=trials,
                           admissible=trials, violations=excesses)


def tilted_mean(a_log: CoefficientSeq, beta: float, N: int) -> float:
    """Mean index of t_n proportional to a_n e^{beta n}"""
    n = np.arange(N + 1)
    exps = a_log.head(N) + beta * n
    w = np.exp(exps - logsumexp(exps))
    return compensated_sum(n * w) / compensated_sum(w)


def _tilted_weights(a_log: CoefficientSeq, beta: float, N: int) -> SimplexWeights:
    exps = a_log.head(N) + beta * np.arange(N + 1)
    return SimplexWeights.normalized(np.exp(exps - logsumexp(exps)))


def tilted_min_entropy(a_log: CoefficientSeq, target_mean: float, N: int) -> TiltedSolution:
    """
    Minimize sum t_n ln(t_n / a_n) over the simplex slice with mean index target_mean.

    The interior minimizer is the exponential tilt t_n ~ a_n e^{beta n}; beta is
    found by bisection on the (strictly increasing) tilted mean. The two ends of
    the admissible range are point masses reported with tilt -inf / +inf.
    """
    N = int(N)
    if N < 0 or N > a_log.trunc_N:
        raise TruncationMismatch(f"N={N} outside the stored truncation 0..{a_log.trunc_N}")
    if not 0 <= target_mean <= N:
        raise TargetMeanOutOfRange(f"target mean {target_mean!r} outside [0, {N}]")
    head = CoefficientSeq(a_log.head(N))

    if target_mean == 0:
        weights, tilt = SimplexWeights.point_mass(0, N), NEG_INF
    elif target_mean == N:
        weights, tilt = SimplexWeights.point_mass(N, N), POS_INF
    else:
        tilt = _bisect_tilt(head, target_mean, N)
        weights = _tilted_weights(head, tilt, N)
    return TiltedSolution(weights=weights, tilt=tilt, value=relative_entropy(weights, head))


def _bisect_tilt(a_log: CoefficientSeq, target: float, N: int) -> float:
    lo, hi = -1.0, 1.0
    for _ in range(settings.BISECTION_MAX_DOUBLINGS):
        if tilted_mean(a_log, lo, N) <= target:
            break
        lo *= 2
    else:
        logger.warning("tilt bracket did not reach target mean %r from below", target)
    for _ in range(settings.BISECTION_MAX_DOUBLINGS):
        if tilted_mean(a_log, hi, N) >= target:
            break
        hi *= 2
    else:
        logger.warning("tilt bracket did not reach target mean %r from above", target)

    iterations = 0
    while True:
        mid = 0.5 * (lo + hi)
        mean = tilted_mean(a_log, mid, N)
        iterations += 1
        if abs(mean - target) <= settings.MEAN_TOL or hi - lo <= settings.BISECTION_WIDTH_TOL:
            break
        if mean < target:
            lo = mid
        else:
            hi = mid
    logger.debug("tilt bisection: target=%r beta=%r after %d steps", target, mid, iterations)
    return mid


def _checked_schedule(schedule: Iterable[int]) -> List[int]:
    schedule = [int(n) for n in schedule]
    if not schedule:
        raise EmptySchedule("schedule must contain at least one checkpoint")
    if any(b <= a for a, b in zip(schedule, schedule[1:])):
        raise InvalidSchedule("schedule must be strictly increasing")
    if schedule[0] < 0:
        raise InvalidSchedule("checkpoints must be nonnegative")
    return schedule


_INV_PI_SQ_NORM = 6.0 / math.pi ** 2


def _inverse_square_terms(n: np.ndarray) -> np.ndarray:
    t = _INV_PI_SQ_NORM / n ** 2
    return t * (math.log(_INV_PI_SQ_NORM) - 2.0 * np.log(n))


@lru_cache(maxsize=None)
def inverse_n_log_sq_normalizer(direct_terms: int = 1_000_000) -> float:
    """
    a = sum_{n>=2} 1 / (n (ln n)^2).

    Direct compensated sum up to M plus the Euler-Maclaurin tail
    1/ln M - f(M)/2 - f'(M)/12; the tail decays like 1/ln M, so summation alone
    would not converge at desk scale.
    """
    M = int(direct_terms)
    n = np.arange(2, M + 1, dtype=float)
    direct = compensated_sum(1.0 / (n * np.log(n) ** 2))
    log_m = math.log(M)
    f_m = 1.0 / (M * log_m ** 2)
    df_m = -(log_m + 2.0) / (M ** 2 * log_m ** 3)
    return direct + 1.0 / log_m - f_m / 2.0 - df_m / 12.0


def _inverse_n_log_sq_terms(n: np.ndarray) -> np.ndarray:
    a = inverse_n_log_sq_normalizer()
    log_n = np.log(n)
    t = 1.0 / (n * log_n ** 2 * a)
    return t * (-log_n - 2.0 * np.log(log_n) - math.log(a))


_GENERATORS = {
    DivergenceGenerator.INVERSE_SQUARE: (1, _inverse_square_terms),
    DivergenceGenerator.INVERSE_N_LOG_SQ: (2, _inverse_n_log_sq_terms),
}


def _inverse_square_tail(N: int) -> float:
    # integral bounds for sum_{n>N} 1/n^2 and sum_{n>N} ln n / n^2
    N = max(N, 2)
    return _INV_PI_SQ_NORM * (abs(math.log(_INV_PI_SQ_NORM)) / N + 2.0 * (math.log(N) + 1.0) / N)


def divergence_diagnostic(generator_id, schedule: Sequence[int], threads: int | None = None) -> PartialSumTrace:
    """
    Partial sums of sum t_n ln t_n for the two reference distributions.

    inverse_square: t_n = 6 / (pi n)^2, n >= 1, converges (mean index diverges).
    inverse_n_log_sq: t_n = 1 / (n (ln n)^2 a), n >= 2, diverges to -inf.
    Each stretch between checkpoints is summed in chunks; chunk sums are merged
    with a correctly rounded sum, so the trace does not depend on chunking or
    thread count beyond rounding of the chunk sums themselves.
    """
    generator = DivergenceGenerator(generator_id)
    schedule = _checked_schedule(schedule)
    threads = settings.THREADS if threads is None else threads
    first, term_fn = _GENERATORS[generator]

    def chunk_sum(bounds):
        start, stop = bounds
        return compensated_sum(term_fn(np.arange(start, stop, dtype=float)))

    partials: List[float] = []
    checkpoints = []
    start = first
    for N in schedule:
        stop = N + 1
        if stop > start:
            pieces = [(start + s.start, start + s.stop)
                      for s in block_slices(stop - start, settings.SUMMATION_CHUNK)]
            partials.extend(parallel_map(chunk_sum, pieces, threads))
            start = stop
        checkpoints.append((N, compensated_sum(partials)))
        logger.debug("%s: partial sum through n=%d is %r", generator.value, N, checkpoints[-1][1])

    tail = _inverse_square_tail(schedule[-1]) if generator is DivergenceGenerator.INVERSE_SQUARE else None
    return PartialSumTrace(tuple(checkpoints), tail_bound=tail)
