"""
Weighted composition operators e^phi T_alpha on a finite state set.

On {0..m-1} the operator (aT_alpha)u(x) = a(x) u(alpha(x)) is the matrix with a
single entry a(x) per row, in column alpha(x). The spectral radius does not
depend on the L^p norm, so the exponent p is carried but never used here.
"""
import logging
import math
from functools import lru_cache
from typing import Callable, List, Sequence, Tuple

import networkx as nx
import numpy as np

from conjlab.config import settings
from conjlab.errors import (
    DimensionMismatch,
    InvalidGrid,
    NegativeEntry,
    NonSquare,
    NotBijective,
    RadiusNotSubcritical,
    TruncationMismatch,
)
from conjlab.models import (
    NEG_INF,
    POS_INF,
    Axis,
    CoefficientSeq,
    FiniteDynSystem,
    FiniteMeasure,
    LambdaStarEstimate,
    SeriesRadiusPair,
    WeightFunction,
    grid_points,
)
from conjlab.services.entropy import tilted_min_entropy
from conjlab.services.series import tail_bound
from conjlab.utils import compensated_sum, parallel_map

logger = logging.getLogger(__name__)

DEFAULT_PHI_AXIS = Axis(-2.0, 2.0, 41)

LambdaStarOracle = Callable[[FiniteMeasure], float]


def transfer_matrix(sys: FiniteDynSystem, phi: WeightFunction) -> np.ndarray:
    if phi.m != sys.m:
        raise DimensionMismatch(f"phi has {phi.m} values for {sys.m} states")
    A = np.zeros((sys.m, sys.m))
    A[np.arange(sys.m), np.array(sys.alpha)] = np.exp(phi.phi)
    return A


def _inf_norm(M: np.ndarray) -> float:
    return float(np.abs(M).sum(axis=1).max())


def _gelfand_log_radius(A: np.ndarray) -> float:
    """ln of lim ||A^(2^k)||^(1/2^k) by repeated normalized squaring"""
    norm = _inf_norm(A)
    if norm == 0:
        return NEG_INF
    M = A / norm
    log_radius = math.log(norm)
    for k in range(1, settings.GELFAND_DOUBLINGS + 1):
        M = M @ M
        q = _inf_norm(M)
        if q == 0:
            return NEG_INF
        M /= q
        log_radius += math.log(q) / 2.0 ** k
    return log_radius


def _shifted_power_iteration(A: np.ndarray) -> float | None:
    """
    Power iteration on B = A + eps I, returning rho(A) = rho(B) - eps.

    The shift makes the Perron root strictly dominant in modulus for the
    periodic (cycle) spectra of composition operators. Iterates are taken in
    blocks of B^K (K = POWER_BLOCK) and stopped by the Collatz-Wielandt bracket
    min (Px)_i / x_i <= rho(P) <= max (Px)_i / x_i. Returns None when the
    bracket does not close within POWER_MAX_ITER effective iterations.
    """
    m = A.shape[0]
    eps = settings.SPECTRAL_SHIFT * float(A.max())
    P = A + eps * np.eye(m)
    log_scale = 0.0
    K = 1
    while K < settings.POWER_BLOCK:
        P = P @ P
        q = _inf_norm(P)
        P /= q
        log_scale = 2.0 * log_scale + math.log(q)
        K *= 2
    x = np.ones(m)
    for block in range(max(1, settings.POWER_MAX_ITER // K)):
        y = P @ x
        if not np.all(y > 0):
            return None
        ratios = y / x
        lo, hi = float(ratios.min()), float(ratios.max())
        if hi - lo <= settings.SPECTRAL_TOL * hi:
            rho_b = math.exp((log_scale + math.log(0.5 * (lo + hi))) / K)
            logger.debug("power iteration converged after %d blocks of %d", block + 1, K)
            return rho_b - eps
        x = y / y.max()
    return None


def spectral_radius(A) -> float:
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise NonSquare(f"matrix of shape {A.shape} is not square")
    negative = np.argwhere(A < 0)
    if negative.size:
        i, j = negative[0]
        raise NegativeEntry(f"entry ({i}, {j}) is negative")
    scale = float(A.max())
    if scale == 0:
        return 0.0
    A = A / scale
    log_gelfand = _gelfand_log_radius(A)
    if log_gelfand == NEG_INF:
        return 0.0
    gelfand = math.exp(log_gelfand)
    power = _shifted_power_iteration(A)
    if power is None:
        logger.debug("power iteration did not converge; using Gelfand estimate")
        return scale * gelfand
    if abs(power - gelfand) > 1e-8 * gelfand:
        logger.warning("power iteration %r and Gelfand %r disagree; keeping Gelfand", power, gelfand)
        return scale * gelfand
    return scale * power


def spectral_exponent(sys: FiniteDynSystem, phi: WeightFunction) -> float:
    """lambda(phi) = ln r(e^phi T_alpha), evaluated as max(phi) + ln r(e^(phi - max phi) T_alpha)

    Every finite self-map has a cycle, so the exponent is finite for finite phi.
    When the shifted radius still underflows, the cycle average is returned.
    """
    shift = float(np.max(phi.phi))
    radius = spectral_radius(transfer_matrix(sys, WeightFunction(phi.phi - shift)))
    if radius > 0 and math.isfinite(radius):
        return shift + math.log(radius)
    logger.debug("shifted spectral radius is %r; using the cycle average", radius)
    return max_cycle_average(sys, phi)


@lru_cache(maxsize=256)
def cycles(sys: FiniteDynSystem) -> Tuple[Tuple[int, ...], ...]:
    """Cycles of the functional graph x -> alpha(x), each rotated to start at its smallest state"""
    G = nx.DiGraph()
    G.add_nodes_from(range(sys.m))
    G.add_edges_from(enumerate(sys.alpha))
    found = []
    for cyc in nx.simple_cycles(G):
        k = cyc.index(min(cyc))
        found.append(tuple(cyc[k:] + cyc[:k]))
    return tuple(sorted(found))


def max_cycle_average(sys: FiniteDynSystem, phi: WeightFunction) -> float:
    """Largest cycle average of phi; equals lambda(phi) for finite self-maps"""
    return max(compensated_sum(phi.phi[list(c)]) / len(c) for c in cycles(sys))


def invariant_measure_hull(sys: FiniteDynSystem) -> List[FiniteMeasure]:
    """Vertices of the invariant probability measures: one uniform measure per cycle"""
    if not sys.is_bijective:
        raise NotBijective("invariant measures are only enumerated for bijective maps")
    return [FiniteMeasure.uniform_on(c, sys.m) for c in cycles(sys)]


def hull_distance(sys: FiniteDynSystem, nu: FiniteMeasure) -> float:
    """Sup distance from nu to the invariant probability hull (cycle-constant, mass 1)"""
    if nu.m != sys.m:
        raise DimensionMismatch(f"measure has {nu.m} states, system has {sys.m}")
    if not sys.is_bijective:
        raise NotBijective("hull membership is only defined for bijective maps")
    distance = abs(nu.total - 1.0)
    for c in cycles(sys):
        block = nu.mass[list(c)]
        distance = max(distance, float(np.abs(block - block.mean()).max()))
    return distance


def hull_indicator_oracle(sys: FiniteDynSystem) -> LambdaStarOracle:
    """Exact lambda* for a permutation: 0 on the invariant hull, +inf elsewhere"""
    if not sys.is_bijective:
        raise NotBijective("the indicator oracle needs a bijective map")

    def oracle(nu: FiniteMeasure) -> float:
        return 0.0 if hull_distance(sys, nu) <= settings.HULL_TOL else POS_INF

    return oracle


def _phi_axes(sys: FiniteDynSystem, phi_box) -> Tuple[Axis, ...]:
    if isinstance(phi_box, Axis):
        return (phi_box,) * sys.m
    axes = tuple(phi_box)
    if len(axes) != sys.m:
        raise DimensionMismatch(f"{len(axes)} phi axes for {sys.m} states")
    return axes


@lru_cache(maxsize=32)
def exponent_grid(sys: FiniteDynSystem, axes: Tuple[Axis, ...], threads: int) -> Tuple[np.ndarray, np.ndarray]:
    nodes = math.prod(a.count for a in axes)
    if nodes > settings.BRUTEFORCE_MAX_NODES:
        raise InvalidGrid(f"phi grid has {nodes} nodes, cap is {settings.BRUTEFORCE_MAX_NODES}")
    Phi = grid_points(axes)
    Lam = np.array(parallel_map(lambda row: spectral_exponent(sys, WeightFunction(row)), list(Phi), threads))
    logger.debug("cached %d spectral exponents for a %d-state system", nodes, sys.m)
    return Phi, Lam


def lambda_conjugate_numeric(sys: FiniteDynSystem, nu: FiniteMeasure, phi_box=DEFAULT_PHI_AXIS,
                             threads: int | None = None) -> LambdaStarEstimate:
    """
    lambda*(nu) ~ max over grid phi of <nu, phi> - lambda(phi).

    Off the invariant hull the estimate grows with the box; values above
    INFINITY_THRESHOLD * box radius are flagged as +inf.
    """
    if nu.m != sys.m:
        raise DimensionMismatch(f"measure has {nu.m} states, system has {sys.m}")
    axes = _phi_axes(sys, phi_box)
    threads = settings.THREADS if threads is None else threads
    Phi, Lam = exponent_grid(sys, axes, threads)
    value = float(np.max(Phi @ nu.mass - Lam))
    radius = max(max(abs(a.lo), abs(a.hi)) for a in axes)
    return LambdaStarEstimate(value=value, box_radius=radius,
                              infinite=value > settings.INFINITY_THRESHOLD * radius)


def numeric_lambda_star_oracle(sys: FiniteDynSystem, phi_box=DEFAULT_PHI_AXIS) -> LambdaStarOracle:
    def oracle(nu: FiniteMeasure) -> float:
        return lambda_conjugate_numeric(sys, nu, phi_box).extended_value

    return oracle


def default_lambda_star_oracle(sys: FiniteDynSystem) -> LambdaStarOracle:
    return hull_indicator_oracle(sys) if sys.is_bijective else numeric_lambda_star_oracle(sys)


def _matrix_series(c: CoefficientSeq, A: np.ndarray, N: int) -> np.ndarray:
    """sum_{n<=N} e^{c_n} A^n by Horner's rule"""
    coeffs = np.exp(c.head(N))
    I = np.eye(A.shape[0])
    S = coeffs[N] * I
    for n in range(N - 1, -1, -1):
        S = S @ A + coeffs[n] * I
    return S


def _check_truncation(c: CoefficientSeq, N: int) -> int:
    N = int(N)
    if N < 0 or N > c.trunc_N:
        raise TruncationMismatch(f"N={N} outside the stored truncation 0..{c.trunc_N}")
    return N


def operator_series_radius(c: CoefficientSeq, sys: FiniteDynSystem, phi: WeightFunction, N: int) -> SeriesRadiusPair:
    """r(f_c(A)) against f_c(r(A)) for a subcritical transfer matrix A"""
    N = _check_truncation(c, N)
    A = transfer_matrix(sys, phi)
    rho = spectral_radius(A)
    if rho >= 1:
        raise RadiusNotSubcritical(f"spectral radius {rho!r} is not below 1")
    via_matrix = spectral_radius(_matrix_series(c, A, N))
    via_scalar = compensated_sum(np.exp(c.head(N)) * rho ** np.arange(N + 1))
    tail = tail_bound(c, rho, N) if rho > 0 else 0.0
    return SeriesRadiusPair(via_matrix=via_matrix, via_scalar=via_scalar, tail_bound=tail)


def polynomial_lambda(a_log: CoefficientSeq, sys: FiniteDynSystem, phi: WeightFunction, N: int) -> float:
    """ln r(sum_{n<=N} a_n (e^phi T_alpha)^n) with a_n = e^{a_log_n}"""
    N = _check_truncation(a_log, N)
    radius = spectral_radius(_matrix_series(a_log, transfer_matrix(sys, phi), N))
    return math.log(radius) if radius > 0 else NEG_INF


def polynomial_lambda_conjugate(m: FiniteMeasure, a_log: CoefficientSeq, sys: FiniteDynSystem, N: int,
                                oracle: LambdaStarOracle | None = None) -> float:
    """
    Conjugate of polynomial_lambda at a measure m:
    m(X) lambda*(m / m(X)) + min over t with mean m(X) of sum t_n ln(t_n / a_n),
    +inf when m(X) lies outside [0, N].
    """
    N = _check_truncation(a_log, N)
    if m.m != sys.m:
        raise DimensionMismatch(f"measure has {m.m} states, system has {sys.m}")
    mass = m.total
    if mass > N + settings.MEAN_TOL:
        return POS_INF
    if mass <= settings.MEAN_TOL:
        # only t = e_0 has mean 0
        return -float(a_log.coeffs[0])
    oracle = oracle or default_lambda_star_oracle(sys)
    lam_star = oracle(m.normalized())
    if lam_star == POS_INF:
        return POS_INF
    entropy_part = tilted_min_entropy(a_log, min(mass, float(N)), N).value
    return mass * lam_star + entropy_part
