"""
Composite functionals built from the log-partition series and the spectral exponent.

    tilde_lambda(c, lam)  = ln sum e^{c_n + n lam}                 (lam < 0)
    tilde_tau(t, a)       = sum t ln t on a = mean_index(t)
    hat_lambda(c, phi)    = tilde_lambda(c, lambda(phi))
    hat_tau(t, mu_bar)    = a lambda*(mu_bar / a) + sum t ln t     (mu_bar(X) = a)

hat_lambda is the conjugate of hat_tau; verify_hat_conjugacy checks this one
probe at a time (Fenchel-Young gaps, attainment, brute-force grid conjugate).
"""
import logging
import math
from typing import List

import numpy as np
from scipy.special import logsumexp

from conjlab.config import settings
from conjlab.errors import ConjLabError, DimensionMismatch, DomainViolation, InvalidGrid, OracleFailure
from conjlab.models import (
    NEG_INF,
    POS_INF,
    Axis,
    BruteForceGrids,
    CoefficientSeq,
    ConvexityRecord,
    FiniteDynSystem,
    FiniteMeasure,
    GriddedFunction,
    HatDualPoint,
    SimplexWeights,
    TildePoint,
    VerificationReport,
    WeightFunction,
    grid_points,
)
from conjlab.services.dynsys import (
    LambdaStarOracle,
    exponent_grid,
    hull_distance,
    invariant_measure_hull,
    numeric_lambda_star_oracle,
    spectral_exponent,
)
from conjlab.services.entropy import log_partition_bracket, neg_entropy
from conjlab.services.fenchel import conjugate_at
from conjlab.services.series import gibbs_maximizer, log_partition_exponent, mean_index
from conjlab.utils import compensated_sum, make_rng, parallel_map

logger = logging.getLogger(__name__)


def tilde_lambda(c: CoefficientSeq, lam: float, N: int) -> float:
    if math.isnan(lam):
        raise DomainViolation("lambda(phi) is NaN")
    if lam >= 0:
        return POS_INF
    if lam == NEG_INF:
        return float(c.coeffs[0])
    return log_partition_exponent(c, lam, N)


def f_t_value(t: SimplexWeights, a: float) -> float:
    if abs(a - mean_index(t)) <= settings.MEAN_TOL:
        return neg_entropy(t)
    return POS_INF


def in_tilde_domain(pt: TildePoint) -> bool:
    return pt.a >= 0 and abs(pt.a - mean_index(pt.t)) <= settings.MEAN_TOL


def tilde_tau(pt: TildePoint) -> float:
    return neg_entropy(pt.t) if in_tilde_domain(pt) else POS_INF


def hat_lambda(c: CoefficientSeq, sys: FiniteDynSystem, phi: WeightFunction, N: int) -> float:
    return tilde_lambda(c, spectral_exponent(sys, phi), N)


def in_hat_domain(pt: HatDualPoint, sys: FiniteDynSystem) -> bool:
    """t != e_0, mu_bar(X) = mean_index(t), mu_bar / mu_bar(X) on the invariant hull"""
    if pt.t.is_point_mass(0):
        return False
    a = mean_index(pt.t)
    if abs(pt.mu_bar.total - a) > settings.MEAN_TOL:
        return False
    return hull_distance(sys, pt.mu_bar.scaled(1.0 / a)) <= settings.HULL_TOL


def hat_tau(pt: HatDualPoint, sys: FiniteDynSystem, lambda_star_oracle: LambdaStarOracle | None = None) -> float:
    """
    a lambda*(mu_bar / a) + sum t ln t with a = mean_index(t).

    (e_0, 0) takes the value 0. Any other point whose mass differs from its
    mean index is off the domain. For bijective maps a normalized measure off
    the invariant hull is +inf whatever the oracle; the oracle prices the rest.
    """
    if pt.mu_bar.m != sys.m:
        raise DimensionMismatch(f"measure has {pt.mu_bar.m} states, system has {sys.m}")
    a = mean_index(pt.t)
    mass = pt.mu_bar.total
    if a <= settings.MEAN_TOL:
        return 0.0 if mass <= settings.MEAN_TOL else POS_INF
    if abs(mass - a) > settings.MEAN_TOL:
        return POS_INF
    nu = pt.mu_bar.scaled(1.0 / a)
    if sys.is_bijective and hull_distance(sys, nu) > settings.HULL_TOL:
        return POS_INF
    oracle = lambda_star_oracle or numeric_lambda_star_oracle(sys)
    try:
        lam_star = float(oracle(nu))
    except ConjLabError:
        raise
    except Exception as exc:
        raise OracleFailure(f"lambda* oracle raised {exc!r}") from exc
    if math.isnan(lam_star) or lam_star == NEG_INF:
        raise OracleFailure(f"lambda* oracle returned {lam_star!r}")
    if lam_star == POS_INF:
        return POS_INF
    return a * lam_star + neg_entropy(pt.t)


def hat_pairing(c: CoefficientSeq, phi: WeightFunction, pt: HatDualPoint) -> float:
    """sum c_n t_n + <mu_bar, phi>"""
    N = pt.t.trunc_N
    return compensated_sum(np.concatenate([c.head(N) * pt.t.weights, pt.mu_bar.mass * phi.phi]))


def sample_hat_dual_points(sys: FiniteDynSystem, N: int, count: int, rng: np.random.Generator,
                           spread: float = 0.0) -> List[HatDualPoint]:
    """
    Admissible dual points: t from a flat Dirichlet on 0..N (optionally pulled
    towards the uniform point by spread), mu_bar = mean_index(t) times a random
    convex combination of the hull vertices.
    """
    V = np.stack([v.mass for v in invariant_measure_hull(sys)])
    points = []
    for _ in range(count):
        raw = rng.dirichlet(np.ones(N + 1))
        if spread:
            raw = (1.0 - spread) * raw + spread / (N + 1)
        t = SimplexWeights.normalized(raw)
        a = mean_index(t)
        w = rng.dirichlet(np.ones(V.shape[0]))
        points.append(HatDualPoint(t=t, mu_bar=FiniteMeasure(a * (w @ V))))
    return points


def _hat_lambda_grid(c_axis: Axis, phi_axis: Axis, K: int, sys: FiniteDynSystem,
                     threads: int) -> GriddedFunction:
    axes = (c_axis,) * K + (phi_axis,) * sys.m
    nodes = math.prod(a.count for a in axes)
    if nodes > settings.BRUTEFORCE_MAX_NODES:
        raise InvalidGrid(f"(c, phi) grid has {nodes} nodes, cap is {settings.BRUTEFORCE_MAX_NODES}")
    C = grid_points((c_axis,) * K)
    _, Lam = exponent_grid(sys, (phi_axis,) * sys.m, threads)
    n = np.arange(K)
    columns = []
    for lam in Lam:
        if lam < 0:
            columns.append(logsumexp(C + n * lam, axis=1))
        else:
            columns.append(np.full(C.shape[0], POS_INF))
    return GriddedFunction(axes, np.stack(columns, axis=1))


def bruteforce_hat_discrepancy(c: CoefficientSeq, sys: FiniteDynSystem, N: int, grids: BruteForceGrids,
                               rng: np.random.Generator, oracle: LambdaStarOracle,
                               threads: int) -> List[dict]:
    """Grid conjugate of hat_lambda over (c, phi) against hat_tau at sampled dual points"""
    K = N + 1
    if K + sys.m > settings.BRUTEFORCE_MAX_DIM:
        raise InvalidGrid(f"joint dimension {K + sys.m} exceeds {settings.BRUTEFORCE_MAX_DIM}")
    f_hat = _hat_lambda_grid(grids.c_axis, grids.phi_axis, K, sys, threads)
    points = sample_hat_dual_points(sys, N, grids.probes, rng, spread=0.5)
    duals = np.stack([np.concatenate([p.t.weights, p.mu_bar.mass]) for p in points])
    brute = conjugate_at(f_hat, duals, threads)
    probes = []
    for p, b in zip(points, brute):
        exact = hat_tau(p, sys, oracle)
        probes.append({"kind": "bruteforce", "t": list(p.t.weights), "mu_bar": list(p.mu_bar.mass),
                       "bruteforce": float(b), "hat_tau": exact, "discrepancy": abs(float(b) - exact)})
    return probes


def verify_hat_conjugacy(c: CoefficientSeq, sys: FiniteDynSystem, phi: WeightFunction, N: int,
                         grids: BruteForceGrids | None = None, seed: int = 0,
                         oracle: LambdaStarOracle | None = None, probes: int = 100,
                         threads: int | None = None) -> VerificationReport:
    lam = spectral_exponent(sys, phi)
    if not lam < 0:
        raise DomainViolation(f"lambda(phi) = {lam!r} is not negative")
    threads = settings.THREADS if threads is None else threads
    oracle = oracle or numeric_lambda_star_oracle(sys)
    rng = make_rng(seed)
    lam_hat = tilde_lambda(c, lam, N)
    logger.info("verifying conjugacy: lambda(phi)=%r hat_lambda=%r N=%d m=%d", lam, lam_hat, N, sys.m)

    def gap(pt: HatDualPoint) -> dict:
        value = lam_hat + hat_tau(pt, sys, oracle) - hat_pairing(c, phi, pt)
        return {"kind": "fenchel_young", "mean_index": mean_index(pt.t), "gap": value}

    records = parallel_map(gap, sample_hat_dual_points(sys, N, probes, rng), threads)
    min_gap = min(r["gap"] for r in records)

    t_star = gibbs_maximizer(c, math.exp(lam), N)
    vertices = invariant_measure_hull(sys)
    nu_max = max(vertices, key=lambda v: float(v.mass @ phi.phi))
    star = HatDualPoint(t=t_star, mu_bar=nu_max.scaled(mean_index(t_star)))
    bracket = hat_pairing(c, phi, star) - hat_tau(star, sys, oracle)
    residual = abs(lam_hat - bracket)
    records.append({"kind": "attainment", "mean_index": mean_index(t_star), "bracket": bracket,
                    "residual": residual})

    e0 = HatDualPoint(t=SimplexWeights.point_mass(0, N), mu_bar=FiniteMeasure.zero(sys.m))
    e0_bracket = hat_pairing(c, phi, e0) - hat_tau(e0, sys, oracle)
    records.append({"kind": "e0", "bracket": e0_bracket, "gap": lam_hat - e0_bracket})

    discrepancy = None
    tolerances = {"fenchel_young_gap": settings.FY_GAP_TOL, "attainment": settings.ATTAINMENT_TOL,
                  "mean_index": settings.MEAN_TOL, "hull": settings.HULL_TOL}
    if grids is not None:
        if N + 1 + sys.m <= settings.BRUTEFORCE_MAX_DIM:
            bf = bruteforce_hat_discrepancy(c, sys, N, grids, rng, oracle, threads)
            discrepancy = max(r["discrepancy"] for r in bf)
            records.extend(bf)
            tolerances.update(bruteforce=settings.BRUTEFORCE_TOL, c_step=grids.c_axis.step,
                              phi_step=grids.phi_axis.step)
        else:
            logger.warning("skipping brute-force conjugate: joint dimension %d > %d",
                           N + 1 + sys.m, settings.BRUTEFORCE_MAX_DIM)

    report = VerificationReport(fenchel_young_min_gap=min_gap, attainment_residual=residual,
                                bruteforce_max_discrepancy=discrepancy, hat_lambda=lam_hat,
                                spectral_exponent=lam, probes=records, tolerances=tolerances)
    logger.info("min gap %r, attainment residual %r, brute-force %r", min_gap, residual, discrepancy)
    return report


def tilde_tau_convexity_probe(N: int, trials: int, seed: int) -> ConvexityRecord:
    """Segment test for tilde_tau on its domain; mixed points must stay admissible"""
    rng = make_rng(seed)
    violations: List[float] = []
    inadmissible = 0
    for _ in range(trials):
        t1, t2 = (SimplexWeights.normalized(rng.dirichlet(np.ones(N + 1))) for _ in range(2))
        p1, p2 = TildePoint(t1, mean_index(t1)), TildePoint(t2, mean_index(t2))
        s = float(rng.uniform())
        mid = TildePoint(SimplexWeights.normalized(s * t1.weights + (1 - s) * t2.weights),
                         s * p1.a + (1 - s) * p2.a)
        if not in_tilde_domain(mid):
            inadmissible += 1
            continue
        violations.append(tilde_tau(mid) - (s * tilde_tau(p1) + (1 - s) * tilde_tau(p2)))
    return ConvexityRecord(max_violation=max(violations, default=NEG_INF), trials=trials,
                           admissible=len(violations), inadmissible_midpoints=inadmissible,
                           violations=violations)


def hat_tau_convexity_probe(sys: FiniteDynSystem, N: int, trials: int, seed: int,
                            oracle: LambdaStarOracle | None = None) -> ConvexityRecord:
    """
    Segment test for hat_tau on sampled admissible points.

    Also records the mixing identity
        (s mu1 + (1-s) mu2) / a = (s a1 / a) mu1 / a1 + ((1-s) a2 / a) mu2 / a2,
    a = s a1 + (1-s) a2, which keeps the normalized mixed measure on the hull.
    """
    oracle = oracle or numeric_lambda_star_oracle(sys)
    rng = make_rng(seed)
    violations: List[float] = []
    inadmissible = 0
    mixing_error = 0.0
    for _ in range(trials):
        p1, p2 = sample_hat_dual_points(sys, N, 2, rng)
        s = float(rng.uniform())
        a1, a2 = mean_index(p1.t), mean_index(p2.t)
        mid = HatDualPoint(t=SimplexWeights.normalized(s * p1.t.weights + (1 - s) * p2.t.weights),
                           mu_bar=FiniteMeasure(s * p1.mu_bar.mass + (1 - s) * p2.mu_bar.mass))
        a = s * a1 + (1 - s) * a2
        lhs = mid.mu_bar.mass / a
        rhs = (s * a1 / a) * (p1.mu_bar.mass / a1) + ((1 - s) * a2 / a) * (p2.mu_bar.mass / a2)
        mixing_error = max(mixing_error, float(np.abs(lhs - rhs).max()))
        if not in_hat_domain(mid, sys):
            inadmissible += 1
            continue
        values = [hat_tau(p, sys, oracle) for p in (mid, p1, p2)]
        violations.append(values[0] - (s * values[1] + (1 - s) * values[2]))
    return ConvexityRecord(max_violation=max(violations, default=NEG_INF), trials=trials,
                           admissible=len(violations), max_mixing_error=mixing_error,
                           inadmissible_midpoints=inadmissible, violations=violations)


def tilde_lambda_variational_check(c: CoefficientSeq, lam: float, N: int, trials: int = 100,
                                   seed: int = 0) -> dict:
    """
    tilde_lambda(c, lam) as max over (t, a) of sum c t + lam a - tilde_tau.

    residual is measured at the Gibbs maximizer, max_excess is the largest
    bracket minus tilde_lambda over random simplex points (<= 0 up to rounding).
    """
    if not lam < 0:
        raise DomainViolation(f"lam = {lam!r} is not negative")
    value = tilde_lambda(c, lam, N)
    rho = math.exp(lam)
    residual = abs(value - log_partition_bracket(c, rho, gibbs_maximizer(c, rho, N)))
    rng = make_rng(seed)
    excess = max(log_partition_bracket(c, rho, SimplexWeights.normalized(rng.dirichlet(np.ones(N + 1)))) - value
                 for _ in range(trials))
    return {"value": value, "residual": residual, "max_excess": excess, "trials": trials}
