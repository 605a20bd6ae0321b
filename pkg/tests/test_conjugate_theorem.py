import json
import math

import numpy as np
import pytest

from conjlab.errors import DomainViolation, OracleFailure
from conjlab.models import (
    POS_INF,
    Axis,
    BruteForceGrids,
    CoefficientSeq,
    FiniteDynSystem,
    FiniteMeasure,
    HatDualPoint,
    SimplexWeights,
    TildePoint,
    WeightFunction,
)
from conjlab.services.conjugate_theorem import (
    f_t_value,
    hat_lambda,
    hat_pairing,
    hat_tau,
    hat_tau_convexity_probe,
    in_hat_domain,
    sample_hat_dual_points,
    tilde_lambda,
    tilde_lambda_variational_check,
    tilde_tau,
    tilde_tau_convexity_probe,
    verify_hat_conjugacy,
)
from conjlab.services.dynsys import hull_indicator_oracle
from conjlab.services.series import mean_index

LN2 = math.log(2.0)
HALVING = WeightFunction([-LN2, -LN2])


# tilde_lambda / tilde_tau

def test_tilde_lambda_examples(zeros60):
    assert tilde_lambda(zeros60, math.log(0.5), 60) == pytest.approx(LN2, abs=1e-12)
    assert tilde_lambda(zeros60, 0.0, 60) == POS_INF
    assert tilde_lambda(CoefficientSeq([0.0, 0.0]), -1.0, 1) == pytest.approx(math.log1p(math.exp(-1.0)), abs=1e-15)


def test_f_t_value_examples(geometric_half):
    assert f_t_value(geometric_half, 1.0) == pytest.approx(-2 * LN2, abs=1e-9)
    e0 = SimplexWeights.point_mass(0, 3)
    assert f_t_value(e0, 0.0) == 0.0
    assert f_t_value(e0, 1.0) == POS_INF


def test_tilde_tau_examples(geometric_half):
    assert tilde_tau(TildePoint(geometric_half, 1.0)) == pytest.approx(-2 * LN2, abs=1e-9)
    assert tilde_tau(TildePoint(SimplexWeights.point_mass(0, 2), 0.0)) == 0.0
    assert tilde_tau(TildePoint(SimplexWeights.uniform(2), 0.5)) == POS_INF


def test_tilde_lambda_variational_principle(rng):
    for _ in range(50):
        N = int(rng.integers(0, 81))
        c = CoefficientSeq(rng.normal(0.0, 1.5, N + 1))
        lam = float(rng.uniform(-3.0, -0.05))
        check = tilde_lambda_variational_check(c, lam, N, trials=100, seed=int(rng.integers(1 << 31)))
        assert check["residual"] <= 1e-10
        assert check["max_excess"] <= 1e-12


def test_tilde_lambda_check_needs_negative_exponent(zeros60):
    with pytest.raises(DomainViolation):
        tilde_lambda_variational_check(zeros60, 0.0, 60)
    with pytest.raises(DomainViolation):
        tilde_lambda_variational_check(zeros60, math.nan, 60)


def test_tilde_lambda_rejects_nan_exponent(zeros60):
    with pytest.raises(DomainViolation):
        tilde_lambda(zeros60, math.nan, 60)


# hat_lambda

def test_hat_lambda_examples(two_cycle, zeros60):
    assert hat_lambda(zeros60, two_cycle, HALVING, 60) == pytest.approx(LN2, abs=1e-9)
    assert hat_lambda(zeros60, two_cycle, WeightFunction([0.0, 0.0]), 60) == POS_INF
    identity1 = FiniteDynSystem.identity(1)
    expected = -math.log1p(-math.exp(-1.0))
    assert hat_lambda(zeros60, identity1, WeightFunction([-1.0]), 60) == pytest.approx(expected, abs=1e-12)


def test_hat_lambda_is_monotone_in_coefficients(rng, two_cycle):
    c = rng.normal(size=21)
    base = hat_lambda(CoefficientSeq(c), two_cycle, HALVING, 20)
    for n in range(21):
        lowered = c.copy()
        lowered[n] -= 0.5
        assert hat_lambda(CoefficientSeq(lowered), two_cycle, HALVING, 20) < base


# hat_tau

def test_hat_tau_on_hull_point(two_cycle, geometric_half):
    pt = HatDualPoint(geometric_half, FiniteMeasure([0.5, 0.5]))
    assert hat_tau(pt, two_cycle, hull_indicator_oracle(two_cycle)) == pytest.approx(-2 * LN2, abs=1e-9)
    assert hat_tau(pt, two_cycle) == pytest.approx(-2 * LN2, abs=1e-9)


def test_hat_tau_at_e0(two_cycle):
    pt = HatDualPoint(SimplexWeights.point_mass(0, 5), FiniteMeasure.zero(2))
    assert hat_tau(pt, two_cycle) == 0.0
    loaded = HatDualPoint(SimplexWeights.point_mass(0, 5), FiniteMeasure([0.1, 0.1]))
    assert hat_tau(loaded, two_cycle) == POS_INF


def test_hat_tau_mass_mismatch(two_cycle):
    pt = HatDualPoint(SimplexWeights.uniform(2), FiniteMeasure([1.0, 1.0]))
    assert hat_tau(pt, two_cycle, hull_indicator_oracle(two_cycle)) == POS_INF


def test_hat_tau_off_hull_is_infinite_with_indicator(two_cycle):
    pt = HatDualPoint(SimplexWeights.uniform(2), FiniteMeasure([1.0, 0.0]))
    assert hat_tau(pt, two_cycle, hull_indicator_oracle(two_cycle)) == POS_INF


def test_hat_tau_off_hull_is_infinite_with_numeric_estimate(two_cycle):
    # mean index 1/2, normalized measure (0.55, 0.45) is not constant on the 2-cycle
    pt = HatDualPoint(SimplexWeights.uniform(2), FiniteMeasure([0.275, 0.225]))
    assert hat_tau(pt, two_cycle) == POS_INF
    assert not in_hat_domain(pt, two_cycle)


def test_hat_tau_off_hull_skips_the_oracle(two_cycle):
    def unreachable(nu):
        raise AssertionError("oracle consulted off the hull")

    pt = HatDualPoint(SimplexWeights.uniform(2), FiniteMeasure([0.5, 0.0]))
    assert hat_tau(pt, two_cycle, unreachable) == POS_INF


def test_hat_tau_wraps_oracle_errors(two_cycle, geometric_half):
    def broken(nu):
        raise RuntimeError("solver diverged")

    with pytest.raises(OracleFailure):
        hat_tau(HatDualPoint(geometric_half, FiniteMeasure([0.5, 0.5])), two_cycle, broken)
    with pytest.raises(OracleFailure):
        hat_tau(HatDualPoint(geometric_half, FiniteMeasure([0.5, 0.5])), two_cycle, lambda nu: math.nan)


def test_sampled_dual_points_are_admissible(rng, identity2):
    points = sample_hat_dual_points(identity2, 12, 50, rng)
    assert all(in_hat_domain(p, identity2) for p in points)
    assert all(not p.t.is_point_mass(0) for p in points)


# verify_hat_conjugacy

def test_conjugacy_on_two_cycle(two_cycle, zeros60):
    report = verify_hat_conjugacy(zeros60, two_cycle, HALVING, 60, seed=7)
    assert report.fenchel_young_min_gap >= -1e-8
    assert report.attainment_residual <= 1e-8
    assert report.hat_lambda == pytest.approx(LN2, abs=1e-9)
    assert report.bruteforce_max_discrepancy is None
    assert report.passed
    fy = [p for p in report.probes if p["kind"] == "fenchel_young"]
    assert len(fy) == 100


def test_attainment_bracket_equals_hat_lambda(two_cycle, zeros60):
    report = verify_hat_conjugacy(zeros60, two_cycle, HALVING, 60, oracle=hull_indicator_oracle(two_cycle))
    (attained,) = [p for p in report.probes if p["kind"] == "attainment"]
    assert attained["bracket"] == pytest.approx(LN2, abs=1e-9)


def test_e0_bracket_stays_below_hat_lambda(rng, two_cycle):
    for _ in range(10):
        c = CoefficientSeq(rng.normal(size=11))
        phi = WeightFunction(rng.uniform(-2.0, -0.1, 2))
        report = verify_hat_conjugacy(c, two_cycle, phi, 10, probes=5, seed=1)
        (e0,) = [p for p in report.probes if p["kind"] == "e0"]
        assert e0["bracket"] == pytest.approx(c.coeffs[0], abs=1e-12)
        assert e0["gap"] > 0


def test_conjugacy_rejects_supercritical_weights(two_cycle, zeros60):
    with pytest.raises(DomainViolation):
        verify_hat_conjugacy(zeros60, two_cycle, WeightFunction([0.0, 0.2]), 60)
    with pytest.raises(DomainViolation):
        verify_hat_conjugacy(zeros60, two_cycle, WeightFunction([800.0, 800.0]), 60)


def test_hat_lambda_with_deeply_negative_weights(two_cycle, zeros60):
    # lambda = -800, so every term past n = 0 vanishes
    assert hat_lambda(zeros60, two_cycle, WeightFunction([-800.0, -800.0]), 60) == pytest.approx(0.0, abs=1e-12)


@pytest.mark.slow
def test_bruteforce_joint_conjugate_low_dimension():
    identity1 = FiniteDynSystem.identity(1)
    grids = BruteForceGrids(c_axis=Axis(-4.0, 4.0, 33), phi_axis=Axis(-3.0, -0.25, 12), probes=20)
    report = verify_hat_conjugacy(CoefficientSeq.zeros(1), identity1, WeightFunction([-1.0]), 1,
                                  grids=grids, seed=11)
    assert report.bruteforce_max_discrepancy is not None
    assert report.bruteforce_max_discrepancy <= 5e-2
    assert report.passed


def test_bruteforce_probe_at_symmetric_point():
    # (t, mu_bar) = ((1/2, 1/2), 1/2 delta_0): hat_tau = -ln 2
    identity1 = FiniteDynSystem.identity(1)
    pt = HatDualPoint(SimplexWeights([0.5, 0.5]), FiniteMeasure([0.5]))
    assert hat_tau(pt, identity1) == pytest.approx(-LN2, abs=1e-9)


def test_report_serializes_deterministically(two_cycle, zeros60):
    first = verify_hat_conjugacy(zeros60, two_cycle, HALVING, 60, probes=10, seed=3).to_json()
    second = verify_hat_conjugacy(zeros60, two_cycle, HALVING, 60, probes=10, seed=3, threads=3).to_json()
    assert first == second
    payload = json.loads(first)
    assert {"fenchel_young_min_gap", "attainment_residual", "bruteforce_max_discrepancy", "probes"} <= set(payload)


# convexity

def test_tilde_tau_is_convex():
    record = tilde_tau_convexity_probe(15, 200, seed=5)
    assert record.max_violation <= 1e-9
    assert record.inadmissible_midpoints == 0


@pytest.mark.parametrize("oracle_kind", ["indicator", "numeric"])
def test_hat_tau_is_convex_on_two_cycle(two_cycle, oracle_kind):
    oracle = hull_indicator_oracle(two_cycle) if oracle_kind == "indicator" else None
    record = hat_tau_convexity_probe(two_cycle, 10, 200, seed=9, oracle=oracle)
    assert record.max_violation <= 1e-9
    assert record.max_mixing_error <= 1e-12
    assert record.inadmissible_midpoints == 0


def test_hat_tau_is_convex_with_several_cycles():
    sys = FiniteDynSystem(5, (1, 0, 3, 4, 2))
    record = hat_tau_convexity_probe(sys, 8, 200, seed=13, oracle=hull_indicator_oracle(sys))
    assert record.max_violation <= 1e-9
    assert record.inadmissible_midpoints == 0


def test_hat_pairing(two_cycle):
    pt = HatDualPoint(SimplexWeights([0.25, 0.75]), FiniteMeasure([0.375, 0.375]))
    c = CoefficientSeq([1.0, 2.0])
    assert hat_pairing(c, WeightFunction([1.0, -1.0]), pt) == pytest.approx(0.25 + 1.5)
    assert mean_index(pt.t) == pytest.approx(pt.mu_bar.total)
    assert np.isfinite(hat_tau(pt, two_cycle, hull_indicator_oracle(two_cycle)))
