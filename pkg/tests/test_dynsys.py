import math

import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal

from conjlab.errors import (
    DimensionMismatch,
    InvalidSystem,
    NegativeEntry,
    NonSquare,
    NotBijective,
    RadiusNotSubcritical,
)
from conjlab.models import POS_INF, Axis, CoefficientSeq, FiniteDynSystem, FiniteMeasure, WeightFunction
from conjlab.services.dynsys import (
    cycles,
    hull_indicator_oracle,
    invariant_measure_hull,
    lambda_conjugate_numeric,
    max_cycle_average,
    operator_series_radius,
    polynomial_lambda,
    polynomial_lambda_conjugate,
    spectral_exponent,
    spectral_radius,
    transfer_matrix,
)
from tests.conftest import random_permutation

LN2 = math.log(2.0)
THREE_CYCLE = FiniteDynSystem(3, (1, 2, 0))
HALVING = WeightFunction([-LN2, -LN2])


# transfer_matrix

def test_transfer_matrix_examples(two_cycle):
    assert_array_equal(transfer_matrix(two_cycle, WeightFunction([0.0, 0.0])), [[0, 1], [1, 0]])
    A = transfer_matrix(THREE_CYCLE, WeightFunction([0.0, LN2, math.log(4.0)]))
    assert_allclose(A, [[0, 1, 0], [0, 0, 2], [4, 0, 0]], atol=1e-15)
    assert_allclose(transfer_matrix(FiniteDynSystem.identity(1), WeightFunction([0.3])), [[math.exp(0.3)]])


def test_transfer_matrix_dimension_mismatch(two_cycle):
    with pytest.raises(DimensionMismatch):
        transfer_matrix(two_cycle, WeightFunction([0.0, 0.0, 0.0]))


# spectral_radius

def test_spectral_radius_examples():
    assert spectral_radius([[0, 1, 0], [0, 0, 2], [4, 0, 0]]) == pytest.approx(2.0, abs=1e-9)
    assert spectral_radius(np.zeros((3, 3))) == 0.0
    assert spectral_radius(np.diag([0.3, 0.7])) == pytest.approx(0.7, rel=1e-12)


def test_spectral_radius_of_dense_positive_matrix(rng):
    A = rng.uniform(0.1, 1.0, size=(6, 6))
    assert spectral_radius(A) == pytest.approx(max(abs(np.linalg.eigvals(A))), rel=1e-10)


def test_spectral_radius_of_nilpotent_matrix():
    assert spectral_radius([[0.0, 1.0], [0.0, 0.0]]) == pytest.approx(0.0, abs=1e-9)


def test_spectral_radius_validation():
    with pytest.raises(NonSquare):
        spectral_radius(np.ones((2, 3)))
    with pytest.raises(NegativeEntry):
        spectral_radius([[1.0, -0.5], [0.0, 1.0]])


# spectral_exponent

def test_spectral_exponent_examples(identity2):
    assert spectral_exponent(THREE_CYCLE, WeightFunction([0.0, LN2, math.log(4.0)])) == pytest.approx(LN2, abs=1e-9)
    assert spectral_exponent(identity2, WeightFunction([0.3, 0.7])) == pytest.approx(0.7, abs=1e-12)
    assert spectral_exponent(THREE_CYCLE, WeightFunction.constant(-1.25, 3)) == pytest.approx(-1.25, abs=1e-10)


def test_spectral_exponent_matches_cycle_averages(rng):
    for _ in range(100):
        m = int(rng.integers(1, 9))
        sys = random_permutation(rng, m)
        phi = WeightFunction(rng.uniform(-2, 2, m))
        assert spectral_exponent(sys, phi) == pytest.approx(max_cycle_average(sys, phi), abs=1e-9)


def test_spectral_exponent_of_non_bijective_map():
    sys = FiniteDynSystem(4, (1, 2, 1, 0))
    phi = WeightFunction([5.0, 0.2, -0.6, 9.0])
    assert cycles(sys) == ((1, 2),)
    assert spectral_exponent(sys, phi) == pytest.approx(-0.2, abs=1e-9)


def test_spectral_exponent_is_convex_lipschitz_and_shift_covariant(rng):
    for _ in range(30):
        m = int(rng.integers(2, 7))
        sys = random_permutation(rng, m)
        phi, psi = rng.uniform(-2, 2, m), rng.uniform(-2, 2, m)
        lam = lambda v: spectral_exponent(sys, WeightFunction(v))
        assert lam(0.5 * (phi + psi)) <= 0.5 * (lam(phi) + lam(psi)) + 1e-10
        assert abs(lam(phi) - lam(psi)) <= np.max(np.abs(phi - psi)) + 1e-10
        assert lam(phi + 0.75) == pytest.approx(lam(phi) + 0.75, abs=1e-10)


# invariant measures

def test_invariant_measure_hull_examples(two_cycle, identity2):
    (nu,) = invariant_measure_hull(THREE_CYCLE)
    assert_allclose(nu.mass, [1 / 3] * 3)
    assert [list(v.mass) for v in invariant_measure_hull(identity2)] == [[1.0, 0.0], [0.0, 1.0]]
    (nu,) = invariant_measure_hull(two_cycle)
    assert_allclose(nu.mass, [0.5, 0.5])


def test_invariant_measure_hull_needs_bijection():
    with pytest.raises(NotBijective):
        invariant_measure_hull(FiniteDynSystem(3, (0, 0, 1)))


def test_hull_indicator_oracle(two_cycle):
    oracle = hull_indicator_oracle(two_cycle)
    assert oracle(FiniteMeasure([0.5, 0.5])) == 0.0
    assert oracle(FiniteMeasure([1.0, 0.0])) == POS_INF


# lambda_conjugate_numeric

BOX = Axis(-2.0, 2.0, 41)


def test_lambda_star_on_simplex_for_identity(identity2):
    for mass in ([0.5, 0.5], [1.0, 0.0]):
        est = lambda_conjugate_numeric(identity2, FiniteMeasure(mass), BOX)
        assert est.value == pytest.approx(0.0, abs=5e-2)
        assert not est.infinite


def test_lambda_star_grows_with_box_off_hull(identity2):
    est = lambda_conjugate_numeric(identity2, FiniteMeasure([2.0, 0.0]), BOX)
    assert est.value == pytest.approx(est.box_radius, abs=5e-2)
    assert est.infinite and est.extended_value == POS_INF
    wider = lambda_conjugate_numeric(identity2, FiniteMeasure([2.0, 0.0]), Axis(-4.0, 4.0, 41))
    assert wider.value == pytest.approx(2 * est.value, abs=1e-1)


@pytest.mark.parametrize("system", ["identity2", "two_cycle"])
def test_variational_principle_over_hull(request, rng, system):
    sys = request.getfixturevalue(system)
    vertices = invariant_measure_hull(sys)
    star = [lambda_conjugate_numeric(sys, nu, BOX).value for nu in vertices]
    for _ in range(50):
        phi = WeightFunction(rng.uniform(-2, 2, sys.m))
        recovered = max(float(nu.mass @ phi.phi) - s for nu, s in zip(vertices, star))
        assert recovered == pytest.approx(spectral_exponent(sys, phi), abs=5e-2)


def test_lambda_star_dimension_mismatch(two_cycle):
    with pytest.raises(DimensionMismatch):
        lambda_conjugate_numeric(two_cycle, FiniteMeasure([1.0]), BOX)


# operator_series_radius

def test_operator_series_neumann(two_cycle, zeros60):
    pair = operator_series_radius(zeros60, two_cycle, HALVING, 60)
    assert pair.via_matrix == pytest.approx(2.0, abs=1e-9)
    assert pair.via_scalar == pytest.approx(2.0, abs=1e-9)


def test_operator_series_constant_term(two_cycle):
    pair = operator_series_radius(CoefficientSeq([0.4]), two_cycle, HALVING, 0)
    assert pair.via_matrix == pytest.approx(math.exp(0.4), rel=1e-12)
    assert pair.via_scalar == pytest.approx(math.exp(0.4), rel=1e-12)


def test_operator_series_identity_shift(two_cycle):
    pair = operator_series_radius(CoefficientSeq.zeros(1), two_cycle, HALVING, 1)
    assert pair.via_matrix == pytest.approx(1.5, abs=1e-10)
    assert pair.via_scalar == pytest.approx(1.5, abs=1e-12)


def test_operator_series_commutes_with_radius(rng):
    for _ in range(20):
        m = int(rng.integers(1, 7))
        sys = random_permutation(rng, m)
        phi = WeightFunction(rng.uniform(-2.0, -0.3, m))
        c = CoefficientSeq(rng.normal(0.0, 0.5, 41))
        pair = operator_series_radius(c, sys, phi, 40)
        assert pair.discrepancy <= 1e-8 * max(1.0, pair.via_scalar)


def test_operator_series_needs_subcritical_radius(two_cycle, zeros60):
    with pytest.raises(RadiusNotSubcritical):
        operator_series_radius(zeros60, two_cycle, WeightFunction([0.0, 0.0]), 60)


# polynomial operator functional

def test_polynomial_lambda(two_cycle):
    value = polynomial_lambda(CoefficientSeq.zeros(2), two_cycle, HALVING, 2)
    assert value == pytest.approx(math.log(1.75), abs=1e-12)


def test_polynomial_lambda_conjugate_branches(two_cycle):
    a_log = CoefficientSeq.zeros(2)
    assert polynomial_lambda_conjugate(FiniteMeasure([0.5, 0.5]), a_log, two_cycle, 2) == pytest.approx(
        -math.log(3.0), abs=1e-9)
    assert polynomial_lambda_conjugate(FiniteMeasure([1.0, 1.0]), a_log, two_cycle, 2) == pytest.approx(0.0, abs=1e-12)
    assert polynomial_lambda_conjugate(FiniteMeasure([1.5, 1.5]), a_log, two_cycle, 2) == POS_INF
    assert polynomial_lambda_conjugate(FiniteMeasure([1.0, 0.0]), a_log, two_cycle, 2) == POS_INF
    assert polynomial_lambda_conjugate(FiniteMeasure.zero(2), CoefficientSeq([0.3, 0, 0]), two_cycle, 2) == -0.3


# ingestion

def test_system_from_json_names_bad_index():
    with pytest.raises(InvalidSystem) as err:
        FiniteDynSystem.from_json({"states": 3, "map": [1, 7, 0], "p": 2.0})
    assert err.value.index == 1


def test_system_from_json():
    sys = FiniteDynSystem.from_json({"states": 2, "map": [1, 0], "p": 2.0})
    assert sys == FiniteDynSystem(2, (1, 0), 2.0)
    assert sys.is_bijective


def test_weight_from_json_names_bad_index():
    with pytest.raises(InvalidSystem) as err:
        WeightFunction.from_json({"phi": [0.0, 1.0, float("inf")]})
    assert err.value.index == 2


def test_exponent_survives_underflowing_weights(identity2):
    # e^-800 underflows to 0 in double precision
    assert spectral_exponent(identity2, WeightFunction([-800.0, -800.0])) == pytest.approx(-800.0, abs=1e-9)
    sys = FiniteDynSystem(2, (1, 1))
    assert spectral_exponent(sys, WeightFunction([0.0, -800.0])) == pytest.approx(-800.0, abs=1e-9)
    assert spectral_exponent(THREE_CYCLE, WeightFunction.constant(-1000.0, 3)) == pytest.approx(-1000.0, abs=1e-9)


def test_exponent_survives_overflowing_weights(two_cycle):
    # e^720 overflows to inf in double precision
    assert spectral_exponent(two_cycle, WeightFunction([720.0, 720.0])) == pytest.approx(720.0, abs=1e-9)
    assert spectral_exponent(THREE_CYCLE, WeightFunction([710.0, 800.0, 900.0])) == pytest.approx(
        (710.0 + 800.0 + 900.0) / 3, abs=1e-9)


def test_exponent_is_shift_covariant_at_large_shifts(rng):
    for _ in range(20):
        sys = random_permutation(rng, 6)
        phi = rng.normal(size=6)
        base = spectral_exponent(sys, WeightFunction(phi))
        for s in (-900.0, 750.0, 1e4):
            assert spectral_exponent(sys, WeightFunction(phi + s)) == pytest.approx(base + s, abs=1e-8)
