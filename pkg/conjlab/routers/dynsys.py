import logging

from conjlab.config import settings
from conjlab.models import CoefficientSeq, CommandResult, WeightFunction
from conjlab.schemas import DynsysParams
from conjlab.services.dynsys import (
    DEFAULT_PHI_AXIS,
    cycles,
    lambda_conjugate_numeric,
    max_cycle_average,
    operator_series_radius,
    polynomial_lambda,
    polynomial_lambda_conjugate,
    spectral_exponent,
    spectral_radius,
    transfer_matrix,
)

logger = logging.getLogger(__name__)


def run(params: DynsysParams, seed: int, threads: int) -> CommandResult:
    sys = params.system.to_model()
    phi = WeightFunction(params.phi)
    A = transfer_matrix(sys, phi)
    rho = spectral_radius(A)
    lam = spectral_exponent(sys, phi)
    payload = {
        "states": sys.m,
        "bijective": sys.is_bijective,
        "cycles": [list(c) for c in cycles(sys)],
        "spectral_radius": rho,
        "spectral_exponent": lam,
        "max_cycle_average": max_cycle_average(sys, phi),
    }
    tolerances = {"spectral": settings.SPECTRAL_TOL, "shift": settings.SPECTRAL_SHIFT}

    if params.series and rho < 1:
        N = params.N if params.N is not None else 60
        pair = operator_series_radius(params.coefficients(N), sys, phi, N)
        payload["operator_series"] = {"N": N, "via_matrix": pair.via_matrix, "via_scalar": pair.via_scalar,
                                      "tail_bound": pair.tail_bound, "discrepancy": pair.discrepancy}

    box = params.phi_box.to_model() if params.phi_box else DEFAULT_PHI_AXIS
    rows = []
    measures = [m.to_model() for m in params.measures]
    estimates = []
    for k, nu in enumerate(measures):
        est = lambda_conjugate_numeric(sys, nu, box, threads)
        estimates.append({"mass": list(nu.mass), "value": est.value, "box_radius": est.box_radius,
                          "infinite": est.infinite})
        rows.append([k, nu.total, est.value, est.box_radius, est.infinite])
    if estimates:
        payload["lambda_star"] = estimates
        tolerances.update(phi_step=box.step, infinity_threshold=settings.INFINITY_THRESHOLD)

    if params.a_log is not None:
        a_log = CoefficientSeq(params.a_log)
        N = a_log.trunc_N
        payload["polynomial"] = {
            "N": N,
            "lambda": polynomial_lambda(a_log, sys, phi, N),
            "conjugate": [polynomial_lambda_conjugate(nu, a_log, sys, N) for nu in measures],
        }
    logger.info("dynsys: m=%d lambda=%r", sys.m, lam)
    return CommandResult(payload=payload, header=["measure", "total_mass", "lambda_star", "box_radius", "infinite"],
                         rows=rows, tolerances=tolerances)
