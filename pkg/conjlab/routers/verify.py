import logging

from conjlab.config import settings
from conjlab.models import CommandResult, WeightFunction
from conjlab.schemas import VerifyParams
from conjlab.services.conjugate_theorem import (
    hat_tau_convexity_probe,
    tilde_tau_convexity_probe,
    verify_hat_conjugacy,
)
from conjlab.services.dynsys import hull_indicator_oracle, numeric_lambda_star_oracle

logger = logging.getLogger(__name__)


def run(params: VerifyParams, seed: int, threads: int) -> CommandResult:
    sys = params.system.to_model()
    phi = WeightFunction(params.phi)
    N = params.N if params.N is not None else 60
    c = params.coefficients(N)
    oracle = hull_indicator_oracle(sys) if params.oracle == "indicator" else numeric_lambda_star_oracle(sys)
    report = verify_hat_conjugacy(c, sys, phi, N, grids=params.grids(), seed=seed, oracle=oracle,
                                  probes=params.probes, threads=threads)
    payload = report.as_dict()
    payload["oracle"] = params.oracle
    if params.convexity_trials:
        tilde = tilde_tau_convexity_probe(N, params.convexity_trials, seed)
        hat = hat_tau_convexity_probe(sys, N, params.convexity_trials, seed, oracle)
        payload["convexity"] = {
            "tilde_tau_max_violation": tilde.max_violation,
            "tilde_tau_inadmissible_midpoints": tilde.inadmissible_midpoints,
            "hat_tau_max_violation": hat.max_violation,
            "hat_tau_max_mixing_error": hat.max_mixing_error,
            "hat_tau_inadmissible_midpoints": hat.inadmissible_midpoints,
            "trials": params.convexity_trials,
        }
    rows = []
    for k, probe in enumerate(report.probes):
        value = probe.get("gap", probe.get("residual", probe.get("discrepancy")))
        rows.append([k, probe["kind"], value])
    tolerances = dict(report.tolerances)
    tolerances["simplex"] = settings.SIMPLEX_TOL
    logger.info("verify: passed=%s", report.passed)
    return CommandResult(payload=payload, header=["probe", "kind", "value"], rows=rows, tolerances=tolerances)
