"""Named scenarios: each preset is a command plus default params"""
import math
from typing import Any, Dict, Tuple

from conjlab.errors import ConfigInvalid
from conjlab.models import Command

LN2 = math.log(2.0)

TWO_CYCLE = {"states": 2, "map": [1, 0], "p": 1.0}
IDENTITY_1 = {"states": 1, "map": [0], "p": 1.0}

PRESETS: Dict[str, Tuple[Command, Dict[str, Any]]] = {
    # geometric series: ln sum r^n = -ln(1 - r), maximizer (1 - r) r^n
    "geom": (Command.SERIES, {"c": "zeros", "rho": 0.5, "N": 60}),
    "example-2-2": (Command.ENTROPY, {
        "task": "divergence",
        "generator": "inverse_square",
        "schedule": [10 ** 3, 10 ** 4, 10 ** 5, 10 ** 6, 10 ** 7],
    }),
    "przyk": (Command.ENTROPY, {
        "task": "divergence",
        "generator": "inverse_n_log_sq",
        "schedule": [10 ** 4, 10 ** 5, 10 ** 6, 10 ** 7],
    }),
    "logexp-remark": (Command.CONJUGATE, {
        "function": "logsumexp",
        "primal": [{"lo": -4.0, "hi": 4.0, "count": 161}] * 2,
        "dual_points": [[0.25, 0.75], [0.5, 0.5], [0.75, 0.25]],
        "compare": "neg_entropy",
    }),
    "theorem-2cycle": (Command.VERIFY, {
        "c": "zeros",
        "N": 60,
        "system": TWO_CYCLE,
        "phi": [-LN2, -LN2],
        "probes": 100,
    }),
    "theorem-lowdim": (Command.VERIFY, {
        "c": "zeros",
        "N": 1,
        "system": IDENTITY_1,
        "phi": [-1.0],
        "probes": 100,
        "c_axis": {"lo": -4.0, "hi": 4.0, "count": 33},
        "phi_axis": {"lo": -3.0, "hi": -0.25, "count": 12},
        "grid_probes": 20,
    }),
    "polynomial-2cycle": (Command.DYNSYS, {
        "c": "zeros",
        "N": 60,
        "system": TWO_CYCLE,
        "phi": [-LN2, -LN2],
        "a_log": [0.0, 0.0, 0.0],
        "measures": [{"mass": [0.5, 0.5]}, {"mass": [1.0, 1.0]}, {"mass": [1.0, 0.0]}],
    }),
}


def resolve(command: Command, params: Dict[str, Any]) -> Dict[str, Any]:
    """Expand params["preset"]; explicit params override preset defaults"""
    if "preset" not in params:
        return params
    name = params["preset"]
    if name not in PRESETS:
        raise ConfigInvalid("params.preset", f"unknown preset {name!r}; known: {', '.join(sorted(PRESETS))}")
    preset_command, defaults = PRESETS[name]
    if preset_command is not command:
        raise ConfigInvalid("params.preset", f"preset {name!r} belongs to command {preset_command.value!r}")
    merged = dict(defaults)
    merged.update({k: v for k, v in params.items() if k != "preset"})
    return merged
