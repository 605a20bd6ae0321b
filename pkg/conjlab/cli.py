"""
Batch front end.

    conjlab <command> --config <path> [--out <path>] [--format json|csv] [--seed k] [--threads n]

The config file is either a full scenario ({"command", "params", ...}) or the
params map alone. Exit codes: 0 success, 1 config error, 2 domain error.
"""
import argparse
import json
import logging
import sys
from pathlib import Path
from typing import List, Optional

from jinja2 import Environment, FileSystemLoader
from pydantic import ValidationError

from conjlab import presets
from conjlab.config import BASE_DIR, settings
from conjlab.errors import ConfigError, ConfigInvalid, DomainError
from conjlab.models import Command, OutputFormat
from conjlab.routers import conjugate, dynsys, entropy, series, verify
from conjlab.schemas import PARAMS_BY_COMMAND, ExitReport, ScenarioConfig
from conjlab.services.fenchel import write_gridded
from conjlab.utils import format_real, write_csv, write_json

logger = logging.getLogger(__name__)

HANDLERS = {
    Command.SERIES: series.run,
    Command.ENTROPY: entropy.run,
    Command.CONJUGATE: conjugate.run,
    Command.DYNSYS: dynsys.run,
    Command.VERIFY: verify.run,
}

templates = Environment(loader=FileSystemLoader(BASE_DIR / "templates"), keep_trailing_newline=True)
templates.filters["real"] = format_real


def config_invalid(exc: ValidationError, prefix: str = "") -> ConfigInvalid:
    """Name the first offending key of a pydantic validation error"""
    err = exc.errors()[0]
    key = ".".join(str(part) for part in err["loc"]) or "config"
    return ConfigInvalid(prefix + key, err["msg"])


def validate_params(config: ScenarioConfig):
    raw = presets.resolve(config.command, config.params)
    try:
        return PARAMS_BY_COMMAND[config.command].model_validate(raw)
    except ValidationError as exc:
        raise config_invalid(exc, "params.") from exc


def output_path(config: ScenarioConfig) -> Path:
    if config.output_path:
        return Path(config.output_path)
    return settings.OUTPUT_DIR / f"{config.command.value}.{config.format.value}"


def execute(config: ScenarioConfig) -> ExitReport:
    command = config.command.value
    try:
        params = validate_params(config)
        result = HANDLERS[config.command](params, config.seed, config.threads)
    except ConfigError as exc:
        logger.error("config error: %s", exc)
        return ExitReport(command=command, status=1, message=f"{type(exc).__name__}: {exc}")
    except DomainError as exc:
        logger.error("domain error: %s", exc)
        return ExitReport(command=command, status=2, message=f"{type(exc).__name__}: {exc}")

    out = output_path(config)
    artifacts: List[Path] = []
    if config.format is OutputFormat.JSON:
        payload = dict(result.payload)
        payload["command"] = command
        payload["seed"] = config.seed
        payload["tolerances"] = result.tolerances
        artifacts.append(write_json(payload, out))
    else:
        artifacts.append(write_csv(result.header, result.rows, out))
    for name, grid in result.grids.items():
        artifacts.extend(write_gridded(grid, out.with_name(f"{out.stem}_{name}")))
    logger.info("%s finished, %d artifacts", command, len(artifacts))
    return ExitReport(command=command, status=0, artifacts=[str(p) for p in artifacts],
                      tolerances=result.tolerances)


def render_report(report: ExitReport) -> str:
    return templates.get_template("exit_report.txt").render(report=report)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="conjlab", description="Numerical convex-conjugate toolkit")
    parser.add_argument("command", choices=[c.value for c in Command])
    parser.add_argument("--config", required=True, type=Path, help="scenario or params JSON")
    parser.add_argument("--out", default=None, help="output file (default: $CONJLAB_OUTPUT_DIR/<command>.<format>)")
    parser.add_argument("--format", choices=[f.value for f in OutputFormat], default=None)
    parser.add_argument("--seed", type=int, default=None)
    parser.add_argument("--threads", type=int, default=None)
    return parser


def load_config(args: argparse.Namespace) -> ScenarioConfig:
    try:
        data = json.loads(args.config.read_text(encoding="utf-8"))
    except OSError as exc:
        raise ConfigInvalid("config", f"cannot read {args.config}: {exc.strerror}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigInvalid("config", f"invalid JSON: {exc.msg} at line {exc.lineno}") from exc
    if not isinstance(data, dict):
        raise ConfigInvalid("config", "top level must be an object")
    scenario = data if "params" in data else {"params": data}
    if scenario.get("command", args.command) != args.command:
        raise ConfigInvalid("command", f"config is for {scenario['command']!r}, invoked as {args.command!r}")
    scenario["command"] = args.command
    overrides = {"output_path": args.out, "format": args.format, "seed": args.seed, "threads": args.threads}
    scenario.update({k: v for k, v in overrides.items() if v is not None})
    try:
        return ScenarioConfig.model_validate(scenario)
    except ValidationError as exc:
        raise config_invalid(exc) from exc


def main(argv: Optional[List[str]] = None) -> int:
    logging.basicConfig(level=settings.LOG_LEVEL.upper(),
                        format="%(asctime)s - %(name)s - %(levelname)s - %(message)s")
    args = build_parser().parse_args(argv)
    try:
        config = load_config(args)
    except ConfigError as exc:
        report = ExitReport(command=args.command, status=1, message=f"{type(exc).__name__}: {exc}")
    else:
        report = execute(config)
    sys.stdout.write(render_report(report))
    return report.status
