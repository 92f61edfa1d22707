import argparse
import logging
import sys
from typing import Any, Dict, List, Optional

import yaml

from qrcurve_lab._version import __version__
from qrcurve_lab.commands import COMMANDS
from qrcurve_lab.commands.context import CommandContext
from qrcurve_lab.errors import ConfigError, LabError
from qrcurve_lab.logging import getLogger, set_level
from qrcurve_lab.middlewares.record_middleware import RecordMiddleware
from qrcurve_lab.models.config import ExperimentConfig, parse_config, set_path
from qrcurve_lab.services.common_services import CommonServices

logger = getLogger(__name__)

OVERRIDE_PATHS = {
    "seed": "seed",
    "workers": "workers",
    "out": "output.json",
    "csv": "output.csv",
    "radii": "radii",
    "p": "analysis.p",
    "delta": "analysis.delta",
    "budget": "quadrature.budget",
}


def _radii(text: str) -> List[float]:
    try:
        return [float(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"radii must be comma-separated numbers, got {text!r}") from None


def _expand_dotted(raw: Dict[str, Any]) -> Dict[str, Any]:
    """Nested mapping from a mapping whose keys may be dotted paths (``analysis.p: 3``)."""
    expanded: Dict[str, Any] = {}
    for key, value in raw.items():
        if isinstance(value, dict):
            value = _expand_dotted(value)
        if "." in str(key):
            set_path(expanded, str(key), value)
        elif isinstance(value, dict) and isinstance(expanded.get(key), dict):
            expanded[key].update(value)
        else:
            expanded[key] = value
    return expanded


def load_raw(config_path: Optional[str]) -> Dict[str, Any]:
    if config_path is None:
        return {}
    try:
        with open(config_path, encoding="utf-8") as handle:
            raw = yaml.safe_load(handle)
    except OSError as e:
        raise ConfigError([f"config: cannot read {config_path}: {e.strerror}"]) from None
    except yaml.YAMLError as e:
        raise ConfigError([f"config: {config_path} is not valid YAML: {e}"]) from None
    if raw is None:
        return {}
    if not isinstance(raw, dict):
        raise ConfigError([f"config: {config_path} must hold a mapping, got {type(raw).__name__}"])
    return _expand_dotted(raw)


def load_config(config_path: Optional[str], overrides: Optional[Dict[str, Any]] = None) -> ExperimentConfig:
    raw = load_raw(config_path)
    for path, value in (overrides or {}).items():
        set_path(raw, path, value)
    return parse_config(raw)


def validate(config_path: str) -> List[str]:
    """Every violated constraint as ``dotted.path: message``; an unreadable file raises ConfigError."""
    raw = load_raw(config_path)
    try:
        parse_config(raw)
    except ConfigError as e:
        return e.diagnostics
    return []


def run(
    subcommand: str,
    config_path: Optional[str] = None,
    overrides: Optional[Dict[str, Any]] = None,
    arguments: Optional[Dict[str, Any]] = None,
    services: Optional[CommonServices] = None,
) -> int:
    if subcommand not in COMMANDS:
        logger.error(f"[CLI] unknown subcommand {subcommand!r}")
        return 1
    try:
        config = load_config(config_path, overrides)
    except ConfigError as e:
        logger.error("[CLI] invalid config", extra={"context": {"diagnostics": e.diagnostics}})
        for line in e.diagnostics:
            print(line, file=sys.stderr)
        return e.exit_code

    logger.info("[CLI] registering common services")
    context = CommandContext(
        command=subcommand,
        config=config,
        services=services or CommonServices(),
        arguments={k: v for k, v in (arguments or {}).items() if v is not None},
    )
    exit_code = RecordMiddleware().dispatch(context, COMMANDS[subcommand].run)
    print(context.summary)
    return exit_code


def _add_common(parser: argparse.ArgumentParser):
    parser.add_argument("--config", metavar="PATH", help="YAML experiment config")
    parser.add_argument("--seed", type=int, help="seed for quadrature, optimizer, samples and ball families")
    parser.add_argument("--workers", type=int, help="worker threads for node evaluation")
    parser.add_argument("--out", metavar="PATH", help="JSON report path")
    parser.add_argument("--csv", metavar="PATH", help="CSV table path")
    parser.add_argument("--radii", type=_radii, help="comma-separated radius schedule")
    parser.add_argument("--p", type=float, help="integrability exponent")
    parser.add_argument("--delta", type=float, help="exception-set exponent")
    parser.add_argument("--budget", type=int, help="quadrature node or sample budget")


def create_cli() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qrcurve-lab", description="Numerical checks for quasiregular curves")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="count", default=0, help="-v for INFO, -vv for DEBUG logs")
    subparsers = parser.add_subparsers(dest="subcommand", required=True)
    for name, command in COMMANDS.items():
        subparser = subparsers.add_parser(name, help=command.HELP)
        _add_common(subparser)
        if name == "comass":
            subparser.add_argument("--expr", help='covector literal, e.g. "1.0 dx1^dx2 + 1.0 dx3^dx4"')
            subparser.add_argument("--dim", type=int, help="ambient dimension of the covector")
    validate_parser = subparsers.add_parser("validate", help="check a config without running anything")
    validate_parser.add_argument("--config", metavar="PATH", required=True, help="YAML experiment config")
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = create_cli().parse_args(argv)
    if args.verbose:
        set_level(logging.INFO if args.verbose == 1 else logging.DEBUG)

    if args.subcommand == "validate":
        try:
            found = validate(args.config)
        except LabError as e:
            print(e.detail, file=sys.stderr)
            return e.exit_code
        for line in found:
            print(line)
        if not found:
            print(f"{args.config}: ok")
        return 1 if found else 0

    overrides = {
        path: getattr(args, name) for name, path in OVERRIDE_PATHS.items() if getattr(args, name) is not None
    }
    arguments = {"expr": getattr(args, "expr", None), "dim": getattr(args, "dim", None)}
    return run(args.subcommand, args.config, overrides, arguments)
