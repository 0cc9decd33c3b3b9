"""``deidbench`` command line.

Exit codes: 0 success, 1 invalid input or configuration, 2 runtime failure.
Diagnostics go to stderr; stdout carries only machine-readable output (one
path per line, or a YAML snippet for ``ensemble-config``).
"""

from __future__ import annotations

import argparse
import logging
import sys

import yaml

from . import __version__
from .ensemble import configure_attribute_guided
from .errors import ConfigError, DeidError, NoViableMethod, UnknownAttribute, WeightError
from .pipeline.config import CONFIG_DIR_ENV, accepted_keys, validate_config
from .profiles import load_profiles

VALIDATION_ERRORS = (ConfigError, UnknownAttribute, NoViableMethod, WeightError)

log = logging.getLogger("deidbench")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def keys_epilog() -> str:
    width = max(len(k) for k, _ in accepted_keys())
    lines = ["accepted YAML keys (use dotted paths with --set):"]
    lines += [f"  {k.ljust(width)}  {text}" for k, text in accepted_keys()]
    lines.append("")
    lines.append(f"relative --config paths are also looked up in ${CONFIG_DIR_ENV}.")
    return "\n".join(lines)


def build_parser() -> argparse.ArgumentParser:
    epilog = keys_epilog()
    fmt = argparse.RawDescriptionHelpFormatter
    parser = _Parser(prog="deidbench", description="Face de-identification pipeline and evaluation.",
                     epilog=epilog, formatter_class=fmt)
    parser.add_argument("-v", "--verbose", action="count", default=0, help="more log output on stderr")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND", parser_class=_Parser)

    def config_cmd(name, text):
        p = sub.add_parser(name, help=text, description=text, epilog=epilog, formatter_class=fmt)
        p.add_argument("--config", "-c", required=True, help="experiment YAML file")
        p.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
                       help="override a config value by dotted path (repeatable)")
        p.add_argument("-v", "--verbose", action="count", default=argparse.SUPPRESS)
        return p

    for name, text in (("deid", "de-identify a dataset and write images plus reports"),
                       ("video", "de-identify a frame sequence with detection skipping"),
                       ("eval", "evaluate existing outputs and ingested embeddings/predictions")):
        config_cmd(name, text).add_argument("--jobs", "-j", type=int, default=None, help="worker processes")
    p = config_cmd("validate", "check a config strictly and exit")
    p.add_argument("--dump", action="store_true", help="print the fully resolved config as YAML")

    p = sub.add_parser("ensemble-config", help="print an attribute-guided ensemble block",
                       description="Rank methods by their preservation profiles and print a YAML ensemble block.")
    p.add_argument("--preserve", default="", help="comma-separated attributes to keep")
    p.add_argument("--suppress", default="identity", help="comma-separated attributes to remove (must include identity)")
    p.add_argument("--profiles", help="profile store JSON (default: built-in store)")
    p.add_argument("--reference-dataset", help="gallery manifest filled into k-Same members")
    p.add_argument("-v", "--verbose", action="count", default=argparse.SUPPRESS)

    sub.add_parser("version", help="print the version")
    return parser


def _split(text):
    return [t.strip() for t in (text or "").split(",") if t.strip()]


def _load(args):
    overrides = list(args.overrides)
    if getattr(args, "jobs", None) is not None:
        overrides.append(f"jobs={args.jobs}")
    return validate_config(args.config, overrides)


def _cmd_run(args, runner):
    from .pipeline.report import emit_report

    cfg = _load(args)
    report = runner(cfg)
    emit_report(report, cfg["output_dir"])
    failed = report.aggregates.get("n_failed", 0)
    if failed:
        log.warning("%d item(s) failed; see results.json", failed)
    print(cfg["output_dir"])
    return 0


def cmd_deid(args):
    from .pipeline.runner import run_image_job
    return _cmd_run(args, run_image_job)


def cmd_video(args):
    from .pipeline.runner import run_video_job
    return _cmd_run(args, run_video_job)


def cmd_eval(args):
    from .pipeline.runner import run_evaluation
    return _cmd_run(args, run_evaluation)


def cmd_validate(args):
    cfg = _load(args)
    print(f"config OK (hash {cfg.config_hash})", file=sys.stderr)
    if args.dump:
        sys.stdout.write(yaml.safe_dump(cfg.data, sort_keys=False))
    return 0


def cmd_ensemble_config(args):
    profiles = load_profiles(args.profiles) if args.profiles else None
    spec = configure_attribute_guided(_split(args.preserve), _split(args.suppress), profiles)
    block = spec.to_dict()
    for m in block["members"]:
        if m.get("name") == "ksame" and "reference_dataset" not in m.get("params", {}):
            if not args.reference_dataset:
                raise ConfigError("a selected k-Same member needs a gallery; pass --reference-dataset",
                                  "ensemble.members")
            m.setdefault("params", {})["reference_dataset"] = args.reference_dataset
    sys.stdout.write(yaml.safe_dump({"ensemble": block}, sort_keys=False))
    return 0


COMMANDS = {
    "deid": cmd_deid,
    "video": cmd_video,
    "eval": cmd_eval,
    "validate": cmd_validate,
    "ensemble-config": cmd_ensemble_config,
    "version": lambda args: print(__version__) or 0,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return 1
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    level = {0: logging.WARNING, 1: logging.INFO}.get(args.verbose, logging.DEBUG)
    logging.basicConfig(level=level, format="%(levelname)s %(message)s", stream=sys.stderr, force=True)
    if not args.command:
        parser.print_usage(sys.stderr)
        print("deidbench: a command is required", file=sys.stderr)
        return 1
    try:
        return COMMANDS[args.command](args)
    except VALIDATION_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (DeidError, OSError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    except KeyboardInterrupt:
        print("interrupted", file=sys.stderr)
        return 2
    except Exception as exc:  # never dump a traceback on user input
        log.debug("unexpected failure", exc_info=True)
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
