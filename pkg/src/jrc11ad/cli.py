"""Command-line front end: ``jrc11ad run|validate|presets``.

Exit codes: 0 success, 2 invalid configuration, 3 scene incompatible with
the radar (a target beyond the unambiguous range or outside the scene's
time span).
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

from .config import ConfigError, Diagnostic, check_config, parse_yaml
from .presets import PRESETS, preset, preset_yaml
from .scene import SceneRangeError
from .waveform import ParameterError

OUT_ENV = "JRC11AD_OUT"
EXIT_OK, EXIT_CONFIG, EXIT_RANGE = 0, 2, 3


def _load(source: str, seed: int | None):
    """Config from a preset name or a YAML path, with an optional seed override."""
    if source in PRESETS and not Path(source).exists():
        data, lines, base = preset(source), {}, Path.cwd()
        data.setdefault("name", source)
    else:
        path = Path(source)
        try:
            text = path.read_text()
        except OSError as exc:
            raise ConfigError([Diagnostic(f"cannot read {path}: {exc.strerror}")]) from None
        data, lines = parse_yaml(text, str(path))
        data.setdefault("name", path.stem)
        base = path.parent
    if seed is not None:
        data["seed"] = seed
    return data, lines, base


def _progress(quiet):
    if quiet:
        return None

    def report(done, total):
        if done == total or done % max(1, total // 20) == 0:
            print(f"\r  {done}/{total} CPIs", end="\n" if done == total else "", file=sys.stderr, flush=True)

    return report


def cmd_run(args) -> int:
    try:
        data, lines, base = _load(args.config, args.seed)
        cfg, diags = check_config(data, lines, base)
        if diags:
            raise ConfigError(diags)
    except ConfigError as exc:
        print(f"invalid configuration:\n{exc}", file=sys.stderr)
        return exc.exit_code
    from .pipeline import run_scenario

    out = Path(args.out or os.environ.get(OUT_ENV) or Path("jrc11ad_out") / (cfg.name or "run"))
    try:
        manifest = run_scenario(cfg, out, args.format, args.threads, _progress(args.quiet))
    except SceneRangeError as exc:
        print(f"scene incompatible with radar: {exc}", file=sys.stderr)
        return EXIT_RANGE
    except ParameterError as exc:
        print(f"invalid configuration: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if not args.quiet:
        print(f"wrote {out} (manifest: {manifest.name})")
    return EXIT_OK


def cmd_validate(args) -> int:
    try:
        data, lines, base = _load(args.config, None)
        _, diags = check_config(data, lines, base)
    except ConfigError as exc:
        diags = exc.diagnostics
    for d in diags:
        print(f"{args.config}: {d}")
    if not diags:
        print(f"{args.config}: ok")
        return EXIT_OK
    return EXIT_CONFIG if any(d.severity == "error" for d in diags) else EXIT_RANGE


def cmd_presets(args) -> int:
    if args.show:
        if args.show not in PRESETS:
            print(f"unknown preset {args.show!r}", file=sys.stderr)
            return EXIT_CONFIG
        sys.stdout.write(preset_yaml(args.show))
        return EXIT_OK
    width = max(map(len, PRESETS))
    for name, cfg in PRESETS.items():
        print(f"{name:<{width}}  {cfg.get('description', '')}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="jrc11ad", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="simulate a scenario and write its products")
    run.add_argument("config", help="scenario YAML file or built-in preset name")
    run.add_argument("--out", help=f"output directory (default ${OUT_ENV} or ./jrc11ad_out/NAME)")
    run.add_argument("--seed", type=int, help="override the scenario seed")
    run.add_argument("--threads", type=int, default=1, help="CPIs simulated concurrently")
    run.add_argument("--format", choices=("csv", "png", "both"), default="both")
    run.add_argument("-q", "--quiet", action="store_true")
    run.set_defaults(func=cmd_run)

    val = sub.add_parser("validate", help="check a scenario without simulating")
    val.add_argument("config")
    val.set_defaults(func=cmd_validate)

    pre = sub.add_parser("presets", help="list built-in scenarios")
    pre.add_argument("--show", metavar="NAME", help="print a preset as YAML")
    pre.set_defaults(func=cmd_presets)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if getattr(args, "threads", 1) < 1:
        print("--threads must be >= 1", file=sys.stderr)
        return EXIT_CONFIG
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
