"""Command-line interface: ``bergerflow run|analyze|validate|oracle``.

Exit codes: 0 success, 1 other errors (e.g. unreadable run directory),
2 monitor hard-failure, 3 numerical breakdown, 4 configuration error.
"""
from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from dataclasses import asdict
from pathlib import Path

from .config import load_config
from .errors import ConfigError, NumericalBreakdown

EXIT_OK, EXIT_OTHER, EXIT_MONITOR, EXIT_BREAKDOWN, EXIT_CONFIG = 0, 1, 2, 3, 4

log = logging.getLogger("bergerflow")


def _json_default(o):
    if isinstance(o, float) and not math.isfinite(o):
        return str(o)
    if hasattr(o, "tolist"):
        return o.tolist()
    return str(o)


def _dump(obj) -> None:
    json.dump(obj, sys.stdout, indent=1, sort_keys=True, default=_json_default)
    sys.stdout.write("\n")


def _load(path: str):
    try:
        return load_config(path)
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc.strerror}") from None


def cmd_run(args) -> int:
    from .driver import run

    cfg = _load(args.config)
    if args.output is not None:
        cfg = cfg.replace(output={"directory": args.output})

    def progress(fs, rep):
        if fs.step_count % args.progress_every == 0:
            log.info("step %d t=%.10g rm_max=%.4g rescales=%d", fs.step_count, rep.t, rep.rm_max, fs.rescales)

    try:
        res = run(cfg, progress=progress)
    except NumericalBreakdown as exc:
        log.error("numerical breakdown: %s", exc)
        return EXIT_BREAKDOWN
    _dump(res.summary())
    return EXIT_MONITOR if res.termination == "monitor_failure" else EXIT_OK


def cmd_analyze(args) -> int:
    from .driver import analyze_run

    res = analyze_run(args.run_dir)
    e = res.estimate
    _dump({
        "singular": e.singular, "T_est": e.T_est, "T_uncertainty": e.uncertainty, "T_method": e.method,
        "type_verdict": e.type_verdict, "type_slope": e.slope,
        "frames": [f.__dict__ for f in res.frames],
    })
    return EXIT_OK


def cmd_validate(args) -> int:
    from .initial_data import construct_initial, validate_class
    from .mesh import build_grid

    cfg = _load(args.config)
    g = cfg.grid
    state = construct_initial(cfg.family, cfg.params, build_grid(g.n_nodes, g.x_max, g.cluster_factor, g.inner,
                                                                 g.outer))
    _dump({"family": cfg.family, "params": cfg.params, **asdict(validate_class(state))})
    return EXIT_OK


def cmd_oracle(args) -> int:
    from .solitons import bryant_profile, cylinder_profile
    from .storage import write_profile

    if args.kind == "bryant":
        prof = bryant_profile(args.sigma_max)
    else:
        prof = cylinder_profile(args.radius, args.sigma_max)
    out = Path(args.output or f"{args.kind}_profile.tsv")
    write_profile(prof, out)
    print(out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="bergerflow", description="U(2)-invariant warped Berger Ricci flow on R^4")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="evolve a configuration and analyse the result")
    r.add_argument("config")
    r.add_argument("--output", help="override [output] directory")
    r.add_argument("--progress-every", type=int, default=10_000, metavar="STEPS")
    r.set_defaults(func=cmd_run)

    a = sub.add_parser("analyze", help="recompute estimates and frames from a run directory")
    a.add_argument("run_dir")
    a.set_defaults(func=cmd_analyze)

    v = sub.add_parser("validate", help="classify the initial data of a configuration")
    v.add_argument("config")
    v.set_defaults(func=cmd_validate)

    o = sub.add_parser("oracle", help="emit a soliton oracle profile")
    o.add_argument("kind", choices=("bryant", "cylinder"))
    o.add_argument("--sigma-max", type=float, default=20.0)
    o.add_argument("--radius", type=float, default=math.sqrt(6.0), help="cylinder radius (default: R = 1)")
    o.add_argument("--output", help="output path (default: <kind>_profile.tsv)")
    o.set_defaults(func=cmd_oracle)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_OTHER


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
