"""Command line entry point: ``nlks run | heatmap | diagnose``."""
import argparse
import json
import math
import sys

from .diagnostics import DiagnosticsTracker
from .etdrk4 import BlowUpError, ConfigurationError
from .io import ConfigError, SnapshotError, parse_config, read_snapshot, read_snapshot_header, render_heatmap
from .params import PhysicalParams, ScaledParams
from .simulation import execute
from .spectral import forward_transform, sobolev_norm


def _jsonable(v):
    if isinstance(v, float) and not math.isfinite(v):
        return repr(v)
    if isinstance(v, dict):
        return {k: _jsonable(x) for k, x in v.items()}
    if isinstance(v, list):
        return [_jsonable(x) for x in v]
    return v


def _params_from_header(header):
    p = header.get("params")
    if not p:
        raise SnapshotError("snapshot header carries no params; cannot evaluate diagnostics")
    phys = p.get("physical")
    physical = PhysicalParams(phys["beta"], phys["gamma"], phys["L"]) if phys else None
    return ScaledParams(p["beta"], p["delta"], p["epsilon"], physical=physical)


def cmd_run(args):
    cfg = parse_config(args.config, args.override)
    result = execute(cfg)
    last = result.records[-1]
    print(
        f"t={last.t!r} l2={last.l2_norm!r} records={len(result.records)}"
        + (f" output={cfg.output_dir}" if cfg.output_dir else "")
    )
    return 0


def cmd_heatmap(args):
    render_heatmap(read_snapshot(args.snapshot), args.out)
    return 0


def cmd_diagnose(args):
    header = read_snapshot_header(args.snapshot)
    params = _params_from_header(header)
    state = forward_transform(read_snapshot(args.snapshot))
    tracker = DiagnosticsTracker(
        params,
        sobolev_norm(state, 0.0) ** 2,
        mu=args.mu,
        refine=args.refine,
        c_trilinear=args.c_trilinear,
        transient_cut=args.transient_cut,
    )
    rec = tracker.record(header["t"], state)
    print(json.dumps(_jsonable(rec.to_dict()), sort_keys=True))
    return 0


def build_parser():
    parser = argparse.ArgumentParser(prog="nlks", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="integrate a configured problem")
    p.add_argument("--config", required=True)
    p.add_argument("--override", action="append", default=[], metavar="KEY=VALUE")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("heatmap", help="render a snapshot as a PGM image")
    p.add_argument("--snapshot", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_heatmap)

    p = sub.add_parser("diagnose", help="print diagnostics of a snapshot as JSON")
    p.add_argument("--snapshot", required=True)
    p.add_argument("--mu", type=float, default=1.0)
    p.add_argument("--refine", type=int, default=4)
    p.add_argument("--c-trilinear", type=float, default=1.0)
    p.add_argument("--transient-cut", type=float, default=20.0)
    p.set_defaults(func=cmd_diagnose)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, ConfigurationError, SnapshotError, BlowUpError, OSError) as exc:
        print(f"nlks: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
