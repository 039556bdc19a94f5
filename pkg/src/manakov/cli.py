"""Command line entry point.

    manakov preset afr_well > afr_well.toml
    manakov simulate afr_well.toml --out results/afr_well
    manakov classify afr_well.toml
    manakov compare a.csv b.csv
    manakov kernels --delta 1.5

Results go to stdout as JSON; failures print ``{"error": ..., "message": ...}``
on stderr and exit with status 1.
"""
from __future__ import annotations

import argparse
import json
import sys
from dataclasses import asdict, replace

from . import harness
from .potential import kernels
from .tracking import TrajectorySet


def _emit(obj) -> None:
    print(json.dumps(obj, indent=2, sort_keys=True))


def _scenario(args) -> harness.Scenario:
    if args.config in harness.PRESET_NAMES:
        return harness.preset(args.config)
    return harness.load_scenario(args.config)


def cmd_preset(args) -> None:
    text = harness.dumps_scenario(harness.preset(args.name))
    if args.output:
        with open(args.output, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def cmd_simulate(args) -> None:
    s = _scenario(args)
    if args.engines:
        s = s.with_engines(*args.engines.split(","))
    if args.t_end is not None:
        s = replace(s, t_end=args.t_end)
    progress = None
    if args.verbose:
        def progress(t):
            if abs(t - round(t / 10) * 10) < 1e-9:
                print(f"pde t={t:g}", file=sys.stderr)
    res = harness.run_scenario(s, args.out, progress=progress)
    out = res.summary()
    out["out_dir"] = str(res.out_dir)
    _emit(out)
    if res.errors:
        sys.exit(1)


def cmd_classify(args) -> None:
    _emit(harness.initial_regime(_scenario(args)).to_dict())


def cmd_compare(args) -> None:
    a = TrajectorySet.from_csv(args.a)
    b = TrajectorySet.from_csv(args.b)
    _emit(harness.compare_trajectories(a, b, args.threshold).to_dict())


def cmd_kernels(args) -> None:
    _emit(asdict(kernels(args.delta)) | {"delta": args.delta})


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="manakov", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("simulate", help="run a scenario file (or preset name)")
    sp.add_argument("config")
    sp.add_argument("--out", help="result directory (default $MANAKOV_RESULTS/<name>)")
    sp.add_argument("--engines", help="comma separated subset of pde,pctc")
    sp.add_argument("--t-end", type=float, dest="t_end")
    sp.add_argument("-v", "--verbose", action="store_true")
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("preset", help="print a preset scenario as TOML")
    sp.add_argument("name")
    sp.add_argument("-o", "--output")
    sp.set_defaults(func=cmd_preset)

    sp = sub.add_parser("classify", help="regime of the initial train")
    sp.add_argument("config")
    sp.set_defaults(func=cmd_classify)

    sp = sub.add_parser("compare", help="deviation between two trajectory CSV files")
    sp.add_argument("a")
    sp.add_argument("b")
    sp.add_argument("--threshold", type=float, default=1.0)
    sp.set_defaults(func=cmd_compare)

    sp = sub.add_parser("kernels", help="interaction kernels at one offset")
    sp.add_argument("--delta", type=float, required=True)
    sp.set_defaults(func=cmd_kernels)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        args.func(args)
    except Exception as exc:  # noqa: BLE001
        print(json.dumps({"error": type(exc).__name__, "message": str(exc)}), file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
