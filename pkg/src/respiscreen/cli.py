"""``respiscreen`` command line.

Exit codes: 0 success / Pass, 1 error, 2 Alert, 3 Inconclusive.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import __version__
from .config import load_config
from .errors import RespiscreenError
from .pipeline import analyze
from .plotting import emit_report
from .screening import Decision
from .synth import Scenario, render
from .thermal import HEADER, VERSION, read_clip, write_clip

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_ALERT = 2
EXIT_INCONCLUSIVE = 3

DECISION_EXIT = {
    Decision.PASS: EXIT_OK,
    Decision.ALERT: EXIT_ALERT,
    Decision.INCONCLUSIVE: EXIT_INCONCLUSIVE,
}


def _fail(exc) -> int:
    code = getattr(exc, "code", None) or type(exc).__name__
    print(f"error[{code}]: {exc}", file=sys.stderr)
    return EXIT_ERROR


def _output_path(args, positional):
    return getattr(args, positional, None) or args.out


def cmd_synth(args) -> int:
    out = _output_path(args, "output")
    if not out:
        return _fail(ValueError("an output path is required (positional or --out)"))
    scenario = Scenario.load(args.scenario)
    clip, truth = render(scenario)
    out = Path(out)
    write_clip(clip, out)
    truth_path = out.with_suffix(".truth.json")
    truth_path.write_text(json.dumps(truth.to_dict()) + "\n")
    if args.json:
        print(json.dumps({"clip": str(out), "truth": str(truth_path), "frames": clip.n_frames,
                          "true_rate": truth.true_rate, "true_pattern": truth.true_pattern}))
    else:
        print(f"wrote {out} ({clip.n_frames} frames, {clip.width}x{clip.height} @ {clip.fps:g} fps) "
              f"and {truth_path}; truth {truth.true_rate:g} breaths/min {truth.true_pattern}")
    return EXIT_OK


def cmd_analyze(args) -> int:
    cfg = load_config(args.config)
    clip = read_clip(args.clip)
    result = analyze(clip, cfg)
    report = result.report
    text = report.to_json()
    if args.out:
        Path(args.out).write_text(text)
        print(report.summary())
    else:
        sys.stdout.write(text)
        print(report.summary(), file=sys.stderr)
    if args.tracks:
        for tr in (result.forehead, result.nostril):
            Path(f"{args.tracks}.{tr.region_name.value.lower()}.csv").write_text(tr.to_csv())
    return DECISION_EXIT[report.decision]


def cmd_plot(args) -> int:
    out = _output_path(args, "output")
    if not out:
        return _fail(ValueError("an output SVG path is required (positional or --out)"))
    cfg = load_config(args.config)
    clip = read_clip(args.clip)
    result = analyze(clip, cfg, allow_fallback=True)
    paths = emit_report(result.raw, result.filtered, result.spectrum, result.peak_freq, out, cfg.band)
    if args.json:
        print(json.dumps({k: str(v) for k, v in paths.items()}))
    else:
        print(f"wrote {paths['svg']} with sidecars " + ", ".join(str(paths[k]) for k in ("raw", "filtered", "spectrum")))
    return EXIT_OK


def cmd_inspect(args) -> int:
    clip = read_clip(args.clip)
    info = {
        "version": VERSION,
        "header_bytes": HEADER.size,
        "width": clip.width,
        "height": clip.height,
        "frame_count": clip.n_frames,
        "fps": clip.fps,
        "cal_slope": clip.calibration.slope,
        "cal_offset": clip.calibration.offset,
        "duration_s": round(clip.duration, 6),
        "min_temp_c": float(clip.temps.min()) if clip.n_frames else None,
        "max_temp_c": float(clip.temps.max()) if clip.n_frames else None,
    }
    if args.json:
        print(json.dumps(info))
        return EXIT_OK
    print(f"THRM v{VERSION}  {clip.width}x{clip.height}  {clip.n_frames} frames @ {clip.fps:g} fps")
    print(f"calibration: {clip.calibration.slope:g} degC/count + {clip.calibration.offset:g} degC")
    print(f"duration: {clip.duration:.2f} s")
    if clip.n_frames:
        print(f"temperature range: {info['min_temp_c']:.2f} .. {info['max_temp_c']:.2f} degC")
    else:
        print("temperature range: n/a (no frames)")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", default=argparse.SUPPRESS,
                        help="pipeline config JSON (fallback: $RESPISCREEN_CONFIG)")
    common.add_argument("--out", default=argparse.SUPPRESS, help="output path")
    common.add_argument("--json", action="store_true", default=argparse.SUPPRESS,
                        help="machine-readable output")

    parser = argparse.ArgumentParser(prog="respiscreen", parents=[common],
                                     description="Thermal-video respiratory screening.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", parents=[common], help="render a scenario to .thrm + .truth.json")
    p.add_argument("scenario")
    p.add_argument("output", nargs="?")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("analyze", parents=[common], help="screen a clip; exit 0 Pass, 2 Alert, 3 Inconclusive")
    p.add_argument("clip")
    p.add_argument("--tracks", help="write <prefix>.forehead.csv and <prefix>.nostril.csv")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("plot", parents=[common], help="SVG of nostril signal and spectrum plus CSVs")
    p.add_argument("clip")
    p.add_argument("output", nargs="?")
    p.set_defaults(func=cmd_plot)

    p = sub.add_parser("inspect", parents=[common], help="print clip header and statistics")
    p.add_argument("clip")
    p.set_defaults(func=cmd_inspect)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    for name, default in (("config", None), ("out", None), ("json", False)):
        if not hasattr(args, name):
            setattr(args, name, default)
    try:
        return args.func(args)
    except (RespiscreenError, OSError, ValueError) as exc:
        return _fail(exc)


if __name__ == "__main__":
    sys.exit(main())
