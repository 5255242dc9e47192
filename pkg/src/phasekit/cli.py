"""Command-line entry points.

One binary, one subcommand per capability:

  shift            rotate all frequency components of a WAV by a fixed angle
  hilbert          apply the 90-degree rotation (Hilbert transform)
  augment          seeded random rotations over a directory or a WAV stream
  wood             generate the clipped-sine polarity-audibility demo pair
  prepare-stimuli  build original/distorted listening-test pairs + manifest
  analyze          summarize a responses CSV (JSON, optional plots/report)
  export           dump a service event log as a responses CSV
  serve            run the listening-test HTTP service
  selftest         run the built-in invariant battery

Exit codes: 0 success, 1 domain error (one-line diagnostic on stderr),
2 usage error.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .analysis import ResponseSet, summarize, plot_data
from .augment import AugmentConfig, augment
from .dsp import PhaseAngle, Signal, hilbert as hilbert_transform, phase_shift
from .errors import PhasekitError
from .stimuli import (
    ExcerptPolicy,
    prepare_stimulus,
    wood_effect_stimulus,
    write_manifest,
)
from .wavio import FLOAT32, FLOAT64, PCM16, Recording, read_wav, read_wav_stream, write_wav, write_wav_stream

log = logging.getLogger("phasekit")

_CATEGORY_DIRS = ("music", "speech", "other")


def _fmt_flag(name: str) -> str:
    return {"pcm16": PCM16, "float32": FLOAT32, "float64": FLOAT64}[name]


def _theta_from_args(args) -> PhaseAngle:
    if args.theta_deg is not None:
        return PhaseAngle.from_degrees(args.theta_deg)
    return PhaseAngle(args.theta_rad)


def _per_channel(recording: Recording, func) -> Recording:
    channels = tuple(func(c) for c in recording.channels)
    return Recording(channels, recording.sample_rate, recording.source_path,
                     recording.bit_depth_in)


def _cmd_shift(args) -> int:
    theta = _theta_from_args(args)
    recording = read_wav(args.infile)
    shifted = _per_channel(recording, lambda c: phase_shift(c, theta))
    write_wav(args.outfile, shifted, _fmt_flag(args.format))
    log.info("rotated %s by %.6f rad -> %s", args.infile, theta.theta, args.outfile)
    return 0


def _cmd_hilbert(args) -> int:
    recording = read_wav(args.infile)
    transformed = _per_channel(recording, hilbert_transform)
    write_wav(args.outfile, transformed, _fmt_flag(args.format))
    return 0


def _augment_recording(recording: Recording, rng, prob: float):
    thetas = []

    def one(channel: Signal) -> Signal:
        out, theta = augment(channel, rng, prob)
        thetas.append(theta.theta)
        return out

    return _per_channel(recording, one), thetas


def _cmd_augment(args) -> int:
    if (args.in_dir is None) != (args.out_dir is None):
        raise PhasekitError("--in-dir and --out-dir must be given together")
    config = AugmentConfig(seed=args.seed, apply_probability=args.prob)

    if args.in_dir is None:
        # stream mode: one WAV on stdin, augmented WAV on stdout
        recording = read_wav_stream(sys.stdin.buffer, "<stdin>")
        out, thetas = _augment_recording(recording, config.stream(0), args.prob)
        write_wav_stream(sys.stdout.buffer, out, _fmt_flag(args.format))
        sys.stdout.buffer.flush()
        report = [{"file": "<stdin>", "theta": thetas}]
    else:
        in_dir, out_dir = Path(args.in_dir), Path(args.out_dir)
        files = sorted(p for p in in_dir.rglob("*.wav") if p.is_file())
        if not files:
            raise PhasekitError(f"no .wav files under {in_dir}")
        out_dir.mkdir(parents=True, exist_ok=True)
        report = []
        for i, path in enumerate(files):
            recording = read_wav(path)
            out, thetas = _augment_recording(recording, config.stream(i), args.prob)
            target = out_dir / path.relative_to(in_dir)
            target.parent.mkdir(parents=True, exist_ok=True)
            write_wav(target, out, _fmt_flag(args.format))
            report.append({"file": str(path.relative_to(in_dir)), "theta": thetas})
    if args.out_json:
        Path(args.out_json).write_text(json.dumps(
            {"seed": args.seed, "apply_probability": args.prob, "files": report},
            indent=2, sort_keys=True) + "\n")
    return 0


def _cmd_wood(args) -> int:
    clipped, inverted = wood_effect_stimulus(args.freq, args.clip, args.dur, args.fs)
    for suffix, signal in (("clipped", clipped), ("inverted", inverted)):
        path = Path(f"{args.out_prefix}_{suffix}.wav")
        path.parent.mkdir(parents=True, exist_ok=True)
        write_wav(path, Recording((signal,), args.fs, str(path), FLOAT32), FLOAT32)
    return 0


def _category_of(path: Path, root: Path) -> str:
    relative = path.relative_to(root)
    if relative.parts and relative.parts[0].lower() in _CATEGORY_DIRS:
        return relative.parts[0].lower()
    return "other"


def _cmd_prepare(args) -> int:
    in_dir, out_dir = Path(args.in_dir), Path(args.out_dir)
    files = sorted(p for p in in_dir.rglob("*.wav") if p.is_file())
    if not files:
        raise PhasekitError(f"no .wav files under {in_dir}")
    out_dir.mkdir(parents=True, exist_ok=True)
    policy = ExcerptPolicy(
        duration_s=args.duration,
        l2_threshold=args.threshold,
        taper_s=args.taper,
    )
    entries = []
    for i, path in enumerate(files):
        rng = np.random.Generator(np.random.Philox(key=[args.seed, i]))
        theta = PhaseAngle(rng.uniform(-np.pi, np.pi))
        recording = read_wav(path)
        category = _category_of(path, in_dir)
        stimulus_id = f"{category}_{i:03d}_{path.stem}"
        pair = prepare_stimulus(recording, policy, theta, rng,
                                stimulus_id=stimulus_id, category=category)
        original_name = f"{stimulus_id}_original.wav"
        distorted_name = f"{stimulus_id}_distorted.wav"
        write_wav(out_dir / original_name,
                  Recording((pair.original,), pair.original.sample_rate, str(path), FLOAT32))
        write_wav(out_dir / distorted_name,
                  Recording((pair.distorted,), pair.distorted.sample_rate, str(path), FLOAT32))
        entry = pair.manifest_entry()
        entry["source"] = str(path.relative_to(in_dir))
        entry["original_path"] = original_name
        entry["distorted_path"] = distorted_name
        entries.append(entry)
        log.info("prepared %s (theta %.4f rad)", stimulus_id, theta.theta)
    manifest_path = Path(args.manifest) if args.manifest else out_dir / "manifest.json"
    write_manifest(manifest_path, entries)
    print(f"prepared {len(entries)} stimulus pairs; manifest at {manifest_path}")
    return 0


def _cmd_analyze(args) -> int:
    responses = ResponseSet.from_csv(args.responses)
    if args.exclude_participant or args.require_complete:
        responses = responses.filtered(
            exclude_participants=tuple(args.exclude_participant or ()),
            require_n_trials=args.require_complete,
        )
    summary = summarize(responses)
    Path(args.out_json).write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    if args.plot_data:
        Path(args.plot_data).write_text(
            json.dumps(plot_data(responses), indent=2, sort_keys=True) + "\n")
    if args.report_dir:
        from .report import render_report

        written = render_report(args.report_dir, summary, responses)
        for path in written:
            log.info("wrote %s", path)
    ci = summary["credible_interval"]
    print(
        f"{summary['n_trials']} trials, {summary['n_participants']} participants: "
        f"posterior Beta({summary['posterior']['alpha']:g}, {summary['posterior']['beta']:g}), "
        f"{ci['mass']:.0%} interval ({ci['lo']:.3f}, {ci['hi']:.3f})"
    )
    return 0


def _cmd_export(args) -> int:
    from .service import export_log_csv

    out = Path(args.out_csv)
    with out.open("w") as fh:
        rows, warnings = export_log_csv(args.log, fh)
    for warning in warnings:
        print(f"warning: {warning}", file=sys.stderr)
    print(f"exported {rows} responses to {out}")
    return 0


def _cmd_serve(args) -> int:
    from .service import ServiceConfig, serve

    serve(ServiceConfig.load(args.config))
    return 0


def _cmd_selftest(args) -> int:
    from .selftest import run_selftest

    return run_selftest(json_path=args.out_json)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="phasekit", description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("--version", action="version", version=f"phasekit {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_theta(p):
        group = p.add_mutually_exclusive_group(required=True)
        group.add_argument("--theta-deg", type=float, help="rotation in degrees (wrapped)")
        group.add_argument("--theta-rad", type=float, help="rotation in radians (wrapped)")

    p = sub.add_parser("shift", help="constant phase rotation of a WAV file")
    add_theta(p)
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out", dest="outfile", required=True)
    p.add_argument("--format", choices=["pcm16", "float32", "float64"], default="float32")
    p.set_defaults(func=_cmd_shift)

    p = sub.add_parser("hilbert", help="Hilbert transform of a WAV file")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out", dest="outfile", required=True)
    p.add_argument("--format", choices=["pcm16", "float32", "float64"], default="float32")
    p.set_defaults(func=_cmd_hilbert)

    p = sub.add_parser("augment", help="seeded random rotations (dir-to-dir or stdin/stdout)")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--prob", type=float, default=1.0)
    p.add_argument("--in-dir")
    p.add_argument("--out-dir")
    p.add_argument("--out-json", help="write the per-file angle report here")
    p.add_argument("--format", choices=["pcm16", "float32", "float64"], default="float32")
    p.set_defaults(func=_cmd_augment)

    p = sub.add_parser("wood", help="half-cycle-clipped sine and its inversion")
    p.add_argument("--freq", type=float, default=110.0)
    p.add_argument("--clip", type=float, default=0.5)
    p.add_argument("--dur", type=float, default=2.0)
    p.add_argument("--fs", type=int, default=44100)
    p.add_argument("--out-prefix", required=True)
    p.set_defaults(func=_cmd_wood)

    p = sub.add_parser("prepare-stimuli", help="build listening-test pairs from recordings")
    p.add_argument("--in-dir", required=True)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--duration", type=float, default=3.0)
    p.add_argument("--taper", type=float, default=0.1)
    p.add_argument("--threshold", type=float, default=None,
                   help="l2-norm silence gate (default: -40 dBFS RMS equivalent)")
    p.add_argument("--manifest", help="manifest path (default: OUT_DIR/manifest.json)")
    p.set_defaults(func=_cmd_prepare)

    p = sub.add_parser("analyze", help="summarize a responses CSV")
    p.add_argument("--responses", required=True)
    p.add_argument("--out-json", required=True)
    p.add_argument("--plot-data", help="write posterior/per-question curves here")
    p.add_argument("--report-dir", help="render summary.csv and figures here")
    p.add_argument("--exclude-participant", action="append")
    p.add_argument("--require-complete", type=int,
                   help="drop participants with fewer than this many trials")
    p.set_defaults(func=_cmd_analyze)

    p = sub.add_parser("export", help="event log -> responses CSV")
    p.add_argument("--log", required=True)
    p.add_argument("--out-csv", required=True)
    p.set_defaults(func=_cmd_export)

    p = sub.add_parser("serve", help="run the listening-test service")
    p.add_argument("--config", required=True)
    p.set_defaults(func=_cmd_serve)

    p = sub.add_parser("selftest", help="run the invariant battery")
    p.add_argument("--out-json", help="write the machine-readable results here")
    p.set_defaults(func=_cmd_selftest)

    return parser


def main(argv=None) -> int:
    logging.basicConfig(
        level=os.environ.get("PHASEKIT_LOG", "warning").upper(),
        format="%(levelname)s %(name)s: %(message)s",
    )
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (PhasekitError, FileNotFoundError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
