"""Command-line entry points.

Subcommands: ``separate`` runs one solver on one mixture, ``experiment``
runs the full grid protocol from a JSON config, ``serve`` starts the
annotation service, and ``demo-track`` writes a synthetic track to disk.

Exit codes: 0 success, 2 bad flags or config, 3 unreadable input,
4 numerical failure in a solver.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .annotation import (
    AnnotationSet,
    annotations_from_json,
    annotations_to_json,
    compute_targets,
    generate_annotations,
    validate,
)
from .audio_io import load_audio, write_wav
from .errors import ConfigError, InputError, NumericalError
from .evaluation import ExperimentConfig, run_experiment
from .lownuc import LownucConfig, default_alpha0, solve
from .nmf import NmfConfig, solve_nmf
from .reconstruction import synthesize_sources, wiener_masks
from .spectral import StftParams, power_spectrogram, stft
from .tracks import synthetic_track

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_INPUT = 3
EXIT_NUMERICAL = 4


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="annosep",
        description="Annotation-informed single-channel source separation",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    sep = sub.add_parser("separate", help="separate one mixture WAV")
    sep.add_argument("--mixture", required=True, help="mixture WAV file")
    sep.add_argument("--annotations", help="annotation JSON file")
    sep.add_argument(
        "--method", required=True, choices=["lownuc", "nmf"],
        help="solver to run",
    )
    sep.add_argument("--lambda", dest="lam", type=float,
                     help="penalty weight (default: scale-aware)")
    sep.add_argument("--alpha0", type=float,
                     help="initial step size for lownuc (default: scale-aware)")
    sep.add_argument("--rank", type=int, default=4, help="NMF rank per source")
    sep.add_argument("--budget-seconds", type=float,
                     help="wall-clock budget; 0 returns the initial point")
    sep.add_argument("--max-iters", type=int, default=500)
    sep.add_argument("--num-sources", type=int, default=2,
                     help="sources to estimate when no annotations are given")
    sep.add_argument("--out-dir", default=".", help="output directory")

    exp = sub.add_parser("experiment", help="run the grid-search protocol")
    exp.add_argument("--config", required=True, help="experiment config JSON")
    exp.add_argument("--out-dir", default=".", help="output directory")

    srv = sub.add_parser("serve", help="start the annotation HTTP service")
    srv.add_argument("--port", type=int, default=8765)
    srv.add_argument("--host", default="127.0.0.1")
    srv.add_argument("--data-dir", required=True, help="flat data directory")

    demo = sub.add_parser("demo-track", help="write a synthetic demo track")
    demo.add_argument("--out-dir", required=True)
    demo.add_argument("--seed", type=int, default=0)
    demo.add_argument("--duration-seconds", type=float, default=6.0)
    demo.add_argument("--annotation-fraction", type=float, default=0.4)
    return parser


def cmd_separate(args: argparse.Namespace) -> int:
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    params = StftParams()

    try:
        signal = load_audio(args.mixture, params.sample_rate)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT

    mixture_stft = stft(signal, params)
    mixture = power_spectrogram(mixture_stft)

    if args.annotations:
        try:
            ann = annotations_from_json(Path(args.annotations).read_text())
        except (OSError, InputError) as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_INPUT
        problems = validate(ann)
        if problems:
            print("error: invalid annotations:", file=sys.stderr)
            for p in problems:
                print(f"  {p}", file=sys.stderr)
            return EXIT_INPUT
        if ann.shape != mixture.shape:
            print(
                f"error: annotation grid {ann.shape} does not match "
                f"spectrogram {mixture.shape}",
                file=sys.stderr,
            )
            return EXIT_INPUT
    else:
        ann = AnnotationSet.empty(mixture.shape, args.num_sources)

    norm = float(np.linalg.norm(mixture.values))
    targets = compute_targets(ann, mixture)
    try:
        if args.method == "lownuc":
            lam = args.lam if args.lam is not None else 0.1 * norm
            alpha0 = args.alpha0 if args.alpha0 is not None else default_alpha0(mixture)
            cfg = LownucConfig(
                lam=lam,
                alpha0=alpha0,
                max_iters=args.max_iters,
                time_budget=args.budget_seconds,
            )
            est, trace = solve(mixture, ann, cfg)
            used = {"lambda": lam, "alpha0": alpha0, "max_iters": args.max_iters}
        else:
            lam = args.lam if args.lam is not None else 1.0
            cfg = NmfConfig(
                lam=lam,
                rank=args.rank,
                iters_per_start=args.max_iters,
                num_starts=3,
                seed=0,
                time_budget=args.budget_seconds,
            )
            est, trace = solve_nmf(
                mixture, ann, targets, cfg, num_sources=ann.num_sources
            )
            used = {"lambda": lam, "rank": args.rank,
                    "iters_per_start": args.max_iters}
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NumericalError as exc:
        print(f"error: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL

    masks = wiener_masks(est)
    signals = synthesize_sources(masks, mixture_stft)
    stem = Path(args.mixture).stem
    wav_paths = []
    for g, sig in enumerate(signals, start=1):
        path = out_dir / f"{stem}_source{g}.wav"
        write_wav(path, sig, params.sample_rate)
        wav_paths.append(str(path))
    trace_path = out_dir / f"{stem}_trace.csv"
    trace_path.write_text(trace.to_csv())

    meta = {
        "mixture": str(args.mixture),
        "method": args.method,
        "parameters": used,
        "budget_seconds": args.budget_seconds,
        "annotated_bins": len(ann),
        "num_sources": ann.num_sources,
        "outputs": {"sources": wav_paths, "trace": str(trace_path)},
    }
    (out_dir / f"{stem}_run.json").write_text(json.dumps(meta, indent=2))
    print(f"wrote {len(wav_paths)} sources to {out_dir}")
    return EXIT_OK


def cmd_experiment(args: argparse.Namespace) -> int:
    try:
        doc = json.loads(Path(args.config).read_text())
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except json.JSONDecodeError as exc:
        print(f"error: malformed config JSON: {exc}", file=sys.stderr)
        return EXIT_USAGE

    try:
        config = ExperimentConfig.from_dict(doc)
        report = run_experiment(config)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT

    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "summary.csv").write_text(report.summary_csv())
    (out_dir / "curves.csv").write_text(report.curves_csv())
    (out_dir / "experiment.json").write_text(report.metadata_json())
    print(report.summary_table())
    return EXIT_OK


def cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    from .service import create_app

    data_dir = Path(args.data_dir)
    data_dir.mkdir(parents=True, exist_ok=True)
    app = create_app(data_dir)
    try:
        uvicorn.run(app, host=args.host, port=args.port, log_level="info")
    except SystemExit:
        raise
    except OSError as exc:
        print(f"error: cannot bind {args.host}:{args.port}: {exc}", file=sys.stderr)
        return EXIT_INPUT
    return EXIT_OK


def cmd_demo_track(args: argparse.Namespace) -> int:
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    track = synthetic_track(args.seed, args.duration_seconds)
    write_wav(out_dir / "mixture.wav", track.mixture, track.sample_rate)
    for g, sig in enumerate(track.sources, start=1):
        write_wav(out_dir / f"source{g}.wav", sig, track.sample_rate)

    params = StftParams(sample_rate=track.sample_rate)
    true_specs = [power_spectrogram(stft(s, params)) for s in track.sources]
    ann = generate_annotations(
        true_specs, args.annotation_fraction, args.seed, "soft"
    )
    (out_dir / "annotations.json").write_text(annotations_to_json(ann))
    print(f"wrote demo track to {out_dir}")
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    handlers = {
        "separate": cmd_separate,
        "experiment": cmd_experiment,
        "serve": cmd_serve,
        "demo-track": cmd_demo_track,
    }
    return handlers[args.command](args)


if __name__ == "__main__":
    sys.exit(main())
