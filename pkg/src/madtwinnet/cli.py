"""Command-line interface: ``madtwinnet {train,separate,evaluate,check,fixture}``.

Exit codes: 0 success, 2 configuration error, 3 data error, 4 numeric failure.
"""
import argparse
import logging
import os
import sys

import numpy as np

from . import checkpoint as ckpt
from .audio import read_wav, write_wav
from .checks import format_report, run_checks
from .config import PRESETS, RunConfig, apply_overrides, load_config, save_config
from .data import load_dataset, synth_fixture, write_track
from .evaluation import COMPARABILITY_NOTE, evaluate_tracks
from .exceptions import (
    ConfigError,
    CorruptCheckpointError,
    DatasetLayoutError,
    InvalidArgumentError,
    NumericError,
)
from .pipeline import separate
from .training import Trainer, build_examples

EXIT_OK, EXIT_CONFIG, EXIT_DATA, EXIT_NUMERIC = 0, 2, 3, 4
CONFIG_NAME = "config.txt"
CHECKPOINT_NAME = "checkpoint.madt"
LOG_NAME = "train_log.csv"

logger = logging.getLogger("madtwinnet")


def _effective_config(args, **overrides):
    cfg = load_config(args.config) if getattr(args, "config", None) else PRESETS[args.preset]
    flags = {k: v for k, v in overrides.items() if v is not None}
    return apply_overrides(cfg, flags) if flags else cfg.validate()


def cmd_train(args):
    cfg = _effective_config(args, epochs=args.epochs, seed=args.seed)
    tracks = load_dataset(args.data)
    os.makedirs(args.out, exist_ok=True)
    save_config(os.path.join(args.out, CONFIG_NAME), cfg)
    examples = build_examples(tracks, cfg.stft, cfg.sequence)
    trainer = Trainer(cfg.masker, cfg.objective, cfg.training, dims=cfg.dims)
    ckpt_path = os.path.join(args.out, CHECKPOINT_NAME)
    ckpt.save_checkpoint(ckpt_path, trainer.params, trainer.state)
    last = None
    for epoch in range(1, cfg.epochs + 1):
        last = trainer.run_epoch(examples)
        ckpt.save_checkpoint(ckpt_path, trainer.params, trainer.state)
        print(f"epoch {epoch}/{cfg.epochs}  step {trainer.state.step}  total {last.total:.6g}")
    trainer.write_log(os.path.join(args.out, LOG_NAME))
    if last is not None:
        print("final " + "  ".join(f"{k}={v:.6g}" for k, v in last.as_dict().items()))
    else:
        print("0 epochs: wrote initialised checkpoint only")
    return EXIT_OK


def _config_for_checkpoint(args, params):
    path = args.config or os.path.join(os.path.dirname(os.path.abspath(args.checkpoint)), CONFIG_NAME)
    cfg = load_config(path) if os.path.isfile(path) else RunConfig()
    if args.gla_iters is not None:
        cfg = apply_overrides(cfg, {"griffin_lim_iterations": args.gla_iters})
    F, N = params["masker.fnn.W"].shape
    if (N, F) != (cfg.stft.retained_bins, cfg.F):
        raise ConfigError(
            f"checkpoint has N={N}, F={F} but config gives N={cfg.stft.retained_bins}, F={cfg.F}; "
            "pass the training config with --config"
        )
    return cfg


def cmd_separate(args):
    params, _ = ckpt.load_checkpoint(args.checkpoint)
    cfg = _config_for_checkpoint(args, params)
    mixture, rate = read_wav(args.input)
    if rate != cfg.sample_rate:
        logger.warning("input sample rate %d differs from configured %d; no resampling is done",
                       rate, cfg.sample_rate)
    voice = separate(mixture, params, cfg.stft, cfg.sequence, cfg.masker, cfg.griffin_lim_iterations)
    write_wav(args.output, voice, rate)
    print(f"wrote {args.output} ({voice.size} samples)")
    return EXIT_OK


def cmd_evaluate(args):
    scores = evaluate_tracks(args.estimates, args.references, args.out)
    for name, sdr, sir in scores.per_track:
        print(f"{name}: SDR {sdr:.3f} dB  SIR {sir:.3f} dB")
    print(f"MEDIAN: SDR {scores.median_sdr:.3f} dB  SIR {scores.median_sir:.3f} dB")
    print(COMPARABILITY_NOTE)
    return EXIT_OK


def cmd_check(args):
    results = run_checks(args.seed, fault=args.inject_fault)
    print(format_report(results))
    return EXIT_OK if all(r.passed for r in results) else EXIT_NUMERIC


def cmd_fixture(args):
    for k in range(args.tracks):
        track = synth_fixture(args.seed + k, args.duration)
        write_track(args.out, f"track{k:03d}", track)
    print(f"wrote {args.tracks} track(s) to {args.out}")
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(prog="madtwinnet", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train on a <root>/<track>/{mixture,vocals,accompaniment}.wav dataset")
    p.add_argument("--config", help="key = value config file")
    p.add_argument("--preset", choices=sorted(PRESETS), default="desk")
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--epochs", type=int)
    p.add_argument("--seed", type=int)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("separate", help="extract the singing voice from a mixture WAV")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--gla-iters", type=int, dest="gla_iters")
    p.add_argument("--config", help="training config (default: config.txt beside the checkpoint)")
    p.set_defaults(func=cmd_separate)

    p = sub.add_parser("evaluate", help="SDR/SIR of estimated vocals against references")
    p.add_argument("--estimates", required=True)
    p.add_argument("--references", required=True)
    p.add_argument("--out", required=True, help="CSV output path")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("check", help="gradient checks and numerical invariants")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--inject-fault", dest="inject_fault", metavar="PARAM", help=argparse.SUPPRESS)
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("fixture", help="write synthetic tracks in the dataset layout")
    p.add_argument("--out", required=True)
    p.add_argument("--tracks", type=int, default=1)
    p.add_argument("--duration", type=float, default=4.0)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_fixture)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    threads = os.environ.get("MADT_THREADS")
    if threads:
        os.environ.setdefault("OMP_NUM_THREADS", threads)
    np.seterr(over="ignore", under="ignore")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (DatasetLayoutError, CorruptCheckpointError, InvalidArgumentError, OSError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except NumericError as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
