"""Batch-processing command line.

Four subcommands: ``sample`` prints one sampled policy as JSON, ``augment``
runs a dataset batch, ``features`` exports mel-spectrogram tensors, and
``preview`` applies an explicit policy to a single file (the replay path
for manifest lines).

Seed discipline, shared with the pipeline: for a work seed S, policy
sampling reads the stream started at S and policy application reads the
stream started at splitmix64(S).  ``sample --seed`` takes the former,
``preview --seed`` the latter, so a manifest line's (steps, seed) replays
to byte-identical output no matter how many draws sampling consumed.

Exit codes: 0 success, 1 runtime failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import sys

from .dsp import MelParams
from .errors import InvalidParams, WaveaugError
from .pipeline import ingest, run_augment, run_features
from .policy import Policy, SeedPlan, apply_policy, n_from_config, sample_policy, space_from_config
from .rng import MASK64, RandomSource, splitmix64
from .signal import read_wav, write_wav


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {value}")
    return value


def _nonnegative_int(text: str) -> int:
    value = int(text)
    if value < 0:
        raise argparse.ArgumentTypeError(f"must be >= 0, got {value}")
    return value


def _seed(text: str) -> int:
    return int(text, 0) & MASK64


def _resize(text: str):
    if text.lower() == "none":
        return None
    parts = text.lower().split("x")
    if len(parts) != 2:
        raise argparse.ArgumentTypeError(f"expected ROWSxCOLS, got {text!r}")
    try:
        rows, cols = int(parts[0]), int(parts[1])
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected ROWSxCOLS, got {text!r}") from None
    if rows < 1 or cols < 1:
        raise argparse.ArgumentTypeError(f"resize dims must be >= 1, got {text!r}")
    return rows, cols


def _load_config(path) -> dict:
    if path is None:
        return {}
    try:
        with open(path) as fh:
            cfg = json.load(fh)
    except OSError as exc:
        raise InvalidParams(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise InvalidParams(f"config {path} is not valid JSON: {exc}") from exc
    if not isinstance(cfg, dict):
        raise InvalidParams(f"config {path} must hold a JSON object")
    return cfg


def _resolve_seed(args, cfg: dict) -> int:
    if args.seed is not None:
        return args.seed
    seed = cfg.get("seed", 0)
    if not isinstance(seed, int) or isinstance(seed, bool):
        raise InvalidParams(f"config 'seed' must be an integer, got {seed!r}")
    return seed & MASK64


def _parse_policy_arg(text: str) -> Policy:
    steps = []
    for chunk in text.split(","):
        chunk = chunk.strip()
        if not chunk:
            continue
        kind, sep, magnitude = chunk.partition(":")
        if not sep:
            raise InvalidParams(f"policy step {chunk!r} must look like kind:magnitude")
        try:
            value = float(magnitude)
        except ValueError:
            raise InvalidParams(f"policy step {chunk!r}: bad magnitude {magnitude!r}") from None
        steps.append({"kind": kind.strip(), "magnitude": value})
    return Policy.from_obj(steps)


def _cmd_sample(args) -> int:
    cfg = _load_config(args.config)
    space = space_from_config(cfg)
    n = args.n if args.n is not None else n_from_config(cfg, space)
    seed = _resolve_seed(args, cfg)
    policy = sample_policy(space, n, RandomSource(seed))
    print(json.dumps({"seed": seed, "n": n, "steps": policy.to_obj()}))
    return 0


def _cmd_augment(args) -> int:
    cfg = _load_config(args.config)
    space = space_from_config(cfg)
    n = args.n if args.n is not None else n_from_config(cfg, space)
    seed = _resolve_seed(args, cfg)
    manifest = ingest(args.input, args.layout)
    report = run_augment(manifest, space, n, args.copies, SeedPlan(seed), args.output, workers=args.workers)
    print(json.dumps(report.to_obj()))
    return 1 if report.failures else 0


def _cmd_features(args) -> int:
    params = MelParams(n_fft=args.n_fft, hop=args.hop, n_mels=args.n_mels)
    report = run_features(args.input, args.output, params, resize=args.resize, png=args.png, workers=args.workers)
    print(json.dumps(report.to_obj()))
    return 1 if report.failures else 0


def _cmd_preview(args) -> int:
    policy = _parse_policy_arg(args.policy)
    w = read_wav(args.input)
    seed = args.seed if args.seed is not None else 0
    out = apply_policy(w, policy, RandomSource(splitmix64(seed)))
    write_wav(args.output, out)
    print(json.dumps({"output": str(args.output), "samples": len(out)}))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="waveaug", description="Deterministic audio augmentation batch tool.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sample", help="sample one policy and print it as JSON")
    p.add_argument("--n", type=_nonnegative_int, default=None, help="number of augmentations to draw")
    p.add_argument("--seed", type=_seed, default=None, help="sampling stream seed")
    p.add_argument("--config", default=None, help="JSON config file")
    p.set_defaults(func=_cmd_sample)

    p = sub.add_parser("augment", help="augment a dataset directory")
    p.add_argument("--input", required=True, help="dataset root directory")
    p.add_argument("--output", required=True, help="output directory")
    p.add_argument("--layout", choices=["fsdd", "urbansound8k", "flat"], default="flat")
    p.add_argument("--n", type=_nonnegative_int, default=None)
    p.add_argument("--copies", type=_positive_int, default=1, help="augmented copies per input")
    p.add_argument("--seed", type=_seed, default=None, help="master seed")
    p.add_argument("--config", default=None)
    p.add_argument("--workers", type=_positive_int, default=1)
    p.set_defaults(func=_cmd_augment)

    p = sub.add_parser("features", help="export mel-spectrogram tensors")
    p.add_argument("--input", required=True, help="WAV directory or manifest.jsonl")
    p.add_argument("--output", required=True)
    p.add_argument("--n-fft", type=_positive_int, default=1024)
    p.add_argument("--hop", type=_positive_int, default=512)
    p.add_argument("--n-mels", type=_positive_int, default=64)
    p.add_argument("--resize", type=_resize, default=(32, 32), help="ROWSxCOLS or 'none'")
    p.add_argument("--png", action="store_true", help="also write grayscale PNG previews")
    p.add_argument("--workers", type=_positive_int, default=1)
    p.set_defaults(func=_cmd_features)

    p = sub.add_parser("preview", help="apply an explicit policy to one file")
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--policy", required=True, help='steps as "kind:magnitude,kind:magnitude"')
    p.add_argument("--seed", type=_seed, default=None, help="work seed; application reads splitmix64(seed)")
    p.set_defaults(func=_cmd_preview)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except WaveaugError as exc:
        # class name included so callers wrapping the CLI can preserve it
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
