"""Command-line front end.

Every data-path command funnels through the same request handlers the
HTTP service uses, so a file piped through the CLI and a body POSTed to
the service produce identical bytes.

Exit codes: 0 success, 1 usage error, 2 data error.  Flags with a
``SKELEFORM_``-prefixed environment variable fall back to it when the
flag is absent.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from .errors import ModelMissing, SkeleformError
from .losses import (
    ChannelMeanEmbedder,
    LossWeights,
    embedding_l1,
    l1_loss,
    read_tensor,
    style_loss,
    total_objective,
    toy_features,
)
from .mlp import MlpConfig, TrainConfig, grad_check, mlp_init, save_model
from .pose_io import PoseDocument, _loads, load_dataset, write_pose
from .service import (
    AppConfig,
    ModelStore,
    handle_complete,
    handle_deform,
    handle_factors,
    handle_render,
    load_model_file,
    serve,
)
from .synth import synth_dataset
from .training import (
    default_completion_config,
    default_factor_config,
    train_completion_model,
    train_factor_model,
)


def _env(name: str, fallback: str | None = None) -> str | None:
    return os.environ.get(f"SKELEFORM_{name}", fallback)


class _Parser(argparse.ArgumentParser):
    """argparse exits with 2 on usage problems; the contract wants 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _write_output(path: str, text: str) -> None:
    if path == "-":
        sys.stdout.write(text)
    else:
        Path(path).write_text(text, encoding="utf-8")


def _require_model(path: str | None, kind: str) -> ModelStore:
    if not path:
        raise ModelMissing(f"no {kind} model given (flag or SKELEFORM_ variable)")
    model = load_model_file(path, kind)
    if kind == "factor":
        return ModelStore(factor=model)
    return ModelStore(completion=model)


# -- commands ---------------------------------------------------------------


def _cmd_synth(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    poses = synth_dataset(args.n, seed=args.seed)
    for i, k in enumerate(poses):
        doc = PoseDocument([k], source=f"synth:{args.seed}:{i}")
        (out / f"pose_{i:04d}.json").write_text(write_pose(doc), encoding="utf-8")
    print(f"wrote {len(poses)} poses to {out}")
    return 0


def _train_common(args, train, make_config, **extra) -> int:
    poses, warnings = load_dataset(args.data)
    for w in warnings:
        print(f"warning: {w}", file=sys.stderr)
    tc = TrainConfig(
        iterations=args.iterations,
        batch_size=args.batch_size,
        learning_rate=args.learning_rate,
        optimizer=args.optimizer,
        scale_range=(args.scale_lo, args.scale_hi),
        seed=args.seed,
        **extra,
    )
    model, history = train(poses, tc, make_config(seed=args.seed))
    Path(args.out).write_text(save_model(model), encoding="utf-8")
    w = max(1, len(history) // 10)
    print(
        f"{len(history)} iterations; window loss "
        f"{history[:w].mean():.6f} -> {history[-w:].mean():.6f}"
    )
    print(f"saved model to {args.out}")
    return 0


def _cmd_train_factors(args) -> int:
    return _train_common(args, train_factor_model, default_factor_config)


def _cmd_train_completion(args) -> int:
    return _train_common(
        args,
        train_completion_model,
        default_completion_config,
        mask_prob=args.mask_prob,
    )


def _cmd_complete(args) -> int:
    store = _require_model(args.completion_model, "completion")
    body = Path(args.infile).read_bytes()
    _write_output(args.out, handle_complete(body, store, args.confidence_threshold))
    return 0


def _cmd_factors(args) -> int:
    store = _require_model(args.factor_model, "factor")
    body = Path(args.infile).read_bytes()
    _write_output(args.out, handle_factors(body, store, args.confidence_threshold))
    return 0


def _cmd_deform(args) -> int:
    if args.naive and args.tau_a is not None:
        print("error: --naive needs --art, not --tau-a", file=sys.stderr)
        return 1
    payload: dict = {"person": _loads(Path(args.person).read_bytes())}
    if args.art is not None:
        payload["art"] = _loads(Path(args.art).read_bytes())
    if args.tau_a is not None:
        payload["tau_a"] = args.tau_a
    if args.naive:
        payload["naive"] = True
        store = ModelStore()
    else:
        store = _require_model(args.factor_model, "factor")
    text = handle_deform(json.dumps(payload), store, args.confidence_threshold)
    _write_output(args.out, text)
    return 0


def _cmd_render(args) -> int:
    payload = {
        "document": _loads(Path(args.infile).read_bytes()),
        "styles": [
            {
                "stroke_color": args.stroke,
                "joint_radius": args.radius,
                "opacity": args.opacity,
            }
        ],
        "width": args.width,
        "height": args.height,
    }
    _write_output(args.out, handle_render(json.dumps(payload), args.confidence_threshold))
    return 0


_GRADCHECK_BATTERY = [
    ((6, 8, 5), "relu"),
    ((4, 16, 16, 3), "tanh"),
    ((10, 32, 2), "relu"),
    ((5, 7, 7, 7, 4), "tanh"),
]


def _cmd_gradcheck(args) -> int:
    worst = 0.0
    for i, (sizes, activation) in enumerate(_GRADCHECK_BATTERY):
        model = mlp_init(
            MlpConfig(layer_sizes=sizes, activation=activation, seed=args.seed + i)
        )
        rng = np.random.default_rng([args.seed, i])
        x = rng.standard_normal((3, sizes[0]))
        worst = max(worst, grad_check(model, x))
    print(f"max relative gradient error {worst:.3e}")
    return 0 if worst < 1e-4 else 2


def _cmd_loss(args) -> int:
    a = read_tensor(args.a)
    b = read_tensor(args.b)
    if args.kind == "l1":
        value, _ = l1_loss(a, b)
    elif args.kind == "style":
        value, _ = style_loss(
            toy_features(a, args.levels, args.seed),
            toy_features(b, args.levels, args.seed),
        )
    else:
        l1_value, _ = l1_loss(a, b)
        face = embedding_l1(ChannelMeanEmbedder(), a, b)
        style_value, _ = style_loss(
            toy_features(a, args.levels, args.seed),
            toy_features(b, args.levels, args.seed),
        )
        weights = LossWeights(args.lambda_l1, args.lambda_face, args.lambda_r)
        value = total_objective(l1_value, face, style_value, weights)
    print(f"{value:.9g}")
    return 0


def _cmd_serve(args) -> int:
    config = AppConfig(
        factor_model=args.factor_model,
        completion_model=args.completion_model,
        bind=args.bind,
        port=args.port,
        confidence_threshold=args.confidence_threshold,
        static_dir=args.static,
        verbose=args.verbose,
    )
    try:
        serve(config)
    except KeyboardInterrupt:
        pass
    return 0


# -- parser -----------------------------------------------------------------


def _add_model_flags(p: _Parser, factor=False, completion=False) -> None:
    if factor:
        p.add_argument(
            "--factor-model",
            default=_env("FACTOR_MODEL"),
            help="factor model file (env SKELEFORM_FACTOR_MODEL)",
        )
    if completion:
        p.add_argument(
            "--completion-model",
            default=_env("COMPLETION_MODEL"),
            help="completion model file (env SKELEFORM_COMPLETION_MODEL)",
        )


def _add_threshold_flag(p: _Parser) -> None:
    p.add_argument(
        "--confidence-threshold",
        type=float,
        default=_env("CONFIDENCE_THRESHOLD", "0.0"),
        help="joints at or below this detector confidence count as invisible",
    )


def _add_train_flags(p: _Parser) -> None:
    p.add_argument("--data", required=True, help="directory of pose .json files")
    p.add_argument("--out", required=True, help="model file to write")
    p.add_argument("--iterations", type=int, default=4000)
    p.add_argument("--batch-size", type=int, default=32)
    p.add_argument("--learning-rate", type=float, default=1e-3)
    p.add_argument("--optimizer", choices=("sgd", "adam"), default="adam")
    p.add_argument("--scale-lo", type=float, default=0.5)
    p.add_argument("--scale-hi", type=float, default=2.0)
    p.add_argument("--seed", type=int, default=0)


def build_parser() -> _Parser:
    parser = _Parser(prog="skeleform", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("synth", help="generate a synthetic pose dataset")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=_cmd_synth)

    p = sub.add_parser("train-factors", help="train the group-factor predictor")
    _add_train_flags(p)
    p.set_defaults(func=_cmd_train_factors)

    p = sub.add_parser("train-completion", help="train the joint completer")
    _add_train_flags(p)
    p.add_argument("--mask-prob", type=float, default=0.2)
    p.set_defaults(func=_cmd_train_completion)

    p = sub.add_parser("complete", help="fill invisible joints in a pose file")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out", default="-")
    _add_model_flags(p, completion=True)
    _add_threshold_flag(p)
    p.set_defaults(func=_cmd_complete)

    p = sub.add_parser("factors", help="predict group factors for a pose file")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out", default="-")
    _add_model_flags(p, factor=True)
    _add_threshold_flag(p)
    p.set_defaults(func=_cmd_factors)

    p = sub.add_parser("deform", help="retarget a person pose to art proportions")
    p.add_argument("--person", required=True)
    source = p.add_mutually_exclusive_group(required=True)
    source.add_argument("--art", help="art pose file; factors predicted from it")
    source.add_argument(
        "--tau-a", type=float, nargs=6, metavar="T", help="six explicit art factors"
    )
    p.add_argument("--naive", action="store_true", help="copy art lengths directly")
    p.add_argument("--out", default="-")
    _add_model_flags(p, factor=True)
    _add_threshold_flag(p)
    p.set_defaults(func=_cmd_deform)

    p = sub.add_parser("render", help="draw a pose file as SVG")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out", default="-")
    p.add_argument("--width", type=int, default=512)
    p.add_argument("--height", type=int, default=512)
    p.add_argument("--stroke", default="#1f77b4")
    p.add_argument("--radius", type=float, default=4.0)
    p.add_argument("--opacity", type=float, default=1.0)
    _add_threshold_flag(p)
    p.set_defaults(func=_cmd_render)

    p = sub.add_parser("gradcheck", help="compare backprop against finite differences")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=_cmd_gradcheck)

    p = sub.add_parser("loss", help="evaluate loss kernels on two tensor files")
    p.add_argument("--kind", choices=("l1", "style", "total"), default="l1")
    p.add_argument("--a", required=True)
    p.add_argument("--b", required=True)
    p.add_argument("--levels", type=int, default=2)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--lambda-l1", type=float, default=200.0)
    p.add_argument("--lambda-face", type=float, default=1.0)
    p.add_argument("--lambda-r", type=float, default=1.0)
    p.set_defaults(func=_cmd_loss)

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--bind", default=_env("BIND", "127.0.0.1"))
    p.add_argument("--port", type=int, default=_env("PORT", "8706"))
    _add_model_flags(p, factor=True, completion=True)
    _add_threshold_flag(p)
    p.add_argument("--static", default=None, help="directory of editor assets to serve")
    p.add_argument("--verbose", action="store_true")
    p.set_defaults(func=_cmd_serve)

    return parser


def cli_main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return e.code if isinstance(e.code, int) else 0
    try:
        return args.func(args)
    except SkeleformError as e:
        where = f" ({e.detail})" if e.detail else ""
        print(f"error[{e.code}]: {e}{where}", file=sys.stderr)
        return 2
    except OSError as e:
        print(f"error[io]: {e}", file=sys.stderr)
        return 2


def main() -> None:
    raise SystemExit(cli_main())


if __name__ == "__main__":
    main()
