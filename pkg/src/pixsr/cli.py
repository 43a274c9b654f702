"""Command-line interface.

Verbs: upsample, baseline, synth, bench, check-grad.  The CLI is a thin
shell over the library: every number it prints can be reproduced by calling
the corresponding library functions with the same configuration.

Options may also come from a key=value config file (--config); explicit
flags win over config entries, which win over defaults.  Keys use the flag
names with dashes replaced by underscores (e.g. lambda_g=0.001).
"""

import argparse
import csv
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from .baselines import bicubic_upsample, guided_filter_upsample
from .fileio import read_image, write_pfm, write_png
from .gradcheck import check_gradients
from .imaging import compute_norm_stats, coordinate_channels, normalize
from .metrics import evaluate, format_aggregate_table
from .network import ModelConfig, init_model
from .solver import TrainConfig, fit, kink_signature, objective, sample_batch
from .synth import SceneSpec, generate, make_source
from .validation import as_guide, as_source, infer_factor


def _read_config(path):
    values = {}
    with open(path, "r", encoding="utf-8") as f:
        for lineno, line in enumerate(f, 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected key=value, got {line!r}")
            key, _, value = line.partition("=")
            values[key.strip().replace("-", "_")] = value.strip()
    return values


def _resolve(args, config, name, cast, default):
    value = getattr(args, name, None)
    if value is None and name in config:
        value = cast(config[name])
    return default if value is None else value


def _require(args, config, name):
    value = _resolve(args, config, name, str, None)
    if value is None:
        raise ValueError(f"--{name} is required (flag or config entry)")
    return value


def _add_fit_flags(p):
    p.add_argument("--iters", type=int, default=None, help="training iterations")
    p.add_argument("--lr", type=float, default=None, help="learning rate")
    p.add_argument("--batch", type=int, default=None, help="blocks per batch")
    p.add_argument("--lambda-g", type=float, default=None, dest="lambda_g")
    p.add_argument("--lambda-x", type=float, default=None, dest="lambda_x")
    p.add_argument("--lambda-head", type=float, default=None, dest="lambda_head")
    p.add_argument("--width", type=int, default=None, help="hidden layer width")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--config", default=None, help="key=value config file")


def _configs_from(args, config):
    model_cfg = ModelConfig(
        hidden_width=_resolve(args, config, "width", int, 32),
        init_seed=_resolve(args, config, "seed", int, 0),
        lambda_g=_resolve(args, config, "lambda_g", float, 1e-3),
        lambda_x=_resolve(args, config, "lambda_x", float, 1e-4),
        lambda_head=_resolve(args, config, "lambda_head", float, 1e-4),
    )
    train_cfg = TrainConfig(
        learning_rate=_resolve(args, config, "lr", float, 0.001),
        batch_blocks=_resolve(args, config, "batch", int, 32),
        iterations=_resolve(args, config, "iters", int, 32000),
        seed=_resolve(args, config, "seed", int, 0),
    )
    return model_cfg, train_cfg


def _print_report(report):
    print(f"mse={report.mse:.12g}")
    print(f"mae={report.mae:.12g}")
    print(f"pbp={report.pbp:.12g} (delta={report.delta:g})")


def _write_trace(path, trace):
    with open(path, "w", newline="", encoding="ascii") as f:
        writer = csv.writer(f)
        writer.writerow(["iteration", "data_loss", "penalty", "total"])
        for it, data_loss, penalty in trace:
            writer.writerow(
                [it, f"{data_loss:.17g}", f"{penalty:.17g}", f"{data_loss + penalty:.17g}"]
            )


def cmd_upsample(args):
    config = _read_config(args.config) if args.config else {}
    source = as_source(read_image(_require(args, config, "source")))
    guide = as_guide(read_image(_require(args, config, "guide")))
    factor = _resolve(args, config, "factor", int, None)
    infer_factor(guide.shape[0], source.shape[0], factor)
    model_cfg, train_cfg = _configs_from(args, config)

    result = fit(source, guide, model_cfg, train_cfg)
    write_pfm(_require(args, config, "out"), result.prediction)
    trace_path = _resolve(args, config, "trace", str, None)
    if trace_path:
        _write_trace(trace_path, result.loss_trace)

    truth_path = _resolve(args, config, "truth", str, None)
    if truth_path:
        truth = read_image(truth_path)
        delta = _resolve(args, config, "delta", float, 1.0)
        _print_report(evaluate(result.prediction, truth, delta))
    return 0


def cmd_baseline(args):
    config = _read_config(args.config) if args.config else {}
    source = as_source(read_image(args.source))
    kind = args.baseline or "bicubic"
    guide = as_guide(read_image(args.guide)) if args.guide else None
    if guide is not None:
        factor = infer_factor(guide.shape[0], source.shape[0], args.factor)
    elif args.factor is not None:
        factor = int(args.factor)
    else:
        raise ValueError("--factor is required when no guide is given")

    if kind == "bicubic":
        prediction = bicubic_upsample(source, factor)
    elif kind == "guided_filter":
        if guide is None:
            raise ValueError("the guided_filter baseline needs --guide")
        prediction = guided_filter_upsample(source, guide, factor)
    else:
        raise ValueError(f"unknown baseline {kind!r}")
    write_pfm(args.out, prediction)

    if args.truth:
        truth = read_image(args.truth)
        delta = _resolve(args, config, "delta", float, 1.0)
        _print_report(evaluate(prediction, truth, delta))
    return 0


def cmd_synth(args):
    spec = SceneSpec(
        kind=args.kind,
        size=args.size,
        channels=args.channels,
        seed=args.seed if args.seed is not None else 0,
        stripe_width=args.stripe_width,
    )
    guide, target = generate(spec)
    source = make_source(target, args.factor)
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    write_png(outdir / "guide.png", guide, vmin=0.0, vmax=1.0)
    write_pfm(outdir / "target.pfm", target)
    write_pfm(outdir / "source.pfm", source)
    print(f"wrote scene {args.kind} (N={args.size}, D={args.factor}) to {outdir}")
    return 0


def _bench_methods(args):
    selector = args.baseline or "all"
    methods = ["ours"]
    if selector in ("bicubic", "all"):
        methods.append("bicubic")
    if selector in ("guided_filter", "all"):
        methods.append("guided_filter")
    return methods


def _bench_one(scene_dir, factor, model_cfg, train_cfg, methods, delta):
    source = as_source(read_image(scene_dir / "source.pfm"))
    guide_path = scene_dir / "guide.png"
    if not guide_path.exists():
        guide_path = scene_dir / "guide.pfm"
    guide = as_guide(read_image(guide_path))
    truth = read_image(scene_dir / "target.pfm")
    infer_factor(guide.shape[0], source.shape[0], factor)

    reports = {}
    for method in methods:
        if method == "ours":
            pred = fit(source, guide, model_cfg, train_cfg).prediction
        elif method == "bicubic":
            pred = bicubic_upsample(source, guide.shape[0] // source.shape[0])
        else:
            pred = guided_filter_upsample(source, guide)
        reports[method] = evaluate(pred, truth, delta)
    return reports


def cmd_bench(args):
    config = _read_config(args.config) if args.config else {}
    data_dir = Path(args.data)
    scene_dirs = sorted(p for p in data_dir.iterdir() if p.is_dir()) if data_dir.is_dir() else []
    if not scene_dirs:
        raise ValueError(f"no scene directories found under {args.data}")

    model_cfg, train_cfg = _configs_from(args, config)
    methods = _bench_methods(args)
    delta = _resolve(args, config, "delta", float, 1.0)
    factor = _resolve(args, config, "factor", int, None)

    def run(scene_dir):
        try:
            return scene_dir.name, _bench_one(
                scene_dir, factor, model_cfg, train_cfg, methods, delta
            ), None
        except (ValueError, OSError, RuntimeError) as exc:
            return scene_dir.name, None, str(exc)

    workers = max(1, int(os.environ.get("PIXSR_THREADS", "1")))
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(run, scene_dirs))
    else:
        results = [run(d) for d in scene_dirs]

    rows = []
    per_method = {m: [] for m in methods}
    for name, reports, error in results:
        if reports is None:
            print(f"warning: skipping {name}: {error}", file=sys.stderr)
            rows.append([name, "-", "skipped", "", "", ""])
            continue
        for method in methods:
            r = reports[method]
            rows.append(
                [name, method, "ok", f"{r.mse:.12g}", f"{r.mae:.12g}", f"{r.pbp:.12g}"]
            )
            per_method[method].append(r)

    if not any(per_method.values()):
        raise ValueError("no scene could be processed")

    out_csv = f"{args.out}.csv"
    with open(out_csv, "w", newline="", encoding="ascii") as f:
        writer = csv.writer(f)
        writer.writerow(["scene", "method", "status", "mse", "mae", "pbp"])
        writer.writerows(rows)
        for method in methods:
            agg = {
                k: v
                for k, v in zip(
                    ("mse", "mae", "pbp"),
                    zip(*[(r.mse, r.mae, r.pbp) for r in per_method[method]]),
                )
            }
            means = [f"{np.mean(agg[k]):.12g}" for k in ("mse", "mae", "pbp")]
            stds = [f"{np.std(agg[k]):.12g}" for k in ("mse", "mae", "pbp")]
            writer.writerow(["(mean)", method, "ok"] + means)
            writer.writerow(["(std)", method, "ok"] + stds)

    table = format_aggregate_table(per_method, delta)
    print(table)
    print(f"wrote {out_csv}")
    return 0


def cmd_check_grad(args):
    """Gradient check of the full objective on a small synthetic fixture."""
    seed = args.seed if args.seed is not None else 0
    spec = SceneSpec(kind="two_tone", size=32, channels=3, seed=seed)
    guide, target = generate(spec)
    source = make_source(target, 4)
    source_norm = normalize(source, compute_norm_stats(source))
    guide_norm = normalize(guide, compute_norm_stats(guide))
    coords = coordinate_channels(32)

    model_cfg = ModelConfig(hidden_width=args.width or 8, init_seed=seed)
    params = init_model(model_cfg, channels=3)
    rng = np.random.default_rng(seed)
    blocks = sample_batch(rng, source.shape[0] ** 2, 32)

    report = check_gradients(
        params,
        lambda p: objective(p, source_norm, guide_norm, coords, blocks),
        step=args.step,
        tol=args.tol,
        kink_fn=lambda p: kink_signature(p, source_norm, guide_norm, coords, blocks),
    )
    print(report.summary())
    return 0 if report.passed else 1


def build_parser():
    parser = argparse.ArgumentParser(
        prog="pixsr", description="Guided upsampling of low-resolution maps"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("upsample", help="fit the mapping and write the prediction")
    p.add_argument("--source", default=None)
    p.add_argument("--guide", default=None)
    p.add_argument("--truth", default=None)
    p.add_argument("--out", default=None)
    p.add_argument("--factor", type=int, default=None)
    p.add_argument("--delta", type=float, default=None, help="PBP threshold")
    p.add_argument("--trace", default=None, help="write the loss trace CSV here")
    _add_fit_flags(p)
    p.set_defaults(func=cmd_upsample)

    p = sub.add_parser("baseline", help="run a baseline upsampler")
    p.add_argument("--source", required=True)
    p.add_argument("--guide", default=None)
    p.add_argument("--truth", default=None)
    p.add_argument("--out", required=True)
    p.add_argument("--factor", type=int, default=None)
    p.add_argument("--baseline", choices=["bicubic", "guided_filter"], default="bicubic")
    p.add_argument("--delta", type=float, default=None)
    p.add_argument("--config", default=None)
    p.set_defaults(func=cmd_baseline)

    p = sub.add_parser("synth", help="write a synthetic (guide, target, source) scene")
    p.add_argument("--kind", required=True)
    p.add_argument("--size", type=int, default=128)
    p.add_argument("--factor", type=int, default=8)
    p.add_argument("--channels", type=int, default=3)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--stripe-width", type=int, default=3, dest="stripe_width")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("bench", help="evaluate method and baselines over a scene directory")
    p.add_argument("--data", required=True, help="directory of scene subdirectories")
    p.add_argument("--out", required=True, help="output prefix for the CSV report")
    p.add_argument("--factor", type=int, default=None)
    p.add_argument(
        "--baseline", choices=["none", "bicubic", "guided_filter", "all"], default="all"
    )
    p.add_argument("--delta", type=float, default=None)
    _add_fit_flags(p)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("check-grad", help="finite-difference check on a fixture")
    p.add_argument("--width", type=int, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--step", type=float, default=1e-5)
    p.add_argument("--tol", type=float, default=1e-4)
    p.set_defaults(func=cmd_check_grad)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
