"""Command-line interface.

Subcommands: train, eval, score, sweep, ablate, analyze, synth. Every run
writes a manifest JSON next to its primary output holding the resolved
configuration, input digests, and a run id; ``--from-manifest`` replays a
train or eval run from that file alone and reproduces its outputs byte for
byte.

Exit codes: 0 success, 2 configuration error, 3 data error, 4 numeric
failure, 5 I/O failure. The environment variable HYPEROCC_SEED, when set,
overrides --seed (useful to pin CI runs without touching scripts).
"""

import argparse
import hashlib
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor

from . import analysis, focc, metrics, scoring, synth, training
from .center import (
    Center,
    CenterKind,
    feature_mean_center,
    make_center,
    set_norm,
)
from .errors import ConfigError, HyperOCCError
from .projector import init_projector, load_model, save_model

MANIFEST_VERSION = 1

_KIND_FLAGS = {
    "normal": CenterKind.STANDARD_NORMAL,
    "uniform": CenterKind.UNIFORM01,
    "ones": CenterKind.ALL_ONES,
    "feature-mean": CenterKind.FEATURE_MEAN,
}


def _sha256(path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


def _run_id(subcommand: str, config: dict, inputs: dict) -> str:
    payload = json.dumps(
        {"subcommand": subcommand, "config": config,
         "inputs": {k: v["sha256"] for k, v in inputs.items()}},
        sort_keys=True,
    )
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()[:16]


def _write_manifest(out_path, subcommand: str, config: dict, input_paths: dict,
                    outputs: dict) -> str:
    inputs = {name: {"path": str(p), "sha256": _sha256(p)}
              for name, p in input_paths.items()}
    manifest = {
        "tool": "hyperocc",
        "manifest_version": MANIFEST_VERSION,
        "subcommand": subcommand,
        "config": config,
        "inputs": inputs,
        "outputs": {k: str(v) for k, v in outputs.items()},
        "run_id": _run_id(subcommand, config, inputs),
    }
    path = str(out_path) + ".manifest.json"
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(json.dumps(manifest, sort_keys=True, indent=2) + "\n")
    return path


def _load_manifest(path, expect_subcommand: str) -> dict:
    with open(path, encoding="utf-8") as fh:
        manifest = json.load(fh)
    if manifest.get("subcommand") != expect_subcommand:
        raise ConfigError(
            f"manifest is for {manifest.get('subcommand')!r}, "
            f"not {expect_subcommand!r}"
        )
    for name, entry in manifest.get("inputs", {}).items():
        if _sha256(entry["path"]) != entry["sha256"]:
            raise ConfigError(
                f"input {name} at {entry['path']} changed since the manifest "
                "was written; refusing to replay"
            )
    return manifest


def _resolve_seed(value: int) -> int:
    env = os.environ.get("HYPEROCC_SEED")
    if env is not None:
        try:
            return int(env)
        except ValueError as exc:
            raise ConfigError(f"HYPEROCC_SEED={env!r} is not an integer") from exc
    return value


def _build_center(kind_flag: str, dim: int, seed: int, norm: float,
                  train: focc.FeatureSet | None) -> Center:
    kind = _KIND_FLAGS[kind_flag]
    if norm <= 0:
        # Surfaces as the dedicated zero-center config error.
        return set_norm(make_center(dim, CenterKind.STANDARD_NORMAL, seed), norm)
    if kind is CenterKind.FEATURE_MEAN:
        if train is None:
            raise ConfigError("feature-mean center needs training features")
        center = feature_mean_center(train, seed=seed)
    else:
        center = make_center(dim, kind, seed=seed)
    if norm != 1.0:
        center = set_norm(center, norm)
    return center


def _add_train_flags(p: argparse.ArgumentParser):
    p.add_argument("--radius", type=float, default=1e-5)
    p.add_argument("--lr", type=float, default=1e-4)
    p.add_argument("--weight-decay", type=float, default=5e-4)
    p.add_argument("--epochs", type=int, default=20)
    p.add_argument("--batch-size", type=int, default=64)
    p.add_argument("--seed", type=int, default=1024)
    p.add_argument("--center-dist", choices=sorted(_KIND_FLAGS), default="normal")
    p.add_argument("--center-norm", type=float, default=1.0)
    p.add_argument("--center-seed", type=int, default=None,
                   help="defaults to --seed")


def _train_config_dict(args) -> dict:
    seed = _resolve_seed(args.seed)
    return {
        "radius": args.radius,
        "lr": args.lr,
        "weight_decay": args.weight_decay,
        "epochs": args.epochs,
        "batch_size": args.batch_size,
        "seed": seed,
        "online": bool(getattr(args, "online", False)),
        "center_dist": args.center_dist,
        "center_norm": args.center_norm,
        "center_seed": args.center_seed if args.center_seed is not None else seed,
    }


def _train_from_config(config: dict, features_path):
    train = focc.read_focc(features_path)
    center = _build_center(config["center_dist"], train.channels,
                           config["center_seed"], config["center_norm"], train)
    if config["online"]:
        if config["epochs"] != 1 or config["batch_size"] != 1:
            raise ConfigError("--online requires --epochs 1 and --batch-size 1")
        cfg = training.TrainConfig(
            radius=config["radius"], lr=config["lr"],
            weight_decay=config["weight_decay"], epochs=1, batch_size=1,
            seed=config["seed"], mode="online")
        model = init_projector(train.channels, center.dim, seed=config["seed"])
        _, trace = training.fit_online(model, train, center, cfg)
    else:
        cfg = training.TrainConfig(
            radius=config["radius"], lr=config["lr"],
            weight_decay=config["weight_decay"], epochs=config["epochs"],
            batch_size=config["batch_size"], seed=config["seed"])
        model = init_projector(train.channels, center.dim, seed=config["seed"])
        _, trace = training.fit_offline(model, train, center, cfg)
    return model, center, trace


def cmd_train(args) -> int:
    if args.from_manifest:
        manifest = _load_manifest(args.from_manifest, "train")
        config = manifest["config"]
        features_path = manifest["inputs"]["features"]["path"]
    else:
        if not args.features:
            raise ConfigError("train needs --features (or --from-manifest)")
        config = _train_config_dict(args)
        features_path = args.features
    model, center, trace = _train_from_config(config, features_path)
    save_model(args.out, model, center, config["radius"])
    outputs = {"model": args.out}
    if args.trace:
        with open(args.trace, "w", encoding="utf-8") as fh:
            fh.write(trace.to_csv())
        outputs["trace"] = args.trace
    _write_manifest(args.out, "train", config, {"features": features_path}, outputs)
    print(f"trained on {trace.samples_seen} sample visits; "
          f"final epoch loss "
          f"{trace.epoch_losses[-1] if trace.epoch_losses else float('nan'):.6g}")
    if trace.collapse_events:
        print(f"warning: pattern collapse flagged in "
              f"{len(trace.collapse_events)} batches", file=sys.stderr)
    return 0


def cmd_eval(args) -> int:
    if args.from_manifest:
        manifest = _load_manifest(args.from_manifest, "eval")
        config = manifest["config"]
        model_path = manifest["inputs"]["model"]["path"]
        features_path = manifest["inputs"]["features"]["path"]
    else:
        if not (args.model and args.features):
            raise ConfigError("eval needs --model and --features "
                              "(or --from-manifest)")
        config = {"pixel_sigma": args.pixel_sigma}
        model_path, features_path = args.model, args.features
    model, center, radius = load_model(model_path)
    test = focc.read_focc(features_path)
    report = metrics.evaluate(model, test, center, radius,
                              pixel_sigma=config["pixel_sigma"])
    with open(args.out, "w", encoding="utf-8") as fh:
        fh.write(report.to_json())
    outputs = {"report": args.out}
    if args.csv:
        with open(args.csv, "w", encoding="utf-8") as fh:
            fh.write(report.to_csv())
        outputs["csv"] = args.csv
    _write_manifest(args.out, "eval", config,
                    {"model": model_path, "features": features_path}, outputs)
    pixel = "n/a" if report.pixel_auc is None else f"{report.pixel_auc:.6f}"
    print(f"image_auc={report.image_auc:.6f} pixel_auc={pixel} "
          f"(n_pos={report.n_pos}, n_neg={report.n_neg})")
    return 0


def cmd_score(args) -> int:
    model, center, radius = load_model(args.model)
    fs = focc.read_focc(args.features)
    if args.maps_dir:
        os.makedirs(args.maps_dir, exist_ok=True)
    lines = ["sample_id,score,is_anomaly"]
    for i, f in enumerate(fs.data):
        s = scoring.score_sample(model, f, center, radius)
        d = scoring.decide(s, radius)
        lines.append(f"{i},{s:.17g},{int(d.is_anomaly)}")
        if args.maps_dir:
            smap = scoring.score_map(model, f, center, radius)
            if args.map_size:
                h, w = args.map_size
                smap = scoring.upsample_smooth(smap, h, w, sigma=args.pixel_sigma)
            scoring.export_smap(smap, os.path.join(args.maps_dir, f"{i:05d}.smap"))
            scoring.export_pgm(smap, os.path.join(args.maps_dir, f"{i:05d}.pgm"))
    with open(args.out, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")
    _write_manifest(args.out, "score", {"pixel_sigma": args.pixel_sigma},
                    {"model": args.model, "features": args.features},
                    {"scores": args.out})
    print(f"scored {fs.n_samples} samples -> {args.out}")
    return 0


def _sweep_worker(payload):
    train_path, test_path, norm, cfg_kwargs, kind_flag, center_seed = payload
    train = focc.read_focc(train_path)
    test = focc.read_focc(test_path)
    cfg = training.TrainConfig(**cfg_kwargs)
    template = _build_center(kind_flag, train.channels, center_seed, 1.0, train)
    return analysis._sweep_one(train, test, norm, cfg, template)


def cmd_sweep(args) -> int:
    config = _train_config_dict(args)
    norms = [float(v) for v in args.norms.split(",") if v]
    if not norms:
        raise ConfigError("--norms must list at least one value")
    train = focc.read_focc(args.train)
    test = focc.read_focc(args.test)
    cfg = training.TrainConfig(
        radius=config["radius"], lr=config["lr"],
        weight_decay=config["weight_decay"], epochs=config["epochs"],
        batch_size=config["batch_size"], seed=config["seed"])
    template = _build_center(config["center_dist"], train.channels,
                             config["center_seed"], config["center_norm"], train)
    if args.jobs <= 1:
        report = analysis.norm_sweep(train, test, norms, cfg, template)
    else:
        t_norm, t_anom = focc.split_by_label(test)
        base = analysis.cross_cosine_stats(t_norm, t_anom)
        cfg_kwargs = {k: config[k] for k in
                      ("radius", "lr", "weight_decay", "epochs", "batch_size",
                       "seed")}
        payloads = [(args.train, args.test, n, cfg_kwargs, config["center_dist"],
                     config["center_seed"]) for n in sorted(norms)]
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            rows = list(pool.map(_sweep_worker, payloads))
        report = analysis.NormSweepReport(rows=rows, base_cross_cosine=base)
    with open(args.out, "w", encoding="utf-8") as fh:
        fh.write(report.to_csv())
    config["norms"] = sorted(norms)
    config["base_cross_cosine"] = report.base_cross_cosine
    _write_manifest(args.out, "sweep", config,
                    {"train": args.train, "test": args.test},
                    {"sweep": args.out})
    domain = analysis.feasible_domain(report, args.auc_threshold)
    print(f"base_cross_cosine={report.base_cross_cosine:.6f}")
    print(f"feasible_domain(threshold={args.auc_threshold:g}): {domain}")
    return 0


def cmd_ablate(args) -> int:
    config = _train_config_dict(args)
    train = focc.read_focc(args.train)
    test = focc.read_focc(args.test)
    cfg = training.TrainConfig(
        radius=config["radius"], lr=config["lr"],
        weight_decay=config["weight_decay"], epochs=config["epochs"],
        batch_size=config["batch_size"], seed=config["seed"])
    kinds = [_KIND_FLAGS[k] for k in args.kinds.split(",") if k]
    rows = analysis.distribution_ablation(train, test, kinds, cfg,
                                          norm=config["center_norm"])
    lines = ["kind,image_auc"]
    for row in rows:
        lines.append(f"{row.kind.value},{row.image_auc:.17g}")
    with open(args.out, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")
    config["kinds"] = args.kinds
    _write_manifest(args.out, "ablate", config,
                    {"train": args.train, "test": args.test}, {"table": args.out})
    aucs = [row.image_auc for row in rows]
    print(f"ablation spread: {max(aucs) - min(aucs):.6f} "
          f"(min={min(aucs):.6f}, max={max(aucs):.6f})")
    return 0


def cmd_analyze(args) -> int:
    normals = focc.read_focc(args.normals)
    anomalies = focc.read_focc(args.anomalies)
    value = analysis.cross_cosine_stats(normals, anomalies)
    print(f"cross_cosine={value:.6f}")
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(json.dumps({"cross_cosine": value}, sort_keys=True) + "\n")
        _write_manifest(args.out, "analyze", {},
                        {"normals": args.normals, "anomalies": args.anomalies},
                        {"report": args.out})
    return 0


def cmd_synth(args) -> int:
    if args.preset:
        try:
            spec = synth.reference_tasks()[args.preset]
        except KeyError as exc:
            raise ConfigError(f"unknown preset {args.preset!r}") from exc
        if args.seed is not None:
            spec = synth.SynthSpec(**{**spec.__dict__, "seed": _resolve_seed(args.seed)})
    else:
        spec = synth.SynthSpec(
            dim=args.dim, cos_target=args.cos_target,
            within_noise=args.within_noise,
            n_train_normal=args.n_train, n_test_normal=args.n_test_normal,
            n_test_anomaly=args.n_test_anomaly,
            seed=_resolve_seed(args.seed if args.seed is not None else 1024))
    train, test = synth.gen_clusters(spec)
    focc.write_focc(args.out_train, train)
    focc.write_focc(args.out_test, test)
    _write_manifest(args.out_train, "synth", spec.__dict__, {},
                    {"train": args.out_train, "test": args.out_test})
    print(f"wrote {train.n_samples} train / {test.n_samples} test samples")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hyperocc",
        description="Hypersphere one-class anomaly detection toolkit",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="fit a projector on normal features")
    p.add_argument("--features")
    p.add_argument("--out", required=True)
    p.add_argument("--trace")
    p.add_argument("--online", action="store_true")
    p.add_argument("--from-manifest")
    _add_train_flags(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="evaluate a trained model on a test set")
    p.add_argument("--model")
    p.add_argument("--features")
    p.add_argument("--out", required=True)
    p.add_argument("--csv")
    p.add_argument("--pixel-sigma", type=float, default=scoring.DEFAULT_SIGMA)
    p.add_argument("--from-manifest")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("score", help="score samples with a trained model")
    p.add_argument("--model", required=True)
    p.add_argument("--features", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--maps-dir")
    p.add_argument("--map-size", type=int, nargs=2, metavar=("H", "W"))
    p.add_argument("--pixel-sigma", type=float, default=scoring.DEFAULT_SIGMA)
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("sweep", help="retrain across center norms")
    p.add_argument("--train", required=True)
    p.add_argument("--test", required=True)
    p.add_argument("--norms", required=True, help="comma-separated norms")
    p.add_argument("--out", required=True)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--auc-threshold", type=float, default=0.9)
    _add_train_flags(p)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("ablate", help="compare center distributions")
    p.add_argument("--train", required=True)
    p.add_argument("--test", required=True)
    p.add_argument("--kinds", default="normal,uniform,ones,feature-mean")
    p.add_argument("--out", required=True)
    _add_train_flags(p)
    p.set_defaults(func=cmd_ablate)

    p = sub.add_parser("analyze", help="cross-class cosine of raw features")
    p.add_argument("--normals", required=True)
    p.add_argument("--anomalies", required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("synth", help="generate a synthetic two-cluster task")
    p.add_argument("--preset", choices=["LOWSIM", "HIGHSIM"])
    p.add_argument("--dim", type=int, default=64)
    p.add_argument("--cos-target", type=float, default=0.2)
    p.add_argument("--within-noise", type=float, default=0.5)
    p.add_argument("--n-train", type=int, default=512)
    p.add_argument("--n-test-normal", type=int, default=128)
    p.add_argument("--n-test-anomaly", type=int, default=128)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out-train", required=True)
    p.add_argument("--out-test", required=True)
    p.set_defaults(func=cmd_synth)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except HyperOCCError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 5


if __name__ == "__main__":
    sys.exit(main())
