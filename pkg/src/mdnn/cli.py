"""Command-line entry points: dataset generation, training, evaluation,
gradient checking, and hyperparameter grids.

Every command that accepts ``--seed`` is bit-reproducible in its primary
outputs. Results accumulate in an append-only CSV with the fixed header
``dataset,model,L,lambda,alpha,r,lr,batch,repr_dim,svm_C,seed,accuracy,wall_ms``.
The environment variable ``MDNN_OUT_DIR`` supplies the directory for default
output paths when a command's output flag is omitted.
"""

import argparse
import csv
import functools
import json
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from . import gradcheck
from .baselines import FisherLDA, LinearCCA, RFFKernelCCA
from .checkpoint import load_model, model_kind, save_model
from .datasets import (
    DatasetBundle,
    bundle,
    gen_noisy_mnist,
    gen_synth_gaussian,
    load_dataset,
    load_idx,
    save_dataset,
    select_labeled,
)
from .errors import MdnnError
from .evaluation import cross_view_eval
from .network import CoupledModel, TrainConfig, train

RESULTS_HEADER = [
    "dataset", "model", "L", "lambda", "alpha", "r", "lr", "batch",
    "repr_dim", "svm_C", "seed", "accuracy", "wall_ms",
]

LAMBDA_GRID = (1e-1, 1.0, 1e1, 1e2, 1e3, 1e4)
ALPHA_GRID = (1e-1, 1e-2, 1e-3, 1e-4, 1e-5)

DEFAULT_HIDDEN = {
    "noisy-mnist": (1024, 1024, 1024),
    "webkb": (128, 128),
    "fox": (512, 512, 512),
    "cnn": (512, 512, 512),
}
DEFAULT_REPR_DIM = {"webkb": 10}
FALLBACK_HIDDEN = (256, 256, 256)

COUPLED_MODES = ("mdnn", "dcca", "dlda")
CLASSICAL_MODES = ("cca", "lda", "kcca")


@dataclass
class RunRecord:
    dataset: str
    model: str
    L: int
    lam: object = ""
    alpha: object = ""
    r: object = ""
    lr: object = ""
    batch: object = ""
    repr_dim: object = ""
    svm_C: object = ""
    seed: object = ""
    accuracy: object = ""
    wall_ms: object = ""

    def row(self):
        return [
            self.dataset, self.model, self.L, self.lam, self.alpha, self.r,
            self.lr, self.batch, self.repr_dim, self.svm_C, self.seed,
            self.accuracy, self.wall_ms,
        ]


def append_records(csv_path, records):
    """Append rows to the results CSV, writing the fixed header when new."""
    new_file = not os.path.exists(csv_path) or os.path.getsize(csv_path) == 0
    with open(csv_path, "a", newline="") as f:
        writer = csv.writer(f)
        if new_file:
            writer.writerow(RESULTS_HEADER)
        for record in records:
            writer.writerow(record.row())


def out_path(name, flag_value):
    if flag_value:
        return flag_value
    return os.path.join(os.environ.get("MDNN_OUT_DIR", "."), name)


def parse_floats(text):
    return tuple(float(tok) for tok in text.split(",") if tok.strip())


def parse_ints(text):
    return tuple(int(tok) for tok in text.split(",") if tok.strip())


# ---------------------------------------------------------------------------
# generate


def find_mnist_file(directory, stems):
    for stem in stems:
        for suffix in ("", ".gz"):
            candidate = os.path.join(directory, stem + suffix)
            if os.path.exists(candidate):
                return candidate
    raise FileNotFoundError(
        f"none of {stems} (optionally .gz) found under {directory!r}"
    )


def cmd_generate(args):
    if args.dataset == "noisy-mnist":
        images_tr = load_idx(
            find_mnist_file(args.mnist_dir, ["train-images-idx3-ubyte", "train-images.idx3-ubyte"])
        )
        labels_tr = load_idx(
            find_mnist_file(args.mnist_dir, ["train-labels-idx1-ubyte", "train-labels.idx1-ubyte"])
        )
        images_te = load_idx(
            find_mnist_file(args.mnist_dir, ["t10k-images-idx3-ubyte", "t10k-images.idx3-ubyte"])
        )
        labels_te = load_idx(
            find_mnist_file(args.mnist_dir, ["t10k-labels-idx1-ubyte", "t10k-labels.idx1-ubyte"])
        )
        if args.subsample:
            n_tr, n_te = args.subsample
            images_tr, labels_tr = images_tr[:n_tr], labels_tr[:n_tr]
            images_te, labels_te = images_te[:n_te], labels_te[:n_te]
        train_split = gen_noisy_mnist(images_tr, labels_tr, seed=args.seed, split="train")
        test_split = gen_noisy_mnist(
            images_te, labels_te, seed=args.seed + 1, split="test"
        )
        data = bundle(
            "noisy-mnist",
            args.seed,
            {"mnist_dir": args.mnist_dir, "subsample": list(args.subsample or [])},
            train_split,
            test_split,
        )
    else:
        data = gen_synth_gaussian(
            class_count=args.classes,
            d1=args.d1,
            d2=args.d2,
            n=args.n_train,
            separation=args.separation,
            shared_dim=args.shared_dim,
            noise=args.noise,
            seed=args.seed,
            n_test=args.n_test,
        )
    path = out_path(f"{data.manifest.name}.mvds", args.out)
    save_dataset(path, data)
    print(data.manifest.summary())
    print(f"wrote {path}")
    return 0


# ---------------------------------------------------------------------------
# train


def load_config_file(path):
    with open(path) as f:
        blob = json.load(f)
    allowed = set(TrainConfig.__dataclass_fields__) - {"input_dims"}
    unknown = set(blob) - allowed
    if unknown:
        raise MdnnError(f"{path}: unknown config fields {sorted(unknown)}")
    return blob


def resolve(flag_value, config_blob, key, fallback):
    if flag_value is not None:
        return flag_value
    if key in config_blob:
        return config_blob[key]
    return fallback


def prepare_train_split(data, args):
    split = data.train
    if args.labels is not None:
        split = select_labeled(split, args.labels, seed=args.seed)
    return split


def fit_model(args, data):
    """Train/fit the requested model kind on the prepared train split; returns
    (model, history, train config or None)."""
    split = prepare_train_split(data, args)
    name = data.manifest.name
    config_blob = load_config_file(args.config) if args.config else {}
    repr_default = DEFAULT_REPR_DIM.get(name, data.manifest.class_count)

    if args.mode in COUPLED_MODES:
        hidden = (
            tuple(parse_ints(args.hidden))
            if args.hidden
            else tuple(config_blob.get("hidden_layers", DEFAULT_HIDDEN.get(name, FALLBACK_HIDDEN)))
        )
        config = TrainConfig(
            hidden_layers=hidden,
            repr_dim=int(resolve(args.repr_dim, config_blob, "repr_dim", repr_default)),
            lam=float(resolve(args.lam, config_blob, "lam", 10.0)),
            alpha=float(resolve(args.alpha, config_blob, "alpha", 1e-4)),
            r=float(resolve(args.r, config_blob, "r", 1e-4)),
            epochs=int(resolve(args.epochs, config_blob, "epochs", 150)),
            batch_size=int(resolve(args.batch_size, config_blob, "batch_size", 400)),
            learning_rate=float(resolve(args.lr, config_blob, "learning_rate", 1e-3)),
            seed=int(args.seed),
            mode=args.mode,
        )
        if args.mode == "dcca":
            config = replace(config, lam=0.0)
        model, history = train(config, split)
        model.dataset_name = name
        return model, history, config

    repr_dim = int(args.repr_dim) if args.repr_dim is not None else repr_default
    r = float(args.r) if args.r is not None else 1e-4
    X1 = split.view1.T.astype(np.float64)
    X2 = split.view2.T.astype(np.float64)
    if args.mode == "cca":
        model = LinearCCA(n_components=repr_dim, r=r).fit([X1, X2])
    elif args.mode == "kcca":
        model = RFFKernelCCA(
            n_components=repr_dim,
            n_features=args.rff_features,
            bandwidth=args.bandwidth,
            r=r,
            seed=args.seed,
        ).fit([X1, X2])
    else:  # lda on the labeled primary view
        labeled = np.flatnonzero(split.labeled_mask)
        k = (
            int(args.repr_dim)
            if args.repr_dim is not None
            else max(1, data.manifest.class_count - 1)
        )
        model = FisherLDA(n_components=k, r=r).fit(
            X1[labeled], split.labels[labeled]
        )
    # stamp the labeled budget so eval reproduces the same visible subset
    model.train_labeled_count_ = split.labeled_count
    model.label_seed_ = int(args.seed)
    return model, None, None


def cmd_train(args):
    data = load_dataset(args.data)
    started = time.perf_counter()
    model, history, config = fit_model(args, data)
    wall_ms = int(1000 * (time.perf_counter() - started))

    ckpt = out_path(f"{data.manifest.name}-{args.mode}.ckpt.npz", args.out)
    save_model(ckpt, model)

    labeled = (
        model.train_labeled_count
        if isinstance(model, CoupledModel)
        else int(args.labels if args.labels is not None else data.train.labeled_count)
    )
    record = {
        "dataset": data.manifest.name,
        "model": args.mode,
        "L": labeled,
        "seed": args.seed,
        "wall_ms": wall_ms,
        "checkpoint": ckpt,
    }
    if config is not None:
        record.update(
            {
                "lambda": config.lam,
                "alpha": config.alpha,
                "r": config.r,
                "lr": config.learning_rate,
                "batch": config.batch_size,
                "repr_dim": config.repr_dim,
                "hidden_layers": list(config.hidden_layers),
                "epochs": config.epochs,
                "history": history,
            }
        )
    record_path = out_path(ckpt + ".run.json", args.record)
    with open(record_path, "w") as f:
        json.dump(record, f, indent=2)
    if history:
        last = history[-1]
        terms = ", ".join(f"{k}={v:.4f}" for k, v in last.items())
        print(f"epoch {len(history)}: {terms}")
    print(f"wrote {ckpt}")
    return 0


# ---------------------------------------------------------------------------
# eval


def _stored_label_budget(model):
    if isinstance(model, CoupledModel):
        return model.train_labeled_count, model.config.seed
    return getattr(model, "train_labeled_count_", None), getattr(
        model, "label_seed_", None
    )


def cmd_eval(args):
    data = load_dataset(args.data)
    model = load_model(args.ckpt)

    # the SVM may only see the labeled budget used at training time; re-apply
    # the (deterministic) selection when the dataset file carries more labels
    budget, label_seed = _stored_label_budget(model)
    if args.labels is not None:
        budget, label_seed = args.labels, args.seed
    labeled_count = data.train.labeled_count
    if budget and budget < labeled_count and np.all(data.train.labels >= 0):
        data = DatasetBundle(
            select_labeled(data.train, budget, seed=label_seed),
            data.test,
            data.manifest,
        )
        labeled_count = budget

    started = time.perf_counter()
    result = cross_view_eval(
        model,
        data,
        svm_C_grid=parse_floats(args.svm_c_grid),
        folds=args.folds,
        seed=args.seed,
    )
    wall_ms = int(1000 * (time.perf_counter() - started))

    if isinstance(model, CoupledModel):
        cfg = model.config
        record = RunRecord(
            dataset=data.manifest.name,
            model=model_kind(model),
            L=model.train_labeled_count,
            lam=cfg.lam,
            alpha=cfg.alpha,
            r=cfg.r,
            lr=cfg.learning_rate,
            batch=cfg.batch_size,
            repr_dim=cfg.repr_dim,
            svm_C=result.chosen_C,
            seed=cfg.seed,
            accuracy=result.accuracy,
            wall_ms=wall_ms,
        )
    else:
        params = model.get_params()
        record = RunRecord(
            dataset=data.manifest.name,
            model=model_kind(model),
            L=labeled_count,
            r=params.get("r", ""),
            repr_dim=params.get("n_components", ""),
            svm_C=result.chosen_C,
            seed=params.get("seed", args.seed),
            accuracy=result.accuracy,
            wall_ms=wall_ms,
        )
    csv_path = out_path("results.csv", args.csv)
    append_records(csv_path, [record])
    print(f"accuracy {result.accuracy:.4f} (svm_C={result.chosen_C}, "
          f"cv {result.cv_accuracy:.4f}); appended to {csv_path}")
    return 0


# ---------------------------------------------------------------------------
# gradcheck


def cmd_gradcheck(args):
    reports = gradcheck.run_all(seed=args.seed)
    for report in reports:
        print(report.summary())
    return 0 if all(r.passed for r in reports) else 1


# ---------------------------------------------------------------------------
# grid


@functools.lru_cache(maxsize=4)
def _cached_dataset(path):
    return load_dataset(path)


def _grid_worker(task):
    (path, labels, lam, alpha, repr_dim, seed, base) = task
    data = _cached_dataset(path)
    split = data.train
    if labels is not None:
        split = select_labeled(split, labels, seed=seed)
    config = TrainConfig(
        hidden_layers=tuple(base["hidden"]),
        repr_dim=repr_dim,
        lam=lam,
        alpha=alpha,
        r=base["r"],
        epochs=base["epochs"],
        batch_size=base["batch_size"],
        learning_rate=base["lr"],
        seed=seed,
        mode=base["mode"],
    )
    started = time.perf_counter()
    model, _ = train(config, split)
    result = cross_view_eval(
        model,
        DatasetBundle(split, data.test, data.manifest),
        svm_C_grid=tuple(base["svm_c_grid"]),
        folds=base["folds"],
        seed=seed,
    )
    wall_ms = int(1000 * (time.perf_counter() - started))
    record = RunRecord(
        dataset=data.manifest.name,
        model=base["mode"],
        L=int(np.count_nonzero(split.labeled_mask)),
        lam=lam,
        alpha=alpha,
        r=base["r"],
        lr=base["lr"],
        batch=base["batch_size"],
        repr_dim=repr_dim,
        svm_C=result.chosen_C,
        seed=seed,
        accuracy=result.accuracy,
        wall_ms=wall_ms,
    )
    return record, result.cv_accuracy


def cmd_grid(args):
    data = load_dataset(args.data)  # validate before spawning workers
    name = data.manifest.name
    base = {
        "hidden": list(
            parse_ints(args.hidden) if args.hidden else DEFAULT_HIDDEN.get(name, FALLBACK_HIDDEN)
        ),
        "r": args.r if args.r is not None else 1e-4,
        "epochs": args.epochs if args.epochs is not None else 150,
        "batch_size": args.batch_size if args.batch_size is not None else 400,
        "lr": args.lr if args.lr is not None else 1e-3,
        "mode": args.mode,
        "svm_c_grid": list(parse_floats(args.svm_c_grid)),
        "folds": args.folds,
    }
    lambdas = parse_floats(args.lambdas) if args.lambdas else LAMBDA_GRID
    alphas = parse_floats(args.alphas) if args.alphas else ALPHA_GRID
    repr_dims = (
        parse_ints(args.repr_dims)
        if args.repr_dims
        else (DEFAULT_REPR_DIM.get(name, data.manifest.class_count),)
    )
    seeds = parse_ints(args.seeds)

    tasks = [
        (args.data, args.labels, lam, alpha, repr_dim, seed, base)
        for lam in lambdas
        for alpha in alphas
        for repr_dim in repr_dims
        for seed in seeds
    ]
    outcomes = []
    failures = 0
    if args.parallel > 1:
        with ProcessPoolExecutor(max_workers=args.parallel) as pool:
            futures = [pool.submit(_grid_worker, t) for t in tasks]
            for task, future in zip(tasks, futures):
                try:
                    outcomes.append(future.result())
                except Exception as exc:  # per-point failure; grid continues
                    failures += 1
                    print(f"grid point {task[2:6]} failed: {exc}", file=sys.stderr)
    else:
        for task in tasks:
            try:
                outcomes.append(_grid_worker(task))
            except Exception as exc:
                failures += 1
                print(f"grid point {task[2:6]} failed: {exc}", file=sys.stderr)

    def sort_key(outcome):
        record = outcome[0]
        return (record.lam, record.alpha, record.repr_dim, record.seed)

    outcomes.sort(key=sort_key)
    csv_path = out_path("results.csv", args.csv)
    append_records(csv_path, [record for record, _ in outcomes])
    print(f"{len(outcomes)} grid points written to {csv_path} ({failures} failed)")

    if args.select and outcomes:
        best = min(
            outcomes, key=lambda o: (-o[1], o[0].lam, o[0].alpha, o[0].repr_dim, o[0].seed)
        )
        record, val = best
        print(
            f"best by validation accuracy {val:.4f}: lambda={record.lam} "
            f"alpha={record.alpha} repr_dim={record.repr_dim} seed={record.seed} "
            f"(test accuracy {record.accuracy:.4f})"
        )
    return 0 if not failures else (0 if outcomes else 1)


# ---------------------------------------------------------------------------
# parser


def build_parser():
    parser = argparse.ArgumentParser(
        prog="mdnn",
        description="Semi-supervised two-view representation learning toolkit",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="build a two-view dataset container")
    gsub = g.add_subparsers(dest="dataset", required=True)
    gm = gsub.add_parser("noisy-mnist", help="rotated/noisy two-view digits")
    gm.add_argument("--mnist-dir", required=True, help="directory of the IDX files")
    gm.add_argument("--out", default=None)
    gm.add_argument("--seed", type=int, default=0)
    gm.add_argument(
        "--subsample",
        type=parse_ints,
        default=None,
        metavar="N_TRAIN,N_TEST",
        help="keep only the first N_TRAIN/N_TEST images per split",
    )
    gm.set_defaults(func=cmd_generate)
    gs = gsub.add_parser("synth", help="synthetic correlated Gaussian task")
    gs.add_argument("--classes", type=int, default=3)
    gs.add_argument("--d1", type=int, default=50)
    gs.add_argument("--d2", type=int, default=50)
    gs.add_argument("--n-train", type=int, default=2000)
    gs.add_argument("--n-test", type=int, default=1000)
    gs.add_argument("--separation", type=float, default=3.0)
    gs.add_argument("--shared-dim", type=int, default=20)
    gs.add_argument("--noise", type=float, default=1.0)
    gs.add_argument("--seed", type=int, default=0)
    gs.add_argument("--out", default=None)
    gs.set_defaults(func=cmd_generate)

    t = sub.add_parser("train", help="train a representation model")
    t.add_argument("--data", required=True)
    t.add_argument("--mode", choices=COUPLED_MODES + CLASSICAL_MODES, default="mdnn")
    t.add_argument("--out", default=None, help="checkpoint path")
    t.add_argument("--record", default=None, help="run-record JSON path")
    t.add_argument("--config", default=None, help="JSON file of training defaults")
    t.add_argument("--labels", type=int, default=None,
                   help="visible labeled-sample budget (class proportional)")
    t.add_argument("--lambda", dest="lam", type=float, default=None)
    t.add_argument("--alpha", type=float, default=None)
    t.add_argument("--r", type=float, default=None)
    t.add_argument("--epochs", type=int, default=None)
    t.add_argument("--batch-size", type=int, default=None)
    t.add_argument("--lr", type=float, default=None)
    t.add_argument("--repr-dim", type=int, default=None)
    t.add_argument("--hidden", default=None, metavar="W1,W2,...")
    t.add_argument("--seed", type=int, default=0)
    t.add_argument("--rff-features", type=int, default=2000)
    t.add_argument("--bandwidth", type=float, default=None)
    t.set_defaults(func=cmd_train)

    e = sub.add_parser("eval", help="cross-view evaluation of a checkpoint")
    e.add_argument("--ckpt", required=True)
    e.add_argument("--data", required=True)
    e.add_argument("--csv", default=None)
    e.add_argument("--svm-c-grid", default="10,1,0.1,0.01,0.001")
    e.add_argument("--folds", type=int, default=5)
    e.add_argument("--seed", type=int, default=0)
    e.add_argument("--labels", type=int, default=None,
                   help="override the labeled budget visible to the SVM "
                        "(defaults to the budget stored in the checkpoint)")
    e.set_defaults(func=cmd_eval)

    c = sub.add_parser("gradcheck", help="finite-difference gradient verification")
    c.add_argument("--seed", type=int, default=0)
    c.set_defaults(func=cmd_gradcheck)

    r = sub.add_parser("grid", help="hyperparameter grid over lambda/alpha/repr_dim")
    r.add_argument("--data", required=True)
    r.add_argument("--csv", default=None)
    r.add_argument("--mode", choices=COUPLED_MODES, default="mdnn")
    r.add_argument("--labels", type=int, default=None)
    r.add_argument("--lambdas", default=None, metavar="L1,L2,...")
    r.add_argument("--alphas", default=None, metavar="A1,A2,...")
    r.add_argument("--repr-dims", default=None, metavar="K1,K2,...")
    r.add_argument("--seeds", default="0", metavar="S1,S2,...")
    r.add_argument("--hidden", default=None, metavar="W1,W2,...")
    r.add_argument("--r", type=float, default=None)
    r.add_argument("--epochs", type=int, default=None)
    r.add_argument("--batch-size", type=int, default=None)
    r.add_argument("--lr", type=float, default=None)
    r.add_argument("--svm-c-grid", default="10,1,0.1,0.01,0.001")
    r.add_argument("--folds", type=int, default=5)
    r.add_argument("--parallel", type=int, default=1)
    r.add_argument("--select", action="store_true")
    r.set_defaults(func=cmd_grid)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (MdnnError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
