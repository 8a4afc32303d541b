"""Command-line interface.

Subcommands:

    synth      build a synthetic embedding archive
    run        execute the full multi-session protocol on an archive
    sweep      grid of final-session accuracy over episode shapes
    gradcheck  randomized finite-difference gradient diagnostics
    report     re-render a stored json report
    validate   check an archive and print its summary

Exit codes: 0 success, 1 validation error, 2 runtime/training error,
3 I/O error.  ``--seed`` falls back to the FSCIL_SEED environment
variable, then to 0; every command is deterministic given the seed.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import tempfile
from pathlib import Path

import numpy as np

from .archive import read_archive, write_archive
from .data import EmbeddingSet
from .diagnostics import run_gradient_suite, run_sigma_zero_suite
from .exceptions import ConfigError, TrainingDivergenceError
from .losses import PROTOTYPE_SOFTMAX_MODES, TrainingConfig
from .metrics import (
    render_csv,
    render_json,
    render_table,
    report_from_json_dict,
    report_to_json_dict,
)
from .optim import OptimizerConfig
from .protocol import SessionPlan, plan_from_manifest, run_full_protocol
from .rng import SplitMix64
from .synthetic import CENTER_RULES, SyntheticSpec, generate_synthetic

EXIT_OK, EXIT_VALIDATION, EXIT_RUNTIME, EXIT_IO = 0, 1, 2, 3

_RUN_DEFAULTS = {
    "classifier": "stochastic",
    "lambda": 0.9,
    "logit_scale": 1.0,
    "epochs": 50,
    "incremental_epochs": 100,
    "sigma_init": 0.1,
    "mc_samples": 1,
    "freeze_sigma": False,
    "proto_softmax": "per-prototype",
    "loss_on_support": False,
    "optimizer": "sgd",
    "learning_rate": 0.01,
    "momentum": 0.9,
    "ways": None,
    "shots": None,
    "formats": "table,csv,json",
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


def _write_text_atomic(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=str(path.parent), prefix=path.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _resolve_seed(value) -> int:
    if value is not None:
        return int(value)
    env = os.environ.get("FSCIL_SEED")
    return int(env) if env else 0


def _add_training_flags(p: _Parser) -> None:
    p.add_argument("--classifier", choices=("stochastic", "deterministic"), default=None)
    p.add_argument("--lambda", dest="lambda_", type=float, default=None,
                   help="weight of the prototype-anchoring term in [0, 1]")
    p.add_argument("--logit-scale", type=float, default=None)
    p.add_argument("--epochs", type=int, default=None)
    p.add_argument("--incremental-epochs", type=int, default=None)
    p.add_argument("--sigma-init", type=float, default=None)
    p.add_argument("--mc-samples", type=int, default=None)
    p.add_argument("--freeze-sigma", action="store_true", default=None,
                   help="do not update spread rows after initialization")
    p.add_argument("--proto-softmax", choices=PROTOTYPE_SOFTMAX_MODES, default=None)
    p.add_argument("--loss-on-support", action="store_true", default=None,
                   help="include episode support sets in the training loss")
    p.add_argument("--optimizer", choices=("sgd", "momentum", "adam"), default=None)
    p.add_argument("--learning-rate", type=float, default=None)
    p.add_argument("--momentum", type=float, default=None)


def _merge_run_config(args) -> dict:
    """defaults <- config file <- explicit flags; unknown file keys rejected."""
    merged = dict(_RUN_DEFAULTS)
    if getattr(args, "config", None):
        try:
            loaded = json.loads(Path(args.config).read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config file is not valid JSON: {exc}") from exc
        if not isinstance(loaded, dict):
            raise ConfigError("config file must hold a JSON object")
        unknown = set(loaded) - set(_RUN_DEFAULTS) - {"seed"}
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        merged.update(loaded)
    flag_map = {
        "classifier": args.classifier,
        "lambda": args.lambda_,
        "logit_scale": args.logit_scale,
        "epochs": args.epochs,
        "incremental_epochs": args.incremental_epochs,
        "sigma_init": getattr(args, "sigma_init", None),
        "mc_samples": getattr(args, "mc_samples", None),
        "freeze_sigma": args.freeze_sigma,
        "proto_softmax": args.proto_softmax,
        "loss_on_support": args.loss_on_support,
        "optimizer": args.optimizer,
        "learning_rate": args.learning_rate,
        "momentum": args.momentum,
        "ways": getattr(args, "ways", None),
        "shots": getattr(args, "shots", None),
    }
    merged.update({k: v for k, v in flag_map.items() if v is not None})
    if args.seed is None and "seed" in merged:
        args.seed = merged["seed"]
    return merged


def _training_from_merged(merged: dict) -> TrainingConfig:
    try:
        return TrainingConfig(
            lam=float(merged["lambda"]),
            logit_scale=float(merged["logit_scale"]),
            epochs=int(merged["epochs"]),
            incremental_epochs=int(merged["incremental_epochs"]),
            mc_samples_per_step=int(merged["mc_samples"]),
            sigma_init=float(merged["sigma_init"]),
            train_sigma=not bool(merged["freeze_sigma"]),
            prototype_softmax=str(merged["proto_softmax"]),
            episode_loss_on_support=bool(merged["loss_on_support"]),
            optimizer=OptimizerConfig(
                method=str(merged["optimizer"]),
                learning_rate=float(merged["learning_rate"]),
                momentum=float(merged["momentum"]),
            ),
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _config_echo(merged: dict, seed: int) -> dict:
    echo = {k: merged[k] for k in sorted(_RUN_DEFAULTS) if k not in ("ways", "shots", "formats")}
    echo["seed"] = seed
    return echo


def cmd_synth(args) -> int:
    seed = _resolve_seed(args.seed)
    spec = SyntheticSpec(
        num_classes=args.classes,
        samples_per_class=args.per_class,
        dim=args.dim,
        noise=args.noise,
        seed=seed,
        center_rule=args.center_rule,
        base_classes=args.base_classes,
        n_way=args.ways,
        k_shot=args.shots,
        test_per_class=args.test_per_class,
    )
    embeddings, manifest = generate_synthetic(spec)
    write_archive(embeddings, manifest, args.out)
    print(
        f"wrote {args.out}: {len(embeddings)} records, {spec.num_classes} classes, "
        f"dim {spec.dim}, {manifest.num_sessions()} sessions"
    )
    return EXIT_OK


def _load_plan(args, merged):
    embeddings, manifest = read_archive(args.archive)
    training = _training_from_merged(merged)
    ways = merged.get("ways")
    shots = merged.get("shots")
    return plan_from_manifest(
        manifest, embeddings,
        training,
        n_way=int(ways) if ways is not None else None,
        k_shot=int(shots) if shots is not None else None,
    )


def cmd_run(args) -> int:
    merged = _merge_run_config(args)
    seed = _resolve_seed(args.seed)
    plan, train_sets, test_sets = _load_plan(args, merged)
    formats = [f.strip() for f in str(merged["formats"]).split(",") if f.strip()]
    unknown = set(formats) - {"table", "csv", "json"}
    if unknown:
        raise ConfigError(f"unknown report formats: {sorted(unknown)}")

    traces: list = []
    report = run_full_protocol(
        plan, train_sets, test_sets,
        rng=SplitMix64(seed).spawn("protocol"),
        classifier=merged["classifier"],
        config_echo=_config_echo(merged, seed),
        trace_sink=traces,
    )
    out_dir = Path(args.out_dir)
    renderers = {"table": ("report.txt", render_table), "csv": ("report.csv", render_csv),
                 "json": ("report.json", render_json)}
    for fmt in formats:
        name, renderer = renderers[fmt]
        text = renderer(report)
        if not text.endswith("\n"):
            text += "\n"
        _write_text_atomic(out_dir / name, text)
    _write_text_atomic(
        out_dir / "traces.json",
        json.dumps({"per_session_step_losses": traces}, indent=2) + "\n",
    )
    print(render_table(report))
    print(f"reports written to {out_dir}")
    return EXIT_OK


def _sweep_cell_plan(embeddings, manifest, training, n_way, k_shot):
    """Plan for one sweep cell, re-splitting incremental classes if needed.

    Returns None when the archive cannot support the requested shape.
    """
    base_plan, train_sets, test_sets = plan_from_manifest(manifest, embeddings, training)
    if manifest.num_sessions() > 1 and base_plan.n_way == n_way and base_plan.k_shot == k_shot:
        return base_plan, train_sets, test_sets
    # pool every non-base class, then re-chunk into n_way-sized sessions
    pool_classes = sorted(
        {int(c) for s in train_sets[1:] for c in s.classes()}
    )
    if not pool_classes or len(pool_classes) % n_way:
        return None
    by_class_train: dict[int, list[int]] = {}
    by_class_test: dict[int, list[int]] = {}
    for m in range(1, manifest.num_sessions()):
        tr, te = train_sets[m], test_sets[m]
        for c in tr.classes():
            idx = np.flatnonzero(tr.labels == c)
            by_class_train[int(c)] = [int(s) for s in tr.sample_ids[idx]]
        for c in te.classes():
            idx = np.flatnonzero(te.labels == c)
            by_class_test[int(c)] = [int(s) for s in te.sample_ids[idx]]
    if any(len(by_class_train[c]) < k_shot for c in pool_classes):
        return None
    new_train = [train_sets[0]]
    new_test = [test_sets[0]]
    label_sets = []
    for start in range(0, len(pool_classes), n_way):
        chunk = pool_classes[start : start + n_way]
        label_sets.append(tuple(chunk))
        train_ids = [sid for c in chunk for sid in by_class_train[c][:k_shot]]
        test_ids = [sid for c in chunk for sid in by_class_test.get(c, [])]
        if not test_ids:
            return None
        new_train.append(embeddings.by_sample_ids(train_ids))
        new_test.append(embeddings.by_sample_ids(test_ids))
    plan = SessionPlan(
        base_label_set=base_plan.base_label_set,
        incremental_label_sets=tuple(label_sets),
        n_way=n_way,
        k_shot=k_shot,
        training=training,
    )
    return plan, new_train, new_test


def cmd_sweep(args) -> int:
    merged = _merge_run_config(args)
    seed = _resolve_seed(args.seed)
    embeddings, manifest = read_archive(args.archive)
    training = _training_from_merged(merged)
    ways = [int(v) for v in args.sweep_ways.split(",")]
    shots = [int(v) for v in args.sweep_shots.split(",")]
    if not ways or not shots:
        raise ConfigError("sweep needs at least one way and one shot value")

    grid: dict[tuple[int, int], float | None] = {}
    for k in shots:
        for n in ways:
            cell = _sweep_cell_plan(embeddings, manifest, training, n, k)
            if cell is None:
                grid[(n, k)] = None
                continue
            plan, train_sets, test_sets = cell
            report = run_full_protocol(
                plan, train_sets, test_sets,
                rng=SplitMix64(seed).spawn("protocol"),
                classifier=merged["classifier"],
                config_echo=_config_echo(merged, seed),
            )
            grid[(n, k)] = report.records[-1].all_acc

    lines = ["k_shot," + ",".join(str(n) for n in ways)]
    for k in shots:
        cells = ["" if grid[(n, k)] is None else repr(grid[(n, k)]) for n in ways]
        lines.append(f"{k}," + ",".join(cells))
    text = "\n".join(lines) + "\n"
    _write_text_atomic(Path(args.out), text)
    print(text, end="")
    for n in ways:
        series = [(k, grid[(n, k)]) for k in sorted(shots) if grid[(n, k)] is not None]
        for (k0, a0), (k1, a1) in zip(series, series[1:]):
            if a1 < a0:
                print(
                    f"note: for {n}-way, accuracy decreased from {a0:.2f} at "
                    f"{k0}-shot to {a1:.2f} at {k1}-shot"
                )
    print(f"sweep grid written to {args.out}")
    return EXIT_OK


def cmd_gradcheck(args) -> int:
    seed = _resolve_seed(args.seed)
    if args.sigma_zero:
        result = run_sigma_zero_suite(n_instances=args.instances or 100, seed=seed)
        print(f"sigma-zero loss gap      {result['worst_loss_gap']:.3e}")
        print(f"sigma-zero mu-grad gap   {result['worst_mu_grad_gap']:.3e}")
        print(f"tolerance {result['tol']:.1e}: {'PASS' if result['passed'] else 'FAIL'}")
        return EXIT_OK if result["passed"] else EXIT_RUNTIME
    result = run_gradient_suite(n_instances=args.instances or 1000, seed=seed)
    for kind, err in result["worst"].items():
        print(f"worst relative error  {kind:<10} {err:.3e}")
    print(f"tolerance {result['tol']:.1e}: {'PASS' if result['passed'] else 'FAIL'}")
    return EXIT_OK if result["passed"] else EXIT_RUNTIME


def cmd_report(args) -> int:
    payload = json.loads(Path(args.json).read_text())
    report = report_from_json_dict(payload)
    renderers = {"table": render_table, "csv": render_csv, "json": render_json}
    if args.format not in renderers:
        raise ConfigError(f"unknown format {args.format!r}")
    text = renderers[args.format](report)
    if not text.endswith("\n"):
        text += "\n"
    if args.out:
        _write_text_atomic(Path(args.out), text)
        print(f"wrote {args.out}")
    else:
        print(text, end="")
    return EXIT_OK


def cmd_validate(args) -> int:
    embeddings, manifest = read_archive(args.archive)
    counts = {int(c): int(n) for c, n in zip(*np.unique(embeddings.labels, return_counts=True))}
    print(f"{args.archive}: OK")
    print(f"  records   {len(embeddings)}")
    print(f"  dim       {embeddings.dim}")
    print(f"  classes   {len(counts)}")
    print(f"  sessions  {manifest.num_sessions()}")
    for m in range(manifest.num_sessions()):
        print(
            f"    session {m}: {len(manifest.session_train_ids(m))} train, "
            f"{len(manifest.session_test_ids(m))} test"
        )
    return EXIT_OK


def build_parser() -> _Parser:
    parser = _Parser(prog="fscil", description=__doc__,
                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic embedding archive")
    p.add_argument("--out", default="synthetic.fcae")
    p.add_argument("--classes", type=int, required=True)
    p.add_argument("--per-class", type=int, required=True)
    p.add_argument("--dim", type=int, default=512)
    p.add_argument("--noise", type=float, default=0.05)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--center-rule", choices=CENTER_RULES, default="random")
    p.add_argument("--base-classes", type=int, default=None,
                   help="classes in session 0; the rest split into N-way sessions")
    p.add_argument("--ways", type=int, default=5)
    p.add_argument("--shots", type=int, default=5)
    p.add_argument("--test-per-class", type=int, default=None)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("run", help="run the full session protocol on an archive")
    p.add_argument("--archive", required=True)
    p.add_argument("--out-dir", default="fscil-out")
    p.add_argument("--config", default=None, help="JSON file of run options; flags override")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--ways", type=int, default=None)
    p.add_argument("--shots", type=int, default=None)
    p.add_argument("--formats", default=None, help="comma list of table,csv,json")
    _add_training_flags(p)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("sweep", help="final-session accuracy over episode shapes")
    p.add_argument("--archive", required=True)
    p.add_argument("--out", default="sweep.csv")
    p.add_argument("--config", default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--sweep-ways", required=True, help="comma list of way counts")
    p.add_argument("--sweep-shots", required=True, help="comma list of shot counts")
    _add_training_flags(p)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("gradcheck", help="finite-difference gradient diagnostics")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--instances", type=int, default=None)
    p.add_argument("--sigma-zero", action="store_true",
                   help="check stochastic/deterministic agreement at zero spread")
    p.set_defaults(func=cmd_gradcheck)

    p = sub.add_parser("report", help="re-render a stored json report")
    p.add_argument("--json", required=True)
    p.add_argument("--format", default="table")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("validate", help="check an archive and print its summary")
    p.add_argument("--archive", required=True)
    p.set_defaults(func=cmd_validate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except TrainingDivergenceError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except (ValueError, KeyError, IndexError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except OSError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
