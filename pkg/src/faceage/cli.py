"""Command-line pipeline: learn-filters, extract, train, predict, evaluate,
curve.

Stages communicate through files (feature matrix, model, predictions, CS
curve) so each step can be rerun independently. Every command is
deterministic for fixed inputs and seeds, never mutates its inputs, and
writes outputs atomically. Exit codes: 0 success, 1 usage error, 2 data
error, 3 numerical failure.

Per-record failures during extraction and filter learning are reported and
skipped, so a handful of bad annotations does not abort a large run; the
summary counts surface on stderr and an empty result is an error.
"""

from __future__ import annotations

import argparse
import hashlib
import sys
from pathlib import Path

import numpy as np

from .config import RunConfig, load_config
from .descriptors import FilterBank, encode_filterbank, load_filterbank
from .errors import DataError, FaceAgeError, NumericalError, UsageError
from .evaluation import (
    DEFAULT_CS_MAX_LEVEL,
    LabeledPrediction,
    cs_curve,
    lopo_splits,
    mae,
    random_split,
)
from .filter_learning import MIN_PATCH_FACTOR, learn_filterbank, sample_patches
from .geometry import BUILTIN_SCHEMES, LandmarkScheme, parse_scheme
from .io_files import (
    ManifestRecord,
    atomic_write_text,
    read_feature_matrix,
    read_manifest,
    read_model,
    read_predictions,
    write_cs_curve,
    write_feature_matrix,
    write_model,
    write_predictions,
)
from .krr import KrrModel
from .model_select import cross_validate, fit_cell, predict_cell
from .pipeline import ROI_MODES, extract_from_files, layout_for, prepare_face_files


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _load_scheme(value: str) -> LandmarkScheme:
    if value in BUILTIN_SCHEMES:
        return BUILTIN_SCHEMES[value]
    path = Path(value)
    if not path.exists():
        raise UsageError(
            f"scheme {value!r} is neither a builtin ({', '.join(sorted(BUILTIN_SCHEMES))}) nor a file"
        )
    return parse_scheme(path.read_text(encoding="utf-8"), name=path.stem)


def _load_run_config(args) -> RunConfig:
    cfg = load_config(args.config) if args.config else RunConfig()
    if getattr(args, "bank", None):
        cfg.bank_path = args.bank
    return cfg


def _load_bank_if_needed(cfg: RunConfig) -> FilterBank | None:
    if not cfg.use_bsif:
        return None
    if cfg.bank_path is None:
        raise UsageError("binarized filter codes enabled but no bank given (--bank or config 'bank')")
    return load_filterbank(cfg.bank_path)


def _manifest_maps(records: list[ManifestRecord]):
    ages = {r.id: r.age for r in records}
    persons = {r.id: r.person_id for r in records}
    return ages, persons


def cmd_learn_filters(args) -> int:
    if args.size < 3 or args.size % 2 == 0:
        raise UsageError("filter size must be odd and at least 3")
    if args.filters < 1 or args.filters > args.size * args.size:
        raise UsageError(f"filter count must be in 1..{args.size * args.size}")
    min_patches = MIN_PATCH_FACTOR * args.size * args.size
    if args.patches < min_patches:
        raise UsageError(
            f"need at least {min_patches} patches for size {args.size} "
            f"({MIN_PATCH_FACTOR} per patch dimension), got {args.patches}"
        )
    if not 0 < args.train_fraction <= 1:
        raise UsageError("train fraction must be in (0, 1]")

    cfg = _load_run_config(args)
    scheme = _load_scheme(args.scheme)
    records = read_manifest(args.manifest)
    if args.train_fraction < 1:
        plan = random_split([r.id for r in records], args.train_fraction, args.seed)
        selected_ids = set(plan.train_ids)
        selected = [r for r in records if r.id in selected_ids]
    else:
        selected = records

    faces = []
    skipped = 0
    for rec in selected:
        try:
            face = prepare_face_files(
                rec.image_path, rec.landmarks_path, scheme, args.roi_mode, cfg, rec.id
            )
        except (FaceAgeError, ValueError) as exc:
            skipped += 1
            print(f"skip {rec.id}: {exc}", file=sys.stderr)
            continue
        faces.append(face.image)
    if not faces:
        raise DataError("no usable faces to sample patches from")
    if skipped:
        print(f"learn-filters: skipped {skipped} of {len(selected)} records", file=sys.stderr)

    patches = sample_patches(faces, args.size, args.patches, args.seed)
    provenance = (
        f"manifest={Path(args.manifest).name} sources={len(faces)} "
        f"fraction={args.train_fraction:g} l={args.size} n={args.filters} "
        f"m={args.patches} seed={args.seed}"
    )
    bank = learn_filterbank(patches, args.filters, args.seed, provenance=provenance)
    atomic_write_text(args.out, encode_filterbank(bank))
    print(f"wrote bank {args.out} ({bank.n} filters of {bank.l}x{bank.l})")
    return 0


def cmd_extract(args) -> int:
    cfg = _load_run_config(args)
    scheme = _load_scheme(args.scheme)
    bank = _load_bank_if_needed(cfg)
    layout = layout_for(cfg, bank)
    records = read_manifest(args.manifest)

    ids = []
    rows = []
    skipped = 0
    for rec in records:
        try:
            vec = extract_from_files(
                rec.image_path, rec.landmarks_path, scheme, args.roi_mode, cfg, layout, bank, rec.id
            )
        except (FaceAgeError, ValueError) as exc:
            skipped += 1
            print(f"skip {rec.id}: {exc}", file=sys.stderr)
            continue
        ids.append(rec.id)
        rows.append(vec)
    if not rows:
        raise DataError("extraction produced no rows")
    write_feature_matrix(args.out, ids, np.vstack(rows))
    print(f"extracted {len(rows)} rows x {rows[0].shape[0]} dims, skipped {skipped}")
    return 0


def _cell_of_model(model) -> dict[str, float]:
    if isinstance(model, KrrModel):
        return {"gamma": model.kernel.gamma, "lambda": model.lam}
    return {"gamma": model.kernel.gamma, "C": model.c, "epsilon": model.epsilon}


def _algo_of_model(model) -> str:
    return "krr" if isinstance(model, KrrModel) else "svr"


def _join_targets(ids: list[str], ages: dict[str, float], what: str) -> np.ndarray:
    missing = [i for i in ids if i not in ages]
    if missing:
        raise DataError(f"{what}: feature ids missing from manifest: {missing[:3]}...")
    return np.array([ages[i] for i in ids])


def cmd_train(args) -> int:
    cfg = _load_run_config(args)
    if args.algo:
        cfg.algorithm = args.algo
    if args.seed is not None:
        cfg.seed = args.seed
    if args.folds:
        cfg.folds = args.folds
    bank = load_filterbank(cfg.bank_path) if (cfg.use_bsif and cfg.bank_path) else None
    layout = layout_for(cfg, bank)

    ids, x = read_feature_matrix(args.features)
    records = read_manifest(args.manifest)
    ages, _ = _manifest_maps(records)
    y = _join_targets(ids, ages, "train")
    if x.shape[1] != layout.dims:
        raise DataError(
            f"feature file has {x.shape[1]} dims but the configured layout expects {layout.dims}"
        )

    if args.protocol == "holdout":
        plan = random_split(ids, args.fraction, cfg.seed)
        keep = set(plan.train_ids)
        mask = np.array([i in keep for i in ids])
        x_train, y_train = x[mask], y[mask]
    else:
        x_train, y_train = x, y
    if x_train.shape[0] == 0:
        raise DataError("empty training set")

    result = cross_validate(x_train, y_train, cfg.hypergrid(), cfg.algorithm)
    model = fit_cell(x_train, y_train, result.best, cfg.algorithm)
    write_model(args.out, model, layout.describe())
    cell = " ".join(f"{k}={v:g}" for k, v in sorted(result.best.items()))
    train_mae = float(np.mean(np.abs(predict_cell(model, x_train, cfg.algorithm) - y_train)))
    print(
        f"trained {cfg.algorithm} on {x_train.shape[0]} samples: {cell} "
        f"(cv mae {result.best_mae:.4f}, training mae {train_mae:.4f})"
    )
    return 0


def _refit_predict(model, x, y, train_idx, test_idx, algo):
    fitted = fit_cell(x[train_idx], y[train_idx], _cell_of_model(model), algo)
    return predict_cell(fitted, x[test_idx], algo)


def _report_lines_common(preds, baseline_preds, l_max):
    curve = cs_curve(preds, l_max)
    lines = [
        f"mae: {mae(preds):.4f}",
        f"baseline_mae: {mae(baseline_preds):.4f}",
    ]
    for level, value in zip(curve.levels, curve.values):
        lines.append(f"cs[{int(level)}]: {value:.4f}")
    return lines, curve


def cmd_evaluate(args) -> int:
    cfg = _load_run_config(args)
    # evaluation refits from the features file, so only the stored
    # hyperparameters matter here; layout equality is enforced by predict
    model, _ = read_model(args.model)
    algo = _algo_of_model(model)
    ids, x = read_feature_matrix(args.features)
    records = read_manifest(args.manifest)
    ages, persons = _manifest_maps(records)
    y = _join_targets(ids, ages, "evaluate")
    index_of = {id_: k for k, id_ in enumerate(ids)}

    lines = [f"protocol: {args.protocol}", f"algorithm: {algo}"]
    for key, value in sorted(_cell_of_model(model).items()):
        lines.append(f"{key}: {value:g}")
    lines.append(f"records: {len(ids)}")

    preds: list[LabeledPrediction] = []
    baseline: list[LabeledPrediction] = []
    if args.protocol == "holdout":
        plan = random_split(ids, args.fraction, args.seed)
        lines += [f"seed: {args.seed}", f"fraction: {args.fraction:g}"]
        lines += [f"train: {len(plan.train_ids)}", f"test: {len(plan.test_ids)}"]
        train_idx = np.array([index_of[i] for i in plan.train_ids])
        test_idx = np.array([index_of[i] for i in plan.test_ids])
        pred = _refit_predict(model, x, y, train_idx, test_idx, algo)
        train_mean = float(y[train_idx].mean())
        for id_, value in zip(plan.test_ids, pred):
            preds.append(LabeledPrediction(id_, ages[id_], float(value)))
            baseline.append(LabeledPrediction(id_, ages[id_], train_mean))
    else:
        person_of = {i: persons[i] for i in ids}
        if len(set(person_of.values())) < 2:
            raise DataError("leave-one-person-out needs at least 2 persons in the manifest")
        folds = lopo_splits(person_of)
        lines += [f"persons: {len(folds)}", f"folds: {len(folds)}"]
        per_person = []
        for fold in folds:
            train_persons = {person_of[i] for i in fold.train_ids}
            assert fold.person not in train_persons, "person leaked into its own training fold"
            train_idx = np.array([index_of[i] for i in fold.train_ids])
            test_idx = np.array([index_of[i] for i in fold.test_ids])
            pred = _refit_predict(model, x, y, train_idx, test_idx, algo)
            train_mean = float(y[train_idx].mean())
            fold_preds = []
            for id_, value in zip(fold.test_ids, pred):
                p = LabeledPrediction(id_, ages[id_], float(value))
                preds.append(p)
                fold_preds.append(p)
                baseline.append(LabeledPrediction(id_, ages[id_], train_mean))
            per_person.append((fold.person, mae(fold_preds), len(fold_preds)))
        lines.append(f"test: {len(preds)}")

    common, curve = _report_lines_common(preds, baseline, args.lmax)
    lines += common
    if cfg.bank_path:
        digest = hashlib.sha256(Path(cfg.bank_path).read_bytes()).hexdigest()
        lines.append(f"bank_sha256: {digest}")
    if args.protocol == "lopo":
        for person, person_mae, count in per_person:
            lines.append(f"person {person}: mae {person_mae:.4f} n {count}")

    out = str(args.out)
    atomic_write_text(out + ".report.txt", "\n".join(lines) + "\n")
    write_predictions(out + ".predictions.csv", preds)
    write_cs_curve(out + ".curve.csv", curve)
    print("\n".join(lines))
    return 0


def cmd_predict(args) -> int:
    cfg = _load_run_config(args)
    model, model_layout = read_model(args.model)
    scheme = _load_scheme(args.scheme)
    bank = _load_bank_if_needed(cfg)
    layout = layout_for(cfg, bank)
    if layout.describe() != model_layout:
        raise DataError(
            f"feature layout mismatch: model expects {model_layout!r}, "
            f"configuration produces {layout.describe()!r}"
        )
    vec = extract_from_files(
        args.image, args.landmarks, scheme, args.roi_mode, cfg, layout, bank, args.image
    )
    value = predict_cell(model, vec[None, :], _algo_of_model(model))
    print(f"{float(value[0]):.2f}")
    return 0


def cmd_curve(args) -> int:
    preds = read_predictions(args.predictions)
    write_cs_curve(args.out, cs_curve(preds, args.lmax))
    print(f"wrote {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="faceage", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, out_required=True):
        p.add_argument("--config", help="run configuration file")
        p.add_argument("--seed", type=int, default=0, help="64-bit seed")
        if out_required:
            p.add_argument("--out", required=True, help="output path")

    p = sub.add_parser("learn-filters", help="learn a filter bank from training faces")
    p.add_argument("manifest")
    p.add_argument("--scheme", default="fgnet68", help="builtin scheme name or scheme file")
    p.add_argument("--roi-mode", choices=ROI_MODES, default="ratios")
    p.add_argument("--size", "-l", type=int, default=7, help="odd filter side length")
    p.add_argument("--filters", "-n", type=int, default=8, help="filters per bank (bits per code)")
    p.add_argument("--patches", "-m", type=int, default=50_000, help="training patches")
    p.add_argument(
        "--train-fraction",
        type=float,
        default=0.5,
        help="fraction of records (seeded split) to sample patches from; 1 uses all",
    )
    add_common(p)
    p.set_defaults(func=cmd_learn_filters)

    p = sub.add_parser("extract", help="extract feature vectors for every manifest record")
    p.add_argument("manifest")
    p.add_argument("--scheme", default="fgnet68")
    p.add_argument("--roi-mode", choices=ROI_MODES, default="ratios")
    p.add_argument("--bank", help="filter bank file (overrides config)")
    add_common(p)
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("train", help="cross-validate and fit a regression model")
    p.add_argument("features")
    p.add_argument("manifest")
    p.add_argument("--algo", choices=("krr", "svr"), help="override the configured algorithm")
    p.add_argument("--folds", type=int, help="override the configured fold count")
    p.add_argument(
        "--protocol",
        choices=("all", "holdout"),
        default="all",
        help="train on everything or on the seeded holdout train half",
    )
    p.add_argument("--fraction", type=float, default=0.5)
    p.add_argument("--bank", help="filter bank file (for layout checking)")
    p.add_argument("--config", help="run configuration file")
    p.add_argument("--seed", type=int, default=None, help="64-bit seed (overrides config)")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("evaluate", help="run a split protocol and report MAE / CS")
    p.add_argument("model")
    p.add_argument("features")
    p.add_argument("manifest")
    p.add_argument("--protocol", choices=("holdout", "lopo"), required=True)
    p.add_argument("--fraction", type=float, default=0.5)
    p.add_argument("--lmax", type=int, default=DEFAULT_CS_MAX_LEVEL)
    add_common(p)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("predict", help="estimate the age of one face image")
    p.add_argument("model")
    p.add_argument("image")
    p.add_argument("landmarks")
    p.add_argument("--scheme", default="fgnet68")
    p.add_argument("--roi-mode", choices=ROI_MODES, default="ratios")
    p.add_argument("--bank", help="filter bank file (overrides config)")
    p.add_argument("--config", help="run configuration file")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("curve", help="tabulate a CS curve from a predictions file")
    p.add_argument("predictions")
    p.add_argument("--lmax", type=int, default=DEFAULT_CS_MAX_LEVEL)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_curve)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
