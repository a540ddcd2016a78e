"""Single executable driving the full pipeline.

Subcommands: prepare | train | predict | evaluate | analyze | ablate |
gradcheck. Every subcommand is deterministic given its config file and
input files, never mutates its inputs, and writes canonical-JSON companions
next to text reports. Exit codes: 0 success, 1 usage/config, 2 data,
3 verification failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass, field, fields, replace

import numpy as np

from .config import ModelConfig, canonical_json
from .corpus import (
    Sample,
    Vocabulary,
    build_vocab,
    encode_sample,
    filter_by_length,
    read_dataset,
    split_by_project,
    write_dataset,
)
from .decoding import LoadedModel, predict_corpus, read_predictions
from .errors import ConfigError, DataError, UsageError, VerificationError
from .metrics import difference_set, improved_set, score_corpus
from .model import parameter_count
from .params import load_checkpoint, save_checkpoint
from .stats import paired_t_test
from .synthetic import SyntheticSpec, generate_synthetic_corpus
from .training import format_training_log, train
from . import verify

GRADCHECK_PARAM_LIMIT = 100_000

DEFAULT_ABLATION_SWEEP = [
    {"name": "baseline"},
    {"name": "h1", "h": 1},
    {"name": "h2", "h": 2},
    {"name": "h4", "h": 4},
    {"name": "h5", "h": 5},
    {"name": "eos", "statement_encoding": "eos"},
    {"name": "summary_vector", "gate_query": "summary_vector"},
    {"name": "attendgru_only", "encoder_kind": "attendgru_only"},
]


@dataclass
class RunPaths:
    dataset: str = ""
    train: str = ""
    val: str = ""
    test: str = ""
    code_vocab: str = ""
    summary_vocab: str = ""
    checkpoint: str = ""
    predictions: str = ""
    report: str = ""
    log: str = ""

    @classmethod
    def from_dict(cls, raw: dict) -> "RunPaths":
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(raw) - known)
        if unknown:
            raise ConfigError(f"unknown path keys: {', '.join(unknown)}")
        return cls(**raw)

    def to_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}


@dataclass
class SplitSpec:
    ratios: tuple[float, float, float] = (0.8, 0.1, 0.1)
    min_statements: int = 1
    exclude_ids: tuple[str, ...] = ()

    def validate(self) -> "SplitSpec":
        if len(self.ratios) != 3 or any(r <= 0 for r in self.ratios):
            raise ConfigError(f"split ratios must be three positive numbers, got {self.ratios}")
        if abs(sum(self.ratios) - 1.0) > 1e-9:
            raise ConfigError(f"split ratios must sum to 1, got {sum(self.ratios)}")
        if self.min_statements < 1:
            raise ConfigError(f"min_statements must be >= 1, got {self.min_statements}")
        return self

    @classmethod
    def from_dict(cls, raw: dict) -> "SplitSpec":
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(raw) - known)
        if unknown:
            raise ConfigError(f"unknown split keys: {', '.join(unknown)}")
        kwargs = dict(raw)
        if "ratios" in kwargs:
            kwargs["ratios"] = tuple(kwargs["ratios"])
        if "exclude_ids" in kwargs:
            kwargs["exclude_ids"] = tuple(kwargs["exclude_ids"])
        return cls(**kwargs).validate()

    def to_dict(self) -> dict:
        return {"ratios": list(self.ratios), "min_statements": self.min_statements,
                "exclude_ids": list(self.exclude_ids)}


@dataclass
class RunConfig:
    model: ModelConfig = field(default_factory=ModelConfig)
    paths: RunPaths = field(default_factory=RunPaths)
    split: SplitSpec = field(default_factory=SplitSpec)
    synthetic: SyntheticSpec | None = None
    seed: int = 13
    max_epochs: int = 30

    @classmethod
    def from_dict(cls, raw: dict) -> "RunConfig":
        known = {"model", "paths", "split", "synthetic", "seed", "max_epochs"}
        unknown = sorted(set(raw) - known)
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
        synthetic = raw.get("synthetic")
        return cls(
            model=ModelConfig.from_dict(raw.get("model", {})),
            paths=RunPaths.from_dict(raw.get("paths", {})),
            split=SplitSpec.from_dict(raw.get("split", {})),
            synthetic=SyntheticSpec.from_dict(synthetic) if synthetic is not None else None,
            seed=int(raw.get("seed", 13)),
            max_epochs=int(raw.get("max_epochs", 30)),
        )

    def to_dict(self) -> dict:
        return {
            "model": self.model.to_dict(),
            "paths": self.paths.to_dict(),
            "split": self.split.to_dict(),
            "synthetic": self.synthetic.to_dict() if self.synthetic else None,
            "seed": self.seed,
            "max_epochs": self.max_epochs,
        }

    @classmethod
    def load(cls, path: str) -> "RunConfig":
        try:
            with open(path, "r", encoding="utf-8") as fh:
                raw = json.load(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
        return cls.from_dict(raw)

    def save(self, path: str) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(canonical_json(self.to_dict()))


def _require_paths(cfg: RunConfig, command: str, *names: str) -> None:
    missing = [n for n in names if not getattr(cfg.paths, n)]
    if missing:
        raise ConfigError(f"{command} requires config paths: {', '.join(missing)}")


def _load_vocabs(cfg: RunConfig) -> tuple[Vocabulary, Vocabulary]:
    return Vocabulary.load(cfg.paths.code_vocab), Vocabulary.load(cfg.paths.summary_vocab)


def _effective_model(cfg: RunConfig, code_vocab: Vocabulary,
                     sum_vocab: Vocabulary) -> ModelConfig:
    """The trained configuration: vocabulary sizes come from the actual
    vocabulary files and the rng seed from the run seed."""
    return replace(cfg.model, code_vocab_size=len(code_vocab),
                   summary_vocab_size=len(sum_vocab), rng_seed=cfg.seed).validate()


def _write_text(path: str, text: str) -> None:
    try:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
    except OSError as exc:
        raise DataError(f"cannot write {path}: {exc}") from exc


def _fmt(value, spec: str = "{:.4f}") -> str:
    if value is None:
        return "-"
    return spec.format(value)


def _metric_table(rows) -> str:
    """Rows of (system, meteor, bleu, t, p); the USE column is out of scope
    and marked as such."""
    header = (f"{'system':<30} {'METEOR':>8} {'USE':>20} {'BLEU':>8} "
              f"{'t':>9} {'p':>9}")
    lines = [header]
    for name, meteor_v, bleu_v, t, p in rows:
        lines.append(
            f"{name:<30} {_fmt(meteor_v):>8} {'n/a (out of scope)':>20} "
            f"{_fmt(bleu_v, '{:.2f}'):>8} {_fmt(t, '{:.3f}'):>9} {_fmt(p, '{:.4f}'):>9}"
        )
    return "\n".join(lines)


def _references(cfg: RunConfig) -> tuple[list[Sample], dict[str, list[str]]]:
    samples = read_dataset(cfg.paths.test)
    return samples, {s.sample_id: s.summary_tokens for s in samples}


# ---------------------------------------------------------------------------
# subcommands


def cmd_prepare(cfg: RunConfig) -> None:
    """Generate or ingest the dataset, filter, split by project, and build
    vocabularies from the training split."""
    _require_paths(cfg, "prepare", "dataset", "train", "val", "test",
                   "code_vocab", "summary_vocab")
    if cfg.synthetic is not None:
        samples = generate_synthetic_corpus(cfg.synthetic, cfg.seed)
        write_dataset(cfg.paths.dataset, samples)
    else:
        samples = read_dataset(cfg.paths.dataset)
    if cfg.split.exclude_ids:
        excluded = set(cfg.split.exclude_ids)
        samples = [s for s in samples if s.sample_id not in excluded]
    samples = filter_by_length(samples, cfg.split.min_statements)
    train_set, val_set, test_set = split_by_project(samples, cfg.split.ratios, cfg.seed)
    write_dataset(cfg.paths.train, train_set)
    write_dataset(cfg.paths.val, val_set)
    write_dataset(cfg.paths.test, test_set)
    code_vocab = build_vocab(train_set, cfg.model.code_vocab_size, "code")
    sum_vocab = build_vocab(train_set, cfg.model.summary_vocab_size, "summary")
    code_vocab.save(cfg.paths.code_vocab)
    sum_vocab.save(cfg.paths.summary_vocab)
    print(f"prepared {len(samples)} samples -> train {len(train_set)} / "
          f"val {len(val_set)} / test {len(test_set)}; "
          f"code vocab {len(code_vocab)}, summary vocab {len(sum_vocab)}")


def _train_one(cfg: RunConfig, model_cfg: ModelConfig, code_vocab: Vocabulary,
               sum_vocab: Vocabulary):
    train_raw = read_dataset(cfg.paths.train)
    val_raw = read_dataset(cfg.paths.val)
    enc_train = [encode_sample(s, code_vocab, sum_vocab, model_cfg) for s in train_raw]
    enc_val = [encode_sample(s, code_vocab, sum_vocab, model_cfg) for s in val_raw]
    return train(enc_train, enc_val, model_cfg, cfg.max_epochs)


def cmd_train(cfg: RunConfig) -> None:
    _require_paths(cfg, "train", "train", "val", "code_vocab", "summary_vocab", "checkpoint")
    code_vocab, sum_vocab = _load_vocabs(cfg)
    model_cfg = _effective_model(cfg, code_vocab, sum_vocab)
    best, reports = _train_one(cfg, model_cfg, code_vocab, sum_vocab)
    save_checkpoint(cfg.paths.checkpoint, model_cfg, best)
    log_path = cfg.paths.log or cfg.paths.checkpoint + ".log"
    _write_text(log_path, format_training_log(reports))
    best_epoch = max(reports, key=lambda r: (r.val_accuracy, -r.val_loss, -r.epoch))
    print(f"trained {len(reports)} epochs; kept epoch {best_epoch.epoch} "
          f"(val acc {best_epoch.val_accuracy:.4f}, val loss {best_epoch.val_loss:.4f}) "
          f"-> {cfg.paths.checkpoint}")


def _load_models(checkpoint_paths) -> list[LoadedModel]:
    return [LoadedModel(params, config) for config, params in
            (load_checkpoint(p) for p in checkpoint_paths)]


def cmd_predict(cfg: RunConfig, checkpoints, out: str | None, dump_gates: bool) -> None:
    _require_paths(cfg, "predict", "test", "code_vocab", "summary_vocab")
    out_path = out or cfg.paths.predictions
    if not out_path:
        raise ConfigError("predict needs --out or a predictions path in the config")
    if not checkpoints:
        checkpoints = [cfg.paths.checkpoint] if cfg.paths.checkpoint else []
    if not checkpoints:
        raise ConfigError("predict needs --checkpoint or a checkpoint path in the config")
    code_vocab, sum_vocab = _load_vocabs(cfg)
    models = _load_models(checkpoints)
    samples = read_dataset(cfg.paths.test)
    gates_path = out_path + ".gates" if dump_gates else None
    records = predict_corpus(models, samples, code_vocab, sum_vocab, out_path,
                             dump_gates_path=gates_path)
    suffix = f" (+ gate dump {gates_path})" if gates_path else ""
    print(f"wrote {len(records)} predictions from {len(models)} model(s) to {out_path}{suffix}")


def cmd_evaluate(cfg: RunConfig, out: str | None) -> None:
    _require_paths(cfg, "evaluate", "test", "predictions")
    report_path = out or cfg.paths.report
    if not report_path:
        raise ConfigError("evaluate needs --out or a report path in the config")
    _, refs = _references(cfg)
    preds = read_predictions(cfg.paths.predictions)
    missing = sorted(set(refs) - set(preds)) + sorted(set(preds) - set(refs))
    if missing:
        raise DataError(f"predictions and references disagree on ids: {', '.join(missing[:10])}")
    scored = score_corpus((sid, refs[sid], preds[sid]) for sid in sorted(refs))
    name = cfg.paths.predictions.rsplit("/", 1)[-1]
    text = _metric_table([(name, scored.mean_meteor, scored.corpus_bleu, None, None)]) + "\n"
    _write_text(report_path, text)
    _write_text(report_path + ".json", canonical_json({
        "system": name,
        "meteor": scored.mean_meteor,
        "use": "n/a (out of scope)",
        "bleu": scored.corpus_bleu,
        "samples": len(scored.entries),
    }))
    print(text, end="")


def cmd_analyze(cfg: RunConfig, preds_a_path: str, preds_b_path: str, out: str | None) -> None:
    """Difference-set and improved-set analysis of two prediction files."""
    _require_paths(cfg, "analyze", "test")
    report_path = out or cfg.paths.report
    if not report_path:
        raise ConfigError("analyze needs --out or a report path in the config")
    _, refs = _references(cfg)
    preds_a = read_predictions(preds_a_path)
    preds_b = read_predictions(preds_b_path)
    name_a = preds_a_path.rsplit("/", 1)[-1]
    name_b = preds_b_path.rsplit("/", 1)[-1]

    scored_a = score_corpus((sid, refs[sid], preds_a[sid]) for sid in sorted(refs))
    scored_b = score_corpus((sid, refs[sid], preds_b[sid]) for sid in sorted(refs))
    met_a, met_b = scored_a.meteor_by_id(), scored_b.meteor_by_id()
    overall_t = paired_t_test([met_a[sid] for sid in sorted(refs)],
                              [met_b[sid] for sid in sorted(refs)])
    partition = difference_set(preds_a, preds_b, refs)
    improved_ab = improved_set(met_a, met_b)
    improved_ba = improved_set(met_b, met_a)

    lines = ["== overall =="]
    lines.append(_metric_table([
        (name_a, scored_a.mean_meteor, scored_a.corpus_bleu, None, None),
        (name_b, scored_b.mean_meteor, scored_b.corpus_bleu, overall_t.t, overall_t.p),
    ]))
    lines.append("(t/p: paired t-test on per-sample METEOR, A vs B, shown on the B row)")
    lines.append("")
    lines.append("== difference set ==")
    lines.append(f"size: {partition.difference_pct:.2f}% "
                 f"({len(partition.difference_ids)} of "
                 f"{len(partition.difference_ids) + len(partition.same_ids)})")
    same = partition.scores["same"]["a"]
    if same is not None:
        lines.append(f"same set: METEOR {same['mean_meteor']:.4f}  BLEU {same['bleu']:.2f}")
    else:
        lines.append("same set: empty")
    diff_rows = []
    for name, key in ((name_a, "a"), (name_b, "b")):
        entry = partition.scores["difference"][key]
        tstat = partition.ttest_difference
        show_t = tstat if key == "b" and tstat is not None else None
        diff_rows.append((
            name,
            entry["mean_meteor"] if entry else None,
            entry["bleu"] if entry else None,
            show_t.t if show_t else None,
            show_t.p if show_t else None,
        ))
    lines.append(_metric_table(diff_rows))
    lines.append("")
    lines.append(f"== improved set ({name_a} over {name_b}) ==")
    lines.append(f"size: {improved_ab.size_pct:.2f}%  "
                 f"mean METEOR {_fmt(improved_ab.mean_a)} vs {_fmt(improved_ab.mean_b)}")
    lines.append(f"== improved set ({name_b} over {name_a}) ==")
    lines.append(f"size: {improved_ba.size_pct:.2f}%  "
                 f"mean METEOR {_fmt(improved_ba.mean_a)} vs {_fmt(improved_ba.mean_b)}")
    text = "\n".join(lines) + "\n"
    _write_text(report_path, text)
    _write_text(report_path + ".json", canonical_json({
        "system_a": name_a,
        "system_b": name_b,
        "overall": {
            "a": {"meteor": scored_a.mean_meteor, "bleu": scored_a.corpus_bleu},
            "b": {"meteor": scored_b.mean_meteor, "bleu": scored_b.corpus_bleu},
            "ttest": {"t": overall_t.t, "p": overall_t.p, "degenerate": overall_t.degenerate},
        },
        "difference_set": {
            "pct": partition.difference_pct,
            "ids": partition.difference_ids,
            "scores": partition.scores,
            "ttest": ({"t": partition.ttest_difference.t, "p": partition.ttest_difference.p}
                      if partition.ttest_difference else None),
        },
        "improved_set_a_over_b": {
            "pct": improved_ab.size_pct, "ids": improved_ab.ids,
            "mean_a": improved_ab.mean_a, "mean_b": improved_ab.mean_b,
        },
        "improved_set_b_over_a": {
            "pct": improved_ba.size_pct, "ids": improved_ba.ids,
            "mean_a": improved_ba.mean_a, "mean_b": improved_ba.mean_b,
        },
    }))
    print(text, end="")


def _load_sweep(path: str | None) -> list[dict]:
    if path is None:
        return [dict(entry) for entry in DEFAULT_ABLATION_SWEEP]
    try:
        with open(path, "r", encoding="utf-8") as fh:
            sweep = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read sweep {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"sweep {path} is not valid JSON: {exc}") from exc
    if not isinstance(sweep, list) or not all(isinstance(e, dict) and "name" in e for e in sweep):
        raise ConfigError(f"sweep {path} must be a JSON list of objects with a 'name' key")
    return sweep


def cmd_ablate(cfg: RunConfig, sweep_path: str | None, out: str | None) -> None:
    """Train every sweep configuration on the shared seed and data, score
    each on the test set, and report paired t-tests against the baseline."""
    _require_paths(cfg, "ablate", "train", "val", "test",
                   "code_vocab", "summary_vocab", "checkpoint")
    report_path = out or cfg.paths.report
    if not report_path:
        raise ConfigError("ablate needs --out or a report path in the config")
    sweep = _load_sweep(sweep_path)
    code_vocab, sum_vocab = _load_vocabs(cfg)
    base_cfg = _effective_model(cfg, code_vocab, sum_vocab)
    samples = read_dataset(cfg.paths.test)
    refs = {s.sample_id: s.summary_tokens for s in samples}

    configs: list[tuple[str, ModelConfig]] = []
    for entry in sweep:
        overrides = {k: v for k, v in entry.items() if k != "name"}
        unknown = sorted(set(overrides) - {f.name for f in fields(ModelConfig)})
        if unknown:
            raise ConfigError(f"sweep entry {entry['name']!r} has unknown keys: {', '.join(unknown)}")
        configs.append((entry["name"], replace(base_cfg, **overrides).validate()))
    if not any(mc == base_cfg for _, mc in configs):
        configs.insert(0, ("baseline", base_cfg))
    baseline_index = next(i for i, (_, mc) in enumerate(configs) if mc == base_cfg)

    results = []
    for name, model_cfg in configs:
        best, reports = _train_one(cfg, model_cfg, code_vocab, sum_vocab)
        ckpt_path = f"{cfg.paths.checkpoint}.{name}"
        save_checkpoint(ckpt_path, model_cfg, best)
        pred_path = f"{ckpt_path}.preds"
        predict_corpus([LoadedModel(best, model_cfg)], samples, code_vocab, sum_vocab, pred_path)
        preds = read_predictions(pred_path)
        scored = score_corpus((sid, refs[sid], preds[sid]) for sid in sorted(refs))
        results.append({
            "name": name,
            "config": model_cfg,
            "meteor": scored.mean_meteor,
            "bleu": scored.corpus_bleu,
            "per_sample_meteor": scored.meteor_by_id(),
            "parameters": parameter_count(model_cfg),
            "finite": best.all_finite() and np.isfinite(scored.mean_meteor),
            "epochs": len(reports),
        })
        print(f"ablate: {name} done (METEOR {scored.mean_meteor:.4f}, "
              f"BLEU {scored.corpus_bleu:.2f})")

    base_scores = results[baseline_index]["per_sample_meteor"]
    rows = []
    for i, r in enumerate(results):
        if i == baseline_index:
            t = p = None
        else:
            keys = sorted(base_scores)
            tt = paired_t_test([r["per_sample_meteor"][k] for k in keys],
                               [base_scores[k] for k in keys])
            t, p = tt.t, tt.p
        rows.append((r["name"], r["meteor"], r["bleu"], t, p))
    text = (_metric_table(rows)
            + "\n(t/p: paired t-test on per-sample METEOR vs the baseline row)\n")
    bad = [r["name"] for r in results if not r["finite"]]
    if bad:
        text += f"WARNING: non-finite values in: {', '.join(bad)}\n"
    _write_text(report_path, text)
    _write_text(report_path + ".json", canonical_json({
        "baseline": results[baseline_index]["name"],
        "rows": [{
            "name": r["name"],
            "meteor": r["meteor"],
            "use": "n/a (out of scope)",
            "bleu": r["bleu"],
            "parameters": r["parameters"],
            "finite": bool(r["finite"]),
            "epochs": r["epochs"],
            "t": rows[i][3],
            "p": rows[i][4],
        } for i, r in enumerate(results)],
    }))
    print(text, end="")


def cmd_gradcheck(cfg: RunConfig) -> None:
    """Finite-difference suites for the tensor kernels and the full network
    on the configured (toy-sized) model."""
    count = parameter_count(cfg.model)
    if count >= GRADCHECK_PARAM_LIMIT:
        raise ConfigError(
            f"gradcheck requires a toy model (< {GRADCHECK_PARAM_LIMIT} parameters), "
            f"got {count}"
        )
    results = verify.run_op_checks(seed=cfg.seed)
    results += verify.run_model_checks(seed=cfg.seed, base=cfg.model)
    report = verify.format_report(results)
    print(report, end="")
    if cfg.paths.report:
        _write_text(cfg.paths.report, report)
    verify.require_all_passed(results)


# ---------------------------------------------------------------------------
# entry points


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="stmtmem",
        description="statement-memory code summarization pipeline",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", required=True, help="run config JSON")
        p.add_argument("--seed", type=int, default=None, help="override the config seed")

    common(sub.add_parser("prepare", help="generate/split data and build vocabularies"))
    common(sub.add_parser("train", help="train a model and write the best checkpoint"))

    p = sub.add_parser("predict", help="greedy-decode the test set (1..k checkpoints ensemble)")
    common(p)
    p.add_argument("--checkpoint", action="append", default=[],
                   help="checkpoint file; repeat for an ensemble")
    p.add_argument("--out", default=None, help="prediction file path")
    p.add_argument("--dump-gates", action="store_true",
                   help="also write per-hop statement gates next to the predictions")

    p = sub.add_parser("evaluate", help="score a prediction file against the test references")
    common(p)
    p.add_argument("--out", default=None, help="report path")

    p = sub.add_parser("analyze", help="difference/improved-set analysis of two prediction files")
    common(p)
    p.add_argument("preds_a", help="prediction file of system A")
    p.add_argument("preds_b", help="prediction file of system B")
    p.add_argument("--out", default=None, help="report path")

    p = sub.add_parser("ablate", help="train and compare a sweep of configurations")
    common(p)
    p.add_argument("--sweep", default=None, help="sweep JSON (default: built-in 8-config sweep)")
    p.add_argument("--out", default=None, help="report path")

    common(sub.add_parser("gradcheck", help="finite-difference verification suites"))
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        cfg = RunConfig.load(args.config)
        if args.seed is not None:
            cfg = replace(cfg, seed=args.seed)
        if args.command == "prepare":
            cmd_prepare(cfg)
        elif args.command == "train":
            cmd_train(cfg)
        elif args.command == "predict":
            cmd_predict(cfg, args.checkpoint, args.out, args.dump_gates)
        elif args.command == "evaluate":
            cmd_evaluate(cfg, args.out)
        elif args.command == "analyze":
            cmd_analyze(cfg, args.preds_a, args.preds_b, args.out)
        elif args.command == "ablate":
            cmd_ablate(cfg, args.sweep, args.out)
        elif args.command == "gradcheck":
            cmd_gradcheck(cfg)
        else:  # pragma: no cover - argparse enforces the choices
            raise UsageError(f"unknown command {args.command}")
    except VerificationError as exc:
        print(f"verification failed: {exc}", file=sys.stderr)
        return 3
    except (ConfigError, UsageError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2
    return 0


def main_entry() -> None:  # console_scripts target
    sys.exit(main())
