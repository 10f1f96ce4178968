"""Round-by-round orchestration: igniter training, coarse prediction on the
target pool, annotate -> retrain -> evaluate rounds, the fixed-budget
strategy ablation, and report emitters."""

from __future__ import annotations

import csv
import io
import json
import time
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import annotator as ann
from . import segmenter as seg
from . import strategy as strat
from . import synthdata
from .core import (
    Dataset,
    DiceScore,
    LabelMap,
    ORGAN_CLASSES,
    STATUS_MACHINE,
    STATUS_REFINED,
    Sample,
    ValidationError,
    dice,
    write_labelmap,
)

RETRAIN_TARGET_ONLY = "annotated_target_only"
RETRAIN_TARGET_PLUS_SEED = "annotated_target_plus_seed"
TEST_FIXED_HOLDOUT = "fixed_holdout"
TEST_LAST_ROUND = "last_round_samples"


@dataclass(frozen=True)
class RunConfig:
    dataset_dir: str
    output_dir: str
    rng_seed: int = 0
    igniter: seg.TrainConfig = field(default_factory=seg.igniter_config)
    sustainer: seg.TrainConfig = field(default_factory=seg.TrainConfig)
    cost_model: ann.CostModel = field(default_factory=ann.CostModel)
    schedule: strat.RoundSchedule = field(default_factory=strat.default_schedule)
    retrain_corpus: str = RETRAIN_TARGET_PLUS_SEED
    test_policy: str = TEST_FIXED_HOLDOUT
    margin_threshold: float = strat.DEFAULT_MARGIN_THRESHOLD

    def __post_init__(self):
        if self.retrain_corpus not in (RETRAIN_TARGET_ONLY, RETRAIN_TARGET_PLUS_SEED):
            raise ValidationError(f"unknown retrain_corpus {self.retrain_corpus!r}")
        if self.test_policy not in (TEST_FIXED_HOLDOUT, TEST_LAST_ROUND):
            raise ValidationError(f"unknown test_policy {self.test_policy!r}")


@dataclass
class RoundRecord:
    round: int
    annotated: list[dict]  # [{"sample_id", "time_min"}] in batch order
    cumulative_annotated: int
    total_time_min: float
    mean_time_min: float
    train_meta: dict
    dice_per_class: dict[int, float]
    dice_mean: float
    wall_clock_sec: float = 0.0  # diagnostics only; excluded from report.json

    def to_json(self) -> dict:
        return {
            "round": self.round,
            "annotated": self.annotated,
            "cumulative_annotated": self.cumulative_annotated,
            "total_time_min": self.total_time_min,
            "mean_time_min": self.mean_time_min,
            "train_meta": self.train_meta,
            "dice": {
                "per_class": {str(c): v for c, v in self.dice_per_class.items()},
                "mean": self.dice_mean,
            },
        }


@dataclass
class RunReport:
    config: dict
    baseline: RoundRecord
    rounds: list[RoundRecord]
    truncated: bool
    totals: dict

    def to_json(self) -> dict:
        return {
            "config": self.config,
            "baseline": self.baseline.to_json(),
            "rounds": [r.to_json() for r in self.rounds],
            "truncated": self.truncated,
            "totals": self.totals,
        }


class LoopObserver:
    """No-op hooks the service overrides to mirror loop progress."""

    def on_igniter_training(self) -> None: ...

    def on_round_started(self, round_index: int, batch_ids: list[str]) -> None: ...

    def on_training(self, round_index: int) -> None: ...

    def on_round_complete(self, round_index: int, record: RoundRecord) -> None: ...

    def on_finished(self, report: "RunReport") -> None: ...


def oracle_batch_annotator(cost: ann.CostModel):
    def annotate(batch: list[Sample], round_index: int) -> dict[str, ann.AnnotationEvent]:
        return {s.id: ann.oracle_annotate(s, cost, round_index) for s in batch}

    return annotate


def _derived_seeds(master: int) -> dict[str, int]:
    state = np.random.SeedSequence(master).generate_state(3, dtype=np.uint64)
    return {
        "igniter": int(state[0] % (2**31)),
        "sustainer": int(state[1] % (2**31)),
        "schedule": int(state[2] % (2**31)),
    }


def _round_seed(base: int, round_index: int) -> int:
    return int(np.random.SeedSequence((base, round_index)).generate_state(1)[0])


def build_retrain_corpus(
    seed_ds: Dataset, samples: dict[str, Sample], mode: str
) -> list[tuple[str, object, object]]:
    """Tagged (provenance, volume, label) triples for sustainer retraining.

    Only refined target annotations ever enter the corpus; seed ground truth
    joins when the corpus mode includes it. Tags make the never-train-on-
    unrefined-labels invariant directly assertable.
    """
    corpus = []
    if mode == RETRAIN_TARGET_PLUS_SEED:
        for s in seed_ds.samples:
            corpus.append((f"seed:{s.id}", s.volume, s.ground_truth))
    for sid in sorted(samples):
        s = samples[sid]
        if s.status == STATUS_REFINED:
            corpus.append((f"refined:{s.id}", s.volume, s.annotation))
    return corpus


def _evaluate(model: seg.SegmenterModel, samples: list[Sample]) -> tuple[dict[int, float], float]:
    """Macro-average per-class Dice of model predictions over samples."""
    sums = {c: 0.0 for c in ORGAN_CLASSES}
    for s in samples:
        pred, _ = seg.predict(model, s.volume)
        score = dice(pred, s.ground_truth)
        for c in ORGAN_CLASSES:
            sums[c] += score.per_class[c]
    per_class = {c: sums[c] / len(samples) for c in ORGAN_CLASSES}
    mean = sum(per_class.values()) / len(per_class)
    return per_class, mean


def _predict_pool(
    model,
    samples: dict[str, Sample],
    pool_ids: list[str],
    cfg: RunConfig,
    oracle_mode: bool,
    predictions_dir: Path | None,
) -> dict[str, strat.DifficultyEstimate]:
    """Refresh predictions and difficulty estimates for the unrefined pool."""
    estimates = {}
    for sid in sorted(pool_ids):
        s = samples[sid]
        pred, probs = seg.predict(model, s.volume)
        s = replace(s, prediction=pred, status=STATUS_MACHINE)
        samples[sid] = s
        oracle_cost_min = ann.oracle_cost(s, cfg.cost_model) if oracle_mode else None
        estimates[sid] = strat.estimate_difficulty(
            s, probs, cfg.cost_model, cfg.margin_threshold, oracle_cost_min
        )
        if predictions_dir is not None:
            write_labelmap(predictions_dir / f"{sid}.lbl", pred)
    return estimates


class _EventLog:
    def __init__(self, path: Path | None):
        self.path = path
        if path is not None:
            path.write_text("")

    def append(self, event: dict) -> None:
        if self.path is not None:
            with open(self.path, "a", encoding="utf-8") as fh:
                fh.write(json.dumps(event, sort_keys=True) + "\n")


def run_loop(
    cfg: RunConfig,
    annotate_batch=None,
    observer: LoopObserver | None = None,
) -> RunReport:
    """Execute the full loop: igniter, coarse predictions, then one
    select -> annotate -> retrain -> evaluate cycle per scheduled round.

    Deterministic in oracle mode for a given config and seed; an exhausted
    pool truncates the schedule with a note rather than erroring.
    """
    observer = observer or LoopObserver()
    annotate_batch = annotate_batch or oracle_batch_annotator(cfg.cost_model)
    ds_seed, ds_target, ds_test = synthdata.load_dataset_dir(cfg.dataset_dir)
    out = Path(cfg.output_dir)
    models_dir = out / "models"
    annotations_dir = out / "annotations"
    predictions_dir = out / "predictions"
    for d in (models_dir, annotations_dir, predictions_dir):
        d.mkdir(parents=True, exist_ok=True)
    events = _EventLog(out / "events.ndjson")
    seeds = _derived_seeds(cfg.rng_seed)
    oracle_mode = cfg.schedule.difficulty_source == "oracle"

    config_snapshot = run_config_to_dict(cfg)
    (out / "config.json").write_text(canonical_json(config_snapshot))
    events.append({"type": "run_started", "rng_seed": cfg.rng_seed})

    t0 = time.perf_counter()
    observer.on_igniter_training()
    igniter_cfg = replace(cfg.igniter, rng_seed=seeds["igniter"])
    model = seg.train([(s.volume, s.ground_truth) for s in ds_seed.samples], igniter_cfg)
    seg.save_model(models_dir / "round-0.json", model)
    saved_models = [model]

    samples = {s.id: s for s in ds_target.samples}
    estimates = _predict_pool(
        model, samples, list(samples), cfg, oracle_mode, predictions_dir
    )
    test_per_class, test_mean = _evaluate(model, list(ds_test.samples))
    for s in ds_test.samples:
        pred, _ = seg.predict(model, s.volume)
        write_labelmap(predictions_dir / f"{s.id}.lbl", pred)
    baseline = RoundRecord(
        round=0,
        annotated=[],
        cumulative_annotated=0,
        total_time_min=0.0,
        mean_time_min=0.0,
        train_meta=model.train_meta,
        dice_per_class=test_per_class,
        dice_mean=test_mean,
        wall_clock_sec=time.perf_counter() - t0,
    )
    events.append({"type": "igniter_trained", "baseline": baseline.to_json()})

    records: list[RoundRecord] = []
    last_batch: list[str] = []
    truncated = False
    cumulative = 0
    for r, budget in enumerate(cfg.schedule.budgets, start=1):
        t_round = time.perf_counter()
        pool = [sid for sid in sorted(samples) if samples[sid].status != STATUS_REFINED]
        if not pool:
            truncated = True
            break
        batch = strat.select_batch(
            pool,
            estimates,
            budget,
            cfg.schedule.policy,
            _round_seed(seeds["schedule"], r),
            cfg.schedule.difficulty_source,
        )
        events.append({"type": "round_started", "round": r, "batch": batch})
        observer.on_round_started(r, batch)

        times = []
        if batch:
            ev_map = annotate_batch([samples[sid] for sid in batch], r)
            for sid in batch:
                event = ev_map[sid]
                samples[sid] = ann.apply_annotation(samples[sid], event)
                label_rel = f"annotations/{sid}.lbl"
                write_labelmap(out / label_rel, event.label)
                events.append({"type": "annotation", **ann.event_to_json(event, label_rel)})
                times.append(event.time_min)
            last_batch = batch
            observer.on_training(r)
            corpus = build_retrain_corpus(ds_seed, samples, cfg.retrain_corpus)
            sustainer_cfg = replace(cfg.sustainer, rng_seed=_round_seed(seeds["sustainer"], r))
            model = seg.train([(v, lm) for _, v, lm in corpus], sustainer_cfg)
            remaining = [sid for sid in samples if samples[sid].status != STATUS_REFINED]
            estimates = _predict_pool(
                model, samples, remaining, cfg, oracle_mode, predictions_dir
            )
            test_per_class, test_mean = _evaluate(model, list(ds_test.samples))
            train_meta = model.train_meta
        else:
            # nothing fit the budget: model and Dice carry over unchanged
            train_meta = {"skipped": True}
        seg.save_model(models_dir / f"round-{r}.json", model)
        saved_models.append(model)
        cumulative += len(batch)
        record = RoundRecord(
            round=r,
            annotated=[
                {"sample_id": sid, "time_min": t} for sid, t in zip(batch, times)
            ],
            cumulative_annotated=cumulative,
            total_time_min=float(sum(times)),
            mean_time_min=float(sum(times) / len(times)) if times else 0.0,
            train_meta=train_meta,
            dice_per_class=dict(test_per_class),
            dice_mean=test_mean,
            wall_clock_sec=time.perf_counter() - t_round,
        )
        records.append(record)
        events.append({"type": "round_trained", "round": r, "record": record.to_json()})
        observer.on_round_complete(r, record)

    if cfg.test_policy == TEST_LAST_ROUND and last_batch:
        eval_samples = [
            replace(samples[sid], prediction=None, annotation=None,
                    status="unlabelled", annotation_time_min=None, round_annotated=None)
            for sid in last_batch
        ]
        for rec, mdl in zip([baseline] + records, saved_models):
            per_class, mean = _evaluate(mdl, eval_samples)
            rec.dice_per_class = per_class
            rec.dice_mean = mean

    totals = {
        "total_annotation_min": float(sum(r.total_time_min for r in records)),
        "refined_count": cumulative,
        "final_dice_mean": records[-1].dice_mean if records else baseline.dice_mean,
        "dice_gain": (records[-1].dice_mean if records else baseline.dice_mean)
        - baseline.dice_mean,
    }
    report = RunReport(
        config=config_snapshot,
        baseline=baseline,
        rounds=records,
        truncated=truncated,
        totals=totals,
    )
    events.append({"type": "run_finished", "truncated": truncated})
    (out / "report.json").write_text(emit_report(report, "json"))
    (out / "report.md").write_text(emit_report(report, "md"))
    (out / "rounds.csv").write_text(emit_report(report, "csv"))
    (out / "timing.json").write_text(
        json.dumps(
            {
                "baseline_sec": baseline.wall_clock_sec,
                "rounds_sec": [r.wall_clock_sec for r in records],
            },
            indent=2,
        )
    )
    observer.on_finished(report)
    return report


# ---------------------------------------------------------------------------
# report emission


def _round_floats(obj):
    if isinstance(obj, float):
        return round(obj, 4)
    if isinstance(obj, dict):
        return {k: _round_floats(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_round_floats(v) for v in obj]
    return obj


def canonical_json(obj) -> str:
    """Stable report serialization: sorted keys, floats at 4 decimals.
    Parsing and re-emitting is byte-identical."""
    return json.dumps(_round_floats(obj), sort_keys=True, indent=2) + "\n"


_CSV_COLUMNS = (
    "round",
    "annotated",
    "cumulative_annotated",
    "mean_time_min",
    "dice_organ_a",
    "dice_organ_b",
    "mean_dice",
)


def _table_rows(report_dict: dict) -> list[list[str]]:
    rows = []
    for rec in [report_dict["baseline"]] + report_dict["rounds"]:
        rows.append(
            [
                str(rec["round"]),
                str(len(rec["annotated"])),
                str(rec["cumulative_annotated"]),
                f"{rec['mean_time_min']:.4f}",
                f"{rec['dice']['per_class']['1']:.4f}",
                f"{rec['dice']['per_class']['2']:.4f}",
                f"{rec['dice']['mean']:.4f}",
            ]
        )
    return rows


def emit_report(report: RunReport | dict, format: str) -> str:
    """Render a run report as ``md``, ``csv``, or canonical ``json``."""
    doc = report.to_json() if isinstance(report, RunReport) else report
    if format == "json":
        return canonical_json(doc)
    if format == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(_CSV_COLUMNS)
        writer.writerows(_table_rows(doc))
        return buf.getvalue()
    if format == "md":
        lines = ["# Annotation-loop run", ""]
        header = "| round | annotated | cumulative | mean time (min) | Dice organ-A | Dice organ-B | mean Dice |"
        lines.append(header)
        lines.append("|" + "---:|" * 7)
        for row in _table_rows(doc):
            lines.append("| " + " | ".join(row) + " |")
        totals = doc["totals"]
        lines.append("")
        lines.append(
            f"Total annotation time: {totals['total_annotation_min']:.4f} min over "
            f"{totals['refined_count']} cases; final mean Dice "
            f"{totals['final_dice_mean']:.4f} (gain {totals['dice_gain']:+.4f})."
        )
        if doc.get("truncated"):
            lines.append("")
            lines.append("Note: pool exhausted before the schedule ended; later rounds were skipped.")
        return "\n".join(lines) + "\n"
    raise ValidationError(f"unknown report format {format!r}")


# ---------------------------------------------------------------------------
# config (de)serialization


def _train_config_to_dict(tc: seg.TrainConfig) -> dict:
    return {
        "epochs": tc.epochs,
        "batch_size": tc.batch_size,
        "learning_rate": tc.learning_rate,
        "lr_decay": tc.lr_decay,
        "decay_interval_steps": tc.decay_interval_steps,
        "voxel_subsample_rate": tc.voxel_subsample_rate,
        "class_balance": tc.class_balance,
    }


def _train_config_from_dict(d: dict, base: seg.TrainConfig) -> seg.TrainConfig:
    return replace(base, **{k: d[k] for k in _train_config_to_dict(base) if k in d})


def run_config_to_dict(cfg: RunConfig) -> dict:
    return {
        "dataset_dir": cfg.dataset_dir,
        "output_dir": cfg.output_dir,
        "rng_seed": cfg.rng_seed,
        "margin_threshold": cfg.margin_threshold,
        "retrain_corpus": cfg.retrain_corpus,
        "test_policy": cfg.test_policy,
        "igniter": _train_config_to_dict(cfg.igniter),
        "sustainer": _train_config_to_dict(cfg.sustainer),
        "cost_model": {
            "t_base": cfg.cost_model.t_base,
            "c_vox": cfg.cost_model.c_vox,
            "c_comp": cfg.cost_model.c_comp,
            "t_scratch": cfg.cost_model.t_scratch,
        },
        "schedule": {
            "budgets": [b.to_json() for b in cfg.schedule.budgets],
            "policy": cfg.schedule.policy,
            "difficulty_source": cfg.schedule.difficulty_source,
        },
    }


def run_config_from_dict(d: dict, **overrides) -> RunConfig:
    """Build a RunConfig from a (possibly sparse) JSON dict. All internal
    randomness derives from ``rng_seed``, so one knob reseeds the whole run."""
    merged = dict(d)
    merged.update({k: v for k, v in overrides.items() if v is not None})
    schedule_d = merged.get("schedule", {})
    budgets = tuple(
        strat.RoundBudget.from_json(b) for b in schedule_d.get("budgets", [])
    ) or strat.default_schedule().budgets
    schedule = strat.RoundSchedule(
        budgets=budgets,
        policy=schedule_d.get("policy", "easy_first"),
        difficulty_source=schedule_d.get("difficulty_source", "proxy"),
        rng_seed=0,
    )
    cost_d = merged.get("cost_model", {})
    return RunConfig(
        dataset_dir=merged["dataset_dir"],
        output_dir=merged["output_dir"],
        rng_seed=merged.get("rng_seed", 0),
        igniter=_train_config_from_dict(merged.get("igniter", {}), seg.igniter_config()),
        sustainer=_train_config_from_dict(merged.get("sustainer", {}), seg.TrainConfig()),
        cost_model=ann.CostModel(**{k: cost_d[k] for k in ("t_base", "c_vox", "c_comp", "t_scratch") if k in cost_d}),
        schedule=schedule,
        retrain_corpus=merged.get("retrain_corpus", RETRAIN_TARGET_PLUS_SEED),
        test_policy=merged.get("test_policy", TEST_FIXED_HOLDOUT),
        margin_threshold=merged.get("margin_threshold", strat.DEFAULT_MARGIN_THRESHOLD),
    )


# ---------------------------------------------------------------------------
# fixed-budget strategy ablation


def ablate_strategy(
    cfg: RunConfig,
    budgets: list[float],
    policies: list[str],
    seeds: list[int],
    out_dir: str | Path,
) -> dict:
    """Fig.-3-style harness: for each (budget, policy, seed), run the first
    two interactions under fixed time budgets with oracle difficulty,
    recording batch sizes and test Dice after each interaction.

    Each seed regenerates the default datasets and igniter so the Monte-Carlo
    spread covers data, training, and selection noise jointly.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rows = []
    for seed in seeds:
        data_dir = out / f"seed-{seed:03d}" / "data"
        if not (data_dir / "manifest.json").exists():
            datasets = synthdata.generate_datasets(
                synthdata.DEFAULT_SEED_SPEC,
                synthdata.DEFAULT_TARGET_SPEC,
                synthdata.DEFAULT_KNOBS,
                synthdata.DEFAULT_COUNTS,
                master_seed=seed,
            )
            synthdata.write_dataset_dir(
                data_dir,
                datasets,
                {
                    "seed": synthdata.spec_to_dict(synthdata.DEFAULT_SEED_SPEC),
                    "target": synthdata.spec_to_dict(synthdata.DEFAULT_TARGET_SPEC),
                },
                master_seed=seed,
            )
        ds_seed, ds_target, ds_test = synthdata.load_dataset_dir(data_dir)
        seeds_d = _derived_seeds(seed)
        igniter_cfg = replace(cfg.igniter, rng_seed=seeds_d["igniter"])
        igniter = seg.train(
            [(s.volume, s.ground_truth) for s in ds_seed.samples], igniter_cfg
        )
        base_samples = {s.id: s for s in ds_target.samples}
        base_estimates = _predict_pool(
            igniter, base_samples, list(base_samples), cfg, oracle_mode=True,
            predictions_dir=None,
        )
        test_samples = list(ds_test.samples)
        base_per_class, base_mean = _evaluate(igniter, test_samples)

        for budget in budgets:
            for policy in policies:
                samples = dict(base_samples)
                estimates = dict(base_estimates)
                model = igniter
                cumulative = 0
                dice_mean = base_mean
                per_class = base_per_class
                for interaction in (1, 2):
                    pool = [
                        sid for sid in sorted(samples)
                        if samples[sid].status != STATUS_REFINED
                    ]
                    sel_seed = _round_seed(
                        int(seeds_d["schedule"]) ^ int(round(budget * 8)),
                        interaction * len(strat.POLICIES) + strat.POLICIES.index(policy),
                    )
                    batch = strat.select_batch(
                        pool, estimates, strat.RoundBudget(time_min=budget),
                        policy, sel_seed, difficulty_source="oracle",
                    )
                    total_time = 0.0
                    if batch:
                        for sid in batch:
                            event = ann.oracle_annotate(
                                samples[sid], cfg.cost_model, interaction
                            )
                            samples[sid] = ann.apply_annotation(samples[sid], event)
                            total_time += event.time_min
                        corpus = build_retrain_corpus(ds_seed, samples, cfg.retrain_corpus)
                        sus_cfg = replace(
                            cfg.sustainer,
                            rng_seed=_round_seed(seeds_d["sustainer"], interaction),
                        )
                        model = seg.train([(v, lm) for _, v, lm in corpus], sus_cfg)
                        remaining = [
                            sid for sid in samples
                            if samples[sid].status != STATUS_REFINED
                        ]
                        estimates = _predict_pool(
                            model, samples, remaining, cfg, oracle_mode=True,
                            predictions_dir=None,
                        )
                        per_class, dice_mean = _evaluate(model, test_samples)
                    cumulative += len(batch)
                    rows.append(
                        {
                            "seed": seed,
                            "budget_min": budget,
                            "policy": policy,
                            "interaction": interaction,
                            "n_annotated": len(batch),
                            "cumulative_annotated": cumulative,
                            "total_time_min": total_time,
                            "dice_organ_a": per_class[1],
                            "dice_organ_b": per_class[2],
                            "mean_dice": dice_mean,
                            "baseline_mean_dice": base_mean,
                        }
                    )
    result = {
        "budgets": budgets,
        "policies": policies,
        "seeds": seeds,
        "rows": rows,
        "medians": _ablation_medians(rows, budgets, policies),
    }
    (out / "ablation.json").write_text(canonical_json(result))
    (out / "ablation.csv").write_text(_ablation_csv(rows))
    (out / "ablation.md").write_text(_ablation_md(result))
    return result


def _ablation_medians(rows, budgets, policies) -> list[dict]:
    cells = []
    for budget in budgets:
        for policy in policies:
            for interaction in (1, 2):
                sel = [
                    r for r in rows
                    if r["budget_min"] == budget
                    and r["policy"] == policy
                    and r["interaction"] == interaction
                ]
                if not sel:
                    continue
                cells.append(
                    {
                        "budget_min": budget,
                        "policy": policy,
                        "interaction": interaction,
                        "median_n_annotated": float(np.median([r["n_annotated"] for r in sel])),
                        "median_mean_dice": float(np.median([r["mean_dice"] for r in sel])),
                        "median_dice_organ_a": float(np.median([r["dice_organ_a"] for r in sel])),
                        "median_dice_organ_b": float(np.median([r["dice_organ_b"] for r in sel])),
                    }
                )
    return cells


_ABLATION_COLUMNS = (
    "seed",
    "budget_min",
    "policy",
    "interaction",
    "n_annotated",
    "cumulative_annotated",
    "total_time_min",
    "dice_organ_a",
    "dice_organ_b",
    "mean_dice",
    "baseline_mean_dice",
)


def _ablation_csv(rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(_ABLATION_COLUMNS)
    for r in rows:
        writer.writerow(
            [
                r["seed"],
                f"{r['budget_min']:g}",
                r["policy"],
                r["interaction"],
                r["n_annotated"],
                r["cumulative_annotated"],
                f"{r['total_time_min']:.4f}",
                f"{r['dice_organ_a']:.4f}",
                f"{r['dice_organ_b']:.4f}",
                f"{r['mean_dice']:.4f}",
                f"{r['baseline_mean_dice']:.4f}",
            ]
        )
    return buf.getvalue()


def _ablation_md(result) -> str:
    lines = ["# Fixed-budget labelling-strategy ablation", ""]
    lines.append("| budget (min) | policy | interaction | median n | median mean Dice |")
    lines.append("|---:|---|---:|---:|---:|")
    for cell in result["medians"]:
        lines.append(
            f"| {cell['budget_min']:g} | {cell['policy']} | {cell['interaction']} "
            f"| {cell['median_n_annotated']:g} | {cell['median_mean_dice']:.4f} |"
        )
    return "\n".join(lines) + "\n"
