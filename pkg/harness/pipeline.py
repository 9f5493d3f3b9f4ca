"""End-to-end experiment: load -> train -> attribute -> attack -> evaluate -> ablate -> analyze -> report.

One combo is a (dataset, architecture, training seed) triple; each combo yields one
ranking per metric. Within a stage, independent (image, method, metric) tasks run on
a bounded thread pool and are merged by sorted key, so worker count never changes
the output bytes.
"""
from concurrent.futures import ThreadPoolExecutor
from contextlib import contextmanager
from pathlib import Path
from typing import Any, Callable, Dict, Hashable, Iterable, List, Optional, Tuple

import numpy as np
import pandas as pd
from loguru import logger
from pydantic import BaseModel, ConfigDict

from analysis.rankings import (
    CANNY,
    UNIFORM,
    RankingRow,
    RankingTable,
    SanityCounts,
    SquareMatrix,
    baseline_sanity_check,
    build_ranking,
    consistency_matrix,
    similarity_matrix,
    top_k_summary,
)
from analysis.shift import distribution_shift
from analysis.statistics import monotonicity, smoothness
from analysis.sweeps import AttackComparison, NoiseSelection, SweepPoint, attack_comparison, epsilon_sweep, noise_selection
from attacks import AttackBudget, AttackMethod, AttackResult, run_attack
from errors import StageError, UndefinedStatisticError
from harness.config import ExperimentConfig, config_hash
from harness.datasets import load_datasets, split_dataset
from harness.reports import (
    safe_name,
    write_curves,
    write_frame,
    write_json,
    write_matrix,
    write_rankings,
    write_score_records,
    write_scores,
)
from imaging.filters import gaussian_blur
from method_executor import MethodExecutor, build_default_executor
from methods.maps import AttributionMap, normalize_map
from methods.method_base import derive_seed
from metrics.curves import ProbabilityCurve, auc
from metrics.metric_registry import CurveMetric, ScalarMetric, compute_curve, is_curve_metric, metric_spec
from metrics.scalar import adcc, average_drop, coherency, complexity, increase_in_confidence
from nn.architectures import build_architecture
from nn.model import Model, forward
from nn.serialization import save_model
from nn.tensors import LabeledDataset, TargetClass
from nn.training import TrainConfig, train

BASELINES = (UNIFORM, CANNY)


class Combo(BaseModel):
    dataset: str
    architecture: str
    seed: int

    @property
    def label(self) -> str:
        return f"{self.dataset}/{self.architecture}/seed{self.seed}"


class ImageRecord(BaseModel):
    combo: str
    image_id: int
    label: int
    clean_class: int
    clean_probability: float
    evaluated: bool
    attack_success: Optional[bool] = None
    attack_iterations: Optional[int] = None


class MetricAccounting(BaseModel):
    """images_in = scored + excluded for one (combo, metric, method)."""

    combo: str
    metric: str
    method: str
    images_in: int
    scored: int
    excluded: int


class CurveQuality(BaseModel):
    combo: str
    metric: str
    curves: int
    mean_monotonicity: float
    mean_smoothness: float


class RunManifest(BaseModel):
    config_hash: str
    combos: List[str] = []
    images: List[ImageRecord] = []
    accounting: List[MetricAccounting] = []
    artifacts: List[str] = []
    completed_stages: List[str] = []
    failed_stage: Optional[str] = None
    partial: bool = False


class AnalysisReport(BaseModel):
    rankings: List[RankingTable] = []
    consistency: Dict[str, SquareMatrix] = {}
    sanity: Dict[str, SanityCounts] = {}
    top_k: Dict[str, Dict[str, List[RankingRow]]] = {}
    skipped: List[str] = []


class ComboRun(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)

    combo: Combo
    model: Model
    test_set: LabeledDataset
    targets: Dict[int, TargetClass] = {}
    maps: Dict[Tuple[str, int], AttributionMap] = {}
    attacks: Dict[int, AttackResult] = {}
    scores: List[Dict[str, Any]] = []
    curves: Dict[str, Dict[Tuple[int, str], ProbabilityCurve]] = {}
    shifts: List[Dict[str, Any]] = []
    sweep: List[SweepPoint] = []
    noise: Optional[NoiseSelection] = None
    comparison: Optional[AttackComparison] = None


def parallel_map(fn: Callable[[Hashable], Any], keys: Iterable[Hashable], workers: int = 1) -> Dict[Hashable, Any]:
    """{key: fn(key)} over sorted keys; the pool only changes scheduling, never the result order."""
    keys = sorted(keys)
    if workers <= 1:
        return {key: fn(key) for key in keys}
    with ThreadPoolExecutor(max_workers=workers) as pool:
        futures = {key: pool.submit(fn, key) for key in keys}
        return {key: futures[key].result() for key in keys}


@contextmanager
def _stage(name: str, manifest: RunManifest, combo: Optional[Combo] = None):
    label = name if combo is None else f"{name}[{combo.label}]"
    logger.info(f"Stage {label} started")
    try:
        yield
    except StageError:
        raise
    except Exception as e:
        logger.error(f"Stage {label} failed: {e}")
        manifest.failed_stage = label
        manifest.partial = True
        raise StageError(label, e) from e
    manifest.completed_stages.append(label)
    logger.success(f"Stage {label} done")


def _method_kwargs(executor: MethodExecutor, config: ExperimentConfig, method: str, *seed_keys: Any) -> Dict[str, Any]:
    params = dict(config.method_params(method))
    if "seed" in executor.get(method).params_schema.model_fields:
        params["seed"] = derive_seed(*seed_keys, method)
    return params


def _train(config: ExperimentConfig, combo: Combo, train_set: LabeledDataset, test_set: LabeledDataset, out: Path,
           manifest: RunManifest) -> Model:
    num_classes = max(2, max(train_set.labels + test_set.labels) + 1)
    model = build_architecture(combo.architecture, train_set.images[0].shape, num_classes, seed=combo.seed)
    train_config = TrainConfig(learning_rate=config.learning_rate, epochs=config.epochs, batch_size=config.batch_size, seed=combo.seed,
                               optimizer=config.optimizer)
    trained = train(model, train_set, train_config, test_set)
    path = save_model(trained, out / "models" / f"{safe_name(combo.label)}.pevm")
    manifest.artifacts.append(path.relative_to(out).as_posix())
    return trained


def _record_images(config: ExperimentConfig, run: ComboRun, manifest: RunManifest) -> List[int]:
    evaluated = []
    for image_id, (image, label) in enumerate(zip(run.test_set.images, run.test_set.labels)):
        probabilities = forward(run.model, image.to_tensor())
        clean_class = int(np.argmax(probabilities))
        keep = config.include_misclassified or clean_class == label
        manifest.images.append(ImageRecord(
            combo=run.combo.label,
            image_id=image_id,
            label=label,
            clean_class=clean_class,
            clean_probability=float(probabilities[clean_class]),
            evaluated=keep,
        ))
        if keep:
            evaluated.append(image_id)
            run.targets[image_id] = TargetClass(class_id=label)
    logger.info(f"{run.combo.label}: evaluating {len(evaluated)} of {len(run.test_set)} test images")
    return evaluated


def _attribute(config: ExperimentConfig, run: ComboRun, executor: MethodExecutor, evaluated: List[int]) -> None:
    def compute(key):
        method, image_id = key
        image = run.test_set.images[image_id]
        params = _method_kwargs(executor, config, method, run.combo.label, image_id)
        return normalize_map(executor.execute_method(method, run.model, image.to_tensor(), run.targets[image_id], **params))

    keys = [(method, image_id) for method in config.methods for image_id in evaluated]
    run.maps = parallel_map(compute, keys, config.workers)


def _attack(config: ExperimentConfig, run: ComboRun, evaluated: List[int], manifest: RunManifest) -> None:
    iterations = config.pgd_iterations if config.attack is AttackMethod.PGD else 1

    def attack(image_id):
        budget = AttackBudget(eps_steps=config.eps_steps, iterations=iterations, target=run.targets[image_id])
        return run_attack(run.model, run.test_set.images[image_id], budget, config.attack)

    run.attacks = parallel_map(attack, evaluated, config.workers)
    by_id = {record.image_id: record for record in manifest.images if record.combo == run.combo.label}
    for image_id, result in run.attacks.items():
        by_id[image_id].attack_success = result.success
        by_id[image_id].attack_iterations = result.iterations_used
    successes = sum(result.success for result in run.attacks.values())
    logger.info(f"{run.combo.label}: {config.attack.value} succeeded on {successes}/{len(evaluated)} images")


def _score_row(run: ComboRun, image_id: int, method: str, metric: str, value: float) -> Dict[str, Any]:
    return {
        "combo": run.combo.label,
        "dataset": run.combo.dataset,
        "architecture": run.combo.architecture,
        "seed": run.combo.seed,
        "image_id": image_id,
        "method": method,
        "metric": metric,
        "value": float(value),
    }


def _scalar_scores(config: ExperimentConfig, run: ComboRun, executor: MethodExecutor, method: str, image_id: int) -> Dict[str, Optional[float]]:
    wanted = {m for m in config.metrics if not is_curve_metric(m)}
    image = run.test_set.images[image_id].to_tensor()
    target_class = run.targets[image_id]
    attribution = run.maps[(method, image_id)]
    params = _method_kwargs(executor, config, method, run.combo.label, image_id)

    def explainer(x):
        return normalize_map(executor.execute_method(method, run.model, x, target_class, **params))

    scores: Dict[str, Optional[float]] = {}
    ad = cp = ch = None
    if wanted & {ScalarMetric.AVERAGE_DROP.value, ScalarMetric.ADCC.value}:
        ad = average_drop(run.model, image, attribution, target_class)
        scores[ScalarMetric.AVERAGE_DROP.value] = ad
    if ScalarMetric.INCREASE_IN_CONFIDENCE.value in wanted:
        scores[ScalarMetric.INCREASE_IN_CONFIDENCE.value] = float(increase_in_confidence(run.model, image, attribution, target_class))
    if wanted & {ScalarMetric.COMPLEXITY.value, ScalarMetric.ADCC.value}:
        cp = complexity(attribution)
        scores[ScalarMetric.COMPLEXITY.value] = cp
    if wanted & {ScalarMetric.COHERENCY.value, ScalarMetric.ADCC.value}:
        ch = coherency(image, attribution, explainer)
        scores[ScalarMetric.COHERENCY.value] = ch
    if ScalarMetric.ADCC.value in wanted:
        try:
            scores[ScalarMetric.ADCC.value] = adcc(ad, cp, ch)
        except UndefinedStatisticError as e:
            logger.debug(f"ADCC excluded for {method} on image {image_id}: {e}")
            scores[ScalarMetric.ADCC.value] = None
    return {metric: value for metric, value in scores.items() if metric in wanted}


def _start_state(config: ExperimentConfig, run: ComboRun, metric: str, image_id: int):
    image = run.test_set.images[image_id]
    if metric == CurveMetric.DELETION.value:
        return image
    if metric == CurveMetric.INSERTION.value:
        return np.zeros(image.shape)
    if metric == CurveMetric.INSERTION_BLUR.value:
        return gaussian_blur(image.to_tensor(), config.blur_sigma)
    attack = run.attacks.get(image_id)
    return attack.adversarial if attack is not None and attack.success else None


def _evaluate(config: ExperimentConfig, run: ComboRun, executor: MethodExecutor, evaluated: List[int], manifest: RunManifest) -> None:
    curve_metrics = [m for m in config.metrics if is_curve_metric(m)]
    height, width = run.test_set.images[0].height, run.test_set.images[0].width
    steps = min(config.steps, height * width)

    def curve(key):
        metric, method, image_id = key
        image = run.test_set.images[image_id]
        return compute_curve(metric, run.model, image, run.maps[(method, image_id)], steps, run.targets[image_id],
                             attack=run.attacks.get(image_id), blur_sigma=config.blur_sigma)

    keys = [
        (metric, method, image_id)
        for metric in curve_metrics for method in config.methods for image_id in evaluated
        if metric != CurveMetric.PERTURBATION.value or (image_id in run.attacks and run.attacks[image_id].success)
    ]
    curves = parallel_map(curve, keys, config.workers)
    run.curves = {metric: {} for metric in curve_metrics}
    for (metric, method, image_id), result in curves.items():
        run.curves[metric][(image_id, method)] = result
        run.scores.append(_score_row(run, image_id, method, metric, auc(result, metric_spec(metric).direction).auc))

    scalar_keys = [(method, image_id) for method in config.methods for image_id in evaluated]
    if any(not is_curve_metric(m) for m in config.metrics):
        scalars = parallel_map(lambda key: _scalar_scores(config, run, executor, *key), scalar_keys, config.workers)
        for (method, image_id), values in scalars.items():
            for metric, value in sorted(values.items()):
                if value is not None:
                    run.scores.append(_score_row(run, image_id, method, metric, value))

    for metric in curve_metrics:
        for image_id in evaluated:
            start = _start_state(config, run, metric, image_id)
            if start is None:
                continue
            report = distribution_shift(run.test_set.images[image_id], start)
            run.shifts.append({"combo": run.combo.label, "metric": metric, "image_id": image_id,
                               "total_variation": report.total_variation, "mean_shift": report.mean_shift})

    images_in = len(run.test_set)
    for metric in config.metrics:
        for method in config.methods:
            scored = sum(1 for row in run.scores if row["metric"] == metric and row["method"] == method)
            manifest.accounting.append(MetricAccounting(combo=run.combo.label, metric=metric, method=method, images_in=images_in,
                                                        scored=scored, excluded=images_in - scored))


def _ablate(config: ExperimentConfig, run: ComboRun, executor: MethodExecutor, evaluated: List[int]) -> None:
    explainers = [m for m in config.methods if m not in BASELINES]
    if explainers:
        sweep_method = explainers[0]
        def map_fn(image_id, image, target_class):
            params = _method_kwargs(executor, config, sweep_method, run.combo.label, image_id)
            return executor.execute_method(sweep_method, run.model, image.to_tensor(), target_class, **params)

        run.sweep = epsilon_sweep(run.model, run.test_set, map_fn, config.sweep_k, config.steps)
    if "smoothgrad" in config.methods and config.noise_levels:
        run.noise = noise_selection(run.model, run.test_set, config.noise_levels, config.smoothgrad_samples, config.eps_steps,
                                    config.steps, seed=derive_seed(run.combo.label, "noise"))
    maps = {method: {image_id: run.maps[(method, image_id)] for image_id in evaluated} for method in config.methods}
    run.comparison = attack_comparison(run.model, run.test_set, maps, config.eps_steps, config.pgd_iterations, config.steps)


def _run_combo(config: ExperimentConfig, combo: Combo, train_set: LabeledDataset, test_set: LabeledDataset,
               executor: MethodExecutor, out: Path, manifest: RunManifest) -> ComboRun:
    with _stage("train", manifest, combo):
        model = _train(config, combo, train_set, test_set, out, manifest)
    run = ComboRun(combo=combo, model=model, test_set=test_set)
    with _stage("classify", manifest, combo):
        evaluated = _record_images(config, run, manifest)
    with _stage("attribute", manifest, combo):
        _attribute(config, run, executor, evaluated)
    with _stage("attack", manifest, combo):
        _attack(config, run, evaluated, manifest)
    with _stage("evaluate", manifest, combo):
        _evaluate(config, run, executor, evaluated, manifest)
    if config.ablations:
        with _stage("ablate", manifest, combo):
            _ablate(config, run, executor, evaluated)
    return run


def analyze_scores(scores: pd.DataFrame, top_k: int = 3) -> AnalysisReport:
    """Rankings per (combo, metric), then consistency, baseline sanity and top-k per metric across combos."""
    report = AnalysisReport()
    if scores.empty:
        report.skipped.append("no scores")
        return report
    methods = sorted(scores["method"].unique())
    by_metric: Dict[str, List[RankingTable]] = {}
    for (combo, metric), group in scores.groupby(["combo", "metric"], sort=True):
        per_method = {m: g.sort_values("image_id")["value"].tolist() for m, g in group.groupby("method", sort=True)}
        if sorted(per_method) != methods:
            report.skipped.append(f"{combo}/{metric}: methods without scores {sorted(set(methods) - set(per_method))}")
            continue
        first = group.iloc[0]
        table = build_ranking(per_method, metric, metric_spec(metric).direction, label=combo, dataset=str(first["dataset"]),
                              architecture=str(first["architecture"]))
        report.rankings.append(table)
        by_metric.setdefault(metric, []).append(table)

    for metric, tables in sorted(by_metric.items()):
        if len(tables) >= 2:
            report.consistency[metric] = consistency_matrix(tables)
        if all(baseline in methods for baseline in BASELINES):
            report.sanity[metric] = baseline_sanity_check(tables, metric)
        report.top_k[metric] = {
            dataset: rows for dataset, rows in top_k_summary(tables, min(top_k, len(methods))).items()
        }
    for reason in report.skipped:
        logger.warning(f"Ranking skipped: {reason}")
    return report


def curve_quality(runs: List[ComboRun]) -> List[CurveQuality]:
    rows = []
    for run in runs:
        for metric in sorted(run.curves):
            curves = [run.curves[metric][key] for key in sorted(run.curves[metric])]
            if not curves or len(curves[0]) < 3:
                continue
            trend = metric_spec(metric).trend
            rows.append(CurveQuality(
                combo=run.combo.label,
                metric=metric,
                curves=len(curves),
                mean_monotonicity=float(np.mean([monotonicity(c, trend) for c in curves])),
                mean_smoothness=float(np.mean([smoothness(c) for c in curves])),
            ))
    return rows


def _similarity(run: ComboRun) -> Optional[SquareMatrix]:
    methods = sorted({method for method, _ in run.maps})
    image_ids = sorted({image_id for _, image_id in run.maps})
    if len(methods) < 2 or not image_ids:
        return None
    return similarity_matrix({m: [run.maps[(m, i)] for i in image_ids] for m in methods})


def _report(config: ExperimentConfig, runs: List[ComboRun], analysis: AnalysisReport, scores: pd.DataFrame, out: Path,
            manifest: RunManifest) -> None:
    written: List[Path] = []
    written.append(write_scores(out / "scores.csv", scores.to_dict("records")))
    written.append(write_score_records(out / "scores.json", scores.to_dict("records")))
    written.append(write_rankings(out / "rankings.csv", analysis.rankings))
    written.append(write_json(out / "rankings.json", analysis.rankings))
    for metric, matrix in sorted(analysis.consistency.items()):
        written.append(write_matrix(out / "consistency" / f"{metric}.csv", matrix))
    written.append(write_json(out / "consistency.json", {m: {"mean": x.mean, "std": x.std, "labels": x.labels}
                                                         for m, x in analysis.consistency.items()}))
    written.append(write_json(out / "sanity.json", analysis.sanity))
    written.append(write_json(out / "top_k.json", analysis.top_k))
    quality = curve_quality(runs)
    written.append(write_frame(out / "curve_quality.csv", pd.DataFrame([q.model_dump() for q in quality],
                                                                       columns=list(CurveQuality.model_fields))))
    shift_rows = [row for run in runs for row in run.shifts]
    written.append(write_frame(out / "shift.csv", pd.DataFrame(shift_rows, columns=["combo", "metric", "image_id", "total_variation", "mean_shift"])))
    for run in runs:
        name = safe_name(run.combo.label)
        for metric, curves in sorted(run.curves.items()):
            written.append(write_curves(out / "curves" / name / f"{metric}.csv", curves))
        similarity = _similarity(run)
        if similarity is not None:
            written.append(write_matrix(out / "similarity" / f"{name}.csv", similarity))
    if config.ablations:
        sweep_rows = [{"combo": run.combo.label, **point.model_dump()} for run in runs for point in run.sweep]
        written.append(write_frame(out / "sweep.csv", pd.DataFrame(sweep_rows, columns=["combo"] + list(SweepPoint.model_fields))))
        written.append(write_json(out / "noise_selection.json", {run.combo.label: run.noise for run in runs if run.noise is not None}))
        written.append(write_json(out / "attack_comparison.json", {run.combo.label: run.comparison for run in runs if run.comparison is not None}))
    manifest.artifacts.extend(path.relative_to(out).as_posix() for path in written)


def run_pipeline(config: ExperimentConfig, executor: Optional[MethodExecutor] = None) -> RunManifest:
    """Runs every combo the config names and writes all reports plus manifest.json under config.output_dir.

    A failing stage raises StageError; the manifest is still written, flagged partial.
    """
    out = Path(config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    executor = executor or build_default_executor()
    manifest = RunManifest(config_hash=config_hash(config))
    try:
        with _stage("load", manifest):
            datasets = load_datasets(config)
        runs: List[ComboRun] = []
        for dataset in datasets:
            train_set, test_set = split_dataset(dataset, config.train_fraction)
            if config.max_eval_images is not None:
                test_set = test_set.subset(list(range(min(config.max_eval_images, len(test_set)))))
            for architecture in config.architectures:
                for seed in config.seeds:
                    combo = Combo(dataset=dataset.name, architecture=architecture, seed=seed)
                    manifest.combos.append(combo.label)
                    runs.append(_run_combo(config, combo, train_set, test_set, executor, out, manifest))
        scores = pd.DataFrame([row for run in runs for row in run.scores], columns=["combo", "dataset", "architecture", "seed", "image_id",
                                                                                    "method", "metric", "value"])
        with _stage("analyze", manifest):
            analysis = analyze_scores(scores, config.top_k)
        with _stage("report", manifest):
            _report(config, runs, analysis, scores, out, manifest)
    finally:
        manifest.artifacts.append("manifest.json")
        write_json(out / "manifest.json", manifest)
    return manifest
