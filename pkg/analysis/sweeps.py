"""Ablations over the perturbation score: attack budget, SmoothGrad noise level, FGSM vs PGD."""
from typing import Callable, Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

import numpy as np
from loguru import logger
from pydantic import BaseModel, Field

from analysis.rankings import RankingTable, build_ranking
from analysis.statistics import monotonicity, smoothness
from attacks import AttackBudget, AttackMethod, fgsm, predicted_class, run_attack
from methods.maps import AttributionMap
from methods.method_base import derive_seed
from methods.smoothgrad_method import SmoothGradParams, smoothgrad
from metrics.curves import DEFAULT_STEPS, Direction, auc, perturbation_curve
from nn.model import Model
from nn.tensors import Image8, LabeledDataset, TargetClass

# (dataset index, image, target class) -> map
MapFn = Callable[[int, Image8, TargetClass], AttributionMap]
DEFAULT_K_VALUES = (1, 2, 4, 8)
DEFAULT_NOISE_LEVELS = (0.01, 0.1, 0.25, 0.5)


class SweepPoint(BaseModel):
    eps_steps: int
    images: int = Field(..., description="Images offered to this budget.")
    scored: int
    excluded: int
    mean_monotonicity: Optional[float] = None
    mean_smoothness: Optional[float] = None


class NoiseScore(BaseModel):
    sigma: float
    mean_auc: Optional[float] = None
    scored: int


class NoiseSelection(BaseModel):
    scores: List[NoiseScore]
    best_sigma: Optional[float] = None
    excluded: int


class AttackComparison(BaseModel):
    eps_steps: int
    iterations: int
    images: int
    fgsm_success_rate: float
    pgd_success_rate: float
    fgsm_ranking: Optional[RankingTable] = None
    pgd_ranking: Optional[RankingTable] = None
    identical: bool


def correctly_classified(model: Model, dataset: LabeledDataset) -> List[Tuple[int, Image8, TargetClass]]:
    """(index, image, ground-truth target class) for every image the model gets right."""
    kept = []
    for index, (image, label) in enumerate(zip(dataset.images, dataset.labels)):
        if predicted_class(model, image) == label:
            kept.append((index, image, TargetClass(class_id=label)))
    return kept


def _curve_steps(image: Image8, steps: int) -> int:
    return min(steps, image.height * image.width)


def _check_budgets(k_values: Iterable[int]) -> List[int]:
    k_values = sorted(set(int(k) for k in k_values))
    if not k_values or k_values[0] < 1 or k_values[-1] > 255:
        raise ValueError(f"eps steps must lie in [1, 255], got {k_values}")
    return k_values


def epsilon_sweep(model: Model, dataset: LabeledDataset, map_fn: MapFn, k_values: Sequence[int] = DEFAULT_K_VALUES,
                  steps: int = DEFAULT_STEPS) -> List[SweepPoint]:
    """Mean monotonicity and smoothness of perturbation curves for each FGSM budget k.

    The map of each image is computed once, from its dataset index, image and target,
    and reused for every k. Misclassified
    images and failed attacks count as exclusions.
    """
    k_values = _check_budgets(k_values)
    evaluable = correctly_classified(model, dataset)
    maps = {index: map_fn(index, image, target_class) for index, image, target_class in evaluable}
    points = []
    for k in k_values:
        monotone, smooth = [], []
        for index, image, target_class in evaluable:
            attack = fgsm(model, image, AttackBudget(eps_steps=k, iterations=1, target=target_class))
            if not attack.success:
                continue
            curve = perturbation_curve(model, image, attack, maps[index], _curve_steps(image, steps), target_class)
            monotone.append(monotonicity(curve, "increase"))
            smooth.append(smoothness(curve))
        point = SweepPoint(
            eps_steps=k,
            images=len(dataset),
            scored=len(monotone),
            excluded=len(dataset) - len(monotone),
            mean_monotonicity=float(np.mean(monotone)) if monotone else None,
            mean_smoothness=float(np.mean(smooth)) if smooth else None,
        )
        if not monotone:
            logger.warning(f"Epsilon sweep: every attack failed at k={k}")
        points.append(point)
    return points


def noise_selection(model: Model, dataset: LabeledDataset, sigmas: Sequence[float] = DEFAULT_NOISE_LEVELS, samples: int = 25,
                    eps_steps: int = 1, steps: int = DEFAULT_STEPS, seed: int = 0) -> NoiseSelection:
    """Mean perturbation AUC of SmoothGrad at each noise level; the best level has the highest mean (smallest sigma on ties)."""
    attacked = []
    for index, image, target_class in correctly_classified(model, dataset):
        attack = fgsm(model, image, AttackBudget(eps_steps=eps_steps, iterations=1, target=target_class))
        if attack.success:
            attacked.append((index, image, target_class, attack))
    scores = []
    for sigma in sorted(sigmas):
        areas = []
        for index, image, target_class, attack in attacked:
            params = SmoothGradParams(samples=samples, sigma=sigma, seed=derive_seed(index, "smoothgrad", seed))
            attribution = smoothgrad(model, image.to_tensor(), target_class, params)
            curve = perturbation_curve(model, image, attack, attribution, _curve_steps(image, steps), target_class)
            areas.append(auc(curve, Direction.HIGHER_BETTER).auc)
        scores.append(NoiseScore(sigma=sigma, mean_auc=float(np.mean(areas)) if areas else None, scored=len(areas)))
    rated = [s for s in scores if s.mean_auc is not None]
    best = min(rated, key=lambda s: (-s.mean_auc, s.sigma)).sigma if rated else None
    logger.info(f"SmoothGrad noise selection over {len(attacked)} images: best sigma {best}")
    return NoiseSelection(scores=scores, best_sigma=best, excluded=len(dataset) - len(attacked))


def _perturb_ranking(model: Model, records, maps: Mapping[str, Mapping[int, AttributionMap]], steps: int, label: str) -> Optional[RankingTable]:
    if not records:
        return None
    scores: Dict[str, List[float]] = {}
    for method in sorted(maps):
        scores[method] = [
            auc(perturbation_curve(model, image, attack, maps[method][index], _curve_steps(image, steps), target_class)).auc
            for index, image, target_class, attack in records
        ]
    return build_ranking(scores, "perturbation", Direction.HIGHER_BETTER, label=label)


def attack_comparison(model: Model, dataset: LabeledDataset, maps: Mapping[str, Mapping[int, AttributionMap]], eps_steps: int = 1,
                      iterations: int = 10, steps: int = DEFAULT_STEPS) -> AttackComparison:
    """Success rates of FGSM and PGD on the same images and the perturbation ranking each attack induces.

    `maps[method][image index]` holds precomputed attribution maps.
    """
    evaluable = [
        (index, image, target_class) for index, image, target_class in correctly_classified(model, dataset)
        if all(index in per_image for per_image in maps.values())
    ]
    outcomes = {}
    for method, count in ((AttackMethod.FGSM, 1), (AttackMethod.PGD, iterations)):
        records = []
        for index, image, target_class in evaluable:
            attack = run_attack(model, image, AttackBudget(eps_steps=eps_steps, iterations=count, target=target_class), method)
            if attack.success:
                records.append((index, image, target_class, attack))
        outcomes[method] = records
    total = max(len(evaluable), 1)
    fgsm_ranking = _perturb_ranking(model, outcomes[AttackMethod.FGSM], maps, steps, "fgsm")
    pgd_ranking = _perturb_ranking(model, outcomes[AttackMethod.PGD], maps, steps, "pgd")
    identical = fgsm_ranking is not None and pgd_ranking is not None and fgsm_ranking.order == pgd_ranking.order
    return AttackComparison(
        eps_steps=eps_steps,
        iterations=iterations,
        images=len(evaluable),
        fgsm_success_rate=len(outcomes[AttackMethod.FGSM]) / total,
        pgd_success_rate=len(outcomes[AttackMethod.PGD]) / total,
        fgsm_ranking=fgsm_ranking,
        pgd_ranking=pgd_ranking,
        identical=identical,
    )
