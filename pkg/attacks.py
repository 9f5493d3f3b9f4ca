"""Discrete l-infinity attacks in the 8-bit image domain.

Gradient signs are taken in float space; every pixel update, projection and clip
happens on integers, so adversarial images stay valid 8-bit images.
"""
from enum import Enum
from typing import Optional

import numpy as np
from loguru import logger
from pydantic import BaseModel, ConfigDict, Field

from errors import AttackFailedError, ShapeMismatchError
from nn.model import Model, forward, loss_gradient
from nn.tensors import Image8, TargetClass


class AttackMethod(str, Enum):
    FGSM = "fgsm"
    PGD = "pgd"


class AttackBudget(BaseModel):
    eps_steps: int = Field(1, ge=1, le=255, description="k: the perturbation bound is k/255.")
    iterations: int = Field(1, ge=1, description="1 is FGSM; more is PGD with step 1/255.")
    target: TargetClass

    @property
    def epsilon(self) -> float:
        return self.eps_steps / 255.0


class AttackResult(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    adversarial: Image8
    delta_sign: np.ndarray = Field(..., description="sign(adversarial - original) per channel value, in {-1, 0, 1}.")
    success: bool
    probability_drop: float = Field(..., description="Target-class probability lost by the attack.")
    iterations_used: int = 1


def predicted_class(model: Model, image: Image8) -> int:
    return int(np.argmax(forward(model, image.to_tensor())))


def default_target(model: Model, image: Image8, label: Optional[int] = None) -> TargetClass:
    """Ground-truth class when a label exists, otherwise the model's prediction."""
    class_id = label if label is not None else predicted_class(model, image)
    return TargetClass(class_id=class_id)


def attack_success(model: Model, original: Image8, adversarial: Image8) -> bool:
    if original.shape != adversarial.shape:
        raise ShapeMismatchError(f"original {original.shape} and adversarial {adversarial.shape} differ in shape")
    return predicted_class(model, original) != predicted_class(model, adversarial)


def _gradient_sign(model: Model, pixels: np.ndarray, target: TargetClass) -> np.ndarray:
    gradient = loss_gradient(model, pixels.astype(np.float64) / 255.0, target)
    if not np.all(np.isfinite(gradient)):
        raise AttackFailedError("loss gradient is not finite")
    # sign(0) = 0 leaves the pixel untouched.
    return np.sign(gradient).astype(np.int16)


def _result(model: Model, image: Image8, adversarial_pixels: np.ndarray, target: TargetClass, iterations: int) -> AttackResult:
    adversarial = Image8(pixels=adversarial_pixels.astype(np.uint8))
    clean = forward(model, image.to_tensor())[target.class_id]
    perturbed = forward(model, adversarial.to_tensor())[target.class_id]
    return AttackResult(
        adversarial=adversarial,
        delta_sign=np.sign(adversarial_pixels - image.as_int()).astype(np.int8),
        success=attack_success(model, image, adversarial),
        probability_drop=float(clean - perturbed),
        iterations_used=iterations,
    )


def fgsm(model: Model, image: Image8, budget: AttackBudget) -> AttackResult:
    """X* = clip(X + k * sign(dL/dX), 0, 255) on 8-bit values."""
    if budget.iterations != 1:
        raise ValueError(f"fgsm is single-step, got iterations={budget.iterations}; use pgd")
    model.check_class(budget.target)
    original = image.as_int()
    step = budget.eps_steps * _gradient_sign(model, original, budget.target)
    adversarial = np.clip(original + step, 0, 255)
    result = _result(model, image, adversarial, budget.target, 1)
    logger.debug(f"FGSM k={budget.eps_steps}: success={result.success}, drop={result.probability_drop:.4f}")
    return result


def pgd(model: Model, image: Image8, budget: AttackBudget) -> AttackResult:
    """Iterated +-1 sign steps, projected onto the k-ball around X and [0, 255]; stops on success."""
    if budget.iterations == 1:
        return fgsm(model, image, budget)
    model.check_class(budget.target)
    original = image.as_int()
    clean_class = predicted_class(model, image)
    current = original.copy()
    used = 0
    for used in range(1, budget.iterations + 1):
        current = current + _gradient_sign(model, current, budget.target)
        current = np.clip(current, original - budget.eps_steps, original + budget.eps_steps)
        current = np.clip(current, 0, 255)
        if int(np.argmax(forward(model, current / 255.0))) != clean_class:
            break
    result = _result(model, image, current, budget.target, used)
    logger.debug(f"PGD k={budget.eps_steps}: success={result.success} after {used} iterations")
    return result


def run_attack(model: Model, image: Image8, budget: AttackBudget, method: AttackMethod = AttackMethod.FGSM) -> AttackResult:
    if AttackMethod(method) is AttackMethod.FGSM:
        return fgsm(model, image, budget.model_copy(update={"iterations": 1}))
    return pgd(model, image, budget)
