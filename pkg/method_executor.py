from typing import Any, Dict, List

from loguru import logger
from pydantic import ValidationError

from methods import (
    BlurIntegratedGradientsMethod,
    CannyMethod,
    GradCAMMethod,
    GradientsMethod,
    IntegratedGradientsMethod,
    SmoothGradMethod,
    UniformMethod,
)
from methods.maps import AttributionMap
from methods.method_base import MethodBase
from nn.model import Model
from nn.tensors import TargetClass, Tensor


class MethodExecutor:
    def __init__(self):
        self.methods: Dict[str, MethodBase] = {}

    def register_method(self, method_instance: MethodBase):
        if not isinstance(method_instance, MethodBase):
            logger.error(f"Attempted to register invalid method type: {type(method_instance)}")
            raise ValueError("Provided method must be an instance of a class derived from MethodBase")
        self.methods[method_instance.name] = method_instance
        logger.info(f"Registered attribution method: {method_instance.name}")

    def get(self, name: str) -> MethodBase:
        if name not in self.methods:
            logger.error(f"Method '{name}' not found during execution attempt.")
            raise KeyError(f"unknown attribution method '{name}', registered: {sorted(self.methods)}")
        return self.methods[name]

    def validate_params(self, name: str, **kwargs: Any) -> Dict[str, Any]:
        method = self.get(name)
        try:
            return method.params_schema.model_validate(kwargs).model_dump()
        except ValidationError as e:
            logger.error(f"Invalid parameters for method '{name}'. Details: {e}. Input: {kwargs}")
            raise

    def execute_method(self, name: str, model: Model, image: Tensor, target_class: TargetClass, **kwargs: Any) -> AttributionMap:
        params = self.validate_params(name, **kwargs)
        logger.debug(f"Computing '{name}' for class {target_class.class_id} with params {params}")
        try:
            return self.methods[name].compute(model, image, target_class, **params)
        except Exception as e:
            logger.error(f"Error executing method '{name}': {e}")
            raise

    @property
    def names(self) -> List[str]:
        return sorted(self.methods)

    def get_all_method_schemas(self) -> List[Dict[str, Any]]:
        return [self.methods[name].get_schema() for name in self.names]


def build_default_executor() -> MethodExecutor:
    executor = MethodExecutor()
    executor.register_method(GradientsMethod())
    executor.register_method(SmoothGradMethod())
    executor.register_method(IntegratedGradientsMethod())
    executor.register_method(BlurIntegratedGradientsMethod())
    executor.register_method(GradCAMMethod())
    executor.register_method(UniformMethod())
    executor.register_method(CannyMethod())
    return executor
