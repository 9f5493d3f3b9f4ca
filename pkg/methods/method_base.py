import hashlib
from abc import ABC, abstractmethod
from typing import Any, Dict, Type

from pydantic import BaseModel

from methods.maps import AttributionMap
from nn.model import Model
from nn.tensors import TargetClass, Tensor


class NoParams(BaseModel):
    pass


class MethodBase(ABC):
    name: str
    description: str
    params_schema: Type[BaseModel] = NoParams
    # Baselines ignore the model and the class.
    model_free: bool = False

    @abstractmethod
    def compute(self, model: Model, image: Tensor, target_class: TargetClass, **params: Any) -> AttributionMap:
        pass

    def get_schema(self) -> Dict[str, Any]:
        return {
            "name": self.name,
            "description": self.description,
            "params_schema": self.params_schema.model_json_schema(),
        }


def derive_seed(*keys: Any) -> int:
    """Stable 63-bit seed from arbitrary keys, e.g. (image id, method, base seed)."""
    digest = hashlib.sha256("|".join(str(k) for k in keys).encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "little") >> 1
