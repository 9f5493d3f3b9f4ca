from .maps import AttributionMap, ChannelReduction, normalize_map, reduce_channels, upsample_bilinear
from .method_base import MethodBase, derive_seed
from .gradients_method import GradientsMethod, GradientsParams, gradients_map
from .smoothgrad_method import SmoothGradMethod, SmoothGradParams, smoothgrad
from .integrated_gradients_method import BaselineKind, IGParams, IntegratedGradientsMethod, integrated_gradients
from .blur_integrated_gradients_method import BlurIntegratedGradientsMethod, blur_integrated_gradients, blur_schedule
from .gradcam_method import GradCAMMethod, GradCAMParams, cam_from_capture, gradcam
from .uniform_method import UniformMethod, uniform_baseline
from .canny_method import CannyMethod, canny_baseline

__all__ = [
    "AttributionMap",
    "ChannelReduction",
    "normalize_map",
    "reduce_channels",
    "upsample_bilinear",
    "MethodBase",
    "derive_seed",
    "GradientsMethod",
    "GradientsParams",
    "gradients_map",
    "SmoothGradMethod",
    "SmoothGradParams",
    "smoothgrad",
    "BaselineKind",
    "IGParams",
    "IntegratedGradientsMethod",
    "integrated_gradients",
    "BlurIntegratedGradientsMethod",
    "blur_integrated_gradients",
    "blur_schedule",
    "GradCAMMethod",
    "GradCAMParams",
    "cam_from_capture",
    "gradcam",
    "UniformMethod",
    "uniform_baseline",
    "CannyMethod",
    "canny_baseline",
]
