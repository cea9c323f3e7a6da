"""Test-time inference scaffolding for referring video object segmentation.

Clip sampling strategies, key frame compression, a pluggable segmenter boundary,
selective-averaging mask ensembles and J/F evaluation.
"""
from .core import (ClipSpec, Expression, Frame, PredictionSource, SamplingPlan, Strategy,
                   VideoMeta, WeightConfig, validate_plan)
from .ensemble import ensemble_run, selective_average
from .kfc import CompressedClip, compress_clip, resize_to, tile_grid
from .metrics import EvalResult, boundary_f, evaluate, jaccard
from .sampling import (make_plan, plan_qframe, plan_uniform, plan_uniform_plus,
                       plan_wrap_around, plan_wrap_around_plus)

__version__ = "0.1.0"
