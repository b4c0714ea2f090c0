"""blurlab: egomotion blur synthesis, dataset blurring, label expansion, evaluation."""

__version__ = "0.1.0"

from .adapt import ChannelStats, merge_batch_stats
from .blurspace import ALL_PAIRS, ANXIETY_VALUES, EXPOSURE_VALUES, BlurClass, EClass, PClass
from .convolve import SparseKernel, convolve_dense_oracle, convolve_reflect, sparsify_kernel
from .corpus import generate_corpus, kernel_from_bytes, kernel_to_bytes, read_kernel, write_kernel
from .evalmap import EvalConfig, EvalReport, Regime, evaluate_class_ap, evaluate_map, iou, sweep_grid
from .imageio import load_image, save_image
from .kernels import (
    BlurKernel,
    CenteringError,
    Extents,
    KernelMeta,
    barycenter,
    center_kernel,
    defocus_kernel,
    generate_kernel,
    kernel_extents,
    quantize_kernel,
    rasterize_kernel,
    support_bbox,
)
from .labels import (
    Annotation,
    BoundingBox,
    Category,
    Dataset,
    DatasetError,
    ImageInfo,
    expand_box,
    load_annotations,
    load_predictions,
    save_annotations,
    save_predictions,
    transform_annotations,
)
from .pipeline import (
    BlurPlan,
    EstimatorScheme,
    MixPolicy,
    PlanEntry,
    build_plan,
    estimator_class_of,
    execute_plan,
    manifest_extents,
    route_specialist,
)
from .seeding import derive_seed, make_rng
from .squint import AxisSpreads, kernel_spreads, resample_grid, squint_factors, unsquint_grid
from .trajectory import Trajectory, TrajectoryParams, sample_trajectory, stationary_trajectory
