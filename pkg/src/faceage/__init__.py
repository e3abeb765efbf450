"""Facial age estimation: eye-aligned face crops, LBP and binarized-filter
block histograms, kernel regression, MAE / cumulative-score evaluation."""

from .config import RunConfig, load_config
from .descriptors import CodeImage, FilterBank, bsif_code_image, lbp_code_image
from .errors import DataError, FaceAgeError, NumericalError, UsageError
from .evaluation import (
    CsCurve,
    LabeledPrediction,
    cs_curve,
    cumulative_score,
    lopo_splits,
    mae,
    random_split,
)
from .features import FeatureLayout, block_partition, extract_features, region_histogram
from .filter_learning import PatchSet, learn_filterbank, sample_patches
from .geometry import (
    AlignedFace,
    LandmarkScheme,
    LandmarkSet,
    Point2,
    RoiRatios,
    align_face,
    crop_roi_bbox,
    crop_roi_ratios,
    eye_centers,
    inter_eye_distance,
    parse_landmark_file,
    rotate_point,
    rotation_angle,
)
from .kernels import KernelSpec, rbf_kernel
from .krr import KrrModel, krr_fit, krr_predict
from .model_select import HyperGrid, cross_validate
from .pipeline import extract_from_files, layout_for, prepare_face
from .svr import SvrModel, svr_fit, svr_predict

__version__ = "0.1.0"
