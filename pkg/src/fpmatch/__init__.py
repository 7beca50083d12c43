"""Partial-fingerprint matching by exact minutia-tuple correspondence.

The pipeline runs image -> skeleton -> minutiae -> 12-integer tuples ->
template, scores templates by counting identical tuples, and audits a
gallery for MasterPrints (partials that match many other subjects).
"""

from .config import Config, load_config
from .errors import FpError
from .evaluation import Evaluation, eer_compute, identify
from .features import Template, build_template, load_template, save_template
from .gallery import CropSpec, GalleryIndex, crop_grid, load_gallery, save_gallery
from .matcher import count_correspondence, similarity
from .minutiae import Minutia, extract_minutiae
from .pipeline import extract_template
from .preprocess import skeletonize

__version__ = "0.1.0"

__all__ = [
    "Config", "CropSpec", "Evaluation", "FpError", "GalleryIndex", "Minutia", "Template",
    "build_template", "count_correspondence", "crop_grid", "eer_compute", "extract_minutiae",
    "extract_template", "identify", "load_config", "load_gallery", "load_template",
    "save_gallery", "save_template", "similarity", "skeletonize",
]
