"""Offline CNN feature extraction into the v2c feature-file format."""

__version__ = "0.1.0"

from .backbones import BACKBONES, BackboneSpec, FeatureBackbone
from .cli import extract, main
from .errors import DataError, ExtractorError, UsageError
from .feature_io import write_feature_file
from .media import load_frames, sample_indices
