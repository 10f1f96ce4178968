"""Human-in-the-loop segmentation transfer at desk scale: synthetic CT-like
volumes, a per-voxel softmax segmenter, a simulated expert with a calibrated
time-cost model, and the annotate/retrain loop tying them together."""

__version__ = "0.1.0"

from .core import (
    DiceScore,
    Dataset,
    LabelMap,
    Sample,
    Volume,
    dice,
    preprocess,
    rle_decode,
    rle_encode,
)

__all__ = [
    "DiceScore",
    "Dataset",
    "LabelMap",
    "Sample",
    "Volume",
    "dice",
    "preprocess",
    "rle_decode",
    "rle_encode",
]
