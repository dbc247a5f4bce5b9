"""Boolean-map visual tracker and OTB-style evaluation harness."""

__version__ = "0.1.0"

from .bmr import BmrVector, encode, intersection_kernel, normalize, reconstruct
from .config import RunConfig
from .imgproc import TargetState
from .tracker import BmrTracker, track_sequence

__all__ = [
    "BmrTracker",
    "BmrVector",
    "RunConfig",
    "TargetState",
    "encode",
    "intersection_kernel",
    "normalize",
    "reconstruct",
    "track_sequence",
    "__version__",
]
