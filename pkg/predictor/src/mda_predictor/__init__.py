"""Bilateral mode-domain predictor trained on exported decomposition windows."""
from .config import PredictorConfig, read_run_config
from .data import ModeFile, WindowItem, build_windows, read_manifest, \
    read_mode_file, split_items
from .errors import (DataError, InvalidInputError, PredictorError, ShapeError,
                     UsageError)
from .loss import LossComponents, predicted_gram, total_loss
from .model import (CrossModeSelfAttention, CrossSideFusion, MdaPredictor,
                    RestoredTrajectory, TcnDecoder, TcnEncoder,
                    autoregressive_restore)
from .train import (TrainResult, evaluate, load_checkpoint, save_checkpoint,
                    teacher_forcing_ratio, train)

__version__ = "0.1.0"

__all__ = [
    "CrossModeSelfAttention",
    "CrossSideFusion",
    "DataError",
    "InvalidInputError",
    "LossComponents",
    "MdaPredictor",
    "ModeFile",
    "PredictorConfig",
    "PredictorError",
    "RestoredTrajectory",
    "ShapeError",
    "TcnDecoder",
    "TcnEncoder",
    "TrainResult",
    "UsageError",
    "WindowItem",
    "autoregressive_restore",
    "build_windows",
    "evaluate",
    "load_checkpoint",
    "predicted_gram",
    "read_manifest",
    "read_mode_file",
    "read_run_config",
    "save_checkpoint",
    "split_items",
    "teacher_forcing_ratio",
    "total_loss",
    "train",
]
