from src.odf.partition import PartitionScheme, build_scheme, partition_of, PARTITION_KINDS
from src.odf.model import (
    OdfPartitionModel, OdfAtlas, query_distance, predict_visibility, predict_visibility_batch,
    atlas_to_model_file, model_file_to_atlas, save_atlas, load_atlas,
)
from src.odf.trainer import TrainingConfig, TrainingReport, train_partition, train_atlas, ray_mse

__all__ = [
    "PartitionScheme", "build_scheme", "partition_of", "PARTITION_KINDS",
    "OdfPartitionModel", "OdfAtlas", "query_distance", "predict_visibility", "predict_visibility_batch",
    "atlas_to_model_file", "model_file_to_atlas", "save_atlas", "load_atlas",
    "TrainingConfig", "TrainingReport", "train_partition", "train_atlas", "ray_mse",
]
