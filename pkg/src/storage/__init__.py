from .database import Database, init_db
from .models import Base, PipelineRun, PartitionTrainingLog, EvaluationRecord
from .formats import (
    RayDataset, VisibilityTestSet, ModelFile,
    read_ray_dataset, write_ray_dataset, read_test_set, write_test_set,
    read_model_file, write_model_file, inspect_file,
)
