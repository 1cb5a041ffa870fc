from src.nn.mlp import Mlp, MlpCache, MlpGradients, mse_loss
from src.nn.optimizer import AdamState, adam_step
from src.nn.gradcheck import finite_difference_check, numeric_gradient, relative_error

__all__ = [
    "Mlp", "MlpCache", "MlpGradients", "mse_loss",
    "AdamState", "adam_step",
    "finite_difference_check", "numeric_gradient", "relative_error",
]
