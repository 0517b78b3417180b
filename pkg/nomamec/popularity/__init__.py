from .lstm import LstmParams, LstmState, bptt_gradients, forward_step, loss, predict
from .rtrl import CandidateSensitivity, rtrl_gradient_candidate, rtrl_update_candidate, rtrl_update_output
from .series import SeriesDataset, per_user_series, project_simplex, random_walk_series
from .trainer import LossCurve, predict_horizon, rolling_forecast, train

__all__ = [
    "LstmParams", "LstmState", "bptt_gradients", "forward_step", "loss", "predict",
    "CandidateSensitivity", "rtrl_gradient_candidate", "rtrl_update_candidate", "rtrl_update_output",
    "SeriesDataset", "per_user_series", "project_simplex", "random_walk_series",
    "LossCurve", "predict_horizon", "rolling_forecast", "train",
]
