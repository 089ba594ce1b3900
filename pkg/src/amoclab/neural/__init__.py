"""Small numpy regressors: MLP, Deep Ensemble, mean-field BNN and Elman RNN."""
from .bnn import (BnnParams, RHO_ZERO_VARIANCE, bnn_elbo, kl_divergence, predict_bnn,
                  softplus, train_bnn)
from .checkpoint import load_checkpoint, save_checkpoint
from .mlp import (Activation, MlpParams, NetSpec, backprop, backward, forward, init_mlp,
                  predict)
from .optim import AdamConfig, AdamState, adam_step
from .rnn import RnnParams, init_rnn, predict_rnn, rnn_backward, rnn_forward, train_rnn
from .training import (Ensemble, LossCurve, TrainConfig, predict_ensemble, train_ensemble,
                       train_mlp)

__all__ = [
    "BnnParams",
    "RHO_ZERO_VARIANCE",
    "bnn_elbo",
    "kl_divergence",
    "predict_bnn",
    "softplus",
    "train_bnn",
    "load_checkpoint",
    "save_checkpoint",
    "Activation",
    "MlpParams",
    "NetSpec",
    "backprop",
    "backward",
    "forward",
    "init_mlp",
    "predict",
    "AdamConfig",
    "AdamState",
    "adam_step",
    "RnnParams",
    "init_rnn",
    "predict_rnn",
    "rnn_backward",
    "rnn_forward",
    "train_rnn",
    "Ensemble",
    "LossCurve",
    "TrainConfig",
    "predict_ensemble",
    "train_ensemble",
    "train_mlp",
]
