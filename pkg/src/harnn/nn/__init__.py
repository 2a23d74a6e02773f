"""Hand-written layer kernels: forward passes, exact backward passes, loss,
parameter initialization, Adam, and finite-difference gradient verification."""

from .layers import (
    Conv1dLayer,
    DenseLayer,
    DropoutLayer,
    LstmLayer,
    conv1d_backward,
    conv1d_forward,
    dense_backward,
    dense_forward,
    dropout_apply,
    dropout_backward,
    lstm_backward,
    lstm_forward,
    maxpool_backward,
    maxpool_forward,
)
from .loss import softmax, softmax_cross_entropy
from .optim import AdamState, adam_step, init_adam
from .init import glorot_uniform, init_conv, init_dense, init_lstm

__all__ = [
    "Conv1dLayer",
    "DenseLayer",
    "DropoutLayer",
    "LstmLayer",
    "AdamState",
    "adam_step",
    "init_adam",
    "conv1d_forward",
    "conv1d_backward",
    "maxpool_forward",
    "maxpool_backward",
    "lstm_forward",
    "lstm_backward",
    "dense_forward",
    "dense_backward",
    "dropout_apply",
    "dropout_backward",
    "softmax",
    "softmax_cross_entropy",
    "glorot_uniform",
    "init_conv",
    "init_dense",
    "init_lstm",
]
