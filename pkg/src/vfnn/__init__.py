"""Vector-field neural networks.

Points are carried along the streamlines of a learned Gaussian-kernel vector
field (fixed-step Euler) and then classified by a logistic head.
"""
from ._backend import BACKEND
from .core import Dataset, DatasetError, FieldParams, FlowConfig, LinearHead, TrainConfig, init_params, validate
from .data import GenSpec, generate, read_csv, write_csv
from .field import eval_field, gaussian
from .flow import euler_step, streamline, transport, transport_batch
from .model import Gradients, ModelState, cost, grad_analytic_n1, grad_backprop, grad_numeric, predict
from .train import RunResult, run_repeated, sweep, train

__version__ = "0.1.0"
