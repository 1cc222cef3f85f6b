"""Matched-asymptotic neural solvers for singularly perturbed two-point problems."""

from .autodiff import Jet2, NonFiniteError, Tensor, jet_lift, param_gradient, value_and_grad
from .config import ExperimentConfig, load_config
from .evaluation import build_eval_grid, evaluate, evaluate_operator, l_inf, relative_l2
from .nets import DeepOnet, Mlp, deeponet_forward, mlp_forward, mlp_init
from .problems import BoundaryLayerProblem, ConstantCaseOracle, make_problem
from .pvd_net import TrainedModel, bl_pinns_eval, composite_high, composite_leading, train
from .pvd_onet import BcFamily, TrainedOperator, composite_onet, sample_bc_family, train_operator
from .reference import fdm_solve, truth_function
from .training import TrainConfig

__version__ = "0.1.0"

__all__ = [
    "BcFamily",
    "BoundaryLayerProblem",
    "ConstantCaseOracle",
    "DeepOnet",
    "ExperimentConfig",
    "Jet2",
    "Mlp",
    "NonFiniteError",
    "Tensor",
    "TrainConfig",
    "TrainedModel",
    "TrainedOperator",
    "bl_pinns_eval",
    "build_eval_grid",
    "composite_high",
    "composite_leading",
    "composite_onet",
    "deeponet_forward",
    "evaluate",
    "evaluate_operator",
    "fdm_solve",
    "jet_lift",
    "l_inf",
    "load_config",
    "make_problem",
    "mlp_forward",
    "mlp_init",
    "param_gradient",
    "relative_l2",
    "sample_bc_family",
    "train",
    "train_operator",
    "truth_function",
    "value_and_grad",
]
