"""Small reverse-mode toolkit used by both policies."""
from . import ops
from .checkpoint import load, load_into, save
from .gradcheck import check_gradients, check_input_gradient
from .heads import categorical_head, softmax
from .layers import DenseLayer, DenseStack, LSTMCell, Module, parameter_audit
from .losses import a2c_losses, discounted_returns
from .optim import SGD, Adam, apply_update, make_optimizer
from .random import RandomStream
from .tape import DimensionError, DomainError, Parameter, Tape, TrainingFault, Var

__all__ = [
    "ops", "load", "load_into", "save", "check_gradients", "check_input_gradient",
    "categorical_head", "softmax", "DenseLayer", "DenseStack", "LSTMCell", "Module",
    "parameter_audit", "a2c_losses", "discounted_returns", "SGD", "Adam", "apply_update",
    "make_optimizer", "RandomStream", "DimensionError", "DomainError", "Parameter", "Tape",
    "TrainingFault", "Var",
]
