"""Two-grid methods with learned restriction, prolongation and Jacobi damping."""
from .errors import (
    CoarseSingularityError,
    ConfigurationError,
    DeepMGError,
    EigenvalueConvergenceError,
    NonFiniteGradientError,
    NumericalError,
    PreconditionError,
    SingularSmootherError,
)
from .grad import ParamGradient, backward, forward_with_tape, grad_loss
from .loss import LossConfig, RademacherSampler, estimate_loss, exact_frobenius_power, surrogate_radius
from .problems import (
    Grid1D,
    ProblemSpec,
    TridiagonalMatrix,
    assemble_convection_diffusion,
    assemble_helmholtz,
    assemble_poisson,
)
from .spectral import eigenvalues, materialize_iteration_matrix, spectral_radius
from .train import AdamConfig, HomotopyConfig, TrainReport, homotopy_train, train
from .transfer import TransferPair, galerkin_project, linear_baseline, prolong, restrict
from .twogrid import TwoGridConfig, TwoGridContext, apply_iteration_matrix, solve, two_grid_step

__version__ = "0.1.0"
