"""Phase-space simulation and verification for the quantum Fokker-Planck equation
with harmonic confinement."""
__version__ = "0.1.0"

from .errors import EXIT_CODES, QFPError
from .model import ModelParams, validate_params
from .characteristics import flow_matrix, flow_coefficients, jacobian_determinant
from .greens_kernel import covariance, kernel_f, kernel_f_hat, transition_density
from .fields import PhaseGrid, WignerField, gaussian, gaussian_mixture, signed_mixture
from .propagator import propagate, moments
from .equilibrium import steady_state, no_steady_state_certificate
from .entropy import GENERATORS, decay_rates, verify_entropy_decay
from .dispersion import rate_rn, rate_rw, lp_decay_envelope
from .fd_oracle import FdConfig, fd_solve

__all__ = [
    "EXIT_CODES", "QFPError", "ModelParams", "validate_params", "flow_matrix",
    "flow_coefficients", "jacobian_determinant", "covariance", "kernel_f", "kernel_f_hat",
    "transition_density", "PhaseGrid", "WignerField", "gaussian", "gaussian_mixture",
    "signed_mixture", "propagate", "moments", "steady_state", "no_steady_state_certificate",
    "GENERATORS", "decay_rates", "verify_entropy_decay", "rate_rn", "rate_rw",
    "lp_decay_envelope", "FdConfig", "fd_solve",
]
