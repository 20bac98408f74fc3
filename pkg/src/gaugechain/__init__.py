"""Finite-volume thermodynamics of gauge-invariant quantum spin chains."""

__version__ = "0.1.0"

from .errors import *  # noqa: F401,F403
from .operators import embed, expm, logm, partial_trace, tensor
from .symmetry import BlockDecomposition, SymmetrySpec, decompose, gauge_average, nu_density, restrict_density
from .densities import FixedAlgebraTrace, FullTrace, StateTrace, TracedDensity
from .interaction import GeneratorH, Interaction, local_hamiltonian, norms, perturb, surface_energy
from .states import entropy, gibbs_state, product_phi_hat, relative_entropy, weak_gibbs_residual
from .series import ThermoSeries
from .thermo import entropy_density_chain, pressure_derivative, pressure_series, variational_defect
from .testing import (TestInstance, aep_projection, beta_epsilon_commuting, beta_epsilon_search, exponent_series,
                      gibbs_log_ratio_bound)
from .config import ExperimentConfig, load as load_config
from .runner import run, validate
