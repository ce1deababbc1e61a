"""Multiresonator quantum memory with atomic ensembles.

Simulation and design-optimization toolkit: closed-form transfer
functions and matching conditions for a comb of atom-loaded
mini-resonators behind a common bus resonator, cross-validated against
brute-force time-domain integration of the coupled amplitude equations,
plus parameter sweeps maximizing flat storage bandwidth.
"""

__version__ = "0.1.0"

from .backend import BACKEND
from .errors import (ConfigError, IntegrationError, MrqmError,
                     PreconditionError, SingularResponseError)
from .model import (AtomSampling, DerivedParams, Pulse, SystemParams,
                    derive_params, effective_absorption_rate, evaluate_pulse,
                    make_pulse, params_for_gamma_sigma, pulse_spectrum,
                    sample_atoms)
from .spectral import (CombVariant, SpectralResponse, atomic_susceptibility,
                       cavity_transfer, form_factor, frequency_grid,
                       mini_mode_spectrum, mode_response, reflection,
                       response_table)
from .matching import (BandwidthReport, MatchSolution, bandwidth,
                       impedance_kappa, matched_kappa_combined,
                       matched_params, solve_matching, spectral_match_g)
from .dynamics import (AtomRequirement, EchoReport, EfficiencyBudget,
                       LinearSystem, Trajectory, analytic_b_m,
                       atom_requirement, atomic_excitation,
                       atomic_population, atomic_population_plateau,
                       build_system, ideal_rephase, integrate, mini_energy,
                       output_spectrum_ratio, run_echo, storage_efficiency,
                       total_efficiency)

__all__ = [name for name in dir() if not name.startswith("_")]
