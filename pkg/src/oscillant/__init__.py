"""Stability analysis and direct simulation of semilinear hyperbolic systems
with large high-frequency source terms."""

from .numeric import DEFAULT_POLICY, InputError, MultiplicityError, NumericalError, NumericPolicy
from .system import BilinearMap, SystemSpec, load_spec, save_spec
from .spectral import (AsymptoticSlopes, SpectralField, assemble_symbol,
                       asymptotic_slopes, eigendecompose_field, uniform_grid)
from .resonance import (Phase, ResonanceReport, characteristic_harmonics, find_resonances,
                        match_phases_on_dispersion, resonance_phase)
from .interaction import (InteractionCoefficients, PolarizationVectors, ReportInputs,
                          StabilityReport, interaction_coefficients,
                          partial_transparency_conditions, polarization_vectors,
                          solve_homological, stability_report, symmetrizer_basis,
                          transparency_check)
from .flow import (FlowTrajectory, InteractionMatrix, flow_spectrum, integrate_flow,
                   unstable_datum_direction, verify_growth_bound)
from .wkb import (WKBSolution, consistency_residual, pde_residual, solve_transport,
                  weak_transparency_check)
from .simulate import (AmplitudeProfile, SimConfig, SimulationRun, amplitude_norms,
                       epsilon_sweep, run_instability_experiment)
from .experiments import analyze, flow_bound_experiment, run_simulation, run_sweep

__version__ = "0.1.0"
