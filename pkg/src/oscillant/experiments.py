"""End-to-end pipelines: analyze a system, run flow-bound and simulation
experiments with the catalog's reference data.

These are the entry points the command line and the experiment scripts call;
they wire the spectral field, resonance report, stability report, symbolic
flow, and simulator together with consistent defaults.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import catalog
from .flow import (FlowTrajectory, GrowthBoundReport, InteractionMatrix, bump_weight,
                   integrate_flow, verify_growth_bound)
from .interaction import (PolarizationVectors, ReportInputs, StabilityReport,
                          pair_coefficients_at, polarization_vectors, stability_report)
from .numeric import InputError
from .resonance import Phase, ResonanceReport, find_resonances, default_window
from .simulate import (AmplitudeProfile, SimConfig, SweepReport, amplitude_norms,
                       epsilon_sweep, run_instability_experiment)
from .spectral import SpectralField, eigendecompose_field, uniform_grid
from .system import SystemSpec
from .wkb import transport_setup


@dataclass
class Analysis:
    """Everything the downstream experiments need about one system + phase."""

    spec: SystemSpec
    phase: Phase
    field: SpectralField
    pol: PolarizationVectors
    resonances: ResonanceReport
    stability: StabilityReport


def resolve_polarization(spec: SystemSpec, phase: Phase) -> PolarizationVectors:
    """Polarization vectors, taking the catalog's closed form when the phase
    kernel is not one-dimensional (non-oscillating reference solutions)."""
    try:
        return polarization_vectors(spec, phase)
    except Exception:
        e1 = catalog.reference_polarization(spec, phase)
        return PolarizationVectors(e1=e1, em1=e1.conj(), residuals=(0.0, 0.0))


def analyze(spec: SystemSpec, phase: Phase = None, window=None, grid_n=2048,
            inputs: ReportInputs = None, amplitude: AmplitudeProfile = None) -> Analysis:
    """Full analysis: spectral field, resonances, and the stability report.

    The amplitude profile supplies |a|_sup and the transform L1 norm entering
    the observation-time formulas (catalog default: unit gaussian).
    """
    if phase is None:
        phase = catalog.default_phase(spec)
    if window is None:
        window = default_window(spec, phase)
    if np.isscalar(window[0]):
        window = (tuple(window),)
    pad = float(np.max(np.abs(phase.k))) + 1e-9
    field_window = tuple((lo - pad, hi + pad) for (lo, hi) in window)
    if spec.d == 1:
        grid = uniform_grid(field_window[0], grid_n)
    else:
        grid = uniform_grid(field_window, (grid_n, grid_n))
    field = eigendecompose_field(spec, grid)
    pol = resolve_polarization(spec, phase)
    resonances = find_resonances(field, phase, window=window)
    if inputs is None:
        amplitude = amplitude or AmplitudeProfile()
        x = np.linspace(-20 * amplitude.width, 20 * amplitude.width, 4096, endpoint=False)
        an = amplitude_norms(amplitude(x), x)
        inputs = ReportInputs(d=spec.d, a_sup=an.a_sup, a_hatL1=an.a_hatL1)
    stability = stability_report(field, pol, phase, resonances, inputs)
    return Analysis(spec=spec, phase=phase, field=field, pol=pol,
                    resonances=resonances, stability=stability)


# ---------------------------------------------------------------------------
# flow-bound experiment
# ---------------------------------------------------------------------------

def interaction_matrix_factory(analysis: Analysis, x, xi, epsilon, h=0.1,
                               amplitude: AmplitudeProfile = None, cutoff_active=True):
    """Time-dependent interaction matrix at one (x, xi) sample point.

    The coupled block carries the selected pair's coupling matrices weighted
    by the frequency cutoff (plateau at phase size h, gone by 2h), a spatial
    plateau around the amplitude maximum, and the transported amplitude value
    g(sqrt(eps) t, x); the remaining branches enter as decoupled imaginary
    diagonal entries.
    """
    sr = analysis.stability
    field, pol, phase = analysis.field, analysis.pol, analysis.phase
    amplitude = amplitude or AmplitudeProfile()
    i, j = sr.selected_pair
    xi = np.atleast_1d(np.asarray(xi, dtype=float))
    lams, _ = field.eigensystem_at(xi)
    lams_shift, _ = field.eigensystem_at(xi + phase.k)
    mu1 = float(lams_shift[i] - phase.omega)
    mu2 = float(lams[j])
    ph = mu1 - mu2
    bp, bm, _ = pair_coefficients_at(field, pol, phase, (i, j), xi)
    chi0 = bump_weight(ph, h, 2 * h) if cutoff_active else 1.0
    chi1 = bump_weight(ph, 2 * h, 4 * h) if cutoff_active else 1.0
    phi1 = bump_weight(x - amplitude.center, 4 * amplitude.width, 8 * amplitude.width)
    extra = tuple(float(lams[b]) for b in range(field.J) if b not in (i, j))
    try:
        vg = float(transport_setup(analysis.spec, phase, pol.e1).group_velocity[0])
    except Exception:
        vg = 0.0
    se = np.sqrt(epsilon)

    def m_of_t(t):
        g = complex(amplitude(x - vg * se * t))
        return InteractionMatrix(mu1=mu1, mu2=mu2,
                                 b12=chi0 * phi1 * g * bp,
                                 b21=chi0 * phi1 * np.conj(g) * bm,
                                 epsilon=epsilon, extra_diag=extra,
                                 amplitude=g, chi1=chi1)
    return m_of_t


def flow_bound_experiment(analysis: Analysis, epsilons, T=2.0, h=0.1,
                          amplitude: AmplitudeProfile = None,
                          n_x=3, n_xi=3, away_offsets=(0.4, 0.6)) -> GrowthBoundReport:
    """Measure sup |S| e^{-t gamma+} across (x, xi) samples and epsilons.

    Near-resonance samples sit inside the cutoff plateau around the selected
    root; away samples sit at a fixed detuning with the coupling kept active,
    where the flow must stay O(1).
    """
    sr = analysis.stability
    amplitude = amplitude or AmplitudeProfile()
    if sr.selected_pair is None:
        raise InputError("no non-transparent resonance: nothing to integrate")
    xi0 = float(np.atleast_1d(sr.xi0)[0])
    gamma_plus = sr.gamma_plus
    x_samples = amplitude.center + amplitude.width * np.linspace(-0.8, 0.8, n_x)
    i, j = sr.selected_pair
    field, phase = analysis.field, analysis.phase

    def phase_at(xi):
        return (field.lambda_at(np.atleast_1d(xi) + phase.k, i) - phase.omega
                - field.lambda_at(np.atleast_1d(xi), j))

    # frequencies inside the plateau: |resonant phase| <= h/2
    xi_samples = [xi0]
    for target in np.linspace(0.1, 0.4, n_xi - 1) * h:
        lo, hi = xi0, xi0 + 0.5
        for _ in range(40):
            mid = 0.5 * (lo + hi)
            if abs(phase_at(mid)) < target:
                lo = mid
            else:
                hi = mid
        xi_samples.append(0.5 * (lo + hi))

    def make_factory(samples, cutoff_active):
        def factory(eps, t_end):
            out = []
            for x in x_samples:
                for xi in samples:
                    m_of_t = interaction_matrix_factory(analysis, x, xi, eps, h=h,
                                                        amplitude=amplitude,
                                                        cutoff_active=cutoff_active)
                    m0 = m_of_t(0.0)
                    from .numeric import supnorm
                    shift = 1j * m0.chi1 * (m0.mu1 + m0.mu2) / 2 * np.eye(2 * m0.N)
                    dt = 0.1 * np.sqrt(eps) / max(supnorm(m0.block() - shift), 1e-12)
                    out.append(integrate_flow(m_of_t, 0.0, t_end, dt, samples=100))
            return out
        return factory

    away = []
    for target in away_offsets:
        lo, hi = xi0, xi0 + 3.0
        for _ in range(60):
            mid = 0.5 * (lo + hi)
            if abs(phase_at(mid)) < target:
                lo = mid
            else:
                hi = mid
        away.append(0.5 * (lo + hi))

    return verify_growth_bound(make_factory(xi_samples, True), gamma_plus, T, epsilons,
                               away_factory=make_factory(away, False))


# ---------------------------------------------------------------------------
# simulation wiring
# ---------------------------------------------------------------------------

def reference_solution(spec: SystemSpec, phase: Phase, amplitude: AmplitudeProfile,
                       epsilon: float):
    """Reference state as a function (t, x) -> (N, points) for stock systems."""
    if spec.name in ("three-wave", "brillouin"):
        c1 = spec.params["c1"]

        def ref(t, x):
            a = amplitude(x - c1 * t)
            z = np.zeros_like(a)
            return np.asarray([a, z, z], dtype=complex)
        return ref
    # Klein-Gordon: leading-order two-scale solution with the transported amplitude
    e1 = catalog.kg_e1(spec, phase)
    ts = transport_setup(spec, phase, e1)
    vg = float(ts.group_velocity[0])
    c3 = ts.cubic_coefficient
    k = float(phase.k[0])

    def ref(t, x):
        g = amplitude(x - vg * t).astype(complex)
        if abs(c3) > 0:   # constant-|g| phase rotation approximation of the cubic term
            g = g * np.exp(c3.real * 0 + 1j * (c3.imag * np.abs(g) ** 2 * t))
        osc = np.exp(1j * (k * x - phase.omega * t) / epsilon)
        u = np.outer(e1, g) * osc
        return (u + u.conj()).astype(complex)
    return ref


def simulation_config(spec: SystemSpec, analysis: Analysis, epsilon, K=3.0, K_prime=0.5,
                      grid_points=4096, amplitude: AmplitudeProfile = None,
                      T_obs=None, rho=None, t_end=None) -> SimConfig:
    sr = analysis.stability
    amplitude = amplitude or AmplitudeProfile()
    real_state = spec.name.startswith("kg")
    xi0 = float(np.atleast_1d(sr.xi0)[0]) if sr.xi0 is not None else 0.0
    k = float(analysis.phase.k[0])
    e0 = sr.e0 if sr.e0 is not None else np.eye(spec.N)[0].astype(complex)
    e0 = e0 / np.linalg.norm(e0)
    if T_obs is None:
        T_obs = sr.t0 if np.isfinite(sr.t0) else 2.0
    return SimConfig(spec=spec, epsilon=epsilon, grid_points=grid_points,
                     amplitude=amplitude, K=K, K_prime=K_prime, T_obs=T_obs,
                     e0=e0, xi0=xi0, k=k, rho=rho, real_state=real_state, t_end=t_end)


def run_simulation(spec: SystemSpec, epsilon, analysis: Analysis = None, **cfg_kw):
    analysis = analysis or analyze(spec)
    amplitude = cfg_kw.pop("amplitude", None) or AmplitudeProfile()
    cfg = simulation_config(spec, analysis, epsilon, amplitude=amplitude, **cfg_kw)
    ref = reference_solution(spec, analysis.phase, amplitude, epsilon)
    return run_instability_experiment(cfg, ref)


def run_sweep(spec: SystemSpec, epsilons, analysis: Analysis = None,
              amplitude: AmplitudeProfile = None, workers=1, **cfg_kw) -> SweepReport:
    analysis = analysis or analyze(spec)
    amplitude = amplitude or AmplitudeProfile()
    tf = spec.params.get("time_factor_power", 0.5)

    def cfg_factory(eps):
        return simulation_config(spec, analysis, eps, amplitude=amplitude, **cfg_kw)

    def ref_factory(eps):
        return reference_solution(spec, analysis.phase, amplitude, eps)

    return epsilon_sweep(cfg_factory, ref_factory, epsilons, time_factor_power=tf,
                         workers=workers)
