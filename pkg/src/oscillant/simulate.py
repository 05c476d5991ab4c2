"""Direct pseudospectral simulation with highly-oscillating data.

Strang splitting on a periodic grid: the stiff linear part advances exactly
per Fourier mode through the precomputed eigendecomposition of
``A0/(i eps) + A(kappa)`` (unitary), and the pointwise quadratic source
advances with classical Runge-Kutta stages.  Deviation norms from a reference
solution are recorded against the predicted amplification times.
"""
from __future__ import annotations

from dataclasses import dataclass, field as dc_field

import numpy as np

from .numeric import InputError, NumericalError
from .system import SystemSpec


@dataclass
class AmplitudeProfile:
    """Slowly varying envelope of the reference solution."""

    center: float = 0.0
    width: float = 1.0
    kind: str = "gaussian"
    samples: np.ndarray = None   # used when kind == "custom"

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        if self.kind == "gaussian":
            return np.exp(-((x - self.center) / self.width) ** 2)
        if self.kind == "custom":
            return np.interp(x, self.samples[0], self.samples[1])
        raise InputError(f"unknown amplitude profile '{self.kind}'")


@dataclass
class AmplitudeNorms:
    a_sup: float
    a_hatL1: float
    x0: float
    edge_value: float
    periodization_warning: bool


def amplitude_norms(a, x) -> AmplitudeNorms:
    """Sup norm, discrete L1 norm of the Fourier transform, and the argmax.

    ``a_hatL1`` approximates the integral of |a_hat| over frequency with
    ``a_hat(kappa_m) = dx * fft(a)`` and mode spacing ``2 pi / L``.  The
    profile must decay at the domain edge, else periodization bias is flagged.
    """
    a = np.asarray(a)
    x = np.asarray(x, dtype=float)
    mags = np.abs(a)
    if not np.any(mags > 0):
        raise InputError("amplitude vanishes identically: no maximum point exists")
    n = len(x)
    L = float(x[-1] - x[0]) * n / (n - 1)
    dx = L / n
    a_hat = dx * np.fft.fft(a)
    a_hatL1 = float(np.sum(np.abs(a_hat)) * (2 * np.pi / L))
    i0 = int(np.argmax(mags))
    edge = float(max(mags[0], mags[-1]))
    return AmplitudeNorms(a_sup=float(mags[i0]), a_hatL1=a_hatL1, x0=float(x[i0]),
                          edge_value=edge, periodization_warning=bool(edge > 1e-12))


def smooth_bump(x, center, radius):
    """Compactly supported plateau: 1 on |x-c| <= r/2, 0 beyond r, C^1 monotone."""
    t = (np.abs(np.asarray(x, dtype=float) - center) - radius / 2) / (radius / 2)
    t = np.clip(t, 0.0, 1.0)
    return 1.0 - t ** 3 * (10.0 - 15.0 * t + 6.0 * t ** 2)


@dataclass
class SimConfig:
    """Run parameters for one instability experiment."""

    spec: SystemSpec
    epsilon: float
    grid_points: int = 4096
    domain_length: float = None        # default 40 x amplitude width
    dt: float = None                   # default from the nonlinear-step bound
    t_end: float = None                # default T_obs * sqrt(eps) |log eps|
    T_obs: float = None                # observation-time multiplier
    K: float = 3.0
    K_prime: float = 0.5
    amplitude: AmplitudeProfile = dc_field(default_factory=AmplitudeProfile)
    rho: float = None                  # observation ball radius; default width/2
    seed: int = 0
    real_state: bool = False
    n_samples: int = 400
    # resonant perturbation data (from a stability report)
    xi0: float = 0.0
    k: float = 0.0
    e0: np.ndarray = None
    phi0_radius: float = None          # default 2 x amplitude width

    def __post_init__(self):
        if self.grid_points & (self.grid_points - 1):
            raise InputError("grid_points must be a power of two")
        if self.domain_length is None:
            self.domain_length = 40.0 * self.amplitude.width
        if self.rho is None:
            self.rho = 0.5 * self.amplitude.width
        if self.phi0_radius is None:
            self.phi0_radius = 2.0 * self.amplitude.width

    @property
    def x(self):
        L = self.domain_length
        return self.amplitude.center - L / 2 + L * np.arange(self.grid_points) / self.grid_points

    def check_resolution(self, min_ppw=8):
        kmax = max(abs(self.k), abs(self.xi0 + self.k)) / self.epsilon
        if kmax > 0:
            wavelength = 2 * np.pi / kmax
            ppw = wavelength / (self.domain_length / self.grid_points)
            if ppw < min_ppw:
                raise InputError(f"grid resolves {ppw:.1f} points per wavelength; need >= {min_ppw}")


class _Stepper:
    """Strang splitting with exact linear half-steps per Fourier mode."""

    def __init__(self, spec: SystemSpec, epsilon: float, x: np.ndarray, real_state: bool):
        self.spec = spec
        self.eps = epsilon
        self.real_state = real_state
        n = len(x)
        L = float(x[-1] - x[0]) * n / (n - 1)
        self.kappa = 2 * np.pi * np.fft.fftfreq(n, d=L / n)
        # H_eps(kappa) = A0/(i eps) + A(kappa); per-mode unitary update e^{-i dt H}
        N = spec.N
        Hs = (spec.A0[None, :, :] / (1j * epsilon)
              + self.kappa[:, None, None] * spec.Aj[0][None, :, :])
        self.evals, self.evecs = np.linalg.eigh(Hs)

    def linear_half(self, u_hat, dt):
        # u_hat shape (modes, N)
        ph = np.exp(-1j * (dt / 2) * self.evals)
        coeff = np.einsum("mij,mj->mi", self.evecs.conj().transpose(0, 2, 1), u_hat)
        return np.einsum("mij,mj->mi", self.evecs, ph * coeff)

    def nonlinear(self, u, dt):
        # RK4 on du/dt = B(u, u)/sqrt(eps), pointwise in x (u shape (N, points))
        f = lambda w: self.spec.B(w, w) / np.sqrt(self.eps)
        k1 = f(u)
        k2 = f(u + 0.5 * dt * k1)
        k3 = f(u + 0.5 * dt * k2)
        k4 = f(u + dt * k3)
        return u + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)

    def step(self, u, dt):
        u_hat = np.fft.fft(u, axis=1).T
        u = np.fft.ifft(self.linear_half(u_hat, dt).T, axis=1)
        u = self.nonlinear(u, dt)
        u_hat = np.fft.fft(u, axis=1).T
        u = np.fft.ifft(self.linear_half(u_hat, dt).T, axis=1)
        if self.real_state:
            u = u.real.astype(complex)
        return u


def step(state, config: SimConfig, dt, stepper=None):
    """Advance one Strang step (exposed for tests; runs build their own stepper)."""
    stepper = stepper or _Stepper(config.spec, config.epsilon, config.x, config.real_state)
    return stepper.step(state, dt)


@dataclass
class SimulationRun:
    times: np.ndarray
    norm_total: np.ndarray
    norm_dev: np.ndarray
    norm_dev_ball: np.ndarray
    sup_dev: np.ndarray
    fitted_rate: float
    t_star: float
    verdict: str                 # completed | unbounded
    config: SimConfig = None
    dt_used: float = None

    def csv(self) -> str:
        lines = ["t,norm_total,norm_dev,norm_dev_ball,sup_dev"]
        for i in range(len(self.times)):
            lines.append(f"{self.times[i]:.12g},{self.norm_total[i]:.12g},"
                         f"{self.norm_dev[i]:.12g},{self.norm_dev_ball[i]:.12g},"
                         f"{self.sup_dev[i]:.12g}")
        return "\n".join(lines) + "\n"


def _l2(u, dx, mask=None):
    if mask is not None:
        u = u[:, mask]
    return float(np.sqrt(np.sum(np.abs(u) ** 2) * dx))


def run_instability_experiment(config: SimConfig, reference, perturbation=None,
                               collect_states=False) -> SimulationRun:
    """Integrate the system from a perturbed reference datum and track deviation.

    ``reference(t, x)`` returns the reference state (N, points).  The default
    perturbation is the resonant datum: eps^K times a plateau bump around the
    amplitude maximum, oscillating at (xi0 + k)/eps, pointing along e0 (real
    part taken for real-state systems).  Integration runs to
    ``min(T_obs, user T) sqrt(eps) |log eps|`` with the nonlinear-step bound
    on dt, halving adaptively (at most 20 times) before declaring blow-up.
    """
    config.check_resolution()
    spec = config.spec
    eps = config.epsilon
    x = config.x
    dx = config.domain_length / config.grid_points
    ball = np.abs(x - config.amplitude.center) <= config.rho

    u_ref0 = np.asarray(reference(0.0, x), dtype=complex)
    if perturbation is None:
        if config.e0 is None:
            raise InputError("resonant perturbation needs e0 from a stability report")
        phi0 = smooth_bump(x, config.amplitude.center, config.phi0_radius)
        osc = np.exp(1j * x * (config.xi0 + config.k) / eps)
        pert = eps ** config.K * np.outer(config.e0, phi0 * osc)
        if config.real_state:
            pert = pert.real.astype(complex)
    else:
        pert = np.asarray(perturbation(x), dtype=complex)
    u = u_ref0 + pert

    if config.t_end is not None:
        t_end = config.t_end
    else:
        T = config.T_obs if config.T_obs is not None else 2.0
        t_end = T * np.sqrt(eps) * abs(np.log(eps))
    b_norm = spec.B.norm_bound
    sup0 = float(np.abs(u).max())
    dt = config.dt or 0.1 * np.sqrt(eps) / max(b_norm * sup0, 1e-12)
    dt = min(dt, t_end / 16)

    stepper = _Stepper(spec, eps, x, config.real_state)
    sample_dt = t_end / config.n_samples
    times, n_tot, n_dev, n_ball, s_dev = [], [], [], [], []
    states = []

    def record(t, u):
        dev = u - np.asarray(reference(t, x), dtype=complex)
        times.append(t)
        n_tot.append(_l2(u, dx))
        n_dev.append(_l2(dev, dx))
        n_ball.append(_l2(dev, dx, ball))
        s_dev.append(float(np.abs(dev).max()))
        if collect_states:
            states.append(u.copy())

    t = 0.0
    record(t, u)
    verdict = "completed"
    halvings = 0
    next_sample = sample_dt
    while t < t_end - 1e-14:
        sup = float(np.abs(u).max())
        while dt > 0.1 * np.sqrt(eps) / max(b_norm * sup, 1e-12):
            dt *= 0.5
            halvings += 1
            if halvings > 20:
                verdict = "unbounded"
                break
        if verdict == "unbounded" or not np.isfinite(sup):
            verdict = "unbounded"
            break
        h = min(dt, t_end - t)
        u = stepper.step(u, h)
        t += h
        if t >= next_sample - 1e-14 or t >= t_end - 1e-14:
            record(t, u)
            next_sample += sample_dt

    times = np.array(times)
    n_dev = np.array(n_dev)
    n_ball = np.array(n_ball)

    # growth window: deviation well above its initial value, well below eps^K'
    lo = 5.0 * max(n_dev[0], 1e-300)
    hi = 0.2 * eps ** config.K_prime
    sel = (n_dev > lo) & (n_dev < hi)
    if sel.sum() >= 3:
        rate = float(np.polyfit(times[sel], np.log(n_dev[sel]), 1)[0])
    elif len(times) > 3:
        half = len(times) // 2
        with np.errstate(divide="ignore"):
            rate = float(np.polyfit(times[half:], np.log(np.maximum(n_dev[half:], 1e-300)), 1)[0])
    else:
        rate = 0.0

    thresh = eps ** config.K_prime
    t_star = np.inf
    above = np.nonzero(n_ball >= thresh)[0]
    if len(above):
        i = above[0]
        if i == 0:
            t_star = float(times[0])
        else:
            f0, f1 = n_ball[i - 1], n_ball[i]
            w = (thresh - f0) / (f1 - f0)
            t_star = float(times[i - 1] + w * (times[i] - times[i - 1]))

    run = SimulationRun(times=times, norm_total=np.array(n_tot), norm_dev=n_dev,
                        norm_dev_ball=n_ball, sup_dev=np.array(s_dev), fitted_rate=rate,
                        t_star=t_star, verdict=verdict, config=config, dt_used=dt)
    run.final_state = u
    if collect_states:
        run.states = states
    return run


@dataclass
class SweepReport:
    epsilons: np.ndarray
    t_stars: np.ndarray
    rates: np.ndarray
    t_star_ratios: np.ndarray     # t_star / (sqrt(eps) |log eps|)
    rate_scaled: np.ndarray       # fitted_rate * sqrt(eps)
    ratio_spread: float           # max/min - 1 over finite ratios
    rate_spread: float
    flags: list

    def csv(self) -> str:
        lines = ["epsilon,t_star,t_star_ratio,fitted_rate,rate_scaled"]
        for i, eps in enumerate(self.epsilons):
            lines.append(f"{eps:.6g},{self.t_stars[i]:.12g},{self.t_star_ratios[i]:.12g},"
                         f"{self.rates[i]:.12g},{self.rate_scaled[i]:.12g}")
        return "\n".join(lines) + "\n"


def epsilon_sweep(config_factory, reference_factory, epsilons, time_factor_power=0.5,
                  workers=1) -> SweepReport:
    """Run the experiment across epsilons and test the amplification scaling.

    ``t_star / (sqrt(eps) |log eps|)`` should be constant across the sweep for
    an unstable system, and ``fitted_rate * sqrt(eps)`` should be constant;
    their relative spreads are reported.  Systems carrying a singular scaling
    record their times multiplied by eps^(time_factor_power - 1/2).  Runs are
    independent; ``workers`` > 1 executes them in a thread pool (results are
    ordered by epsilon regardless).
    """
    epsilons = np.sort(np.asarray(epsilons, dtype=float))[::-1]
    if len(epsilons) < 3:
        raise InputError("sweep needs at least three epsilon values")

    def one(eps):
        return run_instability_experiment(config_factory(eps), reference_factory(eps))

    if workers > 1:
        from concurrent.futures import ThreadPoolExecutor
        with ThreadPoolExecutor(max_workers=workers) as pool:
            runs = list(pool.map(one, epsilons))
    else:
        runs = [one(eps) for eps in epsilons]

    t_stars, rates, flags = [], [], []
    for eps, run in zip(epsilons, runs):
        extra = eps ** (time_factor_power - 0.5)
        t_stars.append(run.t_star * extra)
        rates.append(run.fitted_rate / extra if extra > 0 else run.fitted_rate)
        if run.verdict != "completed":
            flags.append((float(eps), run.verdict))
    t_stars = np.array(t_stars)
    rates = np.array(rates)
    denom = np.array([np.sqrt(e) * abs(np.log(e)) * e ** (time_factor_power - 0.5)
                      for e in epsilons])
    ratios = t_stars / denom
    scaled = rates * np.sqrt(epsilons)
    finite = np.isfinite(ratios)
    ratio_spread = float(ratios[finite].max() / ratios[finite].min() - 1.0) if finite.any() else np.inf
    pos = scaled > 0
    rate_spread = float(scaled[pos].max() / scaled[pos].min() - 1.0) if pos.any() else np.inf
    return SweepReport(epsilons=epsilons, t_stars=t_stars, rates=rates, t_star_ratios=ratios,
                       rate_scaled=scaled, ratio_spread=ratio_spread, rate_spread=rate_spread,
                       flags=flags)


def snapshot_bytes(state, config: SimConfig, t: float) -> bytes:
    """Binary state dump: magic, N, grid points, epsilon, time, raw complex field."""
    import struct

    head = struct.pack("<4sIIdd", b"OSC1", config.spec.N, config.grid_points,
                       config.epsilon, t)
    return head + np.ascontiguousarray(state, dtype=np.complex128).tobytes()


def snapshot_from_bytes(blob: bytes):
    import struct

    magic, N, n, eps, t = struct.unpack_from("<4sIIdd", blob, 0)
    if magic != b"OSC1":
        raise InputError("not a state snapshot")
    off = struct.calcsize("<4sIIdd")
    state = np.frombuffer(blob, dtype=np.complex128, offset=off).reshape(N, n)
    return state, {"N": N, "grid_points": n, "epsilon": eps, "t": t}
