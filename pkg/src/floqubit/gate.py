"""X gate between the two Floquet modes of a Rabi-driven qubit.

The Z tone at w_d2 drives transitions between phi_0 and phi_1 through the
matrix element M(t) = <phi_0(t)| sz |phi_1(t)>. Its Fourier component M0 at the
resonant harmonic sets the Rabi rate eps_d2 |M0|, so a pi pulse needs an
envelope area pi / |M0|.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, asdict

import numpy as np

from .core import StateVector, sigma_z
from .floquet import FloquetSolution, floquet_decompose, floquet_population
from .hamiltonian import Envelope, build_tls_two_tone, ghz
from .propagator import IntegratorConfig, evolve_state


@dataclass(frozen=True)
class XGateConfig:
    """Frequencies in GHz, times in ns. ``omega_d1_ghz=None`` means resonant drive."""

    omega0_ghz: float = 5.02
    eps_d1_ghz: float = 0.21
    omega_d1_ghz: float | None = None
    eps_d2_ghz: float = 0.02
    ramp_ns: float = 20.0
    ramp_shape: str = "tanh"
    steepness: float = 3.0
    settle_ns: float = 5.0
    n_samples: int = 201
    integrator: IntegratorConfig = field(default_factory=lambda: IntegratorConfig(tolerance=1e-9))

    @property
    def omega0(self) -> float:
        return ghz(self.omega0_ghz)

    @property
    def omega_d1(self) -> float:
        return ghz(self.omega0_ghz if self.omega_d1_ghz is None else self.omega_d1_ghz)

    @property
    def eps_d1(self) -> float:
        return ghz(self.eps_d1_ghz)

    @property
    def eps_d2(self) -> float:
        return ghz(self.eps_d2_ghz)

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class XGateResult:
    omega_d2: float
    times: np.ndarray
    populations: np.ndarray  # (n_times, 2) on phi_0, phi_1
    envelope: Envelope
    m0: complex

    @property
    def transfer(self) -> float:
        return float(self.populations[-1, 1])

    def csv_rows(self) -> tuple[list[str], list[list[float]]]:
        env = self.envelope(self.times)
        rows = [[float(t), float(e), float(p[0]), float(p[1])] for t, e, p in zip(self.times, env, self.populations)]
        return ["t_ns", "eps_d2", "pop_phi0", "pop_phi1"], rows


def qubit_floquet(cfg: XGateConfig, n_samples: int = 64) -> FloquetSolution:
    h = build_tls_two_tone(cfg.omega0, cfg.eps_d1, cfg.omega_d1)
    return floquet_decompose(h, cfg.omega_d1, cfg.integrator, n_samples=n_samples)


def transition_element(solution: FloquetSolution) -> complex:
    """Fourier component of <phi_0(t)| sz |phi_1(t)> resonant with the folded gap.

    Folding may shift one mode by k Brillouin zones, which moves the resonant
    component of M(t) to harmonic k of the drive; that component is returned.
    """
    sz = sigma_z().matrix
    eps = solution.quasienergies
    raw = eps[0] - eps[1]
    k = round((solution.gap(0, 1) - raw) / solution.omega)
    tau = solution.times - solution.t0
    m = np.array([np.vdot(f[0], sz @ f[1]) for f in solution.modes])
    return complex(np.mean(m * np.exp(-1j * k * solution.omega * tau)))


def pi_pulse(cfg: XGateConfig, m0: complex) -> Envelope:
    """Flat-top Z-tone envelope whose area times |M0| equals pi."""
    area = math.pi / abs(m0)
    hold = area / cfg.eps_d2 - cfg.ramp_ns
    if hold < 0:
        raise ValueError(
            f"eps_d2 too large for ramp {cfg.ramp_ns} ns: pi area reached before the plateau"
        )
    return Envelope(
        "flat-top", cfg.eps_d2, ramp=cfg.ramp_ns, hold=hold, steepness=cfg.steepness, ramp_shape=cfg.ramp_shape
    )


def run_xgate(cfg: XGateConfig, omega_d2: float, solution: FloquetSolution | None = None) -> XGateResult:
    """Start in phi_0(0), apply the pi pulse at ``omega_d2`` (rad/ns), track mode populations."""
    solution = solution or qubit_floquet(cfg)
    m0 = transition_element(solution)
    env = pi_pulse(cfg, m0)
    h = build_tls_two_tone(cfg.omega0, cfg.eps_d1, cfg.omega_d1, omega_d2=omega_d2, env_d2=env)
    times = np.linspace(0.0, env.end + cfg.settle_ns, cfg.n_samples)
    psi0 = StateVector(h.space, solution.modes[0, 0])
    states = evolve_state(h, psi0, times, cfg.integrator)
    pops = np.array([floquet_population(s, solution, t) for s, t in zip(states, times)])
    return XGateResult(omega_d2, times, pops, env, m0)


def final_transfer(cfg: XGateConfig, omega_d2: float, solution: FloquetSolution | None = None) -> float:
    """Population of phi_1 after the pulse, computed from one propagation."""
    solution = solution or qubit_floquet(cfg)
    m0 = transition_element(solution)
    env = pi_pulse(cfg, m0)
    h = build_tls_two_tone(cfg.omega0, cfg.eps_d1, cfg.omega_d1, omega_d2=omega_d2, env_d2=env)
    t_end = env.end + cfg.settle_ns
    psi = evolve_state(h, StateVector(h.space, solution.modes[0, 0]), [0.0, t_end], cfg.integrator)[-1]
    return float(floquet_population(psi, solution, t_end)[1])
