"""Pointer-state separation, SNR and the analytic longitudinal/dispersive models."""
from __future__ import annotations

import math
from dataclasses import dataclass, field, asdict

import numpy as np
from scipy.integrate import trapezoid

from ..core import HilbertSpace, StateVector, annihilation, basis, embed, expectation, tensor_states
from ..floquet import floquet_decompose
from ..hamiltonian import build_qubit_cavity, build_tls_two_tone, ghz
from ..propagator import IntegratorConfig
from .lindblad import LindbladModel, lindblad_evolve


@dataclass
class PointerTrajectory:
    times: np.ndarray
    a0: np.ndarray
    a1: np.ndarray
    params: dict = field(default_factory=dict)

    @property
    def D(self) -> np.ndarray:
        return np.abs(self.a0 - self.a1)

    def normalized(self, d_inf: float) -> np.ndarray:
        return self.D / d_inf

    def csv_rows(self, d_inf: float) -> tuple[list[str], list[list[float]]]:
        header = ["t_ns", "ReA0", "ImA0", "ReA1", "ImA1", "D", "D_over_Dinf"]
        rows = [
            [float(t), a.real, a.imag, b.real, b.imag, float(d), float(d / d_inf)]
            for t, a, b, d in zip(self.times, self.a0, self.a1, self.D)
        ]
        return header, rows


def pointer_separation(
    model: LindbladModel,
    floquet_states: tuple[StateVector, StateVector],
    times,
    cavity_index: int = 1,
    cavity_op=None,
    **solver_kw,
) -> PointerTrajectory:
    """Two Lindblad runs from the given (already tensored) initial states.

    ``cavity_op`` defaults to the annihilation operator on factor
    ``cavity_index`` of the model's space.
    """
    space = model.h.space
    if cavity_op is None:
        cavity_op = embed(annihilation(space.factor_dims[cavity_index]), cavity_index, space)
    series = []
    for psi in floquet_states:
        rhos = lindblad_evolve(model, psi.to_density(), times, **solver_kw)
        series.append(np.array([expectation(r, cavity_op) for r in rhos]))
    return PointerTrajectory(np.asarray(times, float), series[0], series[1])


def longitudinal_D_analytic(g_tilde: float, kappa: float, t):
    """D(t) = (g/kappa)(1 - exp(-kappa t / 2))."""
    if kappa <= 0:
        raise ValueError("kappa must be > 0")
    return g_tilde / kappa * (1.0 - np.exp(-0.5 * kappa * np.asarray(t, dtype=float)))


def snr(D, times, kappa: float, T: float) -> float:
    """sqrt(2 kappa int_0^T D^2 dt) by the trapezoid rule on the sampled D."""
    times = np.asarray(times, dtype=float)
    D = np.asarray(D, dtype=float)
    if T < times[0] or T > times[-1] * (1 + 1e-12):
        raise ValueError(f"T={T} outside the sampled range [{times[0]}, {times[-1]}]")
    if T == times[0]:
        return 0.0
    inside = times < T
    t = np.append(times[inside], T)
    d = np.append(D[inside], np.interp(T, times, D))
    return math.sqrt(2.0 * kappa * trapezoid(d * d, t))


def snr_longitudinal_exact(g_tilde: float, kappa: float, T: float) -> float:
    """SNR(T) for D from the longitudinal formula, via its antiderivative."""
    inner = T - 4.0 / kappa * (1 - math.exp(-kappa * T / 2)) + 1.0 / kappa * (1 - math.exp(-kappa * T))
    return math.sqrt(2.0 * kappa * (g_tilde / kappa) ** 2 * inner)


def dispersive_D_analytic(chi: float, kappa: float, eps_probe: float, t, delay: float = 0.0):
    """Separation of the two pointers of a resonantly probed dispersive cavity.

    Each pointer solves da/dt = -(kappa/2 +- i chi) a - i eps_probe from vacuum.
    With ``delay`` the probe starts after a mapping dead time.
    """
    t = np.asarray(t, dtype=float) - delay
    tt = np.clip(t, 0.0, None)
    out = np.zeros_like(tt)
    for s in (1, -1):
        lam = 0.5 * kappa + 1j * s * chi
        a = -1j * eps_probe / lam * (1 - np.exp(-lam * tt))
        out = out + s * a
    return np.where(t > 0, np.abs(out), 0.0)


@dataclass(frozen=True)
class TwoBodyReadoutConfig:
    """Driven qubit + cavity with a two-sideband modulated coupling. GHz and ns."""

    omega0_ghz: float = 5.02
    eps_d1_ghz: float = 0.21
    tilt: float = 0.005
    omega_r_ghz: float = 7.0
    g_tilde_ghz: float = 0.0125
    kappa_ghz: float = 0.05
    n_cavity: int = 20
    sidebands: tuple[str, ...] = ("minus", "plus")
    t_max_kappa: float = 5.0
    n_samples: int = 201
    rtol: float = 1e-9
    atol: float = 1e-11

    @property
    def omega_d1(self) -> float:
        return ghz(self.omega0_ghz) - self.tilt * ghz(self.eps_d1_ghz)

    @property
    def kappa(self) -> float:
        return ghz(self.kappa_ghz)

    @property
    def g_tilde(self) -> float:
        return ghz(self.g_tilde_ghz)

    @property
    def g_longitudinal(self) -> float:
        """Strength entering the longitudinal formula.

        Each sideband contributes g/2 (a + a^+) sz^F, i.e. a separation
        (g/kappa) per sideband.
        """
        return self.g_tilde * len(self.sidebands)

    @property
    def d_inf(self) -> float:
        return self.g_longitudinal / self.kappa

    def times(self) -> np.ndarray:
        return np.linspace(0.0, self.t_max_kappa / self.kappa, self.n_samples)

    def to_dict(self) -> dict:
        return asdict(self)


def simulate_two_body_readout(cfg: TwoBodyReadoutConfig) -> PointerTrajectory:
    omega0 = ghz(cfg.omega0_ghz)
    eps = ghz(cfg.eps_d1_ghz)
    qubit = build_tls_two_tone(omega0, eps, cfg.omega_d1)
    sol = floquet_decompose(qubit, cfg.omega_d1, IntegratorConfig(tolerance=1e-10))
    h = build_qubit_cavity(
        omega0, eps, cfg.omega_d1, ghz(cfg.omega_r_ghz), cfg.g_tilde, cfg.n_cavity, cfg.sidebands
    )
    a = embed(annihilation(cfg.n_cavity), 1, h.space)
    model = LindbladModel(h, ((a, cfg.kappa),))
    vac = basis(cfg.n_cavity, 0)
    states = tuple(tensor_states(StateVector(HilbertSpace((2,)), sol.modes[0, n]), vac) for n in (0, 1))
    traj = pointer_separation(model, states, cfg.times(), rtol=cfg.rtol, atol=cfg.atol)
    traj.params = cfg.to_dict() | {"d_inf": cfg.d_inf, "quasienergies": sol.quasienergies.tolist()}
    return traj
