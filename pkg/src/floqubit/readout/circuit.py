"""Three coupled Kerr oscillators: cavity (a), transmon (b), tunable coupler (c).

Bare modes relate to normal modes through bare_beta = sum_alpha u[beta, alpha]
normal_alpha, with u orthogonal and column alpha the normal mode most similar
to bare mode alpha. Simulations run on Fock states of the normal modes.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, asdict

import numpy as np
from scipy.optimize import curve_fit, linear_sum_assignment

from ..core import HilbertSpace, Operator, StateVector, annihilation, embed
from ..floquet import floquet_decompose
from ..hamiltonian import DriveTone, DrivenHamiltonian, constant, ghz
from ..propagator import IntegratorConfig
from .lindblad import LindbladModel
from .pointer import PointerTrajectory, pointer_separation

MODES = ("a", "b", "c")
DEGENERACY_GAP = ghz(1e-3)


class LabelingError(ValueError):
    """Normal frequencies too close to assign modes unambiguously."""


@dataclass(frozen=True)
class KerrCircuit:
    """Circuit parameters in GHz (ordinary frequency) and ns.

    ``tilt`` is the detuning of the qubit drive from the qubit transition in
    units of the drive amplitude seen by the qubit-like normal mode.
    """

    omega_a_ghz: float = 8.2
    omega_b_ghz: float = 5.2
    omega_c_ghz: float = 7.78
    alpha_b_ghz: float = -0.34
    alpha_c_ghz: float = 0.8
    g_ab_ghz: float = 0.0
    g_bc_ghz: float = 0.2
    g_ca_ghz: float = 0.2
    delta_omega_c_ghz: float = 0.3
    sidebands: tuple[str, ...] = ("minus",)
    eps_d1_ghz: float = 0.7
    tilt: float = 0.005
    kappa_ghz: float = 0.05
    truncation: tuple[int, int, int] = (5, 6, 3)

    def __post_init__(self):
        if any(n < 2 for n in self.truncation):
            raise ValueError("every truncation must be >= 2")
        for sb in self.sidebands:
            if sb not in ("minus", "plus"):
                raise ValueError(f"unknown sideband {sb!r}")

    @property
    def coupling_matrix(self) -> np.ndarray:
        w = ghz(np.array([self.omega_a_ghz, self.omega_b_ghz, self.omega_c_ghz]))
        gab, gbc, gca = ghz(self.g_ab_ghz), ghz(self.g_bc_ghz), ghz(self.g_ca_ghz)
        return np.array([[w[0], gab, gca], [gab, w[1], gbc], [gca, gbc, w[2]]])

    @property
    def anharmonicities(self) -> np.ndarray:
        return ghz(np.array([0.0, self.alpha_b_ghz, self.alpha_c_ghz]))

    @property
    def kappa(self) -> float:
        return ghz(self.kappa_ghz)

    def with_truncation(self, truncation) -> KerrCircuit:
        return KerrCircuit(**(asdict(self) | {"truncation": tuple(truncation)}))

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class NormalModeData:
    frequencies: np.ndarray
    u: np.ndarray
    alpha1: np.ndarray
    chi1: np.ndarray

    @property
    def g_factor(self) -> float:
        """u_ca u_cb: modulated a-b coupling per unit coupler modulation."""
        return float(self.u[2, 0] * self.u[2, 1])

    def to_dict(self) -> dict:
        return {
            "frequencies_ghz": (self.frequencies / (2 * math.pi)).tolist(),
            "u": self.u.tolist(),
            "alpha1_ghz": (self.alpha1 / (2 * math.pi)).tolist(),
            "chi1_ghz": (self.chi1 / (2 * math.pi)).tolist(),
            "g_factor": self.g_factor,
        }


def kerr_coefficients(u: np.ndarray, alpha: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Self- and cross-Kerr of the normal modes from the rotated quartic terms."""
    u2 = u**2
    alpha1 = (u2**2).T @ alpha
    chi1 = 2.0 * u2.T @ np.diag(alpha) @ u2
    # Averaging with the transpose makes the symmetry exact, not just to rounding.
    return alpha1, 0.5 * (chi1 + chi1.T)


def normal_mode_reduce(circ: KerrCircuit) -> NormalModeData:
    m = circ.coupling_matrix
    if np.max(np.abs(m - m.T)) > 0:
        raise ValueError("coupling matrix must be symmetric")
    w, v = np.linalg.eigh(m)
    rows, cols = linear_sum_assignment(-(v**2))
    order = cols[np.argsort(rows)]
    w, v = w[order], v[:, order]
    for j in range(3):
        if v[np.argmax(np.abs(v[:, j])), j] < 0:
            v[:, j] = -v[:, j]
    gaps = np.abs(w[:, None] - w[None, :])[np.triu_indices(3, 1)]
    if np.min(gaps) < DEGENERACY_GAP:
        raise LabelingError(f"normal frequencies within {np.min(gaps):.3e} rad/ns")
    alpha1, chi1 = kerr_coefficients(v, circ.anharmonicities)
    return NormalModeData(w, v, alpha1, chi1)


def _normal_ops(dims) -> tuple[HilbertSpace, list[Operator]]:
    space = HilbertSpace(tuple(dims))
    return space, [embed(annihilation(n), k, space) for k, n in enumerate(dims)]


def _quartic(nm: NormalModeData, alpha: np.ndarray, ops: list[Operator]) -> np.ndarray:
    out = 0
    for i in (1, 2):
        bare = sum(nm.u[i, k] * ops[k].matrix for k in range(3))
        bd = bare.conj().T
        out = out + 0.5 * alpha[i] * (bd @ bd @ bare @ bare)
    return out


def kerr_from_expansion(circ: KerrCircuit, nm: NormalModeData | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Self- and cross-Kerr read off the number-diagonal part of the quartic operator."""
    nm = nm or normal_mode_reduce(circ)
    space, ops = _normal_ops((3, 3, 3))
    q = _quartic(nm, circ.anharmonicities, ops)

    def idx(n):
        return (n[0] * 3 + n[1]) * 3 + n[2]

    alpha1 = np.zeros(3)
    chi1 = np.zeros((3, 3))
    for j in range(3):
        n = [0, 0, 0]
        n[j] = 2
        alpha1[j] = q[idx(n), idx(n)].real
        chi1[j, j] = 2 * alpha1[j]
        for k in range(j + 1, 3):
            n = [0, 0, 0]
            n[j] = n[k] = 1
            chi1[j, k] = chi1[k, j] = q[idx(n), idx(n)].real
    return alpha1, chi1


@dataclass
class CircuitModel:
    circuit: KerrCircuit
    normal: NormalModeData
    hamiltonian: DrivenHamiltonian
    drive_only: DrivenHamiltonian
    cavity: Operator
    omega_q: float
    omega_cav: float
    omega_d1: float
    eps_eff: float
    params: dict = field(default_factory=dict)


def build_circuit_model(circ: KerrCircuit) -> CircuitModel:
    """Lab-frame Hamiltonian on normal-mode Fock states."""
    nm = normal_mode_reduce(circ)
    space, ops = _normal_ops(circ.truncation)
    n_ops = [o.dag() @ o for o in ops]
    static = sum((nm.frequencies[k] * n_ops[k] for k in range(3)), Operator(space, np.zeros((space.total_dim,) * 2)))
    static = static + Operator(space, _quartic(nm, circ.anharmonicities, ops))
    static = Operator(space, 0.5 * (static.matrix + static.matrix.conj().T))
    energies = np.linalg.eigvalsh(static.matrix)
    # Lowest states: ground, then the single excitations (qubit b lies lowest).
    w, v = np.linalg.eigh(static.matrix)
    dims = circ.truncation

    def level(n):
        k = (n[0] * dims[1] + n[1]) * dims[2] + n[2]
        return w[int(np.argmax(np.abs(v[k, :])))]

    e0 = level((0, 0, 0))
    omega_q = level((0, 1, 0)) - e0
    omega_cav = level((1, 0, 0)) - e0
    eps_eff = ghz(circ.eps_d1_ghz) * abs(nm.u[1, 1])
    omega_d1 = omega_q - circ.tilt * eps_eff

    bare = [sum(nm.u[i, k] * ops[k].matrix for k in range(3)) for i in range(3)]
    drive_op = Operator(space, -1j * (bare[1] - bare[1].conj().T))
    drive = DriveTone(drive_op, constant(ghz(circ.eps_d1_ghz)), omega_d1)
    mod_op = Operator(space, bare[2].conj().T @ bare[2])
    freqs = {"minus": abs(omega_cav - omega_q), "plus": omega_cav + omega_q}
    tones = [drive]
    if circ.delta_omega_c_ghz != 0.0:
        tones += [DriveTone(mod_op, constant(ghz(circ.delta_omega_c_ghz)), freqs[sb]) for sb in circ.sidebands]
    h = DrivenHamiltonian(static, tuple(tones))
    params = {
        "omega_q_ghz": omega_q / (2 * math.pi),
        "omega_cav_ghz": omega_cav / (2 * math.pi),
        "omega_d1_ghz": omega_d1 / (2 * math.pi),
        "eps_eff_ghz": eps_eff / (2 * math.pi),
        "g_ghz": nm.g_factor * circ.delta_omega_c_ghz,
        "ground_energy": float(energies[0]),
    }
    return CircuitModel(circ, nm, h, DrivenHamiltonian(static, (drive,)), ops[0], omega_q, omega_cav, omega_d1, eps_eff, params)


def qubit_mode_floquet(model: CircuitModel, n_samples: int = 0):
    """Floquet decomposition of the driven qubit-like normal mode on its own."""
    circ, nm = model.circuit, model.normal
    nb = circ.truncation[1]
    b = annihilation(nb)
    n = b.dag() @ b
    static = nm.frequencies[1] * n + (0.5 * nm.alpha1[1]) * (b.dag() @ b.dag() @ b @ b)
    drive = Operator(b.space, -1j * nm.u[1, 1] * (b.matrix - b.matrix.conj().T))
    h = DrivenHamiltonian(static, (DriveTone(drive, constant(ghz(circ.eps_d1_ghz)), model.omega_d1),))
    return floquet_decompose(h, model.omega_d1, IntegratorConfig(tolerance=1e-10), n_samples=n_samples)


def circuit_floquet_states(model: CircuitModel) -> tuple[StateVector, StateVector]:
    """Cavity vacuum x qubit Floquet mode (connected to |0>, |1>) x coupler vacuum."""
    sol = qubit_mode_floquet(model)
    na, _, nc = model.circuit.truncation
    vac_a = np.eye(na)[0]
    vac_c = np.eye(nc)[0]
    space = model.hamiltonian.space
    return tuple(StateVector(space, np.kron(np.kron(vac_a, sol.modes[0, k]), vac_c)) for k in (0, 1))


def predicted_d_inf(circ: KerrCircuit, nm: NormalModeData | None = None) -> float:
    """g / kappa with g = u_ca u_cb delta_omega_c (difference sideband)."""
    nm = nm or normal_mode_reduce(circ)
    return abs(nm.g_factor * ghz(circ.delta_omega_c_ghz)) / circ.kappa


def floquet_d_inf(model: CircuitModel, n_samples: int = 128) -> float:
    """g |M_0 - M_1| / kappa, with M_k the e^{-i w_d1 t} component of <phi_k(t)| b |phi_k(t)>.

    Reduces to ``predicted_d_inf`` for a two-level qubit (M_0 - M_1 = 1) and
    accounts for the higher transmon levels mixed in by a strong drive.
    """
    sol = qubit_mode_floquet(model, n_samples)
    b = annihilation(model.circuit.truncation[1]).matrix
    # Samples are equally spaced over one open period, so the mean is a Fourier coefficient.
    phase = np.exp(1j * sol.omega * (sol.times - sol.t0))
    m = [np.mean(np.array([np.vdot(f[k], b @ f[k]) for f in sol.modes]) * phase) for k in (0, 1)]
    return abs(model.normal.g_factor * ghz(model.circuit.delta_omega_c_ghz) * (m[0] - m[1])) / model.circuit.kappa


def simulate_circuit_readout(circ: KerrCircuit, times, rtol: float = 1e-8, atol: float = 1e-10) -> PointerTrajectory:
    model = build_circuit_model(circ)
    cav = model.cavity
    lind = LindbladModel(model.hamiltonian, ((cav, circ.kappa),))
    states = circuit_floquet_states(model)
    traj = pointer_separation(lind, states, times, cavity_op=cav, rtol=rtol, atol=atol)
    traj.params = circ.to_dict() | model.params | {
        "d_inf_predicted": predicted_d_inf(circ, model.normal),
        "d_inf_floquet": floquet_d_inf(model),
    }
    return traj


def fit_longitudinal(times, D) -> tuple[float, float, float]:
    """Least-squares fit of D = A (1 - exp(-k t / 2)); returns (A, k, rms residual)."""
    times = np.asarray(times, float)
    D = np.asarray(D, float)

    def model(t, amp, k):
        return amp * (1 - np.exp(-0.5 * k * t))

    k0 = 2.0 / max(times[-1] / 5, 1e-9)
    (amp, k), _ = curve_fit(model, times, D, p0=(max(D[-1], 1e-12), k0))
    rms = float(np.sqrt(np.mean((model(times, amp, k) - D) ** 2)))
    return float(amp), float(k), rms
