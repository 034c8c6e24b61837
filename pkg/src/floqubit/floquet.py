"""Single-tone Floquet decomposition and the rotating-wave TLS solution.

Quasienergies come from the one-period propagator, U(t0 + T, t0) |phi_n(t0)> =
exp(-i eps_n T) |phi_n(t0)>, folded into the first Brillouin zone
[-w/2, w/2). Modes at later times follow from
|phi_n(t)> = exp(+i eps_n (t - t0)) U(t, t0) |phi_n(t0)>.
"""
from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import schur

from .core import StateVector
from .hamiltonian import DrivenHamiltonian
from .propagator import IntegratorConfig, propagate

TWO_PI = 2.0 * math.pi
DEGENERACY_TOL = 1e-10


def fold_quasienergy(eps, omega: float):
    """Map quasienergies into [-omega/2, omega/2)."""
    return np.mod(np.asarray(eps) + 0.5 * omega, omega) - 0.5 * omega


def _fix_global_phase(vecs: np.ndarray) -> np.ndarray:
    # Largest-magnitude amplitude made real positive, column by column.
    out = vecs.copy()
    for n in range(out.shape[1]):
        k = int(np.argmax(np.abs(out[:, n])))
        out[:, n] *= np.exp(-1j * np.angle(out[k, n]))
    return out


def _label_modes(vecs: np.ndarray, quasi: np.ndarray, reference: np.ndarray) -> np.ndarray:
    """Order of modes matching reference states, by greedy maximal overlap.

    Ties (overlaps equal within 1e-9) go to the mode with the lower quasienergy.
    """
    d = vecs.shape[1]
    overlap = np.abs(reference.conj().T @ vecs) ** 2  # [ref k, mode n]
    order = np.full(d, -1)
    free_ref, free_mode = set(range(d)), set(range(d))
    while free_ref:
        best = None
        for k in sorted(free_ref):
            for n in sorted(free_mode, key=lambda m: quasi[m]):
                val = overlap[k, n]
                if best is None or val > best[0] + 1e-9:
                    best = (val, k, n)
        _, k, n = best
        order[k] = n
        free_ref.discard(k)
        free_mode.discard(n)
    return order


def reference_basis(h: DrivenHamiltonian) -> np.ndarray:
    """Undriven eigenstates, column k being the one closest to basis state k."""
    w, v = np.linalg.eigh(h.static.matrix)
    d = v.shape[0]
    order = _label_modes(v, w, np.eye(d))
    return v[:, order]


@dataclass(frozen=True, eq=False)
class FloquetSolution:
    """Quasienergies and periodic modes of a single-tone Hamiltonian.

    Mode ``n`` is adiabatically connected to undriven eigenstate ``n`` (see
    ``reference_basis``). ``modes`` has shape (len(times), n_modes, dim).
    """

    quasienergies: np.ndarray
    omega: float
    t0: float
    times: np.ndarray
    modes: np.ndarray
    hamiltonian: DrivenHamiltonian = field(repr=False)
    config: IntegratorConfig = field(repr=False)
    degenerate: bool = False
    est_error: float = math.nan

    @property
    def period(self) -> float:
        return TWO_PI / self.omega

    def modes_at(self, t: float) -> np.ndarray:
        """Exact modes at any time t as columns of a (dim, n_modes) array."""
        tau = self.t0 + math.fmod(t - self.t0, self.period)
        if tau < self.t0:
            tau += self.period
        phi0 = self.modes[0].T
        if tau - self.t0 < 1e-14:
            return phi0.copy()
        u = propagate(self.hamiltonian, self.t0, tau, self.config).U.matrix
        return (u @ phi0) * np.exp(1j * self.quasienergies * (tau - self.t0))

    def mode_states(self, t: float) -> list[StateVector]:
        cols = self.modes_at(t)
        return [StateVector(self.hamiltonian.space, cols[:, n]) for n in range(cols.shape[1])]

    def nearest_modes(self, t: float) -> np.ndarray:
        tau = math.fmod(t - self.t0, self.period)
        if tau < 0:
            tau += self.period
        i = int(np.argmin(np.abs(self.times - self.t0 - tau)))
        return self.modes[i].T

    def gap(self, i: int = 0, j: int = 1) -> float:
        """Folded quasienergy difference eps_i - eps_j."""
        return float(fold_quasienergy(self.quasienergies[i] - self.quasienergies[j], self.omega))

    def to_json(self) -> str:
        return json.dumps(
            {
                "quasienergies": self.quasienergies.tolist(),
                "omega": self.omega,
                "period": self.period,
                "t0": self.t0,
                "degenerate": self.degenerate,
                "est_error": self.est_error,
                "integrator": self.config.to_dict(),
            },
            indent=2,
        )

    def csv_rows(self) -> tuple[list[str], list[list[float]]]:
        header = ["t"]
        n_modes, dim = self.modes.shape[1], self.modes.shape[2]
        for n in range(n_modes):
            for k in range(dim):
                header += [f"re_mode{n}_{k}", f"im_mode{n}_{k}"]
        rows = []
        for t, m in zip(self.times, self.modes):
            row = [float(t)]
            for n in range(n_modes):
                for k in range(dim):
                    row += [float(m[n, k].real), float(m[n, k].imag)]
            rows.append(row)
        return header, rows


def floquet_decompose(
    h: DrivenHamiltonian,
    omega: float,
    cfg: IntegratorConfig = IntegratorConfig(),
    t0: float = 0.0,
    n_samples: int = 0,
    reference: np.ndarray | None = None,
) -> FloquetSolution:
    """Floquet modes and quasienergies of ``h`` with drive frequency ``omega``.

    ``n_samples`` extra equally spaced times in [t0, t0 + T) are stored in the
    solution (t0 is always stored). ``reference`` overrides the basis used to
    label the modes (columns, default: undriven eigenstates).
    """
    if not h.has_constant_envelopes:
        raise ValueError("Floquet decomposition needs constant envelopes")
    for tone in h.tones:
        ratio = tone.frequency / omega
        if abs(ratio - round(ratio)) > 1e-9:
            raise ValueError(f"tone frequency {tone.frequency} is not a multiple of omega={omega}")
    period = TWO_PI / omega
    res = propagate(h, t0, t0 + period, cfg)
    tmat, z = schur(res.U.matrix, output="complex")
    lam = np.diag(tmat)
    quasi = fold_quasienergy(-np.angle(lam) / period, omega)

    phases = np.sort(np.mod(np.angle(lam), TWO_PI))
    gaps = np.diff(np.concatenate([phases, [phases[0] + TWO_PI]])) if phases.size > 1 else np.array([np.inf])
    degenerate = bool(np.min(gaps) < DEGENERACY_TOL)

    ref = reference_basis(h) if reference is None else np.asarray(reference)
    order = _label_modes(z, quasi, ref)
    vecs = _fix_global_phase(z[:, order])
    quasi = quasi[order]

    times = [t0]
    frames = [vecs.T.copy()]
    if n_samples > 0:
        grid = t0 + period * np.arange(1, n_samples + 1) / (n_samples + 1)
        u_prev = np.eye(h.dim, dtype=complex)
        t_prev = t0
        for t in grid:
            u_prev = propagate(h, t_prev, t, cfg).U.matrix @ u_prev
            t_prev = t
            frames.append(((u_prev @ vecs) * np.exp(1j * quasi * (t - t0))).T)
            times.append(t)
    return FloquetSolution(
        quasienergies=quasi,
        omega=omega,
        t0=t0,
        times=np.array(times),
        modes=np.array(frames),
        hamiltonian=h,
        config=cfg,
        degenerate=degenerate,
        est_error=res.est_error,
    )


def floquet_population(psi: StateVector, solution: FloquetSolution, t: float, exact: bool = True) -> np.ndarray:
    """Populations |<phi_n(t)|psi>|^2 of ``psi`` (given at time t) on the Floquet modes."""
    cols = solution.modes_at(t) if exact else solution.nearest_modes(t)
    p = np.abs(cols.conj().T @ psi.amplitudes) ** 2
    total = float(p.sum())
    if total < 0.999 * psi.norm**2:
        warnings.warn(f"Floquet basis looks incomplete: populations sum to {total:.6f}", stacklevel=2)
    return p


@dataclass(frozen=True)
class RwaTlsSolution:
    """Rotating-wave Floquet solution of (w0/2) sz + eps cos(w_d t) sx.

    ``convention="standard"`` uses +-sqrt((D/2)^2 + (eps/2)^2), the textbook
    result for a cosine drive of amplitude eps, which the exact numerics follow.
    ``convention="doubled"`` uses +-sqrt((D/2)^2 + eps^2), a gap twice as large
    on resonance.
    """

    detuning: float
    eps_d1: float
    omega_d1: float
    convention: str = "standard"

    def __post_init__(self):
        if self.convention not in ("doubled", "standard"):
            raise ValueError(f"unknown convention {self.convention!r}")

    @property
    def coupling(self) -> float:
        return self.eps_d1 if self.convention == "doubled" else 0.5 * self.eps_d1

    @property
    def quasienergies(self) -> tuple[float, float]:
        e = math.sqrt((0.5 * self.detuning) ** 2 + self.coupling**2)
        return (e, -e)

    @property
    def gap(self) -> float:
        return 2.0 * self.quasienergies[0]

    def mode(self, n: int, t: float) -> np.ndarray:
        e = self.quasienergies[n]
        c = abs(self.coupling)
        w = self.omega_d1
        lower = e - 0.5 * self.detuning
        norm = math.sqrt(c * c + lower * lower)
        return np.exp(0.5j * w * t) / norm * np.array([c * np.exp(-1j * w * t), lower])

    def modes(self, t: float) -> np.ndarray:
        return np.stack([self.mode(0, t), self.mode(1, t)], axis=1)


def rwa_tls(omega0: float, omega_d1: float, eps_d1: float, convention: str = "standard") -> RwaTlsSolution:
    return RwaTlsSolution(omega0 - omega_d1, eps_d1, omega_d1, convention)
