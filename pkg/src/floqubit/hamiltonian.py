"""Time-dependent Hamiltonians: a static part plus cosine drive tones.

Units: time in ns, angular frequencies and amplitudes in rad/ns. Builders that
take user-facing parameters accept ordinary frequencies in GHz where noted.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .core import HilbertSpace, Operator, annihilation, embed, sigma_x, sigma_z, tensor

TWO_PI = 2.0 * math.pi
ENVELOPE_KINDS = ("constant", "linear-ramp", "tanh-ramp", "flat-top")


def ghz(f: float) -> float:
    """Ordinary frequency in GHz to angular frequency in rad/ns."""
    return TWO_PI * f


def _tanh_step(x: np.ndarray, steepness: float) -> np.ndarray:
    # Sigmoid pinned to exactly 0 at x=0 and 1 at x=1.
    x = np.clip(x, 0.0, 1.0)
    k = steepness
    return (np.tanh(k * (2.0 * x - 1.0)) + math.tanh(k)) / (2.0 * math.tanh(k))


@dataclass(frozen=True)
class Envelope:
    """Drive amplitude profile.

    ``flat-top`` rises over ``ramp`` with ``ramp_shape`` ("tanh" or "linear"),
    holds for ``hold`` and falls back to zero over another ``ramp``. All
    non-constant shapes start at ``start`` and are zero before it.
    """

    kind: str = "constant"
    amplitude: float = 0.0
    ramp: float = 0.0
    hold: float = 0.0
    start: float = 0.0
    steepness: float = 3.0
    ramp_shape: str = "tanh"

    def __post_init__(self):
        if self.kind not in ENVELOPE_KINDS:
            raise ValueError(f"unknown envelope kind {self.kind!r}; expected one of {ENVELOPE_KINDS}")
        if self.amplitude < 0:
            raise ValueError("envelope amplitude must be >= 0 (use the tone phase for sign)")
        if self.kind != "constant" and self.ramp <= 0:
            raise ValueError(f"{self.kind} envelope needs ramp > 0")
        if self.hold < 0:
            raise ValueError("hold must be >= 0")
        if self.ramp_shape not in ("tanh", "linear"):
            raise ValueError(f"unknown ramp_shape {self.ramp_shape!r}")

    @property
    def end(self) -> float:
        """Time after which the envelope no longer changes."""
        if self.kind == "constant":
            return self.start
        if self.kind == "flat-top":
            return self.start + 2 * self.ramp + self.hold
        return self.start + self.ramp

    @property
    def is_constant(self) -> bool:
        return self.kind == "constant" or self.amplitude == 0.0

    def _rise(self, x: np.ndarray, shape: str) -> np.ndarray:
        if shape == "linear":
            return np.clip(x, 0.0, 1.0)
        return _tanh_step(x, self.steepness)

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        if self.kind == "constant":
            return np.full_like(t, self.amplitude)
        x = (t - self.start) / self.ramp
        if self.kind == "linear-ramp":
            s = self._rise(x, "linear")
        elif self.kind == "tanh-ramp":
            s = self._rise(x, "tanh")
        else:
            up = self._rise(x, self.ramp_shape)
            down = self._rise((t - self.start - self.ramp - self.hold) / self.ramp, self.ramp_shape)
            s = up - down
        return self.amplitude * s

    def area(self) -> float:
        """Time integral of a flat-top envelope."""
        if self.kind != "flat-top":
            raise ValueError(f"{self.kind} envelope has unbounded area")
        # Both rise shapes are point-symmetric about the ramp midpoint.
        return self.amplitude * (self.ramp + self.hold)

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "amplitude": self.amplitude,
            "ramp": self.ramp,
            "hold": self.hold,
            "start": self.start,
            "steepness": self.steepness,
            "ramp_shape": self.ramp_shape,
        }


def constant(amplitude: float) -> Envelope:
    return Envelope("constant", amplitude)


@dataclass(frozen=True)
class DriveTone:
    op: Operator
    envelope: Envelope
    frequency: float
    phase: float = 0.0

    def __post_init__(self):
        if self.frequency < 0:
            raise ValueError("tone frequency must be >= 0")
        if not self.op.is_hermitian:
            raise ValueError("drive operator must be Hermitian")


@dataclass(frozen=True)
class DrivenHamiltonian:
    """H(t) = static + sum_k envelope_k(t) cos(w_k t + phase_k) op_k."""

    static: Operator
    tones: tuple[DriveTone, ...] = field(default_factory=tuple)

    def __post_init__(self):
        tones = tuple(self.tones)
        if not self.static.is_hermitian:
            raise ValueError("static part must be Hermitian")
        for tone in tones:
            if tone.op.space != self.static.space:
                raise ValueError("all drive operators must share the static part's space")
        object.__setattr__(self, "tones", tones)
        ops = np.array([tone.op.matrix for tone in tones]) if tones else np.zeros((0,) + self.static.matrix.shape)
        object.__setattr__(self, "_ops", ops)

    @property
    def space(self) -> HilbertSpace:
        return self.static.space

    @property
    def dim(self) -> int:
        return self.static.dim

    @property
    def has_constant_envelopes(self) -> bool:
        return all(t.envelope.is_constant for t in self.tones)

    def coefficients(self, times) -> np.ndarray:
        """Tone coefficients with shape (len(times), n_tones)."""
        times = np.atleast_1d(np.asarray(times, dtype=float))
        cols = [
            tone.envelope(times) * np.cos(tone.frequency * times + tone.phase) for tone in self.tones
        ]
        if not cols:
            return np.zeros((times.size, 0))
        return np.stack(cols, axis=1)

    def matrices(self, times) -> np.ndarray:
        """H evaluated on a time grid, shape (len(times), d, d)."""
        c = self.coefficients(times)
        d = self.dim
        if not c.shape[1]:
            return np.broadcast_to(self.static.matrix, (c.shape[0], d, d)).copy()
        h = (c.astype(complex) @ self._ops.reshape(len(self.tones), d * d)).reshape(-1, d, d)
        h += self.static.matrix
        return h

    def evaluate(self, t: float) -> Operator:
        return Operator(self.space, self.matrices([t])[0])

    def fastest_period(self) -> float:
        """Shortest time scale: min of drive periods and 2pi / static spectral range."""
        w = np.linalg.eigvalsh(self.static.matrix)
        rates = [float(w[-1] - w[0])]
        # A drive term itself sets a rotation rate comparable to its operator norm.
        for tone in self.tones:
            rates.append(tone.frequency)
            amp = float(tone.envelope.amplitude)
            rates.append(amp * float(np.linalg.norm(tone.op.matrix, 2)))
        fastest = max(rates)
        if fastest <= 0:
            return math.inf
        return TWO_PI / fastest

    def with_tones(self, tones: Sequence[DriveTone]) -> DrivenHamiltonian:
        return DrivenHamiltonian(self.static, tuple(tones))


def evaluate(h: DrivenHamiltonian, t: float) -> Operator:
    return h.evaluate(t)


def build_tls_two_tone(
    omega0: float,
    eps_d1: float,
    omega_d1: float,
    eps_d2: float = 0.0,
    omega_d2: float = 0.0,
    env_d1: Envelope | None = None,
    env_d2: Envelope | None = None,
) -> DrivenHamiltonian:
    """(w0/2) sz + eps_d1 cos(w_d1 t) sx + eps_d2 cos(w_d2 t) sz, all in rad/ns.

    Passing an envelope overrides the constant amplitude of that tone.
    """
    if omega0 <= 0 or omega_d1 <= 0:
        raise ValueError("frequencies must be > 0")
    sz, sx = sigma_z(), sigma_x()
    tones = [DriveTone(sx, env_d1 if env_d1 is not None else constant(eps_d1), omega_d1)]
    if env_d2 is not None or eps_d2 != 0.0:
        if omega_d2 <= 0:
            raise ValueError("second tone frequency must be > 0")
        tones.append(DriveTone(sz, env_d2 if env_d2 is not None else constant(eps_d2), omega_d2))
    return DrivenHamiltonian(0.5 * omega0 * sz, tuple(tones))


def build_qubit_cavity(
    omega0: float,
    eps_d1: float,
    omega_d1: float,
    omega_r: float,
    g_mod: float,
    n_cavity: int = 20,
    sidebands: Sequence[str] = ("minus", "plus"),
) -> DrivenHamiltonian:
    """Driven qubit transversally coupled to a cavity through a modulated g(t).

    g(t) = g_mod * [cos((w_r - w0) t) + cos((w_r + w0) t)] by default; the
    ``sidebands`` argument keeps only "minus" and/or "plus". Qubit is factor 0,
    cavity factor 1.
    """
    space = HilbertSpace((2, n_cavity))
    a = embed(annihilation(n_cavity), 1, space)
    sx = embed(sigma_x(), 0, space)
    sz = embed(sigma_z(), 0, space)
    static = 0.5 * omega0 * sz + omega_r * (a.dag() @ a)
    coupling = tensor(sigma_x(), annihilation(n_cavity) + annihilation(n_cavity).dag())
    tones = [DriveTone(sx, constant(eps_d1), omega_d1)]
    freqs = {"minus": abs(omega_r - omega0), "plus": omega_r + omega0}
    for sb in sidebands:
        if sb not in freqs:
            raise ValueError(f"unknown sideband {sb!r}")
        if g_mod != 0.0:
            tones.append(DriveTone(coupling, constant(g_mod), freqs[sb]))
    return DrivenHamiltonian(static, tuple(tones))

