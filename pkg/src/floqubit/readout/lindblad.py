"""Lindblad master equation for ``DrivenHamiltonian`` models.

The density matrix is integrated directly with an adaptive 8th-order
Runge-Kutta method. The generator maps Hermitian matrices to Hermitian,
traceless ones, so trace and Hermiticity hold to rounding; they are checked at
every output sample, never enforced.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import sparse
from scipy.integrate import solve_ivp

from ..core import DensityMatrix, Operator
from ..hamiltonian import DrivenHamiltonian


class LindbladError(RuntimeError):
    def __init__(self, message: str, diagnostics: dict):
        super().__init__(f"{message}: {diagnostics}")
        self.diagnostics = diagnostics


@dataclass(frozen=True)
class LindbladModel:
    """d rho/dt = -i[H, rho] + sum_k rate_k (L rho L^+ - {L^+ L, rho}/2)."""

    h: DrivenHamiltonian
    collapse_ops: tuple[tuple[Operator, float], ...] = field(default_factory=tuple)

    def __post_init__(self):
        ops = tuple((op, float(rate)) for op, rate in self.collapse_ops)
        for op, rate in ops:
            if rate < 0:
                raise ValueError("collapse rates must be >= 0")
            if op.space != self.h.space:
                raise ValueError("collapse operator acts on a different space")
        object.__setattr__(self, "collapse_ops", ops)

    def generator(self):
        """Right-hand side f(t, rho) acting on (d, d) Hermitian arrays.

        Operators are held in CSR form when that is sparse enough to pay off.
        """
        d = self.h.dim
        dense = [op.matrix for op in [self.h.static, *(t.op for t in self.h.tones)]]
        nnz = sum(np.count_nonzero(m) for m in dense)
        fmt = sparse.csr_matrix if d >= 32 and nnz < 0.2 * d * d * len(dense) else np.asarray
        ls = [np.sqrt(rate) * op.matrix for op, rate in self.collapse_ops if rate > 0]
        drain = sum((l.conj().T @ l for l in ls), np.zeros((d, d), complex))
        # K = -i H_static - L^+ L / 2; the tones are added per call.
        k_static = fmt(-1j * self.h.static.matrix - 0.5 * drain)
        tone_ops = [fmt(-1j * t.op.matrix) for t in self.h.tones]
        ls = [fmt(l) for l in ls]
        tones = self.h.tones

        def rhs(t: float, rho: np.ndarray) -> np.ndarray:
            # The K rho + h.c. shortcut below is only the Lindbladian on Hermitian
            # input; on the anti-Hermitian rounding residue it would be unstable.
            rho = 0.5 * (rho + rho.conj().T)
            out = k_static @ rho
            for tone, op in zip(tones, tone_ops):
                c = float(tone.envelope(t)) * np.cos(tone.frequency * t + tone.phase)
                if c:
                    out = out + c * (op @ rho)
            out = out + out.conj().T
            for l in ls:
                x = l @ rho
                out = out + (l @ x.conj().T).conj().T
            return out

        return rhs


def lindblad_evolve(
    model: LindbladModel,
    rho0: DensityMatrix,
    times,
    rtol: float = 1e-9,
    atol: float = 1e-11,
    max_step: float | None = None,
    check: bool = True,
) -> list[DensityMatrix]:
    """Density matrices at every entry of ``times`` (first entry is where rho0 is given)."""
    times = np.asarray(times, dtype=float)
    if times.ndim != 1 or times.size == 0 or np.any(np.diff(times) <= 0):
        raise ValueError("times must be a nonempty increasing grid")
    if rho0.space != model.h.space:
        raise ValueError("initial state lives on a different space")
    rho0.check()
    d = model.h.dim
    if times.size == 1:
        return [rho0]
    rhs = model.generator()
    sol = solve_ivp(
        lambda t, y: rhs(t, y.reshape(d, d)).reshape(-1),
        (times[0], times[-1]),
        rho0.matrix.reshape(-1).copy(),
        method="DOP853",
        t_eval=times,
        rtol=rtol,
        atol=atol,
        max_step=max_step if max_step is not None else np.inf,
    )
    if not sol.success:
        raise LindbladError("integration failed", {"message": sol.message, "nfev": sol.nfev})
    out = []
    for t, y in zip(sol.t, sol.y.T):
        m = y.reshape(d, d)
        if check:
            herm = float(np.max(np.abs(m - m.conj().T)))
            tr = abs(np.trace(m) - 1.0)
            lam = float(np.linalg.eigvalsh(0.5 * (m + m.conj().T))[0])
            if herm > 1e-9 or tr > 1e-8 or lam < -1e-6:
                raise LindbladError(
                    "density matrix left the physical set",
                    {"t": float(t), "hermiticity": herm, "trace_error": tr, "min_eig": lam,
                     "rtol": rtol, "atol": atol, "nfev": sol.nfev},
                )
        out.append(DensityMatrix(model.h.space, m))
    return out
