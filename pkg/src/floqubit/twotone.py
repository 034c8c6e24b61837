"""Two-tone quasiphase spectra and anticrossing extraction.

Frequency ratios are written r = w_d2 / w_d1 = p / q. For a fixed numerator p
the denominator q is swept; the common period of both tones is
T = 2 pi q / w_d1 = 2 pi p / w_d2, and the propagator over T is diagonalized.
Its eigenphases are folded into [-pi/2, pi/2] to remove the sign ambiguity of
the propagator eigenvalues.

Extraction keeps, for every numerator, the discrete minima of the quasiphase
difference (triplets f[q-1] >= f[q] <= f[q+1]) whose ratio interval overlaps a
surviving triplet of the previous numerator, and intersects the survivors.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .hamiltonian import DrivenHamiltonian
from .parallel import pmap
from .propagator import ConvergenceError, IntegratorConfig, propagate

logger = logging.getLogger(__name__)

TWO_PI = 2.0 * math.pi
HamiltonianBuilder = Callable[[float], DrivenHamiltonian]


class AnticrossingError(RuntimeError):
    """Extraction ended with no surviving interval."""

    def __init__(self, message: str, audit: list[dict]):
        super().__init__(message)
        self.audit = audit


def fold_quasiphase(theta):
    """Fold eigenphases from [-pi, pi] into [-pi/2, pi/2]."""
    theta = np.asarray(theta, dtype=float)
    out = np.where(np.abs(theta) <= 0.5 * math.pi, theta, theta - np.sign(theta) * math.pi)
    return out if out.ndim else float(out)


def quasiphase_difference(phis: np.ndarray, wrap: bool = False) -> np.ndarray:
    """|phi_0 - phi_1| of folded quasiphases, in [0, pi].

    With ``wrap`` the difference is further mapped to [0, pi/2] by
    d -> min(d, pi - d).
    """
    d = np.abs(phis[..., 0] - phis[..., 1])
    if wrap:
        d = np.minimum(d, math.pi - d)
    return d


@dataclass(frozen=True)
class RatioGrid:
    omega_d1: float
    numerators: tuple[int, ...]
    window: tuple[float, float] = (0.01, 0.2)
    max_points: int = 200

    def __post_init__(self):
        object.__setattr__(self, "numerators", tuple(int(p) for p in self.numerators))
        lo, hi = self.window
        if not 0 < lo < hi:
            raise ValueError(f"invalid ratio window {self.window}")
        if any(p < 1 for p in self.numerators):
            raise ValueError("numerators must be >= 1")

    def denominators(self, p: int, window: tuple[float, float] | None = None) -> np.ndarray:
        lo, hi = window or self.window
        q_min = max(p + 1, math.ceil(p / hi - 1e-9))
        q_max = math.floor(p / lo + 1e-9)
        if q_max < q_min:
            return np.zeros(0, dtype=int)
        qs = np.arange(q_min, q_max + 1)
        if qs.size > self.max_points:
            # Keep a contiguous block around the ratio-window midpoint.
            q_c = p / (0.5 * (lo + hi))
            start = int(round(q_c - 0.5 * self.max_points))
            start = min(max(start, q_min), q_max - self.max_points + 1)
            qs = np.arange(start, start + self.max_points)
            logger.info("p=%d: %d denominators cropped to %d", p, q_max - q_min + 1, self.max_points)
        return qs

    def omega_d2(self, p: int, q) -> np.ndarray:
        return self.omega_d1 * p / np.asarray(q, dtype=float)

    def period(self, q: int) -> float:
        return TWO_PI * q / self.omega_d1


@dataclass
class QuasiphaseSpectrum:
    p: int
    q: np.ndarray
    omega_d2: np.ndarray
    ratio: np.ndarray
    phases: np.ndarray  # folded, shape (n_q, dim), sorted descending per row
    est_error: np.ndarray
    failed: list[dict] = field(default_factory=list)
    metadata: dict = field(default_factory=dict)

    @property
    def valid(self) -> np.ndarray:
        return np.all(np.isfinite(self.phases), axis=1)

    def difference(self, wrap: bool = False) -> np.ndarray:
        return quasiphase_difference(self.phases, wrap)

    def csv_rows(self) -> tuple[list[str], list[list[float]]]:
        header = ["p", "q", "omega_d2_over_omega_d1"] + [f"phiF_{k}" for k in range(self.phases.shape[1])]
        rows = [
            [self.p, int(q), float(r)] + [float(x) for x in ph]
            for q, r, ph in zip(self.q, self.ratio, self.phases)
        ]
        return header, rows


def _point(args) -> tuple[np.ndarray, float, str | None]:
    builder, omega_d2, period, cfg = args
    h = builder(omega_d2)
    try:
        res = propagate(h, 0.0, period, cfg)
    except ConvergenceError as exc:
        return np.full(h.dim, np.nan), math.nan, str(exc)
    theta = np.angle(np.linalg.eigvals(res.U.matrix))
    return np.sort(fold_quasiphase(theta))[::-1], res.est_error, None


def quasiphase_spectrum(
    builder: HamiltonianBuilder,
    grid: RatioGrid,
    p: int,
    cfg: IntegratorConfig = IntegratorConfig(),
    qs=None,
    workers: int | None = 1,
) -> QuasiphaseSpectrum:
    """Folded quasiphases of ``builder(w_d2)`` for every q of numerator ``p``.

    ``builder`` must be picklable when ``workers > 1``.
    """
    qs = grid.denominators(p) if qs is None else np.asarray(qs, dtype=int)
    w2 = grid.omega_d2(p, qs)
    jobs = [(builder, float(w), grid.period(int(q)), cfg) for q, w in zip(qs, w2)]
    out = pmap(_point, jobs, workers)
    dim = max((len(o[0]) for o in out), default=2)
    phases = np.array([o[0] for o in out]).reshape(len(out), dim)
    failed = [{"q": int(q), "error": o[2]} for q, o in zip(qs, out) if o[2] is not None]
    for f in failed:
        logger.warning("p=%d q=%d: propagation failed, point skipped", p, f["q"])
    return QuasiphaseSpectrum(
        p=p,
        q=qs,
        omega_d2=w2,
        ratio=w2 / grid.omega_d1,
        phases=phases,
        est_error=np.array([o[1] for o in out]),
        failed=failed,
        metadata={"integrator": cfg.to_dict(), "omega_d1": grid.omega_d1},
    )


@dataclass(frozen=True)
class Triplet:
    p: int
    q: int
    lo: float  # omega_d2 at q + 1
    hi: float  # omega_d2 at q - 1
    value: float

    def overlaps(self, other: Triplet | tuple[float, float]) -> bool:
        lo, hi = (other.lo, other.hi) if isinstance(other, Triplet) else other
        return max(self.lo, lo) <= min(self.hi, hi)


def find_triplets(spec: QuasiphaseSpectrum, wrap: bool = False) -> list[Triplet]:
    """Discrete minima of the quasiphase difference along consecutive q.

    Runs of equal minima collapse into one triplet centred on the run's middle
    index whose interval covers the whole run.
    """
    ok = spec.valid
    q = spec.q[ok]
    w = spec.omega_d2[ok]
    f = spec.difference(wrap)[ok]
    centres = [
        i
        for i in range(1, len(f) - 1)
        if f[i - 1] >= f[i] <= f[i + 1] and q[i + 1] - q[i - 1] == 2
    ]
    out: list[Triplet] = []
    i = 0
    while i < len(centres):
        j = i
        while j + 1 < len(centres) and centres[j + 1] == centres[j] + 1 and f[centres[j + 1]] == f[centres[i]]:
            j += 1
        first, last = centres[i], centres[j]
        mid = centres[(i + j) // 2]
        # omega_d2 decreases with q.
        out.append(Triplet(spec.p, int(q[mid]), float(w[last + 1]), float(w[first - 1]), float(f[mid])))
        i = j + 1
    return out


@dataclass
class AnticrossingResult:
    """Surviving intervals (rad/ns) with the (p, q) of the narrowest triplet behind each."""

    candidates: list[tuple[float, float]]
    sources: list[tuple[int, int]]
    audit: list[dict]
    omega_d1: float

    @property
    def unique(self) -> bool:
        return len(self.candidates) == 1

    @property
    def interval(self) -> tuple[float, float]:
        if not self.unique:
            raise AnticrossingError(f"{len(self.candidates)} candidate intervals survive", self.audit)
        return self.candidates[0]

    @property
    def centre(self) -> float:
        lo, hi = self.interval
        return 0.5 * (lo + hi)

    @property
    def ratio_interval(self) -> tuple[float, float]:
        lo, hi = self.interval
        return lo / self.omega_d1, hi / self.omega_d1

    @property
    def width(self) -> float:
        lo, hi = self.interval
        return hi - lo

    @property
    def p_max(self) -> int:
        self.interval
        return self.sources[0][0]

    @property
    def q_max(self) -> int:
        self.interval
        return self.sources[0][1]

    @property
    def precision(self) -> dict:
        """Bound in ratio units for the unique interval."""
        return precision_bound(self.p_max, self.q_max)

    def to_dict(self) -> dict:
        out = {
            "candidates_rad_per_ns": [list(c) for c in self.candidates],
            "candidates_ratio": [[c[0] / self.omega_d1, c[1] / self.omega_d1] for c in self.candidates],
            "sources_pq": [list(s) for s in self.sources],
            "unique": self.unique,
            "audit": self.audit,
        }
        if self.unique:
            out["precision_bound_ratio"] = self.precision
        return out


def _trip_dict(t: Triplet, omega_d1: float) -> dict:
    return {"q": t.q, "ratio_lo": t.lo / omega_d1, "ratio_hi": t.hi / omega_d1, "value": t.value}


def extract_anticrossing(spectra: list[QuasiphaseSpectrum], wrap: bool = False) -> AnticrossingResult:
    """Locate the resonance shared by all numerators.

    A numerator without any triplet is skipped and noted in the audit trail.
    """
    if len(spectra) < 2:
        raise ValueError("need spectra for at least two numerators")
    if any(int(np.sum(s.valid)) < 3 for s in spectra):
        raise ValueError("each spectrum needs at least three valid points")
    spectra = sorted(spectra, key=lambda s: s.p)
    omega_d1 = float(spectra[0].metadata.get("omega_d1", spectra[0].omega_d2[0] / spectra[0].ratio[0]))
    audit: list[dict] = []
    previous: list[Triplet] | None = None
    candidates: list[tuple[float, float]] = []
    sources: list[Triplet] = []
    for spec in spectra:
        trips = find_triplets(spec, wrap)
        entry = {"p": spec.p, "triplets": [_trip_dict(t, omega_d1) for t in trips]}
        if not trips:
            entry["skipped"] = True
            audit.append(entry)
            continue
        if previous is None:
            kept, dropped = trips, []
            candidates = [(t.lo, t.hi) for t in trips]
            sources = list(trips)
        else:
            kept = [t for t in trips if any(t.overlaps(o) for o in previous)]
            dropped = [t for t in trips if t not in kept]
            new, new_src = [], []
            for c, src in zip(candidates, sources):
                for t in kept:
                    lo, hi = max(c[0], t.lo), min(c[1], t.hi)
                    if lo <= hi and (lo, hi) not in new:
                        new.append((lo, hi))
                        new_src.append(t if t.hi - t.lo <= src.hi - src.lo else src)
            candidates, sources = new, new_src
        entry["kept"] = [t.q for t in kept]
        entry["discarded"] = [t.q for t in dropped]
        entry["candidates_ratio"] = [[lo / omega_d1, hi / omega_d1] for lo, hi in candidates]
        audit.append(entry)
        if not kept or not candidates:
            raise AnticrossingError(f"no surviving interval after numerator p={spec.p}", audit)
        previous = kept
    if previous is None:
        raise AnticrossingError("no numerator produced a discrete minimum", audit)
    return AnticrossingResult(candidates, [(t.p, t.q) for t in sources], audit, omega_d1)


def precision_bound(p_max: int, q_max: int) -> dict:
    """Ratio-grid spacing around q_max: exact segment size and its 2p/q^2 estimate."""
    if not q_max > p_max >= 1:
        raise ValueError("need q_max > p_max >= 1")
    exact = p_max / (q_max - 1) - p_max / (q_max + 1)
    return {"exact": exact, "approx": 2.0 * p_max / q_max**2}


def scan_and_extract(
    builder: HamiltonianBuilder,
    grid: RatioGrid,
    cfg: IntegratorConfig = IntegratorConfig(),
    refine_after: int | None = None,
    margin: int = 2,
    workers: int | None = 1,
    wrap: bool = False,
) -> tuple[list[QuasiphaseSpectrum], AnticrossingResult]:
    """Scan every numerator of ``grid`` and run the extraction.

    Numerators above ``refine_after`` are only sampled on the denominators
    whose triplets could touch the current candidate intervals (plus
    ``margin`` extra q on each side); this leaves the extraction result
    unchanged while skipping far-away points.
    """
    spectra: list[QuasiphaseSpectrum] = []
    for p in sorted(grid.numerators):
        qs = None
        if refine_after is not None and p > refine_after and len(spectra) >= 2:
            partial = extract_anticrossing(spectra, wrap)
            sel = set()
            for lo, hi in partial.candidates:
                # Triplet centred on q spans [p/(q+1), p/(q-1)] in ratio.
                q_lo = math.floor(p * grid.omega_d1 / hi) - margin
                q_hi = math.ceil(p * grid.omega_d1 / lo) + margin
                sel.update(range(max(p + 1, q_lo), q_hi + 1))
            qs = np.array(sorted(sel), dtype=int)
        spectra.append(quasiphase_spectrum(builder, grid, p, cfg, qs=qs, workers=workers))
        logger.info("p=%d scanned (%d points)", p, len(spectra[-1].q))
    return spectra, extract_anticrossing(spectra, wrap)
