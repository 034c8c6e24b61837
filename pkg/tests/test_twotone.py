import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from floqubit.experiments import TlsTwoTone
from floqubit.floquet import floquet_decompose, fold_quasienergy
from floqubit.hamiltonian import build_tls_two_tone
from floqubit.propagator import IntegratorConfig
from floqubit.twotone import (
    AnticrossingError,
    QuasiphaseSpectrum,
    RatioGrid,
    extract_anticrossing,
    find_triplets,
    fold_quasiphase,
    precision_bound,
    quasiphase_difference,
    quasiphase_spectrum,
)

from conftest import EPS1, W0

PI = math.pi


def synthetic(p, f, window=(0.03, 0.2), omega_d1=1.0):
    """Spectrum whose quasiphase difference is f(ratio), on the usual p/q grid."""
    grid = RatioGrid(omega_d1, (p,), window)
    q = grid.denominators(p)
    ratio = p / q
    d = np.array([f(r) for r in ratio], dtype=float)
    phases = np.stack([d / 2, -d / 2], axis=1)
    return QuasiphaseSpectrum(p, q, ratio * omega_d1, ratio, phases, np.zeros(len(q)),
                              metadata={"omega_d1": omega_d1})


# fold_quasiphase

@pytest.mark.parametrize("theta, expected", [(PI / 4, PI / 4), (3 * PI / 4, -PI / 4), (-PI, 0.0),
                                             (PI / 2, PI / 2), (-3 * PI / 4, PI / 4)])
def test_fold_examples(theta, expected):
    assert fold_quasiphase(theta) == pytest.approx(expected, abs=1e-15)


@given(st.floats(-PI, PI))
def test_fold_idempotent_and_in_range(theta):
    f = fold_quasiphase(theta)
    assert -PI / 2 <= f <= PI / 2
    assert fold_quasiphase(f) == f
    # Folding only removes a multiple of pi.
    assert (theta - f) / PI == pytest.approx(round((theta - f) / PI), abs=1e-12)


def test_difference_wrap():
    phis = np.array([[1.4, -1.4], [0.1, -0.2]])
    np.testing.assert_allclose(quasiphase_difference(phis), [2.8, 0.3])
    np.testing.assert_allclose(quasiphase_difference(phis, wrap=True), [PI - 2.8, 0.3])


# precision_bound

def test_precision_bound_examples():
    b = precision_bound(1, 10)
    assert b["exact"] == pytest.approx(2 / 99, rel=1e-14) and b["approx"] == 0.02
    b = precision_bound(20, 200)
    assert b["exact"] == pytest.approx(20 / 199 - 20 / 201, rel=1e-14)
    assert b["exact"] == pytest.approx(1.0e-3, rel=1e-3) and b["approx"] == pytest.approx(1.0e-3)
    b = precision_bound(100, 1000)
    assert b["approx"] == pytest.approx(2e-4)
    # 2e-4 of a 5 GHz drive is 1 MHz: numerators of order 100 are needed for MHz-level resolution.
    assert b["approx"] * 5.0e3 == pytest.approx(1.0)
    with pytest.raises(ValueError):
        precision_bound(5, 5)


# RatioGrid

def test_ratio_grid_window_and_crop():
    grid = RatioGrid(2.0, (1, 3), (0.03, 0.2), max_points=200)
    qs = grid.denominators(1)
    r = 1 / qs
    assert qs[0] == 5 and qs[-1] == 33 and np.all((r >= 0.03) & (r <= 0.2))
    assert grid.omega_d2(1, 5) == pytest.approx(0.4)
    assert grid.period(5) == pytest.approx(2 * PI * 5 / 2.0)
    crop = RatioGrid(1.0, (50,), (0.01, 0.2), max_points=40).denominators(50)
    assert len(crop) == 40 and np.all(np.diff(crop) == 1)
    with pytest.raises(ValueError):
        RatioGrid(1.0, (0,))


# extraction on synthetic data

def test_single_minimum_oracle():
    r_star = 0.0731
    spectra = [synthetic(p, lambda r: abs(math.sin(8 * (r - r_star)))) for p in (1, 2, 3, 4)]
    res = extract_anticrossing(spectra)
    lo, hi = res.ratio_interval
    assert lo <= r_star <= hi
    p, q = res.sources[0]
    assert hi - lo <= precision_bound(p, q)["exact"] + 1e-15


@settings(max_examples=100)
# The minimum must sit inside the window: one at the edge has no neighbour to form a triplet.
@given(st.floats(0.04, 0.16), st.floats(5.0, 60.0), st.integers(2, 6))
def test_extraction_soundness(r_star, slope, p_max):
    spectra = [synthetic(p, lambda r: min(PI, slope * abs(r - r_star))) for p in range(1, p_max + 1)]
    res = extract_anticrossing(spectra)
    assert any(lo <= r_star <= hi for lo, hi in res.candidates)


def test_width_shrinks_with_more_numerators():
    r_star = 0.0613
    f = lambda r: abs(r - r_star)
    widths = []
    for p_max in (2, 4, 8, 16):
        res = extract_anticrossing([synthetic(p, f) for p in range(1, p_max + 1)])
        widths.append(res.width)
        assert res.ratio_interval[0] <= r_star <= res.ratio_interval[1]
    assert all(a >= b for a, b in zip(widths, widths[1:]))


def test_spurious_minimum_discarded_by_second_numerator():
    r_true, r_fake = 0.05, 0.15

    def f1(r):
        return min(abs(r - r_true), abs(r - r_fake) + 0.001)

    def f2(r):
        return abs(r - r_true)

    res = extract_anticrossing([synthetic(1, f1), synthetic(2, f2)])
    a1, a2 = res.audit
    assert len(a1["candidates_ratio"]) == 2
    assert len(a2["candidates_ratio"]) == 1
    lo, hi = res.ratio_interval
    assert lo <= r_true <= hi


def test_discarded_triplet_recorded():
    # p=2 grows a minimum far from anything p=1 kept.
    s1 = synthetic(1, lambda r: abs(r - 0.05))
    s2 = synthetic(2, lambda r: min(abs(r - 0.05), abs(r - 0.17) + 0.001))
    res = extract_anticrossing([s1, s2])
    assert len(res.audit[1]["discarded"]) == 1 and len(res.audit[1]["kept"]) == 1


def test_numerator_without_triplet_is_skipped():
    f = lambda r: abs(r - 0.08)
    res = extract_anticrossing([synthetic(1, f), synthetic(2, lambda r: r), synthetic(3, f)])
    assert res.audit[1].get("skipped") is True
    assert res.unique


def test_empty_intersection_raises_with_audit():
    s1 = synthetic(1, lambda r: abs(r - 0.05))
    s2 = synthetic(2, lambda r: abs(r - 0.17))
    with pytest.raises(AnticrossingError) as info:
        extract_anticrossing([s1, s2])
    assert info.value.audit[0]["p"] == 1 and info.value.audit[1]["kept"] == []


def test_plateau_tie_single_triplet_at_middle():
    # V shape with a flat bottom over q = 9..12.
    spec = synthetic(1, lambda r: max(0.0, abs(r - 0.0972) - 0.0145))
    trips = find_triplets(spec)
    assert len(trips) == 1
    t = trips[0]
    assert t.q in (10, 11)
    assert t.lo == pytest.approx(1 / 13) and t.hi == pytest.approx(1 / 8)


def test_extraction_preconditions():
    s = synthetic(1, lambda r: abs(r - 0.05))
    with pytest.raises(ValueError):
        extract_anticrossing([s])
    tiny = QuasiphaseSpectrum(2, s.q[:2], s.omega_d2[:2], s.ratio[:2], s.phases[:2], np.zeros(2))
    with pytest.raises(ValueError):
        extract_anticrossing([s, tiny])


# physical spectra

def test_zero_second_tone_matches_single_tone_floquet():
    """eps_d2 = 0: every grid point is q periods of the Rabi drive."""
    builder = TlsTwoTone(W0, EPS1, W0, 0.0)
    grid = RatioGrid(W0, (1,), (0.1, 0.2))
    spec = quasiphase_spectrum(builder, grid, 1, IntegratorConfig(tolerance=1e-11))
    eps = floquet_decompose(build_tls_two_tone(W0, EPS1, W0), W0).quasienergies
    t1 = 2 * PI / W0
    for q, phases in zip(spec.q, spec.phases):
        expected = np.sort(fold_quasiphase(np.angle(np.exp(-1j * eps * q * t1))))[::-1]
        np.testing.assert_allclose(phases, expected, atol=1e-8)
        # Modulo the pi ambiguity the quasienergies do not depend on w_d2.
        got = fold_quasienergy(-phases / (q * t1), W0 / (2 * q))
        want = fold_quasienergy(eps, W0 / (2 * q))
        np.testing.assert_allclose(np.sort(got), np.sort(want), atol=1e-8)


def test_quasiphases_sum_to_zero_mod_pi():
    builder = TlsTwoTone(W0, EPS1, W0, 2 * PI * 0.005)
    spec = quasiphase_spectrum(builder, RatioGrid(W0, (2,), (0.03, 0.06)), 2)
    assert np.all(np.abs(spec.phases) <= PI / 2)
    s = spec.phases.sum(axis=1)
    dist = np.minimum(np.abs(s), np.abs(np.abs(s) - PI))
    assert np.max(dist) < 1e-8
    header, rows = spec.csv_rows()
    assert header == ["p", "q", "omega_d2_over_omega_d1", "phiF_0", "phiF_1"] and len(rows) == len(spec.q)


def test_failed_point_recorded_not_fatal():
    builder = TlsTwoTone(W0, EPS1, W0, 2 * PI * 0.005)
    cfg = IntegratorConfig(substeps_per_fastest_period=16, tolerance=1e-15, max_refinements=0)
    spec = quasiphase_spectrum(builder, RatioGrid(W0, (1,), (0.15, 0.2)), 1, cfg)
    assert len(spec.failed) == len(spec.q) and not np.any(spec.valid)
