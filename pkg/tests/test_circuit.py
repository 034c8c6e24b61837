import dataclasses
import math

import numpy as np
import pytest

from floqubit.hamiltonian import ghz
from floqubit.readout import (
    KerrCircuit,
    LabelingError,
    build_circuit_model,
    fit_longitudinal,
    floquet_d_inf,
    normal_mode_reduce,
    predicted_d_inf,
)
from floqubit.readout.circuit import kerr_coefficients, kerr_from_expansion


def decoupled(**kw):
    return KerrCircuit(g_ab_ghz=0.0, g_bc_ghz=0.0, g_ca_ghz=0.0, **kw)


def test_u_orthogonal_and_spectrum():
    circ = KerrCircuit()
    nm = normal_mode_reduce(circ)
    assert np.max(np.abs(nm.u.T @ nm.u - np.eye(3))) < 1e-10
    np.testing.assert_allclose(np.sort(nm.frequencies), np.linalg.eigvalsh(circ.coupling_matrix), rtol=1e-14)
    # Columns carry positive dominant entries and sit on their own bare mode.
    for j in range(3):
        assert np.argmax(np.abs(nm.u[:, j])) == j and nm.u[j, j] > 0


def test_decoupled_limit():
    circ = decoupled()
    nm = normal_mode_reduce(circ)
    np.testing.assert_array_equal(nm.u, np.eye(3))
    np.testing.assert_allclose(nm.frequencies, ghz(np.array([8.2, 5.2, 7.78])), rtol=1e-15)
    assert nm.alpha1[1] == pytest.approx(ghz(circ.alpha_b_ghz), rel=1e-15)
    assert nm.alpha1[2] == pytest.approx(ghz(circ.alpha_c_ghz), rel=1e-15)
    assert nm.g_factor == 0.0


def test_two_mode_rotation_closed_form():
    circ = KerrCircuit(g_ab_ghz=0.3, g_bc_ghz=0.0, g_ca_ghz=0.0)
    nm = normal_mode_reduce(circ)
    wa, wb, g = ghz(8.2), ghz(5.2), ghz(0.3)
    theta = 0.5 * math.atan2(2 * g, wa - wb)
    expected = np.array([[math.cos(theta), -math.sin(theta)], [math.sin(theta), math.cos(theta)]])
    assert np.max(np.abs(nm.u[:2, :2] - expected)) < 1e-10
    assert np.max(np.abs(nm.u[2, :2])) == 0.0 and nm.u[2, 2] == 1.0
    split = math.hypot(wa - wb, 2 * g)
    assert nm.frequencies[0] - nm.frequencies[1] == pytest.approx(split, rel=1e-12)


def test_kerr_symmetry_and_two_derivations():
    circ = KerrCircuit()
    nm = normal_mode_reduce(circ)
    np.testing.assert_array_equal(nm.chi1, nm.chi1.T)
    alpha1, chi1 = kerr_from_expansion(circ, nm)
    assert np.max(np.abs(alpha1 - nm.alpha1)) < 1e-10
    off = ~np.eye(3, dtype=bool)
    assert np.max(np.abs(chi1[off] - nm.chi1[off])) < 1e-10


def test_kerr_coefficients_single_bare_mode():
    # One anharmonic bare mode split evenly over two normal modes.
    c = s = 1 / math.sqrt(2)
    u = np.array([[c, -s, 0], [s, c, 0], [0, 0, 1.0]])
    alpha1, chi1 = kerr_coefficients(u, np.array([0.0, -1.0, 0.0]))
    np.testing.assert_allclose(alpha1, [-0.25, -0.25, 0.0], atol=1e-15)
    assert chi1[0, 1] == pytest.approx(-0.5)


def test_labeling_error_on_degenerate_modes():
    with pytest.raises(LabelingError):
        normal_mode_reduce(decoupled(omega_c_ghz=8.2))


def test_circuit_validation():
    with pytest.raises(ValueError):
        KerrCircuit(truncation=(1, 4, 3))
    with pytest.raises(ValueError):
        KerrCircuit(sidebands=("middle",))


def test_model_frequencies_and_drive():
    circ = KerrCircuit()
    m = build_circuit_model(circ)
    nm = m.normal
    # Single-excitation levels shift from the normal frequencies only through Kerr terms.
    assert abs(m.omega_q - nm.frequencies[1]) < 2 * abs(nm.alpha1[1])
    assert m.omega_q - m.omega_d1 == pytest.approx(circ.tilt * m.eps_eff)
    assert m.hamiltonian.tones[1].frequency == pytest.approx(abs(m.omega_cav - m.omega_q))
    no_mod = build_circuit_model(dataclasses.replace(circ, delta_omega_c_ghz=0.0))
    assert len(no_mod.hamiltonian.tones) == 1


def test_floquet_prediction_reduces_to_two_level_value():
    weak = KerrCircuit(eps_d1_ghz=0.02)
    assert floquet_d_inf(build_circuit_model(weak)) == pytest.approx(predicted_d_inf(weak), rel=2e-3)
    # The strong default drive mixes in higher transmon levels and lowers the separation.
    strong = KerrCircuit()
    assert floquet_d_inf(build_circuit_model(strong)) < 0.7 * predicted_d_inf(strong)


def test_fit_longitudinal_recovers_parameters():
    t = np.linspace(0.0, 20.0, 101)
    d = 0.4 * (1 - np.exp(-0.5 * 0.3 * t))
    amp, k, rms = fit_longitudinal(t, d)
    assert amp == pytest.approx(0.4, rel=1e-6) and k == pytest.approx(0.3, rel=1e-6) and rms < 1e-9
