from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from ssh_transfer.lattice import ChainSpec, HoppingValues, build_hamiltonian
from ssh_transfer.modes import (
    DegenerateModeError,
    stirap_basis,
    zero_mode,
    zero_mode_eigencheck,
    zero_mode_interface,
    zero_mode_single,
)
from ssh_transfer.schedules import InterfacePlateau, PolynomialSingle, SinusoidalSingle

ZERO = HoppingValues(0.0, 0.0)
ZERO3 = HoppingValues(0.0, 0.0, 0.0)
unit = st.floats(0.05, 1.0)
rate = st.floats(-3, 3, allow_nan=False)


def test_single_endpoint_limits():
    spec = ChainSpec.single(10)
    m = zero_mode_single(spec, HoppingValues(1.0, 0.0), ZERO)
    np.testing.assert_array_equal(m.amplitudes, spec.basis_state(0))
    m = zero_mode_single(spec, HoppingValues(0.0, 1.0), ZERO)
    # (-t2)^(N-1) keeps the sign continuous along the protocol
    np.testing.assert_array_equal(m.amplitudes, -spec.basis_state(18))


def test_single_band_closing_delocalised():
    m = zero_mode_single(ChainSpec.single(10), HoppingValues(0.6, 0.6), ZERO)
    np.testing.assert_allclose(np.abs(m.a()), 1 / np.sqrt(10), atol=1e-15)


def test_single_matches_power_form():
    t1, t2 = 0.8, 0.35
    m = zero_mode_single(ChainSpec.single(10), HoppingValues(t1, t2), ZERO)
    a = m.a()
    np.testing.assert_allclose(a / a[0], (-t2 / t1) ** np.arange(10), rtol=1e-12, atol=1e-15)


def test_degenerate_inputs():
    with pytest.raises(DegenerateModeError):
        zero_mode_single(ChainSpec.single(4), HoppingValues(0.0, 0.0), ZERO)
    with pytest.raises(DegenerateModeError):
        zero_mode_interface(ChainSpec.interface(3), HoppingValues(1.0, 0.0, 0.5), ZERO3)
    with pytest.raises(ValueError):
        zero_mode_single(ChainSpec.interface(3), HoppingValues(1.0, 0.1, 0.1), ZERO3)


def test_eigencheck_single_and_interface():
    spec = ChainSpec.single(10)
    assert zero_mode_eigencheck(spec, PolynomialSingle(2.0).values(0.6)) < 1e-12
    assert zero_mode_eigencheck(spec, HoppingValues(1.0, 0.0)) == 0.0
    ispec = ChainSpec.interface(5)
    assert zero_mode_eigencheck(ispec, InterfacePlateau(40.0).values(10.0)) < 1e-12


def test_interface_left_localised():
    N = 5
    eps_l, eps_r = 1e-3, 0.5
    h = HoppingValues(1.0, eps_l, eps_r)  # t1 = 1 so eps = -t2/t1 up to sign
    m = zero_mode_interface(ChainSpec.interface(N), h, ZERO3)
    assert m.a()[0] ** 2 > 1 - N * eps_l**2


def test_interface_matches_printed_ordering():
    N = 3
    t1, t2l, t2r = 1.0, 0.4, 0.7
    el, er = -t2l / t1, -t2r / t1
    expect = [el**k * er**N for k in range(N)] + [-(el**N) * er ** (N - 1 - k) for k in range(N)]
    expect = np.array(expect) / np.linalg.norm(expect)
    m = zero_mode_interface(ChainSpec.interface(N), HoppingValues(t1, t2l, t2r), ZERO3)
    np.testing.assert_allclose(m.a(), expect, atol=1e-14)


@given(l=unit, r=unit)
def test_interface_mirror_exchange(l, r):
    spec = ChainSpec.interface(4)
    a = zero_mode_interface(spec, HoppingValues(1.0, l, r), ZERO3).amplitudes
    b = zero_mode_interface(spec, HoppingValues(1.0, r, l), ZERO3).amplitudes
    np.testing.assert_allclose(b, -a[::-1], atol=1e-14)


@given(t1=unit, t2=unit, d1=rate, d2=rate)
def test_single_norm_and_orthogonality(t1, t2, d1, d2):
    m = zero_mode_single(ChainSpec.single(7), HoppingValues(t1, t2), HoppingValues(d1, d2))
    assert abs(np.sum(m.amplitudes**2) - 1) < 1e-12
    assert abs(np.dot(m.amplitudes, m.d_amplitudes)) < 1e-10
    assert np.all(m.amplitudes[1::2] == 0) and np.all(m.d_amplitudes[1::2] == 0)


@given(l=unit, r=unit, dl=rate, dr=rate)
def test_interface_norm_and_orthogonality(l, r, dl, dr):
    m = zero_mode_interface(ChainSpec.interface(5), HoppingValues(1.0, l, r), HoppingValues(0.0, dl, dr))
    assert abs(np.sum(m.amplitudes**2) - 1) < 1e-12
    assert abs(np.dot(m.amplitudes, m.d_amplitudes)) < 1e-10


@pytest.mark.parametrize(
    "spec,sched",
    [
        (ChainSpec.single(10), PolynomialSingle(2.0)),
        (ChainSpec.single(5), SinusoidalSingle(1.0)),
        (ChainSpec.interface(5), InterfacePlateau(40.0)),
    ],
    ids=["poly", "sin", "plateau"],
)
def test_invariants_along_schedule(spec, sched):
    t = np.linspace(0, sched.T, 1000)
    h, dh = sched.evaluate(t)
    m = zero_mode(spec, h, dh)
    np.testing.assert_allclose(np.sum(m.amplitudes**2, axis=-1), 1.0, atol=1e-12)
    assert np.max(np.abs(np.sum(m.amplitudes * m.d_amplitudes, axis=-1))) < 1e-10
    # analytic derivative against central differences
    ti = t[(t > 0.01 * sched.T) & (t < 0.99 * sched.T) & (np.abs(t - sched.T / 2) > 0.01 * sched.T)]
    step = 1e-4 * sched.T

    def amp_at(x):
        return zero_mode(spec, *sched.evaluate(x)).amplitudes

    # five-point stencil keeps truncation and rounding well below 1e-6
    fd = (amp_at(ti - 2 * step) - 8 * amp_at(ti - step) + 8 * amp_at(ti + step) - amp_at(ti + 2 * step)) / (12 * step)
    da = zero_mode(spec, *sched.evaluate(ti)).d_amplitudes
    amp = zero_mode(spec, *sched.evaluate(ti)).amplitudes
    mask = np.abs(amp) > 1e-8
    scale = np.maximum(np.abs(da), 1e-3 * np.max(np.abs(da), axis=-1, keepdims=True))
    assert np.max(np.abs(fd - da)[mask] / scale[mask]) < 1e-6


def test_static_schedule_has_zero_derivative():
    m = zero_mode_interface(ChainSpec.interface(5), InterfacePlateau(40.0).values(20.0), ZERO3)
    assert np.all(m.d_amplitudes == 0)


def test_stirap_decoupled_limit():
    spec = ChainSpec.interface(5)
    m = stirap_basis(spec, HoppingValues(1.0, 0.0, 0.0))
    np.testing.assert_array_equal(m.L, spec.basis_state(spec.a_site(1)))
    np.testing.assert_array_equal(m.R, spec.basis_state(spec.a_site(10)))
    # the interface mode sits on the interface B site
    np.testing.assert_array_equal(m.C, spec.basis_state(spec.interface_index))
    np.testing.assert_array_equal(m.h3, np.zeros((3, 3)))


def test_stirap_projected_spectrum():
    spec = ChainSpec.interface(5)
    h = HoppingValues(1.0, 0.5, 0.5)
    m = stirap_basis(spec, h)
    for v in (m.L, m.C, m.R):
        assert abs(np.linalg.norm(v) - 1) < 1e-14
    assert m.h3[0, 2] == 0 and m.h3[2, 0] == 0
    np.testing.assert_array_equal(np.diag(m.h3), 0)
    np.testing.assert_array_equal(m.h3, m.h3.T)
    E = np.linalg.eigvalsh(build_hamiltonian(spec, h))
    in_gap = np.sort(E[np.argsort(np.abs(E))[:3]])
    np.testing.assert_allclose(np.sort(np.linalg.eigvalsh(m.h3)), in_gap, atol=1e-2)
    assert m.omega_left == pytest.approx(m.omega_right)


def test_stirap_requires_localised_modes():
    with pytest.raises(DegenerateModeError):
        stirap_basis(ChainSpec.interface(5), HoppingValues(1.0, 1.0, 0.5))
    with pytest.raises(ValueError):
        stirap_basis(ChainSpec.single(5), HoppingValues(1.0, 0.5))
