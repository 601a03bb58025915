from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from ssh_transfer.lattice import (
    ChainKind,
    ChainSpec,
    HoppingValues,
    apply_disorder,
    build_hamiltonian,
    build_interface,
    build_single,
    nn_bond_hoppings,
    sublattice_parity,
)
from ssh_transfer import disorder as dis

hop = st.floats(-2, 2, allow_nan=False)


def test_sizes_and_indexing():
    s = ChainSpec.single(10)
    assert (s.n_a, s.n_sites, s.n_bonds) == (10, 19, 9)
    assert s.a_site(1) == 0 and s.b_site(1) == 1 and s.a_site(10) == 18
    i = ChainSpec.interface(5)
    assert (i.n_a, i.n_sites, i.n_bonds) == (10, 19, 9)
    assert i.interface_index == i.b_site(5) == 9
    assert list(s.a_indices[:3]) == [0, 2, 4]
    with pytest.raises(IndexError):
        s.a_site(11)


def test_invalid_sizes():
    with pytest.raises(ValueError):
        ChainSpec.interface(1)
    with pytest.raises(ValueError):
        ChainSpec.single(1)
    with pytest.raises(ValueError):
        ChainSpec.single(0)


def test_single_bond_case():
    H = build_single(ChainSpec.single(2), HoppingValues(1.0, 0.0), [0.0])
    expected = np.zeros((3, 3))
    expected[2, 1] = expected[1, 2] = 1.0
    np.testing.assert_array_equal(H, expected)


def test_single_chain_bond_pattern():
    spec = ChainSpec.single(4)
    bonds = nn_bond_hoppings(spec, HoppingValues(1.0, 0.25))
    np.testing.assert_array_equal(bonds, [0.25, 1, 0.25, 1, 0.25, 1])


def test_interface_bond_pattern():
    spec = ChainSpec.interface(2)
    bonds = nn_bond_hoppings(spec, HoppingValues(1.0, 0.1, 0.3))
    # A1-B1 t2L, B1-A2 t1, A2-B2 t2L | B2-A3 t2R, A3-B3 t1, B3-A4 t2R
    np.testing.assert_array_equal(bonds, [0.1, 1, 0.1, 0.3, 1, 0.3])


def test_wrong_builder_or_rho_length():
    with pytest.raises(ValueError):
        build_single(ChainSpec.interface(2), HoppingValues(1, 1, 1), np.zeros(3))
    with pytest.raises(ValueError):
        build_interface(ChainSpec.single(3), HoppingValues(1, 1), np.zeros(2))
    with pytest.raises(ValueError):
        build_hamiltonian(ChainSpec.single(3), HoppingValues(1, 1), np.zeros(5))


@given(t1=hop, t2=hop, rho=st.lists(hop, min_size=9, max_size=9))
def test_single_hermitian_and_structure(t1, t2, rho):
    H = build_hamiltonian(ChainSpec.single(10), HoppingValues(t1, t2), rho)
    assert np.max(np.abs(H - H.conj().T)) == 0
    assert np.all(np.diag(H) == 0)
    nn = np.diagonal(H, 1)
    assert np.all(nn.imag == 0)
    nnn = np.diagonal(H, 2)
    assert np.all(nnn.real == 0)
    assert np.all(nnn[1::2] == 0)  # no B-B couplings


@given(t1=hop, t2=hop, t2R=hop, rho=st.lists(hop, min_size=9, max_size=9))
def test_interface_hermitian(t1, t2, t2R, rho):
    H = build_hamiltonian(ChainSpec.interface(5), HoppingValues(t1, t2, t2R), rho)
    assert np.max(np.abs(H - H.conj().T)) == 0


def test_nnn_sign_convention():
    H = build_hamiltonian(ChainSpec.single(3), HoppingValues(1, 1), [0.5, -0.2])
    assert H[2, 0] == 0.5j and H[0, 2] == -0.5j
    assert H[4, 2] == -0.2j


def test_odd_chain_has_one_zero_mode():
    E = np.linalg.eigvalsh(build_hamiltonian(ChainSpec.single(3), HoppingValues(1, 1), [0, 0]))
    assert np.sum(np.abs(E) < 1e-12) == 1


@pytest.mark.parametrize("t1,t2", [(1.0, 0.3), (0.4, 1.0), (1.0, 1.0)])
def test_zero_mode_existence(t1, t2):
    E = np.linalg.eigvalsh(build_hamiltonian(ChainSpec.single(10), HoppingValues(t1, t2)))
    assert np.min(np.abs(E)) < 1e-12


def test_interface_three_gap_modes():
    d = 0.01
    E = np.linalg.eigvalsh(build_hamiltonian(ChainSpec.interface(5), HoppingValues(1.0, d, d)))
    small = np.sort(np.abs(E))
    assert np.all(small[:3] < 1e-3) and small[3] > 0.5


def test_chiral_symmetry_both_directions():
    spec = ChainSpec.single(6)
    G = sublattice_parity(spec)
    H0 = build_hamiltonian(spec, HoppingValues(0.7, 0.4))
    np.testing.assert_array_equal(G @ H0 @ G, -H0)
    H1 = build_hamiltonian(spec, HoppingValues(0.7, 0.4), [0, 0.1, 0, 0, 0])
    assert not np.allclose(G @ H1 @ G, -H1)


def test_broadcast_over_times():
    spec = ChainSpec.single(4)
    t = np.linspace(0, 1, 5)
    H = build_hamiltonian(spec, HoppingValues(1 - t, t), np.zeros((5, 3)))
    assert H.shape == (5, 7, 7)
    np.testing.assert_array_equal(H[2], build_hamiltonian(spec, HoppingValues(0.5, 0.5)))


def test_apply_disorder_structure():
    spec = ChainSpec.single(5)
    H = build_hamiltonian(spec, HoppingValues(1, 0.5), [0.1, 0.2, 0.3, 0.4])
    np.testing.assert_array_equal(apply_disorder(H, None), H)
    np.testing.assert_array_equal(apply_disorder(H, dis.diagonal_gaussian(spec, 0.0, 1)), H)
    Hd = apply_disorder(H, dis.diagonal_gaussian(spec, 0.3, 1))
    off = ~np.eye(spec.n_sites, dtype=bool)
    np.testing.assert_array_equal(Hd[off], H[off])
    Ho = apply_disorder(H, dis.offdiagonal_gaussian(spec, 0.3, 1))
    np.testing.assert_array_equal(np.diag(Ho), np.diag(H))
    np.testing.assert_array_equal(np.diagonal(Ho, 2), np.diagonal(H, 2))
    assert np.max(np.abs(Ho - Ho.conj().T)) == 0
    with pytest.raises(ValueError):
        apply_disorder(H, np.zeros((3, 3)))


def test_chain_kind_values():
    assert ChainKind("single") is ChainKind.SINGLE
    assert ChainSpec.interface(3).kind is ChainKind.INTERFACE
