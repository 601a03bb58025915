"""Chain geometry and Hamiltonian assembly for SSH chains with NNN couplings.

Sites are stored in physical order A1, B1, A2, B2, ... so that the 1-based
site ``A_k`` lives at storage index ``2k - 2`` and ``B_k`` at ``2k - 1``.
Energies are in units of t0 and times in units of 1/t0.

All builders broadcast over leading axes: passing hopping arrays of shape
``(M,)`` and ``rho`` of shape ``(M, n_bonds)`` returns ``(M, L, L)``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np


class ChainKind(str, enum.Enum):
    SINGLE = "single"
    INTERFACE = "interface"


@dataclass(frozen=True)
class ChainSpec:
    """Topology of the chain.

    ``n_cells`` is N: the number of A sites of a single dimerized chain,
    or the number of A sites per segment of the interface chain.
    """

    kind: ChainKind
    n_cells: int

    def __post_init__(self):
        object.__setattr__(self, "kind", ChainKind(self.kind))
        if int(self.n_cells) != self.n_cells or self.n_cells < 1:
            raise ValueError(f"n_cells must be a positive integer, got {self.n_cells!r}")
        if self.kind is ChainKind.SINGLE and self.n_cells < 2:
            raise ValueError("a single chain needs at least 2 A sites")
        if self.kind is ChainKind.INTERFACE and self.n_cells < 2:
            raise ValueError("an interface chain needs n_cells >= 2")

    @classmethod
    def single(cls, n_cells: int) -> "ChainSpec":
        return cls(ChainKind.SINGLE, n_cells)

    @classmethod
    def interface(cls, n_cells: int) -> "ChainSpec":
        return cls(ChainKind.INTERFACE, n_cells)

    @property
    def n_a(self) -> int:
        """Number of A sites (N_A)."""
        return self.n_cells if self.kind is ChainKind.SINGLE else 2 * self.n_cells

    @property
    def n_sites(self) -> int:
        return 2 * self.n_a - 1

    @property
    def n_bonds(self) -> int:
        """Number of NNN bonds between consecutive A sites."""
        return self.n_a - 1

    @property
    def a_indices(self) -> np.ndarray:
        return np.arange(0, self.n_sites, 2)

    @property
    def b_indices(self) -> np.ndarray:
        return np.arange(1, self.n_sites, 2)

    @property
    def interface_index(self) -> int:
        """Storage index of the interface site B_N."""
        if self.kind is not ChainKind.INTERFACE:
            raise ValueError("only interface chains have an interface site")
        return 2 * self.n_cells - 1

    def a_site(self, k: int) -> int:
        """Storage index of the 1-based site A_k."""
        if not 1 <= k <= self.n_a:
            raise IndexError(f"A_{k} outside 1..{self.n_a}")
        return 2 * k - 2

    def b_site(self, k: int) -> int:
        if not 1 <= k <= self.n_a - 1:
            raise IndexError(f"B_{k} outside 1..{self.n_a - 1}")
        return 2 * k - 1

    def basis_state(self, site: int) -> np.ndarray:
        psi = np.zeros(self.n_sites, dtype=complex)
        psi[site] = 1.0
        return psi


@dataclass(frozen=True)
class HoppingValues:
    """NN hopping amplitudes at one time (or an array of times).

    For a single chain ``t2`` is the intracell hopping; for an interface
    chain ``t2`` is the left-segment hopping t2L and ``t2R`` the right one.
    Fields may be floats or equally shaped arrays.
    """

    t1: float | np.ndarray
    t2: float | np.ndarray
    t2R: float | np.ndarray | None = None

    @property
    def t2L(self):
        return self.t2

    def scaled(self, factor: float) -> "HoppingValues":
        t2R = None if self.t2R is None else self.t2R * factor
        return HoppingValues(self.t1 * factor, self.t2 * factor, t2R)


def nn_bond_hoppings(spec: ChainSpec, h: HoppingValues) -> np.ndarray:
    """Hopping on each NN bond (site j, j+1), shape ``(..., L - 1)``."""
    t1 = np.asarray(h.t1, dtype=float)
    t2 = np.asarray(h.t2, dtype=float)
    if spec.kind is ChainKind.SINGLE:
        shape = np.broadcast_shapes(t1.shape, t2.shape)
        bonds = np.empty(shape + (spec.n_sites - 1,))
        bonds[..., 0::2] = t2[..., None]  # A_n -- B_n
        bonds[..., 1::2] = t1[..., None]  # B_n -- A_{n+1}
        return bonds
    if h.t2R is None:
        raise ValueError("interface chain needs t2R")
    t2R = np.asarray(h.t2R, dtype=float)
    n = spec.n_cells
    shape = np.broadcast_shapes(t1.shape, t2.shape, t2R.shape)
    bonds = np.empty(shape + (spec.n_sites - 1,))
    # left segment: B_n <- A_n by t2L (n = 1..N), A_{n+1} <- B_n by t1 (n < N)
    bonds[..., 0 : 2 * n : 2] = t2[..., None]
    bonds[..., 1 : 2 * n - 1 : 2] = t1[..., None]
    # right segment: A_{n+1} <- B_n by t2R (n = N..2N-1), B_n <- A_n by t1 (n > N)
    bonds[..., 2 * n - 1 :: 2] = t2R[..., None]
    bonds[..., 2 * n :: 2] = t1[..., None]
    return bonds


def _assemble(spec: ChainSpec, bonds: np.ndarray, rho: np.ndarray) -> np.ndarray:
    L = spec.n_sites
    shape = np.broadcast_shapes(bonds.shape[:-1], rho.shape[:-1])
    H = np.zeros(shape + (L, L), dtype=complex)
    j = np.arange(L - 1)
    H[..., j + 1, j] = bonds
    H[..., j, j + 1] = bonds
    a = spec.a_indices
    H[..., a[1:], a[:-1]] = 1j * rho
    H[..., a[:-1], a[1:]] = -1j * rho
    return H


def _check_rho(spec: ChainSpec, rho) -> np.ndarray:
    rho = np.asarray(rho, dtype=float)
    if rho.ndim == 0 or rho.shape[-1] != spec.n_bonds:
        raise ValueError(f"rho must have {spec.n_bonds} entries on its last axis, got shape {rho.shape}")
    return rho


def build_single(spec: ChainSpec, h: HoppingValues, rho) -> np.ndarray:
    """Hamiltonian of a single dimerized chain with NNN couplings i*rho_n.

    ``<B_n|H|A_n> = t2``, ``<A_{n+1}|H|B_n> = t1`` and
    ``<A_{n+1}|H|A_n> = i rho_n``, plus Hermitian conjugates.
    """
    if spec.kind is not ChainKind.SINGLE:
        raise ValueError("build_single needs a single-chain spec")
    rho = _check_rho(spec, rho)
    return _assemble(spec, nn_bond_hoppings(spec, h), rho)


def build_interface(spec: ChainSpec, h: HoppingValues, rho) -> np.ndarray:
    """Hamiltonian of two SSH segments joined at the site B_N, plus NNN terms."""
    if spec.kind is not ChainKind.INTERFACE:
        raise ValueError("build_interface needs an interface-chain spec")
    rho = _check_rho(spec, rho)
    return _assemble(spec, nn_bond_hoppings(spec, h), rho)


def build_hamiltonian(spec: ChainSpec, h: HoppingValues, rho=None) -> np.ndarray:
    """Dispatch on the chain kind; ``rho=None`` means no NNN couplings."""
    if rho is None:
        rho = np.zeros(spec.n_bonds)
    if spec.kind is ChainKind.SINGLE:
        return build_single(spec, h, rho)
    return build_interface(spec, h, rho)


def apply_disorder(H: np.ndarray, disorder) -> np.ndarray:
    """Add the static perturbation of a disorder realization to ``H``.

    ``disorder`` may be a realization object (with ``delta_h``), a bare
    matrix, or None.
    """
    if disorder is None:
        return H
    delta = getattr(disorder, "delta_h", disorder)
    if delta is None:
        return H
    delta = np.asarray(delta)
    if delta.shape != H.shape[-2:]:
        raise ValueError(f"disorder shape {delta.shape} does not match Hamiltonian {H.shape[-2:]}")
    return H + delta


def sublattice_parity(spec: ChainSpec) -> np.ndarray:
    """Diagonal chiral operator: +1 on A sites, -1 on B sites."""
    g = np.ones(spec.n_sites)
    g[spec.b_indices] = -1.0
    return np.diag(g)
