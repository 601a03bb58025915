"""Instantaneous zero-energy modes and their exact time derivatives.

Amplitudes are assembled as monomials in the hopping amplitudes rather than
as powers of eps = -t2/t1, which keeps them finite where t1 or t2 vanish
(the schedule endpoints). Overall positive rescalings of the hoppings leave
the normalised mode unchanged, so hoppings are divided by their largest
magnitude before forming products.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .lattice import ChainKind, ChainSpec, HoppingValues, build_hamiltonian


class DegenerateModeError(ValueError):
    """The requested zero mode is undefined for these hoppings."""


@dataclass(frozen=True)
class EdgeMode:
    """Zero mode over all sites (B entries are zero) and its time derivative.

    ``amplitudes`` and ``d_amplitudes`` have shape ``(..., n_sites)``; the
    leading axes follow the shape of the hopping inputs.
    """

    amplitudes: np.ndarray
    d_amplitudes: np.ndarray
    time: float | np.ndarray | None = None

    def a(self) -> np.ndarray:
        """Amplitudes on the A sublattice."""
        return self.amplitudes[..., 0::2]

    def da(self) -> np.ndarray:
        return self.d_amplitudes[..., 0::2]


@dataclass(frozen=True)
class StirapModes:
    """Left, centre and right modes with the projected 3x3 Hamiltonian.

    ``h3`` is expressed in the ordered basis (L, C, R), so its only nonzero
    entries are ``h3[0, 1] = h3[1, 0] = Omega_L`` and
    ``h3[1, 2] = h3[2, 1] = Omega_R``.
    """

    L: np.ndarray
    C: np.ndarray
    R: np.ndarray
    h3: np.ndarray

    @property
    def omega_left(self) -> float:
        return float(self.h3[0, 1])

    @property
    def omega_right(self) -> float:
        return float(self.h3[1, 2])


def _monomials(base: np.ndarray, dbase: np.ndarray, exponents: np.ndarray, signs: np.ndarray):
    """Evaluate ``sign_k * prod_j base_j**E_kj`` and its time derivative.

    ``base`` and ``dbase`` have shape ``(..., F)``; ``exponents`` is ``(K, F)``.
    Returns arrays of shape ``(..., K)``.
    """
    b = base[..., None, :]
    E = exponents
    value = signs * np.prod(b**E, axis=-1)
    deriv = np.zeros_like(value)
    for j in range(E.shape[1]):
        Ej = E[:, j]
        if not np.any(Ej):
            continue
        lowered = E.copy()
        lowered[:, j] = np.maximum(Ej - 1, 0)
        term = signs * Ej * dbase[..., j, None] * np.prod(b**lowered, axis=-1)
        deriv = deriv + np.where(Ej > 0, term, 0.0)
    return value, deriv


def _normalise(u: np.ndarray, du: np.ndarray, static: np.ndarray):
    norm = np.linalg.norm(u, axis=-1, keepdims=True)
    a = u / norm
    da = (du - a * np.sum(a * du, axis=-1, keepdims=True)) / norm
    # frozen schedule: the mode does not move, avoid propagating rounding
    da = np.where(static[..., None], 0.0, da)
    return a, da


def _embed(spec: ChainSpec, a: np.ndarray, da: np.ndarray, time) -> EdgeMode:
    shape = a.shape[:-1] + (spec.n_sites,)
    amp = np.zeros(shape)
    damp = np.zeros(shape)
    amp[..., 0::2] = a
    damp[..., 0::2] = da
    return EdgeMode(amp, damp, time)


def _stack(fields, dfields):
    base = np.stack(np.broadcast_arrays(*[np.asarray(f, dtype=float) for f in fields]), axis=-1)
    dbase = np.stack(np.broadcast_arrays(*[np.asarray(f, dtype=float) for f in dfields]), axis=-1)
    base, dbase = np.broadcast_arrays(base, dbase)
    scale = np.max(np.abs(base), axis=-1, keepdims=True)
    return base, dbase, scale


def zero_mode_single(spec: ChainSpec, h: HoppingValues, dh: HoppingValues, time=None) -> EdgeMode:
    """Zero mode of the single chain, ``a_n ∝ (-t2)^(n-1) t1^(N-n)``.

    For t1 != 0 this equals ``(-t2/t1)^(n-1)`` up to normalisation; the
    product form stays well defined at t1 = 0 (mode on A_N) and t2 = 0
    (mode on A_1). Raises :class:`DegenerateModeError` when t1 = t2 = 0.
    """
    if spec.kind is not ChainKind.SINGLE:
        raise ValueError("zero_mode_single needs a single-chain spec")
    base, dbase, scale = _stack([h.t1, -np.asarray(h.t2)], [dh.t1, -np.asarray(dh.t2)])
    if np.any(scale == 0):
        raise DegenerateModeError("t1 and t2 both vanish; the zero mode is undefined")
    n = np.arange(1, spec.n_cells + 1)
    E = np.stack([spec.n_cells - n, n - 1], axis=1)
    u, du = _monomials(base / scale, dbase / scale, E, np.ones(spec.n_cells))
    static = np.all(dbase == 0, axis=-1)
    a, da = _normalise(u, du, static)
    return _embed(spec, a, da, time)


def zero_mode_interface(spec: ChainSpec, h: HoppingValues, dh: HoppingValues, time=None) -> EdgeMode:
    """Zero mode of the interface chain.

    With eps_L = -t2L/t1 and eps_R = -t2R/t1 the A amplitudes are
    ``eps_L^k eps_R^N`` (k = 0..N-1) on the left segment followed by
    ``-eps_L^N eps_R^(N-1-k)`` (k = 0..N-1) on the right one, evaluated
    after multiplying through by t1^(2N-1).
    """
    if spec.kind is not ChainKind.INTERFACE:
        raise ValueError("zero_mode_interface needs an interface-chain spec")
    if h.t2R is None or dh.t2R is None:
        raise ValueError("interface hoppings need t2R")
    if np.any(np.asarray(h.t2) == 0) or np.any(np.asarray(h.t2R) == 0):
        raise DegenerateModeError("eps_L and eps_R must be nonzero")
    base, dbase, scale = _stack(
        [h.t1, -np.asarray(h.t2), -np.asarray(h.t2R)],
        [dh.t1, -np.asarray(dh.t2), -np.asarray(dh.t2R)],
    )
    N = spec.n_cells
    k = np.arange(1, N + 1)
    left = np.stack([N - k, k - 1, np.full(N, N)], axis=1)
    right = np.stack([k - 1, np.full(N, N), N - k], axis=1)
    E = np.concatenate([left, right])
    signs = np.concatenate([np.ones(N), -np.ones(N)])
    u, du = _monomials(base / scale, dbase / scale, E, signs)
    static = np.all(dbase == 0, axis=-1)
    a, da = _normalise(u, du, static)
    return _embed(spec, a, da, time)


def zero_mode(spec: ChainSpec, h: HoppingValues, dh: HoppingValues, time=None) -> EdgeMode:
    if spec.kind is ChainKind.SINGLE:
        return zero_mode_single(spec, h, dh, time)
    return zero_mode_interface(spec, h, dh, time)


def zero_mode_eigencheck(spec: ChainSpec, h: HoppingValues) -> float:
    """Norm of ``H0 @ phi`` for the NNN-free Hamiltonian; zero for an exact mode."""
    zero = HoppingValues(0.0, 0.0, None if h.t2R is None else 0.0)
    mode = zero_mode(spec, h, zero)
    H0 = build_hamiltonian(spec, h)
    return float(np.linalg.norm(H0 @ mode.amplitudes))


def stirap_basis(spec: ChainSpec, h: HoppingValues) -> StirapModes:
    """Three quasi-degenerate modes of the interface chain and their couplings.

    With X = -t2L/t1 and Y = -t2R/t1: L decays as X^k from A_1 over the left
    segment, R decays as Y^k from A_2N over the right segment, and C lives on
    the B sublattice, peaked on the interface site B_N and decaying as X^k to
    the left and Y^k to the right. The supports make the three vectors
    mutually orthogonal, so ``h3`` is the plain projection.
    """
    if spec.kind is not ChainKind.INTERFACE:
        raise ValueError("stirap_basis needs an interface-chain spec")
    X = -float(h.t2) / float(h.t1)
    Y = -float(h.t2R) / float(h.t1)
    if abs(X) >= 1 or abs(Y) >= 1:
        raise DegenerateModeError(f"|X|, |Y| must be < 1 for localised modes (X={X}, Y={Y})")
    N = spec.n_cells
    powers = np.arange(N, dtype=float)
    L = np.zeros(spec.n_sites)
    R = np.zeros(spec.n_sites)
    C = np.zeros(spec.n_sites)
    L[[spec.a_site(k) for k in range(1, N + 1)]] = X**powers
    R[[spec.a_site(2 * N - j) for j in range(N)]] = Y**powers
    C[[spec.b_site(N - j) for j in range(N)]] = X**powers
    C[[spec.b_site(N + j) for j in range(1, N)]] = Y ** powers[1:]
    basis = np.stack([v / np.linalg.norm(v) for v in (L, C, R)], axis=1)
    H = build_hamiltonian(spec, h).real
    h3 = basis.T @ H @ basis
    h3 = 0.5 * (h3 + h3.T)
    return StirapModes(basis[:, 0], basis[:, 1], basis[:, 2], h3)
