"""Seeded static disorder realizations.

Disorder strengths follow ``delta E = t0 * alpha``: every random amplitude
is ``t0 * alpha * z`` with ``z`` a standard normal deviate. Realizations are
regenerated from ``(kind, params, seed)`` and never stored by value.

Per-realization seeds come from :func:`realization_seed`, which feeds
``(master_seed, index)`` through numpy's ``SeedSequence`` hash and keeps
the first 64-bit word; each realization then draws from a PCG64 stream
seeded with that word.
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .lattice import ChainSpec


class DisorderKind(str, enum.Enum):
    NONE = "none"
    DIAGONAL = "diagonal"
    OFF_DIAGONAL = "offdiagonal"
    CORRELATED = "correlated"
    DRIVE_BIAS = "drive_bias"


@dataclass(frozen=True)
class DisorderRealization:
    kind: DisorderKind
    delta_h: np.ndarray | None
    bias: float = 0.0
    seed: int = 0
    params: dict = field(default_factory=dict)

    def to_json(self) -> str:
        return json.dumps({"kind": self.kind.value, "params": self.params, "seed": int(self.seed)})

    @classmethod
    def from_json(cls, text: str, spec: ChainSpec | None = None) -> "DisorderRealization":
        data = json.loads(text)
        return realize(data["kind"], spec, data.get("params", {}), data["seed"])

    @property
    def onsite(self) -> np.ndarray | None:
        return None if self.delta_h is None else np.diag(self.delta_h).copy()


def realization_seed(master_seed: int, index: int) -> int:
    """64-bit seed of realization ``index`` in an ensemble with ``master_seed``."""
    ss = np.random.SeedSequence([int(master_seed) & 0xFFFFFFFFFFFFFFFF, int(index)])
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def _rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(int(seed)))


def _check_alpha(alpha: float) -> float:
    alpha = float(alpha)
    if not (alpha >= 0 and math.isfinite(alpha)):
        raise ValueError(f"alpha must be a finite non-negative number, got {alpha!r}")
    return alpha


def none(spec: ChainSpec | None = None, seed: int = 0) -> DisorderRealization:
    return DisorderRealization(DisorderKind.NONE, None, 0.0, seed, {})


def onsite_gaussian(n_sites: int, alpha: float, seed: int, t0: float = 1.0) -> np.ndarray:
    return t0 * alpha * _rng(seed).standard_normal(n_sites)


def bond_gaussian(n_sites: int, alpha: float, seed: int, t0: float = 1.0) -> np.ndarray:
    return t0 * alpha * _rng(seed).standard_normal(n_sites - 1)


def correlated_onsite(n_sites: int, alpha: float, gamma: float, seed: int, t0: float = 1.0) -> np.ndarray:
    """Power-law correlated on-site energies.

    ``dE_n = sum_{k=1}^{N_A} t0 alpha k^(-gamma/2) cos(4 pi k n / L + phi_k)``
    for site positions n = 1..L, with N_A = (L + 1)/2 and phases phi_k
    uniform on [0, 2 pi). A and B sites are treated alike. The sum is not
    renormalised, so its variance grows with N_A.
    """
    n_a = (n_sites + 1) // 2
    phases = _rng(seed).uniform(0.0, 2 * np.pi, n_a)
    k = np.arange(1, n_a + 1)
    n = np.arange(1, n_sites + 1)
    amp = t0 * alpha * k ** (-gamma / 2)
    return np.cos(4 * np.pi * np.outer(n, k) / n_sites + phases) @ amp


def bias_factor(alpha: float, seed: int) -> float:
    return float(alpha * _rng(seed).standard_normal())


def diagonal_gaussian(spec: ChainSpec, alpha: float, seed: int, t0: float = 1.0) -> DisorderRealization:
    """I.i.d. Gaussian on-site energies of std ``t0 * alpha`` on every site."""
    alpha = _check_alpha(alpha)
    energies = onsite_gaussian(spec.n_sites, alpha, seed, t0)
    return DisorderRealization(DisorderKind.DIAGONAL, np.diag(energies), 0.0, seed, {"alpha": alpha})


def offdiagonal_gaussian(spec: ChainSpec, alpha: float, seed: int, t0: float = 1.0) -> DisorderRealization:
    """I.i.d. Gaussian shifts of every NN hopping, symmetric completion."""
    alpha = _check_alpha(alpha)
    shifts = bond_gaussian(spec.n_sites, alpha, seed, t0)
    j = np.arange(spec.n_sites - 1)
    dh = np.zeros((spec.n_sites, spec.n_sites))
    dh[j + 1, j] = shifts
    dh[j, j + 1] = shifts
    return DisorderRealization(DisorderKind.OFF_DIAGONAL, dh, 0.0, seed, {"alpha": alpha})


def correlated_diagonal(
    spec: ChainSpec, alpha: float, gamma: float, seed: int, t0: float = 1.0
) -> DisorderRealization:
    alpha = _check_alpha(alpha)
    gamma = float(gamma)
    if not (gamma >= 0 and math.isfinite(gamma)):
        raise ValueError(f"gamma must be a finite non-negative number, got {gamma!r}")
    energies = correlated_onsite(spec.n_sites, alpha, gamma, seed, t0)
    return DisorderRealization(
        DisorderKind.CORRELATED, np.diag(energies), 0.0, seed, {"alpha": alpha, "gamma": gamma}
    )


def drive_bias(alpha: float, seed: int) -> DisorderRealization:
    """Common multiplicative error on the NNN couplings: factor ``1 + alpha z``."""
    alpha = _check_alpha(alpha)
    return DisorderRealization(DisorderKind.DRIVE_BIAS, None, bias_factor(alpha, seed), seed, {"alpha": alpha})


def realize(kind, spec: ChainSpec | None, params: dict[str, Any], seed: int) -> DisorderRealization:
    """Build a realization of any kind from its parameter map."""
    kind = DisorderKind(kind)
    params = dict(params)
    if kind is DisorderKind.NONE:
        return none(spec, seed)
    if kind is DisorderKind.DRIVE_BIAS:
        return drive_bias(params["alpha"], seed)
    if spec is None:
        raise ValueError(f"{kind.value} disorder needs a chain spec")
    if kind is DisorderKind.DIAGONAL:
        return diagonal_gaussian(spec, params["alpha"], seed)
    if kind is DisorderKind.OFF_DIAGONAL:
        return offdiagonal_gaussian(spec, params["alpha"], seed)
    return correlated_diagonal(spec, params["alpha"], params.get("gamma", 0.0), seed)
