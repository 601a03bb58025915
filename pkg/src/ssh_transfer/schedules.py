"""Time-dependent NN hopping profiles with exact first derivatives.

Every schedule is defined on the public domain ``[0, T]`` and evaluates
vectorised over ``t``. ``values(t)`` and ``derivatives(t)`` both return
:class:`~ssh_transfer.lattice.HoppingValues`.
"""

from __future__ import annotations

import math
from typing import Any, Mapping

import numpy as np
from scipy.interpolate import PchipInterpolator

from .lattice import ChainKind, HoppingValues


def _require_positive(name: str, value: float) -> float:
    value = float(value)
    if not (value > 0 and math.isfinite(value)):
        raise ValueError(f"{name} must be positive and finite, got {value!r}")
    return value


class Schedule:
    """Base class; subclasses implement ``_evaluate``."""

    kind: str = "custom"
    chain: ChainKind = ChainKind.SINGLE

    def __init__(self, T: float, t0: float = 1.0):
        self.T = _require_positive("T", T)
        self.t0 = _require_positive("t0", t0)

    def _evaluate(self, t: np.ndarray) -> tuple[HoppingValues, HoppingValues]:
        raise NotImplementedError

    def __call__(self, t):
        return self.evaluate(t)

    def evaluate(self, t) -> tuple[HoppingValues, HoppingValues]:
        """Return ``(values, derivatives)`` at time(s) ``t``."""
        scalar = np.ndim(t) == 0
        h, dh = self._evaluate(np.atleast_1d(np.asarray(t, dtype=float)))
        if scalar:
            h = _squeeze(h)
            dh = _squeeze(dh)
        return h, dh

    def values(self, t) -> HoppingValues:
        return self.evaluate(t)[0]

    def derivatives(self, t) -> HoppingValues:
        return self.evaluate(t)[1]

    def params(self) -> dict[str, Any]:
        return {"kind": self.kind, "T": self.T, "t0": self.t0}

    def __repr__(self):
        args = ", ".join(f"{k}={v!r}" for k, v in self.params().items() if k != "kind")
        return f"{type(self).__name__}({args})"


def _squeeze(h: HoppingValues) -> HoppingValues:
    t2R = None if h.t2R is None else float(h.t2R[0])
    return HoppingValues(float(h.t1[0]), float(h.t2[0]), t2R)


class PolynomialSingle(Schedule):
    """t1 = t0 P(t/T), t2 = t0 (1 - P(t/T)) with P(x) = 2x^3 - 3x^2 + 1."""

    kind = "polynomial"

    def _evaluate(self, t):
        x = t / self.T
        P = 2 * x**3 - 3 * x**2 + 1
        dP = (6 * x**2 - 6 * x) / self.T
        h = HoppingValues(self.t0 * P, self.t0 * (1 - P))
        return h, HoppingValues(self.t0 * dP, -self.t0 * dP)


class SinusoidalSingle(Schedule):
    """t1 = t0 cos(pi t / 2T), t2 = t0 sin(pi t / 2T)."""

    kind = "sinusoidal"

    def _evaluate(self, t):
        w = math.pi / (2 * self.T)
        c, s = np.cos(w * t), np.sin(w * t)
        return (
            HoppingValues(self.t0 * c, self.t0 * s),
            HoppingValues(-self.t0 * w * s, self.t0 * w * c),
        )


class AdiabaticPump(Schedule):
    """t1 = t0 (1 + cos Omega t), t2 = t0 (1 - cos Omega t), with T = pi / Omega."""

    kind = "adiabatic_pump"

    def __init__(self, Omega: float = 0.01, t0: float = 1.0):
        self.Omega = _require_positive("Omega", Omega)
        super().__init__(math.pi / self.Omega, t0)

    def _evaluate(self, t):
        c = np.cos(self.Omega * t)
        ds = -self.Omega * np.sin(self.Omega * t)
        return (
            HoppingValues(self.t0 * (1 + c), self.t0 * (1 - c)),
            HoppingValues(self.t0 * ds, -self.t0 * ds),
        )

    def params(self):
        return {"kind": self.kind, "Omega": self.Omega, "t0": self.t0}


class InterfacePlateau(Schedule):
    """Interface schedule: t1 = t0 and t2L(t) = t0 f(2t/T) up to T/2, then held.

    f(x) = delta + (1 - 2 delta)(3x^2 - 2x^3) and t2R(t) = t2L(T - t), so the
    left segment ramps up to (1 - delta) t0 during the first half and the
    right segment ramps down during the second half.
    """

    kind = "interface_plateau"
    chain = ChainKind.INTERFACE

    def __init__(self, T: float, t0: float = 1.0, delta: float = 0.01):
        super().__init__(T, t0)
        delta = float(delta)
        if not 0 < delta < 0.5:
            raise ValueError(f"delta must lie in (0, 1/2), got {delta!r}")
        self.delta = delta

    def _left(self, t):
        x = np.clip(2 * t / self.T, 0.0, 1.0)
        f = self.delta + (1 - 2 * self.delta) * (3 * x**2 - 2 * x**3)
        df = (1 - 2 * self.delta) * (6 * x - 6 * x**2) * (2 / self.T)
        df = np.where(t < self.T / 2, df, 0.0)
        return self.t0 * f, self.t0 * df

    def _evaluate(self, t):
        tl, dtl = self._left(t)
        tr, dtr = self._left(self.T - t)
        one = np.full_like(t, self.t0)
        return HoppingValues(one, tl, tr), HoppingValues(np.zeros_like(t), dtl, -dtr)

    def params(self):
        return {**super().params(), "delta": self.delta}


class StirapGaussians(Schedule):
    """Counter-intuitive Gaussian pulses for the interface STIRAP baseline.

    With the centred time s = t - T/2, ``t2L = t0 Omega_m exp(-(s - d/2)^2 / w^2)``
    and ``t2R = t0 Omega_m exp(-(s + d/2)^2 / w^2)`` where ``w = w_frac * T``
    and ``d = delta_frac * w``; t1 = t0 throughout.
    """

    kind = "stirap"
    chain = ChainKind.INTERFACE

    def __init__(
        self,
        T: float = 900.0,
        t0: float = 1.0,
        Omega_m: float = 0.9,
        w_frac: float = 3 / 16,
        delta_frac: float = 1 / 3,
    ):
        super().__init__(T, t0)
        self.Omega_m = float(Omega_m)
        self.w_frac = _require_positive("w_frac", w_frac)
        self.delta_frac = float(delta_frac)
        self.width = self.w_frac * self.T
        self.separation = self.delta_frac * self.width

    def _pulse(self, s, centre):
        g = self.t0 * self.Omega_m * np.exp(-((s - centre) ** 2) / self.width**2)
        return g, -2 * (s - centre) / self.width**2 * g

    def _evaluate(self, t):
        s = t - self.T / 2
        tl, dtl = self._pulse(s, self.separation / 2)
        tr, dtr = self._pulse(s, -self.separation / 2)
        return (
            HoppingValues(np.full_like(t, self.t0), tl, tr),
            HoppingValues(np.zeros_like(t), dtl, dtr),
        )

    def params(self):
        return {
            **super().params(),
            "Omega_m": self.Omega_m,
            "w_frac": self.w_frac,
            "delta_frac": self.delta_frac,
        }


class Custom(Schedule):
    """Tabulated schedule, monotone-cubic interpolated (best effort).

    ``values`` and ``derivatives`` map field names (``t1``, ``t2`` and
    optionally ``t2R``) to samples on ``times``.
    """

    kind = "custom"

    def __init__(self, times, values: Mapping[str, Any], derivatives: Mapping[str, Any], t0: float = 1.0):
        times = np.asarray(times, dtype=float)
        if times.ndim != 1 or times.size < 2 or np.any(np.diff(times) <= 0):
            raise ValueError("times must be strictly increasing with at least two samples")
        if times[0] != 0.0:
            raise ValueError("tabulated schedules must start at t = 0")
        super().__init__(times[-1], t0)
        keys = ["t1", "t2"] + (["t2R"] if "t2R" in values else [])
        self.chain = ChainKind.INTERFACE if "t2R" in values else ChainKind.SINGLE
        self._v = {k: PchipInterpolator(times, np.asarray(values[k], dtype=float)) for k in keys}
        self._d = {k: PchipInterpolator(times, np.asarray(derivatives[k], dtype=float)) for k in keys}

    def _evaluate(self, t):
        v = {k: f(t) for k, f in self._v.items()}
        d = {k: f(t) for k, f in self._d.items()}
        return HoppingValues(**v), HoppingValues(**d)


class TimeReversed(Schedule):
    """``h(T - t)`` with derivative ``-h'(T - t)``; runs a protocol backwards."""

    kind = "time_reversed"

    def __init__(self, inner: Schedule):
        super().__init__(inner.T, inner.t0)
        self.inner = inner
        self.chain = inner.chain

    def _evaluate(self, t):
        h, dh = self.inner._evaluate(self.T - t)
        neg = HoppingValues(-dh.t1, -dh.t2, None if dh.t2R is None else -dh.t2R)
        return h, neg

    def params(self) -> dict[str, Any]:
        return {"kind": self.kind, "inner": self.inner.params()}


SCHEDULE_KINDS = {
    "polynomial": PolynomialSingle,
    "sinusoidal": SinusoidalSingle,
    "interface_plateau": InterfacePlateau,
    "adiabatic_pump": AdiabaticPump,
    "stirap": StirapGaussians,
}

_ALLOWED_KEYS = {"kind", "T", "t0", "delta", "Omega", "Omega_m", "w_frac", "delta_frac"}


def polynomial_single(T: float, t0: float = 1.0) -> PolynomialSingle:
    return PolynomialSingle(T, t0)


def sinusoidal_single(T: float, t0: float = 1.0) -> SinusoidalSingle:
    return SinusoidalSingle(T, t0)


def interface_plateau(T: float, t0: float = 1.0, delta: float = 0.01) -> InterfacePlateau:
    return InterfacePlateau(T, t0, delta)


def adiabatic_pump(Omega: float = 0.01, t0: float = 1.0) -> AdiabaticPump:
    return AdiabaticPump(Omega, t0)


def stirap_gaussians(
    T: float = 900.0, t0: float = 1.0, Omega_m: float = 0.9, w_frac: float = 3 / 16, delta_frac: float = 1 / 3
) -> StirapGaussians:
    return StirapGaussians(T, t0, Omega_m, w_frac, delta_frac)


def from_config(config: Mapping[str, Any]) -> Schedule:
    """Build a schedule from ``{"kind": ..., <params>}``.

    Accepted parameter keys are kind, T, t0, delta, Omega, Omega_m,
    w_frac and delta_frac; anything else is rejected.
    """
    unknown = set(config) - _ALLOWED_KEYS
    if unknown:
        raise ValueError(f"unknown schedule keys: {sorted(unknown)}")
    params = dict(config)
    kind = params.pop("kind", None)
    if kind not in SCHEDULE_KINDS:
        raise ValueError(f"unknown schedule kind {kind!r}; choose from {sorted(SCHEDULE_KINDS)}")
    try:
        return SCHEDULE_KINDS[kind](**params)
    except TypeError as exc:
        raise ValueError(f"bad parameters for schedule {kind!r}: {exc}") from None
