"""Monte Carlo ensembles over static disorder.

Realizations are processed in fixed blocks of :data:`BLOCK_SIZE` consecutive
indices. Blocks are the unit of parallel work, so the per-realization
transfer probabilities are bit-identical for any worker count.
"""

from __future__ import annotations

import csv
import enum
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from functools import lru_cache
from typing import Any, Sequence

import numpy as np

from . import disorder as dis
from .drive import engineer_drive, simplify_drive
from .dynamics import BatchPerturbation, choose_steps, midpoints, propagate_batch
from .lattice import ChainSpec
from .schedules import AdiabaticPump, InterfacePlateau, PolynomialSingle, Schedule, StirapGaussians

BLOCK_SIZE = 200


class Protocol(str, enum.Enum):
    NNN_SINGLE = "nnn_single"
    NNN_INTERFACE = "nnn_interface"
    ADIABATIC_PUMP = "adiabatic_pump"
    STIRAP = "stirap"


class EnsembleError(RuntimeError):
    def __init__(self, message: str, seed: int | None = None, index: int | None = None):
        super().__init__(message if seed is None else f"{message} (realization {index}, seed {seed})")
        self.seed = seed
        self.index = index


@dataclass(frozen=True)
class EnsembleConfig:
    """Everything needed to regenerate an ensemble.

    ``n_a`` is the number of A sites (10 in all reference runs). ``T`` is
    ignored by the adiabatic pump, whose duration is pi/Omega. ``n_steps``
    of None selects the step count automatically (see :func:`resolve_steps`).
    """

    protocol: Protocol = Protocol.NNN_SINGLE
    n_a: int = 10
    T: float = 2.0
    disorder: dis.DisorderKind = dis.DisorderKind.NONE
    alpha: float = 0.0
    gamma: float = 0.0
    n_realizations: int = 1000
    master_seed: int = 12345
    n_steps: int | None = None
    delta: float = 0.01
    Omega: float = 0.01
    Omega_m: float = 0.9
    w_frac: float = 3 / 16
    delta_frac: float = 1 / 3
    simplification: int | None = None
    drive: bool = True
    bins: int = 100

    def __post_init__(self):
        object.__setattr__(self, "protocol", Protocol(self.protocol))
        object.__setattr__(self, "disorder", dis.DisorderKind(self.disorder))
        if self.n_realizations < 1:
            raise ValueError("n_realizations must be >= 1")
        if self.protocol in (Protocol.NNN_INTERFACE, Protocol.STIRAP) and self.n_a % 2:
            raise ValueError("interface chains need an even number of A sites")
        if self.n_a < 2:
            raise ValueError("n_a must be >= 2")
        if self.alpha < 0 or self.gamma < 0:
            raise ValueError("alpha and gamma must be non-negative")
        if self.bins < 1:
            raise ValueError("bins must be >= 1")
        if self.disorder is dis.DisorderKind.DRIVE_BIAS and not self.has_drive:
            raise ValueError("drive-bias disorder needs an NNN protocol with the drive on")

    @property
    def has_drive(self) -> bool:
        return self.drive and self.protocol in (Protocol.NNN_SINGLE, Protocol.NNN_INTERFACE)

    def chain(self) -> ChainSpec:
        if self.protocol in (Protocol.NNN_SINGLE, Protocol.ADIABATIC_PUMP):
            return ChainSpec.single(self.n_a)
        return ChainSpec.interface(self.n_a // 2)

    def schedule(self) -> Schedule:
        if self.protocol is Protocol.NNN_SINGLE:
            return PolynomialSingle(self.T)
        if self.protocol is Protocol.NNN_INTERFACE:
            return InterfacePlateau(self.T, delta=self.delta)
        if self.protocol is Protocol.ADIABATIC_PUMP:
            return AdiabaticPump(self.Omega)
        return StirapGaussians(self.T, Omega_m=self.Omega_m, w_frac=self.w_frac, delta_frac=self.delta_frac)

    def to_dict(self) -> dict[str, Any]:
        d = asdict(self)
        d["protocol"] = self.protocol.value
        d["disorder"] = self.disorder.value
        return d

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "EnsembleConfig":
        known = set(cls.__dataclass_fields__)
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown ensemble keys: {sorted(unknown)}")
        return cls(**data)


@dataclass
class EnsembleStats:
    mean: float
    std: float
    stderr: float
    bin_edges: np.ndarray
    counts: np.ndarray
    n_realizations: int
    seeds: np.ndarray | None = None
    probabilities: np.ndarray | None = None
    n_steps: int | None = None
    max_norm_drift: float = 0.0
    config: dict = field(default_factory=dict)

    @classmethod
    def from_samples(cls, p: np.ndarray, seeds=None, bins: int = 100, keep: bool = True, **extra) -> "EnsembleStats":
        p = np.asarray(p, dtype=float)
        n = p.size
        std = float(np.std(p, ddof=1)) if n > 1 else 0.0
        # p may exceed 1 by rounding; the last bin is closed so it still counts
        counts, edges = np.histogram(np.clip(p, 0.0, 1.0), bins=bins, range=(0.0, 1.0))
        return cls(
            mean=float(np.mean(p)),
            std=std,
            stderr=std / math.sqrt(n),
            bin_edges=edges,
            counts=counts,
            n_realizations=n,
            seeds=None if not keep or seeds is None else np.asarray(seeds, dtype=np.uint64),
            probabilities=p if keep else None,
            **extra,
        )

    def fraction_above(self, threshold: float) -> float:
        if self.probabilities is None:
            raise ValueError("per-realization records were not kept")
        return float(np.mean(self.probabilities > threshold))

    def to_dict(self) -> dict[str, Any]:
        data = {
            "mean": self.mean,
            "std": self.std,
            "stderr": self.stderr,
            "n_realizations": self.n_realizations,
            "n_steps": self.n_steps,
            "max_norm_drift": self.max_norm_drift,
            "histogram": {"bin_edges": self.bin_edges.tolist(), "counts": self.counts.tolist()},
            "config": self.config,
        }
        if self.probabilities is not None:
            data["records"] = [
                {"index": i, "seed": int(s), "p": float(p)}
                for i, (s, p) in enumerate(zip(self.seeds, self.probabilities))
            ]
        return data

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1)


# --- clean problem (drive on the midpoint grid) -----------------------------------


@lru_cache(maxsize=32)
def _clean_problem(config: EnsembleConfig, n_steps: int):
    spec = config.chain()
    schedule = config.schedule()
    tm = midpoints(schedule.T, n_steps)
    if config.has_drive:
        profile = engineer_drive(spec, schedule, tm)
        if config.simplification is not None:
            profile = simplify_drive(profile, config.simplification)
        rho = profile.rho
    else:
        rho = np.zeros((n_steps, spec.n_bonds))
    return spec, schedule, rho


_STEP_CACHE: dict = {}


def resolve_steps(config: EnsembleConfig) -> int:
    """Step count for the ensemble.

    An explicit ``n_steps`` wins. Otherwise the clean protocol is converged
    on a doubling ladder until ``|p(dt) - p(dt/2)| < 1e-8``.
    """
    if config.n_steps is not None:
        return int(config.n_steps)
    key = replace(config, disorder=dis.DisorderKind.NONE, alpha=0.0, gamma=0.0, n_realizations=1, master_seed=0)
    if key not in _STEP_CACHE:
        spec = config.chain()
        schedule = config.schedule()

        def drive(grid):
            from .drive import DriveProfile

            if not config.has_drive:
                return DriveProfile(grid, np.zeros((grid.size, spec.n_bonds)))
            prof = engineer_drive(spec, schedule, grid)
            return prof if config.simplification is None else simplify_drive(prof, config.simplification)

        start = 500 if schedule.T <= 10 else int(2 * schedule.T)
        _STEP_CACHE[key] = choose_steps(spec, schedule, drive, start=start)
    return _STEP_CACHE[key]


def _perturbation(config: EnsembleConfig, spec: ChainSpec, seeds: Sequence[int]) -> BatchPerturbation:
    R = len(seeds)
    L = spec.n_sites
    kind = config.disorder
    if kind is dis.DisorderKind.NONE:
        return BatchPerturbation(R)
    if kind is dis.DisorderKind.DIAGONAL:
        return BatchPerturbation(R, onsite=np.stack([dis.onsite_gaussian(L, config.alpha, s) for s in seeds]))
    if kind is dis.DisorderKind.OFF_DIAGONAL:
        return BatchPerturbation(R, bonds=np.stack([dis.bond_gaussian(L, config.alpha, s) for s in seeds]))
    if kind is dis.DisorderKind.CORRELATED:
        return BatchPerturbation(
            R, onsite=np.stack([dis.correlated_onsite(L, config.alpha, config.gamma, s) for s in seeds])
        )
    return BatchPerturbation(R, drive_scale=np.array([dis.bias_factor(config.alpha, s) for s in seeds]))


def _run_block(config: EnsembleConfig, n_steps: int, indices: Sequence[int]) -> np.ndarray:
    spec, schedule, rho = _clean_problem(config, n_steps)
    seeds = [dis.realization_seed(config.master_seed, i) for i in indices]
    pert = _perturbation(config, spec, seeds)
    try:
        psi = propagate_batch(spec, schedule, rho, pert, n_steps)
    except ArithmeticError as exc:
        for i, s in zip(indices, seeds):
            try:
                propagate_batch(spec, schedule, rho, _perturbation(config, spec, [s]), n_steps)
            except ArithmeticError:
                raise EnsembleError(str(exc), seed=s, index=i) from exc
        raise EnsembleError(str(exc)) from exc
    drift = np.abs(np.linalg.norm(psi, axis=1) - 1.0)
    return np.abs(psi[:, spec.a_site(spec.n_a)]) ** 2, drift


def _blocks(n: int) -> list[range]:
    return [range(i, min(i + BLOCK_SIZE, n)) for i in range(0, n, BLOCK_SIZE)]


def run_ensemble(config: EnsembleConfig, workers: int = 1, keep_records: bool = True, progress=None) -> EnsembleStats:
    """Sample, propagate and aggregate ``config.n_realizations`` realizations."""
    n_steps = resolve_steps(config)
    blocks = _blocks(config.n_realizations)
    p = np.empty(config.n_realizations)
    drift = np.empty(config.n_realizations)
    if workers > 1 and len(blocks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = {pool.submit(_run_block, config, n_steps, b): b for b in blocks}
            for fut, b in futures.items():
                p[b.start : b.stop], drift[b.start : b.stop] = fut.result()
                if progress:
                    progress(b.stop - b.start)
    else:
        for b in blocks:
            p[b.start : b.stop], drift[b.start : b.stop] = _run_block(config, n_steps, b)
            if progress:
                progress(b.stop - b.start)
    seeds = [dis.realization_seed(config.master_seed, i) for i in range(config.n_realizations)]
    return EnsembleStats.from_samples(
        p,
        seeds,
        bins=config.bins,
        keep=keep_records,
        n_steps=n_steps,
        max_norm_drift=float(np.max(drift)),
        config=config.to_dict(),
    )


# --- sweeps and comparisons ---------------------------------------------------------

SWEEP_AXES = {
    "disorder_strength": "alpha",
    "gamma": "gamma",
    "simplification_index": "simplification",
    "transfer_time": "T",
}


@dataclass
class SweepTable:
    axis: str
    values: list
    stats: list[EnsembleStats]

    def rows(self):
        for v, s in zip(self.values, self.stats):
            yield v, s.mean, s.std, s.stderr, s.n_realizations

    def to_csv(self, path, header: str | None = None) -> None:
        with open(path, "w", newline="") as fh:
            if header:
                fh.write(f"# {header}\n")
            w = csv.writer(fh, lineterminator="\n")
            w.writerow([self.axis, "mean", "std", "stderr", "n"])
            for v, mean, std, se, n in self.rows():
                w.writerow([f"{float(v):.12g}", f"{mean:.12g}", f"{std:.12g}", f"{se:.12g}", n])


def sweep(config: EnsembleConfig, axis: str, values, workers: int = 1, keep_records: bool = False) -> SweepTable:
    """One ensemble per axis value, all other settings fixed."""
    if axis not in SWEEP_AXES:
        raise ValueError(f"unknown sweep axis {axis!r}; choose from {sorted(SWEEP_AXES)}")
    field_name = SWEEP_AXES[axis]
    stats = []
    for v in values:
        if field_name == "simplification":
            v = int(v)
        stats.append(run_ensemble(replace(config, **{field_name: v}), workers=workers, keep_records=keep_records))
    return SweepTable(axis, list(values), stats)


BASELINE = {Protocol.NNN_SINGLE: Protocol.ADIABATIC_PUMP, Protocol.NNN_INTERFACE: Protocol.STIRAP}


@dataclass
class Comparison:
    nnn: EnsembleStats
    baseline: EnsembleStats
    paired_mean_difference: float
    n_paired: int

    def to_dict(self) -> dict[str, Any]:
        return {
            "nnn": {"mean": self.nnn.mean, "stderr": self.nnn.stderr, "n": self.nnn.n_realizations},
            "baseline": {
                "mean": self.baseline.mean,
                "stderr": self.baseline.stderr,
                "n": self.baseline.n_realizations,
            },
            "paired_mean_difference": self.paired_mean_difference,
            "n_paired": self.n_paired,
        }


def baseline_compare(
    nnn_config: EnsembleConfig,
    baseline_realizations: int | None = None,
    baseline_T: float | None = None,
    workers: int = 1,
) -> Comparison:
    """NNN protocol against its adiabatic baseline on the same disorder seeds.

    The single chain is compared with the adiabatic pump, the interface
    chain with STIRAP (T = 900/t0 unless ``baseline_T`` is given). The
    baseline may use fewer realizations; pairing uses the common prefix.
    """
    if nnn_config.protocol not in BASELINE:
        raise ValueError("baseline_compare needs an NNN protocol")
    base_protocol = BASELINE[nnn_config.protocol]
    base_T = baseline_T if baseline_T is not None else (900.0 if base_protocol is Protocol.STIRAP else nnn_config.T)
    base_config = replace(
        nnn_config,
        protocol=base_protocol,
        T=base_T,
        n_steps=None,
        simplification=None,
        n_realizations=baseline_realizations or nnn_config.n_realizations,
    )
    nnn = run_ensemble(nnn_config, workers=workers)
    base = run_ensemble(base_config, workers=workers)
    m = min(nnn.n_realizations, base.n_realizations)
    diff = float(np.mean(nnn.probabilities[:m] - base.probabilities[:m]))
    return Comparison(nnn, base, diff, m)
