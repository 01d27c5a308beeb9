"""Seeded null simulation, critical values, p-values and power studies.

Replicates are generated in fixed-size blocks, each drawing from its own
substream ``(tag, block)`` of a :class:`~circgof.seeding.RunSeed`.  Results
are assembled by block index, so they do not depend on how many worker
threads evaluate the blocks.
"""

from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from ._errors import GofError
from .circularize import PoolingMode, pooled_batch
from .seeding import RunSeed, as_seed
from .statistics import POWER_STATISTICS, StatisticKind

BLOCK = 1000
# upper bound on elements of one shifted (rows, n+1, n) array
_MAX_ELEMENTS = 4_000_000

COLUMN_LABELS = {
    StatisticKind.W2: "W2",
    StatisticKind.R2: "R2",
    StatisticKind.AD: "ADeq2",
    StatisticKind.AD_CLASSIC: "AD",
    StatisticKind.ZHANG_LR: "LR",
    StatisticKind.CVM: "CvM",
    StatisticKind.KS: "KS",
}


# ---------------------------------------------------------------------------
# Perturbation family
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PerturbationParams:
    """Local perturbation of Uniform(0, 1) on ``(eta - sigma, eta + sigma)``.

    The density is ``1 + tau`` on the left half of the window and ``1 - tau``
    on the right half.  ``tau > 1`` gives a negative density; such parameters
    are accepted (the inverse-cdf sampler is still defined) but flagged by
    :attr:`is_proper`.
    """

    tau: float
    eta: float
    sigma: float

    def __post_init__(self):
        if not self.sigma > 0:
            raise GofError("bad_perturbation", f"sigma must be positive, got {self.sigma}")
        if not self.tau >= 0:
            raise GofError("bad_perturbation", f"tau must be nonnegative, got {self.tau}")
        if self.eta - self.sigma < -1e-12 or self.eta + self.sigma > 1 + 1e-12:
            raise GofError("bad_perturbation",
                           f"window ({self.eta - self.sigma:g}, {self.eta + self.sigma:g}) leaves (0, 1)")

    @property
    def is_proper(self) -> bool:
        return self.tau <= 1

    @property
    def window(self) -> tuple[float, float]:
        return (self.eta - self.sigma, self.eta + self.sigma)


def _as_unit(x, code):
    arr = np.asarray(x, dtype=float)
    if np.any(~((arr > 0) & (arr < 1))):
        raise GofError(code, "arguments must lie strictly inside (0, 1)")
    return arr


def perturbed_inverse_cdf(p, params: PerturbationParams):
    """Inverse cdf of the perturbed law, branch by branch with first match winning.

    For ``tau <= 1`` the branches are disjoint and the map is continuous and
    nondecreasing.  For ``tau > 1`` the literal branch order still gives a
    well-defined (piecewise monotone) sampler.
    """
    arr = _as_unit(p, "probability_out_of_range")
    t, e, s = params.tau, params.eta, params.sigma
    with np.errstate(divide="ignore", invalid="ignore"):
        x = np.select(
            [arr <= e - s, arr <= e + t * s, arr < e + s],
            [arr, arr - t * (arr - e + s) / (1 + t), arr + t * (arr - e - s) / (1 - t)],
            default=arr,
        )
    return float(x) if x.ndim == 0 else x


def perturbed_cdf(x, params: PerturbationParams):
    """Piecewise-linear cdf of the perturbed law; only defined for ``tau <= 1``."""
    if not params.is_proper:
        raise GofError("improper_cdf", f"tau = {params.tau} > 1 has no valid cdf")
    arr = _as_unit(x, "value_out_of_range")
    t, e, s = params.tau, params.eta, params.sigma
    inside = (arr > e - s) & (arr < e + s)
    left = arr <= e
    f = np.where(inside & left, arr + t * (arr - e + s),
                 np.where(inside, arr - t * (arr - e - s), arr))
    return float(f) if f.ndim == 0 else f


# ---------------------------------------------------------------------------
# Simulation engine
# ---------------------------------------------------------------------------

def _evaluate(kinds, modes, u):
    n = u.shape[1]
    rows = max(1, _MAX_ELEMENTS // ((n + 1) * n))
    parts = [pooled_batch(kinds, modes, u[s:s + rows]) for s in range(0, u.shape[0], rows)]
    return {k: np.concatenate([p[k] for p in parts]) for k in parts[0]}


def simulate(kinds, modes, n: int, reps: int, seed=None, tag: str = "null",
             params: PerturbationParams | None = None, workers: int = 1) -> dict:
    """Statistic values on ``reps`` sorted samples of size ``n``.

    Samples are Uniform(0, 1) or, when ``params`` is given, drawn from the
    perturbed law by inverse cdf.  Returns ``{(kind, mode): array(reps)}``.
    """
    if n < 1:
        raise GofError("bad_n", f"n must be positive, got {n}")
    if reps < 1:
        raise GofError("bad_reps", f"reps must be positive, got {reps}")
    kinds = [StatisticKind.parse(k) for k in kinds]
    modes = [PoolingMode.parse(m) for m in modes]
    rs = as_seed(seed)
    stream = f"{tag}/n={n}"
    starts = list(range(0, reps, BLOCK))

    def one(b):
        size = min(BLOCK, reps - starts[b])
        u = rs.generator(stream, b).random((size, n))
        if params is not None:
            u = perturbed_inverse_cdf(u, params)
        u.sort(axis=1)
        return _evaluate(kinds, modes, u)

    if workers > 1 and len(starts) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            blocks = list(pool.map(one, range(len(starts))))
    else:
        blocks = [one(b) for b in range(len(starts))]
    return {k: np.concatenate([blk[k] for blk in blocks]) for k in blocks[0]}


def simulate_null(statistic, pooling, n: int, reps: int, seed=None, workers: int = 1) -> np.ndarray:
    """Null sample of one statistic/pooling combination (``reps >= 100``)."""
    if reps < 100:
        raise GofError("insufficient_null_sample", f"need at least 100 replicates, got {reps}")
    kind, mode = StatisticKind.parse(statistic), PoolingMode.parse(pooling)
    return simulate([kind], [mode], n, reps, seed, workers=workers)[kind, mode]


def critical_value(null_sample, alpha: float) -> float:
    """Upper-tail critical value: the ``ceil((1 - alpha) m)``-th order statistic."""
    if not 0 < alpha < 1:
        raise GofError("bad_alpha", f"alpha must be in (0, 1), got {alpha}")
    s = np.sort(np.asarray(null_sample, dtype=float))
    m = s.size
    if m < 1 / alpha:
        raise GofError("insufficient_null_sample", f"{m} replicates are too few for alpha={alpha}")
    k = math.ceil(round((1 - alpha) * m, 9))
    return float(s[k - 1])


def critical_value_se(null_sample, alpha: float) -> float:
    """Half the spread of the order statistics one binomial SE either side of ``1 - alpha``."""
    s = np.sort(np.asarray(null_sample, dtype=float))
    m = s.size
    half = math.sqrt(alpha * (1 - alpha) / m)
    lo = s[max(0, math.ceil((1 - alpha - half) * m) - 1)]
    hi = s[min(m - 1, math.ceil((1 - alpha + half) * m) - 1)]
    return 0.5 * float(hi - lo)


def p_value(stat_value, null_sample):
    """Add-one upper-tail Monte Carlo p-value ``(1 + #{null >= v}) / (m + 1)``."""
    s = np.sort(np.asarray(null_sample, dtype=float))
    if s.size == 0:
        raise GofError("insufficient_null_sample", "empty null sample")
    v = np.asarray(stat_value, dtype=float)
    above = s.size - np.searchsorted(s, v, side="left")
    p = (1.0 + above) / (s.size + 1.0)
    return float(p) if p.ndim == 0 else p


@dataclass(frozen=True)
class CriticalValue:
    statistic: str
    pooling: str
    n: int
    alpha: float
    value: float
    se: float
    reps: int


@dataclass
class CriticalValueTable:
    entries: list[CriticalValue]
    seed: int

    def lookup(self, statistic, pooling, n: int) -> CriticalValue:
        kind, mode = StatisticKind.parse(statistic), PoolingMode.parse(pooling)
        for e in self.entries:
            if e.statistic == kind.value and e.pooling == mode.value and e.n == n:
                return e
        raise KeyError((kind.value, mode.value, n))

    def rows(self) -> list[dict]:
        return [asdict(e) for e in self.entries]


def critical_value_table(kinds, modes, n_values, alpha: float = 0.05, reps: int = 10_000,
                         seed=None, workers: int = 1) -> CriticalValueTable:
    rs = as_seed(seed)
    entries = []
    for n in n_values:
        sims = simulate(kinds, modes, n, reps, rs, workers=workers)
        for (kind, mode), values in sims.items():
            entries.append(CriticalValue(kind.value, mode.value, int(n), alpha,
                                         critical_value(values, alpha),
                                         critical_value_se(values, alpha), reps))
    return CriticalValueTable(entries, rs.master_seed)


# ---------------------------------------------------------------------------
# Power study
# ---------------------------------------------------------------------------

@dataclass
class PowerConfig:
    statistics: list[str] = field(default_factory=lambda: [k.value for k in POWER_STATISTICS])
    poolings: list[str] = field(default_factory=lambda: ["cs0", "cs1", "cs2"])
    n_values: list[int] = field(default_factory=lambda: [10, 50, 100, 150, 200, 250, 300])
    alpha: float = 0.05
    null_reps: int = 10_000
    alt_reps: int = 10_000
    tau: float = 0.75
    eta: float = 0.25
    sigma: float = 0.25
    seed: int = RunSeed.DEFAULT
    workers: int = 1

    def __post_init__(self):
        self.statistics = [StatisticKind.parse(s).value for s in self.statistics]
        self.poolings = [PoolingMode.parse(p).value for p in self.poolings]
        self.n_values = [int(n) for n in self.n_values]
        if not self.n_values or min(self.n_values) < 1:
            raise GofError("bad_n", "n_values must be a nonempty list of positive integers")
        if not 0 < self.alpha < 1:
            raise GofError("bad_alpha", f"alpha must be in (0, 1), got {self.alpha}")
        if self.alt_reps < 1:
            raise GofError("bad_reps", "alt_reps must be positive")
        if self.null_reps < 1 / self.alpha:
            raise GofError("insufficient_null_sample", f"null_reps={self.null_reps} is too small")
        self.params  # validates the window

    @property
    def params(self) -> PerturbationParams:
        return PerturbationParams(self.tau, self.eta, self.sigma)

    @classmethod
    def from_mapping(cls, data: dict) -> "PowerConfig":
        known = set(cls.__dataclass_fields__)
        unknown = sorted(set(data) - known)
        if unknown:
            raise GofError("bad_config", f"unknown config keys: {', '.join(unknown)}")
        return cls(**data)

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class PowerCell:
    n: int
    statistic: str
    pooling: str
    power: float
    se: float
    critical_value: float


@dataclass
class PowerTable:
    cells: list[PowerCell]
    config: PowerConfig

    def power(self, n: int, statistic, pooling) -> float:
        kind, mode = StatisticKind.parse(statistic), PoolingMode.parse(pooling)
        for c in self.cells:
            if c.n == n and c.statistic == kind.value and c.pooling == mode.value:
                return c.power
        raise KeyError((n, kind.value, mode.value))

    def columns(self) -> list[tuple[str, str]]:
        return [(s, p) for s in self.config.statistics for p in self.config.poolings]

    @staticmethod
    def column_name(statistic, pooling) -> str:
        return f"{COLUMN_LABELS[StatisticKind.parse(statistic)]}_{PoolingMode.parse(pooling).header}"

    def wide_rows(self) -> list[list]:
        """One row per ``n`` with a power column per statistic and pooling."""
        return [[n] + [self.power(n, s, p) for s, p in self.columns()] for n in self.config.n_values]

    def to_csv(self, header_lines=()) -> str:
        buf = io.StringIO()
        for line in header_lines:
            buf.write(f"# {line}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["n"] + [self.column_name(s, p) for s, p in self.columns()])
        for row in self.wide_rows():
            w.writerow([row[0]] + [f"{v:.4f}" for v in row[1:]])
        return buf.getvalue()

    def to_dict(self) -> dict:
        return {"config": self.config.to_dict(), "cells": [asdict(c) for c in self.cells]}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def power_study(config: PowerConfig, progress=None) -> PowerTable:
    """Rejection rates of every statistic/pooling under the perturbed alternative.

    For each ``n`` the critical values come from ``null_reps`` uniform
    samples and the rejection fraction from ``alt_reps`` perturbed samples.
    """
    rs = as_seed(config.seed)
    kinds, modes = config.statistics, config.poolings
    cells = []
    for n in config.n_values:
        null = simulate(kinds, modes, n, config.null_reps, rs, tag="null", workers=config.workers)
        alt = simulate(kinds, modes, n, config.alt_reps, rs, tag="alt", params=config.params,
                       workers=config.workers)
        for key in null:
            cv = critical_value(null[key], config.alpha)
            p = float(np.mean(alt[key] > cv))
            cells.append(PowerCell(n, key[0].value, key[1].value, p,
                                   math.sqrt(p * (1 - p) / config.alt_reps), cv))
        if progress is not None:
            progress(n)
    return PowerTable(cells, config)
