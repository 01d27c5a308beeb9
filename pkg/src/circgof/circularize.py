"""Looping and pooling: circularly symmetric versions of any statistic.

The looping step evaluates a base statistic on each of the ``n + 1``
shifted uniform vectors (one per starting spacing on the circle); the
pooling step combines the resulting scan by its mean or its maximum.
"""

from __future__ import annotations

import enum
import math

import numpy as np

from ._errors import GofError
from .order_stats import SortedUniforms, clamp, shifted_matrix
from .statistics import StatisticKind, batch_statistics


class PoolingMode(str, enum.Enum):
    NONE = "cs0"
    AVG = "cs1"
    MAX = "cs2"

    @classmethod
    def parse(cls, token) -> "PoolingMode":
        if isinstance(token, cls):
            return token
        key = str(token).strip().lower()
        key = {"none": "cs0", "cs_none": "cs0", "avg": "cs1", "cs_avg": "cs1", "mean": "cs1",
               "max": "cs2", "cs_max": "cs2"}.get(key, key)
        try:
            return cls(key)
        except ValueError:
            raise GofError("bad_selector", f"unknown pooling mode {token!r}") from None

    @property
    def header(self) -> str:
        return {"cs0": "CS_0", "cs1": "CS_1", "cs2": "CS_2"}[self.value]


def _rows(u) -> np.ndarray:
    if isinstance(u, SortedUniforms):
        return u.values[None, :]
    arr = clamp(np.asarray(u, dtype=float))
    return arr[None, :] if arr.ndim == 1 else arr


def scan_batch(kinds, u) -> dict[StatisticKind, np.ndarray]:
    """Scan values for a batch: ``{kind: array (m, n + 1)}``."""
    rows = _rows(u)
    out = batch_statistics(shifted_matrix(rows), kinds)
    # shift 0 is the input itself; reuse the 2-d evaluation so the identity is exact
    base = batch_statistics(rows, kinds)
    for k in out:
        out[k][:, 0] = base[k]
    return out


def scan(statistic, u) -> np.ndarray:
    """``T_{n,c}`` for ``c = 0..n`` on one sample."""
    kind = StatisticKind.parse(statistic)
    return scan_batch([kind], u)[kind][0]


def pool(values, mode) -> float | np.ndarray:
    """Combine scan values along the last axis.

    A 1-d scan gives a float (mean via ``math.fsum``); a 2-d batch of scans
    gives one pooled value per row.
    """
    mode = PoolingMode.parse(mode)
    v = np.asarray(values, dtype=float)
    if v.shape[-1] == 0:
        raise GofError("empty_scan")
    if mode is PoolingMode.NONE:
        out = v[..., 0]
    elif mode is PoolingMode.MAX:
        out = v.max(axis=-1)
    elif v.ndim == 1:
        return math.fsum(v) / v.size
    else:
        out = v.mean(axis=-1)
    return float(out) if np.ndim(out) == 0 else out


def pooled_batch(kinds, modes, u) -> dict[tuple[StatisticKind, PoolingMode], np.ndarray]:
    """Every (statistic, pooling) combination for a batch of samples.

    Only the unshifted vector is evaluated when no circular pooling is asked
    for, which keeps uncircularized Monte Carlo runs at O(n) per sample.
    """
    kinds = [StatisticKind.parse(k) for k in kinds]
    modes = [PoolingMode.parse(m) for m in modes]
    rows = _rows(u)
    out = {}
    if any(m is not PoolingMode.NONE for m in modes):
        scans = scan_batch(kinds, rows)
        for k in kinds:
            for m in modes:
                out[k, m] = pool(scans[k], m)
    else:
        base = batch_statistics(rows, kinds)
        for k in kinds:
            out[k, PoolingMode.NONE] = base[k]
    return out


def circular_statistic(statistic, mode, u) -> float:
    """Pooled (circularized) statistic for one sample."""
    mode = PoolingMode.parse(mode)
    kind = StatisticKind.parse(statistic)
    if mode is PoolingMode.NONE:
        return float(batch_statistics(_rows(u), [kind])[kind][0])
    return pool(scan(kind, u), mode)
