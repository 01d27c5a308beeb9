"""Probability integral transform, sorted uniforms and circular spacings.

Everything downstream works on the sorted values ``U_(1) <= ... <= U_(n)``
obtained by pushing a sample through the hypothesised cdf.  The spacings
``D_1, ..., D_{n+1}`` between consecutive values (with ``U_(0) = 0`` and
``U_(n+1) = 1``) live on the unit circle, and the shifted uniforms are their
cumulative sums started at any of the ``n + 1`` offsets.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np
from scipy.interpolate import PchipInterpolator
from scipy.special import ndtr, ndtri

from ._errors import GofError

CLAMP = 1e-12


def clamp(u: np.ndarray) -> np.ndarray:
    """Clip into ``[CLAMP, 1 - CLAMP]`` so that both logarithms stay finite."""
    return np.clip(u, CLAMP, 1.0 - CLAMP)


@dataclass(frozen=True)
class NullDistribution:
    """A fully specified continuous null distribution.

    Parameters
    ----------
    cdf, inverse_cdf : callable
        Vectorised monotone maps.
    label : str
        Short identifier echoed in reports.
    """

    cdf: Callable[[np.ndarray], np.ndarray]
    inverse_cdf: Callable[[np.ndarray], np.ndarray]
    label: str = "custom"

    @classmethod
    def uniform(cls) -> "NullDistribution":
        return cls(lambda x: np.asarray(x, dtype=float), lambda p: np.asarray(p, dtype=float), "uniform")

    @classmethod
    def normal(cls, loc: float = 0.0, scale: float = 1.0) -> "NullDistribution":
        if not scale > 0:
            raise GofError("bad_null_spec", f"normal scale must be positive, got {scale}")
        return cls(
            lambda x: ndtr((np.asarray(x, dtype=float) - loc) / scale),
            lambda p: loc + scale * ndtri(np.asarray(p, dtype=float)),
            f"normal({loc:g},{scale:g})",
        )

    @classmethod
    def exponential(cls, rate: float = 1.0) -> "NullDistribution":
        if not rate > 0:
            raise GofError("bad_null_spec", f"exponential rate must be positive, got {rate}")
        return cls(
            lambda x: -np.expm1(-rate * np.maximum(np.asarray(x, dtype=float), 0.0)),
            lambda p: -np.log1p(-np.asarray(p, dtype=float)) / rate,
            f"exponential({rate:g})",
        )

    @classmethod
    def from_quantiles(cls, probs, quantiles, label: str = "tabulated") -> "NullDistribution":
        """Null built from a quantile table by monotone (PCHIP) interpolation.

        Outside the tabulated range the cdf is held at the end probabilities.
        """
        p = np.asarray(probs, dtype=float)
        q = np.asarray(quantiles, dtype=float)
        if p.ndim != 1 or p.shape != q.shape or p.size < 2:
            raise GofError("bad_null_spec", "need matching 1-d probability and quantile columns")
        order = np.argsort(p)
        p, q = p[order], q[order]
        if np.any(np.diff(p) <= 0) or np.any(np.diff(q) <= 0):
            raise GofError("bad_null_spec", "quantile table must be strictly increasing")
        if p[0] < 0 or p[-1] > 1:
            raise GofError("bad_null_spec", "probabilities must lie in [0, 1]")
        fwd = PchipInterpolator(q, p, extrapolate=False)
        inv = PchipInterpolator(p, q, extrapolate=False)

        def cdf(x):
            x = np.asarray(x, dtype=float)
            out = fwd(np.clip(x, q[0], q[-1]))
            return np.where(x < q[0], p[0], np.where(x > q[-1], p[-1], out))

        def inverse_cdf(u):
            return inv(np.clip(np.asarray(u, dtype=float), p[0], p[-1]))

        return cls(cdf, inverse_cdf, label)

    @classmethod
    def from_quantile_file(cls, path: str | Path) -> "NullDistribution":
        """Read a two-column ``p,q`` table (header optional)."""
        rows = []
        with open(path, newline="") as fh:
            for rec in csv.reader(fh):
                if not rec or not rec[0].strip():
                    continue
                try:
                    rows.append((float(rec[0]), float(rec[1])))
                except (ValueError, IndexError):
                    if rows:
                        raise GofError("bad_null_spec", f"unparsable row in {path}: {rec}")
        if not rows:
            raise GofError("bad_null_spec", f"no quantile rows in {path}")
        p, q = zip(*rows)
        return cls.from_quantiles(p, q, label=f"quantile-file:{path}")


def parse_null(spec: str) -> NullDistribution:
    """Parse ``uniform | normal:MU,SIGMA | exponential:RATE | quantile-file:PATH``."""
    name, _, arg = spec.strip().partition(":")
    name = name.lower()
    try:
        if name == "uniform" and not arg:
            return NullDistribution.uniform()
        if name == "normal":
            mu, sigma = (float(v) for v in arg.split(",")) if arg else (0.0, 1.0)
            return NullDistribution.normal(mu, sigma)
        if name == "exponential":
            return NullDistribution.exponential(float(arg) if arg else 1.0)
    except ValueError as exc:
        raise GofError("bad_null_spec", f"cannot parse {spec!r}") from exc
    if name == "quantile-file" and arg:
        return NullDistribution.from_quantile_file(arg)
    raise GofError("bad_null_spec", f"unknown null distribution {spec!r}")


@dataclass(frozen=True)
class SortedUniforms:
    """Nondecreasing values strictly inside ``(0, 1)``."""

    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.ndim != 1 or v.size == 0:
            raise GofError("empty_sample", "sorted uniforms need a non-empty 1-d vector")
        if not np.all(np.isfinite(v)):
            raise GofError("non_finite_input")
        if np.any(np.diff(v) < 0):
            raise GofError("not_sorted", "values must be nondecreasing")
        v = clamp(v)
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def n(self) -> int:
        return self.values.size

    def __len__(self) -> int:
        return self.values.size


@dataclass(frozen=True)
class GridConstants:
    """Plotting positions ``a_i = (i - 1/2)/n`` and null means ``mu_i = i/(n+1)``."""

    n: int
    a: np.ndarray = field(init=False, repr=False)
    mu: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if self.n < 1:
            raise GofError("bad_n", f"n must be positive, got {self.n}")
        i = np.arange(1, self.n + 1, dtype=float)
        object.__setattr__(self, "a", (i - 0.5) / self.n)
        object.__setattr__(self, "mu", i / (self.n + 1))


@dataclass(frozen=True)
class Spacings:
    """The ``n + 1`` circular spacings; nonnegative and summing to one."""

    d: np.ndarray
    # cumulative values the spacings were taken from, kept so that offset 0
    # reproduces them exactly instead of re-adding rounded differences
    source: np.ndarray | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        d = np.array(self.d, dtype=float)
        if d.ndim != 1 or d.size < 2:
            raise GofError("bad_spacings", "need at least two spacings")
        if np.any(d < 0) or not np.all(np.isfinite(d)):
            raise GofError("bad_spacings", "spacings must be finite and nonnegative")
        if abs(math.fsum(d) - 1.0) > 1e-12:
            raise GofError("bad_spacings", f"spacings sum to {math.fsum(d)!r}, not 1")
        d.setflags(write=False)
        object.__setattr__(self, "d", d)

    @property
    def n(self) -> int:
        return self.d.size - 1


def probability_integral_transform(sample, null: NullDistribution | None = None) -> SortedUniforms:
    """Map a raw sample through the null cdf and sort.

    Values landing on 0 or 1 (floating point ties with the support edges)
    are clamped by :class:`SortedUniforms`.
    """
    x = np.asarray(sample, dtype=float).ravel()
    if x.size == 0:
        raise GofError("empty_sample")
    if not np.all(np.isfinite(x)):
        raise GofError("non_finite_input")
    null = null or NullDistribution.uniform()
    u = np.asarray(null.cdf(x), dtype=float)
    if not np.all(np.isfinite(u)):
        raise GofError("non_finite_input", f"null cdf {null.label} returned non-finite values")
    return SortedUniforms(np.sort(u))


def spacings(u: SortedUniforms) -> Spacings:
    v = u.values
    d = np.diff(np.concatenate(([0.0], v, [1.0])))
    return Spacings(d, source=v)


def shifted_uniforms(d: Spacings | SortedUniforms, c: int) -> SortedUniforms:
    """Circular counterpart of the sorted uniforms started at spacing ``c + 1``.

    ``U^(c)_(i) = U_(c+i) - U_(c)`` with the cumulative sums continued
    periodically past ``U_(n+1) = 1``.  Spacings produced by :func:`spacings`
    remember their source, so ``c = 0`` reproduces it bit for bit.
    """
    if isinstance(d, SortedUniforms):
        u = d.values
    elif d.source is not None:
        u = d.source
    else:
        u = uniforms_from_spacings(d.d[None, :])[0]
    n = u.size
    if not 0 <= c <= n:
        raise GofError("shift_out_of_range", f"c={c} not in 0..{n}")
    return SortedUniforms(shifted_matrix(u[None, :], shifts=[c])[0, 0])


def uniforms_from_spacings(d: np.ndarray) -> np.ndarray:
    """Inverse of :func:`spacings_matrix`: rows of cumulative sums, shape (m, n)."""
    d = np.asarray(d, dtype=float)
    return np.cumsum(d[:, :-1], axis=1)


def shifted_matrix(u: np.ndarray, shifts=None) -> np.ndarray:
    """All shifted uniform vectors for a batch of sorted uniform rows.

    Parameters
    ----------
    u : ndarray, shape (m, n)
        Rows of sorted uniforms.
    shifts : sequence of int, optional
        Offsets to materialise; defaults to ``0..n``.

    Returns
    -------
    ndarray, shape (m, len(shifts), n)
        Clamped shifted uniforms.  Offset 0 returns the input rows unchanged.
    """
    u = np.asarray(u, dtype=float)
    m, n = u.shape
    c = np.arange(n + 1) if shifts is None else np.asarray(shifts, dtype=int)
    zero, one = np.zeros((m, 1)), np.ones((m, 1))
    ext = np.concatenate([zero, u, one, 1.0 + u], axis=1)
    idx = c[:, None] + np.arange(1, n + 1)[None, :]
    out = ext[:, idx] - ext[:, c][:, :, None]
    return clamp(out)


def spacings_matrix(u: np.ndarray) -> np.ndarray:
    """Row-wise spacings for a batch of sorted uniform rows, shape (m, n+1)."""
    u = np.asarray(u, dtype=float)
    m = u.shape[0]
    return np.diff(np.concatenate([np.zeros((m, 1)), u, np.ones((m, 1))], axis=1), axis=1)


def read_sample(path: str | Path, column: str | int | None = None) -> np.ndarray:
    """Read one value per line, or one CSV column chosen by name or index."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise GofError("io_error", str(exc)) from exc
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise GofError("io_error", f"{path} is empty")
    rows = list(csv.reader(lines))
    if column is None and all(len(r) == 1 for r in rows):
        col = 0
        start = 0
    else:
        header = [h.strip() for h in rows[0]]
        if column is None:
            col = 0
        elif isinstance(column, int) or str(column).isdigit():
            col = int(column)
        elif column in header:
            col = header.index(column)
        else:
            raise GofError("io_error", f"column {column!r} not found in {path}")
        start = 0
    values = []
    for k, r in enumerate(rows[start:]):
        try:
            values.append(float(r[col]))
        except ValueError:
            if k == 0:
                continue  # header line
            raise GofError("io_error", f"non-numeric entry {r[col]!r} in {path}")
        except IndexError:
            raise GofError("io_error", f"row {k + 1} of {path} has no column {col}")
    if not values:
        raise GofError("io_error", f"no numeric values in {path}")
    return np.asarray(values)
