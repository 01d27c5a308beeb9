"""Large-sample null laws as weighted sums of independent chi-square(1) terms.

Two constructions are provided.  For the uncircularized ``R_n^2`` the
weights are reciprocals of Sturm-Liouville eigenvalues ``lambda_k =
omega_k^2 + 1/4``, where each ``omega_k`` solves one of two transcendental
equations on the truncated unit interval ``[eps, 1 - eps]``.  For the
average-pooled statistics the weights are eigenvalues of a symmetric
circulant kernel matrix, obtained from its first row by a discrete cosine
sum.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from ._errors import GofError
from .seeding import RunSeed, as_seed
from .statistics import harmonic, rescale_constant


# ---------------------------------------------------------------------------
# Sturm-Liouville spectrum
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class EigenSpectrum:
    lambdas: np.ndarray
    omegas: np.ndarray
    branch: np.ndarray  # "cos" or "sin" per root
    epsilon: float

    @property
    def count(self) -> int:
        return self.lambdas.size

    @property
    def log_ratio(self) -> float:
        return math.log((1 - self.epsilon) / self.epsilon)


def _cos_branch(theta, L):
    # tan(theta) = L / (2 theta), multiplied through by cos(theta)
    return 2.0 * theta / L * np.sin(theta) - np.cos(theta)


def _sin_branch(theta, L):
    # tan(theta) = -2 theta / L
    return np.sin(theta) + 2.0 * theta / L * np.cos(theta)


def _bisect(f, lo, hi, tol, max_iter=200):
    """Vectorised bisection on brackets already known to straddle a root."""
    flo = f(lo)
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        fm = f(mid)
        left = np.sign(fm) == np.sign(flo)
        lo = np.where(left, mid, lo)
        flo = np.where(left, fm, flo)
        hi = np.where(left, hi, mid)
        if np.all(hi - lo <= tol):
            break
    return 0.5 * (lo + hi)


def rn2_eigen_roots(epsilon: float, K: int, tol: float = 1e-12) -> EigenSpectrum:
    """First ``K`` eigenvalues of the weighted Brownian-bridge kernel on ``[eps, 1-eps]``.

    In the variable ``theta = omega * L`` with ``L = ln((1-eps)/eps)`` the
    roots alternate between the two branches, one per quarter period:
    cos-type roots lie in ``[k pi, k pi + pi/2)`` and sin-type roots in
    ``[k pi - pi/2, k pi)``.  Both equations are rewritten without ``tan``
    so that bisection never meets a pole.
    """
    if not 0 < epsilon < 0.5:
        raise GofError("bad_epsilon", f"epsilon must lie in (0, 1/2), got {epsilon}")
    if K < 1:
        raise GofError("empty_spectrum", "K must be at least 1")
    L = math.log((1 - epsilon) / epsilon)
    j = np.arange(K)
    lo = j * (np.pi / 2)
    hi = lo + np.pi / 2
    is_cos = j % 2 == 0

    def f(theta):
        return np.where(is_cos, _cos_branch(theta, L), _sin_branch(theta, L))

    flo, fhi = f(lo), f(hi)
    bad = np.flatnonzero(np.sign(flo) * np.sign(fhi) >= 0)
    if bad.size:
        k = int(bad[0])
        raise GofError("bracket_failure", f"no sign change in bracket {k} ({'cos' if is_cos[k] else 'sin'})",
                       k=k, branch="cos" if is_cos[k] else "sin")
    theta = _bisect(f, lo, hi, tol * L)
    omega = theta / L
    lam = omega**2 + 0.25
    return EigenSpectrum(lambdas=lam, omegas=omega, branch=np.where(is_cos, "cos", "sin"),
                         epsilon=float(epsilon))


def calibrate_epsilon(target_lambda1: float) -> float:
    """The ``eps`` whose smallest eigenvalue equals ``target_lambda1``.

    ``lambda_1`` increases monotonically as ``eps`` grows, so a bracketing
    root search on ``eps`` suffices.
    """
    from scipy.optimize import brentq

    def gap(log_eps):
        return rn2_eigen_roots(math.exp(log_eps), 1).lambdas[0] - target_lambda1

    lo, hi = math.log(1e-12), math.log(0.5 - 1e-9)
    if gap(lo) * gap(hi) > 0:
        raise GofError("bracket_failure", f"lambda_1={target_lambda1} not attainable")
    return math.exp(brentq(gap, lo, hi, xtol=1e-14))


# ---------------------------------------------------------------------------
# Circulant kernels
# ---------------------------------------------------------------------------

class KernelSource(str, enum.Enum):
    EXACT = "exact_finite"
    LIMIT_W = "limit_W"
    LIMIT_R = "limit_R"


@dataclass(frozen=True)
class KernelMatrix:
    """A symmetric circulant ``(n+1) x (n+1)`` matrix stored as its first row."""

    first_row: np.ndarray
    source: KernelSource
    psi_label: str = ""

    @property
    def n(self) -> int:
        return self.first_row.size - 1

    @property
    def trace(self) -> float:
        return (self.n + 1) * float(self.first_row[0])

    def dense(self) -> np.ndarray:
        c = self.first_row
        m = c.size
        idx = (np.arange(m)[None, :] - np.arange(m)[:, None]) % m
        return c[idx]


def psi_weights(n: int, family: str) -> np.ndarray:
    """``psi_k`` for the W family (``1/(mu(1-mu))``) or R family (its square)."""
    mu = np.arange(1, n + 1) / (n + 1)
    v = 1.0 / (mu * (1 - mu))
    if family == "W":
        return v
    if family == "R":
        return v**2
    raise GofError("bad_selector", f"unknown kernel family {family!r}")


def kernel_exact(n: int, psi) -> KernelMatrix:
    """Exact finite-``n`` kernel ``(1/(n+1)^2) sum_k psi_k C A_k' A_k C`` as a first row."""
    if isinstance(psi, str):
        label = psi
        psi = psi_weights(n, psi)
    else:
        label = "custom"
    psi = np.asarray(psi, dtype=float)
    if psi.shape != (n,) or np.any(psi <= 0):
        raise GofError("bad_psi", f"psi must be {n} positive values")
    k = np.arange(1, n + 1, dtype=float)[:, None]
    d = np.arange(n + 1, dtype=float)[None, :]
    m = n + 1
    core = np.maximum(0.0, k - d) + np.maximum(0.0, k + d - m) - k**2 / m
    row = psi @ core / m**2
    return KernelMatrix(row, KernelSource.EXACT, label)


def kernel_bruteforce(n: int, psi) -> np.ndarray:
    """Dense kernel assembled literally from centring and stacked index matrices."""
    psi = psi_weights(n, psi) if isinstance(psi, str) else np.asarray(psi, dtype=float)
    m = n + 1
    centering = np.eye(m) - np.ones((m, m)) / m
    out = np.zeros((m, m))
    for k in range(1, n + 1):
        a = np.zeros((m, m))
        for c in range(m):
            a[c, (c + np.arange(k)) % m] = 1.0
        out += psi[k - 1] * centering.T @ a.T @ a @ centering
    return out / m**2


def _xlogx(x):
    return np.where(x > 0, x * np.log(np.where(x > 0, x, 1.0)), 0.0)


def kernel_limit_W(n: int) -> KernelMatrix:
    """First row from the continuum kernel ``2[d ln d + (1-d) ln(1-d)] + 1``."""
    m = n + 1
    d = np.arange(1, m) / m
    row = np.empty(m)
    row[0] = 1.0 / m
    row[1:] = (2.0 * (_xlogx(d) + _xlogx(1 - d)) + 1.0) / m
    return KernelMatrix(row, KernelSource.LIMIT_W, "W")


def kernel_limit_R(n: int, diagonal: str = "trace") -> KernelMatrix:
    """First row from the continuum kernel ``2(2d-1) ln(d/(1-d)) - 2``.

    The continuum kernel is infinite on the diagonal, so ``c_0`` has to be
    supplied separately.  ``diagonal="trace"`` uses ``1/(n+1)``, which keeps
    the trace equal to that of the exact kernel under the same scaling
    (``2 H_n C_n = 1``); ``diagonal="printed"`` uses ``1/(2 (n+1) H_n)``.
    """
    m = n + 1
    h = harmonic(n)
    k = np.arange(1, m)
    row = np.empty(m)
    if diagonal == "trace":
        row[0] = 1.0 / m
    elif diagonal == "printed":
        row[0] = 1.0 / (2.0 * m * h)
    else:
        raise GofError("bad_selector", f"unknown diagonal rule {diagonal!r}")
    row[1:] = ((2.0 * k / m - 1.0) * np.log(k / (m - k)) - 1.0) / (m * h)
    return KernelMatrix(row, KernelSource.LIMIT_R, "R")


def circulant_eigenvalues(kernel, sort: bool = False) -> np.ndarray:
    """Eigenvalues ``phi_m = sum_k c_k cos(2 pi k m / (n+1))`` via the FFT.

    Returned in index order ``m = 0..n`` unless ``sort`` is set (descending).
    """
    c = kernel.first_row if isinstance(kernel, KernelMatrix) else np.asarray(kernel, dtype=float)
    phi = np.fft.fft(c).real
    return np.sort(phi)[::-1] if sort else phi


def circulant_eigenvalues_direct(kernel) -> np.ndarray:
    """Same eigenvalues by the explicit cosine sum (O(n^2); used as a cross-check)."""
    c = kernel.first_row if isinstance(kernel, KernelMatrix) else np.asarray(kernel, dtype=float)
    m = c.size
    km = np.outer(np.arange(m), np.arange(m))
    return np.cos(2 * np.pi * km / m) @ c


# ---------------------------------------------------------------------------
# Weighted chi-square laws
# ---------------------------------------------------------------------------

@dataclass
class WeightedChiSqLaw:
    """Law of ``sum_k weights_k X_k^2`` with independent standard normal ``X_k``.

    Evaluation is by seeded Monte Carlo; cdf and quantile estimates come
    with a Monte Carlo standard error.
    """

    weights: np.ndarray
    clipped: int = 0
    label: str = ""
    _cache: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        if w.size < 1:
            raise GofError("empty_spectrum")
        neg = w < 0
        if np.any(w < -1e-8 * max(1.0, np.abs(w).max())):
            raise GofError("negative_weights", f"weights as low as {w.min():.3g}")
        self.clipped = int(np.count_nonzero(neg))
        self.weights = np.sort(np.where(neg, 0.0, w))[::-1]

    @property
    def mean(self) -> float:
        return math.fsum(self.weights)

    @property
    def variance(self) -> float:
        return 2.0 * math.fsum(self.weights**2)

    def sample(self, size: int, seed=None, block: int = 20000) -> np.ndarray:
        rs = as_seed(seed)
        w = self.weights
        out = np.empty(size)
        # keep each block's normal matrix around 10^7 entries
        block = max(1, min(block, 10_000_000 // w.size))
        for b, start in enumerate(range(0, size, block)):
            stop = min(size, start + block)
            z = rs.generator("wchisq", b).standard_normal((stop - start, w.size))
            out[start:stop] = (z * z) @ w
        return out

    def _draws(self, reps, seed):
        key = (reps, as_seed(seed).master_seed)
        if key not in self._cache:
            self._cache.clear()
            self._cache[key] = np.sort(self.sample(reps, seed))
        return self._cache[key]

    def cdf(self, x, reps: int = 100_000, seed=None):
        """Monte Carlo ``P(Q <= x)`` and its binomial standard error."""
        s = self._draws(reps, seed)
        p = np.searchsorted(s, np.asarray(x, dtype=float), side="right") / reps
        return p, np.sqrt(p * (1 - p) / reps)

    def quantile(self, p, reps: int = 100_000, seed=None):
        """Monte Carlo quantile and a distribution-free standard error.

        The error is half the distance between the order statistics at
        ``p +/- sqrt(p(1-p)/reps)``.
        """
        s = self._draws(reps, seed)
        p = np.asarray(p, dtype=float)
        q = np.quantile(s, p)
        half = np.sqrt(p * (1 - p) / reps)
        lo = np.quantile(s, np.clip(p - half, 0, 1))
        hi = np.quantile(s, np.clip(p + half, 0, 1))
        return q, 0.5 * (hi - lo)


def weighted_chisq_law(spectrum, truncation: int | None = None, scale: float = 1.0,
                       label: str = "") -> WeightedChiSqLaw:
    """Law built from a Sturm-Liouville spectrum (weights ``1/lambda``) or raw weights."""
    if isinstance(spectrum, EigenSpectrum):
        w = 1.0 / spectrum.lambdas
    else:
        w = np.sort(np.asarray(spectrum, dtype=float))[::-1]
    if truncation is not None:
        if truncation < 1:
            raise GofError("empty_spectrum", "truncation must be at least 1")
        w = w[:truncation]
    return WeightedChiSqLaw(scale * w, label=label)


class AsymptoticKind(str, enum.Enum):
    R2 = "r2"
    W2_AVG = "w2_avg"
    R2_AVG = "r2_avg"

    @classmethod
    def parse(cls, token) -> "AsymptoticKind":
        if isinstance(token, cls):
            return token
        try:
            return cls(str(token).strip().lower())
        except ValueError:
            raise GofError("bad_selector", f"unknown asymptotic statistic {token!r}") from None


def asymptotic_null(kind, n: int, epsilon: float | None = None, truncation: int | None = None,
                    kernel: str = "exact", r_diagonal: str = "trace") -> WeightedChiSqLaw:
    """Large-sample approximation to the null law of ``R_n^2``, ``W~_n^2`` or ``R~_n^2``.

    ``R_n^2`` is approximately ``C_n`` times the weighted Brownian-bridge
    integral, whose law has weights ``1/lambda_k``; by default ``eps =
    1/(2(n+1))`` and ``K = n`` terms are kept.

    The average-pooled statistics are approximately quadratic forms
    ``Z' K Z / n`` in the circulant kernel ``K``.  With ``kernel="exact"``
    the finite-``n`` kernel is used (divided by ``2 H_n`` for the R family,
    matching the rescaling of ``R_n^2``); ``kernel="limit"`` uses the
    continuum first rows, which already carry the ``1/n`` scaling on the
    diagonal and are used as given.
    """
    kind = AsymptoticKind.parse(kind)
    if n < 1:
        raise GofError("bad_n", f"n must be positive, got {n}")
    if kind is AsymptoticKind.R2:
        eps = 1.0 / (2 * (n + 1)) if epsilon is None else epsilon
        spec = rn2_eigen_roots(eps, truncation or n)
        return weighted_chisq_law(spec, scale=rescale_constant(n), label=f"r2 n={n} eps={eps:.6g}")
    family = "W" if kind is AsymptoticKind.W2_AVG else "R"
    if kernel == "exact":
        scale = 1.0 / n if family == "W" else rescale_constant(n) / n
        phi = scale * circulant_eigenvalues(kernel_exact(n, family), sort=True)
    elif kernel == "limit":
        k = kernel_limit_W(n) if family == "W" else kernel_limit_R(n, r_diagonal)
        phi = circulant_eigenvalues(k, sort=True)
    else:
        raise GofError("bad_selector", f"unknown kernel source {kernel!r}")
    if truncation is not None:
        phi = phi[:truncation]
    return WeightedChiSqLaw(phi, label=f"{kind.value} n={n} kernel={kernel}")
