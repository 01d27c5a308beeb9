"""Exact finite-sample covariances, minimum-variance weights and focal directions.

The reweighted statistic ``sum_i w_i Y_i`` is linear in ``ln U_(i)`` and
``ln(1 - U_(i))``, so its null variance follows from the joint covariance of
those logarithms.  All entries have closed forms in digamma and trigamma
values except ``Cov[ln(1 - U_(i)), ln U_(j)]`` for ``i < j``, which is an
infinite series summed here in blocks with a tail correction.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np
from scipy import linalg
from scipy.special import digamma, polygamma

from ._errors import GofError

SERIES_TOL = 1e-12
_CHUNK = 1024


class CovarianceKind(str, enum.Enum):
    Y_SUMMANDS = "Y_summands"
    SQUARED_DEVIATIONS = "squared_deviations"
    LOG_PAIRS = "log_pairs"


@dataclass(frozen=True)
class CovarianceMatrix:
    m: np.ndarray
    kind: CovarianceKind
    n: int
    series_tolerance: float = SERIES_TOL

    def __post_init__(self):
        a = np.asarray(self.m, dtype=float)
        scale = np.abs(a).max()
        if not np.allclose(a, a.T, rtol=0, atol=1e-12 * scale):
            raise GofError("not_symmetric")
        if np.any(np.diag(a) <= 0):
            raise GofError("nonpositive_variance")
        a = 0.5 * (a + a.T)
        a.setflags(write=False)
        object.__setattr__(self, "m", a)

    def min_eigenvalue(self) -> float:
        return float(np.linalg.eigvalsh(self.m)[0])

    def is_psd(self, rel: float = 1e-8) -> bool:
        return self.min_eigenvalue() >= -rel * float(np.trace(self.m))


@dataclass(frozen=True)
class WeightVector:
    w: np.ndarray
    normalization: float = 1.0


@dataclass(frozen=True)
class FocalDirection:
    delta: np.ndarray
    zeta: np.ndarray


def _mu(n):
    return np.arange(1, n + 1) / (n + 1)


def _trigamma(x):
    return polygamma(1, x)


def log_moments(n: int) -> dict[str, np.ndarray]:
    """Means and variances of ``ln U_(i)`` and ``ln(1 - U_(i))``, ``i = 1..n``."""
    if n < 1:
        raise GofError("bad_n", f"n must be positive, got {n}")
    i = np.arange(1, n + 1, dtype=float)
    n1 = n + 1.0
    return {
        "i": i.astype(int),
        "mean_log_u": digamma(i) - digamma(n1),
        "mean_log_1mu": digamma(n1 - i) - digamma(n1),
        "var_log_u": _trigamma(i) - _trigamma(n1),
        "var_log_1mu": _trigamma(n1 - i) - _trigamma(n1),
    }


def _cross_series(n: int, tol: float, max_k: int | None) -> np.ndarray:
    """``S[i, j] = Cov[ln(1 - U_(i)), ln U_(j)]`` for ``i < j`` (1-based, zero elsewhere).

    The series term for ``(i, j)`` is ``r_k(i) / k * sum_{t=j}^{n} 1/(t+k)`` with
    ``r_k(i) = Gamma(n+1) Gamma(i+k) / (Gamma(i) Gamma(n+1+k))``.  It decays
    like ``k^-(n+3-i)``; summation stops once every pair's last term is below
    ``tol`` times its partial sum, and an integral estimate of the remaining
    tail is added.
    """
    max_k = max_k or 10**6 * n
    i = np.arange(1, n + 1, dtype=float)
    t = np.arange(1, n + 1, dtype=float)
    upper = np.triu(np.ones((n, n), dtype=bool), 1)
    total = np.zeros((n, n))
    r = np.ones(n)  # r_k(i) carried between blocks
    active = np.arange(n - 1)  # row i = n never enters (no j > n)
    k0 = 0
    while active.size:
        k = np.arange(k0 + 1, k0 + _CHUNK + 1, dtype=float)
        ratios = (i[active, None] + k[None, :] - 1.0) / (n + k[None, :])
        rk = r[active, None] * np.cumprod(ratios, axis=1)
        r[active] = rk[:, -1]
        a = rk / k[None, :]
        # b[j, k] = sum_{t >= j} 1 / (t + k)
        b = np.cumsum((1.0 / (t[:, None] + k[None, :]))[::-1], axis=0)[::-1]
        total[active] += a @ b.T
        k0 += _CHUNK
        last = np.outer(a[:, -1], b[:, -1])
        sub = total[active]
        rel = np.where(upper[active], last / np.where(sub == 0, 1.0, np.abs(sub)), 0.0).max(axis=1)
        done = rel < tol
        if np.all(done):
            prev = np.outer(a[:, -2], b[:, -2])
            total[active] += _tail(prev, last, float(k0))
        else:
            if k0 >= max_k:
                raise GofError("series_cap_exceeded", f"series not converged after {k0} terms",
                               terms=k0, worst_relative_term=float(rel.max()))
            finished = active[done]
            if finished.size:
                prev = np.outer(a[done, -2], b[:, -2])
                total[finished] += _tail(prev, last[done], float(k0))
        active = active[~done]
    mom = log_moments(n)
    s = total - np.outer(mom["mean_log_1mu"], mom["mean_log_u"])
    return np.triu(s, 1)


def _tail(prev, last, K):
    """Integral estimate of ``sum_{k > K}`` for terms decaying like ``c k^-p``."""
    with np.errstate(divide="ignore", invalid="ignore"):
        p = np.log(prev / last) / np.log(K / (K - 1.0))
        return np.where((last > 0) & (p > 1), last * (K / (p - 1.0) - 0.5), 0.0)


def log_cov_blocks(n: int, tol: float = SERIES_TOL, max_k: int | None = None) -> dict[str, np.ndarray]:
    """The four ``n x n`` blocks ``Cov[ln U, ln U]``, ``Cov[ln U, ln(1-U)]``, ... .

    Keys: ``uu``, ``uv``, ``vu``, ``vv`` with ``u = ln U_(i)`` and ``v = ln(1-U_(i))``.
    """
    if n < 1:
        raise GofError("bad_n", f"n must be positive, got {n}")
    if not tol > 0:
        raise GofError("bad_tolerance", f"tol must be positive, got {tol}")
    idx = np.arange(1, n + 1)
    hi = np.maximum.outer(idx, idx)
    lo = np.minimum.outer(idx, idx)
    tg_n1 = _trigamma(n + 1.0)
    uu = _trigamma(hi.astype(float)) - tg_n1
    vv = _trigamma((n + 1 - lo).astype(float)) - tg_n1
    s = _cross_series(n, tol, max_k) if n > 1 else np.zeros((1, 1))
    # uv[i, j] = Cov[ln U_i, ln(1 - U_j)]: closed form when i <= j, series when i > j
    uv = np.where(idx[:, None] <= idx[None, :], -tg_n1, s.T)
    return {"uu": uu, "uv": uv, "vu": uv.T, "vv": vv}


def log_cov_matrix(n: int, tol: float = SERIES_TOL, max_k: int | None = None) -> CovarianceMatrix:
    """Joint covariance of ``(ln U_(1..n), ln(1-U_(1..n)))`` as a ``2n x 2n`` matrix."""
    b = log_cov_blocks(n, tol, max_k)
    full = np.block([[b["uu"], b["uv"]], [b["vu"], b["vv"]]])
    return CovarianceMatrix(full, CovarianceKind.LOG_PAIRS, n, tol)


def cov_Y_matrix(n: int, tol: float = SERIES_TOL) -> CovarianceMatrix:
    """``Cov(Y)`` where ``Y_i = -2[mu^2(1-mu) ln(U/mu) + mu(1-mu)^2 ln((1-U)/(1-mu))]``."""
    b = log_cov_blocks(n, tol)
    mu = _mu(n)
    p, q = mu**2 * (1 - mu), mu * (1 - mu) ** 2
    sigma = 4.0 * (np.outer(p, p) * b["uu"] + np.outer(p, q) * b["uv"]
                   + np.outer(q, p) * b["vu"] + np.outer(q, q) * b["vv"])
    return CovarianceMatrix(sigma, CovarianceKind.Y_SUMMANDS, n, tol)


def cov_squared_deviations(i: int, j: int, n: int) -> float:
    """``Cov[(U_(i) - mu_i)^2, (U_(j) - mu_j)^2]`` in closed form."""
    if not (1 <= i <= n and 1 <= j <= n):
        raise GofError("index_order", f"indices ({i}, {j}) outside 1..{n}")
    if i > j:
        i, j = j, i
    return float(_sqdev(np.float64(i), np.float64(j), n))


def _sqdev(i, j, n):
    mi, mj = i / (n + 1.0), j / (n + 1.0)
    c = (n + 2.0) * (n + 3.0)
    return (2 * mi**2 * (1 - mj) ** 2 / c
            + mi * (1 - mj) / c * (3 * (1 - 3 * mi) * (2 - 3 * mj) / (n + 4.0) - (1 - mi) * mj / (n + 2.0)))


def squared_deviation_matrix(n: int) -> CovarianceMatrix:
    idx = np.arange(1, n + 1, dtype=float)
    lo, hi = np.minimum.outer(idx, idx), np.maximum.outer(idx, idx)
    return CovarianceMatrix(_sqdev(lo, hi, n), CovarianceKind.SQUARED_DEVIATIONS, n)


def optimal_weights(n: int, covariance: CovarianceMatrix | None = None,
                    max_condition: float = 1e13) -> WeightVector:
    """Minimum-variance weights under ``sum_i w_i mu_i (1 - mu_i) = 1``.

    The Lagrange solution is ``w = Sigma^{-1} m / (m' Sigma^{-1} m)`` with
    ``m_i = mu_i(1 - mu_i)``; it is obtained from a Cholesky solve.
    """
    cov = covariance if covariance is not None else cov_Y_matrix(n)
    if cov.n != n:
        raise GofError("dimension_mismatch", f"covariance is for n={cov.n}, not {n}")
    if cov.kind is CovarianceKind.LOG_PAIRS:
        raise GofError("bad_covariance_kind", "optimal weights need Cov(Y) or squared deviations")
    mu = _mu(n)
    m = mu * (1 - mu)
    cond = np.linalg.cond(cov.m)
    if not np.isfinite(cond) or cond > max_condition:
        raise GofError("ill_conditioned_sigma", f"condition number {cond:.3g}")
    try:
        x = linalg.cho_solve(linalg.cho_factor(cov.m), m)
    except linalg.LinAlgError as exc:
        raise GofError("ill_conditioned_sigma", str(exc)) from exc
    return WeightVector(x / (m @ x), 1.0)


def focal_direction(w, covariance: CovarianceMatrix) -> FocalDirection:
    """Deviation pattern ``delta ~ Sigma w`` (max entry 1) and its variance-adjusted form."""
    w = w.w if isinstance(w, WeightVector) else np.asarray(w, dtype=float)
    if w.shape != (covariance.n,):
        raise GofError("dimension_mismatch", f"{w.shape} weights for n={covariance.n}")
    delta = covariance.m @ w
    delta = delta / np.abs(delta).max()
    mu = _mu(covariance.n)
    return FocalDirection(delta=delta, zeta=delta / (mu * (1 - mu)))


def ad_weights(n: int) -> np.ndarray:
    mu = _mu(n)
    return 1.0 / (mu * (1 - mu))


def weights_table(n: int) -> dict[str, np.ndarray]:
    """Columns ``i, mu_i, w_opt_i, delta_AD_i, zeta_AD_i``."""
    cov = cov_Y_matrix(n)
    w = optimal_weights(n, cov)
    focal = focal_direction(ad_weights(n), cov)
    return {"i": np.arange(1, n + 1), "mu_i": _mu(n), "w_opt_i": w.w,
            "delta_AD_i": focal.delta, "zeta_AD_i": focal.zeta}
