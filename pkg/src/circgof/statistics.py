"""Order-statistic goodness-of-fit statistics.

All functions accept either a :class:`SortedUniforms` or a float array whose
last axis holds sorted uniforms, so the same code evaluates one sample or a
whole Monte Carlo batch.  Large values are evidence against the null.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from ._errors import GofError
from .order_stats import SortedUniforms, clamp


class StatisticKind(str, enum.Enum):
    W2 = "w2"
    R2 = "r2"
    AD = "ad"
    AD_CLASSIC = "ad_classic"
    ZHANG_LR = "zhang_la"
    CVM = "cvm"
    KS = "ks"

    @classmethod
    def parse(cls, token) -> "StatisticKind":
        if isinstance(token, cls):
            return token
        key = str(token).strip().lower()
        key = _ALIASES.get(key, key)
        try:
            return cls(key)
        except ValueError:
            raise GofError("bad_selector", f"unknown statistic {token!r}") from None


_ALIASES = {"lr": "zhang_la", "za": "zhang_la", "zhang": "zhang_la", "zhang_za": "zhang_la",
            "ad_eq2": "ad", "a2": "ad_classic"}

# the six columns of the power tables, in table order
POWER_STATISTICS = (
    StatisticKind.W2,
    StatisticKind.R2,
    StatisticKind.AD_CLASSIC,
    StatisticKind.ZHANG_LR,
    StatisticKind.CVM,
    StatisticKind.KS,
)


def _as_array(u) -> np.ndarray:
    if isinstance(u, SortedUniforms):
        return u.values
    return clamp(np.asarray(u, dtype=float))


def _scalar(x):
    return float(x) if np.ndim(x) == 0 else x


def harmonic(n: int) -> float:
    return float(np.sum(1.0 / np.arange(1, n + 1)))


def rescale_constant(n: int) -> float:
    """``C_n = 1 / (2 H_n)``, chosen so that ``E(R_n^2)`` is close to one."""
    return 0.5 / harmonic(n)


class _Logs:
    """Lazily shared ``ln U`` and ``ln(1 - U)`` for one batch."""

    def __init__(self, u: np.ndarray):
        self.u = u
        self._lu = None
        self._l1u = None

    @property
    def lu(self):
        if self._lu is None:
            self._lu = np.log(self.u)
        return self._lu

    @property
    def l1u(self):
        if self._l1u is None:
            self._l1u = np.log1p(-self.u)
        return self._l1u


def _kl_form(logs: _Logs, p: np.ndarray, cu: np.ndarray, c1u: np.ndarray) -> np.ndarray:
    """``-2 sum_i [cu_i ln(U_i/p_i) + c1u_i ln((1-U_i)/(1-p_i))]``."""
    const = cu @ np.log(p) + c1u @ np.log1p(-p)
    return -2.0 * (logs.lu @ cu + logs.l1u @ c1u - const)


def _w2(logs, n):
    mu = np.arange(1, n + 1) / (n + 1)
    return _kl_form(logs, mu, mu, 1.0 - mu)


def _r2(logs, n):
    mu = np.arange(1, n + 1) / (n + 1)
    return rescale_constant(n) * _kl_form(logs, mu, 1.0 / (1.0 - mu), 1.0 / mu)


def _ad(logs, n):
    a = (np.arange(1, n + 1) - 0.5) / n
    return _kl_form(logs, a, a, 1.0 - a)


def _ad_classic(logs, n):
    k = 2.0 * np.arange(1, n + 1) - 1.0
    return -n - (logs.lu @ k + logs.l1u[..., ::-1] @ k) / n


def _zhang(logs, n):
    i = np.arange(1, n + 1, dtype=float)
    return -(logs.lu @ (1.0 / (n - i + 0.5)) + logs.l1u @ (1.0 / (i - 0.5)))


def _cvm(logs, n):
    a = (np.arange(1, n + 1) - 0.5) / n
    dev = logs.u - a
    return 1.0 / (12.0 * n) + np.einsum("...i,...i->...", dev, dev)


def _ks(logs, n):
    i = np.arange(1, n + 1, dtype=float)
    u = logs.u
    return np.maximum(np.max(i / n - u, axis=-1), np.max(u - (i - 1) / n, axis=-1))


_EVAL = {
    StatisticKind.W2: _w2,
    StatisticKind.R2: _r2,
    StatisticKind.AD: _ad,
    StatisticKind.AD_CLASSIC: _ad_classic,
    StatisticKind.ZHANG_LR: _zhang,
    StatisticKind.CVM: _cvm,
    StatisticKind.KS: _ks,
}


def batch_statistics(u, kinds) -> dict[StatisticKind, np.ndarray]:
    """Evaluate several statistics on the same (batched) sorted uniforms.

    Logarithms are computed once and shared between the kinds that need them.
    """
    arr = _as_array(u)
    logs = _Logs(arr)
    n = arr.shape[-1]
    return {k: _EVAL[k](logs, n) for k in map(StatisticKind.parse, kinds)}


def evaluate(kind, u):
    """Value of one statistic; scalar for a single sample, array for a batch."""
    kind = StatisticKind.parse(kind)
    return _scalar(batch_statistics(u, [kind])[kind])


def w2_statistic(u):
    """Anderson-Darling type statistic with the null means ``i/(n+1)`` as centres."""
    return evaluate(StatisticKind.W2, u)


def r2_statistic(u):
    """Minimum-variance reweighted statistic, rescaled so its null mean is about one."""
    return evaluate(StatisticKind.R2, u)


def ad_statistic(u, mode: str = "eq2"):
    """Anderson-Darling statistic.

    ``mode="eq2"`` is the Kullback-Leibler form centred at ``(i - 1/2)/n``;
    ``mode="classic"`` is the textbook ``A^2``.  They differ by a constant
    depending only on ``n``: ``classic - eq2 = -n - 2 sum_i [a_i ln a_i +
    (1 - a_i) ln(1 - a_i)]``, so both give the same test.
    """
    if mode == "eq2":
        return evaluate(StatisticKind.AD, u)
    if mode == "classic":
        return evaluate(StatisticKind.AD_CLASSIC, u)
    raise GofError("unknown_ad_mode", f"mode must be 'eq2' or 'classic', got {mode!r}")


def zhang_lr_statistic(u):
    return evaluate(StatisticKind.ZHANG_LR, u)


def cvm_statistic(u):
    return evaluate(StatisticKind.CVM, u)


def ks_statistic(u):
    return evaluate(StatisticKind.KS, u)


@dataclass(frozen=True)
class SummandVector:
    """Per-index summands ``Y_i`` and the log-linear parts ``B_i`` (``Y = -2(B - B|_{U=mu})``)."""

    y: np.ndarray
    b: np.ndarray


def summands_Y(u) -> SummandVector:
    arr = _as_array(u)
    n = arr.shape[-1]
    mu = np.arange(1, n + 1) / (n + 1)
    cu, c1u = mu**2 * (1 - mu), mu * (1 - mu) ** 2
    b = cu * np.log(arr) + c1u * np.log1p(-arr)
    # log1p of the relative deviation keeps Y accurate when U is close to mu
    dev = arr - mu
    y = -2.0 * (cu * np.log1p(dev / mu) + c1u * np.log1p(-dev / (1 - mu)))
    return SummandVector(y=y, b=b)


def reweighted_statistic(u, w) -> float:
    """General reweighted statistic ``sum_i w_i Y_i``."""
    return _scalar(summands_Y(u).y @ np.asarray(w, dtype=float))
