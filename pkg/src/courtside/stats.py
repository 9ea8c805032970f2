"""One-way ANOVA, Tukey HSD, and the distribution tails they need.

The F and t tails go through a regularized incomplete beta function
evaluated by Lentz's continued fraction.  The studentized range tail is a
nested Gauss-Legendre quadrature of its defining double integral.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from itertools import combinations
from typing import Sequence

import numpy as np
from scipy.special import ndtr

from .errors import InsufficientDataError, ParameterError, UndefinedMetricError

# --- special functions -------------------------------------------------------

_FPMIN = 1e-300
_CF_EPS = 1e-14


def _beta_cf(a: float, b: float, x: float) -> float:
    """Continued fraction for I_x(a, b) (modified Lentz)."""
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < _FPMIN:
        d = _FPMIN
    d = 1.0 / d
    h = d
    for m in range(1, 100_000):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < _FPMIN:
            d = _FPMIN
        c = 1.0 + aa / c
        if abs(c) < _FPMIN:
            c = _FPMIN
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < _FPMIN:
            d = _FPMIN
        c = 1.0 + aa / c
        if abs(c) < _FPMIN:
            c = _FPMIN
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _CF_EPS:
            return h
    raise ArithmeticError("incomplete beta continued fraction did not converge")


def betainc(a: float, b: float, x: float) -> float:
    """Regularized incomplete beta function ``I_x(a, b)``."""
    if a <= 0 or b <= 0:
        raise ParameterError("betainc needs a, b > 0")
    if x <= 0.0:
        return 0.0
    if x >= 1.0:
        return 1.0
    log_front = (
        math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b) + a * math.log(x) + b * math.log1p(-x)
    )
    front = math.exp(log_front)
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _beta_cf(a, b, x) / a
    return 1.0 - front * _beta_cf(b, a, 1.0 - x) / b


def f_survival(f: float, df1: float, df2: float) -> float:
    """P(F > f) for an F(df1, df2) variable."""
    if df1 < 1 or df2 < 1:
        raise ParameterError(f"degrees of freedom must be >= 1 (got {df1}, {df2})")
    if f <= 0:
        return 1.0
    if math.isinf(f):
        return 0.0
    x = df2 / (df2 + df1 * f)
    return min(1.0, max(0.0, betainc(df2 / 2.0, df1 / 2.0, x)))


def t_two_sided(t: float, df: float) -> float:
    if df < 1:
        raise ParameterError("df must be >= 1")
    if math.isinf(t):
        return 0.0
    return min(1.0, max(0.0, betainc(df / 2.0, 0.5, df / (df + t * t))))


# --- studentized range -------------------------------------------------------

_GL_NODES = 64
_Z_LO, _Z_HI = -8.5, 8.5


@lru_cache(maxsize=None)
def _gauss_legendre(n: int) -> tuple[np.ndarray, np.ndarray]:
    return np.polynomial.legendre.leggauss(n)


def _mapped_nodes(lo: float, hi: float, n: int = _GL_NODES):
    x, w = _gauss_legendre(n)
    half = 0.5 * (hi - lo)
    return lo + half * (x + 1.0), half * w


def _range_cdf(w: np.ndarray, k: int) -> np.ndarray:
    """P(range of k iid standard normals <= w), vectorized over ``w``."""
    z, wz = _mapped_nodes(_Z_LO, _Z_HI)
    phi = np.exp(-0.5 * z * z) / math.sqrt(2 * math.pi)
    inner = ndtr(z)[None, :] - ndtr(z[None, :] - np.asarray(w)[..., None])
    return k * (np.clip(inner, 0.0, 1.0) ** (k - 1) * phi * wz).sum(axis=-1)


def _scale_log_density(s: np.ndarray, df: float) -> np.ndarray:
    """log density of ``sqrt(chi2_df / df)``."""
    return (
        (df / 2.0) * math.log(df)
        - math.lgamma(df / 2.0)
        - (df / 2.0 - 1.0) * math.log(2.0)
        + (df - 1.0) * np.log(s)
        - df * s * s / 2.0
    )


def studentized_range_survival(q, k: int, df: float):
    """P(Q > q) for the studentized range with ``k`` means and ``df`` d.o.f.

    Outer 64-node Gauss-Legendre rule over the scale ``s`` (mapped onto
    the effective support of its density), inner 64-node rule over the
    location ``z`` on [-8.5, 8.5].  Accepts scalar or array ``q``.
    """
    if k < 2 or df < 1:
        raise ParameterError("studentized range needs k >= 2 and df >= 1")
    q_arr = np.atleast_1d(np.asarray(q, dtype=float))
    spread = 1.0 / math.sqrt(2.0 * df)
    lo = max(1e-12, 1.0 - 12.0 * spread)
    hi = 1.0 + 12.0 * spread if df > 1 else 9.0
    s, ws = _mapped_nodes(lo, hi)
    dens = np.exp(_scale_log_density(s, df)) * ws
    cdf = (_range_cdf(q_arr[:, None] * s[None, :], k) * dens[None, :]).sum(axis=1)
    sf = np.clip(1.0 - cdf, 0.0, 1.0)
    sf[q_arr <= 0] = 1.0
    return float(sf[0]) if np.ndim(q) == 0 else sf


# --- ANOVA -------------------------------------------------------------------


@dataclass(frozen=True)
class AnovaResult:
    sst: float
    ssb: float
    ssw: float
    df_between: int
    df_within: int
    f_stat: float
    p_value: float

    @property
    def msw(self) -> float:
        return self.ssw / self.df_within

    def to_dict(self) -> dict:
        return {
            "sst": self.sst,
            "ssb": self.ssb,
            "ssw": self.ssw,
            "df_between": self.df_between,
            "df_within": self.df_within,
            "f_stat": self.f_stat,
            "p_value": self.p_value,
        }


def _as_groups(groups: Sequence[Sequence[float]]) -> list[np.ndarray]:
    arrs = [np.asarray(g, dtype=float).ravel() for g in groups]
    if len(arrs) < 2:
        raise InsufficientDataError("ANOVA needs at least two groups")
    for i, a in enumerate(arrs):
        if a.size < 2:
            raise InsufficientDataError(f"group {i} has {a.size} observation(s); need >= 2")
    return arrs


def one_way_anova(groups: Sequence[Sequence[float]]) -> AnovaResult:
    """Classical one-way ANOVA with unequal group sizes allowed."""
    arrs = _as_groups(groups)
    allv = np.concatenate(arrs)
    grand = allv.mean()
    sst = float(((allv - grand) ** 2).sum())
    ssb = float(sum(a.size * (a.mean() - grand) ** 2 for a in arrs))
    ssw = float(sum(((a - a.mean()) ** 2).sum() for a in arrs))
    n_groups, n_total = len(arrs), allv.size
    dfb, dfw = n_groups - 1, n_total - n_groups
    if ssw == 0.0:
        f = 0.0 if ssb == 0.0 else math.inf
    else:
        f = (ssb / dfb) / (ssw / dfw)
    p = f_survival(f, dfb, dfw)
    return AnovaResult(sst, ssb, ssw, dfb, dfw, f, p)


# --- Tukey HSD ---------------------------------------------------------------


@dataclass(frozen=True)
class PairComparison:
    group1: str
    group2: str
    mean_diff: float  # mean(group2) - mean(group1)
    q_stat: float
    p_adj: float
    reject: bool

    def to_dict(self) -> dict:
        return {
            "group1": self.group1,
            "group2": self.group2,
            "mean_diff": self.mean_diff,
            "q_stat": self.q_stat,
            "p_adj": self.p_adj,
            "reject": self.reject,
        }


@dataclass(frozen=True)
class TukeyResult:
    comparisons: tuple[PairComparison, ...]
    alpha: float
    df: int
    n_groups: int

    @property
    def n_rejections(self) -> int:
        return sum(c.reject for c in self.comparisons)

    def to_dict(self) -> dict:
        return {
            "alpha": self.alpha,
            "df": self.df,
            "n_groups": self.n_groups,
            "n_rejections": self.n_rejections,
            "comparisons": [c.to_dict() for c in self.comparisons],
        }


def tukey_hsd(
    groups: Sequence[Sequence[float]],
    alpha: float = 0.05,
    group_names: Sequence[str] | None = None,
) -> TukeyResult:
    """All pairwise comparisons with Tukey-Kramer adjusted p-values."""
    if not 0.0 < alpha <= 0.5:
        raise ParameterError("alpha must lie in (0, 0.5]")
    arrs = _as_groups(groups)
    k = len(arrs)
    names = list(group_names) if group_names is not None else [str(i) for i in range(k)]
    if len(names) != k:
        raise ParameterError("one name per group is required")
    n_total = sum(a.size for a in arrs)
    dfw = n_total - k
    msw = sum(((a - a.mean()) ** 2).sum() for a in arrs) / dfw
    means = [a.mean() for a in arrs]
    pairs = list(combinations(range(k), 2))
    diffs = np.array([means[j] - means[i] for i, j in pairs])
    se = np.array([math.sqrt(msw / 2.0 * (1.0 / arrs[i].size + 1.0 / arrs[j].size)) for i, j in pairs])
    with np.errstate(divide="ignore", invalid="ignore"):
        q = np.where(se > 0, np.abs(diffs) / np.where(se > 0, se, 1.0), np.where(diffs == 0, 0.0, np.inf))
    finite = np.isfinite(q)
    p = np.zeros_like(q)
    if finite.any():
        p[finite] = studentized_range_survival(q[finite], k, dfw)
    comps = tuple(
        PairComparison(names[i], names[j], float(diffs[t]), float(q[t]), float(p[t]), bool(p[t] < alpha))
        for t, (i, j) in enumerate(pairs)
    )
    return TukeyResult(comps, alpha, dfw, k)


# --- correlation -------------------------------------------------------------


def pearson_test(x, y) -> tuple[float, float]:
    """Pearson r and its two-sided p-value via the t transform (n - 2 d.o.f.)."""
    x = np.asarray(x, dtype=float).ravel()
    y = np.asarray(y, dtype=float).ravel()
    n = x.size
    if n != y.size:
        raise ValueError("x and y differ in length")
    if n < 3:
        raise InsufficientDataError("pearson_test needs n >= 3")
    xc, yc = x - x.mean(), y - y.mean()
    sx, sy = math.sqrt(xc @ xc), math.sqrt(yc @ yc)
    if sx == 0.0 or sy == 0.0:
        raise UndefinedMetricError("correlation is undefined for a constant input")
    r = float(np.clip((xc @ yc) / (sx * sy), -1.0, 1.0))
    if abs(r) == 1.0:
        return r, 0.0
    t = r * math.sqrt((n - 2) / (1.0 - r * r))
    return r, t_two_sided(t, n - 2)
