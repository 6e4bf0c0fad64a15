"""Critical offspring distributions with gamma-stable tails and their a_n scaling.

Two families are provided. ``geometric_half`` is the aperiodic workhorse for
gamma = 2: xi(k) = 2^-(k+1), mean 1, variance 2. ``stable_family(gamma)`` takes
the coefficients of s + (1-s)^gamma / gamma, which is critical by construction
and has xi([k, inf)) ~ const * k^-gamma for gamma < 2, putting it in the domain
of attraction of a gamma-stable law. The normalizing sequence is a_n = c * n^(1/gamma)
with a configurable constant c.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

# Truncation point of the inverse-CDF table; beyond it the exact tail law is
# sampled by sequential search on the pmf recurrence.
K_TABLE = 10**6


class OffspringError(ValueError):
    pass


@dataclass(frozen=True)
class OffspringLaw:
    """A critical offspring law xi with tail index gamma and scaling a_n = c n^(1/gamma)."""

    kind: str  # "geometric_half" or "stable_family"
    gamma: float
    mean: float
    variance: float
    a_n_constant: float = 1.0
    # lazily built sampling tables (cdf up to K_TABLE); not part of identity
    _tables: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        if self.kind not in ("geometric_half", "stable_family"):
            raise OffspringError(f"unknown offspring kind {self.kind!r}")
        if not (1.0 < self.gamma <= 2.0):
            raise OffspringError("gamma must lie in (1, 2]")
        if self.mean != 1.0:
            raise OffspringError("offspring law must be critical (mean 1)")
        if self.a_n_constant <= 0:
            raise OffspringError("a_n constant must be positive")


def geometric_half(a_n_constant: float = 1.0) -> OffspringLaw:
    return OffspringLaw("geometric_half", 2.0, 1.0, 2.0, a_n_constant)


def stable_family(gamma: float, a_n_constant: float = 1.0) -> OffspringLaw:
    if not (1.0 < gamma <= 2.0):
        raise OffspringError("gamma must lie in (1, 2]")
    # gamma=2 degenerates to support {0, 2}: variance 1; gamma<2: infinite variance
    var = 1.0 if gamma == 2.0 else math.inf
    return OffspringLaw("stable_family", gamma, 1.0, var, a_n_constant)


def pmf(law: OffspringLaw, k: int) -> float:
    """Exact xi(k)."""
    if k < 0:
        return 0.0
    if law.kind == "geometric_half":
        return 0.5 ** (k + 1)
    g = law.gamma
    if k == 0:
        return 1.0 / g
    if k == 1:
        return 0.0
    # xi(k) = |binom(gamma, k)| / gamma = Gamma(k-gamma) / (gamma Gamma(-gamma) k!) for k >= 2
    if g == 2.0:
        return 0.5 if k == 2 else 0.0
    # gamma*Gamma(-gamma) = Gamma(2-gamma)/(gamma-1)
    return math.exp(
        math.lgamma(k - g) - math.lgamma(k + 1.0) - math.lgamma(2.0 - g)
    ) * (g - 1.0)


def tail_mass(law: OffspringLaw, k: int) -> float:
    """Exact xi([k+1, inf)), the mass strictly beyond k (k >= 1)."""
    if k < 1:
        raise OffspringError("tail_mass requires k >= 1")
    if law.kind == "geometric_half":
        return 0.5 ** (k + 1)
    g = law.gamma
    if g == 2.0:
        return 0.5 if k < 2 else 0.0
    # sum_{j<=k} xi(j) = 1 + P_k/gamma with P_k = Gamma(k+1-gamma)/(Gamma(1-gamma) k!),
    # hence the tail is -P_k/gamma; Gamma(1-gamma) < 0 on gamma in (1,2).
    log_p = math.lgamma(k + 1.0 - g) - math.lgamma(k + 1.0)
    return math.exp(log_p - math.lgamma(2.0 - g)) * (g - 1.0) / g  # |Gamma(1-gamma)| = Gamma(2-gamma)/(gamma-1)


def tail_mean(law: OffspringLaw, k: int) -> float:
    """Exact sum_{j>k} j*xi(j)."""
    if k < 0:
        raise OffspringError("tail_mean requires k >= 0")
    if k == 0:
        return law.mean  # the j=0 term contributes nothing
    if law.kind == "geometric_half":
        return (k + 2.0) * 0.5 ** (k + 1)
    g = law.gamma
    if g == 2.0:
        return 1.0 if k < 2 else 0.0
    # sum_{j>k} j xi(j) = Gamma(k+1-gamma) / (Gamma(2-gamma) (k-1)!)
    return math.exp(
        math.lgamma(k + 1.0 - g) - math.lgamma(float(k)) - math.lgamma(2.0 - g)
    )


def scaling_an(law: OffspringLaw, n: int) -> float:
    """a_n = c * n^(1/gamma)."""
    if n < 1:
        raise OffspringError("n must be >= 1")
    return law.a_n_constant * float(n) ** (1.0 / law.gamma)


def _build_tables(law: OffspringLaw, size_biased: bool) -> tuple[np.ndarray, float]:
    """cdf array over {0..K_TABLE} and the pmf value at K_TABLE (tail seed)."""
    key = "sb" if size_biased else "plain"
    cached = law._tables.get(key)
    if cached is not None:
        return cached
    g = law.gamma
    if law.kind == "geometric_half":
        k = np.arange(K_TABLE + 1, dtype=np.float64)
        p = 0.5 ** (k + 1.0)
    else:
        p = np.zeros(K_TABLE + 1)
        p[0] = 1.0 / g
        if g == 2.0:
            p[2] = 0.5
        else:
            # xi(k+1)/xi(k) = (k-gamma)/(k+1) for k >= 2
            p[2] = (g - 1.0) / 2.0
            k = np.arange(2, K_TABLE, dtype=np.float64)
            p[3:] = p[2] * np.cumprod((k - g) / (k + 1.0))
    if size_biased:
        p = p * np.arange(K_TABLE + 1, dtype=np.float64)  # xi*(k) = k xi(k), already normalized
    cdf = np.cumsum(p)
    tables = (cdf, float(p[K_TABLE]))
    law._tables[key] = tables
    return tables


def _sample_tail(law: OffspringLaw, u_excess: float, size_biased: bool) -> int:
    """Inversion beyond K_TABLE via binary search on the exact survival function.

    Sequential search is a non-starter here: the size-biased tail has exponent
    gamma - 1 < 1, so the conditional overshoot has infinite mean.
    """
    surv = tail_mean if size_biased else tail_mass
    target = surv(law, K_TABLE) - u_excess
    if target <= 0.0:
        target = 0.0
    lo = K_TABLE  # surv(lo) > target
    hi = 2 * K_TABLE
    while surv(law, hi) > target:
        lo = hi
        hi *= 2
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if surv(law, mid) > target:
            lo = mid
        else:
            hi = mid
    return hi


def sample_offspring(law: OffspringLaw, rng: np.random.Generator) -> int:
    """One draw from xi."""
    return int(sample_offspring_array(law, rng, 1)[0])


def sample_offspring_array(
    law: OffspringLaw, rng: np.random.Generator, size: int, size_biased: bool = False
) -> np.ndarray:
    """Vectorized draws from xi (or the size-biased xi*(k) = k xi(k))."""
    if law.kind == "geometric_half":
        if size_biased:
            # k xi(k) = k 2^-(k+1): sum of two geometrics on {0,1,...} plus 1
            return (rng.geometric(0.5, size) - 1) + (rng.geometric(0.5, size) - 1) + 1
        return rng.geometric(0.5, size) - 1
    cdf, _ = _build_tables(law, size_biased)
    u = rng.random(size)
    out = np.searchsorted(cdf, u, side="right").astype(np.int64)
    over = np.nonzero(out > K_TABLE)[0]
    for i in over:
        out[i] = _sample_tail(law, u[i] - cdf[K_TABLE], size_biased)
    return out


def sampling_tables(law: OffspringLaw, size_biased: bool = False) -> tuple[np.ndarray, float]:
    """Expose (cdf, pmf at K_TABLE) for compiled kernels."""
    return _build_tables(law, size_biased)
