"""Policy-based birth-death chain: generator, stationary law, average profit.

The chain moves up at the supply rate and down at the aggregate service rate
of the states's active demand classes, so the stationary weights have the
usual product form.  Long-run average profit is the stationary expectation
of the reward rate and is affine in the penalty cost because the stationary
law itself does not depend on it.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import (
    Policy,
    StockRationingError,
    SystemParams,
    check_policy,
    reward_structure,
    service_rates,
)


class NumericalOverflow(StockRationingError):
    pass


@dataclass(frozen=True)
class Generator:
    """Tridiagonal infinitesimal generator over states 0..N."""

    sub: np.ndarray    # down-rates at states 1..N
    diag: np.ndarray   # negated row sums, states 0..N
    sup: np.ndarray    # up-rate at states 0..N-1

    def dense(self) -> np.ndarray:
        return np.diag(self.diag) + np.diag(self.sub, -1) + np.diag(self.sup, 1)


@dataclass(frozen=True)
class StationaryDistribution:
    pi: np.ndarray
    xi: np.ndarray
    h: float


@dataclass(frozen=True)
class ProfitLinearForm:
    """eta(P) = d_coef - P * f_coef, both coefficients penalty-free."""

    d_coef: float
    f_coef: float

    def eta(self, penalty: float) -> float:
        return self.d_coef - penalty * self.f_coef


def build_generator(params: SystemParams, policy: Policy) -> Generator:
    n = params.capacity
    v = service_rates(params, policy)
    sup = np.full(n, params.lam)
    diag = np.empty(n + 1)
    diag[0] = -params.lam
    diag[1:n] = -(params.lam + v[:-1])
    diag[n] = -v[-1]
    return Generator(sub=v, diag=diag, sup=sup)


def stationary_distribution(params: SystemParams, policy: Policy) -> StationaryDistribution:
    """Product-form stationary law, built by recursive ratio multiplication.

    xi_i = xi_{i-1} * lam / v_i avoids the raw powers of the textbook
    formula, which overflow long before the ratios do.
    """
    v = service_rates(params, policy)
    n = params.capacity
    xi = np.empty(n + 1)
    xi[0] = 1.0
    with np.errstate(over="ignore"):
        for i in range(1, n + 1):
            xi[i] = xi[i - 1] * (params.lam / v[i - 1])
    if not np.all(np.isfinite(xi)):
        raise NumericalOverflow("stationary weights overflowed float64")
    h = 1.0 + xi[1:].sum()
    if not np.isfinite(h):
        raise NumericalOverflow("stationary normalizer overflowed float64")
    return StationaryDistribution(pi=xi / h, xi=xi, h=h)


def average_profit(params: SystemParams, policy: Policy) -> float:
    """Long-run average profit: stationary expectation of the reward rate."""
    check_policy(params, policy)
    dist = stationary_distribution(params, policy)
    rewards = reward_structure(params, policy)
    return float(dist.pi @ rewards.f_values)


def profit_linear_form(params: SystemParams, policy: Policy) -> ProfitLinearForm:
    """Split eta into its penalty-free part and the coefficient of -P."""
    dist = stationary_distribution(params, policy)
    rewards = reward_structure(params, policy)
    return ProfitLinearForm(
        d_coef=float(dist.pi @ rewards.b_coeffs),
        f_coef=float(dist.pi @ rewards.a_coeffs),
    )
