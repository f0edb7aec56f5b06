"""Static (pure threshold) rationing policies and their closed-form profit.

A static policy refuses Class 2 strictly below a level theta and serves it
from theta up to the rationing threshold K; theta = K + 1 therefore encodes
"never serve at low stock" and theta = 1 "always serve".  The stationary
weights collapse to two geometric segments, so the average profit has a
closed form in the supply/service rate ratios.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .chain import average_profit, stationary_distribution
from .model import Policy, StockRationingError, SystemParams, reward_structure
from .poisson import potential_for_reward

DEGENERATE_RATIO_TOL = 1e-9
# Below this distance from ratio 1 the closed-form geometric sums lose
# digits to cancellation; plain summation is exact and just as fast here.
GEOM_LOOP_BAND = 1e-6


class ThetaOutOfRange(StockRationingError):
    pass


@dataclass(frozen=True)
class StaticPolicy:
    theta: int
    policy: Policy


def build_static(params: SystemParams, theta: int) -> StaticPolicy:
    k = params.threshold
    if not 1 <= theta <= k + 1:
        raise ThetaOutOfRange(f"theta must lie in 1..{k + 1}, got {theta}")
    decisions = tuple(0 if i < theta else 1 for i in range(1, k + 1))
    return StaticPolicy(theta=theta, policy=Policy(decisions))


def geom_sum(x: float, a: int, b: int) -> float:
    """Sum of x**i over i = a..b inclusive (0 for an empty range)."""
    if a > b:
        return 0.0
    if abs(x - 1.0) < GEOM_LOOP_BAND:
        return math.fsum(x**i for i in range(a, b + 1))
    return (x**a - x ** (b + 1)) / (1.0 - x)


def geom_weighted_sum(x: float, a: int, b: int) -> float:
    """Sum of i * x**i over i = a..b inclusive (0 for an empty range)."""
    if a > b:
        return 0.0
    if abs(x - 1.0) < GEOM_LOOP_BAND:
        return math.fsum(i * x**i for i in range(a, b + 1))
    one_minus = 1.0 - x
    return (a * x**a - (b + 1) * x ** (b + 1)) / one_minus + (
        x ** (a + 1) - x ** (b + 2)
    ) / one_minus**2


def static_profit_closed_form(params: SystemParams, theta: int) -> float:
    """Average profit of the threshold-theta policy via geometric sums.

    The two stationary segments are geometric in alpha = lam/mu1 and
    beta = lam/(mu1 + mu2); the state-N reward differs from the pattern of
    its segment by the purchase-vs-opportunity cost swap, which enters as a
    single boundary term.  Ratios within DEGENERATE_RATIO_TOL of one have no
    closed form and fall back to the generic stationary-expectation route.
    """
    p = params
    k, n = p.threshold, p.capacity
    static = build_static(p, theta)
    alpha = p.lam / p.mu1
    beta = p.lam / (p.mu1 + p.mu2)
    if abs(alpha - 1.0) < DEGENERATE_RATIO_TOL or abs(beta - 1.0) < DEGENERATE_RATIO_TOL:
        return average_profit(p, static.policy)

    gamma1 = p.c_lost1 * p.mu1 + p.c_lost2 * p.mu2 + p.c_buy * p.lam
    gamma2 = p.price * p.mu1 - p.c_lost2 * p.mu2 - p.c_buy * p.lam
    gamma3 = p.price * (p.mu1 + p.mu2) - p.c_buy * p.lam
    gamma4 = p.price * (p.mu1 + p.mu2) - p.c_buy * p.lam - p.penalty * p.mu2

    w = (alpha / beta) ** (theta - 1)
    h = 1.0 + geom_sum(alpha, 1, theta - 1) + w * geom_sum(beta, theta, n)
    total = (
        -gamma1
        + gamma2 * geom_sum(alpha, 1, theta - 1)
        - p.c_hold * geom_weighted_sum(alpha, 1, theta - 1)
        + w
        * (
            gamma4 * geom_sum(beta, theta, k)
            + gamma3 * geom_sum(beta, k + 1, n)
            - p.c_hold * geom_weighted_sum(beta, theta, n)
            + (p.c_buy - p.c_opp) * p.lam * beta**n
        )
    )
    return total / h


def optimal_static_threshold(
    params: SystemParams, thetas: range | None = None
) -> tuple[int, float]:
    """Best threshold over the swept range (default 1..K+1), ties to the smaller theta."""
    if thetas is None:
        thetas = range(1, params.threshold + 2)
    best_theta, best_eta = None, -math.inf
    for theta in thetas:
        eta = static_profit_closed_form(params, theta)
        if best_theta is None or eta > best_eta + 1e-12 * max(1.0, abs(best_eta)):
            best_theta, best_eta = theta, eta
    if best_theta is None:
        raise StockRationingError("empty theta range")
    return best_theta, best_eta


@dataclass(frozen=True)
class ThresholdOptimalityReport:
    """Local-optimality sign conditions around a best static threshold.

    Each entry of `values` is a margin G + b whose sign witnesses that
    moving the threshold one step in that direction cannot raise the
    profit; boundary thresholds only admit the subset of conditions whose
    neighbor policy exists, the rest land in `skipped`.
    """

    theta_star: int
    values: dict[str, float]
    satisfied: dict[str, bool]
    skipped: tuple[str, ...]
    neighbor_undefined: bool
    ok: bool


def _g_plus_b(params: SystemParams, policy: Policy, i: int) -> float:
    rewards = reward_structure(params, policy)
    dist = stationary_distribution(params, policy)
    eta = float(dist.pi @ rewards.f_values)
    g = potential_for_reward(params, policy, rewards.f_values, eta)
    b = params.price + params.c_lost2 - params.penalty
    return float(g[i - 1] - g[i] + b)


def threshold_optimality_check(
    params: SystemParams, theta_star: int | None = None, slack: float = 1e-9
) -> ThresholdOptimalityReport:
    """Check the four sign conditions that a profit-maximal threshold must satisfy.

    At theta* the margins seen from the neighboring thresholds point inward:
    serving one level lower cannot pay (two <= 0 conditions at position
    theta*-1) and withholding at theta* cannot pay either (two >= 0
    conditions at position theta*).
    """
    k = params.threshold
    if theta_star is None:
        theta_star, _ = optimal_static_threshold(params)
    if not 1 <= theta_star <= k + 1:
        raise ThetaOutOfRange(f"theta_star must lie in 1..{k + 1}, got {theta_star}")

    values: dict[str, float] = {}
    satisfied: dict[str, bool] = {}
    skipped: list[str] = []

    lower_ok = theta_star >= 2
    upper_ok = theta_star <= k

    if lower_ok:
        v1 = _g_plus_b(params, build_static(params, theta_star - 1).policy, theta_star - 1)
        v2 = _g_plus_b(params, build_static(params, theta_star).policy, theta_star - 1)
        values["below_prev"] = v1
        values["below_star"] = v2
        satisfied["below_prev"] = v1 <= slack
        satisfied["below_star"] = v2 <= slack
    else:
        skipped += ["below_prev", "below_star"]
    if upper_ok:
        v3 = _g_plus_b(params, build_static(params, theta_star).policy, theta_star)
        v4 = _g_plus_b(params, build_static(params, theta_star + 1).policy, theta_star)
        values["at_star"] = v3
        values["at_next"] = v4
        satisfied["at_star"] = v3 >= -slack
        satisfied["at_next"] = v4 >= -slack
    else:
        skipped += ["at_star", "at_next"]

    return ThresholdOptimalityReport(
        theta_star=theta_star,
        values=values,
        satisfied=satisfied,
        skipped=tuple(skipped),
        neighbor_undefined=not (lower_ok and upper_ok),
        ok=all(satisfied.values()),
    )
