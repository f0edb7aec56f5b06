"""System parameters, rationing policies, and the state-dependent reward structure.

A single-product warehouse with capacity ``N`` replenishes from a Poisson
supply stream and serves two demand classes with exponential service rates.
Class 1 is always served while stock is positive; Class 2 is served at low
stock (levels ``1..K``) only where the policy says so, at a penalty per
served unit.  A policy stores just the free decisions ``(d_1, ..., d_K)``;
the boundary decisions (reject at level 0, serve at levels above ``K``) are
structural and never stored.
"""

from __future__ import annotations

import itertools
import warnings
from dataclasses import dataclass, replace
from typing import Iterator, Sequence

import numpy as np

ENUMERATION_CAP = 24


class StockRationingError(Exception):
    """Base class for all errors raised by this package."""


class NonPositiveRate(StockRationingError):
    pass


class BadThreshold(StockRationingError):
    pass


class PriorityViolation(UserWarning):
    """Class-1 lost-sales cost does not exceed Class-2's.

    Warning-grade: every formula stays well defined, the assumption is
    economic (Class 1 is the priority class), not mathematical.
    """


class LengthMismatch(StockRationingError):
    pass


class InvalidOrder(StockRationingError):
    pass


class CapExceeded(StockRationingError):
    pass


PARAM_JSON_KEYS = (
    ("lambda", "lam"),
    ("mu1", "mu1"),
    ("mu2", "mu2"),
    ("capacity_n", "capacity"),
    ("threshold_k", "threshold"),
    ("c_hold", "c_hold"),
    ("c_lost1", "c_lost1"),
    ("c_lost2", "c_lost2"),
    ("c_buy", "c_buy"),
    ("c_opp", "c_opp"),
    ("price_r", "price"),
    ("penalty_p", "penalty"),
)


@dataclass(frozen=True)
class SystemParams:
    """All stochastic rates and economic parameters of the warehouse queue.

    Attributes:
        lam: arrival rate of the product supply stream (> 0).
        mu1: service rate for Class-1 demand (> 0).
        mu2: service rate for Class-2 demand (> 0).
        capacity: maximal warehouse stock N (positive integer).
        threshold: rationing threshold K, 1 <= K <= N.
        c_hold: holding cost per product per unit time.
        c_lost1: lost-sales cost rate for Class 1.
        c_lost2: lost-sales cost rate for Class 2.
        c_buy: purchase price per product.
        c_opp: opportunity cost per product rejected at full stock.
        price: service price per satisfied demand.
        penalty: penalty cost per Class-2 product served at low stock.
    """

    lam: float
    mu1: float
    mu2: float
    capacity: int
    threshold: int
    c_hold: float = 0.0
    c_lost1: float = 0.0
    c_lost2: float = 0.0
    c_buy: float = 0.0
    c_opp: float = 0.0
    price: float = 0.0
    penalty: float = 0.0

    def with_penalty(self, penalty: float) -> "SystemParams":
        return replace(self, penalty=float(penalty))

    def to_json_dict(self) -> dict:
        return {key: getattr(self, attr) for key, attr in PARAM_JSON_KEYS}

    @classmethod
    def from_json_dict(cls, data: dict) -> "SystemParams":
        kwargs = {}
        for key, attr in PARAM_JSON_KEYS:
            if key in data:
                kwargs[attr] = data[key]
        missing = [k for k, a in PARAM_JSON_KEYS[:5] if a not in kwargs]
        if missing:
            raise StockRationingError(f"missing required parameter keys: {missing}")
        kwargs["capacity"] = int(kwargs["capacity"])
        kwargs["threshold"] = int(kwargs["threshold"])
        return validate_params(cls(**kwargs))


def validate_params(raw: SystemParams) -> SystemParams:
    """Check model invariants and return the validated parameter set.

    Raises NonPositiveRate or BadThreshold on hard violations; a reversed
    cost priority (c_lost1 <= c_lost2) only emits a PriorityViolation
    warning because the analysis never divides by that assumption.
    """
    for name in ("lam", "mu1", "mu2"):
        if not getattr(raw, name) > 0:
            raise NonPositiveRate(f"{name} must be strictly positive, got {getattr(raw, name)!r}")
    if raw.capacity < 1 or raw.threshold < 1 or raw.threshold > raw.capacity:
        raise BadThreshold(
            f"need 1 <= threshold K <= capacity N, got K={raw.threshold}, N={raw.capacity}"
        )
    for name in ("c_hold", "c_lost1", "c_lost2", "c_buy", "c_opp", "price", "penalty"):
        if getattr(raw, name) < 0:
            raise StockRationingError(f"{name} must be nonnegative")
    if not raw.c_lost1 > raw.c_lost2:
        warnings.warn(
            f"c_lost1={raw.c_lost1} <= c_lost2={raw.c_lost2}: Class-1 priority assumption violated",
            PriorityViolation,
            stacklevel=2,
        )
    return raw


@dataclass(frozen=True)
class Policy:
    """Low-stock decision vector (d_1, ..., d_K); d_i = 1 means serve Class 2 at level i.

    The full state-indexed policy is implicitly (0; d_1..d_K; 1, ..., 1).
    """

    decisions: tuple[int, ...]

    def __post_init__(self):
        if not all(d in (0, 1) for d in self.decisions):
            raise StockRationingError(f"decisions must be 0/1, got {self.decisions!r}")
        object.__setattr__(self, "decisions", tuple(int(d) for d in self.decisions))

    def __len__(self) -> int:
        return len(self.decisions)

    def __getitem__(self, i: int) -> int:
        return self.decisions[i]

    @classmethod
    def all_zeros(cls, k: int) -> "Policy":
        return cls((0,) * k)

    @classmethod
    def all_ones(cls, k: int) -> "Policy":
        return cls((1,) * k)

    @classmethod
    def from_json_list(cls, data: Sequence[int]) -> "Policy":
        return cls(tuple(int(d) for d in data))

    def to_json_list(self) -> list[int]:
        return list(self.decisions)

    def flip(self, position: int) -> "Policy":
        """Return the policy with the decision at 1-based `position` inverted."""
        d = list(self.decisions)
        d[position - 1] = 1 - d[position - 1]
        return Policy(tuple(d))

    def as_array(self) -> np.ndarray:
        return np.asarray(self.decisions, dtype=float)


def check_policy(params: SystemParams, policy: Policy) -> None:
    if len(policy) != params.threshold:
        raise LengthMismatch(
            f"policy length {len(policy)} != threshold K={params.threshold}"
        )


@dataclass(frozen=True)
class RewardStructure:
    """Per-state profit rates f_i and their penalty decomposition f_i = B_i - P*A_i.

    ``a_coeffs[i]`` is mu2*d_i on the rationed range 1..K and zero elsewhere,
    so the whole dependence of f on the penalty cost is the linear term.
    """

    a_coeffs: np.ndarray
    b_coeffs: np.ndarray
    f_values: np.ndarray


def reward_structure(params: SystemParams, policy: Policy) -> RewardStructure:
    """Build the profit-rate vector over states 0..N for one policy.

    State 0 loses both demand classes and still buys stock; states 1..K earn
    the Class-1 price plus the policy-dependent Class-2 terms; states above K
    serve both classes; state N swaps the purchase price for the opportunity
    cost of rejected inbound stock.
    """
    check_policy(params, policy)
    p = params
    n, k = p.capacity, p.threshold
    a = np.zeros(n + 1)
    b = np.zeros(n + 1)
    b[0] = -p.c_lost1 * p.mu1 - p.c_lost2 * p.mu2 - p.c_buy * p.lam
    for i in range(1, k + 1):
        d = policy[i - 1]
        a[i] = p.mu2 * d
        b[i] = (
            p.price * (p.mu1 + p.mu2 * d)
            - p.c_hold * i
            - p.c_lost2 * p.mu2 * (1 - d)
            - p.c_buy * p.lam
        )
    for i in range(k + 1, n + 1):
        b[i] = p.price * (p.mu1 + p.mu2) - p.c_hold * i - p.c_buy * p.lam
    if n > k:
        b[n] = p.price * (p.mu1 + p.mu2) - p.c_hold * n - p.c_opp * p.lam
    else:
        # K = N: the top state is still the rationed one, but purchase cost
        # is replaced by the opportunity cost exactly as at any full stock.
        d = policy[n - 1]
        b[n] = (
            p.price * (p.mu1 + p.mu2 * d)
            - p.c_hold * n
            - p.c_lost2 * p.mu2 * (1 - d)
            - p.c_opp * p.lam
        )
    f = b - p.penalty * a
    return RewardStructure(a_coeffs=a, b_coeffs=b, f_values=f)


@dataclass(frozen=True)
class DifferenceSet:
    """1-based positions where two policies disagree."""

    positions: tuple[int, ...]

    def __len__(self) -> int:
        return len(self.positions)

    def __iter__(self):
        return iter(self.positions)


def difference_set(d: Policy, c: Policy) -> DifferenceSet:
    if len(d) != len(c):
        raise LengthMismatch(f"policies have lengths {len(d)} and {len(c)}")
    return DifferenceSet(
        tuple(i for i in range(1, len(d) + 1) if d[i - 1] != c[i - 1])
    )


def adjacent_chain(d: Policy, c: Policy, order: Sequence[int]) -> list[Policy]:
    """Walk from d to c flipping one disagreeing position per step.

    `order` must be a permutation of difference_set(d, c); the returned
    sequence ends at c and each consecutive pair differs in exactly one
    position.
    """
    diff = set(difference_set(d, c))
    if set(order) != diff or len(order) != len(diff):
        raise InvalidOrder(f"order {order!r} is not a permutation of {sorted(diff)}")
    chain = []
    current = d
    for pos in order:
        current = current.flip(pos)
        chain.append(current)
    return chain


def enumerate_policies(k: int, cap: int = ENUMERATION_CAP) -> Iterator[Policy]:
    """Yield all 2^K policies in lexicographic order of (d_1, ..., d_K)."""
    if k > cap:
        raise CapExceeded(f"K={k} exceeds enumeration cap {cap}")
    for bits in itertools.product((0, 1), repeat=k):
        yield Policy(bits)


def service_rates(params: SystemParams, policy: Policy) -> np.ndarray:
    """Aggregate down-rates v at states 1..N: mu1 + d_i*mu2 below the
    threshold, mu1 + mu2 above it."""
    check_policy(params, policy)
    k, n = params.threshold, params.capacity
    v = np.full(n, params.mu1 + params.mu2)
    v[:k] = params.mu1 + params.mu2 * policy.as_array()
    return v
