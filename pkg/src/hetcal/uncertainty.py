"""Uncertain values, relative quadrature propagation and normalized-error comparison."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

from .exceptions import ConfigError

UNCERTAINTY_KINDS = ("typeA", "typeB", "combined")


@dataclass(frozen=True)
class UncertainValue:
    """A value with its standard (k=1) uncertainty in the same units."""

    value: float
    u_std: float = 0.0
    kind: str = "combined"

    def __post_init__(self):
        if not self.u_std >= 0:
            raise ConfigError(f"standard uncertainty must be >= 0, got {self.u_std!r}")
        if self.kind not in UNCERTAINTY_KINDS:
            raise ConfigError(f"uncertainty kind {self.kind!r} not in {UNCERTAINTY_KINDS}")

    @classmethod
    def from_relative(cls, value, rel_u, kind="typeB"):
        return cls(value, abs(value) * rel_u, kind)

    @property
    def rel(self):
        """Relative standard uncertainty ``u/|value|`` (0 for an exact zero)."""
        if self.value == 0:
            return 0.0 if self.u_std == 0 else math.inf
        return self.u_std / abs(self.value)

    def expanded(self, k=2.0):
        return k * self.u_std

    def __float__(self):
        return float(self.value)


def propagate_uncertainty(rel_components: Sequence[float]) -> float:
    """Combine independent relative uncertainties in quadrature."""
    total = 0.0
    for r in rel_components:
        if r < 0:
            raise ConfigError(f"relative uncertainty component {r!r} is negative")
        total += r * r
    return math.sqrt(total)


def loss_chain_estimate(components: Sequence[UncertainValue], delta_tau: UncertainValue) -> UncertainValue:
    """Efficiency from a separately measured loss chain.

    The value is ``(1 - 4 dtau^2)`` times the product of the positive factors.
    The splitter-imbalance term enters with the first-order relative
    sensitivity ``8 dtau / (1 - 4 dtau^2)``, which vanishes at ``dtau = 0``.
    """
    rel = []
    value = 1.0
    for c in components:
        if c.value <= 0:
            raise ConfigError(f"loss-chain factor {c.value!r} must be positive")
        value *= c.value
        rel.append(c.rel)
    imbalance = 1.0 - 4.0 * delta_tau.value**2
    if imbalance <= 0:
        raise ConfigError("delta_tau violates 4*delta_tau**2 < 1")
    rel.append(8.0 * abs(delta_tau.value) / imbalance * delta_tau.u_std)
    value *= imbalance
    return UncertainValue(value, value * propagate_uncertainty(rel), "combined")


class Comparison(NamedTuple):
    e_n: float
    agree: bool


def _value_and_expanded(x, k):
    if hasattr(x, "expanded_u"):
        return float(x.eta.value), float(x.expanded_u)
    if isinstance(x, UncertainValue):
        return x.value, x.expanded(k)
    value, expanded = x
    return float(value), float(expanded)


def compare_estimates(a, b, k=2.0) -> Comparison:
    """Normalized error ``E_n = |a - b| / sqrt(U_a^2 + U_b^2)``.

    ``a`` and ``b`` may be efficiency estimates, :class:`UncertainValue`
    (expanded with ``k``) or ``(value, expanded_u)`` pairs. One side may be
    exact (e.g. a simulator ground truth), but not both.
    """
    va, ua = _value_and_expanded(a, k)
    vb, ub = _value_and_expanded(b, k)
    if ua < 0 or ub < 0:
        raise ConfigError("expanded uncertainties must be non-negative")
    denom = math.hypot(ua, ub)
    if denom == 0:
        raise ConfigError("cannot compare two values that both have zero uncertainty")
    e_n = abs(va - vb) / denom
    return Comparison(e_n, e_n <= 1.0)
