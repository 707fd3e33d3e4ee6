"""Per-tier average user rates in a two-tier Poisson downlink.

The network has a macro tier and a small-cell tier, each a homogeneous PPP of
multi-antenna base stations doing zero-forcing to K single-antenna users per
cell with equal power split.  A user associates with the strongest long-term
biased received power (small cells get a range-expansion bias B >= 1), and
its signal-to-interference ratio uses Gamma-distributed effective gains:
Gamma(M+1-K, 1) toward the serving station and Gamma(K, 1) per interferer.

``rate_exact`` evaluates the resulting average of ln(1 + SIR) conditional on
the serving tier exactly; ``rate_approx`` evaluates the tight approximation
obtained by replacing the fluctuating channel gains with their means, which
depends only on the own-tier (M, K), the density and power ratios, the bias,
and the path-loss exponent.  All rates are in nats per channel use.

Only the cross-tier density ratio and power ratio enter the formulas, but
the model stores raw per-tier values so scale invariance is a testable
property instead of a structural assumption.
"""

import math
from dataclasses import dataclass, replace
from enum import Enum

import numpy as np

from .kernels import PathLoss, kernel_F_batch, kernel_H_batch
from .numerics import DomainError, QuadratureSpec, integrate_zero_to_inf

__all__ = [
    "TierId",
    "TierParams",
    "NetworkModel",
    "RateReport",
    "rate_exact",
    "rate_approx",
    "rate_approx_unbiased",
    "rate_report",
    "monotonicity_report",
]


class TierId(Enum):
    MACRO = "macro"
    SMALL = "small"


@dataclass(frozen=True)
class TierParams:
    """One tier: BS density, transmit power, antennas M, scheduled users K.

    Only cross-tier ratios of density and power are physically meaningful.
    users = 0 marks a silent tier: valid as a model, but rate evaluations
    require at least one scheduled user.
    """

    density: float
    power: float
    antennas: int
    users: int

    def __post_init__(self):
        if not (math.isfinite(self.density) and self.density > 0.0):
            raise DomainError(f"density must be positive, got {self.density}")
        if not (math.isfinite(self.power) and self.power > 0.0):
            raise DomainError(f"power must be positive, got {self.power}")
        if not isinstance(self.antennas, int) or isinstance(self.antennas, bool):
            raise DomainError(f"antennas must be an integer, got {self.antennas!r}")
        if not isinstance(self.users, int) or isinstance(self.users, bool):
            raise DomainError(f"users must be an integer, got {self.users!r}")
        if self.antennas < 1:
            raise DomainError(f"antennas must be >= 1, got {self.antennas}")
        if not (0 <= self.users <= self.antennas):
            raise DomainError(
                f"users must satisfy 0 <= K <= M, got K={self.users}, M={self.antennas}"
            )


@dataclass(frozen=True)
class NetworkModel:
    """Both tiers plus the path-loss exponent and the small-cell bias B >= 1."""

    macro: TierParams
    small: TierParams
    pl: PathLoss
    bias: float = 1.0

    def __post_init__(self):
        if not (math.isfinite(self.bias) and self.bias >= 1.0):
            raise DomainError(f"bias must be >= 1, got {self.bias}")

    def tier(self, tier: TierId) -> TierParams:
        return self.macro if tier is TierId.MACRO else self.small


@dataclass(frozen=True)
class RateReport:
    """Exact and approximate average rate of one tier, nats per channel use."""

    tier: TierId
    exact: float
    approx: float


def cross_tier_weight(model: NetworkModel, tier: TierId) -> float:
    """Density-and-power weight of the other tier's interference field.

    Macro: (lambda_s/lambda_m) * (P_s*B/P_m)^(2/alpha); small tier is the
    reciprocal arrangement.  This is also the biased-association odds ratio.
    """
    e = 2.0 / model.pl.alpha
    if tier is TierId.MACRO:
        return (model.small.density / model.macro.density) * (
            model.small.power * model.bias / model.macro.power
        ) ** e
    return (model.macro.density / model.small.density) * (
        model.macro.power / (model.small.power * model.bias)
    ) ** e


def _require_users(tier_params: TierParams, label: str) -> None:
    if tier_params.users < 1:
        raise DomainError(
            f"{label} tier needs at least one scheduled user (K >= 1) for rate evaluation"
        )


def rate_exact(
    model: NetworkModel, tier: TierId, spec: QuadratureSpec | None = None
) -> float:
    """Average rate of a user served by ``tier``, exact gain statistics.

    Needs K >= 1 on both tiers: the cross-tier interference term divides the
    interfering tier's power among its own scheduled users.
    """
    _require_users(model.macro, "macro")
    _require_users(model.small, "small")
    own = model.tier(tier)
    other = model.small if tier is TierId.MACRO else model.macro
    w = cross_tier_weight(model, tier)
    if tier is TierId.MACRO:
        cross_scale = own.users / (other.users * model.bias)
    else:
        cross_scale = own.users * model.bias / other.users
    n = own.antennas + 1 - own.users
    pl = model.pl

    def integrand(z):
        f_own = kernel_F_batch(z, own.users, pl)
        f_cross = kernel_F_batch(z * cross_scale, other.users, pl)
        num = -np.expm1(-n * np.log1p(z)) * (1.0 + w)
        return num / (z * (f_own + w * f_cross))

    return integrate_zero_to_inf(integrand, spec, tail_power=1.0 + 2.0 / pl.alpha)


def rate_approx(
    model: NetworkModel, tier: TierId, spec: QuadratureSpec | None = None
) -> float:
    """Mean-gain approximation of ``rate_exact``.

    Structurally independent of the other tier's antenna and user counts;
    tight across the operating range (validated in the test suite).
    """
    own = model.tier(tier)
    _require_users(own, tier.value)
    w = cross_tier_weight(model, tier)
    other_scale = 1.0 / model.bias if tier is TierId.MACRO else model.bias
    nu = (own.antennas + 1 - own.users) / own.users
    pl = model.pl

    def integrand(z):
        h_own = kernel_H_batch(z, pl)
        h_cross = kernel_H_batch(z * other_scale, pl)
        num = -np.expm1(-nu * z) * (1.0 + w)
        return num / (z * (h_own + w * h_cross))

    return integrate_zero_to_inf(integrand, spec, tail_power=1.0 + 2.0 / pl.alpha)


def rate_approx_unbiased(
    antennas: int, users: int, pl: PathLoss, spec: QuadratureSpec | None = None
) -> float:
    """Unbiased (B = 1) approximate rate: depends only on (M, K, alpha).

    With B = 1 the density/power weights cancel between numerator and
    denominator, leaving int (1 - exp(-z*(M+1-K)/K)) / (z*H(z)) dz.
    """
    if not isinstance(antennas, int) or not isinstance(users, int):
        raise DomainError("antennas and users must be integers")
    if not (1 <= users <= antennas):
        raise DomainError(f"need 1 <= K <= M, got K={users}, M={antennas}")
    nu = (antennas + 1 - users) / users

    def integrand(z):
        return -np.expm1(-nu * z) / (z * kernel_H_batch(z, pl))

    return integrate_zero_to_inf(integrand, spec, tail_power=1.0 + 2.0 / pl.alpha)


def rate_report(
    model: NetworkModel, tier: TierId, spec: QuadratureSpec | None = None
) -> RateReport:
    """Exact and approximate rate of one tier bundled together."""
    return RateReport(
        tier=tier,
        exact=rate_exact(model, tier, spec),
        approx=rate_approx(model, tier, spec),
    )


DEFAULT_DENSITY_RATIOS = (0.1, 0.5, 1.0, 5.0, 10.0)
DEFAULT_POWER_RATIOS = (0.01, 0.05, 0.1, 0.5, 1.0)
DEFAULT_BIASES = (1.25, 1.5, 2.0, 4.0, 8.0)


def monotonicity_report(
    model: NetworkModel,
    tier: TierId,
    density_ratios=DEFAULT_DENSITY_RATIOS,
    power_ratios=DEFAULT_POWER_RATIOS,
    biases=DEFAULT_BIASES,
) -> dict:
    """Sample rate_approx along the density-ratio, power-ratio and bias axes.

    Returns {"density_ratio" | "power_ratio" | "bias": [(value, rate), ...]}
    with each axis swept while the other parameters stay at the model's
    values.  Callers assert the orderings they care about.
    """
    out = {"density_ratio": [], "power_ratio": [], "bias": []}
    for r in density_ratios:
        m = replace(model, small=replace(model.small, density=r * model.macro.density))
        out["density_ratio"].append((float(r), rate_approx(m, tier)))
    for r in power_ratios:
        m = replace(model, small=replace(model.small, power=r * model.macro.power))
        out["power_ratio"].append((float(r), rate_approx(m, tier)))
    for b in biases:
        m = replace(model, bias=float(b))
        out["bias"].append((float(b), rate_approx(m, tier)))
    return out
