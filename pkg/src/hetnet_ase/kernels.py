"""Interference kernels for Poisson shot-noise fields under a power-law path loss.

Two scalar special functions carry all of the interference geometry used by
the rate expressions:

    kernel_F(x, y) = 1 + x^(2/a) * int_{x^(-2/a)}^inf (1 - (1 + u^(-a/2))^(-y)) du
    kernel_H(x)    = 1 + x^(2/a) * int_{x^(-2/a)}^inf (1 - exp(-u^(-a/2))) du

with a > 2 the path-loss exponent.  kernel_F absorbs the Laplace transform of
interference whose per-interferer power is Gamma(y, 1) distributed; kernel_H
is its companion where the fluctuating power is replaced by its mean.  Both
are >= 1 everywhere, equal 1 at x = 0 (continuity limit), and nondecreasing
in every argument.

The substitution u = x^(-2/a) * s puts every kernel on the common domain
s in [1, inf):

    kernel_F(x, y) = 1 + int_1^inf (1 - (1 + x * s^(-a/2))^(-y)) ds
    kernel_H(x)    = 1 + int_1^inf (1 - exp(-x * s^(-a/2))) ds

which is the single quadrature path used here.  It also allows whole batches
of x values (the outer quadrature nodes of the rate integrals) to be
evaluated as one vector-valued adaptive integral; the scalar functions are
batch size 1.

y is usually an integer count of users sharing an interfering transmitter,
but any real y >= 0 is accepted so optimization code can relax the count to
a continuous variable.

Results are memoized on the exact (x, y, alpha) floats; the cache never
changes observable values beyond quadrature tolerance and can be dropped at
any time with ``clear_kernel_caches``.
"""

import math

import numpy as np

from .numerics import DomainError, QuadratureSpec, integrate_many_lower_to_inf

__all__ = [
    "PathLoss",
    "kernel_F",
    "kernel_H",
    "kernel_F_batch",
    "kernel_H_batch",
    "clear_kernel_caches",
]

# Kernels run tighter than the surrounding rate quadratures so kernel noise
# never limits the outer accuracy contract.
_INNER_SPEC = QuadratureSpec(rel_tol=1e-10, abs_tol=1e-13, max_subdivisions=2000)

_F_CACHE: dict = {}
_H_CACHE: dict = {}


class PathLoss:
    """Path-loss exponent; alpha > 2 is required for interference to be finite."""

    __slots__ = ("alpha",)

    def __init__(self, alpha: float):
        alpha = float(alpha)
        if not (math.isfinite(alpha) and alpha > 2.0):
            raise DomainError(f"path-loss exponent must be > 2, got {alpha}")
        object.__setattr__(self, "alpha", alpha)

    def __setattr__(self, name, value):
        raise AttributeError("PathLoss is immutable")

    def __repr__(self):
        return f"PathLoss(alpha={self.alpha})"

    def __eq__(self, other):
        return isinstance(other, PathLoss) and other.alpha == self.alpha

    def __hash__(self):
        return hash(("PathLoss", self.alpha))


def clear_kernel_caches() -> None:
    """Drop all memoized kernel values (frees memory after large sweeps)."""
    _F_CACHE.clear()
    _H_CACHE.clear()


def _validated_batch(name: str, x) -> np.ndarray:
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if x.ndim != 1:
        raise DomainError(f"{name} batch must be one-dimensional")
    if not np.all(np.isfinite(x)) or np.any(x < 0.0):
        raise DomainError(f"{name} must be finite and >= 0")
    return x


def kernel_F_batch(
    x, y, pl: PathLoss, spec: QuadratureSpec | None = None
) -> np.ndarray:
    """kernel_F evaluated for a batch of x at one shared Gamma shape y."""
    x = _validated_batch("x", x)
    y = float(y)
    if not (math.isfinite(y) and y >= 0.0):
        raise DomainError(f"y must be finite and >= 0, got {y}")
    alpha = pl.alpha
    out = np.ones_like(x)
    if y == 0.0:
        return out
    if spec is None:
        todo = [
            j for j, xj in enumerate(x) if xj > 0.0 and (xj, y, alpha) not in _F_CACHE
        ]
        for j, xj in enumerate(x):
            if xj > 0.0 and (xj, y, alpha) in _F_CACHE:
                out[j] = _F_CACHE[(xj, y, alpha)]
    else:
        todo = [j for j, xj in enumerate(x) if xj > 0.0]
    if not todo:
        return out
    xs = x[todo]
    half_a = 0.5 * alpha

    def integrand(s):
        # overflow of x * s^(-a/2) is benign: log1p saturates the expm1 term
        # at exactly 1 (the quadrature suppresses fp flags)
        return -np.expm1(-y * np.log1p(xs[None, :] * s[:, None] ** -half_a))

    vals = 1.0 + integrate_many_lower_to_inf(
        integrand, 1.0, len(todo), spec or _INNER_SPEC, tail_power=half_a
    )
    out[todo] = vals
    if spec is None:
        for j, v in zip(todo, vals):
            _F_CACHE[(x[j], y, alpha)] = float(v)
    return out


def kernel_H_batch(x, pl: PathLoss, spec: QuadratureSpec | None = None) -> np.ndarray:
    """kernel_H evaluated for a batch of x."""
    x = _validated_batch("x", x)
    alpha = pl.alpha
    out = np.ones_like(x)
    if spec is None:
        todo = [j for j, xj in enumerate(x) if xj > 0.0 and (xj, alpha) not in _H_CACHE]
        for j, xj in enumerate(x):
            if xj > 0.0 and (xj, alpha) in _H_CACHE:
                out[j] = _H_CACHE[(xj, alpha)]
    else:
        todo = [j for j, xj in enumerate(x) if xj > 0.0]
    if not todo:
        return out
    xs = x[todo]
    half_a = 0.5 * alpha

    def integrand(s):
        return -np.expm1(-(xs[None, :] * s[:, None] ** -half_a))

    vals = 1.0 + integrate_many_lower_to_inf(
        integrand, 1.0, len(todo), spec or _INNER_SPEC, tail_power=half_a
    )
    out[todo] = vals
    if spec is None:
        for j, v in zip(todo, vals):
            _H_CACHE[(x[j], alpha)] = float(v)
    return out


def kernel_F(x, y, pl: PathLoss, spec: QuadratureSpec | None = None) -> float:
    """Gamma-power interference kernel; F(0, y) = F(x, 0) = 1 by continuity."""
    x = float(x)
    if not (math.isfinite(x) and x >= 0.0):
        raise DomainError(f"x must be finite and >= 0, got {x}")
    return float(kernel_F_batch(np.array([x]), y, pl, spec)[0])


def kernel_H(x, pl: PathLoss, spec: QuadratureSpec | None = None) -> float:
    """Mean-power interference kernel; H(0) = 1, strictly increasing in x."""
    x = float(x)
    if not (math.isfinite(x) and x >= 0.0):
        raise DomainError(f"x must be finite and >= 0, got {x}")
    return float(kernel_H_batch(np.array([x]), pl, spec)[0])
