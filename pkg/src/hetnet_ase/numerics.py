"""Deterministic numerical primitives: semi-infinite quadrature and bisection.

The integrators map [0, inf) onto the unit interval through z = (t/(1-t))**q
and refine an embedded Gauss pair (10- and 21-point Gauss-Legendre rules) on
the subinterval with the largest error estimate until the accuracy contract
is met.  The exponent q defaults to 1; callers that know the algebraic decay
rate of their integrand can pass ``tail_power`` and get a q that makes the
transformed integrand smooth at t = 1, which cuts the subdivision count by
orders of magnitude for slowly decaying tails.

Integrands must accept numpy arrays: every refinement step evaluates a whole
batch of nodes in one call.

All routines are pure functions of their arguments; repeated calls with
identical inputs return bit-identical results.
"""

import heapq
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

__all__ = [
    "DomainError",
    "NonConvergence",
    "BadBracket",
    "QuadratureSpec",
    "BracketSpec",
    "DEFAULT_QUADRATURE",
    "integrate_zero_to_inf",
    "integrate_lower_to_inf",
    "integrate_many_lower_to_inf",
    "bisect",
]


class DomainError(ValueError):
    """Input lies outside the domain a routine is defined on."""


class NonConvergence(RuntimeError):
    """Iteration budget exhausted before the accuracy target was met."""


class BadBracket(ValueError):
    """Bisection bracket whose endpoints do not straddle a sign change."""


@dataclass(frozen=True)
class QuadratureSpec:
    """Accuracy contract for the adaptive integrators.

    The estimate I aims for |I - truth| <= rel_tol*|I| + abs_tol, with the
    truth gap measured by the embedded-pair error estimate.
    """

    rel_tol: float = 1e-8
    abs_tol: float = 1e-12
    max_subdivisions: int = 2000

    def __post_init__(self):
        if not (math.isfinite(self.rel_tol) and self.rel_tol > 0.0):
            raise DomainError(f"rel_tol must be positive, got {self.rel_tol}")
        if not (math.isfinite(self.abs_tol) and self.abs_tol >= 0.0):
            raise DomainError(f"abs_tol must be >= 0, got {self.abs_tol}")
        if self.max_subdivisions < 1:
            raise DomainError(
                f"max_subdivisions must be >= 1, got {self.max_subdivisions}"
            )


@dataclass(frozen=True)
class BracketSpec:
    """Search interval and stopping rule for the bisection solver."""

    lo: float
    hi: float
    x_tol: float = 1e-7
    max_iters: int = 100

    def __post_init__(self):
        if not (math.isfinite(self.lo) and math.isfinite(self.hi)):
            raise DomainError("bracket endpoints must be finite")
        if not self.lo < self.hi:
            raise DomainError(f"bracket needs lo < hi, got [{self.lo}, {self.hi}]")
        if not (math.isfinite(self.x_tol) and self.x_tol > 0.0):
            raise DomainError(f"x_tol must be positive, got {self.x_tol}")
        if self.max_iters < 1:
            raise DomainError(f"max_iters must be >= 1, got {self.max_iters}")


DEFAULT_QUADRATURE = QuadratureSpec()

# Embedded pair: the 21-point rule supplies the value, the 10-point rule the
# error estimate |G21 - G10|.  Nodes are all interior, so integrands are never
# evaluated at the (possibly singular) interval endpoints.
_LO_X, _LO_W = np.polynomial.legendre.leggauss(10)
_HI_X, _HI_W = np.polynomial.legendre.leggauss(21)
_ALL_X = np.concatenate([_LO_X, _HI_X])
_N_LO = _LO_X.size

# Guard against absurd transform exponents when tail_power is barely above 1.
_MAX_Q = 64.0


def _pair_on(phi: Callable[[np.ndarray], np.ndarray], a: float, b: float):
    """Evaluate the embedded pair on [a, b]; returns (value, error_estimate)."""
    half = 0.5 * (b - a)
    nodes = 0.5 * (a + b) + half * _ALL_X
    raw = phi(nodes)
    y = raw if type(raw) is np.ndarray and raw.shape == nodes.shape else np.broadcast_to(
        np.asarray(raw, dtype=float), nodes.shape
    )
    if not np.all(np.isfinite(y)):
        bad = nodes[~np.isfinite(np.asarray(y, dtype=float))][0]
        raise DomainError(f"integrand returned a non-finite value near t={bad!r}")
    lo = half * float(_LO_W @ y[:_N_LO])
    hi = half * float(_HI_W @ y[_N_LO:])
    return hi, abs(hi - lo)


def _adaptive_unit(phi: Callable[[np.ndarray], np.ndarray], spec: QuadratureSpec) -> float:
    """Globally adaptive refinement of phi over [0, 1]."""
    # Overflow/underflow inside integrands is routine near the endpoint
    # images (z huge or tiny); non-finite results still fail loudly via the
    # explicit isfinite check in _pair_on.
    with np.errstate(over="ignore", under="ignore", divide="ignore", invalid="ignore"):
        val, err = _pair_on(phi, 0.0, 1.0)
        total, total_err = val, err
        # Heap entries carry an insertion counter so the pop order is fully
        # deterministic even when error estimates tie.
        heap = [(-err, 0, 0.0, 1.0, val, err)]
        counter = 1
        splits = 0
        while total_err > max(spec.abs_tol, spec.rel_tol * abs(total)):
            if splits >= spec.max_subdivisions:
                raise NonConvergence(
                    f"quadrature stalled after {splits} subdivisions "
                    f"(error estimate {total_err:.3e}, value {total:.6e})"
                )
            _, _, a, b, v_parent, e_parent = heapq.heappop(heap)
            mid = 0.5 * (a + b)
            v1, e1 = _pair_on(phi, a, mid)
            v2, e2 = _pair_on(phi, mid, b)
            total += (v1 + v2) - v_parent
            total_err += (e1 + e2) - e_parent
            heapq.heappush(heap, (-e1, counter, a, mid, v1, e1))
            heapq.heappush(heap, (-e2, counter + 1, mid, b, v2, e2))
            counter += 2
            splits += 1
    return total


def _transform_exponent(tail_power) -> float:
    """Map a decay hint |f(z)| ~ z**(-tail_power) to the substitution power q.

    q = 2/(tail_power - 1) renders the transformed integrand O((1-t)) at t=1,
    i.e. smooth enough for the Gauss pair to converge at spectral speed.
    """
    if tail_power is None:
        return 1.0
    p = float(tail_power)
    if not (math.isfinite(p) and p > 1.0):
        raise DomainError(f"tail_power must be > 1 (integrability), got {tail_power}")
    return min(max(2.0 / (p - 1.0), 1.0), _MAX_Q)


def _semi_infinite_phi(f: Callable[[np.ndarray], np.ndarray], q: float):
    """Pull f back to the unit interval: z = (t/(1-t))**q."""

    def phi(t: np.ndarray) -> np.ndarray:
        r = t / (1.0 - t)
        if q == 1.0:
            z = r
            jac = (1.0 + r) * (1.0 + r)
        else:
            z = r ** q
            jac = q * r ** (q - 1.0) * (1.0 + r) * (1.0 + r)
        if np.isfinite(z).all() and np.isfinite(jac).all():
            return np.asarray(f(z), dtype=float) * jac
        # Deep subdivision can push z or the Jacobian past the float range;
        # there the contracted decay (tail_power > 1) makes the true
        # contribution vanish, so those nodes score zero.
        out = np.zeros_like(t)
        ok = np.isfinite(z) & np.isfinite(jac)
        if np.any(ok):
            out[ok] = np.asarray(f(z[ok]), dtype=float) * jac[ok]
        return out

    return phi


def integrate_zero_to_inf(
    f: Callable[[np.ndarray], np.ndarray],
    spec: QuadratureSpec | None = None,
    tail_power: float | None = None,
) -> float:
    """Integrate f over (0, inf).

    f must be continuous on (0, inf), have a finite limit at 0+, and decay
    fast enough to be integrable (pass ``tail_power`` p when |f| ~ z**-p for
    large z so the substitution can be matched to the tail).

    Raises NonConvergence when the subdivision budget runs out and
    DomainError when f produces non-finite values.
    """
    spec = DEFAULT_QUADRATURE if spec is None else spec
    q = _transform_exponent(tail_power)
    return _adaptive_unit(_semi_infinite_phi(f, q), spec)


def integrate_lower_to_inf(
    f: Callable[[np.ndarray], np.ndarray],
    lower: float,
    spec: QuadratureSpec | None = None,
    tail_power: float | None = None,
) -> float:
    """Integrate f over (lower, inf) by shifting the origin to ``lower``."""
    lower = float(lower)
    if not (math.isfinite(lower) and lower >= 0.0):
        raise DomainError(f"lower bound must be finite and >= 0, got {lower}")
    if lower == 0.0:
        return integrate_zero_to_inf(f, spec, tail_power)
    return integrate_zero_to_inf(lambda v: f(lower + v), spec, tail_power)


def _pair_on_multi(phi, a: float, b: float):
    """Embedded pair for a vector-valued integrand: phi(t) has shape (t.size, m)."""
    half = 0.5 * (b - a)
    nodes = 0.5 * (a + b) + half * _ALL_X
    y = phi(nodes)
    if not np.all(np.isfinite(y)):
        raise DomainError("vector integrand returned non-finite values")
    lo = half * (_LO_W @ y[:_N_LO])
    hi = half * (_HI_W @ y[_N_LO:])
    return hi, np.abs(hi - lo)


def integrate_many_lower_to_inf(
    f: Callable[[np.ndarray], np.ndarray],
    lower: float,
    m: int,
    spec: QuadratureSpec | None = None,
    tail_power: float | None = None,
) -> np.ndarray:
    """Integrate m integrands that share their domain (lower, inf) jointly.

    f maps a batch of abscissae (n,) to a matrix (n, m) holding every
    component integrand at every abscissa.  The adaptive refinement is shared:
    it continues until each component meets the accuracy contract, always
    splitting the subinterval with the largest summed error.  Per component
    the result matches the scalar integrators to within the contract; exact
    floats can differ because the subdivision pattern is joint.
    """
    spec = DEFAULT_QUADRATURE if spec is None else spec
    lower = float(lower)
    if not (math.isfinite(lower) and lower >= 0.0):
        raise DomainError(f"lower bound must be finite and >= 0, got {lower}")
    if m < 1:
        raise DomainError(f"component count must be >= 1, got {m}")
    q = _transform_exponent(tail_power)

    def phi(t: np.ndarray) -> np.ndarray:
        r = t / (1.0 - t)
        if q == 1.0:
            z = r
            jac = (1.0 + r) * (1.0 + r)
        else:
            z = r ** q
            jac = q * r ** (q - 1.0) * (1.0 + r) * (1.0 + r)
        ok = np.isfinite(z) & np.isfinite(jac)
        if ok.all():
            return np.asarray(f(lower + z), dtype=float) * jac[:, None]
        out = np.zeros((t.size, m))
        if np.any(ok):
            out[ok] = np.asarray(f(lower + z[ok]), dtype=float) * jac[ok, None]
        return out

    with np.errstate(over="ignore", under="ignore", divide="ignore", invalid="ignore"):
        val, err = _pair_on_multi(phi, 0.0, 1.0)
        total = val.copy()
        total_err = err.copy()
        heap = [(-float(err.sum()), 0, 0.0, 1.0, val, err)]
        counter = 1
        splits = 0
        while np.any(total_err > np.maximum(spec.abs_tol, spec.rel_tol * np.abs(total))):
            if splits >= spec.max_subdivisions:
                raise NonConvergence(
                    f"vector quadrature stalled after {splits} subdivisions"
                )
            _, _, a, b, v_parent, e_parent = heapq.heappop(heap)
            mid = 0.5 * (a + b)
            v1, e1 = _pair_on_multi(phi, a, mid)
            v2, e2 = _pair_on_multi(phi, mid, b)
            total += (v1 + v2) - v_parent
            total_err += (e1 + e2) - e_parent
            heapq.heappush(heap, (-float(e1.sum()), counter, a, mid, v1, e1))
            heapq.heappush(heap, (-float(e2.sum()), counter + 1, mid, b, v2, e2))
            counter += 2
            splits += 1
    return total


def _sign(v: float) -> int:
    if math.isnan(v):
        raise DomainError("function returned NaN during bisection")
    return (v > 0.0) - (v < 0.0)


def bisect(g: Callable[[float], float], bracket: BracketSpec) -> float:
    """Locate the root of a strictly monotone g inside ``bracket``.

    Returns the bracket midpoint once the bracket width is <= x_tol (or the
    exact point if g evaluates to zero).  Raises BadBracket when the endpoint
    signs match and NonConvergence when max_iters runs out first.
    """
    lo, hi = float(bracket.lo), float(bracket.hi)
    f_lo = float(g(lo))
    f_hi = float(g(hi))
    s_lo, s_hi = _sign(f_lo), _sign(f_hi)
    if s_lo == 0:
        return lo
    if s_hi == 0:
        return hi
    if s_lo == s_hi:
        raise BadBracket(
            f"no sign change on [{lo}, {hi}]: g(lo)={f_lo:.6e}, g(hi)={f_hi:.6e}"
        )
    mid = 0.5 * (lo + hi)
    for _ in range(bracket.max_iters):
        if (hi - lo) <= bracket.x_tol:
            return mid
        mid = 0.5 * (lo + hi)
        f_mid = float(g(mid))
        s_mid = _sign(f_mid)
        if s_mid == 0:
            return mid
        if s_mid == s_lo:
            lo, f_lo = mid, f_mid
        else:
            hi, f_hi = mid, f_mid
        # Loop invariant: the current bracket still straddles the root.
        assert _sign(f_lo) != _sign(f_hi)
    if (hi - lo) <= bracket.x_tol:
        return 0.5 * (lo + hi)
    raise NonConvergence(
        f"bisection did not reach x_tol={bracket.x_tol} in {bracket.max_iters} iterations"
    )
