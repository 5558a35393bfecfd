"""Closed-form tail bounds, evaluated in log space.

Every evaluator returns a BoundValue carrying the natural log of the bound;
probabilities are exponentiated on demand and clipped to 1, with a vacuity
flag once the bound stops saying anything. Counting is over width-w circuits
of at most v gates on at most 3 wires, which the union arguments relax to
the (1/6)(8^8 w)^(3v) form (see control.circuit_count_log).
"""
from __future__ import annotations

import dataclasses
import math

from .errors import ValidationError

# Concentration constant for functions on the unit sphere.
LEVY_CONSTANT = 1.0 / (9.0 * math.pi**3)
# Weakened constant used on low-Schmidt-rank ensembles.
SCHMIDT_CONSTANT = 1.0 / (1296.0 * math.pi**3)

_LOG_TABLE_CHOICES = 24.0 * math.log(2.0)  # ln(8^8): tables on 3 wires


@dataclasses.dataclass(frozen=True)
class BoundValue:
    log_nats: float

    @property
    def log10(self) -> float:
        return self.log_nats / math.log(10.0)

    @property
    def probability(self) -> float:
        if self.log_nats >= 0.0:
            return 1.0
        return math.exp(self.log_nats)

    @property
    def vacuous(self) -> bool:
        return self.log_nats >= 0.0

    def as_dict(self) -> dict:
        return {
            "log_nats": self.log_nats,
            "log10": self.log10,
            "probability": self.probability,
            "vacuous": self.vacuous,
        }


def _pow2(exponent: float) -> float:
    try:
        return math.pow(2.0, exponent)
    except OverflowError:
        return math.inf


def _require_positive(**values: float) -> None:
    for name, value in values.items():
        if not value > 0.0:
            raise ValidationError(f"{name} must be positive, got {value!r}")


def _require_nonnegative(**values: float) -> None:
    # eps = 0 is allowed everywhere: the bound is then vacuous, not an error.
    for name, value in values.items():
        if not value >= 0.0:
            raise ValidationError(f"{name} cannot be negative, got {value!r}")


def _circuit_log(width: int, gates: int) -> float:
    if gates < 0:
        raise ValidationError("gate budget cannot be negative")
    if gates and width < 1:
        raise ValidationError(f"width {width} cannot host gates")
    return 3.0 * gates * (_LOG_TABLE_CHOICES + math.log(width)) if gates else 0.0


def levy_log_tail(eps: float, dim: int, lipschitz: float) -> BoundValue:
    """Tail 4 exp(-c eps^2 d / lam^2) for a lam-Lipschitz function on S^(d-1).

    `dim` is the real dimension of the ambient space: 2 * 2^q for q qubits.
    """
    _require_nonnegative(eps=eps)
    _require_positive(lipschitz=lipschitz)
    if dim < 2:
        raise ValidationError(f"dim={dim} must be at least 2")
    return BoundValue(
        math.log(4.0) - LEVY_CONSTANT * eps * eps * dim / (lipschitz * lipschitz)
    )


def haar_log_bound(eps: float, q: int, w: int, v: int) -> BoundValue:
    """Union bound (8^8 w)^(3v) exp(-c eps^2 2^q) over all decision circuits."""
    _require_nonnegative(eps=eps)
    if q < 1:
        raise ValidationError(f"q={q} must be at least 1")
    return BoundValue(_circuit_log(w, v) - LEVY_CONSTANT * eps * eps * _pow2(q))


def sampling_log_bound(eps: float, q: int, w: int, v: int, t: int) -> BoundValue:
    """Union bound 2^t (8^8 w)^(3v) exp(-c eps^2 2^(q-2t)) for t-bit samplers.

    t = 0 recovers the decision bound. q < 2t is allowed; the bound is then
    typically vacuous rather than an error.
    """
    _require_nonnegative(eps=eps)
    if q < 1:
        raise ValidationError(f"q={q} must be at least 1")
    if t < 0:
        raise ValidationError(f"t={t} cannot be negative")
    return BoundValue(
        t * math.log(2.0) + _circuit_log(w, v) - LEVY_CONSTANT * eps * eps * _pow2(q - 2 * t)
    )


def schmidt_log_bound(eps: float, q: int, w: int, v: int, rank: int) -> BoundValue:
    """Union bound (2^q + (8^8 w)^(3v)) exp(-c' eps^2 K^(1/3)), 64 <= K <= 2^q."""
    _require_nonnegative(eps=eps)
    if q < 1:
        raise ValidationError(f"q={q} must be at least 1")
    if rank < 64 or rank > _pow2(q):
        raise ValidationError(f"rank K={rank} outside 64..2^q for q={q}")
    prefactor = _logaddexp(q * math.log(2.0), _circuit_log(w, v))
    return BoundValue(prefactor - SCHMIDT_CONSTANT * eps * eps * rank ** (1.0 / 3.0))


def operator_norm_log_tail(q: int, rank: int, reduced: int) -> BoundValue:
    """Tail 2^q exp(-(K 2^-k) / 3) for the ensemble operator norm exceeding
    2K/2^k, valid for 2 <= k <= q and K >= 4 * 2^k."""
    if not 2 <= reduced <= q:
        raise ValidationError(f"k={reduced} outside 2..q={q}")
    if rank < 4 << reduced:
        raise ValidationError(f"rank K={rank} below 4*2^k = {4 << reduced}")
    return BoundValue(q * math.log(2.0) - rank / (3.0 * (1 << reduced)))


def operator_norm_threshold(rank: int, reduced: int) -> float:
    """The norm level 2K/2^k the tail above refers to."""
    return 2.0 * rank / (1 << reduced)


def hoeffding_log_bound(eps: float, rank: int) -> BoundValue:
    """Two-sided tail 2 exp(-2 eps^2 K) for a mean of K bounded terms."""
    _require_nonnegative(eps=eps)
    if rank < 1:
        raise ValidationError(f"rank K={rank} must be at least 1")
    return BoundValue(math.log(2.0) - 2.0 * eps * eps * rank)


def reduction_choice(rank: int) -> int:
    """floor((2/3) log2 K), computed exactly: the largest k with 8^k <= K^2."""
    if rank < 1:
        raise ValidationError(f"rank K={rank} must be at least 1")
    k = 0
    while 8 ** (k + 1) <= rank * rank:
        k += 1
    return k


@dataclasses.dataclass(frozen=True)
class LipschitzBudget:
    norm_cap: float
    lipschitz: float


def lipschitz_budget(rank: int) -> LipschitzBudget:
    """Norm cap 4 K^(1/3) and Lipschitz constant 8 K^(1/3).

    With k = reduction_choice(K) the threshold 2K/2^k is below 4 K^(1/3),
    and on that event acceptance functionals are 2 * norm_cap Lipschitz.
    """
    if rank < 1:
        raise ValidationError(f"rank K={rank} must be at least 1")
    cap = 4.0 * rank ** (1.0 / 3.0)
    return LipschitzBudget(cap, 2.0 * cap)


def per_step_epsilon(eps: float) -> float:
    """Split an accuracy budget across the three union-bound stages."""
    _require_nonnegative(eps=eps)
    return eps / 3.0


def _logaddexp(a: float, b: float) -> float:
    if a == -math.inf:
        return b
    if b == -math.inf:
        return a
    hi, lo = (a, b) if a >= b else (b, a)
    return hi + math.log1p(math.exp(lo - hi))
