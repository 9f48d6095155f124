"""Exact function algebra on a bounded interval.

Functions are finite sums of terms ``p(t) * exp(mu * t)`` with real
polynomial ``p``. The class is closed under addition, multiplication,
and differentiation, and every L2 pairing over an interval has a closed
form, so downstream identities can be checked to roundoff rather than
quadrature accuracy.

Definite integrals of ``t**k * exp(nu*t)`` are evaluated through two
positive-term series (an ascending exponential series for ``nu > 0``
and a lower-incomplete-gamma series for ``nu < 0``). Both are free of
cancellation, which keeps high polynomial degrees (as produced by long
implicit-Euler runs) at machine precision; the textbook
integration-by-parts recurrence loses all digits beyond degree ~20.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property, lru_cache
from typing import Iterable, Sequence

__all__ = [
    "Interval",
    "ExpPoly",
    "differentiate",
    "evaluate",
    "antiderivative",
    "absorb_rate_shift",
    "l2_inner",
    "graph_inner",
    "l2_norm",
    "graph_norm",
    "prune",
]

#: Rates closer than this are merged into one term.
RATE_MERGE_TOL = 1e-14

#: Maximum polynomial degree per term. Resonant implicit-Euler steps
#: raise the degree by one each, so the cap must exceed the longest
#: supported trajectory (64 covers the 50-step acceptance runs).
DEGREE_CAP = 64

_SERIES_CUTOFF = 1e-18
_SERIES_MAX_TERMS = 100_000


@dataclass(frozen=True)
class Interval:
    """Closed interval ``[a, b]`` with ``a < b``."""

    a: float
    b: float

    def __post_init__(self) -> None:
        if not (self.a < self.b):
            raise ValueError(f"need a < b, got [{self.a}, {self.b}]")

    @property
    def length(self) -> float:
        return self.b - self.a

    # The four endpoint exponentials recur in every boundary formula;
    # computing them once per interval keeps constants bit-identical
    # across call sites.
    @cached_property
    def exp_a(self) -> float:
        return math.exp(self.a)

    @cached_property
    def exp_b(self) -> float:
        return math.exp(self.b)

    @cached_property
    def exp_neg_a(self) -> float:
        return math.exp(-self.a)

    @cached_property
    def exp_neg_b(self) -> float:
        return math.exp(-self.b)

    def to_jsonable(self) -> dict:
        return {"a": self.a, "b": self.b}

    @classmethod
    def from_jsonable(cls, data: dict) -> "Interval":
        return cls(float(data["a"]), float(data["b"]))


def _trim(coeffs: Sequence[float]) -> tuple[float, ...]:
    out = list(coeffs)
    while out and out[-1] == 0.0:
        out.pop()
    return tuple(float(c) for c in out)


def _normalise(terms: Iterable[tuple[float, Sequence[float]]]):
    by_rate: list[tuple[float, list[float]]] = []
    for rate, coeffs in sorted(terms, key=lambda t: t[0]):
        rate = float(rate)
        coeffs = list(coeffs)
        if by_rate and abs(rate - by_rate[-1][0]) <= RATE_MERGE_TOL:
            acc = by_rate[-1][1]
            if len(coeffs) > len(acc):
                acc.extend([0.0] * (len(coeffs) - len(acc)))
            for k, c in enumerate(coeffs):
                acc[k] += c
        else:
            by_rate.append((rate, coeffs))
    out = []
    for rate, coeffs in by_rate:
        trimmed = _trim(coeffs)
        if not trimmed:
            continue
        if len(trimmed) - 1 > DEGREE_CAP:
            raise ValueError(
                f"polynomial degree {len(trimmed) - 1} exceeds cap {DEGREE_CAP}"
            )
        out.append((rate, trimmed))
    return tuple(out)


@dataclass(frozen=True)
class ExpPoly:
    """Finite sum of ``p(t) * exp(mu*t)`` terms.

    ``terms`` maps each distinct rate ``mu`` to ascending polynomial
    coefficients. The empty term list is the zero function. Instances
    are immutable and normalised on construction: rates within
    ``RATE_MERGE_TOL`` are merged and zero polynomials are dropped.
    """

    terms: tuple[tuple[float, tuple[float, ...]], ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "terms", _normalise(self.terms))

    # -- constructors -------------------------------------------------

    @classmethod
    def zero(cls) -> "ExpPoly":
        return cls(())

    @classmethod
    def constant(cls, value: float) -> "ExpPoly":
        return cls(((0.0, (float(value),)),))

    @classmethod
    def exponential(cls, rate: float, scale: float = 1.0) -> "ExpPoly":
        """``scale * exp(rate * t)``."""
        return cls(((float(rate), (float(scale),)),))

    @classmethod
    def polynomial(cls, coeffs: Sequence[float]) -> "ExpPoly":
        """Plain polynomial with ascending ``coeffs``."""
        return cls(((0.0, tuple(float(c) for c in coeffs)),))

    # -- queries ------------------------------------------------------

    @property
    def is_zero(self) -> bool:
        return not self.terms

    @property
    def rates(self) -> tuple[float, ...]:
        return tuple(rate for rate, _ in self.terms)

    def __call__(self, t: float) -> float:
        total = 0.0
        for rate, coeffs in self.terms:
            p = 0.0
            for c in reversed(coeffs):
                p = p * t + c
            total += p * math.exp(rate * t)
        return total

    # -- algebra ------------------------------------------------------

    def __add__(self, other: "ExpPoly") -> "ExpPoly":
        if not isinstance(other, ExpPoly):
            return NotImplemented
        return ExpPoly(self.terms + other.terms)

    def __neg__(self) -> "ExpPoly":
        return ExpPoly(
            tuple((rate, tuple(-c for c in coeffs)) for rate, coeffs in self.terms)
        )

    def __sub__(self, other: "ExpPoly") -> "ExpPoly":
        if not isinstance(other, ExpPoly):
            return NotImplemented
        return self + (-other)

    def __mul__(self, other):
        if isinstance(other, ExpPoly):
            prods = []
            for r1, c1 in self.terms:
                for r2, c2 in other.terms:
                    prods.append((r1 + r2, _conv(c1, c2)))
            return ExpPoly(tuple(prods))
        if isinstance(other, (int, float)):
            s = float(other)
            return ExpPoly(
                tuple((rate, tuple(s * c for c in coeffs)) for rate, coeffs in self.terms)
            )
        return NotImplemented

    __rmul__ = __mul__

    def derivative(self) -> "ExpPoly":
        return differentiate(self)

    # -- serialisation ------------------------------------------------

    def to_jsonable(self) -> list:
        return [
            {"rate": rate, "coeffs": list(coeffs)} for rate, coeffs in self.terms
        ]

    @classmethod
    def from_jsonable(cls, data: list) -> "ExpPoly":
        return cls(
            tuple(
                (float(item["rate"]), tuple(float(c) for c in item["coeffs"]))
                for item in data
            )
        )


def _conv(p: Sequence[float], q: Sequence[float]) -> tuple[float, ...]:
    out = [0.0] * (len(p) + len(q) - 1)
    for i, a in enumerate(p):
        for j, b in enumerate(q):
            out[i + j] += a * b
    return tuple(out)


def differentiate(f: ExpPoly) -> ExpPoly:
    """Derivative of ``f``, term by term through the product rule."""
    out = []
    for rate, coeffs in f.terms:
        n = len(coeffs)
        new = [0.0] * n
        for k in range(n):
            new[k] += rate * coeffs[k]
            if k + 1 < n:
                new[k] += (k + 1) * coeffs[k + 1]
        out.append((rate, new))
    return ExpPoly(tuple(out))


def evaluate(f: ExpPoly, t: float) -> float:
    """Numeric value of ``f`` at ``t``."""
    return f(t)


def absorb_rate_shift(
    coeffs: Sequence[float], nu: float, t_scale: float, tol: float = 1e-18
) -> tuple[float, ...]:
    """Coefficients of ``p(t) * e^{nu*t}`` as a plain polynomial.

    Multiplies by the Taylor series of ``e^{nu*t}`` truncated once its
    terms fall below ``tol`` on ``|t| <= t_scale``. Used to merge a rate
    that sits within a small window of a resonant rate into the
    resonant term, where the lifted solve is stable; the truncation
    error is machine-negligible by construction.
    """
    taylor = [1.0]
    term = 1.0
    k = 0
    scale = max(t_scale, 1e-30)
    while abs(term) * scale ** k > tol:
        k += 1
        term *= nu / k
        taylor.append(term)
        if k > 60:  # pragma: no cover - |nu|*t_scale is kept small by callers
            raise ValueError("rate shift too large to absorb")
    return _conv(tuple(coeffs), tuple(taylor))


def antiderivative(f: ExpPoly, rate_tol: float = 1e-10) -> ExpPoly:
    """One antiderivative of ``f`` (integration constants set to zero).

    Terms whose rate is below ``rate_tol`` in magnitude integrate by the
    power rule; the rest solve ``nu*q + q' = p`` coefficient-wise.
    """
    out = []
    for nu, p in f.terms:
        n = len(p)
        if abs(nu) <= rate_tol:
            q = [0.0] * (n + 1)
            for k in range(1, n + 1):
                q[k] = p[k - 1] / k
            out.append((0.0, q))
        else:
            q = [0.0] * n
            for k in range(n - 1, -1, -1):
                acc = p[k]
                if k + 1 < n:
                    acc -= (k + 1) * q[k + 1]
                q[k] = acc / nu
            out.append((nu, q))
    return ExpPoly(tuple(out))


# ----------------------------------------------------------------------
# Exact integration
# ----------------------------------------------------------------------


def _series_ascending(k: int, nu: float, length: float) -> float:
    # sum_m nu^m L^(k+m+1) / (m! (k+m+1)); all contributions positive.
    total = 0.0
    numer = length ** (k + 1)
    m = 0
    hump = nu * length
    while True:
        contrib = numer / (k + m + 1)
        total += contrib
        if contrib <= total * _SERIES_CUTOFF and m > hump:
            return total
        m += 1
        numer *= nu * length / m
        if m > _SERIES_MAX_TERMS:  # pragma: no cover - defensive
            raise RuntimeError("integral series failed to converge")


def _series_gamma(k: int, nu: float, length: float) -> float:
    # nu < 0. Lower-incomplete-gamma form: every partial product is
    # positive, so no cancellation regardless of k or |nu|.
    x = -nu * length
    total = 0.0
    term = 1.0 / (k + 1)
    n = 0
    while True:
        total += term
        if term <= total * _SERIES_CUTOFF and n > x - k:
            break
        n += 1
        term *= x / (k + 1 + n)
        if n > _SERIES_MAX_TERMS:  # pragma: no cover - defensive
            raise RuntimeError("integral series failed to converge")
    return math.exp(nu * length) * length ** (k + 1) * total


def _from_zero(k: int, nu: float, length: float) -> float:
    """Integral of ``r**k * exp(nu*r)`` over ``[0, length]``, length >= 0."""
    if length == 0.0:
        return 0.0
    if nu == 0.0:
        return length ** (k + 1) / (k + 1)
    if nu > 0.0:
        return _series_ascending(k, nu, length)
    return _series_gamma(k, nu, length)


@lru_cache(maxsize=65536)
def _power_exp_integral(k: int, nu: float, a: float, b: float) -> float:
    """Integral of ``t**k * exp(nu*t)`` over ``[a, b]``.

    Split at zero so each piece reduces to an origin-based integral of
    a single power, avoiding the binomial cancellation a direct shift
    would introduce.
    """
    sign = -1.0 if k % 2 else 1.0
    if a >= 0.0:
        return _from_zero(k, nu, b) - _from_zero(k, nu, a)
    if b <= 0.0:
        return sign * (_from_zero(k, -nu, -a) - _from_zero(k, -nu, -b))
    return sign * _from_zero(k, -nu, -a) + _from_zero(k, nu, b)


def l2_inner(f: ExpPoly, g: ExpPoly, interval: Interval) -> float:
    """Exact value of the pairing ``integral_a^b f*g dt``."""
    total = 0.0
    for r1, c1 in f.terms:
        for r2, c2 in g.terms:
            nu = r1 + r2
            conv = _conv(c1, c2)
            for k, c in enumerate(conv):
                if c != 0.0:
                    total += c * _power_exp_integral(k, nu, interval.a, interval.b)
    return total


def graph_inner(f: ExpPoly, g: ExpPoly, interval: Interval) -> float:
    """H1 pairing: ``l2_inner(f, g) + l2_inner(f', g')``."""
    return l2_inner(f, g, interval) + l2_inner(
        differentiate(f), differentiate(g), interval
    )


def l2_norm(f: ExpPoly, interval: Interval) -> float:
    return math.sqrt(max(l2_inner(f, f, interval), 0.0))


def graph_norm(f: ExpPoly, interval: Interval) -> float:
    return math.sqrt(max(graph_inner(f, f, interval), 0.0))


def prune(f: ExpPoly, interval: Interval, rel_tol: float = 1e-13) -> ExpPoly:
    """Drop coefficients that are negligible relative to the largest.

    Coefficients are compared on the scale ``|c| * B**k`` with
    ``B = max(1, |a|, |b|)`` so that high powers are weighted by their
    actual reach on the interval.
    """
    base = max(1.0, abs(interval.a), abs(interval.b))
    scale = 0.0
    for _, coeffs in f.terms:
        for k, c in enumerate(coeffs):
            scale = max(scale, abs(c) * base**k)
    if scale == 0.0:
        return ExpPoly.zero()
    cut = rel_tol * scale
    kept = []
    for rate, coeffs in f.terms:
        new = [c if abs(c) * base**k > cut else 0.0 for k, c in enumerate(coeffs)]
        kept.append((rate, new))
    return ExpPoly(tuple(kept))
