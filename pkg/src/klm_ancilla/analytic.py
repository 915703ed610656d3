"""Closed-form teleportation model for a given ancilla profile.

For input ``alpha|0> + beta|1>`` and coefficients ``f``, observing ``k``
photons in the measured modes happens with probability
``|alpha|^2 f(k)^2 + |beta|^2 f(k-1)^2`` and heralds the output qubit
``alpha f(k)|0> + beta f(k-1)|1>`` (normalized). ``k = 0`` and ``k = n+1``
are failures. The success probability is the expected squared fidelity
over the heralded outcomes.

Boundary convention: ``f(-1) = f(n+1) = 0``.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import Optional

from .eigen import CoefficientProfile

STATE_NORM_TOL = 1e-12


class FailureOutcomeError(ValueError):
    """Asked for the teleported state of a failed outcome (k = 0 or k = n+1)."""


class DegenerateOutcomeError(ValueError):
    """The outcome has zero probability, so there is no output state."""


@dataclass(frozen=True)
class QubitState:
    alpha: complex
    beta: complex

    def __post_init__(self):
        alpha, beta = complex(self.alpha), complex(self.beta)
        norm_sq = abs(alpha) ** 2 + abs(beta) ** 2
        if abs(norm_sq - 1.0) > STATE_NORM_TOL:
            raise ValueError(f"|alpha|^2 + |beta|^2 = {norm_sq!r}, expected 1")
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "beta", beta)

    @classmethod
    def normalized(cls, alpha: complex, beta: complex) -> QubitState:
        norm = math.hypot(abs(alpha), abs(beta))
        if norm == 0.0:
            raise ValueError("cannot normalize the zero vector")
        return cls(alpha / norm, beta / norm)

    @classmethod
    def plus(cls) -> QubitState:
        return cls(1 / math.sqrt(2), 1 / math.sqrt(2))

    @classmethod
    def from_population(cls, x: float, phase: float = 0.0) -> QubitState:
        """State with ``|alpha|^2 = x`` and relative phase ``phase`` on ``beta``."""
        if not 0.0 <= x <= 1.0:
            raise ValueError(f"population must lie in [0, 1], got {x}")
        return cls(math.sqrt(x), math.sqrt(1.0 - x) * cmath.exp(1j * phase))

    @property
    def p0(self) -> float:
        return abs(self.alpha) ** 2

    @property
    def p1(self) -> float:
        return abs(self.beta) ** 2


@dataclass(frozen=True)
class OutcomeReport:
    """One photon-count outcome ``k``.

    ``state`` and ``fidelity_sq`` are None for the failures k = 0 and
    k = n+1. They are also None for a heralding ``k`` whose probability is
    exactly zero, because no output state exists in that case.
    """

    k: int
    probability: float
    state: Optional[QubitState] = None
    fidelity_sq: Optional[float] = None

    @property
    def heralded(self) -> bool:
        return self.state is not None


def _check_k(profile: CoefficientProfile, k: int, lo: int, hi: int) -> None:
    if not lo <= k <= hi:
        raise ValueError(f"k={k} outside {lo}..{hi} for n={profile.n}")


def teleported_state(psi: QubitState, profile: CoefficientProfile, k: int) -> QubitState:
    """Output qubit heralded by ``k`` photons, for ``1 <= k <= n``."""
    if k == 0 or k == profile.n + 1:
        raise FailureOutcomeError(f"k={k} is a failure outcome for n={profile.n}")
    _check_k(profile, k, 1, profile.n)
    a = psi.alpha * profile.coefficient(k)
    b = psi.beta * profile.coefficient(k - 1)
    norm = math.hypot(abs(a), abs(b))
    if norm == 0.0:
        raise DegenerateOutcomeError(f"outcome k={k} has zero probability")
    return QubitState(a / norm, b / norm)


def outcome_probability(psi: QubitState, profile: CoefficientProfile, k: int) -> float:
    """Probability of observing ``k`` photons, ``0 <= k <= n+1``."""
    _check_k(profile, k, 0, profile.n + 1)
    return psi.p0 * profile.coefficient(k) ** 2 + psi.p1 * profile.coefficient(k - 1) ** 2


def fidelity_sq(psi: QubitState, out: QubitState) -> float:
    """Squared overlap ``|<psi|out>|^2``."""
    overlap = psi.alpha.conjugate() * out.alpha + psi.beta.conjugate() * out.beta
    return min(abs(overlap) ** 2, 1.0)


def success_probability(psi: QubitState, profile: CoefficientProfile) -> float:
    """Expected squared fidelity over heralded outcomes.

    Depends on ``psi`` only through ``|alpha|^2``; for |+> it reduces to
    ``sum_k (f(k) + f(k-1))^2 / 4``.
    """
    x = psi.p0 / (psi.p0 + psi.p1)
    return _curve(profile, x)


def _curve(profile: CoefficientProfile, x: float) -> float:
    f = profile.f
    return math.fsum((x * f[1:] + (1.0 - x) * f[:-1]) ** 2)


def success_probability_curve(profile: CoefficientProfile, x: float) -> float:
    """Success probability as a function of the input population ``x = |alpha|^2``.

    This is a quadratic in ``x`` whose leading coefficient is
    ``sum (f(k) - f(k-1))^2 >= 0``. For a palindromic profile it is
    symmetric about ``x = 1/2``, so its minimum is at ``x = 1/2``.
    """
    if not 0.0 <= x <= 1.0:
        raise ValueError(f"x must lie in [0, 1], got {x}")
    return _curve(profile, x)


def full_outcome_table(psi: QubitState, profile: CoefficientProfile) -> list[OutcomeReport]:
    """One :class:`OutcomeReport` for every ``k`` in ``0..n+1``."""
    n = profile.n
    rows = []
    for k in range(n + 2):
        p = outcome_probability(psi, profile, k)
        if 1 <= k <= n and p > 0.0:
            state = teleported_state(psi, profile, k)
            rows.append(OutcomeReport(k, p, state, fidelity_sq(psi, state)))
        else:
            rows.append(OutcomeReport(k, p))
    return rows


def table_success(rows: list[OutcomeReport]) -> float:
    """``sum p_k * fidelity_sq_k`` over the heralded rows of a table."""
    return math.fsum(r.probability * r.fidelity_sq for r in rows if r.heralded)
