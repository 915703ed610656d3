"""Oracle-vs-closed-form verification shared by the CLI and the test suite."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import analytic, fock
from .analytic import QubitState
from .eigen import CoefficientProfile


def random_inputs(count: int, seed: int) -> list[QubitState]:
    """Reproducible random qubits using numpy's PCG64 bit generator.

    Each draw takes ``|alpha|^2`` uniform on [0, 1) and then a relative
    phase uniform on [0, 2 pi). The same seed gives the same inputs on
    every platform.
    """
    rng = np.random.Generator(np.random.PCG64(seed))
    out = []
    for _ in range(count):
        x = float(rng.random())
        phase = float(rng.random()) * 2 * math.pi
        out.append(QubitState.from_population(x, phase))
    return out


@dataclass
class Check:
    name: str
    max_deviation: float = 0.0

    def update(self, deviation: float) -> None:
        self.max_deviation = max(self.max_deviation, float(deviation))


@dataclass
class VerificationReport:
    n: int
    profile_kind: str
    trials: int
    tol: float
    checks: dict[str, Check] = field(default_factory=dict)

    def check(self, name: str) -> Check:
        return self.checks.setdefault(name, Check(name))

    @property
    def passed(self) -> bool:
        return all(c.max_deviation <= self.tol for c in self.checks.values())


CHECK_NAMES = (
    "probabilities",
    "conditional_fidelity",
    "expected_fidelity_sq",
    "completeness",
    "norm",
)


def verify_profile(
    profile: CoefficientProfile,
    inputs: list[QubitState],
    tol: float,
    profile_kind: str = "custom",
) -> VerificationReport:
    """Simulate every input with the oracle and compare against the closed forms.

    Each check keeps its largest deviation over all inputs. The checks are
    per-k probabilities, ``1 - fidelity_sq`` of each corrected conditional
    against the ideal state, expected squared fidelity, total probability,
    and drift of the evolved norm.
    """
    n = profile.n
    report = VerificationReport(n, profile_kind, len(inputs), tol)
    for name in CHECK_NAMES:
        report.check(name)

    for psi in inputs:
        state = fock.inject_input(psi, fock.build_ancilla(profile))
        evolved = fock.apply_mode_unitary(state, fock.dft_matrix(n + 1), range(n + 1))
        report.check("norm").update(abs(evolved.norm_sq() - 1.0))

        records = fock.simulate_protocol(psi, profile)
        oracle_pk = fock.per_k_probabilities(records, n)
        for k, p in enumerate(oracle_pk):
            report.check("probabilities").update(
                abs(p - analytic.outcome_probability(psi, profile, k))
            )
        report.check("completeness").update(abs(math.fsum(oracle_pk) - 1.0))

        for rec in records:
            if rec.conditional is None:
                continue
            ideal = analytic.teleported_state(psi, profile, rec.k)
            report.check("conditional_fidelity").update(
                1.0 - analytic.fidelity_sq(ideal, rec.corrected())
            )

        report.check("expected_fidelity_sq").update(
            abs(fock.expected_fidelity_sq(records, psi) - analytic.success_probability(psi, profile))
        )
    return report
