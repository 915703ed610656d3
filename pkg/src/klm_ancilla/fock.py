"""Brute-force multimode Fock-space simulation of the teleportation protocol.

The oracle does not use the closed-form outcome formulas at any point. It
builds the ancilla as a superposition of occupation vectors and prepends
the input mode. It then applies the discrete Fourier transform to modes
``0..n`` with permanent-based transition amplitudes and enumerates
photon-counting patterns on those modes. Each heralded pattern leaves a
conditional qubit on the remaining modes.

Mode layout (single-rail, one photon = logical 1):

* mode 0: input qubit
* modes 1..n: first half of the ancilla, measured with the input
* modes n+1..2n: second half; ``k`` detected photons herald mode ``n+k``
"""

from __future__ import annotations

import cmath
import math
import os
from collections import defaultdict
from dataclasses import dataclass, field, replace
from functools import lru_cache
from typing import Iterator, Optional, Sequence

import numpy as np

from .analytic import QubitState, fidelity_sq, teleported_state
from .eigen import CoefficientProfile
from .permanent import ryser_permanent

PRUNE_THRESHOLD = 1e-14
NORM_AUDIT_TOL = 1e-10
UNITARY_TOL = 1e-12
DEGENERATE_AMPLITUDE = 1e-12
DEFAULT_ORACLE_CAP = 6
ORACLE_CAP_ENV = "KLM_ANCILLA_ORACLE_CAP"

Occupation = tuple[int, ...]


class ProtocolWiringError(RuntimeError):
    """A post-measurement state left the expected single-rail subspace."""


class OracleCapacityError(ValueError):
    """The requested ``n`` is larger than the oracle cap."""


def oracle_cap() -> int:
    """Largest ``n`` the oracle accepts. Override it with ``KLM_ANCILLA_ORACLE_CAP``.

    Cost grows roughly like ``C(2n+1, n+1) * 2^(n+1)`` permanent terms per
    run. The default of 6 finishes in seconds.
    """
    raw = os.environ.get(ORACLE_CAP_ENV)
    if raw is None or raw.strip() == "":
        return DEFAULT_ORACLE_CAP
    try:
        cap = int(raw)
    except ValueError:
        raise OracleCapacityError(f"{ORACLE_CAP_ENV}={raw!r} is not an integer") from None
    if cap < 1:
        raise OracleCapacityError(f"{ORACLE_CAP_ENV} must be >= 1, got {cap}")
    return cap


@dataclass(frozen=True)
class FockState:
    """Pure state: a map from occupation vectors to complex amplitudes."""

    modes: int
    terms: dict[Occupation, complex] = field(default_factory=dict)

    def __post_init__(self):
        if self.modes < 1:
            raise ValueError(f"mode count must be positive, got {self.modes}")
        clean = {}
        for occ, amp in self.terms.items():
            occ = tuple(int(c) for c in occ)
            if len(occ) != self.modes:
                raise ValueError(f"occupation {occ} does not have {self.modes} modes")
            if any(c < 0 for c in occ):
                raise ValueError(f"negative occupation in {occ}")
            clean[occ] = complex(amp)
        object.__setattr__(self, "terms", dict(sorted(clean.items())))

    def norm_sq(self) -> float:
        return math.fsum(abs(a) ** 2 for a in self.terms.values())

    def photon_numbers(self) -> set[int]:
        return {sum(occ) for occ in self.terms}


@dataclass(frozen=True, eq=False)
class ModeUnitary:
    """Unitary acting on creation operators: ``a_j^+ -> sum_i U[i, j] a_i^+``."""

    dim: int
    entries: np.ndarray

    def __post_init__(self):
        u = np.array(self.entries, dtype=complex)
        if u.shape != (self.dim, self.dim):
            raise ValueError(f"expected a {self.dim}x{self.dim} matrix, got {u.shape}")
        err = np.max(np.abs(u @ u.conj().T - np.eye(self.dim)))
        if err > UNITARY_TOL:
            raise ValueError(f"matrix is not unitary (deviation {err:.2e})")
        u.setflags(write=False)
        object.__setattr__(self, "entries", u)


@dataclass(frozen=True)
class MeasurementRecord:
    """Photon-count pattern on the measured modes, plus what it heralds.

    ``conditional`` is the output-mode qubit, present iff ``1 <= k <= n``.
    ``correction_phase`` is the phase ``phi`` removed by applying
    ``|1> -> exp(-i phi)|1>``.
    """

    pattern: Occupation
    k: int
    probability: float
    conditional: Optional[QubitState] = None
    correction_phase: Optional[float] = None
    output_mode: Optional[int] = None

    def corrected(self) -> QubitState:
        if self.conditional is None:
            raise ValueError(f"pattern {self.pattern} heralds no output qubit")
        phi = self.correction_phase or 0.0
        c = self.conditional
        return QubitState(c.alpha, c.beta * cmath.exp(-1j * phi))


def compositions(total: int, parts: int) -> Iterator[Occupation]:
    """All occupation vectors of ``parts`` modes holding ``total`` photons, lexicographic."""
    if parts == 1:
        yield (total,)
        return
    for first in range(total + 1):
        for rest in compositions(total - first, parts - 1):
            yield (first,) + rest


def build_ancilla(profile: CoefficientProfile) -> FockState:
    """``sum_i f(i) |0^(n-i) 1^i 0^i 1^(n-i)>`` over 2n modes."""
    n = profile.n
    terms = {}
    for i in range(n + 1):
        occ = (0,) * (n - i) + (1,) * i + (0,) * i + (1,) * (n - i)
        terms[occ] = complex(profile.f[i])
    return FockState(2 * n, terms)


def inject_input(psi: QubitState, ancilla: FockState) -> FockState:
    """Prepend the input as mode 0: ``(alpha|0> + beta|1>) (x) ancilla``."""
    terms = {}
    for photons, amp in ((0, psi.alpha), (1, psi.beta)):
        if amp == 0:
            continue
        for occ, a in ancilla.terms.items():
            terms[(photons,) + occ] = amp * a
    return FockState(ancilla.modes + 1, terms)


def dft_matrix(m: int) -> ModeUnitary:
    """``U[j, l] = exp(2 pi i j l / m) / sqrt(m)``."""
    if m < 1:
        raise ValueError(f"DFT size must be positive, got {m}")
    jl = np.outer(np.arange(m), np.arange(m)) % m
    return ModeUnitary(m, np.exp(2j * np.pi * jl / m) / math.sqrt(m))


@lru_cache(maxsize=4096)
def _transitions(u_bytes: bytes, dim: int, s: Occupation) -> tuple[tuple[Occupation, complex], ...]:
    u = np.frombuffer(u_bytes, dtype=complex).reshape(dim, dim)
    cols = [j for j, c in enumerate(s) for _ in range(c)]
    s_fact = math.prod(math.factorial(c) for c in s)
    out = []
    for t in compositions(sum(s), dim):
        rows = [i for i, c in enumerate(t) for _ in range(c)]
        norm = math.sqrt(s_fact * math.prod(math.factorial(c) for c in t))
        out.append((t, ryser_permanent(u[np.ix_(rows, cols)]) / norm))
    return tuple(out)


def transition_amplitudes(u: ModeUnitary, s: Sequence[int]) -> dict[Occupation, complex]:
    """``<t|U|s>`` for every output pattern ``t`` with the same photon number.

    ``<t|U|s> = Per(U[t, s]) / sqrt(prod s_j! prod t_i!)``. Here ``U[t, s]``
    repeats column ``j`` ``s_j`` times and row ``i`` ``t_i`` times.
    """
    s = tuple(int(c) for c in s)
    if len(s) != u.dim:
        raise ValueError(f"pattern length {len(s)} != unitary size {u.dim}")
    if sum(s) == 0:
        return {s: 1.0 + 0j}
    return dict(_transitions(u.entries.tobytes(), u.dim, s))


def apply_mode_unitary(state: FockState, u: ModeUnitary, target_modes: Sequence[int]) -> FockState:
    """Evolve ``state`` by ``u`` acting on ``target_modes``; other modes are spectators.

    Amplitudes below ``PRUNE_THRESHOLD`` are dropped. The norm is audited
    afterwards.

    Raises:
        ValueError: for repeated, out-of-range or wrongly sized targets.
        ProtocolWiringError: if the norm drifts by more than ``NORM_AUDIT_TOL``.
    """
    targets = [int(j) for j in target_modes]
    if len(set(targets)) != len(targets):
        raise ValueError(f"target modes overlap: {targets}")
    if any(j < 0 or j >= state.modes for j in targets):
        raise ValueError(f"target modes {targets} out of range for {state.modes} modes")
    if len(targets) != u.dim:
        raise ValueError(f"{len(targets)} target modes for a {u.dim}-mode unitary")

    acc: dict[Occupation, list[complex]] = defaultdict(list)
    for occ, amp in state.terms.items():
        s = tuple(occ[j] for j in targets)
        for t, tamp in transition_amplitudes(u, s).items():
            new = list(occ)
            for j, c in zip(targets, t):
                new[j] = c
            acc[tuple(new)].append(amp * tamp)

    terms = {}
    for occ, parts in acc.items():
        a = complex(math.fsum(p.real for p in parts), math.fsum(p.imag for p in parts))
        if abs(a) >= PRUNE_THRESHOLD:
            terms[occ] = a
    out = FockState(state.modes, terms)
    drift = abs(out.norm_sq() - state.norm_sq())
    if drift > NORM_AUDIT_TOL:
        raise ProtocolWiringError(f"norm drifted by {drift:.2e} under the mode unitary")
    return out


def _extract_qubit(items: list[tuple[Occupation, complex]], pos: int, prob: float) -> QubitState:
    spectators = {rest[:pos] + rest[pos + 1:] for rest, _ in items}
    if len(spectators) != 1:
        raise ProtocolWiringError(
            f"spectator modes are not in a definite configuration: {sorted(spectators)}"
        )
    amps = [0j, 0j]
    for rest, amp in items:
        c = rest[pos]
        if c > 1:
            raise ProtocolWiringError(f"output mode holds {c} photons")
        amps[c] += amp
    norm = math.sqrt(prob)
    return QubitState.normalized(amps[0] / norm, amps[1] / norm)


def measure_modes(state: FockState, measured_modes: Sequence[int]) -> list[MeasurementRecord]:
    """Photon-count the measured modes; one record per pattern with nonzero probability.

    Records come in lexicographic order of the pattern. If ``k`` photons
    are seen and ``1 <= k <= (number of unmeasured modes)``, the heralded
    qubit sits on the k-th unmeasured mode, counting in ascending order.
    All other unmeasured modes must be in a definite occupation.
    """
    measured = [int(j) for j in measured_modes]
    if len(set(measured)) != len(measured) or any(
        j < 0 or j >= state.modes for j in measured
    ):
        raise ValueError(f"invalid measured modes {measured}")
    measured_set = set(measured)
    unmeasured = [j for j in range(state.modes) if j not in measured_set]

    groups: dict[Occupation, list[tuple[Occupation, complex]]] = defaultdict(list)
    for occ, amp in state.terms.items():
        pattern = tuple(occ[j] for j in measured)
        groups[pattern].append((tuple(occ[j] for j in unmeasured), amp))

    records = []
    for pattern in sorted(groups):
        items = groups[pattern]
        prob = math.fsum(abs(a) ** 2 for _, a in items)
        if prob == 0.0:
            continue
        k = sum(pattern)
        if 1 <= k <= len(unmeasured):
            records.append(MeasurementRecord(
                pattern, k, prob,
                conditional=_extract_qubit(items, k - 1, prob),
                output_mode=unmeasured[k - 1],
            ))
        else:
            records.append(MeasurementRecord(pattern, k, prob))
    return records


def _wrap(phi: float) -> float:
    return phi % (2 * math.pi)


def correction_phase(record: MeasurementRecord, profile: CoefficientProfile, psi: QubitState) -> float:
    """Relative phase ``phi`` such that ``|1> -> e^{-i phi}|1>`` maps the
    conditional qubit onto the ideal heralded state, up to a global phase.

    Returns 0 when either amplitude vanishes, because the phase is then
    undefined. The result lies in ``[0, 2 pi)``.
    """
    if record.conditional is None or not 1 <= record.k <= profile.n:
        raise ValueError(f"pattern {record.pattern} heralds no output qubit")
    target = teleported_state(psi, profile, record.k)
    c = record.conditional
    if min(abs(c.alpha), abs(c.beta), abs(target.alpha), abs(target.beta)) < DEGENERATE_AMPLITUDE:
        return 0.0
    return _wrap(cmath.phase(c.beta / c.alpha) - cmath.phase(target.beta / target.alpha))


def _run(psi: QubitState, profile: CoefficientProfile) -> list[MeasurementRecord]:
    n = profile.n
    state = inject_input(psi, build_ancilla(profile))
    evolved = apply_mode_unitary(state, dft_matrix(n + 1), range(n + 1))
    return measure_modes(evolved, range(n + 1))


@lru_cache(maxsize=64)
def _calibration(f_key: tuple[float, ...]) -> dict[Occupation, float]:
    profile = CoefficientProfile(len(f_key) - 1, np.array(f_key))
    reference = QubitState.plus()
    table = {}
    for rec in _run(reference, profile):
        if rec.conditional is None:
            continue
        c = rec.conditional
        if min(abs(c.alpha), abs(c.beta)) >= DEGENERATE_AMPLITUDE:
            table[rec.pattern] = correction_phase(rec, profile, reference)
    return table


def calibrate_corrections(profile: CoefficientProfile) -> dict[Occupation, float]:
    """Correction phase for each heralding pattern, measured once with |+> as the probe.

    Corrections depend only on the detected pattern. They are therefore
    fixed before any unknown input is teleported.
    """
    return dict(_calibration(tuple(float(x) for x in profile.f)))


def _check_capacity(n: int) -> None:
    cap = oracle_cap()
    if n > cap:
        raise OracleCapacityError(
            f"n={n} exceeds the oracle cap of {cap} (set {ORACLE_CAP_ENV} to raise it)"
        )


def simulate_protocol(psi: QubitState, profile: CoefficientProfile) -> list[MeasurementRecord]:
    """Run the full protocol and return every outcome with its correction attached.

    Heralded records use the pattern's calibrated phase. If the probe left
    a pattern degenerate, the phase is derived from ``psi`` instead.
    """
    _check_capacity(profile.n)
    phases = calibrate_corrections(profile)
    out = []
    for rec in _run(psi, profile):
        if rec.conditional is not None:
            phi = phases.get(rec.pattern)
            if phi is None:
                phi = correction_phase(rec, profile, psi)
            rec = replace(rec, correction_phase=phi)
        out.append(rec)
    return out


def per_k_probabilities(records: Sequence[MeasurementRecord], n: int) -> list[float]:
    """Aggregate pattern probabilities by total photon count ``k = 0..n+1``."""
    buckets: list[list[float]] = [[] for _ in range(n + 2)]
    for rec in records:
        buckets[rec.k].append(rec.probability)
    return [math.fsum(b) for b in buckets]


def expected_fidelity_sq(records: Sequence[MeasurementRecord], psi: QubitState) -> float:
    """``sum p * |<psi|corrected>|^2`` over the heralded records."""
    return math.fsum(
        rec.probability * fidelity_sq(psi, rec.corrected())
        for rec in records
        if rec.conditional is not None
    )
