"""Command-line front end.

Subcommands::

    klm-ancilla coefficients --n 3
    klm-ancilla lambda-table --n-max 20 --format csv
    klm-ancilla outcomes --n 2 --profile uniform --alpha-re 1 --beta-re 0
    klm-ancilla verify --n 4 --trials 20 --seed 42 --tol 1e-9

Exit status: 0 on success, 1 if verification fails, 2 on a usage error.
"""

from __future__ import annotations

import argparse
import logging
import math
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

from . import analytic, eigen, fock
from .analytic import QubitState
from .eigen import CoefficientProfile
from .report import FORMATS, Table, render
from .verify import random_inputs, verify_profile

log = logging.getLogger("klm_ancilla")

RENORMALIZE_WARN = 1e-9
PLUS_TOL = 1e-12


class UsageError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    command: str
    n: Optional[int] = None
    n_max: Optional[int] = None
    profile_kind: str = "optimal"
    profile_path: Optional[Path] = None
    input_state: Optional[QubitState] = None
    seed: int = 0
    tol: Optional[float] = None
    trials: int = 20
    format: str = "text"
    output_path: Optional[Path] = None

    @property
    def psi(self) -> QubitState:
        return self.input_state if self.input_state is not None else QubitState.plus()


def load_profile(path: Path) -> CoefficientProfile:
    """Read one real coefficient per line. Blank lines and ``#`` comments are ignored.

    The values are normalized on load. A warning is logged if the file
    was off from unit norm by more than 1e-9.
    """
    values = []
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        try:
            values.append(float(line))
        except ValueError:
            raise UsageError(f"{path}:{lineno}: not a number: {line!r}") from None
    if len(values) < 2:
        raise UsageError(f"{path}: need at least 2 coefficients (n >= 1), got {len(values)}")
    if not all(math.isfinite(v) for v in values):
        raise UsageError(f"{path}: coefficients must be finite")
    norm = math.sqrt(math.fsum(v * v for v in values))
    if norm == 0.0:
        raise UsageError(f"{path}: all coefficients are zero")
    if abs(norm - 1.0) > RENORMALIZE_WARN:
        log.warning("profile %s had norm %.17g; renormalized", path, norm)
    return CoefficientProfile.from_values(values)


def resolve_profile(config: RunConfig) -> CoefficientProfile:
    tol = eigen.DEFAULT_TOL if config.command == "verify" or config.tol is None else config.tol
    if config.profile_kind == "file":
        profile = load_profile(config.profile_path)
        if config.n is not None and config.n != profile.n:
            raise UsageError(f"--n {config.n} does not match profile file with n={profile.n}")
        return profile
    if config.n is None:
        raise UsageError("--n is required")
    if config.profile_kind == "uniform":
        return eigen.uniform_profile(config.n)
    return eigen.optimal_profile(config.n, tol)


def _is_plus(psi: QubitState) -> bool:
    return analytic.fidelity_sq(QubitState.plus(), psi) >= 1.0 - PLUS_TOL


def cmd_coefficients(config: RunConfig) -> Table:
    profile = resolve_profile(config)
    n = profile.n
    tol = config.tol or eigen.DEFAULT_TOL
    lam = eigen.largest_eigenpair(eigen.build_matrix_A(n), tol).value
    summary = {
        "n": n,
        "profile": config.profile_kind,
        "lambda_solved": lam,
        "lambda_closed": eigen.closed_form_lambda(n),
        "success_plus": analytic.success_probability(QubitState.plus(), profile),
    }
    rows = [{"i": i, "f": float(profile.f[i])} for i in range(n + 1)]
    return Table("coefficients", ["i", "f"], rows, summary)


def cmd_lambda_table(config: RunConfig) -> Table:
    if config.n_max is None or config.n_max < 1:
        raise UsageError("--n-max must be >= 1")
    tol = config.tol or eigen.DEFAULT_TOL
    columns = [
        "n", "lambda_solved", "lambda_closed", "mu_solved", "lambda_from_mu",
        "uniform_baseline", "gap_closed", "gap_mu", "advantage",
        "one_minus_lambda", "scaled_deficit",
    ]
    rows = []
    for n in range(1, config.n_max + 1):
        lam = eigen.largest_eigenpair(eigen.build_matrix_A(n), tol).value
        mu = eigen.largest_eigenpair(eigen.build_matrix_B(n), tol).value
        closed = eigen.closed_form_lambda(n)
        baseline = n / (n + 1)
        rows.append({
            "n": n,
            "lambda_solved": lam,
            "lambda_closed": closed,
            "mu_solved": mu,
            "lambda_from_mu": 0.5 + mu / 4,
            "uniform_baseline": baseline,
            "gap_closed": abs(lam - closed),
            "gap_mu": abs(lam - (0.5 + mu / 4)),
            "advantage": lam - baseline,
            "one_minus_lambda": 1.0 - lam,
            # tends to pi^2/4 as n grows
            "scaled_deficit": (n + 1) ** 2 * (1.0 - lam),
        })
    summary = {
        "n_max": config.n_max,
        "max_gap_closed": max(r["gap_closed"] for r in rows),
        "max_gap_mu": max(r["gap_mu"] for r in rows),
        "scaled_deficit_limit": math.pi**2 / 4,
    }
    return Table("lambda-table", columns, rows, summary)


def cmd_outcomes(config: RunConfig) -> Table:
    profile = resolve_profile(config)
    psi = config.psi
    table = analytic.full_outcome_table(psi, profile)
    columns = [
        "k", "probability", "fidelity_sq", "cumulative_success",
        "out_alpha_re", "out_alpha_im", "out_beta_re", "out_beta_im",
    ]
    rows, running = [], []
    for rep in table:
        if rep.heralded:
            running.append(rep.probability * rep.fidelity_sq)
        row = {"k": rep.k, "probability": rep.probability, "fidelity_sq": rep.fidelity_sq,
               "cumulative_success": math.fsum(running)}
        if rep.state is not None:
            row.update(out_alpha_re=rep.state.alpha.real, out_alpha_im=rep.state.alpha.imag,
                       out_beta_re=rep.state.beta.real, out_beta_im=rep.state.beta.imag)
        rows.append(row)

    success = analytic.success_probability(psi, profile)
    summary = {
        "n": profile.n,
        "profile": config.profile_kind,
        "alpha_re": psi.alpha.real, "alpha_im": psi.alpha.imag,
        "beta_re": psi.beta.real, "beta_im": psi.beta.imag,
        "total_probability": math.fsum(r.probability for r in table),
        "success_probability": success,
    }
    notes = []
    if config.profile_kind == "optimal":
        lam = eigen.largest_eigenpair(eigen.build_matrix_A(profile.n)).value
        summary["lambda_n"] = lam
        summary["success_minus_lambda"] = success - lam
        if _is_plus(psi):
            notes.append(f"# |+> input with optimal profile: success equals lambda_n "
                         f"(difference {success - lam:.3g})")
        else:
            notes.append("# optimal profile: success is bounded below by lambda_n")
    return Table("outcomes", columns, rows, summary, notes)


def cmd_verify(config: RunConfig) -> tuple[Table, bool]:
    profile = resolve_profile(config)
    cap = fock.oracle_cap()
    if profile.n > cap:
        raise UsageError(
            f"n={profile.n} exceeds the oracle capacity {cap}; "
            f"set {fock.ORACLE_CAP_ENV} to raise it"
        )
    tol = config.tol if config.tol is not None else 1e-9
    report = verify_profile(profile, random_inputs(config.trials, config.seed), tol,
                            config.profile_kind)
    rows = [
        {"check": c.name, "max_deviation": c.max_deviation, "tol": tol,
         "status": "PASS" if c.max_deviation <= tol else "FAIL"}
        for c in report.checks.values()
    ]
    summary = {
        "n": profile.n, "profile": config.profile_kind, "trials": config.trials,
        "seed": config.seed, "result": "PASS" if report.passed else "FAIL",
    }
    return Table("verify", ["check", "max_deviation", "tol", "status"], rows, summary), report.passed


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--n", type=int, help="ancilla size (2n ancilla modes)")
    common.add_argument("--profile", default="optimal",
                        help="optimal | uniform | file:PATH (default: optimal)")
    for name in ("alpha-re", "alpha-im", "beta-re", "beta-im"):
        common.add_argument(f"--{name}", type=float, default=None)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--tol", type=float, default=None,
                        help="eigensolver tolerance; for verify, the pass threshold")
    common.add_argument("--trials", type=int, default=20)
    common.add_argument("--format", choices=FORMATS, default="text")
    common.add_argument("--output", type=Path, default=None)

    parser = argparse.ArgumentParser(
        prog="klm-ancilla",
        description="Optimal ancilla coefficients and success-probability bounds "
                    "for high-fidelity KLM teleportation.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("coefficients", parents=[common], help="optimal coefficients f(0..n)")
    lt = sub.add_parser("lambda-table", parents=[common], help="lambda_n for n = 1..n_max")
    lt.add_argument("--n-max", type=int, default=None)
    sub.add_parser("outcomes", parents=[common], help="per-outcome probabilities and fidelities")
    sub.add_parser("verify", parents=[common], help="check the Fock-space oracle against closed forms")
    return parser


def _parse_state(args) -> Optional[QubitState]:
    parts = (args.alpha_re, args.alpha_im, args.beta_re, args.beta_im)
    if all(p is None for p in parts):
        return None
    ar, ai, br, bi = (0.0 if p is None else p for p in parts)
    if not all(math.isfinite(p) for p in (ar, ai, br, bi)):
        raise UsageError("input amplitudes must be finite")
    alpha, beta = complex(ar, ai), complex(br, bi)
    norm = math.hypot(abs(alpha), abs(beta))
    if norm == 0.0:
        raise UsageError("input state is the zero vector")
    if abs(norm - 1.0) > RENORMALIZE_WARN:
        log.warning("input state had norm %.17g; renormalized", norm)
    return QubitState.normalized(alpha, beta)


def config_from_args(args) -> RunConfig:
    kind, path = args.profile, None
    if kind.startswith("file:"):
        kind, path = "file", Path(args.profile[len("file:"):])
        if not path.is_file():
            raise UsageError(f"profile file not found: {path}")
    elif kind not in ("optimal", "uniform"):
        raise UsageError(f"--profile must be optimal, uniform or file:PATH, got {kind!r}")
    if args.n is not None and args.n < 1:
        raise UsageError("--n must be >= 1")
    if args.n is not None and args.n > eigen.MAX_N:
        raise UsageError(f"--n must be <= {eigen.MAX_N}")
    if args.tol is not None and not args.tol > 0:
        raise UsageError("--tol must be positive")
    if args.trials < 1:
        raise UsageError("--trials must be >= 1")
    if args.seed < 0:
        raise UsageError("--seed must be non-negative")
    n_max = getattr(args, "n_max", None)
    if args.command == "lambda-table" and (n_max is None or n_max < 1 or n_max > eigen.MAX_N):
        raise UsageError(f"--n-max must be in 1..{eigen.MAX_N}")
    return RunConfig(
        command=args.command, n=args.n, n_max=n_max, profile_kind=kind,
        profile_path=path, input_state=_parse_state(args), seed=args.seed,
        tol=args.tol, trials=args.trials, format=args.format, output_path=args.output,
    )


def run(config: RunConfig) -> tuple[str, int]:
    """Execute ``config``; return the rendered output and the exit status."""
    status = 0
    if config.command == "coefficients":
        table = cmd_coefficients(config)
    elif config.command == "lambda-table":
        table = cmd_lambda_table(config)
    elif config.command == "outcomes":
        table = cmd_outcomes(config)
    elif config.command == "verify":
        table, ok = cmd_verify(config)
        status = 0 if ok else 1
    else:
        raise UsageError(f"unknown command {config.command!r}")
    return render(table, config.format), status


def main(argv: Optional[Sequence[str]] = None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s: %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        config = config_from_args(args)
        text, status = run(config)
    except (UsageError, fock.OracleCapacityError) as exc:
        parser.print_usage(sys.stderr)
        print(f"{parser.prog}: error: {exc}", file=sys.stderr)
        return 2
    if config.output_path is not None:
        with open(config.output_path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return status


if __name__ == "__main__":
    sys.exit(main())
