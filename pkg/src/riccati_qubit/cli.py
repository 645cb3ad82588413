"""Command-line front end.

Exit codes: 0 success, 1 configuration error, 2 model precondition failure
(e.g. a non-commuting environment), 3 numerical verification failure.
Data goes to stdout or to the configured files; diagnostics go to stderr.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .config import ConfigError, RunConfig, load
from .dynamics import (
    QubitState,
    correlated_dynamics,
    reduced_dynamics,
    rotating_frame_map,
)
from .exceptions import ModelPreconditionError, VerificationError
from .hamiltonians import build_hqe
from .linalg import dagger, expm_oracle, fro, partial_trace_env
from .riccati import riccati_spectrum, solve_commuting
from .verification import SUITES, run_suite, sample_times

OUTPUT_DIR_ENV = "RICCATI_QUBIT_OUTPUT_DIR"

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_MODEL = 2
EXIT_NUMERIC = 3

RECORD_FIELDS = (
    "t", "frame", "blochX", "blochY", "blochZ",
    "coherenceAbs", "coherenceRe", "coherenceIm", "purity", "traceError",
)
SPECTRUM_FIELDS = ("n", "E_n", "V_n", "x_n", "xbar_n", "h_plus", "h_minus")

BASE_TOLERANCES = {
    "bloch_norm": 1e-9,
    "purity": 1e-9,
    "trace": 1e-10,
    "oracle_reduced_state": 1e-8,
}


def _fmt(value) -> str:
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def record(t: float, frame: str, state: QubitState) -> dict:
    x, y, z = state.bloch
    c = state.coherence
    return {
        "t": float(t),
        "frame": frame,
        "blochX": float(x),
        "blochY": float(y),
        "blochZ": float(z),
        "coherenceAbs": abs(c),
        "coherenceRe": c.real,
        "coherenceIm": c.imag,
        "purity": state.purity,
        "traceError": state.trace_error,
    }


def render_csv(rows: list[dict], fields, meta: dict) -> str:
    buf = io.StringIO()
    for key, value in meta.items():
        buf.write(f"# {key}: {json.dumps(value, sort_keys=True)}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(fields)
    for row in rows:
        writer.writerow([_fmt(row[f]) for f in fields])
    return buf.getvalue()


def render_jsonl(rows: list[dict], fields, meta: dict) -> str:
    lines = [json.dumps({"meta": meta}, sort_keys=True)]
    lines += [json.dumps({f: row[f] for f in fields}) for row in rows]
    return "\n".join(lines) + "\n"


def _output_path(path: str) -> Path:
    override = os.environ.get(OUTPUT_DIR_ENV)
    p = Path(path)
    if override and not p.is_absolute():
        p = Path(override) / p
    return p


def _emit(cfg: RunConfig, rows, fields, meta, stdout) -> None:
    if not cfg.outputs:
        stdout.write(render_csv(rows, fields, meta))
        return
    for spec in cfg.outputs:
        text = (render_csv if spec.format == "csv" else render_jsonl)(rows, fields, meta)
        target = _output_path(spec.path)
        target.parent.mkdir(parents=True, exist_ok=True)
        target.write_text(text)


def _metadata(cfg: RunConfig, command: str, tolerances: dict) -> dict:
    return {
        "command": command,
        "configSha256": cfg.digest(),
        "libraryVersion": __version__,
        "tolerances": tolerances,
    }


def _setup(cfg: RunConfig):
    env = cfg.build_environment()
    joint = cfg.joint_state(env)
    if not env.commuting:
        raise ModelPreconditionError(
            f"environment pair does not commute (||[H_E, V]||_F = {env.commutator_residual:.3e}); "
            "the closed-form solver needs [H_E, V] = 0"
        )
    return env, joint


def simulate(cfg: RunConfig, scale: float = 1.0, stdout=None) -> None:
    stdout = stdout or sys.stdout
    tol = {k: v * scale for k, v in BASE_TOLERANCES.items()}
    env, joint = _setup(cfg)
    params = cfg.params()
    rot = params.rotating()
    sol = solve_commuting(env, rot, cfg.branch)
    times = cfg.time_grid.values()
    rows = []
    for t in times:
        state = correlated_dynamics(joint.gamma, joint.rho_qs, joint.rho_es, sol, rot, t)
        if params.omega != 0.0:
            rows.append(record(t, "rotating", state))
            rows.append(record(t, "lab", rotating_frame_map(state.rho, params, t)))
        else:
            rows.append(record(t, "lab", state))
    for row in rows:
        r2 = row["blochX"] ** 2 + row["blochY"] ** 2 + row["blochZ"] ** 2
        if r2 > 1 + tol["bloch_norm"]:
            raise VerificationError(f"Bloch vector norm^2 {r2!r} > 1 at t={row['t']}")
        if not 0.5 - tol["purity"] <= row["purity"] <= 1 + tol["purity"]:
            raise VerificationError(f"purity {row['purity']!r} out of range at t={row['t']}")
        if row["traceError"] > tol["trace"]:
            raise VerificationError(f"trace error {row['traceError']:.3e} at t={row['t']}")
    if env.dim <= 64:
        # full-space cross-check at the last grid time
        t = float(times[-1])
        u = expm_oracle(-1j * build_hqe(rot, env).flatten() * t)
        ref = partial_trace_env(u @ joint.full @ dagger(u))
        got = reduced_dynamics(joint, sol, rot, t).rho
        fast = correlated_dynamics(joint.gamma, joint.rho_qs, joint.rho_es, sol, rot, t).rho
        err = max(fro(got - ref), fro(fast - ref))
        if err > tol["oracle_reduced_state"]:
            raise VerificationError(f"reduced state differs from the matrix-exponential oracle by {err:.3e}")
    _emit(cfg, rows, RECORD_FIELDS, _metadata(cfg, "simulate", tol), stdout)


def verify(cfg: RunConfig, suite: str, seed: int = 0, scale: float = 1.0, stdout=None) -> int:
    stdout = stdout or sys.stdout
    env = cfg.build_environment()
    joint = cfg.joint_state(env)
    params = cfg.params()
    rng = np.random.default_rng(seed)
    grid = cfg.time_grid.values()
    names = SUITES if suite == "all" else (suite,)
    checks, precondition_failed = [], False
    for name in names:
        times = grid if name == "frame" else sample_times(grid, rng)
        try:
            checks += run_suite(name, env, params, joint, times, rng, scale, cfg.branch)
        except ModelPreconditionError as exc:
            precondition_failed = True
            stdout.write(f"FAIL  {name}.precondition  {exc}\n")
            print(f"{name}: precondition failed: {exc}", file=sys.stderr)
    for c in checks:
        stdout.write(c.line() + "\n")
    failed = sum(not c.passed for c in checks)
    stdout.write(f"# {len(checks)} checks, {failed} failed, seed={seed}, tolerance-scale={scale!r}\n")
    if precondition_failed:
        return EXIT_MODEL
    return EXIT_NUMERIC if failed else EXIT_OK


def spectrum(cfg: RunConfig, output: str | None = None, stdout=None) -> None:
    stdout = stdout or sys.stdout
    env = cfg.build_environment()
    if not env.commuting:
        raise ModelPreconditionError(
            f"environment pair does not commute (||[H_E, V]||_F = {env.commutator_residual:.3e})"
        )
    params = cfg.params().rotating()
    sol = solve_commuting(env, params, "positive")
    hp, hm = riccati_spectrum(sol)
    x_bar = sol.x_bar if not sol.decoupled else np.full(sol.dim, -np.inf)
    rows = [
        {"n": n, "E_n": sol.e_he[n], "V_n": sol.e_v[n], "x_n": sol.x[n], "xbar_n": x_bar[n], "h_plus": hp[n], "h_minus": hm[n]}
        for n in range(sol.dim)
    ]
    text = render_csv(rows, SPECTRUM_FIELDS, _metadata(cfg, "spectrum", {}))
    if output:
        target = _output_path(output)
        target.parent.mkdir(parents=True, exist_ok=True)
        target.write_text(text)
    else:
        stdout.write(text)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--tolerance-scale", type=float, default=1.0, metavar="FACTOR",
                        help="multiply every acceptance tolerance by FACTOR (default 1)")
    common.add_argument("--seed", type=int, default=0, help="seed for randomized verification instances")

    parser = argparse.ArgumentParser(prog="riccati-qubit", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", parents=[common], help="reduced qubit dynamics on the time grid")
    p.add_argument("config")

    p = sub.add_parser("verify", parents=[common], help="run invariant suites")
    p.add_argument("config")
    p.add_argument("--suite", choices=SUITES + ("all",), default="all")

    p = sub.add_parser("spectrum", parents=[common], help="per-eigenvector Riccati data table")
    p.add_argument("config")
    p.add_argument("--output", "-o", help="write the table here instead of stdout")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.seed < 0 or args.seed >= 2**64:
        print("error: --seed must be an unsigned 64-bit integer", file=sys.stderr)
        return EXIT_CONFIG
    if not args.tolerance_scale > 0:
        print("error: --tolerance-scale must be positive", file=sys.stderr)
        return EXIT_CONFIG
    try:
        cfg = load(args.config)
        if args.command == "simulate":
            simulate(cfg, args.tolerance_scale)
            return EXIT_OK
        if args.command == "verify":
            return verify(cfg, args.suite, args.seed, args.tolerance_scale)
        spectrum(cfg, args.output)
        return EXIT_OK
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ModelPreconditionError as exc:
        print(f"model precondition failed: {exc}", file=sys.stderr)
        return EXIT_MODEL
    except VerificationError as exc:
        print(f"verification failed: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
