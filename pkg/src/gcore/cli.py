"""Command-line front end.

Exit status: 0 when a run is clean (or a command succeeds), 2 when the check
subset detects eavesdropping, 1 on usage errors, unwritable outputs, or a
failed verify-paper item.
"""
from __future__ import annotations

import argparse
import concurrent.futures
import json
import math
import sys
from typing import Any, Sequence

import numpy as np

from . import __version__
from .analytics import atomic_write, build_report, emit_report, metric, verify_paper, MONTE_CARLO
from .attacks import INTERCEPT_RESEND, AttackConfig, intercept_resend
from .cloner import cloner_curve, curve_csv
from .errors import GCOREError
from .permutation import ControlKey, block_digits, family_permutations
from .protocol import EAVESDROPPED, SessionConfig, run_session
from .states import check_family

EXIT_CLEAN = 0
EXIT_USAGE = 1
EXIT_DETECTED = 2

EPILOG = "exit status: 0 clean/success, 2 eavesdropping detected, 1 usage error or failed check"

# option name -> (type, built-in default); flags override --config, which overrides these
SESSION_OPTIONS: dict[str, tuple[type, Any]] = {
    "particles": (int, 3),
    "dim": (int, 2),
    "units": (int, 100),
    "key": (str, None),
    "check_fraction": (float, 0.25),
    "seed": (int, 0),
    "group_size": (int, 1),
    "adversary": (str, None),
    "guess": (str, "random"),
    "eve_key": (str, None),
    "offsets": (str, None),
}
ATTACK_OPTIONS = {"trials": (int, 1), "threads": (int, 1)}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _add_session_flags(p: argparse.ArgumentParser, attack: bool = False) -> None:
    p.add_argument("--particles", "-N", type=int, help="particles per entangled state (default 3)")
    p.add_argument("--dim", "-d", type=int, help="qudit dimension (default 2)")
    p.add_argument("--units", type=int, help="carrier units of d**N states (default 100)")
    p.add_argument("--key", help="control key as base-d digits, length a multiple of N (default: N zeros)")
    p.add_argument("--check-fraction", type=float, help="fraction of labels disclosed for checking (default 0.25)")
    p.add_argument("--seed", type=int, help="RNG seed (default 0)")
    p.add_argument("--group-size", type=int, help="consecutive units sharing one key block (default 1)")
    p.add_argument("--adversary", choices=[INTERCEPT_RESEND, "none"] if not attack else [INTERCEPT_RESEND],
                   help="eavesdropper model")
    p.add_argument("--guess", choices=["random", "fixed"], help="Eve's rearrangement guess (default random)")
    p.add_argument("--eve-key", help="Eve's own control key for --guess fixed")
    p.add_argument("--offsets", help="comma-separated per-lane source offsets, e.g. 1,2,3")
    p.add_argument("--config", help="JSON or TOML file with default option values")
    p.add_argument("--out", default="-", help="report path, '-' for standard output")
    p.add_argument("--transcript", help="also write the full session transcript(s) here")
    if attack:
        p.add_argument("--trials", type=int, help="independent sessions (default 1)")
        p.add_argument("--threads", type=int, help="worker threads for trials (default 1)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="gcore", description="Controlled order rearrangement QKD simulator", epilog=EPILOG)
    parser.add_argument("--version", action="version", version=f"gcore {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("run", help="simulate one session", epilog=EPILOG)
    _add_session_flags(p)

    p = sub.add_parser("attack", help="intercept-resend session(s) with oracle comparison", epilog=EPILOG)
    _add_session_flags(p, attack=True)

    p = sub.add_parser("cloner-curve", help="fidelity / information table as CSV", epilog=EPILOG)
    p.add_argument("--grid-points", type=int, default=201)
    p.add_argument("--dim", "-d", type=int, default=3, choices=[2, 3])
    p.add_argument("--out", default="-")

    p = sub.add_parser("verify-paper", help="recompute published figures, PASS/FAIL per item", epilog=EPILOG)
    p.add_argument("--out", help="also write the ledger as JSON")

    p = sub.add_parser("tables", help="list every rearrangement E_k of a family", epilog=EPILOG)
    p.add_argument("--dim", "-d", type=int, default=2)
    p.add_argument("--particles", "-N", type=int, default=3)
    p.add_argument("--out", default="-")
    return parser


def load_config(path: str) -> dict:
    try:
        with open(path, "rb") as fh:
            raw = fh.read()
    except OSError as exc:
        raise UsageError(f"--config: cannot read {path}: {exc.strerror}") from None
    try:
        if path.endswith(".toml"):
            try:
                import tomllib
            except ModuleNotFoundError:
                import tomli as tomllib
            data = tomllib.loads(raw.decode("utf-8"))
        else:
            data = json.loads(raw)
    except (ValueError, UnicodeDecodeError) as exc:
        raise UsageError(f"--config: {path} is not valid: {exc}") from None
    if not isinstance(data, dict):
        raise UsageError(f"--config: {path} must hold a table of options")
    return {str(k).replace("-", "_"): v for k, v in data.items()}


def resolve_options(args: argparse.Namespace, table: dict[str, tuple[type, Any]]) -> dict:
    config = load_config(args.config) if getattr(args, "config", None) else {}
    unknown = set(config) - set(table)
    if unknown:
        raise UsageError(f"--config: unknown option(s) {', '.join(sorted(unknown))}")
    out = {}
    for name, (kind, default) in table.items():
        flag = getattr(args, name, None)
        if flag is not None:
            out[name] = flag
        elif name in config:
            value = config[name]
            if kind is str and isinstance(value, (list, tuple)):
                value = ",".join(str(v) for v in value)
            try:
                out[name] = kind(value) if value is not None else None
            except (TypeError, ValueError):
                raise UsageError(f"--config: option {name} has invalid value {value!r}") from None
        else:
            out[name] = default
    return out


def session_config(opts: dict, attack_default: bool = False) -> SessionConfig:
    N, d = opts["particles"], opts["dim"]
    try:
        check_family(N, d)
    except ValueError as exc:
        raise UsageError(f"--dim/--particles: {exc}") from None
    if opts["units"] < 1:
        raise UsageError("--units: must be positive")
    if opts["group_size"] < 1:
        raise UsageError("--group-size: must be positive")
    try:
        key = ControlKey.parse(opts["key"] if opts["key"] is not None else "0" * N, d, opts["group_size"])
        key.block_count(N)
    except ValueError as exc:
        raise UsageError(f"--key: {exc}") from None
    adversary = None
    kind = opts["adversary"] or (INTERCEPT_RESEND if attack_default else None)
    if kind == INTERCEPT_RESEND:
        offsets = None
        if opts["offsets"]:
            try:
                offsets = tuple(int(x) for x in opts["offsets"].split(","))
            except ValueError:
                raise UsageError(f"--offsets: expected comma-separated integers, got {opts['offsets']!r}") from None
            if len(offsets) != N or min(offsets) < 0:
                raise UsageError(f"--offsets: need {N} non-negative integers")
        eve_key = None
        if opts["eve_key"] is not None:
            try:
                eve_key = ControlKey.parse(opts["eve_key"], d)
                eve_key.block_count(N)
            except ValueError as exc:
                raise UsageError(f"--eve-key: {exc}") from None
        try:
            adversary = AttackConfig(guess=opts["guess"], eve_key=eve_key, offsets=offsets)
        except ValueError as exc:
            raise UsageError(f"--guess: {exc}") from None
    elif opts["offsets"] or opts["eve_key"]:
        raise UsageError("--offsets/--eve-key need --adversary intercept-resend")
    try:
        return SessionConfig(N=N, d=d, num_units=opts["units"], control_key=key,
                             check_fraction=opts["check_fraction"], seed=opts["seed"], adversary=adversary)
    except ValueError as exc:
        raise UsageError(f"--check-fraction/--seed: {exc}") from None


def cmd_run(args) -> int:
    opts = resolve_options(args, SESSION_OPTIONS)
    if opts["adversary"] == "none":
        opts["adversary"] = None
    config = session_config(opts)
    transcript = run_session(config)
    report = build_report(config.to_dict(), [transcript])
    outputs = [(args.out, emit_report(report))]
    if args.transcript:
        outputs.append((args.transcript, emit_report(transcript.to_dict())))
    _write_all(outputs)
    return EXIT_DETECTED if transcript.verdict == EAVESDROPPED else EXIT_CLEAN


def _trial_seeds(seed: int, trials: int) -> list[int]:
    children = np.random.SeedSequence(seed).spawn(trials)
    return [int(c.generate_state(1, dtype=np.uint64)[0]) for c in children]


def cmd_attack(args) -> int:
    opts = resolve_options(args, {**SESSION_OPTIONS, **ATTACK_OPTIONS})
    base = session_config(opts, attack_default=True)
    trials, threads = opts["trials"], opts["threads"]
    if trials < 1:
        raise UsageError("--trials: must be positive")
    if threads < 1:
        raise UsageError("--threads: must be positive")
    configs = []
    for s in (_trial_seeds(base.seed, trials) if trials > 1 else [base.seed]):
        configs.append(SessionConfig(N=base.N, d=base.d, num_units=base.num_units, control_key=base.control_key,
                                     check_fraction=base.check_fraction, seed=s, adversary=base.adversary))
    with concurrent.futures.ThreadPoolExecutor(max_workers=threads) as pool:
        results = list(pool.map(intercept_resend, configs))  # map keeps trial order
    reports = [r for r, _ in results]
    transcripts = [t for _, t in results]
    states = sum(r.states for r in reports)
    pooled = sum(r.empirical_error_rate * r.states for r in reports) / states
    oracle = sum(r.oracle_error_rate * r.states for r in reports) / states
    sigma = math.sqrt(max(oracle * (1 - oracle), 0.0) / states)
    extra = {
        "trial_seeds": [c.seed for c in configs],
        "pooled_error_rate": {
            "empirical": metric(pooled, MONTE_CARLO, states, sigma=sigma),
            "oracle": metric(oracle),
            "within_3_sigma": abs(pooled - oracle) <= 3 * sigma,
        },
    }
    report = build_report(base.to_dict(), transcripts, reports, extra=extra)
    outputs = [(args.out, emit_report(report))]
    if args.transcript:
        outputs.append((args.transcript, emit_report({"transcripts": [t.to_dict() for t in transcripts]})))
    _write_all(outputs)
    return EXIT_DETECTED if any(t.verdict == EAVESDROPPED for t in transcripts) else EXIT_CLEAN


def cmd_cloner_curve(args) -> int:
    if args.grid_points < 2:
        raise UsageError("--grid-points: need at least 2")
    _write_all([(args.out, curve_csv(cloner_curve(args.grid_points, args.dim)))])
    return EXIT_CLEAN


def cmd_verify(args) -> int:
    items = verify_paper()
    lines = [item.line() for item in items]
    failed = sum(not item.passed for item in items)
    lines.append(f"{len(items) - failed}/{len(items)} items PASS")
    outputs = []
    if args.out:
        outputs.append((args.out, emit_report({"ledger": [i.to_dict() for i in items], "failed": failed})))
    _write_all(outputs)
    if args.out != "-":
        print("\n".join(lines))
    return EXIT_USAGE if failed else EXIT_CLEAN


def format_tables(d: int, N: int) -> str:
    rows = []
    for k, perm in enumerate(family_permutations(d, N)):
        label = "".join(str(x) for x in block_digits(k, d, N))
        rows.append(f"E_{k}\t{label}\t{' '.join(str(x) for x in perm.mapping)}")
    return "\n".join(rows) + "\n"


def cmd_tables(args) -> int:
    try:
        check_family(args.particles, args.dim)
    except ValueError as exc:
        raise UsageError(f"--dim/--particles: {exc}") from None
    _write_all([(args.out, format_tables(args.dim, args.particles))])
    return EXIT_CLEAN


def _write_all(outputs: Sequence[tuple[str, str]]) -> None:
    for path, text in outputs:
        try:
            atomic_write(path, text)
        except OSError as exc:
            raise UsageError(f"--out: {exc}") from None


COMMANDS = {
    "run": cmd_run,
    "attack": cmd_attack,
    "cloner-curve": cmd_cloner_curve,
    "verify-paper": cmd_verify,
    "tables": cmd_tables,
}


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except GCOREError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
