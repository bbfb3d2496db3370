"""Figures of merit, report assembly and the reproduction ledger.

Every number placed in a report is wrapped with its provenance: ``analytic``
for closed forms and exact oracles, ``monte-carlo`` (with a sample count)
for simulated statistics.
"""
from __future__ import annotations

import json
import math
import os
import sys
import tempfile
from dataclasses import dataclass
from typing import Any, Callable, Iterable, Sequence

import numpy as np

from .errors import DomainError
from .states import check_family

ANALYTIC = "analytic"
MONTE_CARLO = "monte-carlo"


@dataclass(frozen=True)
class EfficiencyInput:
    b_s: float  # secret bits received
    q_t: float  # quantum carriers used
    b_t: float  # classical bits exchanged

    def __post_init__(self):
        if min(self.b_s, self.q_t, self.b_t) < 0:
            raise DomainError("efficiency inputs must be non-negative")
        if self.q_t + self.b_t <= 0:
            raise DomainError("q_t + b_t must be positive")


def efficiency(inp: EfficiencyInput) -> float:
    eta = inp.b_s / (inp.q_t + inp.b_t)
    if eta > 1 + 1e-12:
        raise DomainError(f"efficiency {eta} exceeds 1; the accounting is inconsistent")
    return eta


def gcore_accounting(N: int = 3, d: int = 2) -> EfficiencyInput:
    # every carried bit is key, nothing is announced per state
    size = check_family(N, d)
    bits = size * math.log2(size)
    return EfficiencyInput(bits, bits, 0)


def bb84_accounting() -> EfficiencyInput:
    # half the qubits survive sifting, one basis bit announced per qubit
    return EfficiencyInput(1, 2, 2)


def epr_accounting() -> EfficiencyInput:
    return EfficiencyInput(1, 1, 1)


ACCOUNTINGS: dict[str, Callable[[], EfficiencyInput]] = {
    "gcore": gcore_accounting,
    "bb84": bb84_accounting,
    "epr": epr_accounting,
}


def capacity(M: int, N: int, d: int) -> tuple[float, float]:
    """``(total bits, bits per particle)`` carried by ``M`` basis-state symbols."""
    if M < 1 or N < 1 or d < 2:
        raise DomainError(f"need M >= 1, N >= 1, d >= 2, got M={M}, N={N}, d={d}")
    per_symbol = N * math.log2(d)
    return M * per_symbol, per_symbol / (N * d**N)


def key_guess_probability(d: int, digits: int) -> float:
    """``log2`` of the chance of guessing ``digits`` uniform base-``d`` key digits."""
    if d < 2 or digits < 0:
        raise DomainError(f"need d >= 2 and digits >= 0, got d={d}, digits={digits}")
    return -digits * math.log2(d)


def metric(value, provenance: str = ANALYTIC, samples: int | None = None, **extra) -> dict:
    out = {"value": value, "provenance": provenance}
    if samples is not None:
        out["samples"] = int(samples)
    out.update(extra)
    return out


# --- reproduction ledger ----------------------------------------------------


@dataclass(frozen=True)
class LedgerItem:
    name: str
    expected: float
    value: float
    tolerance: float
    source: str

    @property
    def passed(self) -> bool:
        return abs(self.value - self.expected) <= self.tolerance

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"{status}  {self.name}: {self.expected:.6g} ± {self.tolerance:g} (got {self.value:.10g})"

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "expected": self.expected,
            "value": self.value,
            "tolerance": self.tolerance,
            "source": self.source,
            "passed": self.passed,
        }


def verify_paper() -> list[LedgerItem]:
    """Recompute every reproducible published figure and compare."""
    from .attacks import misgrouped_density, paper_error_rate, raw_error_rate
    from .cloner import (
        bob_fidelity,
        cloner_for_fidelity,
        eve_fidelity,
        mutual_information,
        optimal_eve_fidelity,
        security_threshold,
        symmetric_cloner,
    )
    from .states import measure_in_family

    items: list[LedgerItem] = []

    def add(name, expected, value, tol, source="published"):
        items.append(LedgerItem(name, float(expected), float(value), float(tol), source))

    add("efficiency gcore", 1.0, efficiency(gcore_accounting()), 1e-12)
    add("efficiency bb84", 0.25, efficiency(bb84_accounting()), 1e-12)
    add("efficiency epr", 0.5, efficiency(epr_accounting()), 1e-12)
    add("capacity N=3 d=2 (bits)", 3.0, capacity(1, 3, 2)[0], 1e-12)
    add("capacity N=2 d=2 (bits)", 2.0, capacity(1, 2, 2)[0], 1e-12)
    add("capacity N=2 d=3 (bits)", math.log2(9), capacity(1, 2, 3)[0], 1e-12)
    add("capacity N=3 d=3 (bits)", math.log2(27), capacity(1, 3, 3)[0], 1e-12)
    add("key guess (1/8)^100 (log2)", -300.0, key_guess_probability(2, 300), 1e-9)
    for D, k, printed in ((8, 3, 0.6699), (8, 2, 0.7656), (9, 2, 0.7901)):
        add(f"error rate D={D} k={k}: (1-1/D)^k", printed, paper_error_rate(D, k), 5e-5)
        add(f"error rate D={D}: 1-1/D", 1 - 1 / D, raw_error_rate(D), 1e-12, "derived")
    p8 = measure_in_family(misgrouped_density(3, 2, (1, 2, 3)), 3, 2)
    add("uniform outcome N=3 d=2 (max |p-1/8|)", 0.0, float(np.abs(p8 - 1 / 8).max()), 1e-12)
    p9 = measure_in_family(misgrouped_density(2, 3, (1, 2)), 2, 3)
    add("uniform outcome N=2 d=3 (max |p-1/9|)", 0.0, float(np.abs(p9 - 1 / 9).max()), 1e-12)
    v, x = cloner_for_fidelity(0.75)
    add("universal qutrit cloner fidelity", 0.75, bob_fidelity(symmetric_cloner(math.sqrt(2 / 3), 1 / math.sqrt(24)))[0], 1e-12)
    add("universal cloner F_E", 0.75, eve_fidelity(v, x), 1e-12, "derived")
    t3 = security_threshold(3)
    add("threshold d=3", 0.5 * (1 + 1 / math.sqrt(3)), t3.F_numeric, 1e-9)
    add("threshold d=3 (printed)", 0.788675, t3.F_star, 5e-7)
    add("D_qutrit", 0.5 * (1 - 1 / math.sqrt(3)), 1 - t3.F_numeric, 1e-9)
    t2 = security_threshold(2)
    add("D_qubit", 0.5 * (1 - 1 / math.sqrt(2)), 1 - t2.F_numeric, 1e-9)
    add("D_qubit (printed)", 0.14645, t2.D_star, 5e-6)
    fs = t3.F_star
    add("I_AB - I_AE at F*", 0.0, mutual_information(fs) - mutual_information(optimal_eve_fidelity(fs)), 1e-12, "derived")
    add("I(F*) bits", 0.6295, mutual_information(fs), 5e-4)
    return items


# --- report serialization ---------------------------------------------------


def _jsonable(obj: Any) -> Any:
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (complex, np.complexfloating)):
        return [float(obj.real), float(obj.imag)]
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, float) and not math.isfinite(obj):
        raise DomainError(f"non-finite number {obj!r} cannot be serialized")
    if hasattr(obj, "to_dict"):
        return _jsonable(obj.to_dict())
    return obj


def emit_report(report: dict) -> str:
    """Canonical JSON: sorted keys, fixed indentation, complex numbers as ``[re, im]``."""
    return json.dumps(_jsonable(report), sort_keys=True, indent=2, ensure_ascii=False, allow_nan=False) + "\n"


def parse_report(text: str) -> dict:
    return json.loads(text)


def build_report(
    config: dict | None = None,
    transcripts: Sequence[Any] = (),
    attacks: Sequence[Any] = (),
    curves: Sequence[str] = (),
    extra: dict | None = None,
) -> dict:
    """Aggregate finished runs into one report dictionary."""
    from .cloner import security_threshold

    summaries = [t.summary() for t in transcripts]
    states = sum(s["states"] for s in summaries)
    errors = sum(s["label_errors"] for s in summaries)
    report: dict[str, Any] = {
        "config": config or {},
        "runs": len(summaries),
        "transcripts": summaries,
        "attacks": [a.to_dict() for a in attacks],
        "curves": list(curves),
    }
    if states:
        report["qber"] = {"label": metric(errors / states, MONTE_CARLO, states)}
        report["disclosed_digits"] = sum(s["disclosed_digits"] for s in summaries)
    if config and "N" in config and "d" in config:
        N, d = config["N"], config["d"]
        total, per_particle = capacity(config.get("num_units", 1) * d**N, N, d)
        report["capacity_bits"] = {"total": metric(total), "per_particle": metric(per_particle)}
        report["efficiency"] = metric(efficiency(gcore_accounting(N, d)), accounting="gcore", b_t=0)
        if d in (2, 3):
            th = security_threshold(d)
            report["threshold"] = {"F_star": metric(th.F_star), "D_star": metric(th.D_star)}
    if extra:
        report.update(extra)
    return report


def atomic_write(path: str, text: str) -> None:
    """Write ``text`` to ``path`` (``-`` is stdout) without leaving partial files."""
    if path == "-":
        sys.stdout.write(text)
        sys.stdout.flush()
        return
    directory = os.path.dirname(os.path.abspath(path))
    try:
        fd, tmp = tempfile.mkstemp(prefix=".gcore-", dir=directory)
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc.strerror}") from exc
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_curve_csv(path: str, rows: Iterable[Sequence[float]]) -> None:
    from .cloner import curve_csv

    atomic_write(path, curve_csv(list(rows)))
