"""End-to-end sessions: preparation, lane transmission, recovery and sifting.

Alice prepares ``num_units`` carrier units of ``D = d**N`` random basis
states. Per unit, lane 0 is sent in temporal order and lanes ``1..N-1`` are
rearranged by the key-selected ``E_k``. An optional adversary may intercept
each unit's lane streams. Bob undoes ``E_k`` with his copy of the key,
measures each regrouped tuple, and a random check subset decides whether
the run was eavesdropped.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Protocol, Sequence

import numpy as np

from .errors import ConfigError, ProtocolError
from .permutation import (
    ControlKey,
    general_permutation,
    key_block_indices,
    switch_schedule,
    execute_schedule,
)
from .register import measure_tuples
from .states import check_family, label_digits

CLEAN = "clean"
EAVESDROPPED = "eavesdropped"


class Adversary(Protocol):
    """Anything that can tamper with one unit's lane streams in flight."""

    def intercept(
        self,
        unit: int,
        streams: list[list[int]],
        labels: list[int],
        rng: np.random.Generator,
    ) -> tuple[list[list[int]], dict]:
        """Return the forwarded streams and a JSON-ready record of the action.

        ``streams[lane][p]`` is the source id of the particle at received
        position ``p``; ``labels`` is the shared source registry, to which
        re-prepared states are appended.
        """


@dataclass
class SessionConfig:
    N: int
    d: int
    num_units: int
    control_key: ControlKey
    check_fraction: float = 0.25
    seed: int = 0
    adversary: Any = None
    bob_key: ControlKey | None = None

    def __post_init__(self):
        try:
            check_family(self.N, self.d)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        if int(self.num_units) != self.num_units or self.num_units < 1:
            raise ConfigError(f"num_units must be a positive integer, got {self.num_units}")
        if self.control_key.d != self.d:
            raise ConfigError(f"control key is base-{self.control_key.d}, family needs base-{self.d}")
        if len(self.control_key) % self.N:
            raise ConfigError(f"control key length {len(self.control_key)} is not a multiple of N={self.N}")
        if self.bob_key is not None and (self.bob_key.d != self.d or len(self.bob_key) % self.N):
            raise ConfigError("Bob's key must be base-d with a length divisible by N")
        if not 0 < self.check_fraction < 1:
            raise ConfigError(f"check_fraction must lie in (0, 1), got {self.check_fraction}")
        if not 0 <= self.seed < 2**64:
            raise ConfigError(f"seed must be a 64-bit unsigned integer, got {self.seed}")

    @property
    def size(self) -> int:
        return self.d**self.N

    def to_dict(self) -> dict:
        return {
            "N": self.N,
            "d": self.d,
            "num_units": self.num_units,
            "control_key": str(self.control_key),
            "group_size": self.control_key.group_size,
            "check_fraction": self.check_fraction,
            "seed": self.seed,
            "adversary": None if self.adversary is None else self.adversary.to_dict(),
            "bob_key": None if self.bob_key is None else str(self.bob_key),
        }


@dataclass
class Transmission:
    """Everything Alice puts on the channel, plus her private record."""

    N: int
    d: int
    labels: np.ndarray
    unit_keys: list[int]
    schedules: dict[int, dict]
    # streams[unit][lane] -> list of (source id, slot)
    streams: list[list[list[tuple[int, int]]]]
    registry: list[int] = field(default_factory=list)

    @property
    def size(self) -> int:
        return self.d**self.N


def _frame(size: int) -> int:
    return 2 * size


def alice_prepare(config: SessionConfig, rng: np.random.Generator, labels: Sequence[int] | None = None) -> Transmission:
    """Draw labels (or take the given ones), rearrange and schedule every unit."""
    N, d, size = config.N, config.d, config.size
    total = config.num_units * size
    if labels is None:
        labels = rng.integers(0, size, size=total)
    else:
        labels = np.asarray(labels, dtype=np.int64)
        if labels.shape != (total,) or labels.min() < 0 or labels.max() >= size:
            raise ConfigError(f"expected {total} labels in [0, {size})")
    unit_keys = key_block_indices(config.control_key, N, config.num_units)
    schedules: dict[int, Any] = {}
    streams = []
    for u, k in enumerate(unit_keys):
        if k not in schedules:
            schedules[k] = switch_schedule(general_permutation(d, N, k), N, d)
        sched = schedules[k]
        ids = list(range(u * size, (u + 1) * size))
        lanes = execute_schedule(sched, [ids] * N)
        base = u * _frame(size)
        streams.append([[(src, base + slot) for src, slot in lane] for lane in lanes])
    return Transmission(
        N, d, labels, unit_keys,
        {k: s.to_json() for k, s in sorted(schedules.items())},
        streams, registry=[int(x) for x in labels],
    )


def _check_unit(unit_streams, N: int, size: int, u: int) -> None:
    if len(unit_streams) != N:
        raise ProtocolError(f"unit {u}: expected {N} lanes, got {len(unit_streams)}")
    for lane, stream in enumerate(unit_streams):
        if len(stream) != size:
            raise ProtocolError(f"unit {u}, lane {lane}: expected {size} particles, got {len(stream)}")
        slots = [slot for _, slot in stream]
        if any(b <= a for a, b in zip(slots, slots[1:])):
            raise ProtocolError(f"unit {u}, lane {lane}: slots are not strictly increasing")


def bob_recover(
    streams: list[list[list[tuple[int, int]]]],
    control_key: ControlKey,
    N: int,
    d: int,
    registry: Sequence[int],
    rng: np.random.Generator,
) -> np.ndarray:
    """Undo each unit's rearrangement and measure every regrouped tuple."""
    size = check_family(N, d)
    if not streams:
        raise ProtocolError("no units received")
    unit_keys = key_block_indices(control_key, N, len(streams))
    tuples = []
    for u, (unit_streams, k) in enumerate(zip(streams, unit_keys)):
        _check_unit(unit_streams, N, size, u)
        perm = general_permutation(d, N, k)
        for i in range(1, size + 1):
            row = [unit_streams[0][i - 1][0]]
            row.extend(unit_streams[lane][perm(i) - 1][0] for lane in range(1, N))
            tuples.append(row)
    return measure_tuples(registry, tuples, N, d, rng)


@dataclass
class SiftResult:
    verdict: str
    check_positions: list[int]
    mismatches: int
    key_positions: list[int]
    key_digits: str


def labels_to_digits(labels: Sequence[int], N: int, d: int) -> str:
    """Serialize key symbols as ``N`` base-``d`` digits each, most significant first."""
    return "".join("".join(_digit_char(x) for x in label_digits(int(lab), N, d)) for lab in labels)


def _digit_char(x: int) -> str:
    return "0123456789abcdefghijklmnopqrstuvwxyz"[x]


def choose_check_positions(n: int, check_fraction: float, rng: np.random.Generator) -> list[int]:
    """Uniform random subset of ``round(f n)`` positions, clipped to ``[1, n-1]``."""
    if n < 2:
        raise ConfigError("need at least two labels to keep one unchecked")
    count = min(max(1, int(round(check_fraction * n))), n - 1)
    return sorted(int(x) for x in rng.choice(n, size=count, replace=False))


def sift_and_check(
    prepared: Sequence[int],
    measured: Sequence[int],
    check_fraction: float,
    rng: np.random.Generator,
    N: int,
    d: int,
    exclude: Sequence[int] = (),
) -> SiftResult:
    """Compare a random check subset label by label; the rest is raw key.

    Positions in ``exclude`` never enter the key (they may still be checked).
    """
    prepared = np.asarray(prepared)
    measured = np.asarray(measured)
    if prepared.shape != measured.shape:
        raise ProtocolError("prepared and measured sequences differ in length")
    checks = choose_check_positions(len(prepared), check_fraction, rng)
    mismatches = int(np.count_nonzero(prepared[checks] != measured[checks]))
    skip = set(checks) | set(int(x) for x in exclude)
    keep = [i for i in range(len(prepared)) if i not in skip]
    return SiftResult(
        EAVESDROPPED if mismatches else CLEAN,
        checks,
        mismatches,
        keep,
        labels_to_digits(measured[keep], N, d),
    )


def detection_probability(error_rate: float, checks: int) -> float:
    """Chance that at least one of ``checks`` independent labels is wrong."""
    if not 0 <= error_rate <= 1 or checks < 0:
        raise ValueError("error_rate must lie in [0, 1] and checks must be non-negative")
    return -math.expm1(checks * math.log1p(-error_rate)) if error_rate < 1 else float(checks > 0)


@dataclass
class SessionTranscript:
    config: dict
    prepared: list[int]
    unit_keys: list[int]
    schedules: dict[int, dict]
    adversary_actions: list[dict]
    measured: list[int]
    check_positions: list[int]
    mismatches: int
    verdict: str
    sifted_key: str
    key_positions: list[int]

    @property
    def label_errors(self) -> int:
        return sum(a != b for a, b in zip(self.prepared, self.measured))

    @property
    def agreement(self) -> float:
        return 1 - self.label_errors / len(self.prepared)

    def summary(self) -> dict:
        return {
            "states": len(self.prepared),
            "label_errors": self.label_errors,
            "agreement": self.agreement,
            "checked": len(self.check_positions),
            "check_mismatches": self.mismatches,
            "verdict": self.verdict,
            "sifted_digits": len(self.sifted_key),
            "disclosed_digits": len(self.check_positions) * self.config["N"],
        }

    def to_dict(self) -> dict:
        return {
            "config": self.config,
            "summary": self.summary(),
            "prepared": self.prepared,
            "unit_keys": self.unit_keys,
            "schedules": {str(k): v for k, v in self.schedules.items()},
            "adversary_actions": self.adversary_actions,
            "measured": self.measured,
            "check_positions": self.check_positions,
            "sifted_key": self.sifted_key,
        }


def _simulate(config: SessionConfig, labels: Sequence[int] | None = None, exclude: Sequence[int] = ()) -> SessionTranscript:
    rng = np.random.default_rng(config.seed)
    tx = alice_prepare(config, rng, labels)
    streams = tx.streams
    actions: list[dict] = []
    if config.adversary is not None:
        adversary = config.adversary.build(config.N, config.d)
        forwarded = []
        for u, unit_streams in enumerate(streams):
            ids = [[src for src, _ in lane] for lane in unit_streams]
            new_ids, record = adversary.intercept(u, ids, tx.registry, rng)
            forwarded.append([
                [(src, slot) for src, (_, slot) in zip(lane_ids, lane)]
                for lane_ids, lane in zip(new_ids, unit_streams)
            ])
            actions.append(record)
        streams = forwarded
    bob_key = config.bob_key or config.control_key
    measured = bob_recover(streams, bob_key, config.N, config.d, tx.registry, rng)
    sift = sift_and_check(tx.labels, measured, config.check_fraction, rng, config.N, config.d, exclude)
    return SessionTranscript(
        config=config.to_dict(),
        prepared=[int(x) for x in tx.labels],
        unit_keys=tx.unit_keys,
        schedules=tx.schedules,
        adversary_actions=actions,
        measured=[int(x) for x in measured],
        check_positions=sift.check_positions,
        mismatches=sift.mismatches,
        verdict=sift.verdict,
        sifted_key=sift.key_digits,
        key_positions=sift.key_positions,
    )


def run_session(config: SessionConfig) -> SessionTranscript:
    """Run one full session; the result depends only on ``config``."""
    return _simulate(config)


@dataclass
class RelayTranscript:
    session: SessionTranscript
    symbol_positions: list[int]  # key symbols (in Bob's input order) that survived
    bob_key: str
    clare_key: str

    @property
    def agree(self) -> bool:
        return self.bob_key == self.clare_key


def multiparty_relay(bob_key_digits: str, downstream: SessionConfig) -> RelayTranscript:
    """Forward Bob's sifted key to a third party through a fresh session.

    Bob encodes his digits as basis labels (``N`` digits per symbol, the last
    symbol zero-padded), fills the final unit with random filler states that
    never enter the key, and runs a session under the Bob-Clare key. The
    common key consists of the symbols that were not disclosed for checking.
    """
    N, d, size = downstream.N, downstream.d, downstream.size
    if not bob_key_digits:
        raise ConfigError("relay needs a non-empty key")
    try:
        digits = [int(ch, d) for ch in bob_key_digits]
    except ValueError:
        raise ConfigError(f"key {bob_key_digits!r} is not a base-{d} digit string") from None
    pad = (-len(digits)) % N
    digits += [0] * pad
    symbols = [
        sum(x * d ** (N - 1 - j) for j, x in enumerate(digits[s:s + N]))
        for s in range(0, len(digits), N)
    ]
    units = -(-len(symbols) // size)
    fill_rng = np.random.default_rng([downstream.seed, 1])
    filler = fill_rng.integers(0, size, size=units * size - len(symbols))
    labels = np.concatenate([np.asarray(symbols, dtype=np.int64), filler])
    config = SessionConfig(
        N=N, d=d, num_units=units, control_key=downstream.control_key,
        check_fraction=downstream.check_fraction, seed=downstream.seed,
        adversary=downstream.adversary, bob_key=downstream.bob_key,
    )
    transcript = _simulate(config, labels, exclude=range(len(symbols), len(labels)))
    kept = [p for p in transcript.key_positions if p < len(symbols)]

    def render(labs: Sequence[int]) -> str:
        text = labels_to_digits(labs, N, d)
        if pad and kept and kept[-1] == len(symbols) - 1:
            text = text[: len(text) - pad]
        return text

    bob = render([symbols[p] for p in kept])
    clare = render([transcript.measured[p] for p in kept])
    return RelayTranscript(transcript, kept, bob, clare)


def symbol_subset(key_digits: str, N: int, positions: Sequence[int]) -> str:
    """Digits of the key symbols at ``positions`` (helper for multi-hop checks)."""
    return "".join(key_digits[p * N:(p + 1) * N] for p in positions)
