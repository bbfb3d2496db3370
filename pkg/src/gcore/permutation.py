"""Control keys, order-rearrangement permutations and delay-line schedules.

A unit of ``D = d**N`` entangled states is rearranged by one permutation
``E_k`` chosen by a block of ``N`` base-``d`` control-key digits. The first
lane keeps its temporal order; every other lane is reordered by ``E_k``.

Permutations are 1-indexed position maps: ``mapping[i-1] == E(i)`` and the
item at input position ``i`` leaves at output position ``E(i)``.
"""
from __future__ import annotations

import heapq
import itertools
from dataclasses import dataclass, field
from typing import Iterator, Sequence

from .errors import DomainError
from .states import check_family

# Qubit tables kept verbatim; E_5 and E_7 are not XOR-by-label.
_QUBIT_TABLES = (
    (1, 2, 3, 4, 5, 6, 7, 8),
    (2, 1, 4, 3, 6, 5, 8, 7),
    (3, 4, 1, 2, 7, 8, 5, 6),
    (4, 3, 2, 1, 8, 7, 6, 5),
    (5, 6, 7, 8, 1, 2, 3, 4),
    (8, 7, 6, 5, 4, 3, 2, 1),
    (7, 8, 5, 6, 3, 4, 1, 2),
    (6, 5, 8, 7, 2, 1, 4, 3),
)


@dataclass(frozen=True)
class PermutationOp:
    """Bijection on positions ``1..size`` stored as a 1-indexed mapping."""

    mapping: tuple[int, ...]
    name: str = field(default="", compare=False)

    def __post_init__(self):
        mapping = tuple(int(x) for x in self.mapping)
        if sorted(mapping) != list(range(1, len(mapping) + 1)):
            raise DomainError(f"mapping {mapping} is not a bijection on 1..{len(mapping)}")
        object.__setattr__(self, "mapping", mapping)

    @property
    def size(self) -> int:
        return len(self.mapping)

    def __call__(self, position: int) -> int:
        return self.mapping[position - 1]

    def inverse(self) -> "PermutationOp":
        inv = [0] * self.size
        for i, target in enumerate(self.mapping, start=1):
            inv[target - 1] = i
        return PermutationOp(tuple(inv), name=f"{self.name}^-1" if self.name else "")

    def compose(self, other: "PermutationOp") -> "PermutationOp":
        """``self o other``: apply ``other`` first."""
        if other.size != self.size:
            raise DomainError("cannot compose permutations of different sizes")
        return PermutationOp(tuple(self(other(i)) for i in range(1, self.size + 1)))

    def is_identity(self) -> bool:
        return self.mapping == tuple(range(1, self.size + 1))

    def to_json(self) -> list[int]:
        return list(self.mapping)


def identity(size: int) -> PermutationOp:
    return PermutationOp(tuple(range(1, size + 1)), name="E_0")


def qubit_permutation(k: int) -> PermutationOp:
    """One of the eight tabulated 3-qubit rearrangements ``E_0 .. E_7``."""
    if not 0 <= k < 8:
        raise DomainError(f"qubit permutation index must lie in 0..7, got {k}")
    return PermutationOp(_QUBIT_TABLES[k], name=f"E_{k}")


def cyclic_shift(size: int, k: int) -> PermutationOp:
    return PermutationOp(tuple((i - 1 + k) % size + 1 for i in range(1, size + 1)), name=f"E_{k}")


def general_permutation(d: int, N: int, k: int) -> PermutationOp:
    """Rearrangement ``E_k`` of the ``(N, d)`` family.

    The 3-qubit family uses the printed tables, every other family the cyclic
    shift by ``k`` positions (the printed 2-qutrit tables are exactly those).
    """
    size = check_family(N, d)
    if not 0 <= k < size:
        raise DomainError(f"permutation index must lie in [0, {size}), got {k}")
    if (d, N) == (2, 3):
        return qubit_permutation(k)
    return cyclic_shift(size, k)


def family_permutations(d: int, N: int) -> list[PermutationOp]:
    return [general_permutation(d, N, k) for k in range(check_family(N, d))]


def apply_rearrangement(unit: Sequence, perm: PermutationOp) -> list:
    """Reorder ``unit`` so that output position ``perm(i)`` holds input item ``i``."""
    if len(unit) != perm.size:
        raise DomainError(f"unit of length {len(unit)} does not match permutation size {perm.size}")
    out = [None] * perm.size
    for i, item in enumerate(unit, start=1):
        out[perm(i) - 1] = item
    return out


def invert_rearrangement(unit: Sequence, perm: PermutationOp) -> list:
    """Undo :func:`apply_rearrangement`."""
    if len(unit) != perm.size:
        raise DomainError(f"unit of length {len(unit)} does not match permutation size {perm.size}")
    return [unit[perm(i) - 1] for i in range(1, perm.size + 1)]


# --- control keys -----------------------------------------------------------

# The 3-qutrit rearrangements are named by trit strings in a rotated digit
# order: E_{a + 3b + 9c} <-> "b c a" (E_3 <-> 100, E_9 <-> 010).
def _qutrit3_index(digits: Sequence[int]) -> int:
    b, c, a = digits
    return a + 3 * b + 9 * c


def _qutrit3_digits(k: int) -> tuple[int, int, int]:
    a, rest = k % 3, k // 3
    b, c = rest % 3, rest // 3
    return (b, c, a)


def block_index(digits: Sequence[int], d: int, N: int) -> int:
    """Rearrangement index selected by one block of ``N`` key digits."""
    if len(digits) != N:
        raise DomainError(f"key block needs {N} digits, got {len(digits)}")
    if any(not 0 <= x < d for x in digits):
        raise DomainError(f"key digits {tuple(digits)} are not base-{d}")
    if (d, N) == (3, 3):
        return _qutrit3_index(digits)
    value = 0
    for x in digits:
        value = value * d + int(x)
    return value


def block_digits(k: int, d: int, N: int) -> tuple[int, ...]:
    """Inverse of :func:`block_index`: the key block that selects ``E_k``."""
    size = check_family(N, d)
    if not 0 <= k < size:
        raise DomainError(f"permutation index must lie in [0, {size}), got {k}")
    if (d, N) == (3, 3):
        return _qutrit3_digits(k)
    digits = []
    for _ in range(N):
        k, r = divmod(k, d)
        digits.append(r)
    return tuple(reversed(digits))


@dataclass(frozen=True)
class ControlKey:
    """Pre-shared base-``d`` digit string; reused cyclically once exhausted."""

    d: int
    digits: tuple[int, ...]
    group_size: int = 1

    def __post_init__(self):
        digits = tuple(int(x) for x in self.digits)
        if self.d < 2:
            raise DomainError(f"key base must be >= 2, got {self.d}")
        if not digits:
            raise DomainError("control key must contain at least one digit")
        if any(not 0 <= x < self.d for x in digits):
            raise DomainError(f"control key digits must be base-{self.d}")
        if self.group_size < 1:
            raise DomainError(f"group_size must be positive, got {self.group_size}")
        object.__setattr__(self, "digits", digits)

    @classmethod
    def parse(cls, text: str, d: int, group_size: int = 1) -> "ControlKey":
        """Build a key from a digit string such as ``"001011"``."""
        text = text.strip()
        try:
            digits = tuple(int(ch, d) for ch in text)
        except ValueError:
            raise DomainError(f"control key {text!r} is not a base-{d} digit string") from None
        return cls(d, digits, group_size)

    def __str__(self) -> str:
        return "".join(str(x) for x in self.digits)

    def __len__(self) -> int:
        return len(self.digits)

    def block_count(self, N: int) -> int:
        if len(self.digits) % N:
            raise DomainError(f"key length {len(self.digits)} is not a multiple of the block size {N}")
        return len(self.digits) // N


def key_block_stream(key: ControlKey, N: int) -> Iterator[PermutationOp]:
    """Endless per-unit permutation stream driven by ``key``.

    Each ``N``-digit block selects ``E_k`` which is emitted for
    ``key.group_size`` consecutive units; the key recycles when exhausted.
    """
    blocks = key.block_count(N)
    perms = [
        general_permutation(key.d, N, block_index(key.digits[b * N:(b + 1) * N], key.d, N))
        for b in range(blocks)
    ]
    for perm in itertools.cycle(perms):
        for _ in range(key.group_size):
            yield perm


def key_block_indices(key: ControlKey, N: int, units: int) -> list[int]:
    """Rearrangement index used for each of the first ``units`` units."""
    blocks = [
        block_index(key.digits[b * N:(b + 1) * N], key.d, N) for b in range(key.block_count(N))
    ]
    return [blocks[(u // key.group_size) % len(blocks)] for u in range(units)]


# --- delay-line schedules ---------------------------------------------------


@dataclass(frozen=True)
class LaneEntry:
    particle: int  # 1-based position inside the unit, in arrival order
    departure: int  # slot at which the particle leaves the device
    delay: int  # departure - arrival, in slots


@dataclass(frozen=True)
class SwitchSchedule:
    """Per-lane delay programs realizing one rearrangement.

    Particle ``i`` arrives at slot ``i - 1``; lane programs list entries in
    arrival order. ``latency`` is the common extra delay that keeps every
    delay non-negative while preserving the lanes' relative alignment.
    """

    perm: PermutationOp
    lanes: tuple[tuple[LaneEntry, ...], ...]
    latency: int
    slot_interval: int = 1

    def departures(self, lane: int) -> list[int]:
        return sorted(e.departure for e in self.lanes[lane])

    def to_json(self) -> dict:
        return {
            "perm": self.perm.to_json(),
            "latency": self.latency,
            "slot_interval": self.slot_interval,
            "delays": [[e.delay for e in lane] for lane in self.lanes],
        }


def _build_schedule(perm: PermutationOp, N: int, fixed_lanes: int) -> SwitchSchedule:
    size = perm.size
    latency = max(0, max(i - perm(i) for i in range(1, size + 1)))
    lanes = []
    for lane in range(N):
        entries = []
        for i in range(1, size + 1):
            target = i if lane < fixed_lanes else perm(i)
            departure = latency + target - 1
            entries.append(LaneEntry(i, departure, departure - (i - 1)))
        lanes.append(tuple(entries))
    return SwitchSchedule(perm, tuple(lanes), latency)


def switch_schedule(perm: PermutationOp, N: int, d: int, fixed_lanes: int = 1) -> SwitchSchedule:
    """Delay-line program that realizes ``perm`` on lanes ``fixed_lanes..N-1``.

    Departures on every lane occupy consecutive slots, so inter-departure
    spacing is one slot and order carries no timing signature.
    """
    size = check_family(N, d)
    if perm.size != size:
        raise DomainError(f"permutation of size {perm.size} does not match d**N = {size}")
    if not 0 <= fixed_lanes <= N:
        raise DomainError(f"fixed_lanes must lie in [0, {N}], got {fixed_lanes}")
    return _build_schedule(perm, N, fixed_lanes)


def inverse_schedule(schedule: SwitchSchedule, fixed_lanes: int = 1) -> SwitchSchedule:
    """Receiver-side schedule undoing ``schedule`` (swapped device roles)."""
    return _build_schedule(schedule.perm.inverse(), len(schedule.lanes), fixed_lanes)


def execute_schedule(schedule: SwitchSchedule, lane_items: Sequence[Sequence]) -> list[list[tuple[object, int]]]:
    """Discrete-event run of the delay lines.

    ``lane_items[lane][i-1]`` arrives at slot ``i-1``; returns, per lane, the
    ``(item, departure_slot)`` stream in departure order.
    """
    if len(lane_items) != len(schedule.lanes):
        raise DomainError(f"expected {len(schedule.lanes)} lanes, got {len(lane_items)}")
    out = []
    for program, items in zip(schedule.lanes, lane_items):
        if len(items) != len(program):
            raise DomainError(f"lane carries {len(items)} items, schedule expects {len(program)}")
        events: list[tuple[int, int, object]] = []
        for seq, (entry, item) in enumerate(zip(program, items)):
            heapq.heappush(events, (entry.departure, seq, item))
        stream = []
        while events:
            slot, _, item = heapq.heappop(events)
            stream.append((item, slot * schedule.slot_interval))
        out.append(stream)
    return out
