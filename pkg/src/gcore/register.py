"""Exact sampling of entangled-basis measurements on regrouped particles.

Every *source* is an N-particle basis state of one ``(N, d)`` family. A
measurement *tuple* takes its lane-``l`` particle from some source, always
in the same lane role. Tuples are measured one at a time; each outcome
collapses the joint state of whatever sources the tuple touched, so
correlations between tuples that share sources are reproduced, not only
their marginals.
"""
from __future__ import annotations

import math
from typing import Sequence

import numpy as np

from .errors import ProtocolError
from .states import check_family, family_basis, label_state

# Outcome probabilities below this are rounding residue of orthogonal overlaps.
PROB_FLOOR = 1e-12


class _Component:
    __slots__ = ("tensor", "keys")

    def __init__(self, tensor: np.ndarray, keys: list):
        self.tensor = tensor
        self.keys = keys


def _tuple_order(tuple_sources: Sequence[Sequence[int]]) -> list[int]:
    """Depth-first order over tuples linked by shared sources.

    Following chains keeps the set of open, partially measured sources small.
    """
    by_source: dict[int, list[int]] = {}
    for t, srcs in enumerate(tuple_sources):
        for s in set(srcs):
            by_source.setdefault(s, []).append(t)
    seen = [False] * len(tuple_sources)
    order = []
    for start in range(len(tuple_sources)):
        if seen[start]:
            continue
        stack = [start]
        seen[start] = True
        while stack:
            t = stack.pop()
            order.append(t)
            neighbours = []
            for s in dict.fromkeys(tuple_sources[t]):
                neighbours.extend(u for u in by_source[s] if not seen[u])
            for u in reversed(neighbours):
                if not seen[u]:
                    seen[u] = True
                    stack.append(u)
    return order


def sample_outcome(probs: np.ndarray, rng: np.random.Generator) -> int:
    probs = np.where(probs < PROB_FLOOR, 0.0, probs)
    cdf = np.cumsum(probs)
    u = rng.random() * cdf[-1]
    return int(min(np.searchsorted(cdf, u, side="right"), len(probs) - 1))


def measure_tuples(
    source_labels: Sequence[int],
    tuple_sources: Sequence[Sequence[int]],
    N: int,
    d: int,
    rng: np.random.Generator,
) -> np.ndarray:
    """Measure every tuple in the ``(N, d)`` entangled basis.

    Parameters
    ----------
    source_labels
        Basis label of each source state.
    tuple_sources
        ``tuple_sources[t][l]`` is the source whose lane-``l`` particle sits
        in lane ``l`` of tuple ``t``. Each particle may be used once.

    Returns
    -------
    numpy.ndarray
        Outcome label per tuple, in input order.
    """
    size = check_family(N, d)
    basis_h = family_basis(N, d).conj().T
    used = set()
    for t, srcs in enumerate(tuple_sources):
        if len(srcs) != N:
            raise ProtocolError(f"tuple {t} has {len(srcs)} particles, expected {N}")
        for lane, s in enumerate(srcs):
            if not 0 <= s < len(source_labels):
                raise ProtocolError(f"tuple {t} refers to unknown source {s}")
            if (s, lane) in used:
                raise ProtocolError(f"particle (source {s}, lane {lane}) is measured twice")
            used.add((s, lane))

    where: dict[tuple[int, int], _Component] = {}
    opened: set[int] = set()
    outcomes = np.empty(len(tuple_sources), dtype=np.int64)
    states: dict[int, np.ndarray] = {}

    for t in _tuple_order(tuple_sources):
        srcs = tuple_sources[t]
        for s in dict.fromkeys(srcs):
            if s not in opened:
                opened.add(s)
                label = int(source_labels[s])
                if label not in states:
                    states[label] = label_state(label, N, d).reshape((d,) * N)
                comp = _Component(states[label], [(s, lane) for lane in range(N)])
                for key in comp.keys:
                    where[key] = comp
        wanted = [(s, lane) for lane, s in enumerate(srcs)]

        comps: list[_Component] = []
        for key in wanted:
            comp = where[key]
            if all(comp is not c for c in comps):
                comps.append(comp)
        if len(comps) == 1:
            merged = comps[0]
        else:
            tensor = comps[0].tensor
            keys = list(comps[0].keys)
            for comp in comps[1:]:
                tensor = np.multiply.outer(tensor, comp.tensor)
                keys.extend(comp.keys)
            merged = _Component(tensor, keys)
            for key in keys:
                where[key] = merged

        axes = [merged.keys.index(key) for key in wanted]
        rest_keys = [k for k in merged.keys if k not in set(wanted)]
        mat = np.moveaxis(merged.tensor, axes, list(range(N))).reshape(size, -1)
        amps = basis_h @ mat
        probs = np.einsum("ij,ij->i", amps, amps.conj()).real
        outcome = sample_outcome(probs, rng)
        outcomes[t] = outcome

        for key in wanted:
            del where[key]
        if rest_keys:
            rest = amps[outcome] / math.sqrt(probs[outcome])
            merged.tensor = rest.reshape((d,) * len(rest_keys))
            merged.keys = rest_keys
    return outcomes
