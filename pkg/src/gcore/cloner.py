"""Phase-covariant cloning of a single qudit and the information balance it sets.

A cloner is described by a ``d x d`` amplitude matrix ``a[m, n]``: the clone
sent to Bob is the mixture of Weyl errors ``U_{m,n}`` weighted by
``|a[m, n]|**2``, the clone Eve keeps is weighted by the Fourier dual. Row
index ``m`` selects the shift, column index ``n`` the phase.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.optimize import brentq

from .errors import DomainError

NORM_ATOL = 1e-12


@dataclass(frozen=True)
class ClonerAmplitudes:
    matrix: np.ndarray

    def __post_init__(self):
        a = np.array(self.matrix, dtype=complex)
        if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] < 2:
            raise DomainError(f"amplitudes must form a square matrix of size >= 2, got shape {a.shape}")
        norm = float(np.sum(np.abs(a) ** 2))
        if abs(norm - 1) > NORM_ATOL:
            raise DomainError(f"amplitudes are not normalized: sum |a|^2 = {norm!r}")
        a.setflags(write=False)
        object.__setattr__(self, "matrix", a)

    @property
    def d(self) -> int:
        return self.matrix.shape[0]

    @property
    def weights(self) -> np.ndarray:
        return np.abs(self.matrix) ** 2


def phase_covariant(v: float, x: float, y: float, z: float) -> ClonerAmplitudes:
    """Qutrit cloner with rows ``(v, x, x)``, ``(y, y, y)``, ``(z, z, z)``."""
    return ClonerAmplitudes(np.array([[v, x, x], [y, y, y], [z, z, z]], dtype=float))


def symmetric_cloner(v: float, x: float) -> ClonerAmplitudes:
    """Qutrit cloner with ``a[0,0] = v`` and every other entry ``x``."""
    _check_vx(v, x)
    a = np.full((3, 3), x, dtype=float)
    a[0, 0] = v
    return ClonerAmplitudes(a)


def _check_vx(v: float, x: float) -> None:
    if abs(v * v + 8 * x * x - 1) > NORM_ATOL:
        raise DomainError(f"need v^2 + 8x^2 = 1, got {v * v + 8 * x * x!r}")


def cloner_for_fidelity(F: float) -> tuple[float, float]:
    """Non-negative ``(v, x)`` on ``v^2 + 8x^2 = 1`` giving Bob fidelity ``F``."""
    if not 1 / 3 <= F <= 1:
        raise DomainError(f"fidelity must lie in [1/3, 1], got {F}")
    return math.sqrt((4 * F - 1) / 3), math.sqrt((1 - F) / 6)


def fourier_dual(a: ClonerAmplitudes) -> ClonerAmplitudes:
    """``b[m, n] = (1/d) sum_{x,y} exp(2 pi i (n x - m y) / d) a[x, y]``."""
    d = a.d
    w = np.exp(2j * np.pi * np.outer(np.arange(d), np.arange(d)) / d)
    b = w.conj() @ a.matrix.T @ w / d
    return ClonerAmplitudes(b)


def bob_fidelity(a: ClonerAmplitudes) -> tuple[float, float, float]:
    """``(F, D_1, D_2)``: phase-error-free weight and the two phase-error weights.

    Column sums of ``|a|^2``; for the ``(v, x, y, z)`` pattern this gives
    ``F = v^2 + y^2 + z^2`` and ``D_1 = D_2 = x^2 + y^2 + z^2``.
    """
    if a.d != 3:
        raise DomainError("fidelity/disturbance split is defined for qutrits")
    cols = a.weights.sum(axis=0)
    return float(cols[0]), float(cols[1]), float(cols[2])


def computational_fidelity(a: ClonerAmplitudes) -> float:
    """Clone fidelity for computational-basis inputs (shift-free weight)."""
    return float(a.weights[0].sum())


def second_clone_fidelity(v: float, x: float, y: float, z: float | None = None) -> tuple[float, float]:
    """``(F_B, D_B)`` of the second clone for the ``(v, x, y, y)`` pattern."""
    if z is not None and abs(y - z) > NORM_ATOL:
        raise DomainError(f"closed form needs y = z, got y={y}, z={z}")
    fb = (v * v + 2 * x * x + 12 * y * y + 8 * x * y + 4 * v * y) / 3
    db = (v * v + 2 * x * x + 3 * y * y - 4 * x * y - 2 * v * y) / 3
    return fb, db


def eve_fidelity(v: float, x: float) -> float:
    _check_vx(v, x)
    return ((v + 8 * x) ** 2 + 2 * (v - x) ** 2) / 9


def optimal_eve_fidelity(F: float, d: int = 3) -> float:
    """Largest fidelity Eve can reach while Bob keeps fidelity ``F``."""
    if d < 2:
        raise DomainError(f"dimension must be >= 2, got {d}")
    if not 1 / d - 1e-15 <= F <= 1:
        raise DomainError(f"fidelity must lie in [1/{d}, 1], got {F}")
    F = min(max(F, 1 / d), 1.0)
    return F / d + (d - 1) * (1 - F) / d + (2 / d) * math.sqrt((d - 1) * F * (1 - F))


@dataclass(frozen=True)
class OptimalCloner:
    v_literal: float
    x_literal: float
    literal_norm: float  # v^2 + 8x^2 of the literal pair
    v: float
    x: float
    eve_fidelity: float


def optimal_cloner(F: float) -> OptimalCloner:
    """Qutrit optimal-cloner parameters for Bob fidelity ``F``.

    The printed pair ``(v, x) = (F, sqrt(F(1-F)/2))`` is off the constraint
    surface ``v^2 + 8x^2 = 1``; it is kept verbatim and also scaled back onto
    the surface along its ray. ``eve_fidelity`` is the closed-form optimum.
    """
    if not 1 / 3 <= F <= 1:
        raise DomainError(f"fidelity must lie in [1/3, 1], got {F}")
    v0, x0 = F, math.sqrt(F * (1 - F) / 2)
    norm = v0 * v0 + 8 * x0 * x0
    scale = 1 / math.sqrt(norm)
    return OptimalCloner(v0, x0, norm, v0 * scale, x0 * scale, optimal_eve_fidelity(F, 3))


def _xlog2(p: float) -> float:
    return 0.0 if p == 0 else p * math.log2(p)


def mutual_information(F: float, d: int = 3) -> float:
    """``log2 d + F log2 F + (1-F) log2((1-F)/(d-1))`` with ``0 log 0 = 0``."""
    if d < 2:
        raise DomainError(f"dimension must be >= 2, got {d}")
    if not 0 <= F <= 1:
        raise DomainError(f"fidelity must lie in [0, 1], got {F}")
    wrong = 0.0 if F == 1 else (1 - F) * math.log2((1 - F) / (d - 1))
    # clamp the rounding residue at the uniform point F = 1/d
    return min(max(math.log2(d) + _xlog2(F) + wrong, 0.0), math.log2(d))


def threshold_closed_form(d: int) -> float:
    return 0.5 * (1 + 1 / math.sqrt(d))


@dataclass(frozen=True)
class Threshold:
    d: int
    F_star: float
    D_star: float
    F_numeric: float
    information: float


def information_gap(F: float, d: int = 3) -> float:
    return mutual_information(F, d) - mutual_information(optimal_eve_fidelity(F, d), d)


def security_threshold(d: int) -> Threshold:
    """Fidelity where Bob's and Eve's information coincide, in closed form and by root finding."""
    if d not in (2, 3):
        raise DomainError(f"threshold is supported for d in {{2, 3}}, got {d}")
    closed = threshold_closed_form(d)
    # the gap is negative just above 1/d and positive at 1
    numeric = brentq(information_gap, 1 / d + 1e-9, 1.0, args=(d,), xtol=1e-15, rtol=4 * np.finfo(float).eps)
    return Threshold(d, closed, 1 - closed, float(numeric), mutual_information(closed, d))


def is_secure(F: float, d: int = 3) -> bool:
    """One-way key distillation is possible iff Bob knows more than Eve."""
    return mutual_information(F, d) > mutual_information(optimal_eve_fidelity(F, d), d)


def cloner_curve(grid: Sequence[float] | int = 201, d: int = 3) -> list[tuple[float, float, float, float]]:
    """Rows ``(F, F_E, I_AB, I_AE)``; an int means that many uniform points on ``[1/d, 1]``."""
    if isinstance(grid, (int, np.integer)):
        if grid < 2:
            raise DomainError(f"need at least two grid points, got {grid}")
        grid = np.linspace(1 / d, 1, int(grid))
    rows = []
    for F in grid:
        F = float(F)
        if not 1 / d - 1e-15 <= F <= 1:
            raise DomainError(f"grid point {F} outside [1/{d}, 1]")
        fe = optimal_eve_fidelity(F, d)
        rows.append((F, fe, mutual_information(F, d), mutual_information(fe, d)))
    return rows


CURVE_HEADER = ("F", "F_E", "I_AB", "I_AE")


def curve_csv(rows: Sequence[Sequence[float]]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CURVE_HEADER)
    for row in rows:
        writer.writerow([repr(float(v)) for v in row])
    return buf.getvalue()
