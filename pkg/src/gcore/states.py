"""Maximally entangled basis families and small dense linear algebra.

States are plain 1-D ``complex128`` numpy arrays, density operators and
unitaries are 2-D arrays. Subsystem 1 is the most significant digit of the
computational-basis index, so ``|j>|k>`` of two qudits sits at ``j*d + k``.

Basis labels are integers in ``[0, d**N)``:

* qubit families (``d == 2``) use the GHZ basis, label ``2*j + s`` where
  ``s`` is 0 for the ``+`` and 1 for the ``-`` combination, so labels read
  ``000, 001, ..., 111`` for ``psi_0^+, psi_0^-, ..., psi_3^-``;
* qudit families (``d >= 3``) use the label digits
  ``(i_1, ..., i_{N-1}, phase)`` read most significant first, so the two
  qutrit labels ``00, 01, 02, 10`` are ``psi_00, psi_10, psi_20, psi_01``.
"""
from __future__ import annotations

import functools
import math
from typing import Sequence

import numpy as np

from .errors import DomainError

MAX_DIM = 729
ALGEBRA_ATOL = 1e-12
TENSOR_ATOL = 1e-10

__all__ = [
    "MAX_DIM",
    "check_family",
    "family_size",
    "basis_ket",
    "ghz_basis_state",
    "qudit_bell_state",
    "multi_entangled_state",
    "label_digits",
    "digits_label",
    "label_name",
    "label_state",
    "family_basis",
    "canonical_phase",
    "equal_up_to_phase",
    "error_operator",
    "qutrit_transform_unitary",
    "apply_to_subsystem",
    "measure_in_family",
    "partial_trace",
    "reduced_density",
    "projector",
    "check_state",
    "check_density",
    "check_unitary",
    "pauli_vector_operator",
    "pauli_correlation",
    "gell_mann",
    "gellmann_operator",
    "gellmann_correlation",
    "local_observable",
    "correlation",
    "six_port_matrix",
]


def check_family(N: int, d: int) -> int:
    """Validate an ``(N, d)`` family and return its basis size ``d**N``."""
    if int(N) != N or int(d) != d:
        raise DomainError(f"family parameters must be integers, got N={N!r}, d={d!r}")
    if N < 2:
        raise DomainError(f"need at least 2 particles, got N={N}")
    if d < 2:
        raise DomainError(f"local dimension must be >= 2, got d={d}")
    size = d**N
    if size > MAX_DIM:
        raise DomainError(f"d**N = {size} exceeds the dimension cap {MAX_DIM}")
    return size


def family_size(N: int, d: int) -> int:
    return check_family(N, d)


def basis_ket(digits: Sequence[int], d: int) -> np.ndarray:
    """Computational basis vector ``|digits>`` (first digit most significant)."""
    index = 0
    for digit in digits:
        if not 0 <= digit < d:
            raise DomainError(f"digit {digit} out of range for d={d}")
        index = index * d + int(digit)
    vec = np.zeros(d ** len(digits), dtype=complex)
    vec[index] = 1.0
    return vec


def _sign_bit(sign) -> int:
    if sign in (1, "+", +1.0):
        return 0
    if sign in (-1, "-", -1.0):
        return 1
    raise DomainError(f"sign must be +1 or -1, got {sign!r}")


def ghz_basis_state(N: int, j: int, sign=+1) -> np.ndarray:
    """N-qubit GHZ basis state ``(|j>|0> +- |2^(N-1)-j-1>|1>)/sqrt(2)``.

    ``j`` is written with ``N-1`` binary digits on the first ``N-1`` qubits.
    """
    check_family(N, 2)
    half = 2 ** (N - 1)
    if not 0 <= j < half:
        raise DomainError(f"j must lie in [0, {half}), got {j}")
    s = _sign_bit(sign)
    vec = np.zeros(2**N, dtype=complex)
    vec[2 * j] = 1 / math.sqrt(2)
    vec[2 * (half - j - 1) + 1] = (-1) ** s / math.sqrt(2)
    return vec


def qudit_bell_state(d: int, n: int, m: int) -> np.ndarray:
    """Two-qudit Bell state ``sum_j w^(j n) |j>|j+m> / sqrt(d)``, ``w = e^(2 pi i/d)``."""
    return multi_entangled_state(d, 2, n, (m,))


def multi_entangled_state(d: int, N: int, phase: int, shifts: Sequence[int]) -> np.ndarray:
    """N-qudit state ``sum_j w^(j phase) |j>|j+i_1>...|j+i_(N-1)> / sqrt(d)``."""
    check_family(N, d)
    shifts = tuple(int(s) for s in shifts)
    if len(shifts) != N - 1:
        raise DomainError(f"expected {N - 1} shift indices, got {len(shifts)}")
    if not 0 <= phase < d or any(not 0 <= s < d for s in shifts):
        raise DomainError(f"indices must lie in [0, {d}): phase={phase}, shifts={shifts}")
    vec = np.zeros(d**N, dtype=complex)
    amp = 1 / math.sqrt(d)
    for j in range(d):
        index = j
        for s in shifts:
            index = index * d + (j + s) % d
        vec[index] += amp * np.exp(2j * np.pi * j * phase / d)
    return vec


def label_digits(label: int, N: int, d: int) -> tuple[int, ...]:
    """Base-``d`` digits of a label, most significant first (key symbol order)."""
    size = check_family(N, d)
    if not 0 <= label < size:
        raise DomainError(f"label {label} out of range [0, {size})")
    digits = []
    for _ in range(N):
        label, r = divmod(label, d)
        digits.append(r)
    return tuple(reversed(digits))


def digits_label(digits: Sequence[int], d: int) -> int:
    value = 0
    for digit in digits:
        if not 0 <= digit < d:
            raise DomainError(f"digit {digit} out of range for d={d}")
        value = value * d + int(digit)
    return value


def label_name(label: int, N: int, d: int) -> str:
    """Human-readable name, e.g. ``psi_3^-`` or ``psi_{1,0}^{2}``."""
    digits = label_digits(label, N, d)
    if d == 2:
        return f"psi_{label >> 1}^{'-' if label & 1 else '+'}"
    *shifts, phase = digits
    return f"psi_{{{','.join(map(str, shifts))}}}^{{{phase}}}"


def label_state(label: int, N: int, d: int) -> np.ndarray:
    """Basis state of the ``(N, d)`` family carrying ``label``."""
    digits = label_digits(label, N, d)
    if d == 2:
        return ghz_basis_state(N, label >> 1, -1 if label & 1 else +1)
    *shifts, phase = digits
    return multi_entangled_state(d, N, phase, shifts)


@functools.lru_cache(maxsize=None)
def family_basis(N: int, d: int) -> np.ndarray:
    """Matrix whose column ``k`` is :func:`label_state` ``(k, N, d)``. Read-only."""
    size = check_family(N, d)
    basis = np.empty((size, size), dtype=complex)
    for k in range(size):
        basis[:, k] = label_state(k, N, d)
    basis.setflags(write=False)
    return basis


def canonical_phase(state: np.ndarray, atol: float = ALGEBRA_ATOL) -> np.ndarray:
    """Rescale by a unit phase so the first nonzero amplitude is real positive."""
    state = np.asarray(state, dtype=complex)
    nz = np.flatnonzero(np.abs(state) > atol)
    if nz.size == 0:
        return state.copy()
    first = state[nz[0]]
    return state * (abs(first) / first)


def equal_up_to_phase(a: np.ndarray, b: np.ndarray, atol: float = ALGEBRA_ATOL) -> bool:
    return bool(np.allclose(canonical_phase(a, atol), canonical_phase(b, atol), rtol=0, atol=atol))


def error_operator(d: int, m: int, n: int) -> np.ndarray:
    """Qudit error operator ``U_{m,n} = sum_k w^(k n) |k+m><k|``.

    ``m`` is the shift (bit-flip like) index, ``n`` the phase index. Acting on
    the second subsystem of ``psi_00`` it yields ``qudit_bell_state(d, n, m)``.
    """
    if d < 2:
        raise DomainError(f"d must be >= 2, got {d}")
    if not (0 <= m < d and 0 <= n < d):
        raise DomainError(f"indices must lie in [0, {d}), got m={m}, n={n}")
    op = np.zeros((d, d), dtype=complex)
    for k in range(d):
        op[(k + m) % d, k] = np.exp(2j * np.pi * k * n / d)
    return op


_W = np.exp(2j * np.pi / 3)

# Printed single-qutrit transforms, keyed by (phase index, shift index).
_QUTRIT_TRANSFORMS = {
    (0, 0): [[1, 0, 0], [0, 1, 0], [0, 0, 1]],
    (1, 0): [[1, 0, 0], [0, _W, 0], [0, 0, _W**2]],
    (2, 0): [[1, 0, 0], [0, _W**2, 0], [0, 0, _W]],
    (0, 1): [[0, 0, 1], [1, 0, 0], [0, 1, 0]],
    (1, 1): [[0, 0, _W**2], [1, 0, 0], [0, _W, 0]],
    (2, 1): [[0, 0, _W], [1, 0, 0], [0, _W**2, 0]],
    (0, 2): [[0, 1, 0], [0, 0, 1], [1, 0, 0]],
    (1, 2): [[0, _W, 0], [0, 0, _W**2], [1, 0, 0]],
    (2, 2): [[0, _W**2, 0], [0, 0, _W], [1, 0, 0]],
}


def qutrit_transform_unitary(i: int, j: int) -> np.ndarray:
    """The tabulated 3x3 operator ``U_{ij}`` taking ``psi_00`` to ``psi_{ij}``.

    ``i`` is the phase index and ``j`` the shift index, matching the state
    naming of :func:`qudit_bell_state`.
    """
    if (i, j) not in _QUTRIT_TRANSFORMS:
        raise DomainError(f"qutrit transform indices must lie in {{0,1,2}}, got ({i}, {j})")
    return np.array(_QUTRIT_TRANSFORMS[(i, j)], dtype=complex)


def apply_to_subsystem(op: np.ndarray, state: np.ndarray, subsystem: int, dims: Sequence[int]) -> np.ndarray:
    """Apply a local operator to one subsystem (0-based) of a pure state."""
    dims = tuple(dims)
    state = np.asarray(state, dtype=complex)
    if state.shape != (math.prod(dims),):
        raise DomainError(f"state of length {state.size} does not match dims {dims}")
    if not 0 <= subsystem < len(dims) or op.shape != (dims[subsystem],) * 2:
        raise DomainError(f"operator of shape {op.shape} does not fit subsystem {subsystem} of {dims}")
    tensor = state.reshape(dims)
    out = np.tensordot(op, tensor, axes=([1], [subsystem]))
    return np.moveaxis(out, 0, subsystem).reshape(-1)


def check_state(state: np.ndarray, atol: float = ALGEBRA_ATOL) -> np.ndarray:
    state = np.asarray(state, dtype=complex)
    if state.ndim != 1:
        raise DomainError("state vector must be one-dimensional")
    norm = float(np.vdot(state, state).real)
    if abs(norm - 1) > atol:
        raise DomainError(f"state is not normalized (|psi|^2 = {norm})")
    return state


def check_density(rho: np.ndarray, atol: float = ALGEBRA_ATOL, eig_floor: float = -1e-10) -> np.ndarray:
    """Raise unless ``rho`` is Hermitian, unit trace and positive semidefinite."""
    rho = np.asarray(rho, dtype=complex)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise DomainError(f"density operator must be square, got shape {rho.shape}")
    if not np.allclose(rho, rho.conj().T, rtol=0, atol=atol):
        raise DomainError("density operator is not Hermitian")
    tr = np.trace(rho)
    if abs(tr - 1) > atol:
        raise DomainError(f"density operator trace is {tr}, expected 1")
    if np.linalg.eigvalsh(rho).min() < eig_floor:
        raise DomainError("density operator has a negative eigenvalue")
    return rho


def check_unitary(op: np.ndarray, atol: float = ALGEBRA_ATOL) -> np.ndarray:
    op = np.asarray(op, dtype=complex)
    if op.ndim != 2 or op.shape[0] != op.shape[1]:
        raise DomainError(f"operator must be square, got shape {op.shape}")
    if not np.allclose(op.conj().T @ op, np.eye(op.shape[0]), rtol=0, atol=atol):
        raise DomainError("operator is not unitary")
    return op


def projector(state: np.ndarray) -> np.ndarray:
    state = np.asarray(state, dtype=complex)
    return np.outer(state, state.conj())


def measure_in_family(state: np.ndarray, N: int, d: int) -> np.ndarray:
    """Outcome probabilities of a measurement in the ``(N, d)`` entangled basis.

    Accepts a pure state (1-D) or a density operator (2-D); returns an array
    indexed by label.
    """
    size = check_family(N, d)
    state = np.asarray(state, dtype=complex)
    basis = family_basis(N, d)
    if state.shape == (size,):
        probs = np.abs(basis.conj().T @ state) ** 2
    elif state.shape == (size, size):
        probs = np.einsum("ik,ij,jk->k", basis.conj(), state, basis).real
    else:
        raise DomainError(f"state of shape {state.shape} does not match family ({N}, {d})")
    return probs


def partial_trace(rho: np.ndarray, keep: Sequence[int], dims: Sequence[int]) -> np.ndarray:
    """Reduce ``rho`` to the subsystems in ``keep`` (0-based, kept in given order).

    Tracing out every subsystem returns a 1x1 matrix holding the trace.
    """
    dims = tuple(int(x) for x in dims)
    total = math.prod(dims)
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (total, total):
        raise DomainError(f"rho of shape {rho.shape} does not match dims {dims}")
    keep = [int(k) for k in keep]
    if len(set(keep)) != len(keep) or any(not 0 <= k < len(dims) for k in keep):
        raise DomainError(f"invalid subsystem selection {keep} for {len(dims)} subsystems")
    n = len(dims)
    tensor = rho.reshape(dims + dims)
    ket_idx = list(range(n))
    bra_idx = [i + n if i in keep else i for i in range(n)]
    out_idx = keep + [k + n for k in keep]
    reduced = np.einsum(tensor, ket_idx + bra_idx, out_idx)
    kept = math.prod(dims[k] for k in keep)
    return reduced.reshape(kept, kept)


def reduced_density(state: np.ndarray, keep: Sequence[int], dims: Sequence[int]) -> np.ndarray:
    """Partial trace of a pure state without forming the full density operator."""
    dims = tuple(dims)
    tensor = np.asarray(state, dtype=complex).reshape(dims)
    kept_tensor = np.moveaxis(tensor, list(keep), list(range(len(keep))))
    kdim = math.prod(dims[k] for k in keep)
    mat = kept_tensor.reshape(kdim, -1)
    return mat @ mat.conj().T


_PAULI = (
    np.array([[0, 1], [1, 0]], dtype=complex),
    np.array([[0, -1j], [1j, 0]], dtype=complex),
    np.array([[1, 0], [0, -1]], dtype=complex),
)


def pauli_vector_operator(direction: Sequence[float]) -> np.ndarray:
    """``sigma . a`` for a real 3-vector ``a``."""
    a = np.asarray(direction, dtype=float)
    if a.shape != (3,):
        raise DomainError(f"qubit direction needs 3 components, got {a.shape}")
    return a[0] * _PAULI[0] + a[1] * _PAULI[1] + a[2] * _PAULI[2]


def _gell_mann_table() -> tuple[np.ndarray, ...]:
    s3 = 1 / math.sqrt(3)
    mats = [
        [[0, 1, 0], [1, 0, 0], [0, 0, 0]],
        [[0, -1j, 0], [1j, 0, 0], [0, 0, 0]],
        [[1, 0, 0], [0, -1, 0], [0, 0, 0]],
        [[0, 0, 1], [0, 0, 0], [1, 0, 0]],
        [[0, 0, -1j], [0, 0, 0], [1j, 0, 0]],
        [[0, 0, 0], [0, 0, 1], [0, 1, 0]],
        [[0, 0, 0], [0, 0, -1j], [0, 1j, 0]],
        [[s3, 0, 0], [0, s3, 0], [0, 0, -2 * s3]],
    ]
    out = []
    for m in mats:
        arr = np.array(m, dtype=complex)
        arr.setflags(write=False)
        out.append(arr)
    return tuple(out)


_GELL_MANN = _gell_mann_table()


def gell_mann(index: int) -> np.ndarray:
    """Standard SU(3) generator ``lambda_index`` for ``index`` in 1..8."""
    if not 1 <= index <= 8:
        raise DomainError(f"Gell-Mann index must lie in 1..8, got {index}")
    return _GELL_MANN[index - 1].copy()


def gellmann_operator(direction: Sequence[float]) -> np.ndarray:
    """``S . M = sum_i M_i lambda_i`` for a real 8-vector ``M``."""
    m = np.asarray(direction, dtype=float)
    if m.shape != (8,):
        raise DomainError(f"qutrit direction needs 8 components, got {m.shape}")
    return np.tensordot(m, np.array(_GELL_MANN), axes=1)


def local_observable(direction: Sequence[float], d: int) -> np.ndarray:
    if d == 2:
        return pauli_vector_operator(direction)
    if d == 3:
        return gellmann_operator(direction)
    raise DomainError(f"correlation observables are defined for d in (2, 3), got {d}")


def correlation(state: np.ndarray, directions: Sequence[Sequence[float]], d: int) -> float:
    """Expectation of ``O_1 (x) ... (x) O_N`` in a pure state or density operator."""
    ops = [local_observable(v, d) for v in directions]
    obs = functools.reduce(np.kron, ops)
    state = np.asarray(state, dtype=complex)
    if state.shape == (obs.shape[0],):
        value = np.vdot(state, obs @ state)
    elif state.shape == obs.shape:
        value = np.trace(state @ obs)
    else:
        raise DomainError(f"state of shape {state.shape} does not fit {len(ops)} particles of dimension {d}")
    if abs(value.imag) > TENSOR_ATOL:
        raise ArithmeticError(f"expectation of a Hermitian observable came out complex: {value}")
    return float(value.real)


def pauli_correlation(state: np.ndarray, a, b, c) -> float:
    """``<psi| (sigma.a) (x) (sigma.b) (x) (sigma.c) |psi>`` for a 3-qubit state."""
    state = np.asarray(state, dtype=complex)
    if state.shape[0] != 8:
        raise DomainError(f"expected a 3-qubit state, got dimension {state.shape[0]}")
    return correlation(state, (a, b, c), 2)


def gellmann_correlation(state: np.ndarray, M, N) -> float:
    """``<psi| (S.M) (x) (S.N) |psi>`` for a 2-qutrit state."""
    state = np.asarray(state, dtype=complex)
    if state.shape[0] != 9:
        raise DomainError(f"expected a 2-qutrit state, got dimension {state.shape[0]}")
    return correlation(state, (M, N), 3)


def six_port_matrix() -> np.ndarray:
    """Unbiased six-port beam splitter ``T_kl = alpha^((k-1)(l-1)) / sqrt(3)``."""
    k = np.arange(3)
    return np.exp(2j * np.pi * np.outer(k, k) / 3) / math.sqrt(3)
