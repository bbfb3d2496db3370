"""Frozen reference data typed in by hand from the printed state and table listings.

Nothing here is computed by the package; kets are given as
``(amplitude, digit string)`` terms and expanded with plain numpy.
"""
import cmath
import math

import numpy as np

W = cmath.exp(2j * math.pi / 3)
R2 = 1 / math.sqrt(2)
R3 = 1 / math.sqrt(3)


def ket(terms, d):
    n = len(terms[0][1])
    vec = np.zeros(d**n, dtype=complex)
    for amp, digits in terms:
        vec[int(digits, d)] += amp
    return vec


# 3-qubit GHZ basis in label order 000..111 = psi_0^+, psi_0^-, ..., psi_3^-
GHZ3 = [
    [(R2, "000"), (R2, "111")],
    [(R2, "000"), (-R2, "111")],
    [(R2, "010"), (R2, "101")],
    [(R2, "010"), (-R2, "101")],
    [(R2, "100"), (R2, "011")],
    [(R2, "100"), (-R2, "011")],
    [(R2, "110"), (R2, "001")],
    [(R2, "110"), (-R2, "001")],
]

# 2-qutrit Bell basis; labels 00, 01, 02, 10, ... name psi_00, psi_10, psi_20, psi_01, ...
QUTRIT2 = [
    [(R3, "00"), (R3, "11"), (R3, "22")],
    [(R3, "00"), (R3 * W, "11"), (R3 * W**2, "22")],
    [(R3, "00"), (R3 * W**2, "11"), (R3 * W, "22")],
    [(R3, "01"), (R3, "12"), (R3, "20")],
    [(R3, "01"), (R3 * W, "12"), (R3 * W**2, "20")],
    [(R3, "01"), (R3 * W**2, "12"), (R3 * W, "20")],
    [(R3, "02"), (R3, "10"), (R3, "21")],
    [(R3, "02"), (R3 * W, "10"), (R3 * W**2, "21")],
    [(R3, "02"), (R3 * W**2, "10"), (R3 * W, "21")],
]

# Printed 3-qutrit kets keyed by (n, m, k) for psi_{nm}^k. The last printed
# term of psi_22^2 reads |222>, which clashes with psi_00^0; the defining
# sum gives |211>, used here.
QUTRIT3 = {
    (0, 0, 0): [(R3, "000"), (R3, "111"), (R3, "222")],
    (0, 1, 0): [(R3, "001"), (R3, "112"), (R3, "220")],
    (0, 2, 0): [(R3, "002"), (R3, "110"), (R3, "221")],
    (2, 2, 2): [(R3, "022"), (R3 * W**2, "100"), (R3 * W, "211")],
}

# Rearrangement tables E_0..E_7 for three qubits, 1-indexed
QUBIT_TABLES = [
    [1, 2, 3, 4, 5, 6, 7, 8],
    [2, 1, 4, 3, 6, 5, 8, 7],
    [3, 4, 1, 2, 7, 8, 5, 6],
    [4, 3, 2, 1, 8, 7, 6, 5],
    [5, 6, 7, 8, 1, 2, 3, 4],
    [8, 7, 6, 5, 4, 3, 2, 1],
    [7, 8, 5, 6, 3, 4, 1, 2],
    [6, 5, 8, 7, 2, 1, 4, 3],
]

# Two-qutrit tables as printed (E_1's bottom row ends "2" in print; its cycle
# listing says 9 -> 1, which is what is frozen here)
QUTRIT2_TABLES = {
    0: [1, 2, 3, 4, 5, 6, 7, 8, 9],
    1: [2, 3, 4, 5, 6, 7, 8, 9, 1],
    2: [3, 4, 5, 6, 7, 8, 9, 1, 2],
    8: [9, 1, 2, 3, 4, 5, 6, 7, 8],
}

# Trit-string names of the 27 three-qutrit rearrangements, index order
QUTRIT3_NAMES = [
    "000", "001", "002", "100", "101", "102", "200", "201", "202",
    "010", "011", "012", "110", "111", "112", "210", "211", "212",
    "020", "021", "022", "120", "121", "122", "220", "221", "222",
]

# Key-block names of the 3-qubit operations
QUBIT_NAMES = ["000", "001", "010", "011", "100", "101", "110", "111"]


def ghz_correlation(label, a, b, c):
    """Closed-form <sigma.a sigma.b sigma.c> on a 3-qubit GHZ basis state."""
    def plus(v):
        return v[0] + 1j * v[1]

    def minus(v):
        return v[0] - 1j * v[1]

    j, s = label >> 1, label & 1
    pattern = {
        0: (minus, minus, minus),
        1: (minus, plus, minus),
        2: (plus, minus, minus),
        3: (plus, plus, minus),
    }[j]
    first = pattern[0](a) * pattern[1](b) * pattern[2](c)
    value = (first + np.conj(first)) / 2
    return float((-1) ** s * value.real)


def product_state_correlation(digits, a, b, c):
    sign = (-1) ** sum(int(x) for x in digits)
    return sign * a[2] * b[2] * c[2]


def qutrit_psi00_correlation(M, N):
    signs = [1, -1, 1, 1, -1, 1, -1, 1]
    return 2 / 3 * sum(s * m * n for s, m, n in zip(signs, M, N))
