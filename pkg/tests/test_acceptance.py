"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line."""
import itertools
import math
import time

import numpy as np

from gcore.analytics import ACCOUNTINGS, capacity, efficiency, verify_paper
from gcore.attacks import (
    AttackConfig,
    correlation_attack_mean,
    intercept_resend,
    misgrouped_density,
    paper_error_rate,
)
from gcore.cli import main
from gcore.cloner import (
    bob_fidelity,
    eve_fidelity,
    mutual_information,
    phase_covariant,
    security_threshold,
    symmetric_cloner,
)
from gcore.permutation import ControlKey
from gcore.protocol import SessionConfig, run_session
from gcore.states import (
    apply_to_subsystem,
    canonical_phase,
    error_operator,
    family_basis,
    ghz_basis_state,
    label_state,
    measure_in_family,
    multi_entangled_state,
    qudit_bell_state,
    qutrit_transform_unitary,
)

from oracles import GHZ3, QUTRIT2, QUTRIT3, ket


class Criterion:
    def __init__(self, number, title, budget=None):
        self.number, self.title, self.budget = number, title, budget
        self.failures = []
        self.start = time.perf_counter()

    def check(self, ok, what):
        if not ok:
            self.failures.append(what)

    def finish(self, capsys):
        elapsed = time.perf_counter() - self.start
        if self.budget is not None and elapsed >= self.budget:
            self.failures.append(f"runtime {elapsed:.2f}s over {self.budget}s")
        status = "FAIL" if self.failures else "PASS"
        detail = f" [{'; '.join(self.failures)}]" if self.failures else ""
        with capsys.disabled():
            print(f"\n{status}  criterion {self.number}: {self.title} ({elapsed:.2f}s){detail}")
        assert not self.failures, self.failures


def close_up_to_phase(a, b, tol):
    return np.abs(canonical_phase(a) - canonical_phase(b)).max() <= tol


def random_unit(rng, n):
    v = rng.normal(size=n)
    return v / np.linalg.norm(v)


def test_criterion_1_basis(capsys):
    c = Criterion(1, "basis orthonormality and explicit kets", budget=1.0)
    for N, d in [(3, 2), (2, 3), (3, 3)]:
        B = family_basis(N, d)
        c.check(np.abs(B.conj().T @ B - np.eye(d**N)).max() <= 1e-10, f"Gram ({N},{d})")
    for label, terms in enumerate(GHZ3):
        c.check(np.array_equal(ghz_basis_state(3, label >> 1, -1 if label & 1 else 1), ket(terms, 2)), f"GHZ {label}")
    for label, terms in enumerate(QUTRIT2):
        c.check(np.abs(label_state(label, 2, 3) - ket(terms, 3)).max() <= 1e-15, f"qutrit pair {label}")
    for (n, m, k), terms in QUTRIT3.items():
        c.check(np.abs(multi_entangled_state(3, 3, k, (n, m)) - ket(terms, 3)).max() <= 1e-15, f"qutrit triple {n}{m}{k}")
    c.finish(capsys)


def test_criterion_2_transforms(capsys):
    c = Criterion(2, "local transforms generate the Bell family", budget=1.0)
    psi00 = qudit_bell_state(3, 0, 0)
    for i, j in itertools.product(range(3), repeat=2):
        out = apply_to_subsystem(qutrit_transform_unitary(i, j), psi00, 1, (3, 3))
        c.check(close_up_to_phase(out, qudit_bell_state(3, i, j), 1e-12), f"U_{i}{j}")
    for d in range(2, 6):
        base = qudit_bell_state(d, 0, 0)
        for n, m in itertools.product(range(d), repeat=2):
            out = apply_to_subsystem(error_operator(d, m, n), base, 1, (d, d))
            c.check(close_up_to_phase(out, qudit_bell_state(d, n, m), 1e-12), f"d={d} U_{n}{m}")
    c.finish(capsys)


def test_criterion_3_honest_sessions(capsys):
    c = Criterion(3, "honest sessions agree exactly at 10^3 units", budget=10.0)
    for N, d, key in [(3, 2, "101"), (2, 3, "21")]:
        tr = run_session(SessionConfig(N=N, d=d, num_units=1000, control_key=ControlKey.parse(key, d), seed=1))
        c.check(tr.prepared == tr.measured and tr.label_errors == 0, f"({N},{d}) disagreement")
        c.check(tr.verdict == "clean", f"({N},{d}) verdict")
    c.finish(capsys)


def test_criterion_4_misgrouped_densities(capsys):
    c = Criterion(4, "mis-grouped densities and uniform outcomes")
    exact = 1e-15  # squared 1/sqrt(2) amplitudes leave one-ulp residue
    c.check(np.abs(misgrouped_density(3, 2, (1, 2, 3)) - np.eye(8) / 8).max() <= exact, "I/8")
    partial = np.kron(np.eye(2) / 2, np.diag([0.5, 0, 0, 0.5]))
    c.check(np.abs(misgrouped_density(3, 2, (1, 2, 2)) - partial).max() <= exact, "two-source GHZ regrouping")
    c.check(np.abs(misgrouped_density(2, 3, (1, 2)) - np.eye(9) / 9).max() <= exact, "I/9")
    p = measure_in_family(np.eye(8) / 8, 3, 2)
    c.check(np.abs(p - 0.125).max() <= 1e-12, "12.5% per outcome")
    c.finish(capsys)


def test_criterion_5_error_figures(capsys):
    c = Criterion(5, "error-rate figures and Monte Carlo at 10^4 units", budget=60.0)
    for D, k, printed in [(8, 3, "66.99"), (8, 2, "76.56"), (9, 2, "79.01")]:
        c.check(f"{100 * paper_error_rate(D, k):.2f}" == printed, f"{printed}%")
    for N, d, key in [(3, 2, "110"), (2, 3, "21")]:
        cfg = SessionConfig(N=N, d=d, num_units=10_000, control_key=ControlKey.parse(key, d), seed=2024,
                            adversary=AttackConfig())
        report, _ = intercept_resend(cfg)
        c.check(report.within_3_sigma, f"({N},{d}) empirical {report.empirical_error_rate} vs {report.oracle_error_rate}")
        conventions = report.to_dict()["error_rate"]
        c.check({"paper_convention", "raw_convention"} <= set(conventions), f"({N},{d}) conventions")
    c.finish(capsys)


def test_criterion_6_correlation_futility(capsys):
    c = Criterion(6, "correlation attack averages to zero")
    rng = np.random.default_rng(6)
    worst = 0.0
    for _ in range(100):
        qubit = [random_unit(rng, 3) for _ in range(3)]
        qutrit = [random_unit(rng, 8) for _ in range(2)]
        for source in ("uniform", "uncorrelated"):
            worst = max(worst, abs(correlation_attack_mean(3, 2, qubit, source)))
            worst = max(worst, abs(correlation_attack_mean(2, 3, qutrit, source)))
    c.check(worst <= 1e-10, f"max |mean| {worst}")
    c.finish(capsys)


def test_criterion_7_cloner(capsys):
    c = Criterion(7, "cloning machine fidelities")
    F = bob_fidelity(symmetric_cloner(math.sqrt(2 / 3), 1 / math.sqrt(24)))[0]
    c.check(abs(F - 0.75) <= 1e-12, f"universal F {F}")
    rng = np.random.default_rng(7)
    worst = 0.0
    for _ in range(100):
        v, x, y, z = rng.normal(size=4)
        n = math.sqrt(v * v + 2 * x * x + 3 * y * y + 3 * z * z)
        worst = max(worst, abs(sum(bob_fidelity(phase_covariant(v / n, x / n, y / n, z / n))) - 1))
    c.check(worst <= 1e-12, f"F + D1 + D2 off by {worst}")
    c.check(abs(eve_fidelity(1, 0) - 1 / 3) <= 1e-12, "F_E(1, 0)")
    c.finish(capsys)


def test_criterion_8_threshold(capsys):
    c = Criterion(8, "security threshold", budget=1.0)
    t3 = security_threshold(3)
    c.check(abs(t3.F_numeric - 0.5 * (1 + 1 / math.sqrt(3))) <= 1e-9, f"F* {t3.F_numeric}")
    t2 = security_threshold(2)
    c.check(abs((1 - t2.F_numeric) - 0.5 * (1 - 1 / math.sqrt(2))) <= 1e-9, f"D_qubit {1 - t2.F_numeric}")
    # direct evaluation of the information formula at F*
    fs, d = t3.F_star, 3
    direct = math.log2(d) + fs * math.log2(fs) + (1 - fs) * math.log2((1 - fs) / (d - 1))
    c.check(abs(direct - mutual_information(fs)) <= 1e-12, "formula mismatch")
    c.check(abs(direct - 0.6295) <= 5e-4, f"I(F*) {direct}")
    c.finish(capsys)


def test_criterion_9_efficiency_capacity(capsys):
    c = Criterion(9, "efficiency and capacity")
    for name, eta in [("gcore", 1.0), ("bb84", 0.25), ("epr", 0.5)]:
        c.check(efficiency(ACCOUNTINGS[name]()) == eta, name)
    for N, d, bits in [(2, 2, 2.0), (3, 2, 3.0), (2, 3, math.log2(9)), (3, 3, math.log2(27))]:
        c.check(capacity(1, N, d)[0] == bits, f"capacity ({N},{d})")
    c.finish(capsys)


def test_criterion_10_determinism(capsys, tmp_path):
    c = Criterion(10, "byte-identical reports and verify-paper")
    outs = []
    for name in ("a", "b"):
        path = tmp_path / f"{name}.json"
        main(["attack", "--units", "50", "--seed", "77", "--key", "011", "--trials", "2", "--threads", "2",
              "--out", str(path)])
        outs.append(path.read_bytes())
    c.check(outs[0] == outs[1], "attack reports differ")
    for name in ("c", "d"):
        main(["run", "-N", "2", "-d", "3", "--units", "20", "--key", "12", "--seed", "5",
              "--out", str(tmp_path / f"{name}.json")])
    c.check((tmp_path / "c.json").read_bytes() == (tmp_path / "d.json").read_bytes(), "run reports differ")
    code = main(["verify-paper"])
    capsys.readouterr()
    c.check(code == 0, f"verify-paper exit {code}")
    c.check(all(item.passed for item in verify_paper()), "ledger item failed")
    c.finish(capsys)
