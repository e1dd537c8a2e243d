"""Acceptance criteria, one test per criterion, each printing a verdict line.

Run with ``pytest tests/test_acceptance.py -s`` to see every line; every
tolerance is fixed here, nothing is calibrated at runtime.
"""

import dataclasses
import json
import math

import numpy as np
import pytest
from scipy.linalg import expm
from scipy.stats import unitary_group

from heraldsim.analysis import (
    analyze_device,
    proportionality_check,
    randomized_d_probe,
    w_matrices,
)
from heraldsim.catalog import build_cnot_pittman, build_klm_ns, special_state_S
from heraldsim.cli import main
from heraldsim.cpmaps import (
    DensityOperator,
    Outcome,
    conditional_output,
    success_probability,
)
from heraldsim.devicefile import ReportFile
from heraldsim.fock import FockVector, ModeRegistry, OccupationVector, enumerate_sector, inner
from heraldsim.nport import ModeUnitary, amplitude_permanent, lift_apply

CNOT_PERMUTATION = np.array(
    [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex
)


def check(number, description, ok):
    print(f"criterion {number}: {'PASS' if ok else 'FAIL'} - {description}")
    assert ok, f"criterion {number} failed: {description}"


@pytest.fixture(scope="module")
def klm():
    return build_klm_ns()


@pytest.fixture(scope="module")
def cnot():
    return build_cnot_pittman()


def haar_state(basis, rng):
    c = rng.standard_normal(basis.dimension) + 1j * rng.standard_normal(basis.dimension)
    c /= np.linalg.norm(c)
    return c, DensityOperator.from_state(basis, c)


def test_criterion_1_klm_verdict(tmp_path, klm):
    out_path = tmp_path / "klm.json"
    code = main(["analyze", "--builtin", "klm-ns", "--format", "json", "--out", str(out_path)])
    report = ReportFile.model_validate_json(out_path.read_text())
    ok = code == 0 and report.overall_verdict == "operationally-unitary"

    from heraldsim.analysis import test_operator as build_test_operator

    t = build_test_operator(klm, 0)
    ok = ok and float(np.max(np.abs(t.matrix - np.eye(3) / 4))) <= 1e-10

    dim = 3
    w = np.array([complex(re, im) for re, im in report.w_matrix]).reshape(dim, dim)
    ok = ok and float(np.max(np.abs(w - np.diag([1, 1, -1])))) <= 1e-9
    check(1, "nonlinear-sign gate: unitary verdict, T = I/4, w = diag(1,1,-1)", ok)


def test_criterion_2_klm_transformation_law(klm):
    rng = np.random.default_rng(101)
    flip = np.diag([1.0, 1.0, -1.0])
    ok = True
    for _ in range(20):
        c, rho = haar_state(klm.subspace_in, rng)
        d = success_probability(klm, 0, rho)
        ok = ok and abs(d - 0.25) <= 1e-10
        target = flip @ c
        expected = np.outer(target, target.conj())
        got = conditional_output(klm, 0, rho).in_basis(klm.subspace_out)
        ok = ok and float(np.max(np.abs(got - expected))) <= 1e-9
    check(2, "20 random states map by the sign flip with probability 1/4", ok)


def test_criterion_3_klm_breakdown():
    report = analyze_device(build_klm_ns(extended=True))
    from heraldsim.analysis import test_operator as build_test_operator

    eigenvalues = build_test_operator(build_klm_ns(extended=True), 0).eigenvalues
    leak = (2 * math.sqrt(2) - 2.5) ** 2
    ok = not report.operationally_unitary
    ok = ok and abs(float(eigenvalues.min()) - leak) <= 1e-9
    check(3, "extended subspace fails with fourth eigenvalue (2*sqrt(2)-5/2)^2", ok)


def test_criterion_4_klm_effective_action(klm):
    report = analyze_device(klm)
    w = report.common_w
    published = np.diag([0.0, 2 * math.pi, 3 * math.pi])
    ok = float(np.max(np.abs(expm(-1j * published) - w))) <= 1e-12
    principal = report.action.generator
    ok = ok and float(np.max(np.abs(expm(-1j * principal) - w))) <= 1e-9
    check(4, "published quadratic action and principal branch both regenerate w", ok)


def test_criterion_5_cnot_verdict(cnot):
    from heraldsim.analysis import test_operator as build_test_operator

    ok = True
    for outcome in range(16):
        t = build_test_operator(cnot, outcome)
        ok = ok and float(np.max(np.abs(t.matrix - np.eye(4) / 64))) <= 1e-10
    report = analyze_device(cnot)
    ok = ok and abs(report.total_tau - 0.25) <= 1e-10
    family = w_matrices(cnot, cnot.subspace_out)
    members = list(family.entries.values())
    ok = ok and len(members) == 16
    for member in members:
        ok = ok and float(np.max(np.abs(member - members[0]))) <= 1e-9
        ok = ok and float(np.max(np.abs(member - CNOT_PERMUTATION))) <= 1e-9
    check(5, "CNOT: all 16 tests = I/64, total tau = 1/4, corrected family = permutation", ok)


def test_criterion_6_cnot_without_corrections(cnot):
    stripped = dataclasses.replace(
        cnot, outcomes=tuple(Outcome(o.signature, None) for o in cnot.outcomes)
    )
    family = w_matrices(stripped, stripped.subspace_out)
    result = proportionality_check(family)
    ok = (not result.passed) and result.singular_ratio > 0.1
    check(6, "without feed-forward the matrix family is not proportional", ok)


def test_criterion_7_cnot_blocked_state(cnot):
    state = special_state_S()
    ok = all(
        success_probability(cnot, outcome, state) <= 1e-12 for outcome in range(16)
    )
    check(7, "extra-photon probe state never heralds success", ok)


def test_criterion_8_cnot_effective_action(cnot):
    # Published generator: (pi/2) * n_a x (3 + flip_b) on the logical basis,
    # with the flip built from truncated ladder operators.
    lower = np.array([[0.0, 1.0], [0.0, 0.0]])
    raise_ = lower.T
    number = np.diag([0.0, 1.0])
    one = np.eye(2)
    flip = raise_ @ (one - number) + (one - number) @ lower
    published = (math.pi / 2) * np.kron(number, 3 * one + flip)
    ok = float(np.max(np.abs(expm(-1j * published) - CNOT_PERMUTATION))) <= 1e-9
    report = analyze_device(cnot)
    ok = ok and float(np.max(np.abs(expm(-1j * published) - report.common_w))) <= 1e-9
    check(8, "published CNOT action regenerates the logical permutation", ok)


def test_criterion_9_property_suite(klm, cnot):
    rng = np.random.default_rng(102)
    ok = True

    # Photon-number conservation through random networks.
    for modes in (2, 4):
        reg_in = ModeRegistry(tuple(f"i{k}" for k in range(modes)))
        reg_out = ModeRegistry(tuple(f"o{k}" for k in range(modes)))
        u = ModeUnitary(reg_in, reg_out, unitary_group.rvs(modes, random_state=rng))
        for n in (1, 3):
            for occ in enumerate_sector(reg_in, n)[:4]:
                lifted = lift_apply(u, FockVector.basis_state(reg_in, occ))
                ok = ok and all(o.total == n for o in lifted.terms)

    # Lifted-sector unitarity at 1e-9.
    reg_in = ModeRegistry(("i0", "i1", "i2"))
    reg_out = ModeRegistry(("o0", "o1", "o2"))
    u = ModeUnitary(reg_in, reg_out, unitary_group.rvs(3, random_state=rng))
    sector = enumerate_sector(reg_in, 3)
    matrix = np.zeros((len(sector), len(sector)), dtype=complex)
    for col, occ in enumerate(sector):
        lifted = lift_apply(u, FockVector.basis_state(reg_in, occ))
        for row, target in enumerate(sector):
            matrix[row, col] = lifted.terms.get(OccupationVector(target), 0j)
    ok = ok and float(np.max(np.abs(matrix @ matrix.conj().T - np.eye(len(sector))))) <= 1e-9

    # Permanent oracle equivalence on 200 random amplitude pairs.
    for _ in range(200):
        modes = int(rng.integers(2, 7))
        photons = int(rng.integers(1, 5))
        reg_a = ModeRegistry(tuple(f"a{k}" for k in range(modes)))
        reg_b = ModeRegistry(tuple(f"b{k}" for k in range(modes)))
        u = ModeUnitary(reg_a, reg_b, unitary_group.rvs(modes, random_state=rng))
        sector = enumerate_sector(reg_a, photons)
        occ_in = sector[rng.integers(len(sector))]
        occ_out = sector[rng.integers(len(sector))]
        direct = inner(
            FockVector.basis_state(reg_b, occ_out),
            lift_apply(u, FockVector.basis_state(reg_a, occ_in)),
        )
        ok = ok and abs(direct - amplitude_permanent(u, occ_in, occ_out)) <= 1e-10

    # Trace preservation of the conditional output at 1e-10.
    for dev, outcome in ((klm, 0), (cnot, 11)):
        _, rho = haar_state(dev.subspace_in, rng)
        ok = ok and abs(conditional_output(dev, outcome, rho).trace() - 1.0) <= 1e-10

    # Convexity identity on random mixtures at 1e-9.
    for dev, outcome in ((klm, 0), (cnot, 2)):
        _, rho_a = haar_state(dev.subspace_in, rng)
        _, rho_b = haar_state(dev.subspace_in, rng)
        x = float(rng.uniform())
        mix = DensityOperator(
            dev.subspace_in, x * rho_a.matrix + (1 - x) * rho_b.matrix
        )
        d_a = success_probability(dev, outcome, rho_a)
        d_b = success_probability(dev, outcome, rho_b)
        blend = (
            x * d_a * conditional_output(dev, outcome, rho_a).matrix
            + (1 - x) * d_b * conditional_output(dev, outcome, rho_b).matrix
        ) / (x * d_a + (1 - x) * d_b)
        mixed = conditional_output(dev, outcome, mix).matrix
        ok = ok and float(np.max(np.abs(mixed - blend))) <= 1e-9

    # Randomized probe agrees with the test verdicts on the catalog.
    ok = ok and randomized_d_probe(klm, 0, trials=25, rng=7) <= 1e-9
    for outcome in (0, 8, 15):
        ok = ok and randomized_d_probe(cnot, outcome, trials=10, rng=8) <= 1e-9
    ok = ok and randomized_d_probe(build_klm_ns(extended=True), 0, trials=25, rng=9) > 1e-9

    check(9, "property suite: conservation, isometry, oracle, traces, convexity, probe", ok)


def test_criterion_10_hong_ou_mandel():
    reg = ModeRegistry(("left", "right"))
    u = ModeUnitary(reg, reg, np.array([[1, 1], [1, -1]]) / math.sqrt(2))
    lifted = lift_apply(u, FockVector.basis_state(reg, (1, 1)))
    via_expansion = lifted.terms.get(OccupationVector((1, 1)), 0j)
    via_permanent = amplitude_permanent(u, OccupationVector((1, 1)), OccupationVector((1, 1)))
    ok = abs(via_expansion) <= 1e-12 and abs(via_permanent) <= 1e-12
    ok = ok and abs(via_expansion - via_permanent) <= 1e-12
    check(10, "balanced beamsplitter cancels the coincidence amplitude both ways", ok)
