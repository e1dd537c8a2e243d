"""Built-in device constructors reproduce their published structure."""

import math

import numpy as np
import pytest

from heraldsim.analysis import analyze_device
from heraldsim.catalog import (
    BUILTIN_BUILDERS,
    build_builtin,
    build_cnot_pittman,
    build_klm_ns,
    special_state_S,
)
from heraldsim.cpmaps import success_probability
from heraldsim.fock import embed_product, inner
from heraldsim.nport import check_mode_unitarity, lift_apply


@pytest.fixture(scope="module")
def cnot():
    return build_cnot_pittman()


class TestKlmBuilder:
    def test_first_row_values(self):
        dev = build_klm_ns()
        row = dev.unitary.entries[0].real
        np.testing.assert_allclose(row, [-0.414214, 0.840896, 0.348311], atol=5e-7)
        np.testing.assert_allclose(
            row, [1 - math.sqrt(2), 2 ** -0.25, math.sqrt(3 / math.sqrt(2) - 2)], atol=1e-15
        )

    def test_matrix_unitary_at_machine_precision(self):
        ok, deviation = check_mode_unitarity(build_klm_ns().unitary.entries, tol=1e-12)
        assert ok and deviation < 1e-14

    def test_subspace_dimensions(self):
        assert build_klm_ns().subspace_in.dimension == 3
        assert build_klm_ns(extended=True).subspace_in.dimension == 4

    def test_single_identity_outcome(self):
        dev = build_klm_ns()
        assert dev.outcome_count == 1
        assert dev.outcomes[0].correction is None

    def test_end_to_end_verdicts(self):
        assert analyze_device(build_klm_ns()).operationally_unitary
        report = analyze_device(build_klm_ns(extended=True))
        assert not report.operationally_unitary
        taus = [o.tau for o in report.outcomes]
        # Mean of the three passing eigenvalues and the leaking fourth.
        expected = (3 * 0.25 + (2 * math.sqrt(2) - 2.5) ** 2) / 4
        assert taus[0] == pytest.approx(expected, abs=1e-12)


class TestCnotBuilder:
    def test_phase_permutation_matrix(self, cnot):
        m = cnot.unitary.entries
        for axis in (0, 1):
            counts = (np.abs(m) > 1e-14).sum(axis=axis)
            assert set(counts.tolist()) == {1}
        magnitudes = np.abs(m[np.abs(m) > 1e-14])
        np.testing.assert_allclose(magnitudes, 1.0, atol=1e-15)

    def test_sixteen_orthonormal_signatures(self, cnot):
        assert cnot.outcome_count == 16
        kets = [o.signature.kets[0] for o in cnot.outcomes]
        gram = np.array([[inner(u, v) for v in kets] for u in kets])
        np.testing.assert_allclose(gram, np.eye(16), atol=1e-12)

    def test_ancilla_photon_number(self, cnot):
        (p, chi), = cnot.ancilla_state.terms
        assert p == pytest.approx(1.0)
        assert {occ.total for occ in chi.terms} == {4}

    def test_every_branch_carries_six_photons(self, cnot):
        (_, chi), = cnot.ancilla_state.terms
        for b in cnot.subspace_in:
            joint = embed_product(
                [(b, cnot.input_computational), (chi, cnot.input_ancilla)],
                cnot.unitary.registry_in,
            )
            evolved = lift_apply(cnot.unitary, joint)
            assert {occ.total for occ in evolved.terms} == {6}

    def test_corrections_are_diagonal_signs(self, cnot):
        for outcome in cnot.outcomes:
            c = outcome.correction
            assert c is not None
            np.testing.assert_allclose(c, np.diag(np.diag(c)), atol=1e-12)
            np.testing.assert_allclose(np.abs(np.diag(c)), 1.0, atol=1e-12)
            np.testing.assert_allclose(np.diag(c).imag, 0.0, atol=1e-12)

    def test_end_to_end_verdict(self, cnot):
        report = analyze_device(cnot)
        assert report.operationally_unitary
        assert report.total_tau == pytest.approx(0.25, abs=1e-10)


class TestSpecialState:
    def test_three_photons_normalized(self):
        state = special_state_S()
        assert state.trace() == pytest.approx(1.0)
        vector = state.basis[0]
        assert vector.total_photons() == 3
        assert vector.norm() == pytest.approx(1.0)

    def test_blocked_on_every_outcome(self, cnot):
        state = special_state_S()
        for outcome in range(cnot.outcome_count):
            assert success_probability(cnot, outcome, state) <= 1e-12


class TestBuiltinRegistry:
    def test_names(self):
        assert set(BUILTIN_BUILDERS) == {"klm-ns", "klm-ns-extended", "cnot-pittman"}

    def test_unknown_name_raises(self):
        with pytest.raises(KeyError):
            build_builtin("warp-drive")
