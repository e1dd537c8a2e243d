"""Conditional maps: evolve, project on a detection signature, trace, normalize.

A conditional device evolves the computational input together with a fixed
ancilla state through a mode network, then conditions on detecting one of a
set of orthogonal signatures in the output-ancilla modes. Tracing out those
modes and renormalizing yields the conditional output state; its success
probability is linear in the input density operator.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import DeviceValidationError, ModeMismatchError, ZeroSuccessError
from .fock import (
    FockSubspaceBasis,
    FockVector,
    ModeRegistry,
    OccupationVector,
    embed_product,
    inner,
    partial_inner,
)
from .nport import DEFAULT_PHOTON_CAP, ModeUnitary, check_mode_unitarity, lift_apply

HERMITICITY_TOL = 1e-12
POSITIVITY_TOL = 1e-10
TRACE_TOL = 1e-10
PROBABILITY_SUM_TOL = 1e-10
KET_NORM_TOL = 1e-10
CORRECTION_UNITARITY_TOL = 1e-12
SIGNATURE_ORTHONORMALITY_TOL = 1e-10

# Success probabilities at or below this are treated as zero: the
# conditional map is undefined there.
ZERO_SUCCESS_TOL = 1e-12


@dataclass(frozen=True)
class DensityOperator:
    """Positive operator expressed over an explicit support basis.

    States carry unit trace; intermediate positive operators (before
    renormalization) are tagged ``unnormalized`` and skip the trace check.
    """

    basis: FockSubspaceBasis
    matrix: np.ndarray
    unnormalized: bool = False

    def __post_init__(self) -> None:
        matrix = np.array(self.matrix, dtype=complex)
        matrix.setflags(write=False)
        object.__setattr__(self, "matrix", matrix)
        d = self.basis.dimension
        if matrix.shape != (d, d):
            raise DeviceValidationError(
                f"density matrix shape {matrix.shape} does not match basis dimension {d}"
            )
        if d == 0:
            return
        if float(np.max(np.abs(matrix - matrix.conj().T))) > HERMITICITY_TOL:
            raise DeviceValidationError("density matrix is not Hermitian")
        eigenvalues = np.linalg.eigvalsh(matrix)
        if float(eigenvalues.min()) < -POSITIVITY_TOL:
            raise DeviceValidationError(
                f"density matrix is not positive: min eigenvalue {eigenvalues.min():.3e}"
            )
        if not self.unnormalized and abs(float(np.trace(matrix).real) - 1.0) > TRACE_TOL:
            raise DeviceValidationError(
                f"state trace {np.trace(matrix).real!r} differs from 1"
            )

    @property
    def dimension(self) -> int:
        return self.basis.dimension

    def trace(self) -> float:
        return float(np.trace(self.matrix).real)

    def purity(self) -> float:
        return float(np.trace(self.matrix @ self.matrix).real)

    def in_basis(self, other: FockSubspaceBasis) -> np.ndarray:
        """Matrix elements of this operator between vectors of ``other``."""
        overlap = np.array(
            [[inner(b, a) for a in other] for b in self.basis], dtype=complex
        )
        return overlap.conj().T @ self.matrix @ overlap

    @staticmethod
    def from_state(basis: FockSubspaceBasis, coefficients: Sequence[complex]) -> "DensityOperator":
        """Pure-state dyad from coefficients over ``basis``."""
        c = np.asarray(coefficients, dtype=complex)
        if c.shape != (basis.dimension,):
            raise DeviceValidationError("coefficient length does not match basis dimension")
        n = np.linalg.norm(c)
        if n == 0:
            raise DeviceValidationError("cannot form a state from zero coefficients")
        c = c / n
        return DensityOperator(basis, np.outer(c, c.conj()))

    @staticmethod
    def pure(vector: FockVector) -> "DensityOperator":
        """Dyad of a single (normalized copy of a) Fock vector."""
        return DensityOperator(FockSubspaceBasis([vector.normalized()]), np.eye(1, dtype=complex))

    @staticmethod
    def maximally_mixed(basis: FockSubspaceBasis) -> "DensityOperator":
        d = basis.dimension
        return DensityOperator(basis, np.eye(d, dtype=complex) / d)


@dataclass(frozen=True)
class AncillaDecomposition:
    """Convex decomposition of the ancilla state into weighted pure terms."""

    terms: tuple[tuple[float, FockVector], ...]
    source: str = "explicit"

    def __post_init__(self) -> None:
        terms = tuple((float(p), ket) for p, ket in self.terms)
        object.__setattr__(self, "terms", terms)
        if not terms:
            raise DeviceValidationError("ancilla decomposition needs at least one term")
        registry = terms[0][1].registry
        total = 0.0
        for p, ket in terms:
            if p < 0:
                raise DeviceValidationError(f"ancilla weight {p} is negative")
            if ket.registry != registry:
                raise ModeMismatchError("ancilla terms live on different registries")
            if abs(ket.norm() - 1.0) > KET_NORM_TOL:
                raise DeviceValidationError(
                    f"ancilla ket norm {ket.norm():.12f} differs from 1"
                )
            total += p
        if abs(total - 1.0) > PROBABILITY_SUM_TOL:
            raise DeviceValidationError(f"ancilla weights sum to {total!r}, expected 1")

    @property
    def registry(self) -> ModeRegistry:
        return self.terms[0][1].registry

    @staticmethod
    def pure(ket: FockVector) -> "AncillaDecomposition":
        return AncillaDecomposition(((1.0, ket.normalized()),))

    @staticmethod
    def from_density(matrix: np.ndarray, basis: FockSubspaceBasis) -> "AncillaDecomposition":
        """Spectral decomposition of a raw ancilla density matrix."""
        m = np.asarray(matrix, dtype=complex)
        if m.shape != (basis.dimension, basis.dimension):
            raise DeviceValidationError("ancilla matrix shape does not match basis dimension")
        eigenvalues, vectors = np.linalg.eigh(m)
        terms = []
        for k in range(len(eigenvalues)):
            p = float(eigenvalues[k])
            if p < ZERO_SUCCESS_TOL:
                continue
            ket = FockVector(basis.registry, {})
            for j, b in enumerate(basis):
                ket = ket + complex(vectors[j, k]) * b
            terms.append((p, ket.normalized()))
        return AncillaDecomposition(tuple(terms), source="spectral")


@dataclass(frozen=True)
class DetectionSignature:
    """Orthonormal kets on the output-ancilla modes whose detection heralds success."""

    kets: tuple[FockVector, ...]

    def __post_init__(self) -> None:
        kets = tuple(self.kets)
        object.__setattr__(self, "kets", kets)
        if not kets:
            raise DeviceValidationError("a detection signature needs at least one ket")
        # Orthonormality check; reuses the basis validation.
        FockSubspaceBasis(kets, tol=SIGNATURE_ORTHONORMALITY_TOL)

    @property
    def rank(self) -> int:
        return len(self.kets)

    @property
    def registry(self) -> ModeRegistry:
        return self.kets[0].registry


@dataclass(frozen=True)
class Outcome:
    """A detection signature plus the feed-forward correction it triggers.

    ``correction`` is a unitary matrix over the output subspace basis;
    ``None`` means no correction (identity).
    """

    signature: DetectionSignature
    correction: np.ndarray | None = None

    def __post_init__(self) -> None:
        if self.correction is None:
            return
        c = np.array(self.correction, dtype=complex)
        c.setflags(write=False)
        object.__setattr__(self, "correction", c)
        ok, deviation = check_mode_unitarity(c, tol=CORRECTION_UNITARITY_TOL)
        if not ok:
            raise DeviceValidationError(
                f"feed-forward correction is not unitary: deviation {deviation:.3e}"
            )


@dataclass(frozen=True)
class ConditionalDevice:
    """A full conditional measurement device.

    Mode network, input partition into computational/ancilla channels,
    output partition into computational/measured channels, the prepared
    ancilla state, the computational subspace, and the list of heralding
    outcomes with their corrections.
    """

    unitary: ModeUnitary
    input_computational: tuple[str, ...]
    input_ancilla: tuple[str, ...]
    output_computational: tuple[str, ...]
    output_ancilla: tuple[str, ...]
    ancilla_state: AncillaDecomposition
    subspace_in: FockSubspaceBasis
    outcomes: tuple[Outcome, ...]
    subspace_out: FockSubspaceBasis | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "input_computational", tuple(self.input_computational))
        object.__setattr__(self, "input_ancilla", tuple(self.input_ancilla))
        object.__setattr__(self, "output_computational", tuple(self.output_computational))
        object.__setattr__(self, "output_ancilla", tuple(self.output_ancilla))
        object.__setattr__(self, "outcomes", tuple(self.outcomes))

        _check_partition(
            "input", self.input_computational, self.input_ancilla, self.unitary.registry_in
        )
        _check_partition(
            "output", self.output_computational, self.output_ancilla, self.unitary.registry_out
        )

        if self.ancilla_state.registry.labels != self.input_ancilla:
            raise DeviceValidationError(
                "ancilla state registry does not match the input ancilla modes"
            )
        if self.subspace_in.registry.labels != self.input_computational:
            raise DeviceValidationError(
                "input subspace registry does not match the computational input modes"
            )
        if self.subspace_out is not None:
            if self.subspace_out.registry.labels != self.output_computational:
                raise DeviceValidationError(
                    "output subspace registry does not match the computational output modes"
                )
            if self.subspace_out.dimension != self.subspace_in.dimension:
                raise DeviceValidationError(
                    "output subspace dimension differs from the input subspace dimension"
                )

        if not self.outcomes:
            raise DeviceValidationError("a device needs at least one outcome")
        for idx, outcome in enumerate(self.outcomes):
            if outcome.signature.registry.labels != self.output_ancilla:
                raise DeviceValidationError(
                    f"outcome {idx} signature registry does not match the measured output modes"
                )
            if outcome.correction is not None:
                if self.subspace_out is None:
                    raise DeviceValidationError(
                        "feed-forward corrections require an explicit output subspace"
                    )
                if outcome.correction.shape[0] != self.subspace_out.dimension:
                    raise DeviceValidationError(
                        f"outcome {idx} correction dimension does not match the output subspace"
                    )
        self._check_cross_outcome_orthogonality()

    def _check_cross_outcome_orthogonality(self) -> None:
        # Distinct outcomes must project onto orthogonal detection events.
        for a in range(len(self.outcomes)):
            for b in range(a + 1, len(self.outcomes)):
                for u in self.outcomes[a].signature.kets:
                    for v in self.outcomes[b].signature.kets:
                        if abs(inner(u, v)) > SIGNATURE_ORTHONORMALITY_TOL:
                            raise DeviceValidationError(
                                f"signatures of outcomes {a} and {b} are not orthogonal"
                            )

    @property
    def registry_c(self) -> ModeRegistry:
        return self.unitary.registry_in.subset(self.input_computational)

    @property
    def registry_a(self) -> ModeRegistry:
        return self.unitary.registry_in.subset(self.input_ancilla)

    @property
    def registry_c_out(self) -> ModeRegistry:
        return self.unitary.registry_out.subset(self.output_computational)

    @property
    def registry_a_out(self) -> ModeRegistry:
        return self.unitary.registry_out.subset(self.output_ancilla)

    @property
    def outcome_count(self) -> int:
        return len(self.outcomes)

    def check_outcome_index(self, outcome: int) -> None:
        if not 0 <= outcome < len(self.outcomes):
            raise IndexError(
                f"outcome index {outcome} out of range for {len(self.outcomes)} outcomes"
            )


def _check_partition(
    which: str, first: tuple[str, ...], second: tuple[str, ...], registry: ModeRegistry
) -> None:
    combined = list(first) + list(second)
    if len(set(combined)) != len(combined):
        raise DeviceValidationError(f"{which} partition lists overlap")
    if set(combined) != set(registry.labels):
        missing = sorted(set(registry.labels) - set(combined))
        extra = sorted(set(combined) - set(registry.labels))
        raise DeviceValidationError(
            f"{which} partition does not cover the registry (missing {missing}, unknown {extra})"
        )


def fock_basis(registry: ModeRegistry, occupations: Iterable[OccupationVector]) -> FockSubspaceBasis:
    """Orthonormal basis of plain occupation states, in the order given."""
    return FockSubspaceBasis([FockVector.basis_state(registry, occ) for occ in occupations])


def lifted_inputs(
    dev: ConditionalDevice,
    basis: FockSubspaceBasis,
    photon_cap: int = DEFAULT_PHOTON_CAP,
) -> list[tuple[float, list[FockVector]]]:
    """Evolved joint states, one list per ancilla term.

    Entry ``i`` holds ``(p_i, [U(|b> x |chi_i>) for b in basis])`` on the
    full output registry.
    """
    if basis.registry.labels != dev.input_computational:
        raise ModeMismatchError("input basis does not live on the computational input modes")
    lifted = []
    for p, chi in dev.ancilla_state.terms:
        joint = [
            embed_product(
                [(b, dev.input_computational), (chi, dev.input_ancilla)],
                dev.unitary.registry_in,
            )
            for b in basis
        ]
        lifted.append((p, [lift_apply(dev.unitary, v, photon_cap) for v in joint]))
    return lifted


def signature_projections(
    dev: ConditionalDevice,
    lifted: list[tuple[float, list[FockVector]]],
    outcome: int,
) -> list[tuple[float, list[list[FockVector]]]]:
    """Project evolved states on each signature ket of one outcome.

    Returns, per ancilla term, ``(p_i, [[<k|psi_b> for b] for k in kets])``
    with each projection a FockVector on the computational output modes.
    """
    dev.check_outcome_index(outcome)
    kets = dev.outcomes[outcome].signature.kets
    projections = []
    for p, vectors in lifted:
        per_ket = [
            [partial_inner(ket, psi, keep=dev.output_computational) for psi in vectors]
            for ket in kets
        ]
        projections.append((p, per_ket))
    return projections


def test_matrix(
    dev: ConditionalDevice,
    basis: FockSubspaceBasis,
    outcome: int,
    photon_cap: int = DEFAULT_PHOTON_CAP,
    lifted: list[tuple[float, list[FockVector]]] | None = None,
) -> np.ndarray:
    """Matrix of the success-probability form over ``basis``.

    Entry ``(a, b)`` is the ancilla-averaged overlap of the heralded
    branches of basis vectors ``a`` and ``b``; the success probability of a
    state ``rho`` over ``basis`` is ``trace(rho @ test_matrix)``.
    """
    if lifted is None:
        lifted = lifted_inputs(dev, basis, photon_cap)
    dim = len(basis)
    t = np.zeros((dim, dim), dtype=complex)
    for p, per_ket in signature_projections(dev, lifted, outcome):
        for branch in per_ket:
            g = np.array([[inner(branch[a], branch[b]) for b in range(dim)] for a in range(dim)])
            t += p * g
    return t


def success_probability(
    dev: ConditionalDevice,
    outcome: int,
    rho: DensityOperator,
    photon_cap: int = DEFAULT_PHOTON_CAP,
) -> float:
    """Probability that ``outcome`` is heralded for input state ``rho``.

    ``rho`` may live on any declared basis of computational-input vectors,
    not only the device subspace; linear in ``rho``.
    """
    t = test_matrix(dev, rho.basis, outcome, photon_cap)
    d = float(np.trace(rho.matrix @ t).real)
    return 0.0 if abs(d) < ZERO_SUCCESS_TOL else d


def _branch_support(
    projections: list[tuple[float, list[list[FockVector]]]],
) -> list[OccupationVector]:
    occupations = set()
    for _, per_ket in projections:
        for branch in per_ket:
            for phi in branch:
                occupations.update(phi.terms)
    return sorted(occupations, key=lambda occ: (occ.total, tuple(occ)))


def _branch_matrix(
    projections: list[tuple[float, list[list[FockVector]]]],
    rho: np.ndarray,
    occupations: Sequence[OccupationVector],
) -> np.ndarray:
    index = {occ: i for i, occ in enumerate(occupations)}
    out = np.zeros((len(occupations), len(occupations)), dtype=complex)
    for p, per_ket in projections:
        for branch in per_ket:
            phi = np.zeros((len(occupations), len(branch)), dtype=complex)
            for b, vec in enumerate(branch):
                for occ, amp in vec.terms.items():
                    phi[index[occ], b] = amp
            out += p * (phi @ rho @ phi.conj().T)
    return out


def v_map(
    dev: ConditionalDevice,
    outcome: int,
    rho: DensityOperator,
    photon_cap: int = DEFAULT_PHOTON_CAP,
) -> DensityOperator:
    """Unnormalized conditional output: project, trace out measured modes.

    Positive and linear in ``rho``; its trace equals the success
    probability of the outcome. Expressed over the occupation basis of the
    computational output modes.
    """
    lifted = lifted_inputs(dev, rho.basis, photon_cap)
    projections = signature_projections(dev, lifted, outcome)
    occupations = _branch_support(projections)
    matrix = _branch_matrix(projections, rho.matrix, occupations)
    return DensityOperator(
        fock_basis(dev.registry_c_out, occupations), matrix, unnormalized=True
    )


def _correction_full(
    correction: np.ndarray,
    subspace_out: FockSubspaceBasis,
    occupations: Sequence[OccupationVector],
) -> np.ndarray:
    """Extend a subspace correction to the occupation basis (identity outside)."""
    index = {occ: i for i, occ in enumerate(occupations)}
    b = np.zeros((len(occupations), subspace_out.dimension), dtype=complex)
    for j, vec in enumerate(subspace_out):
        for occ, amp in vec.terms.items():
            if occ not in index:
                raise DeviceValidationError(
                    "output subspace leaves the computed support; extend the occupation list"
                )
            b[index[occ], j] = amp
    dim = len(occupations)
    return np.eye(dim, dtype=complex) + b @ (correction - np.eye(subspace_out.dimension)) @ b.conj().T


def conditional_output(
    dev: ConditionalDevice,
    outcome: int,
    rho: DensityOperator,
    photon_cap: int = DEFAULT_PHOTON_CAP,
) -> DensityOperator:
    """Normalized conditional output state after feed-forward correction.

    Raises ``ZeroSuccessError`` when the outcome has zero probability for
    this input; the conditional map is undefined there.
    """
    lifted = lifted_inputs(dev, rho.basis, photon_cap)
    projections = signature_projections(dev, lifted, outcome)
    occupations = set(_branch_support(projections))

    correction = dev.outcomes[outcome].correction
    if correction is not None:
        assert dev.subspace_out is not None  # enforced at construction
        for vec in dev.subspace_out:
            occupations.update(vec.terms)
    ordered = sorted(occupations, key=lambda occ: (occ.total, tuple(occ)))

    matrix = _branch_matrix(projections, rho.matrix, ordered)
    d = float(np.trace(matrix).real)
    if d <= ZERO_SUCCESS_TOL:
        raise ZeroSuccessError(
            f"outcome {outcome} has zero success probability; the conditional map is undefined"
        )
    if correction is not None:
        w = _correction_full(correction, dev.subspace_out, ordered)
        matrix = w @ matrix @ w.conj().T
    return DensityOperator(fock_basis(dev.registry_c_out, ordered), matrix / d)


def partial_trace_ancilla(full: DensityOperator, ancilla_labels: Sequence[str]) -> DensityOperator:
    """Trace a density operator over the given (measured) modes.

    The operator's basis must live on a registry containing the ancilla
    labels; the result lives on the remaining modes in registry order.
    Trace and positivity are preserved.
    """
    registry = full.basis.registry
    for label in ancilla_labels:
        registry.index(label)
    keep = tuple(label for label in registry.labels if label not in set(ancilla_labels))
    if len(keep) + len(ancilla_labels) != registry.mode_count:
        raise DeviceValidationError("ancilla labels repeat or do not match the registry")
    ancilla_registry = registry.subset(ancilla_labels)
    ancilla_positions = registry.positions(ancilla_labels)

    marginals: set[OccupationVector] = set()
    for vec in full.basis:
        for occ in vec.terms:
            marginals.add(OccupationVector(occ[p] for p in ancilla_positions))

    slices: dict[OccupationVector, list[FockVector]] = {}
    support: set[OccupationVector] = set()
    for a_occ in sorted(marginals):
        bra = FockVector.basis_state(ancilla_registry, a_occ)
        projected = [partial_inner(bra, vec, keep) for vec in full.basis]
        slices[a_occ] = projected
        for phi in projected:
            support.update(phi.terms)

    ordered = sorted(support, key=lambda occ: (occ.total, tuple(occ)))
    index = {occ: i for i, occ in enumerate(ordered)}
    out = np.zeros((len(ordered), len(ordered)), dtype=complex)
    for projected in slices.values():
        phi = np.zeros((len(ordered), len(projected)), dtype=complex)
        for b, vec in enumerate(projected):
            for occ, amp in vec.terms.items():
                phi[index[occ], b] = amp
        out += phi @ full.matrix @ phi.conj().T
    return DensityOperator(
        fock_basis(registry.subset(keep), ordered), out, unnormalized=full.unnormalized
    )
