"""Device description and report schemas, with parsing and export.

Devices travel as JSON documents validated by pydantic models; the same
models back the HTTP service, so a file on disk and a request body are the
same format. Complex numbers are ``[re, im]`` pairs; occupations are
explicit per-mode count lists over the relevant partition, never implicit
mode names. Unknown fields are rejected everywhere.
"""

from __future__ import annotations

import json
from typing import Literal

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError

from .analysis import AnalysisReport
from .cpmaps import (
    AncillaDecomposition,
    ConditionalDevice,
    DetectionSignature,
    Outcome,
    _check_partition,
)
from .errors import DeviceParseError, DeviceValidationError
from .fock import FockSubspaceBasis, FockVector, ModeRegistry, OccupationVector
from .nport import ModeUnitary

SCHEMA_VERSION = 1

ComplexPair = tuple[float, float]


class _StrictModel(BaseModel):
    model_config = ConfigDict(extra="forbid")


class TermEntry(_StrictModel):
    """One occupation-number component of a ket."""

    occupations: list[int]
    re: float
    im: float = 0.0


KetEntry = list[TermEntry]


class ModesEntry(_StrictModel):
    input: list[str]
    output: list[str]


class PartitionEntry(_StrictModel):
    computational: list[str]
    ancilla: list[str]


class AncillaTermEntry(_StrictModel):
    p: float
    ket: KetEntry


class OutcomeEntry(_StrictModel):
    signature: list[KetEntry]
    correction: Literal["identity"] | list[ComplexPair] = "identity"


class DeviceFile(_StrictModel):
    """On-disk / on-wire description of a conditional device."""

    schema_version: Literal[1]
    modes: ModesEntry
    unitary: list[ComplexPair]
    input_partition: PartitionEntry
    output_partition: PartitionEntry
    ancilla: list[AncillaTermEntry]
    subspace_in: list[KetEntry]
    subspace_out: list[KetEntry] | None = None
    outcomes: list[OutcomeEntry]


class OutcomeReport(_StrictModel):
    tau: float
    test_pass: bool
    max_dev: float


class ToleranceReport(_StrictModel):
    verdict_tol: float
    photon_cap: int
    t_eff: float


class ReportFile(_StrictModel):
    """Verdict report emitted by the analysis."""

    overall_verdict: Literal["operationally-unitary", "not-operationally-unitary"]
    per_outcome: list[OutcomeReport]
    total_tau: float
    proportionality_pass: bool | None = None
    singular_ratio: float | None = None
    w_matrix: list[ComplexPair] | None = None
    completeness_dev: float | None = None
    q_eigenphases: list[float] | None = None
    basis_source: Literal["user", "detected"] | None = None
    sigma_decomposition: Literal["explicit", "spectral"]
    tolerances: ToleranceReport
    notes: list[str] = Field(default_factory=list)


def _ket_to_entries(vector: FockVector) -> KetEntry:
    return [
        TermEntry(occupations=list(occ), re=float(amp.real), im=float(amp.imag))
        for occ, amp in sorted(vector.terms.items())
    ]


def _entries_to_ket(entries: KetEntry, registry: ModeRegistry) -> FockVector:
    terms: dict[OccupationVector, complex] = {}
    for entry in entries:
        occ = OccupationVector(entry.occupations)
        terms[occ] = terms.get(occ, 0j) + complex(entry.re, entry.im)
    return FockVector(registry, terms)


def _matrix_to_pairs(matrix: np.ndarray) -> list[ComplexPair]:
    return [(float(z.real), float(z.imag)) for z in np.asarray(matrix, dtype=complex).ravel()]


def _pairs_to_matrix(pairs: list[ComplexPair], dim: int, what: str) -> np.ndarray:
    if len(pairs) != dim * dim:
        raise DeviceParseError(
            f"{what} has {len(pairs)} entries, expected {dim * dim} for dimension {dim}"
        )
    flat = np.array([complex(re, im) for re, im in pairs])
    return flat.reshape(dim, dim)


def device_to_file(dev: ConditionalDevice) -> DeviceFile:
    """Serializable description of a device; inverse of ``file_to_device``."""
    return DeviceFile(
        schema_version=SCHEMA_VERSION,
        modes=ModesEntry(
            input=list(dev.unitary.registry_in.labels),
            output=list(dev.unitary.registry_out.labels),
        ),
        unitary=_matrix_to_pairs(dev.unitary.entries),
        input_partition=PartitionEntry(
            computational=list(dev.input_computational), ancilla=list(dev.input_ancilla)
        ),
        output_partition=PartitionEntry(
            computational=list(dev.output_computational), ancilla=list(dev.output_ancilla)
        ),
        ancilla=[
            AncillaTermEntry(p=float(p), ket=_ket_to_entries(ket))
            for p, ket in dev.ancilla_state.terms
        ],
        subspace_in=[_ket_to_entries(v) for v in dev.subspace_in],
        subspace_out=(
            None
            if dev.subspace_out is None
            else [_ket_to_entries(v) for v in dev.subspace_out]
        ),
        outcomes=[
            OutcomeEntry(
                signature=[_ket_to_entries(k) for k in outcome.signature.kets],
                correction=(
                    "identity"
                    if outcome.correction is None
                    else _matrix_to_pairs(outcome.correction)
                ),
            )
            for outcome in dev.outcomes
        ],
    )


def file_to_device(spec: DeviceFile) -> ConditionalDevice:
    """Build and validate a device from its description.

    Structural problems raise ``DeviceParseError``; physical inconsistencies
    raise ``DeviceValidationError`` naming the failed invariant.
    """
    registry_in = ModeRegistry(tuple(spec.modes.input))
    registry_out = ModeRegistry(tuple(spec.modes.output))
    if registry_in.mode_count != registry_out.mode_count:
        raise DeviceValidationError("input and output mode lists differ in length")
    n = registry_in.mode_count
    entries = _pairs_to_matrix(spec.unitary, n, "unitary")
    unitary = ModeUnitary(registry_in, registry_out, entries)

    input_computational = tuple(spec.input_partition.computational)
    input_ancilla = tuple(spec.input_partition.ancilla)
    output_computational = tuple(spec.output_partition.computational)
    output_ancilla = tuple(spec.output_partition.ancilla)
    # Check the partitions before deriving sub-registries from them, so a
    # bad partition is reported as such rather than as a downstream mismatch.
    _check_partition("input", input_computational, input_ancilla, registry_in)
    _check_partition("output", output_computational, output_ancilla, registry_out)

    registry_c = registry_in.subset(input_computational)
    registry_a = registry_in.subset(input_ancilla)
    registry_c_out = registry_out.subset(output_computational)
    registry_a_out = registry_out.subset(output_ancilla)

    ancilla = AncillaDecomposition(
        tuple((term.p, _entries_to_ket(term.ket, registry_a)) for term in spec.ancilla)
    )
    subspace_in = FockSubspaceBasis(
        [_entries_to_ket(ket, registry_c) for ket in spec.subspace_in]
    )
    subspace_out = None
    if spec.subspace_out is not None:
        subspace_out = FockSubspaceBasis(
            [_entries_to_ket(ket, registry_c_out) for ket in spec.subspace_out]
        )

    outcomes = []
    for entry in spec.outcomes:
        signature = DetectionSignature(
            tuple(_entries_to_ket(ket, registry_a_out) for ket in entry.signature)
        )
        if entry.correction == "identity":
            correction = None
        else:
            if subspace_out is None:
                raise DeviceValidationError(
                    "feed-forward corrections require an explicit output subspace"
                )
            correction = _pairs_to_matrix(
                entry.correction, subspace_out.dimension, "correction"
            )
        outcomes.append(Outcome(signature, correction))

    return ConditionalDevice(
        unitary=unitary,
        input_computational=input_computational,
        input_ancilla=input_ancilla,
        output_computational=output_computational,
        output_ancilla=output_ancilla,
        ancilla_state=ancilla,
        subspace_in=subspace_in,
        subspace_out=subspace_out,
        outcomes=tuple(outcomes),
    )


def parse_device(text: str) -> ConditionalDevice:
    """Parse a JSON device description and validate it.

    Malformed syntax or schema violations raise ``DeviceParseError``;
    physically inconsistent but well-formed files raise
    ``DeviceValidationError``.
    """
    try:
        payload = json.loads(text)
    except json.JSONDecodeError as exc:
        raise DeviceParseError(f"not valid JSON: {exc}") from exc
    try:
        spec = DeviceFile.model_validate(payload)
    except ValidationError as exc:
        raise DeviceParseError(f"device description does not match the schema: {exc}") from exc
    return file_to_device(spec)


def export_device(dev: ConditionalDevice) -> str:
    """Canonical JSON text for a device; stable byte-for-byte across runs."""
    return json.dumps(device_to_file(dev).model_dump(), indent=2) + "\n"


def report_from_analysis(analysis: AnalysisReport) -> ReportFile:
    """Flatten an in-memory analysis into the report schema."""
    return ReportFile(
        overall_verdict=(
            "operationally-unitary"
            if analysis.operationally_unitary
            else "not-operationally-unitary"
        ),
        per_outcome=[
            OutcomeReport(tau=o.tau, test_pass=o.passed, max_dev=o.max_deviation)
            for o in analysis.outcomes
        ],
        total_tau=analysis.total_tau,
        proportionality_pass=analysis.proportionality_passed,
        singular_ratio=analysis.singular_ratio,
        w_matrix=None if analysis.common_w is None else _matrix_to_pairs(analysis.common_w),
        completeness_dev=analysis.completeness_deviation,
        q_eigenphases=None if analysis.action is None else list(analysis.action.eigenphases),
        basis_source=analysis.basis_source,
        sigma_decomposition=analysis.sigma_source,  # type: ignore[arg-type]
        tolerances=ToleranceReport(
            verdict_tol=analysis.tolerance,
            photon_cap=analysis.photon_cap,
            t_eff=analysis.t_eff,
        ),
        notes=list(analysis.notes),
    )


def derive_verdict(report: ReportFile) -> bool:
    """Recompute the overall verdict from the per-outcome fields.

    The stored verdict must always agree with this; it is re-derived after
    JSON round trips as a consistency check.
    """
    tol = report.tolerances.verdict_tol
    tests = all(o.test_pass for o in report.per_outcome)
    fires = report.total_tau > 1e-12
    prop = report.proportionality_pass is True
    complete = report.completeness_dev is not None and report.completeness_dev <= tol
    return tests and fires and prop and complete


def exit_code_for(report: ReportFile) -> int:
    """0 for an operationally unitary device, 2 for a valid device that is not."""
    return 0 if report.overall_verdict == "operationally-unitary" else 2


def export_report(report: ReportFile) -> str:
    return json.dumps(report.model_dump(), indent=2) + "\n"


def render_text(report: ReportFile) -> str:
    """Human-readable report: verdict, per-outcome taus, w matrix, eigenphases."""
    lines = [f"verdict: {report.overall_verdict}"]
    lines.append(f"total success probability: {report.total_tau:.10g}")
    lines.append("outcome   tau           test   max deviation")
    for idx, o in enumerate(report.per_outcome):
        flag = "pass" if o.test_pass else "FAIL"
        lines.append(f"  {idx:<7d} {o.tau:<13.10f} {flag}   {o.max_dev:.3e}")
    if report.proportionality_pass is not None:
        flag = "pass" if report.proportionality_pass else "FAIL"
        ratio = "" if report.singular_ratio is None else f" (singular ratio {report.singular_ratio:.3e})"
        lines.append(f"proportionality: {flag}{ratio}")
    if report.basis_source is not None:
        lines.append(f"output basis: {report.basis_source}")
    if report.w_matrix is not None:
        dim = int(round(len(report.w_matrix) ** 0.5))
        lines.append("induced unitary:")
        for r in range(dim):
            row = report.w_matrix[r * dim : (r + 1) * dim]
            cells = "  ".join(f"{re:+.6f}{im:+.6f}j" for re, im in row)
            lines.append(f"  [{cells}]")
    if report.completeness_dev is not None:
        lines.append(f"completeness deviation: {report.completeness_dev:.3e}")
    if report.q_eigenphases is not None:
        phases = ", ".join(f"{q:.6f}" for q in report.q_eigenphases)
        lines.append(f"action eigenphases: [{phases}]")
    for note in report.notes:
        lines.append(f"note: {note}")
    return "\n".join(lines) + "\n"
