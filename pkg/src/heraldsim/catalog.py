"""Built-in devices: the nonlinear-sign gate and the polarization CNOT.

Both constructors assemble the device from its published mode matrix,
ancilla preparation, and detection signatures; nothing here is fitted. The
CNOT feed-forward corrections are derived from the device's own heralded
amplitudes, which makes the builder self-consistent rather than a table of
signs.
"""

from __future__ import annotations

import math
from typing import Callable

import numpy as np

from .cpmaps import (
    AncillaDecomposition,
    ConditionalDevice,
    DensityOperator,
    DetectionSignature,
    Outcome,
    fock_basis,
)
from .fock import FockSubspaceBasis, FockVector, ModeRegistry, OccupationVector, embed_product, inner, partial_inner
from .nport import ModeUnitary, lift_apply


def build_klm_ns(extended: bool = False) -> ConditionalDevice:
    """Nonlinear-sign gate: one computational port, two ancilla ports.

    Success is heralded by exactly one photon in the first measured port and
    none in the second. The computational subspace holds zero to two photons
    (zero to three when ``extended`` is set, which breaks the device).
    """
    registry_in = ModeRegistry(("1", "2", "3"))
    registry_out = ModeRegistry(("a", "b", "c"))
    root2 = math.sqrt(2.0)
    matrix = np.array(
        [
            [1.0 - root2, 2.0 ** -0.25, math.sqrt(3.0 / root2 - 2.0)],
            [2.0 ** -0.25, 0.5, 0.5 - 1.0 / root2],
            [math.sqrt(3.0 / root2 - 2.0), 0.5 - 1.0 / root2, root2 - 0.5],
        ],
        dtype=complex,
    )
    unitary = ModeUnitary(registry_in, registry_out, matrix)

    photon_counts = range(4 if extended else 3)
    subspace_in = fock_basis(registry_in.subset(("1",)), [OccupationVector([n]) for n in photon_counts])
    subspace_out = fock_basis(registry_out.subset(("a",)), [OccupationVector([n]) for n in photon_counts])

    ancilla = AncillaDecomposition.pure(
        FockVector.basis_state(registry_in.subset(("2", "3")), (1, 0))
    )
    signature = DetectionSignature(
        (FockVector.basis_state(registry_out.subset(("b", "c")), (1, 0)),)
    )
    return ConditionalDevice(
        unitary=unitary,
        input_computational=("1",),
        input_ancilla=("2", "3"),
        output_computational=("a",),
        output_ancilla=("b", "c"),
        ancilla_state=ancilla,
        subspace_in=subspace_in,
        subspace_out=subspace_out,
        outcomes=(Outcome(signature),),
    )


# Port-level polarization layout of the CNOT: two computational input ports
# (a, b), four ancilla input ports (1-4); measured output ports (p, q, n, m),
# computational output ports (5, 6). Each port carries an H and a V mode.
_CNOT_IN_PORTS = ("a", "b", "1", "2", "3", "4")
_CNOT_OUT_PORTS = ("5", "6", "p", "q", "n", "m")

# Single-photon images: input mode -> (output mode, amplitude).
_CNOT_MODE_MAP: dict[str, tuple[str, complex]] = {
    "H_a": ("H_q", 1.0),
    "V_a": ("V_p", -1.0j),
    "H_b": ("H_n", 1.0),
    "V_b": ("V_m", -1.0j),
    "H_1": ("H_p", 1.0),
    "V_1": ("V_q", -1.0j),
    "H_2": ("H_5", 1.0),
    "V_2": ("V_5", 1.0),
    "H_3": ("H_6", 1.0),
    "V_3": ("V_6", 1.0),
    "H_4": ("H_m", 1.0),
    "V_4": ("V_n", -1.0j),
}

# Logical values ride on polarization: H encodes 0, V encodes 1.
_LOGICAL_ORDER = ("00", "01", "10", "11")

# The gate's intended action on logical labels (control flips target).
_CNOT_TARGET = {"00": "00", "01": "01", "10": "11", "11": "10"}


def _polarization_labels(ports: tuple[str, ...]) -> tuple[str, ...]:
    return tuple(f"{pol}_{port}" for port in ports for pol in ("H", "V"))


def _logical_basis(registry: ModeRegistry, ports: tuple[str, str]) -> FockSubspaceBasis:
    vectors = []
    for bits in _LOGICAL_ORDER:
        counts = [0] * registry.mode_count
        for bit, port in zip(bits, ports):
            pol = "H" if bit == "0" else "V"
            counts[registry.index(f"{pol}_{port}")] = 1
        vectors.append(FockVector.basis_state(registry, counts))
    return FockSubspaceBasis(vectors)


def _diagonal_polarization_ket(sign: float, port: str) -> FockVector:
    """(|H> + sign|V>)/sqrt(2) on the two modes of one measured port."""
    registry = ModeRegistry((f"H_{port}", f"V_{port}"))
    return FockVector(
        registry,
        {OccupationVector((1, 0)): 1 / math.sqrt(2), OccupationVector((0, 1)): sign / math.sqrt(2)},
    )


def build_cnot_pittman() -> ConditionalDevice:
    """Polarization-encoded CNOT with sixteen heralding outcomes.

    The mode network is a phase-permutation matrix; the four-photon ancilla
    entangles the measured and output ports so that detecting one photon in
    each measured port, in any diagonal-polarization combination, heralds
    the gate. Each outcome carries the diagonal phase correction that its
    detection pattern calls for.
    """
    in_labels = _polarization_labels(_CNOT_IN_PORTS)
    out_labels = _polarization_labels(_CNOT_OUT_PORTS)
    registry_in = ModeRegistry(in_labels)
    registry_out = ModeRegistry(out_labels)

    # The map lists the amplitude an input photon acquires on its output
    # mode; the stored matrix is its conjugate so that lifting (which
    # conjugates again) applies exactly these amplitudes.
    matrix = np.zeros((len(in_labels), len(out_labels)), dtype=complex)
    for in_label, (out_label, amplitude) in _CNOT_MODE_MAP.items():
        matrix[registry_in.index(in_label), registry_out.index(out_label)] = np.conj(amplitude)
    unitary = ModeUnitary(registry_in, registry_out, matrix)

    input_computational = _polarization_labels(("a", "b"))
    input_ancilla = _polarization_labels(("1", "2", "3", "4"))
    output_computational = _polarization_labels(("5", "6"))
    output_ancilla = _polarization_labels(("p", "q", "n", "m"))

    ancilla_registry = registry_in.subset(input_ancilla)

    def ancilla_term(pols: str) -> OccupationVector:
        counts = [0] * ancilla_registry.mode_count
        for pol, port in zip(pols, ("1", "4", "2", "3")):
            counts[ancilla_registry.index(f"{pol}_{port}")] = 1
        return OccupationVector(counts)

    # Ports listed in the order (1, 4, 2, 3): the prepared state pairs the
    # measured-port photons (1, 4) with the output-port photons (2, 3).
    chi = FockVector(
        ancilla_registry,
        {
            ancilla_term("HHHH"): 0.5,
            ancilla_term("HVHV"): 0.5,
            ancilla_term("VHVV"): 0.5,
            ancilla_term("VVVH"): 0.5,
        },
    )

    subspace_in = _logical_basis(registry_in.subset(input_computational), ("a", "b"))
    subspace_out = _logical_basis(registry_out.subset(output_computational), ("5", "6"))

    # Enumerate the sixteen detection patterns as a 4-bit counter over the
    # measured ports (p, q, n, m), last port fastest; bit 0 is the +V
    # diagonal, bit 1 the -V diagonal.
    ancilla_out_registry = registry_out.subset(output_ancilla)
    signatures = []
    for code in range(16):
        parts = []
        for position, port in enumerate(("p", "q", "n", "m")):
            bit = (code >> (3 - position)) & 1
            sign = -1.0 if bit else 1.0
            parts.append((_diagonal_polarization_ket(sign, port), (f"H_{port}", f"V_{port}")))
        signatures.append(embed_product(parts, ancilla_out_registry))

    # Fold each outcome's heralded phases into its correction so that the
    # corrected transformation is the plain logical permutation.
    lifted = [
        lift_apply(
            unitary,
            embed_product([(b, input_computational), (chi, input_ancilla)], registry_in),
        )
        for b in subspace_in
    ]
    outcomes = []
    for ket in signatures:
        diagonal = np.zeros(4, dtype=complex)
        for out_index, out_bits in enumerate(_LOGICAL_ORDER):
            in_bits = _CNOT_TARGET[out_bits]  # the permutation is an involution
            in_index = _LOGICAL_ORDER.index(in_bits)
            branch = partial_inner(ket, lifted[in_index], keep=output_computational)
            amplitude = inner(subspace_out[out_index], branch)
            if abs(amplitude) == 0.0:
                raise AssertionError("heralded amplitude unexpectedly vanished")
            diagonal[out_index] = np.conj(amplitude) / abs(amplitude)
        outcomes.append(Outcome(DetectionSignature((ket,)), np.diag(diagonal)))

    return ConditionalDevice(
        unitary=unitary,
        input_computational=input_computational,
        input_ancilla=input_ancilla,
        output_computational=output_computational,
        output_ancilla=output_ancilla,
        ancilla_state=AncillaDecomposition.pure(chi),
        subspace_in=subspace_in,
        subspace_out=subspace_out,
        outcomes=tuple(outcomes),
    )


def special_state_S() -> DensityOperator:
    """Three-photon probe: both logical zeros plus an extra photon on port b.

    Lies outside the logical subspace; no detection pattern of the CNOT can
    fire on it, so its success probability vanishes for every outcome.
    """
    registry = ModeRegistry(_polarization_labels(("a", "b")))
    counts = [0] * registry.mode_count
    counts[registry.index("H_a")] = 1
    counts[registry.index("H_b")] = 2
    return DensityOperator.pure(FockVector.basis_state(registry, counts))


BUILTIN_BUILDERS: dict[str, Callable[[], ConditionalDevice]] = {
    "klm-ns": lambda: build_klm_ns(extended=False),
    "klm-ns-extended": lambda: build_klm_ns(extended=True),
    "cnot-pittman": build_cnot_pittman,
}


def build_builtin(name: str) -> ConditionalDevice:
    try:
        builder = BUILTIN_BUILDERS[name]
    except KeyError:
        raise KeyError(
            f"unknown builtin device {name!r}; available: {sorted(BUILTIN_BUILDERS)}"
        ) from None
    return builder()
