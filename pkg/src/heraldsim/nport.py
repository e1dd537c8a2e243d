"""Lifting a mode-level unitary to its action on few-photon Fock states.

A passive linear-optical network is described by a unitary matrix over the
modes. Its action on a multi-photon basis state follows by writing the state
as a creation-operator monomial on the vacuum and substituting each input
creation operator by the conjugate-weighted sum of output creation operators.
An independent permanent-based amplitude formula is provided as a test
oracle for the expansion.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .errors import DeviceValidationError, ModeMismatchError, PhotonCapExceededError
from .fock import FockVector, ModeRegistry, OccupationVector

MODE_UNITARITY_TOL = 1e-12

# Bounds the worst-case monomial expansion in lift_apply.
DEFAULT_PHOTON_CAP = 8


def check_mode_unitarity(entries: np.ndarray, tol: float = MODE_UNITARITY_TOL) -> tuple[bool, float]:
    """Check ``U U^dag = I`` in the max norm.

    Returns ``(ok, deviation)``; the deviation is reported either way.
    """
    u = np.asarray(entries, dtype=complex)
    if u.ndim != 2 or u.shape[0] != u.shape[1]:
        raise DeviceValidationError(f"mode matrix must be square, got shape {u.shape}")
    deviation = float(np.max(np.abs(u @ u.conj().T - np.eye(u.shape[0]))))
    return deviation <= tol, deviation


@dataclass(frozen=True)
class ModeUnitary:
    """Unitary matrix over modes: rows index input modes, columns output modes.

    Lifting to Fock states uses the complex conjugate of ``entries``: the
    conjugated row gives the output-mode amplitudes of a single photon
    entering that input mode.
    """

    registry_in: ModeRegistry
    registry_out: ModeRegistry
    entries: np.ndarray

    def __post_init__(self) -> None:
        entries = np.array(self.entries, dtype=complex)
        entries.setflags(write=False)
        object.__setattr__(self, "entries", entries)
        if self.registry_in.mode_count != self.registry_out.mode_count:
            raise DeviceValidationError("input and output registries must have the same mode count")
        n = self.registry_in.mode_count
        if entries.shape != (n, n):
            raise DeviceValidationError(
                f"mode matrix shape {entries.shape} does not match {n} modes"
            )
        ok, deviation = check_mode_unitarity(entries)
        if not ok:
            raise DeviceValidationError(
                f"mode matrix is not unitary: max deviation {deviation:.3e} > {MODE_UNITARITY_TOL:.1e}"
            )

    @property
    def mode_count(self) -> int:
        return self.registry_in.mode_count

    def then(self, second: "ModeUnitary") -> "ModeUnitary":
        """Composite network: this unitary first, then ``second``.

        With the row-input/column-output convention the composite entry
        matrix is ``self.entries @ second.entries``.
        """
        if self.registry_out != second.registry_in:
            raise ModeMismatchError("composition requires matching intermediate registries")
        return ModeUnitary(self.registry_in, second.registry_out, self.entries @ second.entries)

    @staticmethod
    def identity(registry: ModeRegistry) -> "ModeUnitary":
        return ModeUnitary(registry, registry, np.eye(registry.mode_count))


def lift_apply(u: ModeUnitary, v: FockVector, photon_cap: int = DEFAULT_PHOTON_CAP) -> FockVector:
    """Evolve a Fock state through the mode network.

    Each basis term is expanded as a creation-operator monomial and each
    input creation operator is replaced by its image, one photon at a time.
    Photon number is conserved term by term and the map is an isometry on
    each photon-number sector.

    Args:
        u: the mode network.
        v: state on ``u.registry_in``.
        photon_cap: guard against combinatorial blowup; terms with more
            photons than this raise ``PhotonCapExceededError``.
    """
    if v.registry != u.registry_in:
        raise ModeMismatchError("state registry does not match the network input registry")
    amplitudes = u.entries.conj()
    n_modes = u.mode_count
    columns: list[list[tuple[int, complex]]] = [
        [(j, amplitudes[i, j]) for j in range(n_modes) if abs(amplitudes[i, j]) > 0.0]
        for i in range(n_modes)
    ]

    out_terms: dict[OccupationVector, complex] = {}
    vac = OccupationVector([0] * n_modes)
    for occ, amp in v.terms.items():
        if occ.total > photon_cap:
            raise PhotonCapExceededError(
                f"term with {occ.total} photons exceeds the photon cap {photon_cap}"
            )
        norm = math.sqrt(math.prod(math.factorial(c) for c in occ))
        state: dict[OccupationVector, complex] = {vac: amp / norm}
        for mode_idx, count in enumerate(occ):
            for _ in range(count):
                grown: dict[OccupationVector, complex] = {}
                for partial, coeff in state.items():
                    for out_idx, weight in columns[mode_idx]:
                        key = partial.bump(out_idx, +1)
                        grown[key] = grown.get(key, 0j) + coeff * weight * math.sqrt(partial[out_idx] + 1)
                state = grown
        for key, coeff in state.items():
            out_terms[key] = out_terms.get(key, 0j) + coeff
    return FockVector(u.registry_out, out_terms)


def permanent(a: np.ndarray) -> complex:
    """Matrix permanent by Ryser inclusion-exclusion. Empty matrix gives 1."""
    a = np.asarray(a, dtype=complex)
    n = a.shape[0]
    if a.shape != (n, n):
        raise ValueError(f"permanent needs a square matrix, got shape {a.shape}")
    if n == 0:
        return 1.0 + 0j
    total = 0j
    cols = range(n)
    for size in range(1, n + 1):
        sign = (-1) ** (n - size)
        for subset in combinations(cols, size):
            sums = a[:, list(subset)].sum(axis=1)
            total += sign * np.prod(sums)
    return complex(total)


def amplitude_permanent(
    u: ModeUnitary, occ_in: OccupationVector, occ_out: OccupationVector
) -> complex:
    """Transition amplitude <out|U|in> via the permanent of a repeated submatrix.

    Rows of the conjugated mode matrix are repeated per input occupation,
    columns per output occupation; the permanent is normalized by
    sqrt(prod(in_i!) * prod(out_j!)). Photon-number mismatch gives zero by
    contract. Independent of (and a test oracle for) ``lift_apply``.
    """
    occ_in = OccupationVector(occ_in)
    occ_out = OccupationVector(occ_out)
    if len(occ_in) != u.mode_count or len(occ_out) != u.mode_count:
        raise ModeMismatchError("occupation length does not match the network mode count")
    if occ_in.total != occ_out.total:
        return 0j
    rows = [i for i, c in enumerate(occ_in) for _ in range(c)]
    cols = [j for j, c in enumerate(occ_out) for _ in range(c)]
    sub = u.entries.conj()[np.ix_(rows, cols)]
    norm = math.sqrt(
        math.prod(math.factorial(c) for c in occ_in) * math.prod(math.factorial(c) for c in occ_out)
    )
    return permanent(sub) / norm
