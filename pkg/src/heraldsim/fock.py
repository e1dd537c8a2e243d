"""Multimode Fock states: basis enumeration, ladder operators, tensor embedding.

States are sparse maps from occupation vectors to complex amplitudes. All
types are immutable values; every operation returns a new object, so states
are safe to share freely.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Iterator, Mapping, Sequence

import numpy as np

from .errors import DeviceValidationError, ModeMismatchError, UnknownModeError

# Stored amplitudes below this magnitude are dropped after each linear
# operation; keeps sparse maps from accumulating exact-zero cancellations.
AMPLITUDE_EPS = 1e-14

# Default tolerance for orthonormality of subspace bases and signature kets.
ORTHONORMALITY_TOL = 1e-10


class OccupationVector(tuple):
    """Photon counts per mode; the Fock basis label.

    A thin tuple subclass: hashable, and ordered lexicographically on the
    counts, which is the canonical basis order everywhere in the package.
    """

    __slots__ = ()

    def __new__(cls, counts: Iterable[int]) -> "OccupationVector":
        vec = super().__new__(cls, (int(c) for c in counts))
        if any(c < 0 for c in vec):
            raise ValueError(f"occupation counts must be non-negative, got {tuple(vec)}")
        return vec

    @property
    def total(self) -> int:
        """Total photon number."""
        return sum(self)

    def bump(self, index: int, delta: int) -> "OccupationVector":
        """Return a copy with ``counts[index]`` shifted by ``delta``."""
        counts = list(self)
        counts[index] += delta
        return OccupationVector(counts)


@dataclass(frozen=True)
class ModeRegistry:
    """Ordered collection of distinct mode labels."""

    labels: tuple[str, ...]

    def __post_init__(self) -> None:
        labels = tuple(str(label) for label in self.labels)
        object.__setattr__(self, "labels", labels)
        if not labels:
            raise DeviceValidationError("a mode registry needs at least one mode")
        if len(set(labels)) != len(labels):
            raise DeviceValidationError(f"mode labels must be unique, got {labels}")
        object.__setattr__(self, "_index", {label: i for i, label in enumerate(labels)})

    @property
    def mode_count(self) -> int:
        return len(self.labels)

    def index(self, label: str) -> int:
        try:
            return self._index[label]  # type: ignore[attr-defined]
        except KeyError:
            raise UnknownModeError(f"unknown mode label {label!r}; registry has {self.labels}") from None

    def positions(self, labels: Sequence[str]) -> tuple[int, ...]:
        return tuple(self.index(label) for label in labels)

    def subset(self, labels: Sequence[str]) -> "ModeRegistry":
        """Registry over a subset of modes, in the order given."""
        for label in labels:
            self.index(label)
        return ModeRegistry(tuple(labels))


class FockVector:
    """Sparse complex superposition of occupation-number basis states."""

    __slots__ = ("registry", "terms")

    def __init__(
        self,
        registry: ModeRegistry,
        terms: Mapping[OccupationVector, complex] | None = None,
    ) -> None:
        self.registry = registry
        accumulated: dict[OccupationVector, complex] = {}
        for occ, amp in (terms or {}).items():
            if not isinstance(occ, OccupationVector):
                occ = OccupationVector(occ)
            if len(occ) != registry.mode_count:
                raise ModeMismatchError(
                    f"occupation {tuple(occ)} has {len(occ)} modes, registry has {registry.mode_count}"
                )
            accumulated[occ] = accumulated.get(occ, 0j) + complex(amp)
        self.terms = {occ: amp for occ, amp in accumulated.items() if abs(amp) >= AMPLITUDE_EPS}

    @staticmethod
    def vacuum(registry: ModeRegistry, amplitude: complex = 1.0) -> "FockVector":
        return FockVector(registry, {OccupationVector([0] * registry.mode_count): amplitude})

    @staticmethod
    def basis_state(registry: ModeRegistry, counts: Iterable[int]) -> "FockVector":
        return FockVector(registry, {OccupationVector(counts): 1.0})

    def is_zero(self) -> bool:
        return not self.terms

    def norm(self) -> float:
        return math.sqrt(sum(abs(a) ** 2 for a in self.terms.values()))

    def normalized(self) -> "FockVector":
        n = self.norm()
        if n == 0.0:
            raise ValueError("cannot normalize the zero vector")
        return (1.0 / n) * self

    def total_photons(self) -> int:
        """Largest photon number carried by any stored term."""
        return max((occ.total for occ in self.terms), default=0)

    def __add__(self, other: "FockVector") -> "FockVector":
        _require_same_registry(self, other)
        merged = dict(self.terms)
        for occ, amp in other.terms.items():
            merged[occ] = merged.get(occ, 0j) + amp
        return FockVector(self.registry, merged)

    def __sub__(self, other: "FockVector") -> "FockVector":
        return self + (-1.0) * other

    def __mul__(self, scalar: complex) -> "FockVector":
        return FockVector(self.registry, {occ: amp * scalar for occ, amp in self.terms.items()})

    __rmul__ = __mul__

    def __neg__(self) -> "FockVector":
        return (-1.0) * self

    def __iter__(self) -> Iterator[tuple[OccupationVector, complex]]:
        return iter(sorted(self.terms.items()))

    def __repr__(self) -> str:
        if not self.terms:
            return "FockVector<0>"
        parts = [f"({amp:.6g})|{','.join(map(str, occ))}>" for occ, amp in sorted(self.terms.items())]
        return "FockVector<" + " + ".join(parts) + ">"


class FockSubspaceBasis:
    """Ordered orthonormal set of Fock vectors spanning a subspace."""

    __slots__ = ("vectors",)

    def __init__(self, vectors: Iterable[FockVector], tol: float = ORTHONORMALITY_TOL) -> None:
        vecs = tuple(vectors)
        if vecs:
            registry = vecs[0].registry
            for v in vecs[1:]:
                if v.registry != registry:
                    raise ModeMismatchError("all basis vectors must share one registry")
            deviation = float(np.max(np.abs(_gram(vecs) - np.eye(len(vecs)))))
            if deviation > tol:
                raise DeviceValidationError(
                    f"subspace basis is not orthonormal: max Gram deviation {deviation:.3e} > {tol:.1e}"
                )
        self.vectors = vecs

    @property
    def dimension(self) -> int:
        return len(self.vectors)

    @property
    def registry(self) -> ModeRegistry:
        if not self.vectors:
            raise ValueError("empty basis has no registry")
        return self.vectors[0].registry

    def gram(self) -> np.ndarray:
        return _gram(self.vectors)

    def coefficients(self, v: FockVector) -> np.ndarray:
        """Projection coefficients <b_i|v> of ``v`` onto this basis."""
        return np.array([inner(b, v) for b in self.vectors], dtype=complex)

    def __len__(self) -> int:
        return len(self.vectors)

    def __iter__(self) -> Iterator[FockVector]:
        return iter(self.vectors)

    def __getitem__(self, i: int) -> FockVector:
        return self.vectors[i]


def _gram(vectors: Sequence[FockVector]) -> np.ndarray:
    n = len(vectors)
    g = np.zeros((n, n), dtype=complex)
    for i, u in enumerate(vectors):
        for j, v in enumerate(vectors):
            if j < i:
                g[i, j] = np.conj(g[j, i])
            else:
                g[i, j] = inner(u, v)
    return g


def _require_same_registry(u: FockVector, v: FockVector) -> None:
    if u.registry != v.registry:
        raise ModeMismatchError(
            f"states live on different registries: {u.registry.labels} vs {v.registry.labels}"
        )


def enumerate_sector(registry: ModeRegistry, n: int) -> list[OccupationVector]:
    """All occupation vectors with total photon number ``n``, lexicographic.

    The sector has C(n + m - 1, n) elements for m modes.
    """
    if n < 0:
        raise ValueError("photon number must be non-negative")

    def fill(modes_left: int, photons_left: int) -> Iterator[tuple[int, ...]]:
        if modes_left == 1:
            yield (photons_left,)
            return
        for count in range(photons_left + 1):
            for rest in fill(modes_left - 1, photons_left - count):
                yield (count,) + rest

    return [OccupationVector(counts) for counts in fill(registry.mode_count, n)]


def create(v: FockVector, mode: str) -> FockVector:
    """Apply the creation operator for ``mode``: |n> -> sqrt(n+1)|n+1>."""
    idx = v.registry.index(mode)
    return FockVector(
        v.registry,
        {occ.bump(idx, +1): amp * math.sqrt(occ[idx] + 1) for occ, amp in v.terms.items()},
    )


def annihilate(v: FockVector, mode: str) -> FockVector:
    """Apply the annihilation operator for ``mode``: |n> -> sqrt(n)|n-1>."""
    idx = v.registry.index(mode)
    return FockVector(
        v.registry,
        {
            occ.bump(idx, -1): amp * math.sqrt(occ[idx])
            for occ, amp in v.terms.items()
            if occ[idx] > 0
        },
    )


def inner(u: FockVector, v: FockVector) -> complex:
    """Hermitian inner product <u|v>, conjugate-linear in ``u``."""
    _require_same_registry(u, v)
    small, large = (u.terms, v.terms) if len(u.terms) <= len(v.terms) else (v.terms, u.terms)
    acc = 0j
    for occ in small:
        if occ in large:
            acc += np.conj(u.terms[occ]) * v.terms[occ]
    return complex(acc)


def embed_product(
    parts: Sequence[tuple[FockVector, Sequence[str]]],
    registry: ModeRegistry | None = None,
) -> FockVector:
    """Tensor product of states on disjoint mode subsets.

    Each part is ``(vector, labels)`` where the vector lives on a registry
    with exactly those labels. The subsets must partition the target
    registry; when ``registry`` is omitted, the concatenation of the subsets
    (in the order given) defines it.

    Args:
        parts: factors and the mode labels they occupy.
        registry: target registry; defaults to the concatenated subsets.

    Returns:
        The product state on the full registry.
    """
    all_labels: list[str] = []
    for vector, labels in parts:
        if tuple(vector.registry.labels) != tuple(labels):
            raise ModeMismatchError(
                f"part on {vector.registry.labels} does not match declared subset {tuple(labels)}"
            )
        all_labels.extend(labels)
    if len(set(all_labels)) != len(all_labels):
        raise DeviceValidationError("embedding subsets overlap")
    if registry is None:
        registry = ModeRegistry(tuple(all_labels))
    if set(all_labels) != set(registry.labels):
        raise DeviceValidationError(
            "embedding subsets do not partition the target registry: "
            f"{sorted(set(registry.labels) ^ set(all_labels))} unmatched"
        )

    result: dict[OccupationVector, complex] = {OccupationVector([0] * registry.mode_count): 1.0}
    for vector, labels in parts:
        positions = registry.positions(labels)
        grown: dict[OccupationVector, complex] = {}
        for base, base_amp in result.items():
            for occ, amp in vector.terms.items():
                counts = list(base)
                for pos, c in zip(positions, occ):
                    counts[pos] = c
                key = OccupationVector(counts)
                grown[key] = grown.get(key, 0j) + base_amp * amp
        result = grown
    return FockVector(registry, result)


def partial_inner(bra: FockVector, ket: FockVector, keep: Sequence[str]) -> FockVector:
    """Contract ``<bra|`` over its modes, leaving a state on the ``keep`` modes.

    ``bra`` lives on a subset of ``ket``'s registry and ``keep`` lists the
    complementary labels; the result is a FockVector on the ``keep``
    registry, in the order given.
    """
    bra_labels = bra.registry.labels
    if set(bra_labels) | set(keep) != set(ket.registry.labels) or set(bra_labels) & set(keep):
        raise ModeMismatchError("bra modes plus kept modes must partition the ket registry")
    bra_pos = ket.registry.positions(bra_labels)
    keep_pos = ket.registry.positions(keep)
    out_registry = ket.registry.subset(keep)

    result: dict[OccupationVector, complex] = {}
    for occ, amp in ket.terms.items():
        bra_occ = OccupationVector(occ[p] for p in bra_pos)
        coeff = bra.terms.get(bra_occ)
        if coeff is None:
            continue
        keep_occ = OccupationVector(occ[p] for p in keep_pos)
        result[keep_occ] = result.get(keep_occ, 0j) + np.conj(coeff) * amp
    return FockVector(out_registry, result)
