"""Qubit stabilizer codes in the symplectic (x|z) representation."""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import reduce
from typing import Iterable, Iterator, Sequence

import numpy as np

from .codes import CodeSubspace
from .tensor import DEFAULT_TOL, SystemLayout, canonical_basis, check_subset, hermitian_eig

MAX_ENUMERATION_SITES = 8
MAX_GENERATORS = 10

_PHASE_PREFIXES = {"+": 0, "i": 1, "+i": 1, "-": 2, "-i": 3}
_LETTER_BITS = {"I": (0, 0), "X": (1, 0), "Y": (1, 1), "Z": (0, 1)}
_BITS_LETTER = {v: k for k, v in _LETTER_BITS.items()}
_SINGLE = {
    (0, 0): np.eye(2, dtype=complex),
    (1, 0): np.array([[0, 1], [1, 0]], dtype=complex),
    (1, 1): np.array([[0, -1j], [1j, 0]]),
    (0, 1): np.array([[1, 0], [0, -1]], dtype=complex),
}


class PauliParseError(ValueError):
    pass


class StabilizerError(ValueError):
    pass


class EnumerationGuardError(ValueError):
    pass


def _g(x1: int, z1: int, x2: int, z2: int) -> int:
    """Exponent of ``i`` picked up when multiplying single-qubit Paulis."""
    if x1 == 0 and z1 == 0:
        return 0
    if x1 == 1 and z1 == 1:
        return z2 - x2
    if x1 == 1:
        return z2 * (2 * x2 - 1)
    return x2 * (1 - 2 * z2)


@dataclass(frozen=True)
class PauliOperator:
    """``i^phase`` times a tensor product of ``I, X, Y, Z`` (``Y = i X Z``)."""

    x: tuple[int, ...]
    z: tuple[int, ...]
    phase: int = 0

    def __post_init__(self) -> None:
        if len(self.x) != len(self.z):
            raise ValueError("x and z bit vectors differ in length")
        object.__setattr__(self, "x", tuple(int(b) & 1 for b in self.x))
        object.__setattr__(self, "z", tuple(int(b) & 1 for b in self.z))
        object.__setattr__(self, "phase", self.phase % 4)

    @property
    def n(self) -> int:
        return len(self.x)

    @classmethod
    def parse(cls, text: str) -> "PauliOperator":
        """Parse ``"XZZXI"``, ``"-XZ"``, ``"iY"``, ``"-iZZ"`` and similar."""
        s = text.strip().replace(" ", "")
        body = s.lstrip("+-i")
        prefix = s[: len(s) - len(body)]
        if prefix and prefix not in _PHASE_PREFIXES:
            raise PauliParseError(f"bad phase prefix {prefix!r} in {text!r}")
        if not body:
            raise PauliParseError(f"empty Pauli string {text!r}")
        bad = sorted(set(body) - set(_LETTER_BITS))
        if bad:
            raise PauliParseError(f"bad character(s) {''.join(bad)!r} in {text!r}")
        bits = [_LETTER_BITS[c] for c in body]
        return cls(tuple(b[0] for b in bits), tuple(b[1] for b in bits), _PHASE_PREFIXES.get(prefix, 0))

    @classmethod
    def identity(cls, n: int) -> "PauliOperator":
        return cls((0,) * n, (0,) * n)

    @classmethod
    def from_support(cls, n: int, letters: dict[int, str]) -> "PauliOperator":
        """Paulis given per 1-based site, identity elsewhere."""
        chars = ["I"] * n
        for site, letter in letters.items():
            chars[site - 1] = letter
        return cls.parse("".join(chars))

    def __str__(self) -> str:
        prefix = ("", "i", "-", "-i")[self.phase]
        return prefix + "".join(_BITS_LETTER[b] for b in zip(self.x, self.z))

    @property
    def symplectic(self) -> np.ndarray:
        return np.array(self.x + self.z, dtype=np.uint8)

    @property
    def support(self) -> tuple[int, ...]:
        return tuple(i + 1 for i, (a, b) in enumerate(zip(self.x, self.z)) if a or b)

    def is_identity_up_to_phase(self) -> bool:
        return not any(self.x) and not any(self.z)

    def __mul__(self, other: "PauliOperator") -> "PauliOperator":
        if self.n != other.n:
            raise ValueError("Pauli operators act on different qubit counts")
        extra = sum(_g(a, b, c, d) for a, b, c, d in zip(self.x, self.z, other.x, other.z))
        x = tuple(a ^ c for a, c in zip(self.x, other.x))
        z = tuple(b ^ d for b, d in zip(self.z, other.z))
        return PauliOperator(x, z, self.phase + other.phase + extra)

    def commutes(self, other: "PauliOperator") -> bool:
        if self.n != other.n:
            raise ValueError("Pauli operators act on different qubit counts")
        form = sum(a * d + b * c for a, b, c, d in zip(self.x, self.z, other.x, other.z))
        return form % 2 == 0

    def with_phase(self, phase: int) -> "PauliOperator":
        return PauliOperator(self.x, self.z, phase)

    def to_matrix(self) -> np.ndarray:
        mats = [_SINGLE[b] for b in zip(self.x, self.z)]
        return (1j**self.phase) * reduce(np.kron, mats)


def pauli_parse(text: str) -> PauliOperator:
    return PauliOperator.parse(text)


def pauli_mul(a: PauliOperator, b: PauliOperator) -> PauliOperator:
    return a * b


def pauli_commutes(a: PauliOperator, b: PauliOperator) -> bool:
    return a.commutes(b)


# -- GF(2) linear algebra ------------------------------------------------------


def gf2_rank(rows: np.ndarray) -> int:
    m = np.array(rows, dtype=np.uint8) & 1
    rank = 0
    for col in range(m.shape[1] if m.ndim == 2 else 0):
        pivots = np.nonzero(m[rank:, col])[0]
        if pivots.size == 0:
            continue
        p = rank + pivots[0]
        m[[rank, p]] = m[[p, rank]]
        others = np.nonzero(m[:, col])[0]
        others = others[others != rank]
        m[others] ^= m[rank]
        rank += 1
        if rank == m.shape[0]:
            break
    return rank


def gf2_in_span(rows: np.ndarray, v: np.ndarray) -> bool:
    rows = np.asarray(rows, dtype=np.uint8)
    if rows.size == 0:
        return not np.any(v)
    return gf2_rank(np.vstack([rows, v])) == gf2_rank(rows)


# -- stabilizer groups -----------------------------------------------------------


@dataclass(frozen=True)
class StabilizerGroup:
    """An Abelian Pauli subgroup without ``-I``, given by independent generators."""

    generators: tuple[PauliOperator, ...]

    def __post_init__(self) -> None:
        gens = tuple(self.generators)
        if not gens:
            raise StabilizerError("a stabilizer group needs at least one generator")
        n = gens[0].n
        if any(g.n != n for g in gens):
            raise StabilizerError("generators act on different qubit counts")
        if len(gens) > MAX_GENERATORS:
            raise EnumerationGuardError(f"more than {MAX_GENERATORS} generators")
        for a, b in itertools.combinations(gens, 2):
            if not a.commutes(b):
                raise StabilizerError(f"generators {a} and {b} anticommute")
        for g in gens:
            if (g * g).phase != 0:
                raise StabilizerError(f"generator {g} squares to -I")
        if gf2_rank(np.array([g.symplectic for g in gens])) != len(gens):
            raise StabilizerError("generators are not independent")
        object.__setattr__(self, "generators", gens)

    @classmethod
    def from_strings(cls, strings: Iterable[str]) -> "StabilizerGroup":
        return cls(tuple(PauliOperator.parse(s) for s in strings))

    @property
    def n(self) -> int:
        return self.generators[0].n

    @property
    def r(self) -> int:
        return len(self.generators)

    def symplectic_matrix(self) -> np.ndarray:
        return np.array([g.symplectic for g in self.generators])

    def elements(self) -> Iterator[PauliOperator]:
        """All ``2^r`` products of generator subsets, with tracked phases."""
        ident = PauliOperator.identity(self.n)
        for mask in itertools.product((0, 1), repeat=self.r):
            p = ident
            for bit, g in zip(mask, self.generators):
                if bit:
                    p = p * g
            if p.is_identity_up_to_phase() and p.phase != 0:
                raise StabilizerError("generated group contains a nontrivial multiple of I")
            yield p

    def projector(self) -> np.ndarray:
        return sum(p.to_matrix() for p in self.elements()) / 2**self.r

    def __str__(self) -> str:
        return ",".join(str(g) for g in self.generators)


def random_stabilizer_group(rng: np.random.Generator, n: int, r: int) -> StabilizerGroup:
    """Random generators by rejection sampling, with random signs."""
    if not 1 <= r <= n:
        raise ValueError("need 1 <= r <= n")
    while True:
        gens: list[PauliOperator] = []
        for _ in range(200):
            bits = rng.integers(0, 2, size=2 * n)
            cand = PauliOperator(tuple(bits[:n]), tuple(bits[n:]))
            if cand.is_identity_up_to_phase():
                continue
            if not all(cand.commutes(g) for g in gens):
                continue
            if gf2_in_span(np.array([g.symplectic for g in gens]).reshape(-1, 2 * n), cand.symplectic):
                continue
            gens.append(cand.with_phase(2 * int(rng.integers(0, 2))))
            if len(gens) == r:
                return StabilizerGroup(tuple(gens))


def codewords_from_stabilizer(
    group: StabilizerGroup, tol: float = DEFAULT_TOL, label: str | None = None
) -> CodeSubspace:
    """Orthonormal basis of the +1 eigenspace of every generator."""
    proj = group.projector()
    w, v = hermitian_eig(proj, tol)
    keep = w > 0.5
    basis = canonical_basis(v[:, keep])
    dim = 2 ** (group.n - group.r)
    if basis.shape[1] != dim:
        raise StabilizerError(f"expected a {dim}-dimensional code, found {basis.shape[1]}")
    layout = SystemLayout((2,) * group.n)
    return CodeSubspace(layout, basis.T.copy(), label or f"stabilizer[{group}]", {"generators": [str(g) for g in group.generators]})


def normalizer_membership(group: StabilizerGroup, p: PauliOperator) -> bool:
    if p.n != group.n:
        raise ValueError(f"Pauli acts on {p.n} qubits, group on {group.n}")
    return all(p.commutes(g) for g in group.generators)


def group_membership_up_to_phase(group: StabilizerGroup, p: PauliOperator) -> bool:
    """Membership of ``p`` in ``<S, iI>``: a phase-free GF(2) span test."""
    if p.n != group.n:
        raise ValueError(f"Pauli acts on {p.n} qubits, group on {group.n}")
    return gf2_in_span(group.symplectic_matrix(), p.symplectic)


def is_logical(group: StabilizerGroup, p: PauliOperator) -> bool:
    """``p`` is in ``N(S)`` but not in ``<S, iI>``."""
    return normalizer_membership(group, p) and not group_membership_up_to_phase(group, p)


def paulis_on(n: int, subset: Sequence[int]) -> Iterator[PauliOperator]:
    """All ``4^|E|`` phase-free Paulis supported on ``subset``, lexicographic in ``I < X < Y < Z``."""
    subset = check_subset(subset, n, allow_empty=True)
    if len(subset) > MAX_ENUMERATION_SITES:
        raise EnumerationGuardError(
            f"|E| = {len(subset)} exceeds the enumeration limit of {MAX_ENUMERATION_SITES}"
        )
    for letters in itertools.product("IXYZ", repeat=len(subset)):
        yield PauliOperator.from_support(n, dict(zip(subset, letters)))


def logicals_on(group: StabilizerGroup, subset: Sequence[int]) -> list[PauliOperator]:
    """Every nontrivial logical Pauli supported on ``subset``."""
    return [p for p in paulis_on(group.n, subset) if is_logical(group, p)]


def erasure_correctable_subset(group: StabilizerGroup, subset: Sequence[int]) -> bool:
    """No element of ``N(S) \\ <S, iI>`` is supported on ``subset``."""
    return next(iter(_logicals_iter(group, subset)), None) is None


def _logicals_iter(group: StabilizerGroup, subset: Sequence[int]) -> Iterator[PauliOperator]:
    return (p for p in paulis_on(group.n, subset) if is_logical(group, p))


@dataclass(frozen=True)
class CleaningResult:
    passed: bool
    witness: PauliOperator | None
    centralizer_on_e: int
    stabilizer_on_e: int


def cleaning_check(group: StabilizerGroup, subset: Sequence[int]) -> CleaningResult:
    """Compare the centralizer and stabilizer elements supported on ``subset``.

    Both sets are taken up to phase.  They coincide exactly when the subset
    is erasure correctable; otherwise ``witness`` is the first logical
    operator supported on it in lexicographic order.
    """
    central = stab = 0
    witness = None
    for p in paulis_on(group.n, subset):
        if not normalizer_membership(group, p):
            continue
        central += 1
        if group_membership_up_to_phase(group, p):
            stab += 1
        elif witness is None:
            witness = p
    return CleaningResult(witness is None, witness, central, stab)


def clean_logical(group: StabilizerGroup, logical: PauliOperator, avoid: Sequence[int]) -> PauliOperator | None:
    """A stabilizer-equivalent form of ``logical`` acting trivially on ``avoid``, if any."""
    avoid = set(check_subset(avoid, group.n, allow_empty=True))
    for s in group.elements():
        cand = logical * s
        if not avoid.intersection(cand.support):
            return cand
    return None


def scan_subsets(group: StabilizerGroup, k: int) -> list[tuple[tuple[int, ...], bool]]:
    """``(subset, correctable)`` for every size-``k`` subset in lexicographic order."""
    if not 0 <= k <= group.n:
        raise ValueError(f"k must lie in [0, {group.n}]")
    if k > MAX_ENUMERATION_SITES:
        raise EnumerationGuardError(f"k = {k} exceeds the enumeration limit")
    return [
        (subset, erasure_correctable_subset(group, subset))
        for subset in itertools.combinations(range(1, group.n + 1), k)
    ]


def parse_generator_list(text: str) -> list[str]:
    """Generator strings from comma- or newline-separated text; ``#`` starts a comment."""
    out = []
    for line in text.splitlines():
        line = line.split("#", 1)[0]
        out.extend(tok.strip() for tok in line.split(",") if tok.strip())
    return out
