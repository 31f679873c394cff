"""Built-in example codes with known decompositions and correctability tables.

Vectors are written unnormalized, as sums of signed basis kets, and are
normalized when the fixture is built.  Every fixture that carries an
isometry table is checked against its own codewords before it is returned.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Mapping

import numpy as np

from .codes import CodeSubspace
from .stabilizer import StabilizerGroup
from .structure import StructureDecomposition
from .tensor import SystemLayout, check_subset

SELF_TEST_TOL = 1e-12


class UnknownFixture(KeyError):
    pass


@dataclass(frozen=True)
class Fixture:
    name: str
    code: CodeSubspace
    documented_e: tuple[int, ...]
    expected: StructureDecomposition
    expected_correctable: tuple[tuple[int, ...], ...]
    expected_uncorrectable: tuple[tuple[int, ...], ...]
    generators: tuple[str, ...] = ()
    meta: Mapping = field(default_factory=dict)

    def stabilizer_group(self) -> StabilizerGroup | None:
        return StabilizerGroup.from_strings(self.generators) if self.generators else None

    def self_test_residual(self) -> float:
        return self.expected.reconstruction_residual(self.code)


_TERM = re.compile(r"([+-]?)\s*\|([0-9]+)>")


def ket_sum(text: str, layout: SystemLayout) -> np.ndarray:
    """Parse ``"|000> - |011> + |101>"`` into an unnormalized amplitude vector."""
    v = np.zeros(layout.total_dim, dtype=complex)
    terms = _TERM.findall(text)
    if not terms or _TERM.sub("", text).strip():
        raise ValueError(f"cannot parse ket sum {text!r}")
    for sign, digits in terms:
        if len(digits) != layout.n:
            raise ValueError(f"ket |{digits}> does not match {layout.n} sites")
        v[layout.index([int(c) for c in digits])] += -1 if sign == "-" else 1
    return v


def _table(layout: SystemLayout, entries: list[list[str]], scale: float = 1.0) -> np.ndarray:
    """Isometry with column ``(i, a)`` given by ``entries[i][a]`` on the kept sites."""
    cols = [scale * ket_sum(e, layout) for row in entries for e in row]
    return np.column_stack(cols)


def _uniform_psi(dim_a: int, dim_e: int) -> np.ndarray:
    psi = np.zeros((dim_a, dim_e), dtype=complex)
    for a in range(dim_a):
        psi[a, a] = 1
    return (psi / np.sqrt(dim_a)).reshape(-1)


def _decomposition(layout, subset, table, psi, dim_r, dim_a) -> StructureDecomposition:
    d_e = layout.sub(subset).total_dim
    m = psi.reshape(dim_a, d_e)
    gamma = np.sort(np.linalg.svd(m, compute_uv=False) ** 2)[::-1]
    return StructureDecomposition(
        layout=layout,
        subset=tuple(subset),
        dim_r=dim_r,
        dim_a=dim_a,
        isometry=table.astype(complex),
        gamma=gamma,
        psi=psi,
        sigma=np.eye(d_e, dtype=complex) / d_e,
    )


def _subsets(n: int, sizes) -> tuple[tuple[int, ...], ...]:
    from itertools import combinations

    return tuple(c for k in sizes for c in combinations(range(1, n + 1), k))


def _grassl4() -> Fixture:
    layout = SystemLayout((2, 2, 2, 2))
    code = CodeSubspace.from_vectors(
        layout,
        [ket_sum(s, layout) for s in ("|0000>+|1111>", "|1001>+|0110>", "|1100>+|0011>", "|1010>+|0101>")],
        label="grassl4",
    )
    kept = SystemLayout((2, 2, 2))
    table = _table(
        kept,
        [["|000>", "|111>"], ["|011>", "|100>"], ["|110>", "|001>"], ["|101>", "|010>"]],
    )
    dec = _decomposition(layout, (4,), table, _uniform_psi(2, 2), 4, 2)
    return Fixture(
        "grassl4", code, (4,), dec,
        _subsets(4, [1]), _subsets(4, [2, 3, 4]),
        meta={"source": "Grassl-Beth-Pellizzari four-qubit erasure code"},
    )


def _cgl_qutrit() -> Fixture:
    layout = SystemLayout((3, 3, 3))
    code = CodeSubspace.from_vectors(
        layout,
        [ket_sum(s, layout) for s in ("|000>+|111>+|222>", "|012>+|120>+|201>", "|021>+|102>+|210>")],
        label="cgl_qutrit",
    )
    kept = SystemLayout((3, 3))
    table = _table(kept, [["|00>", "|11>", "|22>"], ["|12>", "|20>", "|01>"], ["|21>", "|02>", "|10>"]])
    dec = _decomposition(layout, (1,), table, _uniform_psi(3, 3), 3, 3)
    return Fixture(
        "cgl_qutrit", code, (1,), dec,
        _subsets(3, [1]), _subsets(3, [2, 3]),
        meta={"source": "Cleve-Gottesman-Lo ((2,3)) qutrit threshold scheme"},
    )


def _ququart() -> Fixture:
    layout = SystemLayout((4, 4))
    code = CodeSubspace.from_vectors(
        layout, [ket_sum("|00>+|11>", layout), ket_sum("|20>+|31>", layout)], label="ququart"
    )
    table = _table(SystemLayout((4,)), [["|0>", "|1>"], ["|2>", "|3>"]])
    dec = _decomposition(layout, (2,), table, _uniform_psi(2, 4), 2, 2)
    return Fixture(
        "ququart", code, (2,), dec, ((2,),), ((1,), (1, 2)),
        meta={"source": "qubit code on two ququarts whose logical system is not a site factor"},
    )


def _ququart_as_3qubit() -> Fixture:
    layout = SystemLayout((2, 2, 2))
    code = CodeSubspace.from_vectors(
        layout, [ket_sum("|000>+|011>", layout), ket_sum("|100>+|111>", layout)], label="ququart_as_3qubit"
    )
    table = _table(SystemLayout((2, 2)), [["|00>", "|01>"], ["|10>", "|11>"]])
    dec = _decomposition(layout, (3,), table, _uniform_psi(2, 2), 2, 2)
    return Fixture(
        "ququart_as_3qubit", code, (3,), dec,
        ((2,), (3,), (2, 3)), ((1,), (1, 2), (1, 3), (1, 2, 3)),
        meta={"source": "the ququart code with the first ququart split into two qubits"},
    )


_FIVE_ZERO = (
    "|00000> + |10010> + |01001> + |10100> + |01010> - |11011> - |00110> - |11000>"
    " - |11101> - |00011> - |11110> - |01111> - |10001> - |01100> - |10111> + |00101>"
)
_FIVE_ONE = (
    "|11111> + |01101> + |10110> + |01011> + |10101> - |00100> - |11001> - |00111>"
    " - |00010> - |11100> - |00001> - |10000> - |01110> - |10011> - |01000> + |11010>"
)
FIVE_QUBIT_GENERATORS = ("XZZXI", "IXZZX", "XIXZZ", "ZXIXZ")


def _five_qubit() -> Fixture:
    layout = SystemLayout((2,) * 5)
    code = CodeSubspace.from_vectors(
        layout, [ket_sum(_FIVE_ZERO, layout), ket_sum(_FIVE_ONE, layout)], label="five_qubit"
    )
    table = _table(
        SystemLayout((2, 2, 2)),
        [
            [
                "|000> - |011> + |101> - |110>",
                "|001> + |010> - |100> - |111>",
                "-|001> + |010> + |100> - |111>",
                "-|000> - |011> - |101> - |110>",
            ],
            [
                "-|001> - |010> - |100> - |111>",
                "-|000> + |011> + |101> - |110>",
                "-|000> - |011> + |101> + |110>",
                "-|001> + |010> - |100> + |111>",
            ],
        ],
        scale=0.5,
    )
    dec = _decomposition(layout, (4, 5), table, _uniform_psi(4, 4), 2, 4)
    return Fixture(
        "five_qubit", code, (4, 5), dec,
        _subsets(5, [1, 2]), _subsets(5, [3, 4, 5]),
        generators=FIVE_QUBIT_GENERATORS,
        meta={"source": "five-qubit perfect code in the Gottesman codeword basis"},
    )


def _trivial_demo() -> Fixture:
    layout = SystemLayout((2, 2, 2))
    code = CodeSubspace.from_vectors(
        layout, [ket_sum("|000>+|001>", layout), ket_sum("|110>+|111>", layout)], label="trivial_demo"
    )
    table = _table(SystemLayout((2, 2)), [["|00>"], ["|11>"]])
    psi = np.array([1, 1], dtype=complex) / np.sqrt(2)
    dec = _decomposition(layout, (3,), table, psi, 2, 1)
    return Fixture(
        "trivial_demo", code, (3,), dec,
        ((3,),), ((1,), (2,), (1, 2), (1, 3), (2, 3), (1, 2, 3)),
        meta={"source": "trivial code span{|00>,|11>} (x) |+> with a one-dimensional ancilla"},
    )


def _qutrit_variant() -> Fixture:
    layout = SystemLayout((2,) * 4)
    code = CodeSubspace.from_vectors(
        layout,
        [ket_sum("|0000>+|1110>+|0001>-|1111>", layout), ket_sum("|0110>+|1000>+|0111>-|1001>", layout)],
        label="qutrit_variant",
    )
    table = _table(
        SystemLayout((2, 2, 2)),
        [["|000>+|111>", "|000>-|111>"], ["|011>+|100>", "|011>-|100>"]],
        scale=1 / np.sqrt(2),
    )
    dec = _decomposition(layout, (4,), table, _uniform_psi(2, 2), 2, 2)
    return Fixture(
        "qutrit_variant", code, (4,), dec,
        _subsets(4, [1]), _subsets(4, [2, 3, 4]),
        meta={
            "source": "qubit code from a modified isometry on the four-qubit layout",
            "extension": {
                "constructible": True,
                "recipe": (
                    "append columns U(2, a), a = 0, 1, orthonormal to the range of U; "
                    "the resulting three-dimensional code is correctable on E = {4}"
                ),
            },
        },
    )


_BUILDERS = {
    "grassl4": _grassl4,
    "cgl_qutrit": _cgl_qutrit,
    "ququart": _ququart,
    "ququart_as_3qubit": _ququart_as_3qubit,
    "five_qubit": _five_qubit,
    "trivial_demo": _trivial_demo,
    "qutrit_variant": _qutrit_variant,
}


def list_fixtures() -> list[str]:
    return list(_BUILDERS)


@lru_cache(maxsize=None)
def fixture(name: str) -> Fixture:
    """Build, self-test and return a named fixture.

    Raises:
        UnknownFixture: ``name`` is not one of :func:`list_fixtures`.
        AssertionError: the stored isometry table does not reproduce the codewords.
    """
    try:
        builder = _BUILDERS[name]
    except KeyError:
        raise UnknownFixture(f"unknown fixture {name!r}; choose from {', '.join(_BUILDERS)}") from None
    fx = builder()
    for subset in fx.expected_correctable + fx.expected_uncorrectable:
        check_subset(subset, fx.code.layout.n)
    residual = fx.self_test_residual()
    if residual > SELF_TEST_TOL or fx.expected.isometry_residual() > SELF_TEST_TOL:
        raise AssertionError(f"fixture {name} fails its self-test (residual {residual:.3g})")
    return fx
