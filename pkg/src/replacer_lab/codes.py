"""Code subspaces: representation, validation, random generation and file I/O."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import TYPE_CHECKING, Any, Sequence

import numpy as np

from .tensor import (
    DEFAULT_TOL,
    RANK_TOL,
    LayoutLike,
    SystemLayout,
    as_layout,
    check_subset,
    fix_phase,
    from_bipartite,
    max_abs,
    random_isometry,
    schmidt,
)

if TYPE_CHECKING:
    from .structure import StructureDecomposition


class CodeFormatError(ValueError):
    """A code file could not be parsed."""


class CodeValidationError(ValueError):
    """A code basis is not orthonormal."""


class DimensionBoundError(ValueError):
    """Requested ``dim S * dim A`` exceeds the dimension of the kept sites."""


@dataclass(frozen=True)
class CodeSubspace:
    """A subspace given by basis vectors stored as the rows of ``basis``."""

    layout: SystemLayout
    basis: np.ndarray = field(repr=False)
    label: str = ""
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self) -> None:
        layout = as_layout(self.layout)
        basis = np.atleast_2d(np.asarray(self.basis, dtype=complex))
        if basis.shape[1] != layout.total_dim:
            raise ValueError(
                f"basis vectors have length {basis.shape[1]}, layout needs {layout.total_dim}"
            )
        if not 1 <= basis.shape[0] <= layout.total_dim:
            raise ValueError(f"code dimension {basis.shape[0]} out of range")
        object.__setattr__(self, "layout", layout)
        object.__setattr__(self, "basis", basis)

    @classmethod
    def from_vectors(
        cls, layout: LayoutLike, vectors: Sequence[Sequence[complex]], label: str = "", meta=None
    ) -> "CodeSubspace":
        """Build a code, normalizing each vector (unnormalized input is fine)."""
        basis = np.array([np.asarray(v, dtype=complex) for v in vectors])
        return cls(as_layout(layout), _normalize_rows(basis), label, dict(meta or {}))

    @property
    def dim(self) -> int:
        return self.basis.shape[0]

    @property
    def dims(self) -> tuple[int, ...]:
        return self.layout.dims

    @property
    def matrix(self) -> np.ndarray:
        """Basis vectors as columns, i.e. the encoding isometry."""
        return self.basis.T

    def projector(self) -> np.ndarray:
        c = self.matrix
        return c @ c.conj().T


def _normalize_rows(basis: np.ndarray, eps: float = 1e-12) -> np.ndarray:
    # rows already normalized to rounding are left untouched so file round trips are exact
    out = basis.copy()
    for i, row in enumerate(out):
        norm = np.linalg.norm(row)
        if norm == 0:
            raise CodeValidationError(f"basis vector {i} is zero")
        if abs(norm - 1) > eps:
            out[i] = row / norm
    return out


@dataclass
class ValidationReport:
    passed: bool
    max_deviation: float
    problems: list[str] = field(default_factory=list)


def validate_code(code: CodeSubspace, tol: float = DEFAULT_TOL) -> ValidationReport:
    """Check the basis is orthonormal (Gram matrix equal to the identity)."""
    problems = []
    if code.basis.shape[1] != code.layout.total_dim:
        problems.append("vector length does not match layout")
    gram = code.basis.conj() @ code.basis.T
    dev = max_abs(gram - np.eye(code.dim))
    if dev > tol:
        problems.append(f"Gram matrix deviates from identity by {dev:.3g}")
    return ValidationReport(not problems, dev, problems)


def orthonormalize(code: CodeSubspace) -> CodeSubspace:
    """Return an orthonormal basis of the same span (QR, phases fixed)."""
    q, r = np.linalg.qr(code.basis.T)
    rank = int(np.sum(np.abs(np.diagonal(r)) > RANK_TOL))
    if rank < code.dim:
        raise CodeValidationError(f"basis vectors are linearly dependent (rank {rank})")
    basis = np.array([fix_phase(col) for col in q.T])
    return CodeSubspace(code.layout, basis, code.label, dict(code.meta))


def generate_code(
    layout: LayoutLike,
    subset: Sequence[int],
    dim_s: int,
    dim_a: int,
    seed: int | np.random.Generator | None = None,
    *,
    isometry: np.ndarray | None = None,
    psi: np.ndarray | None = None,
    label: str = "generated",
) -> tuple[CodeSubspace, "StructureDecomposition"]:
    """Sample a code that is correctable for every replacer on ``subset``.

    Basis states are ``(U (x) I_E)(|i>_R (x) |psi>_AE)`` for a Haar-random
    isometry ``U: R(x)A -> complement`` and a random ``|psi>_AE`` of full
    Schmidt rank ``dim_a``.  Either ingredient can be supplied explicitly
    instead (``isometry`` with columns ordered ``(i, a)``, ``psi`` on ``A (x) E``).

    Raises:
        DimensionBoundError: if ``dim_s * dim_a`` exceeds the kept dimension.
        ValueError: if ``dim_a`` exceeds the dimension of ``subset``.
    """
    from .structure import StructureDecomposition

    layout = as_layout(layout)
    subset = check_subset(subset, layout.n)
    d_e = layout.sub(subset).total_dim
    d_keep = layout.total_dim // d_e
    if dim_s < 1 or dim_a < 1:
        raise ValueError("dim_s and dim_a must be positive")
    if dim_s * dim_a > d_keep:
        raise DimensionBoundError(
            f"(dim A)(dim S) = {dim_a * dim_s} exceeds the kept dimension {d_keep}"
        )
    if dim_a > d_e:
        raise ValueError(f"dim A = {dim_a} exceeds dim E = {d_e}; no such Schmidt rank")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)

    if isometry is None:
        isometry = random_isometry(rng, d_keep, dim_s * dim_a)
    isometry = np.asarray(isometry, dtype=complex)
    if isometry.shape != (d_keep, dim_s * dim_a):
        raise ValueError(f"isometry must be {d_keep}x{dim_s * dim_a}, got {isometry.shape}")
    if max_abs(isometry.conj().T @ isometry - np.eye(dim_s * dim_a)) > DEFAULT_TOL:
        raise ValueError("supplied isometry is not an isometry")

    if psi is None:
        while True:
            g = rng.normal(size=(dim_a, d_e)) + 1j * rng.normal(size=(dim_a, d_e))
            _, s, vh = np.linalg.svd(g / np.linalg.norm(g), full_matrices=False)
            if s[-1] > 1e-3:
                break
        # Schmidt form sum_k s_k |k>_A |v_k>_E; the A-side unitary is absorbed in U
        psi = (s[:, None] * vh).reshape(-1)
    psi = np.asarray(psi, dtype=complex)
    if psi.shape != (dim_a * d_e,):
        raise ValueError(f"psi must have length {dim_a * d_e}")
    psi = psi / np.linalg.norm(psi)

    mat = psi.reshape(dim_a, d_e)
    gamma = np.linalg.svd(mat, compute_uv=False) ** 2
    if np.sum(gamma > RANK_TOL) != dim_a:
        raise ValueError("psi does not have full Schmidt rank dim A")

    kept = isometry.reshape(d_keep, dim_s, dim_a)
    basis = []
    for i in range(dim_s):
        bip = (kept[:, i, :] @ mat).reshape(-1)
        basis.append(from_bipartite(bip, layout, subset))
    code = CodeSubspace(layout, np.array(basis), label, {"seeded": seed if isinstance(seed, int) else None})
    decomposition = StructureDecomposition(
        layout=layout,
        subset=subset,
        dim_r=dim_s,
        dim_a=dim_a,
        isometry=isometry,
        gamma=np.sort(gamma)[::-1],
        psi=psi,
        sigma=np.eye(d_e, dtype=complex) / d_e,
    )
    return code, decomposition


def triviality_check(decomposition: "StructureDecomposition", tol: float = DEFAULT_TOL) -> bool:
    """True iff ``|psi>_AE`` is a product state, i.e. the code is ``S' (x) |phi>_E``."""
    mat = decomposition.psi.reshape(decomposition.dim_a, -1)
    return bool(np.linalg.svd(mat, compute_uv=False)[0] >= 1 - tol)


def shared_tensor_factor(
    code: CodeSubspace, sites: Sequence[int], tol: float = DEFAULT_TOL
) -> np.ndarray | None:
    """Common product factor of all code states on ``sites``, or None.

    Returns the factor ``|psi_0>`` (phase-fixed) when every basis vector is
    ``|psi'_i> (x) |psi_0>`` across (rest : sites) with one and the same
    ``|psi_0>``; every state in the span then carries that factor too.
    """
    sites = check_subset(sites, code.layout.n)
    factor = None
    for vec in code.basis:
        sch = schmidt(vec, code.layout, sites)
        if sch.coeffs[0] < 1 - tol or len(sch.coeffs) > 1:
            return None
        f = sch.right[:, 0]
        if factor is None:
            factor = fix_phase(f)
        elif abs(np.vdot(factor, f)) < 1 - tol:
            return None
    return factor


# -- serialization ---------------------------------------------------------


def encode_complex(arr: np.ndarray) -> list:
    """Nested lists with every complex entry as a ``[re, im]`` pair."""
    arr = np.asarray(arr, dtype=complex)
    if arr.ndim == 0:
        return [float(arr.real), float(arr.imag)]
    return [encode_complex(a) for a in arr]


def decode_complex(raw: Any, ndim: int) -> np.ndarray:
    """Inverse of :func:`encode_complex` for an array of known rank."""

    def rec(x, depth):
        if depth == 0:
            if not (isinstance(x, (list, tuple)) and len(x) == 2):
                raise CodeFormatError(f"complex numbers must be [re, im] pairs, got {x!r}")
            return complex(float(x[0]), float(x[1]))
        if not isinstance(x, (list, tuple)):
            raise CodeFormatError(f"expected a list, got {x!r}")
        return [rec(y, depth - 1) for y in x]

    try:
        return np.array(rec(raw, ndim), dtype=complex)
    except (TypeError, ValueError) as exc:
        if isinstance(exc, CodeFormatError):
            raise
        raise CodeFormatError(str(exc)) from exc


def code_to_dict(code: CodeSubspace) -> dict:
    return {
        "dims": list(code.dims),
        "label": code.label,
        "basis": encode_complex(code.basis),
        "meta": code.meta,
    }


def code_from_dict(data: dict, tol: float = DEFAULT_TOL) -> CodeSubspace:
    """Parse, normalize and validate a code document.

    Raises:
        CodeFormatError: malformed document or vectors of the wrong length.
        CodeValidationError: vectors are not orthonormal after normalization.
    """
    if not isinstance(data, dict):
        raise CodeFormatError("code document must be a JSON object")
    for key in ("dims", "basis"):
        if key not in data:
            raise CodeFormatError(f"missing key {key!r}")
    try:
        layout = SystemLayout(tuple(int(d) for d in data["dims"]))
    except (TypeError, ValueError) as exc:
        raise CodeFormatError(f"bad dims: {exc}") from exc
    raw = data["basis"]
    if not isinstance(raw, list) or not raw:
        raise CodeFormatError("basis must be a non-empty list of vectors")
    vectors = [decode_complex(v, 1) for v in raw]
    for i, v in enumerate(vectors):
        if v.shape != (layout.total_dim,):
            raise CodeFormatError(
                f"basis vector {i} has length {v.shape[0]}, dims {list(layout.dims)} need "
                f"{layout.total_dim}"
            )
    basis = _normalize_rows(np.array(vectors))
    code = CodeSubspace(layout, basis, str(data.get("label", "")), dict(data.get("meta") or {}))
    report = validate_code(code, tol)
    if not report.passed:
        raise CodeValidationError(
            f"{'; '.join(report.problems)}. The basis must be orthonormal; "
            "replacer_lab.codes.orthonormalize() builds an orthonormal basis of the same span "
            "if that is what you intend."
        )
    return code


def save_code(code: CodeSubspace, path: str | Path) -> None:
    Path(path).write_text(json.dumps(code_to_dict(code), indent=1) + "\n", encoding="utf-8")


def load_code(path: str | Path, tol: float = DEFAULT_TOL) -> CodeSubspace:
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise CodeFormatError(f"{path}: not valid JSON ({exc})") from exc
    return code_from_dict(data, tol)
