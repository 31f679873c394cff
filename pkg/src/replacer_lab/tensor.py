"""Dense linear algebra on multi-site tensor-product spaces.

Sites are numbered from 1 and site 1 is the most significant digit of a
computational-basis index, so ``|i_1 ... i_n>`` has index
``i_1 * d_2 * ... * d_n + ... + i_n``.  Every routine here is a pure function
of its inputs.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, NamedTuple, Sequence, Union

import numpy as np

DEFAULT_TOL = 1e-9
RANK_TOL = 1e-8

# eigen/Schmidt values closer than this are treated as one degenerate cluster
CLUSTER_TOL = 1e-8
# components below this magnitude are skipped when fixing the phase gauge
_PHASE_EPS = 1e-10
# minimum residual norm for a projected basis vector to join a canonical basis
_PIVOT_EPS = 1e-3


class NotHermitianError(ValueError):
    """Raised when a matrix expected to be Hermitian is not, within tolerance."""


@dataclass(frozen=True)
class SystemLayout:
    """Ordered local dimensions of a tensor-product Hilbert space."""

    dims: tuple[int, ...]

    def __post_init__(self) -> None:
        dims = tuple(int(d) for d in self.dims)
        if any(d < 2 for d in dims):
            raise ValueError(f"local dimensions must be >= 2, got {dims}")
        object.__setattr__(self, "dims", dims)

    @property
    def n(self) -> int:
        return len(self.dims)

    @property
    def total_dim(self) -> int:
        return int(np.prod(self.dims, dtype=np.int64)) if self.dims else 1

    def index(self, digits: Sequence[int]) -> int:
        """Basis index of a digit string (site 1 first)."""
        if len(digits) != self.n:
            raise ValueError(f"expected {self.n} digits, got {len(digits)}")
        idx = 0
        for digit, d in zip(digits, self.dims):
            if not 0 <= digit < d:
                raise ValueError(f"digit {digit} out of range for local dimension {d}")
            idx = idx * d + int(digit)
        return idx

    def digits(self, index: int) -> tuple[int, ...]:
        """Digit string of a basis index (inverse of :meth:`index`)."""
        if not 0 <= index < self.total_dim:
            raise ValueError(f"index {index} out of range")
        out = []
        for d in reversed(self.dims):
            index, r = divmod(index, d)
            out.append(r)
        return tuple(reversed(out))

    def sub(self, sites: Iterable[int]) -> "SystemLayout":
        """Layout of the given (1-based) sites, in the order given."""
        return SystemLayout(tuple(self.dims[s - 1] for s in sites))

    def complement(self, sites: Iterable[int]) -> tuple[int, ...]:
        chosen = set(sites)
        return tuple(s for s in range(1, self.n + 1) if s not in chosen)


LayoutLike = Union[SystemLayout, Sequence[int]]


def as_layout(layout: LayoutLike) -> SystemLayout:
    return layout if isinstance(layout, SystemLayout) else SystemLayout(tuple(layout))


def check_subset(subset: Iterable[int], n: int, allow_empty: bool = False) -> tuple[int, ...]:
    """Validate a set of 1-based site indices and return it sorted."""
    sites = [int(s) for s in subset]
    if len(set(sites)) != len(sites):
        raise ValueError(f"repeated site in subset {sites}")
    for s in sites:
        if not 1 <= s <= n:
            raise ValueError(f"site {s} out of range 1..{n}")
    if not sites and not allow_empty:
        raise ValueError("site subset must be non-empty")
    return tuple(sorted(sites))


def kron(*mats: np.ndarray) -> np.ndarray:
    """Kronecker product of any number of matrices (or vectors), left to right."""
    out = np.ones((1, 1)) if mats and np.ndim(mats[0]) == 2 else np.ones(1)
    for m in mats:
        out = np.kron(out, m)
    return out


def _inverse_perm(perm: Sequence[int], n: int) -> list[int]:
    if sorted(perm) != list(range(1, n + 1)):
        raise ValueError(f"{list(perm)} is not a permutation of 1..{n}")
    src = [0] * n
    for i, target in enumerate(perm):
        src[target - 1] = i
    return src


def permuted_layout(layout: LayoutLike, perm: Sequence[int]) -> SystemLayout:
    layout = as_layout(layout)
    src = _inverse_perm(perm, layout.n)
    return SystemLayout(tuple(layout.dims[s] for s in src))


def permute_sites(x: np.ndarray, layout: LayoutLike, perm: Sequence[int]) -> np.ndarray:
    """Reorder the tensor factors of a state vector or operator.

    ``perm[i - 1]`` is the new position of site ``i``; e.g. with
    ``perm = (2, 3, 1)`` the state ``|012>`` becomes ``|201>``.
    """
    layout = as_layout(layout)
    x = np.asarray(x)
    n, dims = layout.n, list(layout.dims)
    src = _inverse_perm(perm, n)
    new_dim = layout.total_dim
    if x.ndim == 1:
        if x.shape[0] != new_dim:
            raise ValueError(f"vector length {x.shape[0]} does not match layout {layout.dims}")
        return x.reshape(dims).transpose(src).reshape(new_dim)
    if x.ndim == 2:
        if x.shape != (new_dim, new_dim):
            raise ValueError(f"matrix shape {x.shape} does not match layout {layout.dims}")
        axes = src + [n + s for s in src]
        return x.reshape(dims + dims).transpose(axes).reshape(new_dim, new_dim)
    raise ValueError("expected a vector or a square matrix")


def bipartite_perm(layout: LayoutLike, subset: Sequence[int]) -> tuple[int, ...]:
    """Permutation moving the complement of ``subset`` first and ``subset`` last."""
    layout = as_layout(layout)
    order = list(layout.complement(subset)) + list(subset)
    perm = [0] * layout.n
    for pos, site in enumerate(order):
        perm[site - 1] = pos + 1
    return tuple(perm)


def to_bipartite(x: np.ndarray, layout: LayoutLike, subset: Sequence[int]) -> np.ndarray:
    """Express ``x`` in the ordering (complement sites, subset sites)."""
    return permute_sites(x, layout, bipartite_perm(layout, subset))


def from_bipartite(x: np.ndarray, layout: LayoutLike, subset: Sequence[int]) -> np.ndarray:
    """Inverse of :func:`to_bipartite`; ``layout`` is the original layout."""
    layout = as_layout(layout)
    perm = bipartite_perm(layout, subset)
    inv = [0] * layout.n
    for i, p in enumerate(perm):
        inv[p - 1] = i + 1
    return permute_sites(x, permuted_layout(layout, perm), inv)


def embed_operator(op: np.ndarray, layout: LayoutLike, subset: Sequence[int]) -> np.ndarray:
    """The operator ``I_{complement} (x) op`` with factors in the original site order."""
    layout = as_layout(layout)
    subset = check_subset(subset, layout.n)
    d_rest = layout.sub(layout.complement(subset)).total_dim
    return from_bipartite(np.kron(np.eye(d_rest), op), layout, subset)


def partial_trace(rho: np.ndarray, layout: LayoutLike, subset: Sequence[int]) -> np.ndarray:
    """Trace out ``subset``; the result lives on the remaining sites in their order."""
    layout = as_layout(layout)
    subset = check_subset(subset, layout.n, allow_empty=True)
    rho = np.asarray(rho)
    if rho.shape != (layout.total_dim, layout.total_dim):
        raise ValueError(f"matrix shape {rho.shape} does not match layout {layout.dims}")
    d_trace = layout.sub(subset).total_dim
    d_keep = layout.total_dim // d_trace
    t = to_bipartite(rho, layout, subset).reshape(d_keep, d_trace, d_keep, d_trace)
    return np.einsum("ajbj->ab", t)


def reduced_density(vec: np.ndarray, layout: LayoutLike, subset: Sequence[int]) -> np.ndarray:
    """``Tr_subset |v><v|`` computed without forming the full projector."""
    layout = as_layout(layout)
    subset = check_subset(subset, layout.n, allow_empty=True)
    d_trace = layout.sub(subset).total_dim
    m = to_bipartite(np.asarray(vec), layout, subset).reshape(-1, d_trace)
    return m @ m.conj().T


def fix_phase(vec: np.ndarray) -> np.ndarray:
    """Rotate the global phase so the first non-negligible entry is real positive."""
    nz = np.flatnonzero(np.abs(vec) > _PHASE_EPS)
    if nz.size == 0:
        return vec
    c = vec[nz[0]]
    return vec * (abs(c) / c)


def canonical_basis(block: np.ndarray) -> np.ndarray:
    """Deterministic orthonormal basis of the column span of ``block``.

    The span's projector is applied to computational basis vectors in index
    order and the results are Gram-Schmidt orthonormalized, so the output
    depends only on the subspace and not on the basis ``block`` came in.
    """
    n, m = block.shape
    if m == 0:
        return block
    q, _ = np.linalg.qr(block)
    out: list[np.ndarray] = []
    for j in range(n):
        w = q @ q[j].conj()
        for _ in range(2):
            for b in out:
                w = w - b * (b.conj() @ w)
        norm = np.linalg.norm(w)
        if norm > _PIVOT_EPS:
            out.append(fix_phase(w / norm))
            if len(out) == m:
                break
    return np.column_stack(out)


def _clusters(values: np.ndarray) -> list[slice]:
    out, start = [], 0
    for i in range(1, len(values) + 1):
        if i == len(values) or abs(values[i] - values[i - 1]) > CLUSTER_TOL:
            out.append(slice(start, i))
            start = i
    return out


def hermitian_eig(m: np.ndarray, tol: float = DEFAULT_TOL) -> tuple[np.ndarray, np.ndarray]:
    """Spectral decomposition of a Hermitian matrix.

    Returns eigenvalues in descending order and a unitary whose columns are
    the matching eigenvectors.  Each degenerate eigenspace gets the basis of
    :func:`canonical_basis`, and every eigenvector has its first
    non-negligible component real positive.

    Raises:
        NotHermitianError: if ``max|m - m^dagger| > tol``.
    """
    m = np.asarray(m, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError("expected a square matrix")
    dev = np.abs(m - m.conj().T).max() if m.size else 0.0
    if dev > tol:
        raise NotHermitianError(f"matrix is not Hermitian (deviation {dev:.3g})")
    w, v = np.linalg.eigh((m + m.conj().T) / 2)
    w, v = w[::-1], v[:, ::-1]
    for sl in _clusters(w):
        if sl.stop - sl.start > 1:
            v[:, sl] = canonical_basis(v[:, sl])
        else:
            v[:, sl.start] = fix_phase(v[:, sl.start])
    return w, v


class Schmidt(NamedTuple):
    """``v = sum_k coeffs[k] * left[:, k] (x) right[:, k]`` (cut sites trailing)."""

    coeffs: np.ndarray
    left: np.ndarray
    right: np.ndarray


def schmidt(
    v: np.ndarray, layout: LayoutLike, cut: Sequence[int], rank_tol: float = RANK_TOL
) -> Schmidt:
    """Schmidt decomposition of ``v`` across (complement of ``cut``) : ``cut``.

    Only coefficients above ``rank_tol`` are kept.  Left vectors follow the
    :func:`hermitian_eig` gauge; right vectors absorb the compensating phases.
    """
    layout = as_layout(layout)
    cut = check_subset(cut, layout.n)
    d_cut = layout.sub(cut).total_dim
    mat = to_bipartite(np.asarray(v, dtype=complex), layout, cut).reshape(-1, d_cut)
    u, s, vh = np.linalg.svd(mat, full_matrices=False)
    keep = s > rank_tol
    u, s, vh = u[:, keep], s[keep], vh[keep]
    for sl in _clusters(s):
        block = u[:, sl]
        if sl.stop - sl.start > 1:
            w = canonical_basis(block)
        else:
            w = fix_phase(block[:, 0])[:, None]
        # block = w @ q with q unitary, so s * block @ vh = s * w @ (q @ vh)
        q = w.conj().T @ block
        u[:, sl] = w
        vh[sl] = q @ vh[sl]
    return Schmidt(s, u, vh.T)


def von_neumann_entropy(rho: np.ndarray, rank_tol: float = RANK_TOL) -> float:
    """Entropy ``-sum lambda ln lambda`` in nats, ignoring eigenvalues below ``rank_tol``."""
    rho = np.asarray(rho, dtype=complex)
    lam = np.linalg.eigvalsh((rho + rho.conj().T) / 2)
    lam = lam[lam > rank_tol]
    return max(0.0, float(-np.sum(lam * np.log(lam))))


def random_state(rng: np.random.Generator, dim: int) -> np.ndarray:
    v = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    return v / np.linalg.norm(v)


def random_isometry(rng: np.random.Generator, rows: int, cols: int) -> np.ndarray:
    """Haar-distributed isometry ``C^cols -> C^rows`` (QR with phase fix of R)."""
    if cols > rows:
        raise ValueError(f"no isometry from dimension {cols} into {rows}")
    g = (rng.normal(size=(rows, cols)) + 1j * rng.normal(size=(rows, cols))) / np.sqrt(2)
    q, r = np.linalg.qr(g)
    d = np.diagonal(r)
    return q * (d / np.abs(d))


def random_density(rng: np.random.Generator, dim: int, rank: int | None = None) -> np.ndarray:
    """Random density matrix from a Ginibre matrix of the given rank."""
    rank = dim if rank is None else rank
    g = rng.normal(size=(dim, rank)) + 1j * rng.normal(size=(dim, rank))
    rho = g @ g.conj().T
    return rho / np.trace(rho).real


def max_abs(a: np.ndarray) -> float:
    """Entrywise max-norm, the residual measure used throughout."""
    a = np.asarray(a)
    return float(np.abs(a).max()) if a.size else 0.0
