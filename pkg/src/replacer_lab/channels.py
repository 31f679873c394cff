"""Replacer, erasure and partial-replacer channels and their Kraus sets."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Any, Sequence, Union

import numpy as np

from .tensor import (
    DEFAULT_TOL,
    LayoutLike,
    SystemLayout,
    as_layout,
    check_subset,
    embed_operator,
    from_bipartite,
    hermitian_eig,
    max_abs,
    partial_trace,
)


def _check_density(sigma: np.ndarray, dim: int, tol: float) -> np.ndarray:
    sigma = np.asarray(sigma, dtype=complex)
    if sigma.shape != (dim, dim):
        raise ValueError(f"replacement state must be {dim}x{dim}, got {sigma.shape}")
    w, _ = hermitian_eig(sigma, tol)
    if w[-1] < -tol:
        raise ValueError(f"replacement state has negative eigenvalue {w[-1]:.3g}")
    if abs(np.trace(sigma).real - 1) > tol:
        raise ValueError("replacement state must have unit trace")
    return sigma


def sqrt_psd(m: np.ndarray, tol: float = DEFAULT_TOL) -> np.ndarray:
    """Square root of a positive semidefinite matrix via its spectral decomposition."""
    w, v = hermitian_eig(m, tol)
    if w.size and w[-1] < -tol:
        raise ValueError(f"matrix is not positive semidefinite (eigenvalue {w[-1]:.3g})")
    w = np.clip(w, 0.0, None)
    return (v * np.sqrt(w)) @ v.conj().T


@dataclass(frozen=True)
class ReplacerChannel:
    """``id`` on the complement of ``subset`` tensored with the replacer ``rho -> sigma``."""

    layout: SystemLayout
    subset: tuple[int, ...]
    sigma: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        layout = as_layout(self.layout)
        subset = check_subset(self.subset, layout.n)
        object.__setattr__(self, "layout", layout)
        object.__setattr__(self, "subset", subset)
        object.__setattr__(
            self, "sigma", _check_density(self.sigma, layout.sub(subset).total_dim, DEFAULT_TOL)
        )

    @classmethod
    def erasure(cls, layout: LayoutLike, subset: Sequence[int]) -> "ReplacerChannel":
        layout = as_layout(layout)
        d = layout.sub(check_subset(subset, layout.n)).total_dim
        return cls(layout, tuple(subset), np.eye(d) / d)

    @property
    def dim_e(self) -> int:
        return self.sigma.shape[0]

    def __call__(self, rho: np.ndarray) -> np.ndarray:
        return apply_replacer(self, rho)


@dataclass(frozen=True)
class PartialReplacerChannel:
    """``rho -> lam * rho + (1 - lam) * (sigma_E (x) Tr_E rho)``."""

    layout: SystemLayout
    subset: tuple[int, ...]
    lam: float
    sigma: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        if not 0.0 <= self.lam < 1.0:
            raise ValueError(f"lambda must lie in [0, 1), got {self.lam}")
        full = ReplacerChannel(self.layout, self.subset, self.sigma)
        object.__setattr__(self, "layout", full.layout)
        object.__setattr__(self, "subset", full.subset)
        object.__setattr__(self, "sigma", full.sigma)

    @property
    def replacer(self) -> ReplacerChannel:
        return ReplacerChannel(self.layout, self.subset, self.sigma)

    @property
    def dim_e(self) -> int:
        return self.sigma.shape[0]

    def __call__(self, rho: np.ndarray) -> np.ndarray:
        return apply_partial_replacer(self, rho)


Channel = Union[ReplacerChannel, PartialReplacerChannel]


@dataclass(frozen=True)
class KrausSet:
    operators: np.ndarray  # shape (m, N, N)

    def __post_init__(self) -> None:
        ops = np.asarray(self.operators, dtype=complex)
        if ops.ndim != 3 or ops.shape[1] != ops.shape[2]:
            raise ValueError("Kraus operators must be stacked square matrices")
        object.__setattr__(self, "operators", ops)

    def __len__(self) -> int:
        return self.operators.shape[0]

    def completeness_residual(self) -> float:
        ops = self.operators
        total = np.einsum("aji,ajk->ik", ops.conj(), ops)
        return max_abs(total - np.eye(ops.shape[1]))

    def is_trace_preserving(self, tol: float = DEFAULT_TOL) -> bool:
        return self.completeness_residual() <= tol

    def apply(self, rho: np.ndarray) -> np.ndarray:
        ops = self.operators
        return np.einsum("aij,jk,alk->il", ops, rho, ops.conj())


def apply_replacer(ch: ReplacerChannel, rho: np.ndarray) -> np.ndarray:
    """``Tr_E(rho) (x) sigma_E`` with the factors put back in site order."""
    reduced = partial_trace(rho, ch.layout, ch.subset)
    return from_bipartite(np.kron(reduced, ch.sigma), ch.layout, ch.subset)


def apply_partial_replacer(ch: PartialReplacerChannel, rho: np.ndarray) -> np.ndarray:
    rho = np.asarray(rho, dtype=complex)
    return ch.lam * rho + (1 - ch.lam) * apply_replacer(ch.replacer, rho)


def apply_channel(ch: Channel, rho: np.ndarray) -> np.ndarray:
    return ch(rho)


def shift(d: int, l: int) -> np.ndarray:
    """Cyclic shift ``X(l) = sum_j |j + l mod d><j|``."""
    return np.roll(np.eye(d), l, axis=0).astype(complex)


def clock(d: int, k: int) -> np.ndarray:
    """``Z(k) = sum_j w^{jk} |j><j|`` with ``w = exp(2 pi i / d)``."""
    return np.diag(np.exp(2j * np.pi * k * np.arange(d) / d))


def generalized_pauli(d: int, l: int, k: int) -> np.ndarray:
    """The Weyl operator ``X(l) Z(k)`` on a ``d``-level system."""
    if not (0 <= l < d and 0 <= k < d):
        raise ValueError(f"indices (l, k) = ({l}, {k}) out of range for d = {d}")
    return shift(d, l) @ clock(d, k)


def erasure_kraus_set(layout: LayoutLike, subset: Sequence[int]) -> KrausSet:
    """The ``dim(E)^2`` operators ``(I (x) |i><j|) / sqrt(dim E)``."""
    layout = as_layout(layout)
    subset = check_subset(subset, layout.n)
    d = layout.sub(subset).total_dim
    ops = []
    for i in range(d):
        for j in range(d):
            unit = np.zeros((d, d))
            unit[i, j] = 1.0
            ops.append(embed_operator(unit / np.sqrt(d), layout, subset))
    return KrausSet(np.array(ops))


def partial_replacer_family(ch: PartialReplacerChannel, tol: float = DEFAULT_TOL) -> np.ndarray:
    """The unscaled operators ``I (x) sqrt(sigma) X(l) Z(k)`` for ``l, k < dim E``."""
    d = ch.dim_e
    root = sqrt_psd(ch.sigma, tol)
    return np.array(
        [
            embed_operator(root @ generalized_pauli(d, l, k), ch.layout, ch.subset)
            for l in range(d)
            for k in range(d)
        ]
    )


def partial_replacer_kraus_set(ch: PartialReplacerChannel, tol: float = DEFAULT_TOL) -> KrausSet:
    """``sqrt(lam) I`` followed by ``sqrt((1 - lam) / dim E)`` times the Weyl family.

    The identity term is kept even for ``lam = 0`` so the operator count is
    always ``1 + dim(E)^2``.
    """
    n = ch.layout.total_dim
    family = partial_replacer_family(ch, tol) * np.sqrt((1 - ch.lam) / ch.dim_e)
    return KrausSet(np.concatenate([np.sqrt(ch.lam) * np.eye(n)[None], family]))


def _parse_amplitudes(raw: Any) -> np.ndarray:
    vals = []
    for a in raw:
        if isinstance(a, (list, tuple)):
            if len(a) != 2:
                raise ValueError(f"complex entries must be [re, im] pairs, got {a!r}")
            vals.append(complex(float(a[0]), float(a[1])))
        else:
            vals.append(complex(float(a)))
    return np.array(vals)


def parse_sigma(spec: Any, dim: int) -> np.ndarray:
    """Replacement state from ``"maximally_mixed"``, ``"pure:[...]"`` or an explicit matrix."""
    if spec is None or spec == "maximally_mixed":
        return np.eye(dim, dtype=complex) / dim
    if isinstance(spec, str):
        if spec.startswith("pure:"):
            amp = _parse_amplitudes(json.loads(spec[len("pure:"):]))
            if amp.shape != (dim,):
                raise ValueError(f"pure state needs {dim} amplitudes, got {amp.shape[0]}")
            amp = amp / np.linalg.norm(amp)
            return np.outer(amp, amp.conj())
        spec = json.loads(spec)
    mat = np.array([_parse_amplitudes(row) for row in spec])
    if mat.shape != (dim, dim):
        raise ValueError(f"sigma must be {dim}x{dim}, got {mat.shape}")
    return mat


def channel_from_spec(spec: dict, layout: LayoutLike) -> Channel:
    """Build a channel from ``{"E": [...], "sigma": ..., "lambda": optional}``."""
    layout = as_layout(layout)
    if "E" not in spec:
        raise ValueError("channel spec needs an 'E' entry")
    subset = check_subset(spec["E"], layout.n)
    sigma = parse_sigma(spec.get("sigma"), layout.sub(subset).total_dim)
    lam = spec.get("lambda")
    if lam is None:
        return ReplacerChannel(layout, subset, sigma)
    return PartialReplacerChannel(layout, subset, float(lam), sigma)
