"""Dense linear algebra on small multipartite Hilbert spaces.

Amplitudes are stored row-major over the subsystem dimensions, so subsystem 0
is the most significant index (the ``np.kron`` convention).
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import reduce
from typing import Iterable, Sequence

import numpy as np

HERMITIAN_TOL = 1e-10
TRACE_TOL = 1e-10
POSITIVITY_TOL = 1e-10
NORM_TOL = 1e-9

I2 = np.eye(2, dtype=complex)
SX = np.array([[0, 1], [1, 0]], dtype=complex)
SY = np.array([[0, -1j], [1j, 0]], dtype=complex)
SZ = np.array([[1, 0], [0, -1]], dtype=complex)
PAULIS = (I2, SX, SY, SZ)


def _dims_tuple(dims: Iterable[int]) -> tuple[int, ...]:
    dims = tuple(int(d) for d in dims)
    if not dims:
        raise ValueError("at least one subsystem is required")
    if any(d < 2 for d in dims):
        raise ValueError(f"subsystem dimensions must be >= 2, got {dims}")
    return dims


def _check_indices(indices: Iterable[int], n: int) -> list[int]:
    idx = sorted(set(int(i) for i in indices))
    if not idx:
        raise ValueError("index set must be nonempty")
    if idx[0] < 0 or idx[-1] >= n:
        raise ValueError(f"subsystem indices {idx} out of range for {n} subsystems")
    return idx


@dataclass(frozen=True)
class PureState:
    """Unit vector over a register of subsystems.

    The constructor renormalises inputs whose norm is within ``NORM_TOL`` of 1
    and rejects anything further away, so drift never goes unnoticed.
    """

    dims: tuple[int, ...]
    amps: np.ndarray

    def __post_init__(self):
        dims = _dims_tuple(self.dims)
        amps = np.asarray(self.amps, dtype=complex).reshape(-1)
        if amps.size != int(np.prod(dims)):
            raise ValueError(f"{amps.size} amplitudes do not match dims {dims}")
        if not np.all(np.isfinite(amps)):
            raise ValueError("nonfinite amplitudes")
        norm = np.linalg.norm(amps)
        if abs(norm - 1.0) > NORM_TOL:
            raise ValueError(f"state norm {norm} differs from 1")
        amps = amps / norm
        amps.setflags(write=False)
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "amps", amps)

    @classmethod
    def normalized(cls, dims: Sequence[int], amps) -> "PureState":
        amps = np.asarray(amps, dtype=complex).reshape(-1)
        norm = np.linalg.norm(amps)
        if norm == 0 or not np.isfinite(norm):
            raise ValueError("cannot normalise a zero or nonfinite vector")
        return cls(tuple(dims), amps / norm)

    @classmethod
    def basis(cls, dims: Sequence[int], digits: Sequence[int]) -> "PureState":
        dims = _dims_tuple(dims)
        amps = np.zeros(int(np.prod(dims)), dtype=complex)
        amps[np.ravel_multi_index(tuple(digits), dims)] = 1.0
        return cls(dims, amps)

    @classmethod
    def product(cls, *factors) -> "PureState":
        """Tensor product of single-subsystem vectors (or PureStates)."""
        dims: list[int] = []
        vecs = []
        for f in factors:
            if isinstance(f, PureState):
                dims.extend(f.dims)
                vecs.append(f.amps)
            else:
                v = np.asarray(f, dtype=complex).reshape(-1)
                dims.append(v.size)
                vecs.append(v / np.linalg.norm(v))
        return cls(tuple(dims), reduce(np.kron, vecs))

    @property
    def n(self) -> int:
        return len(self.dims)

    @property
    def tensor(self) -> np.ndarray:
        return self.amps.reshape(self.dims)

    def density(self) -> "DensityOp":
        return DensityOp(self.dims, np.outer(self.amps, self.amps.conj()))

    def reduced(self, keep: Iterable[int]) -> "DensityOp":
        mat = reduced_matrix(self, keep)
        return DensityOp(self.dims_of(keep), mat)

    def dims_of(self, indices: Iterable[int]) -> tuple[int, ...]:
        return tuple(self.dims[i] for i in _check_indices(indices, self.n))

    def evolved(self, unitary: np.ndarray) -> "PureState":
        return PureState.normalized(self.dims, unitary @ self.amps)


@dataclass(frozen=True)
class DensityOp:
    dims: tuple[int, ...]
    mat: np.ndarray

    def __post_init__(self):
        dims = _dims_tuple(self.dims)
        mat = np.asarray(self.mat, dtype=complex)
        n = int(np.prod(dims))
        if mat.shape != (n, n):
            raise ValueError(f"matrix shape {mat.shape} does not match dims {dims}")
        herm_err = np.max(np.abs(mat - mat.conj().T)) if n else 0.0
        if herm_err > HERMITIAN_TOL:
            raise ValueError(f"density operator not Hermitian (error {herm_err:.3e})")
        mat = (mat + mat.conj().T) / 2
        tr = np.trace(mat).real
        if abs(tr - 1.0) > TRACE_TOL:
            raise ValueError(f"density operator trace {tr} differs from 1")
        lo = np.linalg.eigvalsh(mat)[0]
        if lo < -POSITIVITY_TOL:
            raise ValueError(f"density operator has negative eigenvalue {lo:.3e}")
        mat.setflags(write=False)
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "mat", mat)

    @property
    def n(self) -> int:
        return len(self.dims)

    def is_pure(self, tol: float = 1e-10) -> bool:
        return abs(np.trace(self.mat @ self.mat).real - 1.0) < tol


@dataclass(frozen=True)
class SchmidtData:
    """Schmidt form ``sum_i coeffs[i] * left[:, i] (x) right[:, i]``.

    ``left`` spans the subsystems in ``left_indices`` (ascending order), ``right``
    spans the complement. Both bases are complete; columns beyond the Schmidt
    rank come from a Gram-Schmidt completion over the standard basis.
    """

    coeffs: np.ndarray
    basis_left: np.ndarray
    basis_right: np.ndarray
    left_indices: tuple[int, ...]
    right_indices: tuple[int, ...]
    dims: tuple[int, ...]

    @property
    def rank(self) -> int:
        return int(np.sum(self.coeffs > 1e-12))

    def reconstruct(self) -> PureState:
        k = self.coeffs.size
        mat = (self.basis_left[:, :k] * self.coeffs) @ self.basis_right[:, :k].T
        order = list(self.left_indices) + list(self.right_indices)
        shape = [self.dims[i] for i in order]
        tensor = np.transpose(mat.reshape(shape), np.argsort(order))
        return PureState.normalized(self.dims, tensor.reshape(-1))


def kron(*mats) -> np.ndarray:
    if not mats:
        raise ValueError("kron needs at least one operand")
    return reduce(np.kron, [np.asarray(m, dtype=complex) for m in mats])


def embed_operator(op: np.ndarray, sites: Sequence[int], dims: Sequence[int]) -> np.ndarray:
    """Full-space matrix of ``op`` acting on ``sites`` (in the given order)."""
    dims = tuple(dims)
    sites = list(sites)
    rest = [i for i in range(len(dims)) if i not in sites]
    d_rest = int(np.prod([dims[i] for i in rest])) if rest else 1
    full = np.kron(np.asarray(op, dtype=complex), np.eye(d_rest))
    order = sites + rest
    shape = [dims[i] for i in order]
    n = len(dims)
    full = full.reshape(shape + shape)
    perm = list(np.argsort(order))
    full = full.transpose(perm + [p + n for p in perm])
    d = int(np.prod(dims))
    return full.reshape(d, d)


def _group_matrix(tensor: np.ndarray, rows: Sequence[int]) -> np.ndarray:
    cols = [i for i in range(tensor.ndim) if i not in rows]
    t = np.transpose(tensor, list(rows) + cols)
    d_rows = int(np.prod([tensor.shape[i] for i in rows])) if rows else 1
    return t.reshape(d_rows, -1)


def reduced_matrix(psi: PureState, keep: Iterable[int]) -> np.ndarray:
    keep = _check_indices(keep, psi.n)
    m = _group_matrix(psi.tensor, keep)
    return m @ m.conj().T


def partial_trace(rho: DensityOp | PureState, keep: Iterable[int]) -> DensityOp:
    """Reduced operator on ``keep`` (returned in ascending subsystem order)."""
    if isinstance(rho, PureState):
        return rho.reduced(keep)
    keep = _check_indices(keep, rho.n)
    n = rho.n
    traced = [i for i in range(n) if i not in keep]
    t = rho.mat.reshape(rho.dims + rho.dims)
    t = t.transpose(keep + traced + [i + n for i in keep] + [i + n for i in traced])
    dk = int(np.prod([rho.dims[i] for i in keep]))
    dt = int(np.prod([rho.dims[i] for i in traced])) if traced else 1
    red = np.trace(t.reshape(dk, dt, dk, dt), axis1=1, axis2=3)
    return DensityOp(tuple(rho.dims[i] for i in keep), red)


def gram_schmidt_complete(cols: np.ndarray, dim: int, tol: float = 1e-10) -> np.ndarray:
    """Extend orthonormal columns to a basis using e_0, e_1, ... in order."""
    basis = [c for c in np.asarray(cols, dtype=complex).T]
    for k in range(dim):
        if len(basis) == dim:
            break
        v = np.zeros(dim, dtype=complex)
        v[k] = 1.0
        for b in basis:
            v = v - np.vdot(b, v) * b
        for b in basis:  # second pass for stability
            v = v - np.vdot(b, v) * b
        nv = np.linalg.norm(v)
        if nv > tol:
            basis.append(v / nv)
    return np.column_stack(basis)


def schmidt_decompose(psi: PureState, left: Iterable[int], tol: float = 1e-12) -> SchmidtData:
    left = _check_indices(left, psi.n)
    right = [i for i in range(psi.n) if i not in left]
    if not right:
        raise ValueError("left must be a proper subset of the subsystems")
    m = _group_matrix(psi.tensor, left)
    u, s, vh = np.linalg.svd(m)
    rank = int(np.sum(s > tol))
    basis_left = gram_schmidt_complete(u[:, :rank], m.shape[0])
    basis_right = gram_schmidt_complete(vh[:rank].T, m.shape[1])
    coeffs = np.where(np.arange(s.size) < rank, s, 0.0)
    return SchmidtData(coeffs, basis_left, basis_right, tuple(left), tuple(right), psi.dims)


def purify(rho: DensityOp) -> PureState:
    """Purification onto ``rho.dims + (D,)`` with a single ancilla of dimension D."""
    w, v = np.linalg.eigh(rho.mat)
    w = np.clip(w, 0.0, None)
    d = w.size
    # column k of v pairs with ancilla state |k>
    amps = (v * np.sqrt(w)).reshape(-1)
    return PureState.normalized(rho.dims + (d,), amps)


def closest_unitary_value(m: np.ndarray) -> tuple[np.ndarray, float]:
    """Unitary U maximising Re tr(U M), and the maximum tr|M|."""
    m = np.asarray(m, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError("closest_unitary_value needs a square matrix")
    w, s, vh = np.linalg.svd(m)
    return vh.conj().T @ w.conj().T, float(np.sum(s))


def is_unitary(u: np.ndarray, tol: float = 1e-10) -> bool:
    u = np.asarray(u)
    return u.ndim == 2 and u.shape[0] == u.shape[1] and np.allclose(
        u.conj().T @ u, np.eye(u.shape[0]), atol=tol
    )


def haar_unitary(n: int, rng: np.random.Generator) -> np.ndarray:
    z = (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    ph = np.diag(r) / np.abs(np.diag(r))
    return q * ph


def random_state(dims: Sequence[int], rng: np.random.Generator) -> PureState:
    d = int(np.prod(dims))
    v = rng.standard_normal(d) + 1j * rng.standard_normal(d)
    return PureState.normalized(dims, v)


def random_density(dims: Sequence[int], rng: np.random.Generator, rank: int | None = None) -> DensityOp:
    d = int(np.prod(dims))
    rank = d if rank is None else rank
    g = rng.standard_normal((d, rank)) + 1j * rng.standard_normal((d, rank))
    rho = g @ g.conj().T
    return DensityOp(tuple(dims), rho / np.trace(rho).real)


def random_hermitian(d: int, rng: np.random.Generator, unit_hs: bool = False) -> np.ndarray:
    """GUE draw with E|H_ij|^2 = 1/d; optionally rescaled to unit Hilbert-Schmidt norm."""
    g = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    h = (g + g.conj().T) / (2 * np.sqrt(d))
    if unit_hs:
        h = h / np.linalg.norm(h)
    return h
