"""Interaction networks, Hamiltonian assembly and exact Schroedinger evolution."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import networkx as nx
import numpy as np
from scipy.integrate import solve_ivp

from .hilbert import PAULIS, PureState, embed_operator, schmidt_decompose

MAX_DENSE_DIM = 2**10


@dataclass(frozen=True)
class Edge:
    i: int
    j: int
    H: np.ndarray

    @property
    def pair(self) -> frozenset:
        return frozenset((self.i, self.j))


@dataclass
class InteractionNetwork:
    """Particles with dimensions ``dims`` and two-body Hermitian couplings.

    ``H`` on an edge (i, j) acts on the ordered pair: i is the first tensor factor.
    """

    dims: tuple[int, ...]
    edges: list[Edge] = field(default_factory=list)

    def __post_init__(self):
        self.dims = tuple(int(d) for d in self.dims)
        edges, self.edges = self.edges, []
        for e in edges:
            self.add_edge(e.i, e.j, e.H)

    @classmethod
    def chain(cls, terms: Sequence[np.ndarray | None], dims: Sequence[int] | None = None):
        """Nearest-neighbour chain; ``terms[k]`` couples sites k and k+1 (None skips)."""
        n = len(terms) + 1
        net = cls(tuple(dims) if dims is not None else (2,) * n)
        for k, h in enumerate(terms):
            if h is not None:
                net.add_edge(k, k + 1, h)
        return net

    def add_edge(self, i: int, j: int, H: np.ndarray) -> None:
        i, j = int(i), int(j)
        if i == j:
            raise ValueError("self-interaction edges are not allowed")
        n = len(self.dims)
        if not (0 <= i < n and 0 <= j < n):
            raise ValueError(f"edge ({i}, {j}) out of range")
        H = np.asarray(H, dtype=complex)
        d = self.dims[i] * self.dims[j]
        if H.shape != (d, d):
            raise ValueError(f"edge ({i}, {j}) needs a {d}x{d} matrix, got {H.shape}")
        if not np.all(np.isfinite(H)):
            raise ValueError(f"edge ({i}, {j}) has nonfinite entries")
        if np.max(np.abs(H - H.conj().T)) > 1e-10:
            raise ValueError(f"edge ({i}, {j}) Hamiltonian is not Hermitian")
        if any(e.pair == frozenset((i, j)) for e in self.edges):
            raise ValueError(f"duplicate edge ({i}, {j})")
        self.edges.append(Edge(i, j, (H + H.conj().T) / 2))

    @property
    def n(self) -> int:
        return len(self.dims)

    @property
    def dim(self) -> int:
        return int(np.prod(self.dims))

    def graph(self) -> nx.Graph:
        g = nx.Graph()
        g.add_nodes_from(range(self.n))
        g.add_edges_from((e.i, e.j) for e in self.edges)
        return g

    def scaled(self, factor: float) -> "InteractionNetwork":
        return InteractionNetwork(self.dims, [Edge(e.i, e.j, factor * e.H) for e in self.edges])

    def apply(self, vec: np.ndarray) -> np.ndarray:
        """H|vec> without materialising H."""
        psi = vec.reshape(self.dims)
        out = np.zeros_like(psi)
        for e in self.edges:
            di, dj = self.dims[e.i], self.dims[e.j]
            h = e.H.reshape(di, dj, di, dj)
            t = np.tensordot(h, psi, axes=([2, 3], [e.i, e.j]))
            out += np.moveaxis(t, [0, 1], [e.i, e.j])
        return out.reshape(-1)


def assemble_hamiltonian(net: InteractionNetwork) -> np.ndarray:
    if net.dim > MAX_DENSE_DIM:
        raise ValueError(
            f"total dimension {net.dim} exceeds {MAX_DENSE_DIM}; use evolve() which applies H matrix-free"
        )
    H = np.zeros((net.dim, net.dim), dtype=complex)
    for e in net.edges:
        H += embed_operator(e.H, [e.i, e.j], net.dims)
    return H


@dataclass
class EvolutionResult:
    times: np.ndarray
    states: list[PureState]
    method: str

    def __post_init__(self):
        if np.any(np.diff(self.times) <= 0):
            raise ValueError("time grid must be strictly increasing")


def _as_grid(times) -> np.ndarray:
    t = np.atleast_1d(np.asarray(times, dtype=float))
    if not np.all(np.isfinite(t)):
        raise ValueError("nonfinite time grid")
    return t


def evolve(net: InteractionNetwork, psi0: PureState, times, method: str = "auto",
           rtol: float = 1e-12, atol: float = 1e-13) -> EvolutionResult:
    """Snapshots of exp(-iHt)|psi0> on ``times``.

    ``method`` is ``"eig"`` (dense eigendecomposition), ``"integrate"``
    (adaptive DOP853 applying H matrix-free, renormalised at each sample) or
    ``"auto"`` which picks ``eig`` up to ``MAX_DENSE_DIM``.
    """
    if psi0.dims != net.dims:
        raise ValueError(f"state dims {psi0.dims} do not match network dims {net.dims}")
    times = _as_grid(times)
    if method == "auto":
        method = "eig" if net.dim <= MAX_DENSE_DIM else "integrate"
    states: list[PureState] = []
    if method == "eig":
        w, v = np.linalg.eigh(assemble_hamiltonian(net))
        c0 = v.conj().T @ psi0.amps
        for t in times:
            amps = v @ (np.exp(-1j * w * t) * c0)
            states.append(_checked(net.dims, amps))
    elif method == "integrate":
        def rhs(_, y):
            return -1j * net.apply(y)

        y = psi0.amps.copy()
        t_prev = 0.0
        for t in times:
            if t != t_prev:
                sol = solve_ivp(rhs, (t_prev, t), y, method="DOP853", rtol=rtol, atol=atol)
                if not sol.success:
                    raise RuntimeError(f"integration failed: {sol.message}")
                y = sol.y[:, -1]
                y = y / np.linalg.norm(y)
            states.append(_checked(net.dims, y))
            t_prev = t
    else:
        raise ValueError(f"unknown evolution method {method!r}")
    return EvolutionResult(times, states, method)


def _checked(dims, amps) -> PureState:
    if not np.all(np.isfinite(amps)):
        raise FloatingPointError("nonfinite amplitudes during evolution")
    return PureState.normalized(dims, amps)


def propagator(net: InteractionNetwork, t: float) -> np.ndarray:
    w, v = np.linalg.eigh(assemble_hamiltonian(net))
    return (v * np.exp(-1j * w * t)) @ v.conj().T


def pauli_coefficients(H: np.ndarray, frame_a: np.ndarray | None = None,
                       frame_b: np.ndarray | None = None) -> np.ndarray:
    """Real 4x4 coefficients c_ij with H = sum c_ij s_i (x) s_j.

    Optional frames are unitaries whose columns define the basis in which each
    side's Pauli matrices are written (Pauli s -> W s W^dagger).
    """
    frame_a = np.eye(2) if frame_a is None else frame_a
    frame_b = np.eye(2) if frame_b is None else frame_b
    pa = [frame_a @ p @ frame_a.conj().T for p in PAULIS]
    pb = [frame_b @ p @ frame_b.conj().T for p in PAULIS]
    return np.array(
        [[np.trace(H @ np.kron(pa[i], pb[j])).real / 4 for j in range(4)] for i in range(4)]
    )


def from_pauli_coefficients(coeffs) -> np.ndarray:
    c = np.asarray(coeffs, dtype=float)
    if c.shape != (4, 4):
        raise ValueError("pauli_coeffs must be 4x4")
    return sum(c[i, j] * np.kron(PAULIS[i], PAULIS[j]) for i in range(4) for j in range(4))


def norm_l1_schmidt(H_ab: np.ndarray, H_bc: np.ndarray, psi: PureState) -> float:
    """Sum of |nonlocal Pauli coefficients| of both edges of a three-qubit chain a-b-c.

    The b-side Pauli frame is the instantaneous Schmidt basis of b; the a and c
    frames are computational.
    """
    if psi.dims != (2, 2, 2):
        raise ValueError("norm_l1_schmidt needs a three-qubit state")
    frame = schmidt_decompose(psi, [1]).basis_left
    ca = pauli_coefficients(H_ab, frame_b=frame)
    cc = pauli_coefficients(H_bc, frame_a=frame)
    return float(np.abs(ca[1:, 1:]).sum() + np.abs(cc[1:, 1:]).sum())


def hs_norm(H: np.ndarray) -> float:
    return float(np.sqrt(np.trace(H.conj().T @ H).real))


def norm_op(H: np.ndarray) -> float:
    return float(np.linalg.norm(np.asarray(H), 2))


def boundary_edges(net: InteractionNetwork, A: Iterable[int], B: Iterable[int]) -> list[Edge]:
    """Edges with exactly one endpoint in A or exactly one endpoint in B (each listed once)."""
    A, B = set(A), set(B)
    if A & B:
        raise ValueError("A and B must be disjoint")
    out = []
    for e in net.edges:
        in_a = (e.i in A) + (e.j in A)
        in_b = (e.i in B) + (e.j in B)
        if in_a == 1 or in_b == 1:
            out.append(e)
    return out


def norm_hs_boundary(net: InteractionNetwork, A: Iterable[int], B: Iterable[int]) -> float:
    return float(sum(hs_norm(e.H) for e in boundary_edges(net, A, B)))


def interaction_distance(net: InteractionNetwork, a: int, b: int) -> int | None:
    """Graph distance between particles a and b, or None when unreachable."""
    g = net.graph()
    if a not in g or b not in g:
        raise ValueError("unknown particle")
    try:
        return int(nx.shortest_path_length(g, a, b))
    except nx.NetworkXNoPath:
        return None


def neighborhood(net: InteractionNetwork, S: Iterable[int]) -> frozenset:
    S = set(S)
    out = set(S)
    for e in net.edges:
        if e.i in S:
            out.add(e.j)
        if e.j in S:
            out.add(e.i)
    return frozenset(out)


# --- network description files -------------------------------------------------

def _parse_entry(x) -> complex:
    if isinstance(x, (list, tuple)):
        re, im = x
        return complex(re, im)
    if isinstance(x, str):
        return complex(x.replace(" ", ""))
    return complex(x)


def network_from_dict(data: dict) -> InteractionNetwork:
    dims = tuple(int(d) for d in data["dims"])
    net = InteractionNetwork(dims)
    for e in data.get("edges", []):
        if "pauli_coeffs" in e:
            if dims[e["i"]] != 2 or dims[e["j"]] != 2:
                raise ValueError("pauli_coeffs edges need qubit endpoints")
            H = from_pauli_coefficients(e["pauli_coeffs"])
        elif "matrix" in e:
            H = np.array([[_parse_entry(x) for x in row] for row in e["matrix"]], dtype=complex)
        else:
            raise ValueError("edge needs 'pauli_coeffs' or 'matrix'")
        net.add_edge(e["i"], e["j"], H)
    return net


def network_to_dict(net: InteractionNetwork) -> dict:
    edges = []
    for e in net.edges:
        rows = [[[float(z.real), float(z.imag)] for z in row] for row in e.H]
        edges.append({"i": e.i, "j": e.j, "matrix": rows})
    return {"dims": list(net.dims), "edges": edges}


def load_network(path: str | Path) -> InteractionNetwork:
    return network_from_dict(json.loads(Path(path).read_text()))


def save_network(net: InteractionNetwork, path: str | Path) -> None:
    Path(path).write_text(json.dumps(network_to_dict(net), indent=1))
