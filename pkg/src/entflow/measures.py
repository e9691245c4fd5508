"""Entanglement quantifiers: concurrence, entangled fraction, generalized singlet fraction."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, NamedTuple, Sequence

import numpy as np

from .hilbert import (
    SY,
    DensityOp,
    PureState,
    closest_unitary_value,
    haar_unitary,
    is_unitary,
    purify,
    schmidt_decompose,
)

SIGMA_YY = np.kron(SY, SY)
SINGLET = np.array([[0, 1], [-1, 0]], dtype=complex) / np.sqrt(2)

# Hill-Wootters magic basis as columns; maximally entangled two-qubit states
# are exactly the real combinations of these (up to a global phase).
MAGIC = np.array(
    [[1, 1j, 0, 0], [0, 0, 1j, 1], [0, 0, 1j, -1], [1, -1j, 0, 0]], dtype=complex
) / np.sqrt(2)

CLAMP_TOL = 1e-9


@dataclass
class OptimizerConfig:
    restarts: int = 8
    tol: float = 1e-10
    max_sweeps: int = 500
    seed: int | None = None
    keep_trace: bool = True


@dataclass(frozen=True)
class LocalUnitaryPair:
    U_A: np.ndarray
    U_B: np.ndarray

    def __post_init__(self):
        for u in (self.U_A, self.U_B):
            if not is_unitary(u):
                raise ValueError("LocalUnitaryPair entries must be unitary")


@dataclass
class MeasureResult:
    value: float
    restarts_used: int = 0
    residual: float = 0.0
    optimizer_trace: list[float] | None = None
    unitaries: LocalUnitaryPair | None = None
    sweeps: int = 0
    all_values: list[float] = field(default_factory=list)


def clamp_measure(value: float) -> float:
    if value < -CLAMP_TOL or value > 1 + CLAMP_TOL:
        raise ValueError(f"measure value {value} outside [0, 1]")
    return float(min(max(value, 0.0), 1.0))


def concurrence_2q(rho: DensityOp) -> float:
    """Wootters concurrence of a two-qubit density operator.

    With rho = W W^dagger, the square roots of the eigenvalues of
    rho (sy sy) rho* (sy sy) are the singular values of W^T (sy sy) W; the
    singular-value route keeps full accuracy for rank-deficient states.
    """
    if rho.dims != (2, 2):
        raise ValueError(f"concurrence_2q needs dims (2, 2), got {rho.dims}")
    w, v = np.linalg.eigh(rho.mat)
    w = np.where(w > 1e-13 * max(w[-1], 1e-300), w, 0.0)
    factor = v * np.sqrt(w)
    mu = np.linalg.svd(factor.T @ SIGMA_YY @ factor, compute_uv=False)
    return float(max(0.0, mu[0] - mu[1] - mu[2] - mu[3]))


def concurrence_rank2(x: np.ndarray) -> float:
    """Concurrence of rho = X X^dagger for a 4x2 Schmidt matrix X."""
    x = np.asarray(x, dtype=complex)
    if x.shape != (4, 2):
        raise ValueError(f"expected a 4x2 matrix, got shape {x.shape}")
    a = x.T @ SIGMA_YY @ x
    c2 = np.trace(a.conj().T @ a).real - 2 * abs(np.linalg.det(a))
    return float(np.sqrt(max(c2, 0.0)))


def entangled_fraction_2q(rho: DensityOp | np.ndarray) -> float:
    mat = rho.mat if isinstance(rho, DensityOp) else np.asarray(rho)
    in_magic = MAGIC.conj().T @ mat @ MAGIC
    return float(np.linalg.eigvalsh(in_magic.real)[-1])


class SchmidtFactor(NamedTuple):
    product: float  # lambda_1 * lambda_2
    bracket: float  # (sum_i lambda_i)^2 - lambda_1^2


def schmidt_entanglement_factor(psi: PureState, middle: Iterable[int]) -> SchmidtFactor:
    lam = schmidt_decompose(psi, middle).coeffs
    second = lam[1] if lam.size > 1 else 0.0
    return SchmidtFactor(float(lam[0] * second), float(lam.sum() ** 2 - lam[0] ** 2))


# --- alternating Uhlmann optimizer -------------------------------------------

@dataclass
class _Problem:
    """Purification psi[A, B, E] with target vector phi[a, b] embedded in A, B.

    A is indexed (a, A_rest) with a the major index; likewise B.
    """

    psi: np.ndarray  # (dA, dB, dE)
    phi: np.ndarray  # (da, db)
    d_a: int
    d_ar: int
    d_b: int
    d_br: int

    @property
    def dA(self) -> int:
        return self.d_a * self.d_ar

    @property
    def dB(self) -> int:
        return self.d_b * self.d_br

    def rotate(self, ua: np.ndarray, ub: np.ndarray) -> np.ndarray:
        dA, dB = self.dA, self.dB
        t = (ua @ self.psi.reshape(dA, -1)).reshape(dA, dB, -1)
        t = (ub @ t.transpose(1, 0, 2).reshape(dB, -1)).reshape(dB, dA, -1)
        return t.transpose(1, 0, 2)

    def environment(self, ua: np.ndarray, ub: np.ndarray) -> np.ndarray:
        """Unnormalised optimal environment vector w[a_rest, b_rest, e]."""
        t = self.rotate(ua, ub).reshape(self.d_a, self.d_ar, self.d_b, self.d_br, -1)
        return np.tensordot(self.phi.conj(), t, axes=([0, 1], [0, 2]))

    def target(self, theta: np.ndarray) -> np.ndarray:
        chi = np.multiply.outer(self.phi, theta).transpose(0, 2, 1, 3, 4)
        return chi.reshape(self.dA, self.dB, -1)

    def value(self, ua: np.ndarray, ub: np.ndarray) -> float:
        w = self.environment(ua, ub)
        return float(np.vdot(w, w).real)


def _optimize_once(prob: _Problem, ua: np.ndarray, ub: np.ndarray, cfg: OptimizerConfig):
    w = prob.environment(ua, ub)
    overlap = np.linalg.norm(w)
    trace = [overlap**2]
    residual = np.inf
    sweeps = 0
    for sweeps in range(1, cfg.max_sweeps + 1):
        if overlap == 0:
            theta = np.zeros_like(w)
            theta.flat[0] = 1.0
        else:
            theta = w / overlap
        chi = prob.target(theta)
        eye_a = np.eye(prob.dA)
        psi_b = prob.rotate(eye_a, ub).reshape(prob.dA, -1)
        ua, _ = closest_unitary_value(psi_b @ chi.reshape(prob.dA, -1).conj().T)
        psi_a = prob.rotate(ua, np.eye(prob.dB)).transpose(1, 0, 2).reshape(prob.dB, -1)
        chi_b = chi.transpose(1, 0, 2).reshape(prob.dB, -1)
        ub, _ = closest_unitary_value(psi_a @ chi_b.conj().T)
        w = prob.environment(ua, ub)
        new = np.linalg.norm(w)
        residual = new**2 - overlap**2
        overlap = new
        trace.append(overlap**2)
        if residual < cfg.tol:
            break
    return overlap**2, ua, ub, trace, residual, sweeps


def _run(prob: _Problem, cfg: OptimizerConfig, init: Sequence[LocalUnitaryPair] | None,
         rng: np.random.Generator | None) -> MeasureResult:
    rng = np.random.default_rng(cfg.seed) if rng is None else rng
    starts = [(p.U_A, p.U_B) for p in (init or [])]
    if not starts:
        starts.append((np.eye(prob.dA, dtype=complex), np.eye(prob.dB, dtype=complex)))
    while len(starts) < cfg.restarts:
        starts.append((haar_unitary(prob.dA, rng), haar_unitary(prob.dB, rng)))
    best = None
    values = []
    for ua, ub in starts:
        out = _optimize_once(prob, ua, ub, cfg)
        values.append(out[0])
        if best is None or out[0] > best[0]:
            best = out
    val, ua, ub, trace, residual, sweeps = best
    return MeasureResult(
        value=clamp_measure(val),
        restarts_used=len(starts),
        residual=float(residual),
        optimizer_trace=[float(v) for v in trace] if cfg.keep_trace else None,
        unitaries=LocalUnitaryPair(ua, ub),
        sweeps=sweeps,
        all_values=[float(v) for v in values],
    )


def _as_pure(state: PureState | DensityOp) -> tuple[PureState, list[int]]:
    """Pure global state plus the indices of any added ancilla."""
    if isinstance(state, PureState):
        return state, []
    pur = purify(state)
    return pur, [state.n]


def group_order(group: Iterable[int], lead: int) -> list[int]:
    """Subsystem order used for a party's unitary: the lead qubit first."""
    return [lead] + sorted(set(group) - {lead})


def _validate_sets(n: int, A: Iterable[int], B: Iterable[int], a: int, b: int) -> tuple[set, set]:
    A, B = set(A), set(B)
    if A & B:
        raise ValueError(f"sets A={sorted(A)} and B={sorted(B)} overlap")
    if a not in A or b not in B:
        raise ValueError("a must lie in A and b in B")
    if not (A | B) <= set(range(n)):
        raise ValueError("set indices out of range")
    return A, B


def gen_singlet_fraction(
    state: PureState | DensityOp,
    A: Iterable[int],
    B: Iterable[int],
    a: int,
    b: int,
    cfg: OptimizerConfig | None = None,
    init: Sequence[LocalUnitaryPair] | None = None,
    rng: np.random.Generator | None = None,
) -> MeasureResult:
    """Best singlet fidelity of qubits a, b reachable by unitaries on A and on B.

    ``init`` seeds the first restarts (warm starts); the remaining restarts are
    Haar-random. Unitaries are expressed in the order given by ``group_order``.
    The reported value is a lower bound on the true maximum.
    """
    cfg = cfg or OptimizerConfig()
    pure, _ = _as_pure(state)
    A, B = _validate_sets(pure.n, A, B, a, b)
    dims = pure.dims
    if dims[a] != 2 or dims[b] != 2:
        raise ValueError("a and b must be qubits")
    order_a = group_order(A, a)
    order_b = group_order(B, b)
    env = [i for i in range(pure.n) if i not in A and i not in B]
    t = np.transpose(pure.tensor, order_a + order_b + env)
    dA = int(np.prod([dims[i] for i in order_a]))
    dB = int(np.prod([dims[i] for i in order_b]))
    prob = _Problem(t.reshape(dA, dB, -1), SINGLET, 2, dA // 2, 2, dB // 2)
    return _run(prob, cfg, init, rng)


def entangled_fraction(
    rho: DensityOp | PureState,
    cut: Iterable[int] | None = None,
    cfg: OptimizerConfig | None = None,
    init: Sequence[LocalUnitaryPair] | None = None,
    rng: np.random.Generator | None = None,
) -> MeasureResult:
    """Maximum fidelity with a maximally entangled state across ``cut | rest``.

    Two-qubit cuts use the magic-basis closed form; larger cuts run the
    alternating optimizer with the maximally entangled target on the full sides.
    """
    n = rho.n
    left = sorted(set(cut)) if cut is not None else [0]
    right = [i for i in range(n) if i not in left]
    if not left or not right:
        raise ValueError("cut must be a proper nonempty subset")
    dims = rho.dims
    dl = int(np.prod([dims[i] for i in left]))
    dr = int(np.prod([dims[i] for i in right]))
    if dl == 2 and dr == 2:
        mat = rho.density().mat if isinstance(rho, PureState) else rho.mat
        if left != [0]:
            mat = mat.reshape(2, 2, 2, 2).transpose(1, 0, 3, 2).reshape(4, 4)
        return MeasureResult(value=clamp_measure(entangled_fraction_2q(mat)))
    cfg = cfg or OptimizerConfig()
    pure, _ = _as_pure(rho)
    env = [i for i in range(pure.n) if i not in left and i not in right]
    t = np.transpose(pure.tensor, left + right + env).reshape(dl, dr, -1)
    k = min(dl, dr)
    phi = np.zeros((dl, dr), dtype=complex)
    phi[np.arange(k), np.arange(k)] = 1 / np.sqrt(k)
    prob = _Problem(t, phi, dl, 1, dr, 1)
    return _run(prob, cfg, init, rng)


def extend_unitary(u: np.ndarray, dims: Sequence[int], group: Iterable[int],
                   bigger: Iterable[int], lead: int) -> np.ndarray:
    """Embed a party unitary on ``group`` as U (x) 1 on the superset ``bigger``."""
    small = group_order(group, lead)
    big = group_order(bigger, lead)
    extra = [i for i in big if i not in small]
    if set(small) - set(big):
        raise ValueError("bigger must contain group")
    d_extra = int(np.prod([dims[i] for i in extra])) if extra else 1
    full = np.kron(u, np.eye(d_extra))
    src = small + extra
    shape = [dims[i] for i in src]
    m = len(src)
    perm = [src.index(i) for i in big]
    full = full.reshape(shape + shape).transpose(perm + [p + m for p in perm])
    d = full.shape[:m]
    return full.reshape(int(np.prod(d)), -1)


def extend_pair(pair: LocalUnitaryPair, dims: Sequence[int], A, B, a: int, b: int,
                A2, B2) -> LocalUnitaryPair:
    return LocalUnitaryPair(
        extend_unitary(pair.U_A, dims, A, A2, a), extend_unitary(pair.U_B, dims, B, B2, b)
    )
