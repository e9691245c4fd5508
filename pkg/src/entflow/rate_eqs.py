"""Saturated entanglement rate equations, analytic bound curves and T_ent scaling."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.integrate import solve_ivp

FREEZE_TOL = 1e-12
DEFAULT_THRESHOLD = 1 - 1e-6
DEFAULT_EPS = 1e-6
# Largest a_1 whose lower curve t^2/(2 a_1) + 1/2 stays under sin^2(t + pi/4).
LOWER_A1 = np.pi**2 / 16


@dataclass
class RateCurveSet:
    """Curves ``curves[k-1]`` = f_k sampled on ``t``.

    ``evaluator`` (when present) returns the K curves at arbitrary times and is
    used for crossing refinement.
    """

    t: np.ndarray
    curves: np.ndarray  # (K, len(t))
    couplings: np.ndarray
    kind: str
    meta: dict = field(default_factory=dict)
    evaluator: Callable[[np.ndarray], np.ndarray] | None = field(default=None, repr=False)

    def __post_init__(self):
        self.t = np.asarray(self.t, dtype=float)
        self.curves = np.atleast_2d(np.asarray(self.curves, dtype=float))
        if self.curves.shape[1] != self.t.size:
            raise ValueError("curve length does not match the time grid")
        if self.kind not in ("saturated", "upper", "lower", "simulated"):
            raise ValueError(f"unknown curve kind {self.kind!r}")

    @property
    def K(self) -> int:
        return self.curves.shape[0]

    def curve(self, k: int) -> np.ndarray:
        if not 1 <= k <= self.K:
            raise IndexError(f"level {k} outside 1..{self.K}")
        return self.curves[k - 1]

    def at(self, times) -> np.ndarray:
        times = np.atleast_1d(np.asarray(times, dtype=float))
        if self.evaluator is not None:
            return self.evaluator(times)
        return np.array([np.interp(times, self.t, c) for c in self.curves])


@dataclass(frozen=True)
class BoundParams:
    eps: float
    a: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.a, dtype=float)
        if np.any(a <= 0) or np.any(np.diff(a) <= 0):
            raise ValueError("a_k must be positive and strictly increasing")


def a_recursion(a1: float, K: int) -> np.ndarray:
    """a_1..a_K from a_{k+1} = a_k/2 + (a_k/2) sqrt(1 + 4/a_k)."""
    if a1 <= 0:
        raise ValueError("a_1 must be positive")
    a = np.empty(K)
    a[0] = a1
    for k in range(1, K):
        p = a[k - 1]
        a[k] = p / 2 + (p / 2) * np.sqrt(1 + 4 / p)
    return a


def _couplings(couplings, K: int) -> np.ndarray:
    c = np.broadcast_to(np.asarray(couplings, dtype=float), (K,)).copy()
    if np.any(c <= 0) or not np.all(np.isfinite(c)):
        raise ValueError("couplings must be positive and finite")
    return c


def _rhs(_, f, c):
    prev = np.concatenate(([1.0], f[:-1]))
    d = 2 * c * np.sqrt(np.clip(f, 0, None)) * np.sqrt(np.clip(prev - f, 0, None))
    d[f >= 1 - FREEZE_TOL] = 0.0
    return d


def default_grid(K: int, couplings: np.ndarray, points_per_t: float = 1e3) -> np.ndarray:
    """Grid reaching well past the expected saturation time with step 1e-3 T."""
    t_exp = max(np.sqrt(K), np.pi / 4) / couplings.min()
    t_end = 1.5 * t_exp + 1.0 / couplings.min()
    n = int(np.ceil(points_per_t * t_end / t_exp)) + 1
    return np.linspace(0.0, t_end, n)


def saturated_levels(K: int, couplings=1.0, f_init: float = 0.5, grid=None,
                     rtol: float = 1e-12, atol: float = 1e-13) -> RateCurveSet:
    """Integrate f_k' = 2 c_k sqrt(f_k) sqrt(f_{k-1} - f_k), f_0 = 1, for k = 1..K."""
    if K < 1:
        raise ValueError("need at least one level")
    if not 0 < f_init <= 1:
        raise ValueError("f_init must lie in (0, 1]")
    c = _couplings(couplings, K)
    t = default_grid(K, c) if grid is None else np.asarray(grid, dtype=float)
    if t[0] != 0 or np.any(np.diff(t) <= 0):
        raise ValueError("grid must start at 0 and increase strictly")
    sol = solve_ivp(_rhs, (0.0, t[-1]), np.full(K, float(f_init)), args=(c,),
                    method="DOP853", rtol=rtol, atol=atol, dense_output=True)
    if not sol.success:
        raise RuntimeError(f"rate-equation integration failed: {sol.message}")

    def evaluator(times):
        times = np.atleast_1d(np.asarray(times, dtype=float))
        v = np.clip(sol.sol(np.clip(times, 0.0, t[-1])), 0.0, 1.0).reshape(K, -1)
        v[v >= 1 - FREEZE_TOL] = 1.0
        return v

    meta = {"f_init": float(f_init), "rtol": rtol, "atol": atol, "method": "DOP853"}
    return RateCurveSet(t, evaluator(t), c, "saturated", meta, evaluator)


def saturated_curves(d: int, couplings=1.0, f_init: float = 0.5, grid=None) -> RateCurveSet:
    """Saturated curves for two qubits at interaction distance d (floor(d/2) levels)."""
    if d < 2:
        raise ValueError("interaction distance must be at least 2")
    out = saturated_levels(d // 2, couplings, f_init, grid)
    out.meta["distance"] = int(d)
    return out


def _quadratic(a: np.ndarray, offset: float, scale: float, grid, kind: str, meta: dict) -> RateCurveSet:
    a = np.asarray(a, dtype=float)
    t = default_grid(a.size, np.ones(1)) if grid is None else np.asarray(grid, dtype=float)

    def evaluator(times):
        times = np.atleast_1d(np.asarray(times, dtype=float))
        return np.minimum(scale * times[None, :] ** 2 / a[:, None] + offset, 1.0)

    return RateCurveSet(t, evaluator(t), np.ones(a.size), kind, meta, evaluator)


def upper_bound_curves(K: int, eps: float = DEFAULT_EPS, grid=None) -> tuple[BoundParams, RateCurveSet]:
    """u_k(t) = t^2/a_k + (1+eps)/2 with a_1 = 2 eps (clamped at 1)."""
    if eps <= 0:
        raise ValueError("eps must be positive")
    params = BoundParams(eps, a_recursion(2 * eps, K))
    curves = _quadratic(params.a, (1 + eps) / 2, 1.0, grid, "upper", {"eps": eps, "a1": 2 * eps})
    return params, curves


def lower_bound_curves(K: int, grid=None, a1: float = LOWER_A1) -> RateCurveSet:
    """l_k(t) = t^2/(2 a_k) + 1/2, the same recursion in tau = t/sqrt(2) (clamped at 1).

    The base a_1 = pi^2/16 makes l_1 touch the exact f_1 = sin^2(t + pi/4) at
    t = pi/4 and stay below it elsewhere.
    """
    if K < 1:
        raise ValueError("need at least one level")
    a = a_recursion(a1, K)
    curves = _quadratic(a, 0.5, 0.5, grid, "lower", {"a1": a1})
    curves.meta["a"] = a.tolist()
    return curves


def t_ent(curves: RateCurveSet, level: int, threshold: float = DEFAULT_THRESHOLD) -> float | None:
    """First time the level-k curve reaches ``threshold``; None if never.

    The bracketing grid interval is refined by bisection on the curve's
    evaluator when available, otherwise linearly interpolated.
    """
    y = curves.curve(level)
    hit = np.nonzero(y >= threshold)[0]
    if hit.size == 0:
        return None
    i = int(hit[0])
    if i == 0:
        return float(curves.t[0])
    lo, hi = curves.t[i - 1], curves.t[i]
    if curves.evaluator is None:
        y0, y1 = y[i - 1], y[i]
        return float(lo + (threshold - y0) * (hi - lo) / (y1 - y0))
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if curves.at(mid)[level - 1, 0] >= threshold:
            hi = mid
        else:
            lo = mid
        if hi - lo < 1e-14:
            break
    return float(hi)


def t_lower_closed(L: int) -> float:
    return float(np.sqrt((L // 2) / 2))


def t_upper_closed(L: int) -> float:
    return float(np.sqrt(L // 2))


@dataclass
class ScalingRow:
    L: int
    T_numeric: float
    T_lower: float
    T_upper: float
    T_numeric_coarse: float


def scaling_experiment(L_list: Sequence[int], threshold: float = DEFAULT_THRESHOLD) -> list[ScalingRow]:
    """T_ent of the saturated end-pair curve for chains of length L (floor(L/2) levels).

    Each row is computed on the default grid and on a grid twice as coarse;
    both values are reported so callers can assess discretisation error.
    """
    rows = []
    for L in L_list:
        L = int(L)
        if L < 4:
            raise ValueError(f"chain length {L} is below 4")
        K = L // 2
        fine = saturated_levels(K)
        coarse_grid = default_grid(K, fine.couplings, points_per_t=5e2)
        coarse = saturated_levels(K, grid=coarse_grid)
        T = t_ent(fine, K, threshold)
        Tc = t_ent(coarse, K, threshold)
        if T is None or Tc is None:
            raise RuntimeError(f"end-pair curve for L={L} never reached the threshold")
        rows.append(ScalingRow(L, T, t_lower_closed(L), t_upper_closed(L), Tc))
    return rows
