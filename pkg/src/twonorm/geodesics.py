"""Logarithms, trimming, Schatten-p Finsler lengths and minimal curves.

Tangent vectors are measured in the L2 representation, where every group
element is unitary and every Lie algebra element is anti-Hermitian.  The
one-parameter curves ``t -> exp(tX) G1`` with ``||X||_{B(L2)} <= pi`` are the
candidates for shortest paths.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass
from typing import Sequence

import numpy as np
import scipy.linalg

from .core import (
    IncompatibleOperatorError,
    NotInGroupError,
    TwoNormOperator,
    default_tol,
    in_group,
    in_lie_algebra,
    l2_representation,
    operator_from_dict,
    operator_to_dict,
)
from .report import ExperimentReport

__all__ = [
    "BranchCutWarning",
    "GeodesicResult",
    "expm_taylor",
    "matrix_exp",
    "matrix_log_group",
    "trim_eigenvalues",
    "schatten_norm",
    "lalesco_check",
    "geodesic_between",
    "curve_length",
    "minimality_experiment",
    "MIN_GAP",
]

MIN_GAP = 1e-6
_NORMAL_TOL = 1e-12


class BranchCutWarning(RuntimeWarning):
    """The eigenvalues of a unitary leave no usable gap for a branch cut."""


# --------------------------------------------------------------------------
# exponential


def expm_taylor(a: np.ndarray, tol: float = 1e-13) -> np.ndarray:
    """Scaling-and-squaring with a truncated Taylor series.

    The matrix is scaled by 2^-s until its norm is at most 1/2, the series is
    summed until the next term falls below ``tol`` relative to the partial
    sum, and the result is squared s times.
    """
    a = np.asarray(a, dtype=complex)
    n = a.shape[0]
    nrm = np.linalg.norm(a, 1)
    s = max(0, int(math.ceil(math.log2(nrm / 0.5)))) if nrm > 0.5 else 0
    b = a / 2.0**s
    out = np.eye(n, dtype=complex)
    term = np.eye(n, dtype=complex)
    for k in range(1, 60):
        term = term @ b / k
        out = out + term
        if np.linalg.norm(term, 1) <= tol * np.linalg.norm(out, 1):
            break
    for _ in range(s):
        out = out @ out
    return out


def _exp_hermitian_i(h: np.ndarray) -> np.ndarray:
    """exp(i h) for Hermitian h (batched over leading axes)."""
    w, v = np.linalg.eigh(h)
    return (v * np.exp(1j * w)[..., None, :]) @ np.swapaxes(v.conj(), -1, -2)


def _is_normal(m: np.ndarray) -> bool:
    scale = max(np.linalg.norm(m, 2), 1.0) ** 2
    return np.linalg.norm(m @ m.conj().T - m.conj().T @ m, 2) <= _NORMAL_TOL * scale


def matrix_exp(X: TwoNormOperator) -> TwoNormOperator:
    """e^X, computed on the L2 representation and mapped back.

    Anti-Hermitian and Hermitian L2 representations are exponentiated through
    their eigendecomposition; any other matrix uses :func:`expm_taylor`.
    """
    xh = l2_representation(X)
    nrm = max(np.linalg.norm(xh, 2), 1.0)
    if np.linalg.norm(xh + xh.conj().T, 2) <= _NORMAL_TOL * nrm:
        h = -0.5j * (xh - xh.conj().T)
        gh = _exp_hermitian_i(0.5 * (h + h.conj().T))
    elif np.linalg.norm(xh - xh.conj().T, 2) <= _NORMAL_TOL * nrm:
        w, v = np.linalg.eigh(0.5 * (xh + xh.conj().T))
        gh = (v * np.exp(w)) @ v.conj().T
    else:
        gh = expm_taylor(xh)
    return TwoNormOperator.from_l2(gh, X.domain, X.gamma)


# --------------------------------------------------------------------------
# logarithm and trimming


def _cut_angle(angles: np.ndarray) -> tuple[float, float]:
    """Midpoint of the largest gap between sorted angles, and that gap."""
    a = np.sort(np.mod(angles, 2.0 * math.pi))
    gaps = np.diff(np.concatenate([a, [a[0] + 2.0 * math.pi]]))
    i = int(np.argmax(gaps))
    return float(a[i] + 0.5 * gaps[i]), float(gaps[i])


def matrix_log_group(G: TwoNormOperator, tol: float | None = None) -> TwoNormOperator:
    """X in the Lie algebra with e^X = G.

    The unitary L2 representation is diagonalized by a complex Schur
    decomposition; the branch cut runs through the midpoint of the largest
    gap between eigenvalue arguments, so every eigenangle lies in
    ``(cut - 2 pi, cut)``.
    """
    m = in_group(G, tol)
    if not m:
        raise NotInGroupError(f"group defect {m.defect:.3e} exceeds tol {m.tol:.3e}")
    gh = l2_representation(G)
    t, z = scipy.linalg.schur(gh, output="complex")
    w = np.diag(t)
    ang = np.angle(w)
    cut, gap = _cut_angle(ang)
    if gap < MIN_GAP:
        warnings.warn(
            f"largest angular gap {gap:.2e} rad is below {MIN_GAP:g}; the branch is ill-conditioned",
            BranchCutWarning,
            stacklevel=2,
        )
    # representative of each angle in (cut - 2 pi, cut]
    theta = cut - np.mod(cut - ang, 2.0 * math.pi)
    xh = (z * (1j * theta)) @ z.conj().T
    xh = 0.5 * (xh - xh.conj().T)
    return TwoNormOperator.from_l2(xh, G.domain, G.gamma)


def _hermitian_part_of_lie(X: TwoNormOperator) -> np.ndarray:
    xh = l2_representation(X)
    h = -0.5j * (xh - xh.conj().T)
    return 0.5 * (h + h.conj().T)


def trim_eigenvalues(X: TwoNormOperator, tol: float | None = None) -> TwoNormOperator:
    """Shift eigenvalues i beta with |beta| > pi by multiples of 2 pi i.

    The exponential is unchanged and the trimmed element has L2 operator
    norm at most pi.  Eigenvalues on the boundary |beta| = pi are kept.
    """
    m = in_lie_algebra(X, tol)
    if not m:
        raise ValueError(f"not in the Lie algebra: defect {m.defect:.3e}")
    w, v = np.linalg.eigh(_hermitian_part_of_lie(X))
    out = np.abs(w) > math.pi
    if not np.any(out):
        return X
    w = np.where(out, w - 2.0 * math.pi * np.round(w / (2.0 * math.pi)), w)
    xh = (v * (1j * w)) @ v.conj().T
    return TwoNormOperator.from_l2(0.5 * (xh - xh.conj().T), X.domain, X.gamma)


# --------------------------------------------------------------------------
# norms


def _check_p(p: float) -> float:
    p = float(p)
    if not p >= 1:
        raise ValueError(f"Schatten index must be >= 1, got {p}")
    return p


def _pnorm(values: np.ndarray, p: float, axis=-1) -> np.ndarray:
    if math.isinf(p):
        return np.max(values, axis=axis)
    if p == 1:
        return np.sum(values, axis=axis)
    if p == 2:
        return np.sqrt(np.sum(values * values, axis=axis))
    top = np.max(values, axis=axis, keepdims=True)
    safe = np.where(top > 0, top, 1.0)
    return np.squeeze(safe, axis) * np.sum((values / safe) ** p, axis=axis) ** (1.0 / p)


def _schatten_matrix(m: np.ndarray, p: float) -> np.ndarray:
    return _pnorm(np.linalg.svd(m, compute_uv=False), p)


def schatten_norm(X, p: float = math.inf, space: str = "L2") -> float:
    """l^p norm of the singular values of M (``"H1"``) or M_hat (``"L2"``)."""
    p = _check_p(p)
    if isinstance(X, TwoNormOperator):
        if space == "L2":
            m = l2_representation(X)
        elif space == "H1":
            m = X.mat
        else:
            raise ValueError(f"space must be 'H1' or 'L2', got {space!r}")
    else:
        m = np.asarray(X)
    if m.size == 0:
        return 0.0
    return float(_schatten_matrix(m, p))


def lalesco_check(X: TwoNormOperator, p: float, slack: float = 1e-10) -> tuple[float, float, bool]:
    """Compare ||X||_{p, L2} with ||X||_{p, H1}.

    For X in the Lie algebra the L2 side equals the l^p norm of the
    eigenvalues, which is dominated by the l^p norm of the singular values
    of the H1 matrix.  Both routes to the left side are computed and must
    agree.
    """
    p = _check_p(p)
    m = in_lie_algebra(X)
    if not m:
        raise ValueError(f"not in the Lie algebra: defect {m.defect:.3e}")
    lhs = schatten_norm(X, p, "L2")
    eig = np.abs(np.linalg.eigvalsh(_hermitian_part_of_lie(X)))
    via_eig = float(_pnorm(eig, p))
    if abs(via_eig - lhs) > 1e-9 * max(1.0, lhs):
        raise ArithmeticError(f"eigenvalue and singular-value routes disagree: {via_eig} vs {lhs}")
    rhs = schatten_norm(X, p, "H1")
    return lhs, rhs, bool(lhs <= rhs + slack)


# --------------------------------------------------------------------------
# geodesics


@dataclass(frozen=True)
class GeodesicResult:
    X: TwoNormOperator
    length: float
    p: float
    endpoint_defect: float

    def to_dict(self) -> dict:
        return {
            "X": operator_to_dict(self.X),
            "length": self.length,
            "p": "inf" if math.isinf(self.p) else self.p,
            "endpoint_defect": self.endpoint_defect,
        }

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)

    @classmethod
    def from_dict(cls, d: dict) -> "GeodesicResult":
        p = math.inf if d["p"] == "inf" else float(d["p"])
        return cls(operator_from_dict(d["X"]), float(d["length"]), p, float(d["endpoint_defect"]))

    @classmethod
    def from_json(cls, s) -> "GeodesicResult":
        return cls.from_dict(json.loads(s))


def geodesic_between(
    G1: TwoNormOperator, G2: TwoNormOperator, p: float = math.inf, tol: float | None = None
) -> GeodesicResult:
    """Velocity X of the short curve t -> e^{tX} G1 from G1 to G2."""
    p = _check_p(p)
    if G1.domain != G2.domain or G1.N != G2.N or G1.gamma != G2.gamma:
        raise IncompatibleOperatorError("endpoints live on different truncations")
    for G in (G1, G2):
        m = in_group(G, tol)
        if not m:
            raise NotInGroupError(f"group defect {m.defect:.3e} exceeds tol {m.tol:.3e}")
    Q = G2 @ G1.inverse()
    # Q is in the group up to rounding; give the log a little room
    qtol = max(default_tol(Q.N), 10 * in_group(Q, 1.0).defect) if tol is None else 2 * tol
    X = trim_eigenvalues(matrix_log_group(Q, qtol))
    length = schatten_norm(X, p, "L2")
    defect = float(np.linalg.norm((matrix_exp(X) @ G1).mat - G2.mat, 2))
    return GeodesicResult(X, length, p, defect)


def _l2_stack(samples) -> tuple[np.ndarray, np.ndarray]:
    ts = np.array([float(t) for t, _ in samples])
    mats = np.stack([l2_representation(g) if isinstance(g, TwoNormOperator) else np.asarray(g) for _, g in samples])
    return ts, mats


def _length_of_stack(ts: np.ndarray, mats: np.ndarray, p: float) -> float:
    vel = np.gradient(mats, ts, axis=0, edge_order=2)
    speed = _pnorm(np.linalg.svd(vel, compute_uv=False), p)
    return float(np.trapezoid(speed, ts))


def curve_length(samples: Sequence[tuple[float, TwoNormOperator]], p: float = math.inf) -> float:
    """Finsler length of a sampled curve.

    Velocities are second-order finite differences (central in the interior)
    of the L2 representations; their Schatten p-norms are integrated with the
    composite trapezoid rule.
    """
    p = _check_p(p)
    if len(samples) < 3:
        raise ValueError("need at least 3 samples")
    ts, mats = _l2_stack(samples)
    if np.any(np.diff(ts) <= 0):
        raise ValueError("sample times must be strictly increasing")
    return _length_of_stack(ts, mats, p)


def _central_length(ts: np.ndarray, mats: np.ndarray, lo: np.ndarray, hi: np.ndarray, p: float) -> float:
    """Trapezoid length with central differences everywhere.

    ``lo`` and ``hi`` are the path one step before ``ts[0]`` and after
    ``ts[-1]``, so the endpoint velocities are central too and the error
    expansion stays even in the step.
    """
    h = ts[1] - ts[0]
    ext = np.concatenate([lo[None], mats, hi[None]])
    vel = (ext[2:] - ext[:-2]) / (2.0 * h)
    speed = _pnorm(np.linalg.svd(vel, compute_uv=False), p)
    return float(np.trapezoid(speed, ts))


def _refined_length(path, p: float, n0: int = 65, rtol: float = 1e-4, max_level: int = 7) -> float:
    """Length of ``path`` (t-array -> stack of L2 matrices) on a doubling ladder.

    The path must be defined slightly beyond [0, 1].  Sampling doubles until
    two successive estimates agree to ``rtol``; the final pair is combined by
    Richardson extrapolation, because the combined difference and quadrature
    error is a series in even powers of the step.
    """
    ts = np.linspace(0.0, 1.0, n0)
    mats = path(ts)

    def level(ts, mats):
        h = ts[1] - ts[0]
        ghosts = path(np.array([-h, 1.0 + h]))
        return _central_length(ts, mats, ghosts[0], ghosts[1], p)

    prev = level(ts, mats)
    cur = prev
    for _ in range(max_level):
        mid = 0.5 * (ts[:-1] + ts[1:])
        new = path(mid)
        both = np.empty((2 * ts.size - 1,) + mats.shape[1:], dtype=mats.dtype)
        both[0::2], both[1::2] = mats, new
        tt = np.empty(2 * ts.size - 1)
        tt[0::2], tt[1::2] = ts, mid
        ts, mats = tt, both
        cur = level(ts, mats)
        if abs(cur - prev) <= rtol * max(abs(cur), 1e-300):
            break
        prev = cur
    return (4.0 * cur - prev) / 3.0


def _random_anti_hermitian(rng: np.random.Generator, N: int) -> np.ndarray:
    z = rng.standard_normal((N, N)) + 1j * rng.standard_normal((N, N))
    h = 0.5 * (z + z.conj().T)
    return 1j * h / np.linalg.norm(h, 2)


def minimality_experiment(
    G: TwoNormOperator,
    p: float = math.inf,
    num_variations: int = 50,
    seed: int = 0,
    *,
    eps_range: tuple[float, float] = (1e-3, 0.5),
    slack: float = 1e-6,
) -> ExperimentReport:
    """Compare the geodesic from 1 to G with perturbed curves.

    Each variation is ``t -> exp(t X + eps sin(pi t) V(t)) C`` in the L2
    representation, with ``V(t) = V0 + t V1 + t^2 V2`` random anti-Hermitian
    and ``C = exp(X + eps sin(pi) V(1))^-1 G`` the endpoint correction.  A
    variation whose correction moves the starting point by more than 1e-8 has
    its ``eps`` halved, up to three times.  Every variation's length must be at
    least the geodesic length minus ``slack``.
    """
    p = _check_p(p)
    if not in_group(G):
        raise NotInGroupError("G is not in the group")
    X = trim_eigenvalues(matrix_log_group(G))
    xh = l2_representation(X)
    gh = l2_representation(G)
    opnorm = schatten_norm(X, math.inf, "L2")
    if opnorm > math.pi + 1e-10:
        raise ValueError(f"geodesic velocity has L2 norm {opnorm:.6g} > pi")
    geo_len = schatten_norm(X, p, "L2")
    hx = -1j * xh

    def geodesic_path(ts):
        return _exp_hermitian_i(ts[:, None, None] * hx[None])

    geo_quad = _refined_length(geodesic_path, p)
    rows = [
        {
            "variation": 0,
            "epsilon": 0.0,
            "retries": 0,
            "length": geo_quad,
            "geodesic_length": geo_len,
            "excess": geo_quad - geo_len,
        }
    ]
    N = G.N
    children = np.random.SeedSequence(seed).spawn(num_variations)
    ok = abs(geo_quad - geo_len) <= 1e-6 * max(1.0, geo_len)
    for i, child in enumerate(children, start=1):
        rng = np.random.default_rng(child)
        V = [_random_anti_hermitian(rng, N) for _ in range(3)]
        eps = float(np.exp(rng.uniform(math.log(eps_range[0]), math.log(eps_range[1]))))
        retries = 0
        while True:
            hv = [-1j * v for v in V]

            def path(ts, eps=eps, hv=hv):
                s = np.sin(math.pi * ts)[:, None, None]
                t = ts[:, None, None]
                h = t * hx + eps * s * (hv[0] + t * hv[1] + t * t * hv[2])
                return _exp_hermitian_i(0.5 * (h + np.swapaxes(h.conj(), -1, -2)))

            end = path(np.array([1.0]))[0]
            C = end.conj().T @ gh
            if np.linalg.norm(C - np.eye(N), 2) <= 1e-8:
                break
            if retries == 3:
                raise ArithmeticError(f"endpoint correction failed for variation {i}")
            eps *= 0.5
            retries += 1

        def corrected(ts, path=path, C=C):
            return path(ts) @ C

        length = _refined_length(corrected, p)
        excess = length - geo_len
        ok = ok and excess >= -slack
        rows.append(
            {
                "variation": i,
                "epsilon": eps,
                "retries": retries,
                "length": length,
                "geodesic_length": geo_len,
                "excess": excess,
            }
        )
    params = {"p": "inf" if math.isinf(p) else p, "num_variations": num_variations, "seed": seed, "N": N}
    return ExperimentReport("minimality", params, rows, bool(ok))
