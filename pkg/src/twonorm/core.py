"""Truncated operators on H1_0 carried in the basis s_k, and their L2 shadows.

A vector ``f = sum_k c_k s_k`` has H1_0 norm ``|c|`` and L2 inner products
``<f, g> = sum_k c_k conj(d_k) / gamma_k^2``.  With ``D = diag(gamma)`` the
L2-orthonormal coordinates are ``D^-1 c``, so an operator with matrix ``M`` in
the s-basis acts on L2 coordinates through ``M_hat = D^-1 M D``.  At finite
truncation this one similarity simultaneously realizes the unitary extension
of group elements, the intertwiner ``A^(1/2) G A^(-1/2)`` and the
Dieudonne factor of a symmetrizable operator.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Union

import numpy as np

from .domains import DomainSpec, GammaSequence, basis_gamma

__all__ = [
    "IncompatibleOperatorError",
    "NotInGroupError",
    "Membership",
    "TwoNormOperator",
    "HVector",
    "default_tol",
    "solution_operator",
    "l2_representation",
    "h1_norm",
    "l2_norm",
    "inner_h1",
    "inner_l2",
    "in_group",
    "in_lie_algebra",
    "is_symmetrizable",
    "group_defect",
    "extension_map",
    "intertwiner",
    "dieudonne_factor",
    "operator_to_dict",
    "operator_from_dict",
    "operator_to_json",
    "operator_from_json",
]


class IncompatibleOperatorError(ValueError):
    """Operators on different domains or truncation sizes were combined."""


class NotInGroupError(ValueError):
    """The operator fails G* A G = A beyond the requested tolerance."""


@dataclass(frozen=True)
class Membership:
    """Outcome of a membership predicate; truthy iff ``defect <= tol``."""

    ok: bool
    defect: float
    tol: float

    def __bool__(self) -> bool:
        return self.ok


def default_tol(N: int) -> float:
    return 1e-8 * N


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=complex)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class TwoNormOperator:
    """N x N matrix acting on coordinates in the H1_0-orthonormal basis s_k."""

    mat: np.ndarray
    gamma: GammaSequence
    domain: DomainSpec

    def __post_init__(self):
        m = np.asarray(self.mat)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError(f"operator matrix must be square, got shape {m.shape}")
        if m.shape[0] != len(self.gamma):
            raise ValueError("matrix size does not match the gamma sequence")
        if not np.all(np.isfinite(m)):
            raise ValueError("operator matrix has non-finite entries")
        object.__setattr__(self, "mat", _readonly(m))

    @classmethod
    def on(cls, domain: DomainSpec, mat) -> "TwoNormOperator":
        mat = np.asarray(mat)
        return cls(mat, basis_gamma(domain, mat.shape[0]), domain)

    @classmethod
    def identity(cls, domain: DomainSpec, N: int) -> "TwoNormOperator":
        return cls(np.eye(N), basis_gamma(domain, N), domain)

    @classmethod
    def from_l2(cls, mat_hat, domain: DomainSpec, gamma: GammaSequence | None = None) -> "TwoNormOperator":
        """Build from the matrix in the L2-orthonormal basis e_k."""
        mat_hat = np.asarray(mat_hat)
        gamma = gamma if gamma is not None else basis_gamma(domain, mat_hat.shape[0])
        g = gamma.gamma
        return cls(mat_hat * (g[:, None] / g[None, :]), gamma, domain)

    @property
    def N(self) -> int:
        return self.mat.shape[0]

    @property
    def l2(self) -> np.ndarray:
        return l2_representation(self)

    def _check(self, other: "TwoNormOperator"):
        if not isinstance(other, TwoNormOperator):
            raise TypeError(f"expected TwoNormOperator, got {type(other).__name__}")
        if self.domain != other.domain or self.N != other.N or self.gamma != other.gamma:
            raise IncompatibleOperatorError(
                f"cannot combine operators on {self.domain.kind.value}[{self.N}] and "
                f"{other.domain.kind.value}[{other.N}]"
            )

    def _new(self, mat) -> "TwoNormOperator":
        return TwoNormOperator(mat, self.gamma, self.domain)

    def __matmul__(self, other):
        if isinstance(other, HVector):
            if self.gamma != other.gamma:
                raise IncompatibleOperatorError("vector and operator live on different bases")
            return HVector(self.mat @ other.coeffs, other.gamma)
        self._check(other)
        return self._new(self.mat @ other.mat)

    def __add__(self, other):
        self._check(other)
        return self._new(self.mat + other.mat)

    def __sub__(self, other):
        self._check(other)
        return self._new(self.mat - other.mat)

    def __neg__(self):
        return self._new(-self.mat)

    def __mul__(self, scalar):
        if not np.isscalar(scalar):
            return NotImplemented
        return self._new(scalar * self.mat)

    __rmul__ = __mul__

    def inverse(self) -> "TwoNormOperator":
        return self._new(np.linalg.inv(self.mat))

    def h1_adjoint(self) -> "TwoNormOperator":
        return self._new(self.mat.conj().T)

    def identity_like(self) -> "TwoNormOperator":
        return self._new(np.eye(self.N))


@dataclass(frozen=True, eq=False)
class HVector:
    """Coefficients of an element of H1_0 in the s-basis."""

    coeffs: np.ndarray
    gamma: GammaSequence

    def __post_init__(self):
        c = np.asarray(self.coeffs)
        if c.ndim != 1 or c.size != len(self.gamma):
            raise ValueError("coefficient vector length must match gamma")
        object.__setattr__(self, "coeffs", _readonly(c))

    @classmethod
    def basis(cls, gamma: GammaSequence, k: int) -> "HVector":
        """The vector s_k (1-based)."""
        c = np.zeros(len(gamma), dtype=complex)
        c[k - 1] = 1.0
        return cls(c, gamma)

    @classmethod
    def from_l2_coeffs(cls, a, gamma: GammaSequence) -> "HVector":
        """From coordinates in the L2-orthonormal e-basis."""
        return cls(gamma.gamma * np.asarray(a), gamma)

    @property
    def l2_coeffs(self) -> np.ndarray:
        return self.coeffs / self.gamma.gamma

    def norm_h1(self) -> float:
        return float(np.linalg.norm(self.coeffs))

    def norm_l2(self) -> float:
        return float(np.linalg.norm(self.l2_coeffs))

    def normalized_l2(self) -> "HVector":
        n = self.norm_l2()
        if n == 0:
            raise ValueError("cannot normalize the zero vector")
        return HVector(self.coeffs / n, self.gamma)

    def __add__(self, other: "HVector") -> "HVector":
        _same_basis(self, other)
        return HVector(self.coeffs + other.coeffs, self.gamma)

    def __mul__(self, scalar) -> "HVector":
        return HVector(scalar * self.coeffs, self.gamma)

    __rmul__ = __mul__


def _same_basis(f: HVector, g: HVector):
    if f.coeffs.size != g.coeffs.size:
        raise ValueError(f"length mismatch: {f.coeffs.size} vs {g.coeffs.size}")
    if f.gamma != g.gamma:
        raise IncompatibleOperatorError("vectors live on different bases")


def inner_h1(f: HVector, g: HVector) -> complex:
    """[f, g] = sum f_k conj(g_k)."""
    _same_basis(f, g)
    return complex(np.vdot(g.coeffs, f.coeffs))


def inner_l2(f: HVector, g: HVector) -> complex:
    """<f, g> = sum f_k conj(g_k) / gamma_k^2."""
    _same_basis(f, g)
    return complex(np.vdot(g.coeffs, f.coeffs / f.gamma.gamma**2))


def solution_operator(domain: DomainSpec, N: int) -> TwoNormOperator:
    """A = diag(1/gamma_k^2), i.e. [Af, g] = <f, g>."""
    gamma = basis_gamma(domain, N)
    return TwoNormOperator(np.diag(gamma.a_eigenvalues), gamma, domain)


def l2_representation(X: TwoNormOperator) -> np.ndarray:
    """M_hat[j, k] = (gamma_k / gamma_j) M[j, k]."""
    g = X.gamma.gamma
    return X.mat * (g[None, :] / g[:, None])


def _opnorm(a: np.ndarray) -> float:
    return float(np.linalg.svd(a, compute_uv=False)[0]) if a.size else 0.0


def h1_norm(X: TwoNormOperator) -> float:
    return _opnorm(X.mat)


def l2_norm(X: TwoNormOperator) -> float:
    return _opnorm(l2_representation(X))


def _as_operator(X) -> TwoNormOperator:
    if not isinstance(X, TwoNormOperator):
        a = np.asarray(X)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ValueError(f"expected a square operator, got shape {a.shape}")
        raise TypeError("membership predicates need a TwoNormOperator (the gamma sequence matters)")
    return X


def group_defect(G: TwoNormOperator, block: int | None = None) -> float:
    """||G_hat* G_hat - I||, optionally restricted to the leading ``block`` modes."""
    Gh = l2_representation(_as_operator(G))
    E = Gh.conj().T @ Gh - np.eye(G.N)
    if block is not None:
        E = E[:block, :block]
    return _opnorm(E)


def in_group(G: TwoNormOperator, tol: float | None = None) -> Membership:
    """G* A G = A, equivalently G_hat unitary."""
    G = _as_operator(G)
    tol = default_tol(G.N) if tol is None else tol
    if not tol > 0:
        raise ValueError("tol must be positive")
    d = group_defect(G)
    return Membership(d <= tol, d, tol)


def in_lie_algebra(X: TwoNormOperator, tol: float | None = None) -> Membership:
    """X* A + A X = 0, equivalently X_hat anti-Hermitian."""
    X = _as_operator(X)
    tol = default_tol(X.N) if tol is None else tol
    if not tol > 0:
        raise ValueError("tol must be positive")
    Xh = l2_representation(X)
    d = _opnorm(Xh + Xh.conj().T)
    return Membership(d <= tol, d, tol)


def is_symmetrizable(X: TwoNormOperator, tol: float | None = None) -> Membership:
    """A X = X* A, equivalently X_hat Hermitian."""
    X = _as_operator(X)
    tol = default_tol(X.N) if tol is None else tol
    if not tol > 0:
        raise ValueError("tol must be positive")
    Xh = l2_representation(X)
    d = _opnorm(Xh - Xh.conj().T)
    return Membership(d <= tol, d, tol)


def extension_map(G: TwoNormOperator, tol: float | None = None) -> np.ndarray:
    """Unitary extension of G to L2, as a matrix in the e-basis."""
    m = in_group(G, tol)
    if not m:
        raise NotInGroupError(f"group defect {m.defect:.3e} exceeds tol {m.tol:.3e}")
    return l2_representation(G)


def intertwiner(G: TwoNormOperator, tol: float | None = None) -> np.ndarray:
    """The unitary U_G on H1_0 with U_G A^(1/2) = A^(1/2) G (s-basis matrix)."""
    m = in_group(G, tol)
    if not m:
        raise NotInGroupError(f"group defect {m.defect:.3e} exceeds tol {m.tol:.3e}")
    r = 1.0 / G.gamma.gamma  # A^(1/2) = diag(1/gamma)
    U = r[:, None] * G.mat / r[None, :]
    resid = _opnorm(U * r[None, :] - r[:, None] * G.mat)
    if resid > 1e-10 * max(1.0, h1_norm(G)):
        raise ArithmeticError(f"intertwining residual {resid:.3e} too large")
    return U


def dieudonne_factor(X: TwoNormOperator, tol: float | None = None) -> np.ndarray:
    """Self-adjoint Y with A^(1/2) X = Y A^(1/2), for symmetrizable X."""
    m = is_symmetrizable(X, tol)
    if not m:
        raise ValueError(f"not symmetrizable: defect {m.defect:.3e}")
    r = 1.0 / X.gamma.gamma
    return r[:, None] * X.mat / r[None, :]


# --------------------------------------------------------------------------
# serialization


def operator_to_dict(X: TwoNormOperator) -> dict:
    return {
        "domain": X.domain.to_dict(),
        "N": X.N,
        "gamma": [float(g) for g in X.gamma.gamma],
        "mat": [[[float(z.real), float(z.imag)] for z in row] for row in X.mat],
    }


def operator_from_dict(d: dict) -> TwoNormOperator:
    domain = DomainSpec.from_dict(d["domain"])
    N = int(d["N"])
    raw = np.asarray(d["mat"], dtype=float)
    if raw.shape != (N, N, 2):
        raise ValueError(f"mat must be N x N pairs, got {raw.shape}")
    gamma = GammaSequence(np.asarray(d["gamma"], dtype=float), basis_gamma(domain, N).labels, domain)
    return TwoNormOperator(raw[..., 0] + 1j * raw[..., 1], gamma, domain)


def operator_to_json(X: TwoNormOperator, **kw) -> str:
    # float repr is the shortest string that round-trips the double exactly
    return json.dumps(operator_to_dict(X), **kw)


def operator_from_json(s: Union[str, bytes]) -> TwoNormOperator:
    return operator_from_dict(json.loads(s))
