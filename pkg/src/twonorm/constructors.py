"""Concrete elements of the isometry group, its Lie algebra and the
symmetrizable class, assembled as truncated matrices in the s-basis."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .core import HVector, TwoNormOperator, inner_l2, l2_representation
from .domains import DomainKind, DomainSpec, GammaSequence, basis_gamma, bessel_j

__all__ = [
    "ScalarField",
    "one",
    "plane_wave",
    "theta_n",
    "field_from_csv",
    "named_field",
    "phase_lift",
    "rank_one_projection",
    "rank_one_exponential",
    "finite_block_unitary",
    "multiplication_operator",
    "composition_reflection",
    "disk_rotation",
    "doubling_shift_parts",
    "doubling_shift_T",
    "adjacent_shift_parts",
    "adjacent_shift_T",
    "doubling_toeplitz_model",
    "random_lie_element",
    "gauss_legendre_panels",
]

_NORMALIZE_SLACK = 1e-6


@dataclass(frozen=True)
class ScalarField:
    """A complex symbol on the interval, or a radial profile on the disk.

    On the interval ``func(x)`` is the symbol and ``deriv(x)`` its derivative.
    On the disk the symbol is ``func(r) * exp(1j * harmonic * phi)``.
    """

    func: Callable[[np.ndarray], np.ndarray]
    deriv: Callable[[np.ndarray], np.ndarray] | None = None
    unimodular: bool = False
    harmonic: int = 0
    name: str = "custom"

    def __call__(self, x):
        return np.asarray(self.func(np.asarray(x, dtype=float)), dtype=complex) * np.ones_like(x, dtype=complex)

    def conj(self) -> "ScalarField":
        f, d = self.func, self.deriv
        return ScalarField(
            lambda x: np.conj(f(x)),
            None if d is None else (lambda x: np.conj(d(x))),
            self.unimodular,
            -self.harmonic,
            f"conj({self.name})",
        )


def one() -> ScalarField:
    return ScalarField(lambda x: np.ones_like(x), lambda x: np.zeros_like(x), True, 0, "one")


def plane_wave(k: float) -> ScalarField:
    """theta(x) = exp(i k x)."""
    return ScalarField(
        lambda x: np.exp(1j * k * x), lambda x: 1j * k * np.exp(1j * k * x), True, 0, f"plane_wave({k:g})"
    )


def theta_n(n: int) -> ScalarField:
    """theta_n(x) = exp(i sin(n x) / n)."""
    return ScalarField(
        lambda x: np.exp(1j * np.sin(n * x) / n),
        lambda x: 1j * np.cos(n * x) * np.exp(1j * np.sin(n * x) / n),
        True,
        0,
        f"theta_n({n})",
    )


def field_from_csv(path, unimodular: bool = True) -> ScalarField:
    """Sampled symbol from a CSV table with columns x, re, im, dre, dim."""
    with open(path, newline="") as fh:
        rows = [r for r in csv.DictReader(fh)]
    if not rows:
        raise ValueError(f"{path}: empty symbol table")
    x = np.array([float(r["x"]) for r in rows])
    order = np.argsort(x)
    x = x[order]
    val = np.array([float(r["re"]) + 1j * float(r["im"]) for r in rows])[order]
    der = np.array([float(r["dre"]) + 1j * float(r["dim"]) for r in rows])[order]

    def interp(table):
        return lambda t: np.interp(t, x, table.real) + 1j * np.interp(t, x, table.imag)

    return ScalarField(interp(val), interp(der), unimodular, 0, f"custom({path})")


def named_field(spec: str) -> ScalarField:
    """Parse ``one``, ``plane_wave(k)``, ``theta_n(n)`` or ``custom(path)``."""
    s = spec.strip()
    if s == "one":
        return one()
    head, _, rest = s.partition("(")
    if not rest.endswith(")"):
        raise ValueError(f"unknown symbol {spec!r}")
    arg = rest[:-1].strip()
    if head == "plane_wave":
        return plane_wave(float(arg))
    if head == "theta_n":
        return theta_n(int(arg))
    if head == "custom":
        return field_from_csv(arg)
    raise ValueError(f"unknown symbol {spec!r}")


def phase_lift(theta: ScalarField, x) -> np.ndarray:
    """Real alpha on the sorted nodes ``x`` with exp(i alpha) = theta.

    One-dimensional construction by unwrapping the argument; the samples must
    be fine enough that theta turns by less than pi between neighbours.
    """
    x = np.asarray(x, dtype=float)
    if np.any(np.diff(x) <= 0):
        raise ValueError("nodes must be strictly increasing")
    vals = theta(x)
    if np.max(np.abs(np.abs(vals) - 1.0)) > 1e-12:
        raise ValueError("phase lift needs a unimodular symbol")
    return np.unwrap(np.angle(vals))


# --------------------------------------------------------------------------
# finite-rank elements


def _unit_l2(f: HVector) -> HVector:
    n = f.norm_l2()
    if n == 0:
        raise ValueError("f must be nonzero")
    if abs(n - 1.0) > _NORMALIZE_SLACK:
        raise ValueError(f"|f|_2 = {n:.6g}, expected 1 (normalize first)")
    return HVector(f.coeffs / n, f.gamma)


def _domain_of(gamma: GammaSequence) -> DomainSpec:
    if gamma.domain is None:
        raise ValueError("gamma sequence carries no domain")
    return gamma.domain


def rank_one_projection(f: HVector) -> TwoNormOperator:
    """E = f (x) Af, i.e. E g = <g, f> f."""
    f = _unit_l2(f)
    c = f.coeffs
    Af = c / f.gamma.gamma**2
    return TwoNormOperator(np.outer(c, Af.conj()), f.gamma, _domain_of(f.gamma))


def rank_one_exponential(f: HVector, t: float = 1.0) -> TwoNormOperator:
    """exp(i t E) = e^{it} E + (I - E) for the L2-orthogonal projection E."""
    E = rank_one_projection(f)
    return TwoNormOperator(np.eye(E.N) + (np.exp(1j * t) - 1.0) * E.mat, E.gamma, E.domain)


def finite_block_unitary(frame: Sequence[HVector], u0) -> TwoNormOperator:
    """G acting as u0 on span(frame) and as the identity on its L2-complement."""
    if not frame:
        raise ValueError("frame must be nonempty")
    gamma = frame[0].gamma
    F = np.column_stack([f.coeffs for f in frame])
    AF = F / gamma.gamma[:, None] ** 2
    gram = AF.conj().T @ F  # <f_k, f_j>
    k = F.shape[1]
    if np.max(np.abs(gram - np.eye(k))) > 1e-10:
        raise ValueError("frame is not L2-orthonormal")
    u0 = np.asarray(u0, dtype=complex)
    if u0.shape != (k, k):
        raise ValueError(f"u0 must be {k} x {k}")
    if np.linalg.norm(u0.conj().T @ u0 - np.eye(k), 2) > 1e-8:
        raise ValueError("u0 is not unitary")
    mat = np.eye(len(gamma)) + F @ (u0 - np.eye(k)) @ AF.conj().T
    return TwoNormOperator(mat, gamma, _domain_of(gamma))


# --------------------------------------------------------------------------
# multiplication and composition operators


def gauss_legendre_panels(a: float, b: float, panels: int, order: int = 8):
    """Nodes and weights of the composite Gauss-Legendre rule on [a, b]."""
    t, w = np.polynomial.legendre.leggauss(order)
    edges = np.linspace(a, b, panels + 1)
    h = np.diff(edges)
    x = (edges[:-1, None] + 0.5 * h[:, None] * (t[None, :] + 1.0)).ravel()
    wt = (0.5 * h[:, None] * w[None, :]).ravel()
    return x, wt


def _check_unimodular(theta: ScalarField, nodes):
    if theta.unimodular:
        dev = np.max(np.abs(np.abs(theta(nodes)) - 1.0))
        if dev > 1e-12:
            raise ValueError(f"symbol flagged unimodular deviates by {dev:.2e}")


def _interval_multiplier(theta: ScalarField, N: int, panels: int) -> np.ndarray:
    gamma = basis_gamma(DomainSpec.interval(), N).gamma
    x, w = gauss_legendre_panels(0.0, 1.0, panels)
    _check_unimodular(theta, x)
    k = np.arange(1, N + 1)[:, None]
    S = math.sqrt(2.0) * np.sin(k * math.pi * x) / gamma[:, None]
    Sd = math.sqrt(2.0) * (k * math.pi) * np.cos(k * math.pi * x) / gamma[:, None]
    th = theta(x)
    if theta.deriv is None:
        # Green's identity: [u, s_j] = gamma_j^2 <u, s_j> for u in H1_0
        return (gamma**2)[:, None] * ((S * (w * th)) @ S.T)
    dth = np.asarray(theta.deriv(x), dtype=complex) * np.ones_like(x, dtype=complex)
    # [theta s_k, s_j]_1 = int theta s_k s_j + int (theta' s_k + theta s_k') s_j'
    return (S * (w * th)) @ S.T + (Sd * (w * dth)) @ S.T + (Sd * (w * th)) @ Sd.T


def _disk_modes(N: int):
    g = basis_gamma(DomainSpec.disk(), N)
    ms = np.array([lab[0] for lab in g.labels])
    z = np.sqrt(g.mu)
    norms = math.sqrt(math.pi) * np.abs(bessel_j(np.abs(ms) + 1, z))
    return g, ms, z, norms


def _disk_multiplier(theta: ScalarField, N: int, panels: int) -> np.ndarray:
    g, ms, z, norms = _disk_modes(N)
    r, w = gauss_legendre_panels(0.0, 1.0, panels)
    _check_unimodular(theta, r)
    radial = bessel_j(np.abs(ms)[:, None], z[:, None] * r[None, :]) / norms[:, None]
    rho = theta(r)
    ell = theta.harmonic
    # <theta e_k, e_j> = 2 pi delta(m_j = m_k + ell) int rho J J r dr
    overlap = 2.0 * math.pi * (radial * (w * r * rho)) @ radial.T
    mask = ms[:, None] == ms[None, :] + ell
    Mhat = np.where(mask, overlap, 0.0)
    gm = g.gamma
    return gm[:, None] * Mhat / gm[None, :]


def multiplication_operator(
    theta: ScalarField, domain: DomainSpec, N: int, quad_order: int | None = None
) -> TwoNormOperator:
    """Galerkin matrix of f -> theta f in the s-basis.

    On the interval the entries are [theta s_k, s_j]_1 assembled from the full
    H1 form (the derivative of theta is required for unimodular symbols).  On
    the disk the symbol is rho(r) exp(i l phi) and entries come from Green's
    identity, which reduces them to radial integrals.  ``quad_order`` is the
    number of Gauss-Legendre panels (8 nodes each), default max(64, 4N).
    """
    panels = max(64, 4 * N) if quad_order is None else int(quad_order)
    if domain.kind is DomainKind.INTERVAL:
        if panels < 2 * N:
            raise ValueError("need at least 2N quadrature panels")
        if theta.unimodular and theta.deriv is None:
            raise ValueError("unimodular symbol needs its derivative callable")
        mat = _interval_multiplier(theta, N, panels)
    elif domain.kind is DomainKind.DISK:
        if panels < 2 * int(math.ceil(math.sqrt(N))):
            raise ValueError("too few radial quadrature panels")
        mat = _disk_multiplier(theta, N, panels)
    else:
        raise ValueError("multiplication operators are assembled on Interval01 or UnitDisk only")
    return TwoNormOperator(mat, basis_gamma(domain, N), domain)


def composition_reflection(N: int) -> TwoNormOperator:
    """f -> f(1 - x) on the interval: diag((-1)^(k+1))."""
    k = np.arange(1, N + 1)
    return TwoNormOperator.on(DomainSpec.interval(), np.diag((-1.0) ** (k + 1)))


def disk_rotation(alpha: float, N: int) -> TwoNormOperator:
    """f -> f(r, phi + alpha) on the disk: diag(exp(i m alpha))."""
    g = basis_gamma(DomainSpec.disk(), N)
    ms = np.array([lab[0] for lab in g.labels])
    return TwoNormOperator(np.diag(np.exp(1j * ms * alpha)), g, DomainSpec.disk())


# --------------------------------------------------------------------------
# shifts


def doubling_shift_parts(domain: DomainSpec, N: int) -> tuple[TwoNormOperator, TwoNormOperator]:
    """S: e_k -> e_2k and B = S*, compressed to the first N modes."""
    if N < 4:
        raise ValueError("need N >= 4")
    g = basis_gamma(domain, N)
    gm = g.gamma
    S = np.zeros((N, N))
    B = np.zeros((N, N))
    for k in range(1, N + 1):
        if 2 * k <= N:
            S[2 * k - 1, k - 1] = gm[2 * k - 1] / gm[k - 1]
        if k % 2 == 0:
            B[k // 2 - 1, k - 1] = gm[k // 2 - 1] / gm[k - 1]
    return TwoNormOperator(S, g, domain), TwoNormOperator(B, g, domain)


def doubling_shift_T(domain: DomainSpec, N: int) -> TwoNormOperator:
    S, B = doubling_shift_parts(domain, N)
    return S + B


def adjacent_shift_parts(N: int, domain: DomainSpec | None = None) -> tuple[TwoNormOperator, TwoNormOperator]:
    """Unilateral shift e_k -> e_{k+1} and its adjoint, in the s-basis."""
    if N < 4:
        raise ValueError("need N >= 4")
    domain = domain or DomainSpec.interval()
    g = basis_gamma(domain, N)
    gm = g.gamma
    ratio_up = gm[1:] / gm[:-1]
    S = np.diag(ratio_up, -1)
    B = np.diag(1.0 / ratio_up, 1)
    return TwoNormOperator(S, g, domain), TwoNormOperator(B, g, domain)


def adjacent_shift_T(N: int, domain: DomainSpec | None = None) -> TwoNormOperator:
    S, B = adjacent_shift_parts(N, domain)
    return S + B


def doubling_toeplitz_model(n: int, N: int) -> np.ndarray:
    """Tridiagonal Toeplitz: 2^(1/n) below, 2^(-1/n) above the diagonal."""
    if N < 4:
        raise ValueError("need N >= 4")
    if n < 1:
        raise ValueError("n must be a positive integer")
    c = 2.0 ** (1.0 / n)
    return np.diag(np.full(N - 1, c), -1) + np.diag(np.full(N - 1, 1.0 / c), 1)


# --------------------------------------------------------------------------
# random Lie algebra elements


def random_lie_element(
    N: int,
    gamma: GammaSequence | DomainSpec | None = None,
    p: float | None = None,
    seed: int | np.random.Generator | None = 0,
    *,
    scale: float | None = None,
) -> TwoNormOperator:
    """X with X_hat = i H, H a Gaussian Hermitian matrix in the e-basis.

    With ``p`` given, the eigenvalue moduli of H are replaced by the profile
    k^(-2/p - 0.1) (keeping signs and eigenvectors), so the Schatten p-norm
    stays bounded as N grows.  ``scale`` fixes the L2 operator norm of X.
    """
    if gamma is None:
        gamma = basis_gamma(DomainSpec.interval(), N)
    elif isinstance(gamma, DomainSpec):
        gamma = basis_gamma(gamma, N)
    if len(gamma) != N:
        raise ValueError("gamma length must be N")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    Z = rng.standard_normal((N, N)) + 1j * rng.standard_normal((N, N))
    H = 0.5 * (Z + Z.conj().T)
    if p is not None:
        if p < 1:
            raise ValueError("p must be >= 1")
        w, V = np.linalg.eigh(H)
        order = np.argsort(-np.abs(w))
        prof = np.arange(1, N + 1, dtype=float) ** (-(0.0 if math.isinf(p) else 2.0 / p) - 0.1)
        new = np.empty(N)
        new[order] = np.sign(w[order]) * prof
        H = (V * new) @ V.conj().T
        H = 0.5 * (H + H.conj().T)
    if scale is not None:
        H = H * (scale / np.linalg.norm(H, 2))
    return TwoNormOperator.from_l2(1j * H, _domain_of(gamma), gamma)


def _check_l2_frame(frame: Sequence[HVector]) -> np.ndarray:
    return np.array([[inner_l2(f, g) for g in frame] for f in frame])


def _l2(X: TwoNormOperator) -> np.ndarray:
    return l2_representation(X)
