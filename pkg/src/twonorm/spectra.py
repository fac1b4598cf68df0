"""Spectra in both norms, resolvent norms and truncation-ladder evidence.

At finite truncation M and M_hat = D^-1 M D are similar, so their spectra
agree; the interesting information about non-normal operators sits in the
resolvent norm, which depends on the basis and on N.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
import scipy.linalg
from scipy.optimize import linear_sum_assignment

from .constructors import adjacent_shift_T, doubling_shift_T, doubling_toeplitz_model
from .core import TwoNormOperator, is_symmetrizable, l2_representation
from .domains import DomainSpec

__all__ = [
    "SpectralReport",
    "Space",
    "spectrum",
    "resolvent_norm",
    "ellipse",
    "tridiagonal_eigenvalues",
    "essential_spectrum_ladder",
    "pseudospectrum_grid",
    "grid_to_csv",
    "match_spectra",
    "LADDER_BUILDERS",
    "DEFAULT_LADDER",
    "GROWTH_FACTOR",
]

DEFAULT_LADDER = (32, 64, 128, 256, 512)
GROWTH_FACTOR = 4.0
_TINY = 1e-300


class Space:
    H1 = "H1"
    L2 = "L2"


def _check_space(space: str) -> str:
    if space not in (Space.H1, Space.L2):
        raise ValueError(f"space must be 'H1' or 'L2', got {space!r}")
    return space


@dataclass
class SpectralReport:
    """Eigenvalues and optional resolvent diagnostics.

    ``resolvent_profile`` maps a probe (as ``complex``) to a list of
    ``(N, norm)`` pairs; ``grid`` is ``(re, im, sigma_min)`` with ``sigma_min``
    of shape ``(len(im), len(re))``.
    """

    eigenvalues: np.ndarray
    space: str
    resolvent_profile: dict | None = None
    grid: tuple[np.ndarray, np.ndarray, np.ndarray] | None = None
    flags: dict = field(default_factory=dict)

    def __post_init__(self):
        _check_space(self.space)
        self.eigenvalues = np.asarray(self.eigenvalues, dtype=complex)
        if self.resolvent_profile:
            for pts in self.resolvent_profile.values():
                if any(not v > 0 for _, v in pts):
                    raise ValueError("resolvent norms must be positive")

    def to_dict(self) -> dict:
        out: dict = {
            "space": self.space,
            "eigenvalues": [[float(z.real), float(z.imag)] for z in self.eigenvalues],
        }
        if self.resolvent_profile is not None:
            out["resolvent_profile"] = [
                {"re": float(lam.real), "im": float(lam.imag), "profile": [[int(n), float(v)] for n, v in pts]}
                for lam, pts in self.resolvent_profile.items()
            ]
        if self.grid is not None:
            re, im, sig = self.grid
            out["grid"] = {"re": re.tolist(), "im": im.tolist(), "sigma_min": sig.tolist()}
        if self.flags:
            out["flags"] = [
                {"re": float(lam.real), "im": float(lam.imag), "essential": bool(v)} for lam, v in self.flags.items()
            ]
        return out

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)


def _matrix(X, space: str) -> np.ndarray:
    space = _check_space(space)
    if isinstance(X, TwoNormOperator):
        return X.mat if space == Space.H1 else l2_representation(X)
    return np.asarray(X, dtype=complex)


def spectrum(X: TwoNormOperator, space: str = Space.L2) -> SpectralReport:
    """Eigenvalues of X acting on H1_0 (s-basis) or L2 (e-basis).

    Symmetrizable operators in the L2 space go through the Hermitian solver
    and come back real.
    """
    M = _matrix(X, space)
    if space == Space.L2 and isinstance(X, TwoNormOperator) and is_symmetrizable(X):
        w = np.linalg.eigvalsh(0.5 * (M + M.conj().T)).astype(complex)
    else:
        try:
            w = scipy.linalg.eigvals(M)
        except np.linalg.LinAlgError as exc:  # pragma: no cover - LAPACK failure
            raise np.linalg.LinAlgError(f"eigensolver did not converge on {M.shape} matrix") from exc
    order = np.lexsort((w.imag, w.real))
    return SpectralReport(w[order], space)


def match_spectra(a, b) -> float:
    """Largest distance under the optimal one-to-one pairing of two multisets."""
    a = np.asarray(a, dtype=complex).ravel()
    b = np.asarray(b, dtype=complex).ravel()
    if a.size != b.size:
        raise ValueError("multisets have different sizes")
    if a.size == 0:
        return 0.0
    a = a[np.lexsort((a.imag, a.real))]
    b = b[np.lexsort((b.imag, b.real))]
    cost = np.abs(a[:, None] - b[None, :])
    r, c = linear_sum_assignment(cost)
    return float(cost[r, c].max())


def resolvent_norm(X, lam: complex, space: str = Space.H1) -> float:
    """||(M - lam I)^-1|| = 1 / sigma_min(M - lam I); +inf when singular."""
    M = _matrix(X, space)
    s = np.linalg.svd(M - lam * np.eye(M.shape[0]), compute_uv=False)[-1]
    return math.inf if s < _TINY else float(1.0 / s)


def ellipse(n: int, num_samples: int = 256) -> np.ndarray:
    """2^(1/n) e^{i theta} + 2^(-1/n) e^{-i theta} for theta on [0, 2 pi)."""
    if num_samples < 4:
        raise ValueError("need at least 4 samples")
    c = 2.0 ** (1.0 / n)
    th = 2.0 * math.pi * np.arange(num_samples) / num_samples
    return c * np.exp(1j * th) + np.exp(-1j * th) / c


def tridiagonal_eigenvalues(T: np.ndarray) -> np.ndarray:
    """Eigenvalues of a real tridiagonal matrix with sub*super > 0.

    The diagonal similarity with ratios sqrt(sub/super) turns T into the
    symmetric tridiagonal matrix with off-diagonal sqrt(sub*super), so the
    spectrum is real.  A general eigensolver on T itself is unreliable: the
    matrix is so non-normal that rounding moves eigenvalues far off the line.
    """
    T = np.asarray(T)
    if np.iscomplexobj(T):
        if np.max(np.abs(T.imag)) > 0:
            raise ValueError("expected a real tridiagonal matrix")
        T = T.real
    N = T.shape[0]
    if np.any(np.abs(np.triu(T, 2)) > 0) or np.any(np.abs(np.tril(T, -2)) > 0):
        raise ValueError("matrix is not tridiagonal")
    lo, up = np.diag(T, -1), np.diag(T, 1)
    prod = lo * up
    if np.any(prod <= 0) and N > 1:
        raise ValueError("off-diagonal products must be positive")
    return scipy.linalg.eigvalsh_tridiagonal(np.diag(T).copy(), np.sqrt(prod))


def _adjacent(N):
    return adjacent_shift_T(N)


def _doubling(N, domain: DomainSpec | None = None):
    return doubling_shift_T(domain or DomainSpec.interval(), N)


LADDER_BUILDERS: dict[str, Callable] = {
    "doubling_shift_T": _doubling,
    "adjacent_shift_T": _adjacent,
    "doubling_toeplitz_model": lambda N, n=1: doubling_toeplitz_model(n, N),
}


def essential_spectrum_ladder(
    builder: str | Callable[[int], object],
    lambda_probes: Sequence[complex],
    N_ladder: Sequence[int] = DEFAULT_LADDER,
    **builder_kw,
) -> SpectralReport:
    """Resolvent-norm profile in H1 for each probe across a truncation ladder.

    A probe is flagged as numerically in the essential spectrum when the
    profile grows by at least ``GROWTH_FACTOR`` from the smallest to the
    largest N.  The eigenvalues reported are those of the largest truncation.
    """
    ladder = [int(n) for n in N_ladder]
    if len(ladder) < 2 or any(b <= a for a, b in zip(ladder, ladder[1:])):
        raise ValueError("ladder must be strictly increasing with at least two sizes")
    if isinstance(builder, str):
        if builder not in LADDER_BUILDERS:
            raise ValueError(f"unknown builder {builder!r}; choose from {sorted(LADDER_BUILDERS)}")
        build = LADDER_BUILDERS[builder]
    else:
        build = builder
    probes = [complex(z) for z in lambda_probes]
    profile: dict = {lam: [] for lam in probes}
    last = None
    for N in ladder:
        X = build(N, **builder_kw)
        last = X
        for lam in probes:
            profile[lam].append((N, resolvent_norm(X, lam, Space.H1)))
    flags = {}
    for lam, pts in profile.items():
        first, final = pts[0][1], pts[-1][1]
        flags[lam] = bool(final >= GROWTH_FACTOR * first)
    if isinstance(last, TwoNormOperator):
        eig = spectrum(last, Space.H1).eigenvalues
    else:
        eig = tridiagonal_eigenvalues(last).astype(complex)
    return SpectralReport(eig, Space.H1, resolvent_profile=profile, flags=flags)


def pseudospectrum_grid(X, re, im, space: str = Space.H1) -> SpectralReport:
    """sigma_min(lam I - M) on the tensor grid re x im."""
    M = _matrix(X, space)
    re = np.asarray(re, dtype=float)
    im = np.asarray(im, dtype=float)
    I = np.eye(M.shape[0])
    sig = np.empty((im.size, re.size))
    for a, y in enumerate(im):
        for b, x in enumerate(re):
            sig[a, b] = np.linalg.svd((x + 1j * y) * I - M, compute_uv=False)[-1]
    if isinstance(X, TwoNormOperator):
        eig = spectrum(X, space).eigenvalues
    else:
        eig = scipy.linalg.eigvals(M)
    return SpectralReport(eig, space, grid=(re, im, sig))


def grid_to_csv(report: SpectralReport, stream=None) -> str:
    """Columns re, im, sigma_min; one row per node, 17 significant digits."""
    if report.grid is None:
        raise ValueError("report carries no grid")
    buf = stream if stream is not None else io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["re", "im", "sigma_min"])
    re, im, sig = report.grid
    for a, y in enumerate(im):
        for b, x in enumerate(re):
            w.writerow([format(x, ".17g"), format(y, ".17g"), format(sig[a, b], ".17g")])
    return buf.getvalue() if stream is None else ""

