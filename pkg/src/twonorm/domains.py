"""Laplace-Dirichlet spectra and gamma sequences of the model domains.

Every operator in the package is carried in the H1_0-orthonormal eigenbasis
``s_k = e_k / gamma_k`` of the Helmholtz solution operator, where ``e_k`` is the
L2-normalized Dirichlet eigenfunction with Laplace eigenvalue ``mu_k`` and
``gamma_k = sqrt(1 + mu_k)``.  This module produces the ``mu_k`` (with mode
labels) for the unit interval, the unit disk, a Weyl-law model of an
arbitrary bounded domain, and a finite Fourier grid on R^n.
"""

from __future__ import annotations

import csv
import enum
import functools
import io
import math
from dataclasses import dataclass, field
from typing import Hashable, Sequence

import numpy as np

__all__ = [
    "DomainKind",
    "DomainSpec",
    "LaplaceSpectrum",
    "GammaSequence",
    "EmptyDomainError",
    "BesselBracketError",
    "bessel_j",
    "bessel_zeros",
    "interval_spectrum",
    "disk_spectrum",
    "weyl_constant",
    "weyl_model_spectrum",
    "fourier_grid_spectrum",
    "fourier_lattice",
    "laplace_spectrum",
    "gamma_sequence",
    "basis_gamma",
    "weyl_count_check",
    "spectrum_to_csv",
]


class EmptyDomainError(ValueError):
    """Raised when a spectrum with no modes is requested."""


class BesselBracketError(RuntimeError):
    """Raised when the zero scan fails to bracket the requested zeros."""


class DomainKind(str, enum.Enum):
    INTERVAL = "Interval01"
    DISK = "UnitDisk"
    WEYL = "WeylModel"
    FOURIER = "FourierGrid"


@dataclass(frozen=True)
class DomainSpec:
    """Which domain is modeled.

    ``dim`` and ``volume`` are only meaningful for ``WeylModel``;
    ``frequencies`` (a tuple of integer or real n-tuples) only for
    ``FourierGrid``.  Use the ``interval``/``disk``/``weyl``/``fourier``
    constructors rather than the raw initializer.
    """

    kind: DomainKind
    dim: int | None = None
    volume: float | None = None
    frequencies: tuple[tuple[float, ...], ...] | None = None

    def __post_init__(self):
        kind = DomainKind(self.kind)
        object.__setattr__(self, "kind", kind)
        if kind in (DomainKind.INTERVAL, DomainKind.DISK):
            if self.dim is not None or self.volume is not None or self.frequencies is not None:
                raise ValueError(f"{kind.value} takes no parameters")
        elif kind is DomainKind.WEYL:
            if self.dim is None or int(self.dim) != self.dim or self.dim < 1:
                raise ValueError("WeylModel needs an integer dimension n >= 1")
            if self.volume is None or not self.volume > 0 or not math.isfinite(self.volume):
                raise ValueError("WeylModel needs a volume |Omega| > 0")
            object.__setattr__(self, "dim", int(self.dim))
            object.__setattr__(self, "volume", float(self.volume))
            if self.frequencies is not None:
                raise ValueError("WeylModel takes no frequency set")
        else:
            if self.dim is None or self.dim < 1:
                raise ValueError("FourierGrid needs a dimension n >= 1")
            if not self.frequencies:
                raise ValueError("FourierGrid needs a nonempty frequency set")
            freqs = tuple(tuple(float(c) for c in xi) for xi in self.frequencies)
            if any(len(xi) != self.dim for xi in freqs):
                raise ValueError("every frequency must have length n")
            if len(set(freqs)) != len(freqs):
                raise ValueError("frequency set has repeated entries")
            fs = set(freqs)
            if any(tuple(-c + 0.0 for c in xi) not in fs for xi in freqs):
                raise ValueError("frequency set must be closed under xi -> -xi")
            if self.volume is not None:
                raise ValueError("FourierGrid takes no volume")
            object.__setattr__(self, "frequencies", freqs)

    @classmethod
    def interval(cls) -> "DomainSpec":
        return cls(DomainKind.INTERVAL)

    @classmethod
    def disk(cls) -> "DomainSpec":
        return cls(DomainKind.DISK)

    @classmethod
    def weyl(cls, n: int, volume: float) -> "DomainSpec":
        return cls(DomainKind.WEYL, dim=n, volume=volume)

    @classmethod
    def fourier(cls, frequencies: Sequence[Sequence[float]]) -> "DomainSpec":
        freqs = tuple(tuple(xi) if np.ndim(xi) else (xi,) for xi in frequencies)
        return cls(DomainKind.FOURIER, dim=len(freqs[0]) if freqs else None, frequencies=freqs)

    def to_dict(self) -> dict:
        out: dict = {"kind": self.kind.value}
        if self.kind is DomainKind.WEYL:
            out.update(n=self.dim, volume=self.volume)
        elif self.kind is DomainKind.FOURIER:
            out.update(n=self.dim, frequencies=[list(xi) for xi in self.frequencies])
        return out

    @classmethod
    def from_dict(cls, d: dict) -> "DomainSpec":
        kind = DomainKind(d["kind"])
        if kind is DomainKind.WEYL:
            return cls.weyl(d["n"], d["volume"])
        if kind is DomainKind.FOURIER:
            return cls.fourier(d["frequencies"])
        return cls(kind)


@dataclass(frozen=True, eq=False)
class LaplaceSpectrum:
    mu: np.ndarray
    labels: tuple[Hashable, ...]
    domain: DomainSpec

    def __post_init__(self):
        mu = np.array(self.mu, dtype=float)
        mu.setflags(write=False)
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "labels", tuple(self.labels))
        if mu.ndim != 1 or mu.size == 0:
            raise EmptyDomainError("spectrum must be a nonempty 1-d sequence")
        if len(self.labels) != mu.size:
            raise ValueError("one label per eigenvalue")
        if np.any(np.diff(mu) < 0):
            raise ValueError("spectrum must be nondecreasing")
        floor = 0.0 if self.domain.kind is DomainKind.FOURIER else None
        if floor is None and not np.all(mu > 0):
            raise ValueError("Dirichlet eigenvalues must be positive")
        if floor is not None and not np.all(mu >= 0):
            raise ValueError("|xi|^2 must be nonnegative")

    def __len__(self) -> int:
        return self.mu.size


@dataclass(frozen=True, eq=False)
class GammaSequence:
    """gamma_k = sqrt(1 + mu_k); the diagonal of the similarity L2 <-> H1_0."""

    gamma: np.ndarray
    labels: tuple[Hashable, ...] = field(default=())
    domain: DomainSpec | None = None

    def __post_init__(self):
        g = np.array(self.gamma, dtype=float)
        g.setflags(write=False)
        object.__setattr__(self, "gamma", g)
        if g.ndim != 1 or g.size == 0:
            raise EmptyDomainError("gamma sequence must be nonempty")
        if not np.all(g >= 1.0):
            raise ValueError("gamma_k must be >= 1")
        if np.any(np.diff(g) < 0):
            raise ValueError("gamma must be nondecreasing")
        if self.labels and len(self.labels) != g.size:
            raise ValueError("one label per gamma entry")
        object.__setattr__(self, "labels", tuple(self.labels))

    def __len__(self) -> int:
        return self.gamma.size

    def __eq__(self, other) -> bool:
        if not isinstance(other, GammaSequence):
            return NotImplemented
        return self.domain == other.domain and np.array_equal(self.gamma, other.gamma)

    __hash__ = None  # type: ignore[assignment]

    @property
    def mu(self) -> np.ndarray:
        return self.gamma**2 - 1.0

    @property
    def a_eigenvalues(self) -> np.ndarray:
        """Eigenvalues 1/(1 + mu_k) of the solution operator."""
        return 1.0 / self.gamma**2


# --------------------------------------------------------------------------
# Bessel functions of the first kind, integer order


def _bessel_series(m: np.ndarray, x: np.ndarray, terms: int = 40) -> np.ndarray:
    h = 0.5 * x
    lg = np.array([math.lgamma(mi + 1.0) for mi in m.ravel()]).reshape(m.shape)
    with np.errstate(divide="ignore"):
        lead = np.where(x > 0, np.exp(m * np.log(np.where(x > 0, h, 1.0)) - lg), (m == 0) * 1.0)
    term = np.ones_like(x)
    total = np.ones_like(x)
    h2 = h * h
    for p in range(1, terms):
        term = -term * h2 / (p * (m + p))
        total = total + term
    return lead * total


def _bessel_miller(m: np.ndarray, x: np.ndarray) -> np.ndarray:
    # backward recurrence normalized by J_0 + 2 sum J_2k = 1; stable for x > 0.
    # Each entry starts at its own order, so a value never depends on the
    # other entries of the batch.
    top = np.maximum(m, x)
    start = 2 * ((top.astype(int) + 30 + np.sqrt(60.0 * top).astype(int)) // 2)
    bjp = np.zeros_like(x)
    bj = np.zeros_like(x)
    norm = np.zeros_like(x)
    out = np.zeros_like(x)
    shrink = 2.0**-664
    for k in range(int(np.max(start)), 0, -1):
        bj = np.where(start == k, 1e-300, bj)
        bjm = (2.0 * k / x) * bj - bjp
        bjp, bj = bj, bjm
        big = np.abs(bj) > 1e200
        if np.any(big):
            s = np.where(big, shrink, 1.0)
            bj, bjp, norm, out = bj * s, bjp * s, norm * s, out * s
        if k % 2 == 1:
            norm = norm + 2.0 * bj
        out = np.where(m == k - 1, bj, out)
    norm = norm - bj  # the j=0 term was counted twice
    return out / norm


def bessel_j(m, x) -> np.ndarray:
    """Bessel function J_m(x) of integer order m >= 0 (broadcast over m, x).

    The power series is used for small arguments and Miller's backward
    recurrence elsewhere.  Negative x is handled through the parity of J_m.
    """
    m_arr, x_arr = np.broadcast_arrays(np.asarray(m), np.asarray(x, dtype=float))
    if np.any(m_arr < 0) or np.any(m_arr != np.floor(m_arr)):
        raise ValueError("order must be a nonnegative integer")
    m_arr = m_arr.astype(int)
    ax = np.abs(x_arr)
    out = np.empty(ax.shape)
    small = ax <= 4.0
    if np.any(small):
        out[small] = _bessel_series(m_arr[small].astype(float), ax[small])
    if np.any(~small):
        out[~small] = _bessel_miller(m_arr[~small], ax[~small])
    sign = np.where((x_arr < 0) & (m_arr % 2 == 1), -1.0, 1.0)
    res = out * sign
    return res if res.ndim else float(res)


def _zeros_many(orders: Sequence[int], count: int, tol: float = 1e-13) -> np.ndarray:
    """First ``count`` positive zeros of J_m for each m in ``orders``."""
    orders = np.asarray(orders, dtype=int)
    step = math.pi / 8.0
    result = np.full((orders.size, count), np.nan)
    lo_list, hi_list, row_list = [], [], []
    for row, m in enumerate(orders):
        # the first zero of J_m exceeds m; upper end follows McMahon growth
        start = max(float(m), step) + 1e-3
        stop = (count + 0.5 * m + 2.0) * math.pi + 3.0 * m ** (1.0 / 3.0) + 10.0
        found = 0
        for _ in range(4):
            grid = np.arange(start, stop + step, step)
            vals = bessel_j(m, grid)
            change = np.nonzero(np.sign(vals[:-1]) * np.sign(vals[1:]) <= 0)[0]
            change = change[vals[change + 1] != 0] if change.size else change
            if change.size >= count:
                sel = change[:count]
                lo_list.append(grid[sel])
                hi_list.append(grid[sel + 1])
                row_list.append(np.full(count, row))
                found = count
                break
            stop = start + 2.0 * (stop - start)
        if found < count:
            raise BesselBracketError(f"could not bracket {count} zeros of J_{m}")
    lo = np.concatenate(lo_list)
    hi = np.concatenate(hi_list)
    rows = np.concatenate(row_list)
    ms = orders[rows]
    flo = bessel_j(ms, lo)
    active = hi - lo > tol * np.maximum(1.0, hi)
    while np.any(active):
        mid = 0.5 * (lo + hi)
        fm = bessel_j(ms, mid)
        left = active & (np.sign(fm) == np.sign(flo))
        right = active & ~left
        lo = np.where(left, mid, lo)
        flo = np.where(left, fm, flo)
        hi = np.where(right, mid, hi)
        active = hi - lo > tol * np.maximum(1.0, hi)
    zeros = 0.5 * (lo + hi)
    # two safeguarded Newton steps with J_m' = J_{m-1} - (m/x) J_m, J_{-1} = -J_1
    for _ in range(2):
        f = bessel_j(ms, zeros)
        prev = np.where(ms > 0, bessel_j(np.maximum(ms - 1, 0), zeros), -bessel_j(1, zeros))
        step_n = f / (prev - ms / zeros * f)
        cand = zeros - step_n
        zeros = np.where((cand >= lo) & (cand <= hi), cand, zeros)
    result[rows, np.tile(np.arange(count), orders.size)] = zeros
    return result


@functools.lru_cache(maxsize=256)
def _zeros_cached(m: int, count: int) -> tuple[float, ...]:
    return tuple(_zeros_many([m], count)[0])


def bessel_zeros(m: int, count: int) -> list[float]:
    """First ``count`` positive zeros z_{m,1} < z_{m,2} < ... of J_m."""
    if int(m) != m or m < 0:
        raise ValueError("m must be a nonnegative integer")
    if int(count) != count or count < 1:
        raise ValueError("count must be a positive integer")
    return list(_zeros_cached(int(m), int(count)))


# --------------------------------------------------------------------------
# spectra


def _check_count(N) -> int:
    if int(N) != N or N < 1:
        raise EmptyDomainError(f"need at least one mode, got N={N!r}")
    return int(N)


def interval_spectrum(N: int) -> LaplaceSpectrum:
    """mu_k = k^2 pi^2, k = 1..N, on (0, 1)."""
    N = _check_count(N)
    k = np.arange(1, N + 1)
    return LaplaceSpectrum((k * math.pi) ** 2, tuple(int(i) for i in k), DomainSpec.interval())


def _disk_candidates(M: int, J: int):
    z = _zeros_many(range(M + 1), J)
    vals, labels = [], []
    for m in range(M + 1):
        for j in range(J):
            zz = z[m, j] ** 2
            vals.append(zz)
            labels.append((m, j + 1))
            if m:
                vals.append(zz)
                labels.append((-m, j + 1))
    return np.array(vals), labels, z


@functools.lru_cache(maxsize=32)
def _disk_cached(count: int):
    M = J = int(math.ceil(2.0 * math.sqrt(count))) + 8
    while True:
        vals, labels, z = _disk_candidates(M, J)
        order = sorted(range(len(vals)), key=lambda i: (vals[i], abs(labels[i][0]), labels[i][1], labels[i][0] < 0))
        chosen = order[:count]
        # smallest value outside the window: z_{M+1,1} or z_{0,J+1}
        outside = min(bessel_zeros(M + 1, 1)[0], bessel_zeros(0, J + 1)[-1]) ** 2
        if vals[chosen[-1]] < outside:
            return tuple(vals[i] for i in chosen), tuple(labels[i] for i in chosen)
        M += 8
        J += 8


def disk_spectrum(count: int) -> LaplaceSpectrum:
    """The ``count`` smallest z_{m,j}^2 on the unit disk, labels (m, j).

    Degenerate pairs (m, j), (-m, j) are listed with m before -m.
    """
    count = _check_count(count)
    vals, labels = _disk_cached(count)
    return LaplaceSpectrum(np.array(vals), labels, DomainSpec.disk())


def weyl_constant(n: int, volume: float) -> float:
    """4 pi (Gamma(n/2 + 1) / |Omega|)^(2/n)."""
    return 4.0 * math.pi * (math.gamma(n / 2.0 + 1.0) / volume) ** (2.0 / n)


def weyl_model_spectrum(n: int, volume: float, N: int) -> LaplaceSpectrum:
    """Model spectrum mu_k = weyl_constant(n, volume) * k^(2/n), taken as exact."""
    dom = DomainSpec.weyl(n, volume)
    N = _check_count(N)
    k = np.arange(1, N + 1, dtype=float)
    return LaplaceSpectrum(weyl_constant(n, volume) * k ** (2.0 / n), tuple(range(1, N + 1)), dom)


def fourier_lattice(n: int, kmax: int) -> DomainSpec:
    """Integer frequencies {-kmax..kmax}^n as a FourierGrid domain."""
    axis = range(-kmax, kmax + 1)
    pts = np.array(np.meshgrid(*([axis] * n), indexing="ij")).reshape(n, -1).T
    return DomainSpec.fourier([tuple(int(c) for c in p) for p in pts])


def fourier_grid_spectrum(spec: DomainSpec) -> LaplaceSpectrum:
    """mu = |xi|^2 on the frequency set, ascending with lexicographic ties."""
    if spec.kind is not DomainKind.FOURIER:
        raise ValueError("expected a FourierGrid domain")
    pairs = sorted((sum(c * c for c in xi), xi) for xi in spec.frequencies)
    labels = tuple(tuple(int(c) if float(c).is_integer() else c for c in xi) for _, xi in pairs)
    return LaplaceSpectrum(np.array([p[0] for p in pairs]), labels, spec)


def laplace_spectrum(domain: DomainSpec, N: int) -> LaplaceSpectrum:
    """First N Laplace eigenvalues of ``domain``."""
    N = _check_count(N)
    kind = domain.kind
    if kind is DomainKind.INTERVAL:
        return interval_spectrum(N)
    if kind is DomainKind.DISK:
        return disk_spectrum(N)
    if kind is DomainKind.WEYL:
        return weyl_model_spectrum(domain.dim, domain.volume, N)
    full = fourier_grid_spectrum(domain)
    if N > len(full):
        raise ValueError(f"FourierGrid has only {len(full)} frequencies, asked for {N}")
    return LaplaceSpectrum(full.mu[:N], full.labels[:N], domain)


def gamma_sequence(spectrum: LaplaceSpectrum) -> GammaSequence:
    return GammaSequence(np.sqrt(1.0 + spectrum.mu), spectrum.labels, spectrum.domain)


@functools.lru_cache(maxsize=128)
def basis_gamma(domain: DomainSpec, N: int) -> GammaSequence:
    """Cached gamma sequence of the first N modes of ``domain``."""
    return gamma_sequence(laplace_spectrum(domain, N))


def weyl_count_check(spectrum: LaplaceSpectrum, n: int, volume: float, fraction: float = 0.5):
    """Ratios mu_k / (weyl_constant * k^(2/n)) over the top ``fraction`` of modes.

    Returns ``(k, ratios, max_deviation)``.  The lowest ``1 - fraction`` of the
    indices is discarded: the law is asymptotic, and low modes carry the
    boundary correction.
    """
    K = len(spectrum)
    if K < 50:
        raise ValueError(f"need at least 50 eigenvalues, got {K}")
    if not 0.0 < fraction < 1.0:
        raise ValueError("fraction must lie in (0, 1)")
    k = np.arange(1, K + 1)
    ratios = spectrum.mu / (weyl_constant(n, volume) * k ** (2.0 / n))
    first = int(math.floor((1.0 - fraction) * K))
    keep = slice(first, K)
    return k[keep], ratios[keep], float(np.max(np.abs(ratios[keep] - 1.0)))


def _label_str(label) -> str:
    if isinstance(label, tuple):
        return "(" + ",".join(str(c) for c in label) + ")"
    return str(label)


def spectrum_to_csv(spectrum: LaplaceSpectrum, stream: io.TextIOBase | None = None) -> str:
    """CSV with columns index, label, mu, gamma (17 significant digits)."""
    buf = stream if stream is not None else io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["index", "label", "mu", "gamma"])
    gam = np.sqrt(1.0 + spectrum.mu)
    for i, (lab, mu, g) in enumerate(zip(spectrum.labels, spectrum.mu, gam), start=1):
        w.writerow([i, _label_str(lab), format(mu, ".17g"), format(g, ".17g")])
    return buf.getvalue() if stream is None else ""
