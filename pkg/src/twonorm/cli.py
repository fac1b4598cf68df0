"""``lab``: named, reproducible experiments with CSV or JSON output.

Usage::

    lab <experiment> [--domain interval|disk|weyl:n:vol|fourier[:n[:kmax]]]
        [--N 128] [--p inf] [--seed 42] [--out DIR] [--format csv|json]
        [--config FILE] [experiment options]

Settings come from built-in defaults, then the JSON config file, then the
command line.  The exit status is 1 when the experiment's verdict is false.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import scipy.linalg

from . import constructors as cons
from .core import (
    HVector,
    TwoNormOperator,
    group_defect,
    h1_norm,
    in_group,
    in_lie_algebra,
    is_symmetrizable,
    l2_representation,
    solution_operator,
)
from .domains import DomainKind, DomainSpec, basis_gamma, fourier_lattice, laplace_spectrum, weyl_count_check
from .geodesics import lalesco_check, matrix_exp, minimality_experiment
from .report import ExperimentReport, atomic_write
from .spectra import (
    DEFAULT_LADDER,
    Space,
    essential_spectrum_ladder,
    match_spectra,
    pseudospectrum_grid,
    spectrum,
    tridiagonal_eigenvalues,
)

__all__ = ["LabConfig", "parse_domain", "parse_p", "build_parser", "main", "EXPERIMENTS"]

U64_MAX = 2**64 - 1
DEFAULTS = {"domain": "interval", "N": 128, "p": "inf", "seed": 42, "out": None, "format": "csv", "tol": None}


def parse_domain(text: str) -> DomainSpec:
    """``interval``, ``disk``, ``weyl:n:vol`` or ``fourier[:n[:kmax]]``."""
    parts = str(text).strip().split(":")
    head = parts[0].lower()
    if head == "interval" and len(parts) == 1:
        return DomainSpec.interval()
    if head == "disk" and len(parts) == 1:
        return DomainSpec.disk()
    if head == "weyl" and len(parts) == 3:
        return DomainSpec.weyl(int(parts[1]), float(parts[2]))
    if head == "fourier" and len(parts) <= 3:
        n = int(parts[1]) if len(parts) > 1 else 1
        kmax = int(parts[2]) if len(parts) > 2 else 8
        return fourier_lattice(n, kmax)
    raise ValueError(f"unknown domain {text!r}")


def parse_p(text) -> float:
    if isinstance(text, (int, float)):
        p = float(text)
    elif str(text).strip().lower() in ("inf", "infinity"):
        p = math.inf
    else:
        p = float(text)
    if not p >= 1:
        raise ValueError(f"p must be >= 1, got {text!r}")
    return p


def _p_label(p: float):
    return "inf" if math.isinf(p) else p


@dataclass(frozen=True)
class LabConfig:
    domain: DomainSpec = field(default_factory=DomainSpec.interval)
    N: int = 128
    p: float = math.inf
    seed: int = 42
    tolerances: dict = field(default_factory=dict)
    out: str | None = None
    format: str = "csv"

    def __post_init__(self):
        if int(self.N) != self.N or not 2 <= self.N <= 4096:
            raise ValueError(f"N must be an integer in [2, 4096], got {self.N}")
        if int(self.seed) != self.seed or not 0 <= self.seed <= U64_MAX:
            raise ValueError("seed must be an unsigned 64-bit integer")
        if self.format not in ("csv", "json"):
            raise ValueError("format must be csv or json")
        parse_p(self.p)

    def tol(self, key: str, default=None):
        return self.tolerances.get(key, default)


def _ints(text: str) -> list[int]:
    return [int(x) for x in str(text).split(",") if x.strip()]


def _floats(text: str) -> list[float]:
    return [float(x) for x in str(text).split(",") if x.strip()]


def _range(text: str) -> np.ndarray:
    a, b, k = str(text).split(":")
    return np.linspace(float(a), float(b), int(k))


# --------------------------------------------------------------------------
# experiments


def run_norm_growth(cfg: LabConfig, k_values=(2, 5, 10, 50, 100)) -> ExperimentReport:
    """|f|_1 |Af|_1 for f = sin(pi x) + sin(k pi x) against the closed form."""
    rows, ok, prev = [], True, -math.inf
    for k in k_values:
        if k < 2:
            raise ValueError("k must be >= 2")
        dom = DomainSpec.interval()
        N = max(cfg.N, k)
        g = basis_gamma(dom, N)
        # sin(j pi x) = e_j / sqrt(2) and e_j = gamma_j s_j
        c = np.zeros(N)
        c[0] = g.gamma[0] / math.sqrt(2.0)
        c[k - 1] = g.gamma[k - 1] / math.sqrt(2.0)
        f = HVector(c, g)
        Af = solution_operator(dom, N) @ f
        product = f.norm_h1() ** 2 * Af.norm_h1() ** 2
        pi2 = math.pi**2
        closed = 0.25 * (2.0 + pi2 * (k * k + 1)) * (1.0 / (pi2 + 1.0) + 1.0 / (k * k * pi2 + 1.0))
        E = cons.rank_one_projection(f)
        via_proj = h1_norm(E) ** 2
        err = abs(product - closed)
        ok = ok and abs(f.norm_l2() - 1.0) <= 1e-12 and err <= 1e-10 * max(1.0, closed)
        ok = ok and abs(via_proj - closed) <= 1e-9 * closed and product > prev
        prev = product
        rows.append(
            {
                "k": int(k),
                "norm_l2": f.norm_l2(),
                "product": product,
                "closed_form": closed,
                "abs_error": err,
                "projection_h1_norm_sq": via_proj,
                "norm_lower_bound": math.sqrt(closed),
            }
        )
    return ExperimentReport("norm-growth", {"k_values": list(k_values)}, rows, bool(ok))


def h1_box_quantity(n: int, a: float, b: float) -> tuple[float, float]:
    """int_a^b cos^2(n x) dx by quadrature and in closed form."""
    x, w = cons.gauss_legendre_panels(a, b, max(16, 4 * n))
    quad = float(np.sum(w * np.cos(n * x) ** 2))
    closed = 0.5 * (b - a) + (math.sin(2 * n * b) - math.sin(2 * n * a)) / (4.0 * n)
    return quad, closed


def run_extension(cfg: LabConfig, n_values=(1, 2, 4, 8, 16, 32, 64), box=(0.25, 0.75), N=None, quad_order=None):
    """L2 deviation of M_theta_n from I against the H1 box quantity."""
    a, b = box
    if not 0 < a < b < 1:
        raise ValueError("box must satisfy 0 < a < b < 1")
    N = cfg.N if N is None else N
    rows = []
    for n in n_values:
        M = cons.multiplication_operator(cons.theta_n(n), DomainSpec.interval(), N, quad_order)
        dev = float(np.linalg.norm(l2_representation(M) - np.eye(N), 2))
        bound = 2.0 * (1.0 - math.cos(1.0 / n))
        quad, closed = h1_box_quantity(n, a, b)
        rows.append(
            {
                "n": int(n),
                "l2_deviation": dev,
                "l2_deviation_sq": dev * dev,
                "sup_bound": bound,
                "h1_quantity": quad,
                "h1_quantity_closed": closed,
                "h1_limit": 0.5 * (b - a),
            }
        )
    last = rows[-1]
    ok = last["l2_deviation"] < 0.1 and abs(last["h1_quantity"] - last["h1_limit"]) <= 0.1 * last["h1_limit"]
    params = {"n_values": list(n_values), "box": [a, b], "N": N, "quad_order": quad_order}
    return ExperimentReport("extension", params, rows, bool(ok))


def toeplitz_reality(n: int, N: int) -> tuple[float, float, float]:
    """Evidence that the truncated model has a real spectrum.

    Returns the symmetry defect of the diagonally rescaled matrix, the
    largest imaginary part a general eigensolver finds on that rescaled
    matrix, and the (meaningless) largest imaginary part it finds on the
    unscaled one.
    """
    T = cons.doubling_toeplitz_model(n, N)
    c = 2.0 ** (1.0 / n)
    # T_{k+1,k} = c, T_{k,k+1} = 1/c; D T D^-1 with D = diag(c^-k) is symmetric
    d = c ** (-np.arange(N, dtype=float))
    S = np.diag(np.diag(T, -1) * d[1:] / d[:-1], -1) + np.diag(np.diag(T, 1) * d[:-1] / d[1:], 1)
    sym = float(np.max(np.abs(S - S.T)))
    im_sym = float(np.max(np.abs(scipy.linalg.eigvals(S).imag)))
    im_raw = float(np.max(np.abs(scipy.linalg.eigvals(T).imag)))
    return sym, im_sym, im_raw


def run_ellipse(cfg: LabConfig, n: int = 1, ladder=DEFAULT_LADDER) -> ExperimentReport:
    """Real truncated spectra against growing resolvents at ellipse points."""
    c = 2.0 ** (1.0 / n)
    top = 1j * (c - 1.0 / c)
    probes = [top, 0.5 * top, 10.0]
    rep = essential_spectrum_ladder("doubling_toeplitz_model", probes, ladder, n=n)
    rows, real_ok = [], True
    for N in ladder:
        sym, im_sym, im_raw = toeplitz_reality(n, N)
        eig = tridiagonal_eigenvalues(cons.doubling_toeplitz_model(n, N))
        real_ok = real_ok and sym <= 1e-12 and im_sym < 1e-8
        row = {
            "N": int(N),
            "max_imag": im_sym,
            "symmetry_defect": sym,
            "unscaled_solver_max_imag": im_raw,
            "spectral_radius": float(np.max(np.abs(eig))),
        }
        for lam, pts in rep.resolvent_profile.items():
            row[f"resolvent_{_label(lam)}"] = dict(pts)[N]
        rows.append(row)
    ok = real_ok and rep.flags[complex(top)] and not rep.flags[complex(10.0)]
    params = {"n": n, "ladder": list(ladder), "probes": [_label(z) for z in probes]}
    return ExperimentReport("ellipse", params, rows, bool(ok))


def _label(z: complex) -> str:
    z = complex(z)
    return f"{z.real:.6g}{z.imag:+.6g}i"


def run_geodesic(cfg: LabConfig, size: int = 12, variations: int = 50, scale: float = 1.0) -> ExperimentReport:
    """Minimality of t -> e^{tX} among endpoint-corrected variations."""
    X = cons.random_lie_element(size, cfg.domain, seed=cfg.seed, scale=scale)
    G = matrix_exp(X)
    rep = minimality_experiment(G, cfg.p, variations, seed=cfg.seed)
    rep.name = "geodesic"
    rep.params.update(size=size, scale=scale, domain=cfg.domain.kind.value)
    return rep


def run_lalesco(cfg: LabConfig, trials: int = 200, p_values=None) -> ExperimentReport:
    """||X||_{p,L2} <= ||X||_{p,H1} on seeded elements of the Schatten ideals."""
    ps = [cfg.p] if p_values is None else list(p_values)
    children = np.random.SeedSequence(cfg.seed).spawn(trials)
    rows, ok = [], True
    for i, child in enumerate(children):
        rng = np.random.default_rng(child)
        for p in ps:
            X = cons.random_lie_element(cfg.N, cfg.domain, p=None if math.isinf(p) else p, seed=rng)
            lhs, rhs, passed = lalesco_check(X, p)
            ok = ok and passed
            rows.append({"trial": i, "p": _p_label(p), "l2_norm": lhs, "h1_norm": rhs, "pass": passed})
    return ExperimentReport("lalesco", {"trials": trials, "p": [_p_label(p) for p in ps], "N": cfg.N}, rows, bool(ok))


def _membership_rows(name, op, predicate, tol):
    m = predicate(op, tol)
    return {"constructor": name, "N": op.N, "predicate": predicate.__name__, "defect": m.defect, "tol": m.tol, "ok": bool(m)}


def run_membership(cfg: LabConfig, constructor: str = "rank_one", t: float = 1.0, alpha: float = 1.0,
                   symbol: str = "plane_wave(1)", block: int = 16) -> ExperimentReport:
    """Membership defect of one constructor."""
    tol = cfg.tol("membership")
    dom, N = cfg.domain, cfg.N
    rng = np.random.default_rng(cfg.seed)
    params = {"constructor": constructor, "N": N, "domain": dom.kind.value}
    rows = []
    if constructor == "rank_one":
        g = basis_gamma(dom, N)
        z = rng.standard_normal(min(N, 4)) + 1j * rng.standard_normal(min(N, 4))
        a = np.zeros(N, complex)
        a[: z.size] = z / np.linalg.norm(z)
        G = cons.rank_one_exponential(HVector.from_l2_coeffs(a, g), t)
        rows.append(_membership_rows(constructor, G, in_group, 1e-10 if tol is None else tol))
        params["t"] = t
    elif constructor == "block":
        g = basis_gamma(dom, N)
        k = 2
        q, _ = np.linalg.qr(rng.standard_normal((N, k)) + 1j * rng.standard_normal((N, k)))
        frame = [HVector.from_l2_coeffs(q[:, j], g) for j in range(k)]
        u0, _ = np.linalg.qr(rng.standard_normal((k, k)) + 1j * rng.standard_normal((k, k)))
        rows.append(_membership_rows(constructor, cons.finite_block_unitary(frame, u0), in_group, tol))
    elif constructor == "multiplication":
        theta = cons.named_field(symbol)
        prev = math.inf
        ok = True
        for n in (32, 64, 128, 256):
            M = cons.multiplication_operator(theta, dom, n)
            d_block = group_defect(M, block=min(block, n))
            ok = ok and d_block < prev
            prev = d_block
            rows.append({"constructor": constructor, "N": n, "predicate": "in_group", "defect": group_defect(M),
                         "block_defect": d_block, "tol": math.nan, "ok": bool(ok)})
        params.update(symbol=symbol, block=block)
        return ExperimentReport("membership", params, rows, bool(ok))
    elif constructor == "reflection":
        rows.append(_membership_rows(constructor, cons.composition_reflection(N), in_group, tol))
    elif constructor == "rotation":
        rows.append(_membership_rows(constructor, cons.disk_rotation(alpha, N), in_group, tol))
        params["alpha"] = alpha
    elif constructor == "doubling":
        rows.append(_membership_rows(constructor, cons.doubling_shift_T(dom, N), is_symmetrizable, tol))
    elif constructor == "adjacent":
        rows.append(_membership_rows(constructor, cons.adjacent_shift_T(N, dom), is_symmetrizable, tol))
    elif constructor == "random":
        X = cons.random_lie_element(N, dom, seed=cfg.seed)
        rows.append(_membership_rows("random", X, in_lie_algebra, tol))
        rows.append(_membership_rows("exp(random)", matrix_exp(X), in_group, tol))
    else:
        raise ValueError(f"unknown constructor {constructor!r}")
    return ExperimentReport("membership", params, rows, all(r["ok"] for r in rows))


def run_weyl(cfg: LabConfig, modes: int = 400, fraction: float = 0.5) -> ExperimentReport:
    """Ratio of the computed spectrum to the Weyl law on the upper modes."""
    dom = cfg.domain
    spec = laplace_spectrum(dom, modes)
    if dom.kind is DomainKind.INTERVAL:
        n, vol = 1, 1.0
    elif dom.kind is DomainKind.DISK:
        n, vol = 2, math.pi
    elif dom.kind is DomainKind.WEYL:
        n, vol = dom.dim, dom.volume
    else:
        raise ValueError("the Weyl check needs a bounded domain")
    k, ratios, dev = weyl_count_check(spec, n, vol, fraction)
    rows = [{"k": int(kk), "mu": float(spec.mu[kk - 1]), "ratio": float(r)} for kk, r in zip(k, ratios)]
    params = {"domain": dom.kind.value, "modes": modes, "fraction": fraction, "max_deviation": dev}
    return ExperimentReport("weyl", params, rows, bool(dev <= 0.1))


_SPECTRUM_OPS: dict[str, Callable[[LabConfig], TwoNormOperator]] = {
    "solution": lambda c: solution_operator(c.domain, c.N),
    "doubling": lambda c: cons.doubling_shift_T(c.domain, c.N),
    "adjacent": lambda c: cons.adjacent_shift_T(c.N, c.domain),
    "random": lambda c: cons.random_lie_element(c.N, c.domain, seed=c.seed),
}


def run_spectrum(cfg: LabConfig, operator: str = "solution") -> ExperimentReport:
    """Spectra in both bases and their multiset distance."""
    if operator not in _SPECTRUM_OPS:
        raise ValueError(f"unknown operator {operator!r}; choose from {sorted(_SPECTRUM_OPS)}")
    X = _SPECTRUM_OPS[operator](cfg)
    h1 = spectrum(X, Space.H1).eigenvalues
    l2 = spectrum(X, Space.L2).eigenvalues
    dist = match_spectra(h1, l2)
    scale = max(1.0, float(np.max(np.abs(l2))))
    rows = [{"index": i + 1, "re": float(z.real), "im": float(z.imag)} for i, z in enumerate(l2)]
    params = {"operator": operator, "N": cfg.N, "domain": cfg.domain.kind.value, "h1_l2_distance": dist}
    return ExperimentReport("spectrum", params, rows, bool(dist <= 1e-8 * scale))


def run_pseudospectrum(cfg: LabConfig, n: int = 1, re="-3:3:41", im="-2:2:41"):
    """sigma_min grid of the truncated doubling model; emits re, im, sigma_min."""
    T = cons.doubling_toeplitz_model(n, cfg.N)
    rep = pseudospectrum_grid(T, _range(re), _range(im))
    rr, ii, sig = rep.grid
    rows = [{"re": float(x), "im": float(y), "sigma_min": float(sig[a, b])}
            for a, y in enumerate(ii) for b, x in enumerate(rr)]
    return ExperimentReport("pseudospectrum", {"n": n, "N": cfg.N, "re": re, "im": im}, rows, None)


EXPERIMENTS = {
    "norm-growth": run_norm_growth,
    "extension": run_extension,
    "ellipse": run_ellipse,
    "geodesic": run_geodesic,
    "lalesco": run_lalesco,
    "membership": run_membership,
    "weyl": run_weyl,
    "spectrum": run_spectrum,
    "pseudospectrum": run_pseudospectrum,
}


# --------------------------------------------------------------------------
# command line


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="lab", description="Two-norm operator group experiments.")
    ap.add_argument("experiment", choices=sorted(EXPERIMENTS))
    ap.add_argument("--domain", help="interval | disk | weyl:n:vol | fourier[:n[:kmax]] (default interval)")
    ap.add_argument("--N", type=int, help="truncation size (default 128)")
    ap.add_argument("--p", help="Schatten index: 1, 2, inf or a float >= 1 (default inf)")
    ap.add_argument("--seed", type=int, help="unsigned 64-bit seed (default 42)")
    ap.add_argument("--out", help="directory for the output file (default: stdout)")
    ap.add_argument("--format", choices=["csv", "json"], help="output format (default csv)")
    ap.add_argument("--config", help="JSON file with any of the flag names as keys")
    ap.add_argument("--tol", type=float, help="membership tolerance override")
    g = ap.add_argument_group("experiment options")
    g.add_argument("--k-values", help="norm-growth: comma-separated k (default 2,5,10,50,100)")
    g.add_argument("--n-values", help="extension: comma-separated n (default 1,2,4,8,16,32,64)")
    g.add_argument("--box", help="extension: a,b with 0 < a < b < 1 (default 0.25,0.75)")
    g.add_argument("--quad-order", type=int, help="extension: quadrature panels")
    g.add_argument("--n", type=int, help="ellipse/pseudospectrum: Toeplitz root index (default 1)")
    g.add_argument("--ladder", help="ellipse: comma-separated sizes (default 32,64,128,256,512)")
    g.add_argument("--size", type=int, help="geodesic: matrix size (default 12)")
    g.add_argument("--variations", type=int, help="geodesic: number of variations (default 50)")
    g.add_argument("--scale", type=float, help="geodesic: L2 norm of the generator (default 1)")
    g.add_argument("--trials", type=int, help="lalesco: number of seeded draws (default 200)")
    g.add_argument("--p-values", help="lalesco: comma-separated p list (default: --p)")
    g.add_argument("--constructor", help="membership: rank_one|block|multiplication|reflection|rotation|doubling|adjacent|random")
    g.add_argument("--t", type=float, help="membership rank_one: phase (default 1)")
    g.add_argument("--alpha", type=float, help="membership rotation: angle (default 1)")
    g.add_argument("--symbol", help="membership multiplication: one|plane_wave(k)|theta_n(n)|custom(path)")
    g.add_argument("--modes", type=int, help="weyl: number of eigenvalues (default 400)")
    g.add_argument("--operator", help="spectrum: solution|doubling|adjacent|random")
    g.add_argument("--re", help="pseudospectrum: a:b:count (default -3:3:41)")
    g.add_argument("--im", help="pseudospectrum: a:b:count (default -2:2:41)")
    return ap


_EXPERIMENT_KEYS = {
    "norm-growth": {"k_values": ("k_values", _ints)},
    "extension": {"n_values": ("n_values", _ints), "box": ("box", lambda s: tuple(_floats(s))),
                  "quad_order": ("quad_order", int)},
    "ellipse": {"n": ("n", int), "ladder": ("ladder", _ints)},
    "geodesic": {"size": ("size", int), "variations": ("variations", int), "scale": ("scale", float)},
    "lalesco": {"trials": ("trials", int), "p_values": ("p_values", lambda s: [parse_p(x) for x in str(s).split(",")])},
    "membership": {"constructor": ("constructor", str), "t": ("t", float), "alpha": ("alpha", float),
                   "symbol": ("symbol", str)},
    "weyl": {"modes": ("modes", int)},
    "spectrum": {"operator": ("operator", str)},
    "pseudospectrum": {"n": ("n", int), "re": ("re", str), "im": ("im", str)},
}


def _merge(args: argparse.Namespace) -> dict:
    settings = dict(DEFAULTS)
    if args.config:
        with open(args.config) as fh:
            conf = json.load(fh)
        if not isinstance(conf, dict):
            raise ValueError("config file must hold a JSON object")
        settings.update({k.replace("-", "_"): v for k, v in conf.items()})
    for k, v in vars(args).items():
        if v is not None and k not in ("experiment", "config"):
            settings[k] = v
    return settings


def config_from_settings(settings: dict) -> LabConfig:
    tol = settings.get("tol")
    return LabConfig(
        domain=parse_domain(settings["domain"]),
        N=int(settings["N"]),
        p=parse_p(settings["p"]),
        seed=int(settings["seed"]),
        tolerances={} if tol is None else {"membership": float(tol)},
        out=settings.get("out"),
        format=settings["format"],
    )


def run(experiment: str, settings: dict) -> ExperimentReport:
    cfg = config_from_settings(settings)
    kw = {}
    for key, (name, conv) in _EXPERIMENT_KEYS[experiment].items():
        if settings.get(key) is not None:
            kw[name] = conv(settings[key])
    rep = EXPERIMENTS[experiment](cfg, **kw)
    rep.params.setdefault("seed", cfg.seed)
    rep.params.setdefault("p", _p_label(cfg.p))
    return rep


def main(argv: list[str] | None = None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        settings = _merge(args)
        cfg = config_from_settings(settings)
        rep = run(args.experiment, settings)
    except (ValueError, OSError, json.JSONDecodeError) as exc:
        ap.print_usage(sys.stderr)
        print(f"lab: error: {exc}", file=sys.stderr)
        return 2
    if cfg.out:
        path = os.path.join(cfg.out, f"{rep.name}.{cfg.format}")
        rep.artifacts.append(path)
        atomic_write(path, rep.to_csv() if cfg.format == "csv" else rep.to_json())
        verdict = "n/a" if rep.passed is None else ("pass" if rep.passed else "FAIL")
        print(f"{rep.name}: {verdict} -> {path}")
    else:
        sys.stdout.write(rep.to_csv() if cfg.format == "csv" else rep.to_json())
    return 1 if rep.passed is False else 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
