import io
import csv
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import special

from twonorm.domains import (
    BesselBracketError,
    DomainKind,
    DomainSpec,
    EmptyDomainError,
    GammaSequence,
    basis_gamma,
    bessel_j,
    bessel_zeros,
    disk_spectrum,
    fourier_grid_spectrum,
    fourier_lattice,
    gamma_sequence,
    interval_spectrum,
    laplace_spectrum,
    spectrum_to_csv,
    weyl_constant,
    weyl_count_check,
    weyl_model_spectrum,
)

PI2 = math.pi**2


# ---------------------------------------------------------------- DomainSpec


def test_domain_constructors_and_kinds():
    assert DomainSpec.interval().kind is DomainKind.INTERVAL
    assert DomainSpec.disk().kind.value == "UnitDisk"
    w = DomainSpec.weyl(3, 2.5)
    assert (w.dim, w.volume) == (3, 2.5)


@pytest.mark.parametrize(
    "kwargs",
    [
        dict(kind="Interval01", dim=1),
        dict(kind="UnitDisk", volume=1.0),
        dict(kind="WeylModel", dim=0, volume=1.0),
        dict(kind="WeylModel", dim=2, volume=-1.0),
        dict(kind="WeylModel", dim=2),
        dict(kind="FourierGrid", dim=1, frequencies=((1.0,),)),
        dict(kind="FourierGrid", dim=1, frequencies=()),
    ],
)
def test_domain_invariants_rejected(kwargs):
    with pytest.raises(ValueError):
        DomainSpec(**kwargs)


def test_domain_dict_round_trip():
    for d in (DomainSpec.interval(), DomainSpec.disk(), DomainSpec.weyl(2, math.pi), fourier_lattice(2, 1)):
        assert DomainSpec.from_dict(d.to_dict()) == d


# ---------------------------------------------------------------- interval


def test_interval_spectrum_closed_form():
    s = interval_spectrum(3)
    np.testing.assert_allclose(s.mu, [PI2, 4 * PI2, 9 * PI2], rtol=1e-15)
    assert s.labels == (1, 2, 3)
    g = gamma_sequence(interval_spectrum(1))
    assert g.gamma[0] == pytest.approx(math.sqrt(PI2 + 1.0), rel=1e-15)
    np.testing.assert_allclose(
        basis_gamma(DomainSpec.interval(), 2).a_eigenvalues, [1 / (PI2 + 1), 1 / (4 * PI2 + 1)], rtol=1e-15
    )


def test_empty_domain_rejected():
    with pytest.raises(EmptyDomainError):
        interval_spectrum(0)
    with pytest.raises(EmptyDomainError):
        disk_spectrum(0)


@given(st.integers(1, 300))
def test_interval_gamma_machine_precision(N):
    g = basis_gamma(DomainSpec.interval(), N)
    k = np.arange(1, N + 1)
    np.testing.assert_allclose(g.gamma, np.sqrt(k**2 * PI2 + 1), rtol=1e-15)
    np.testing.assert_allclose(g.gamma**2 - 1, k**2 * PI2, rtol=1e-14)


# ---------------------------------------------------------------- Bessel


def test_bessel_j_against_library_oracle():
    x = np.linspace(0.0, 60.0, 1201)
    for m in range(0, 40, 3):
        np.testing.assert_allclose(bessel_j(m, x), special.jv(m, x), atol=2e-15 * max(1, m))


def test_bessel_j_small_argument_and_vectorized_orders():
    m = np.array([0, 1, 5])
    np.testing.assert_allclose(bessel_j(m, 1e-3), special.jv(m, 1e-3), rtol=1e-14)
    assert bessel_j(0, 0.0) == 1.0
    assert bessel_j(3, 0.0) == 0.0


def test_bessel_zero_values():
    # frozen from bisection on the series/recurrence evaluation, refined to 1e-12
    assert bessel_zeros(0, 1)[0] == pytest.approx(2.404825557695773, abs=1e-12)
    assert bessel_zeros(1, 1)[0] == pytest.approx(3.831705970207512, abs=1e-12)
    z = bessel_zeros(0, 2)
    assert z[1] > z[0]


def test_bessel_zeros_against_library_oracle():
    for m in (0, 1, 7, 20, 64):
        np.testing.assert_allclose(bessel_zeros(m, 64), special.jn_zeros(m, 64), atol=1e-10)


def test_bessel_zero_interlacing():
    z = np.array([bessel_zeros(m, 10) for m in range(12)])
    assert np.all(z[:-1, :] < z[1:, :])  # z_{m,j} < z_{m+1,j}
    assert np.all(z[1:, :-1] < z[:-1, 1:])  # z_{m+1,j} < z_{m,j+1}


def test_bessel_zeros_rejects_bad_count():
    with pytest.raises(ValueError):
        bessel_zeros(0, 0)
    assert issubclass(BesselBracketError, RuntimeError)


# ---------------------------------------------------------------- disk


def test_disk_first_modes():
    s = disk_spectrum(3)
    assert s.mu[0] == pytest.approx(2.404825557695773**2, rel=1e-13)
    assert s.mu[0] == pytest.approx(5.7832, abs=1e-4)
    assert s.mu[1] == s.mu[2] == pytest.approx(3.831705970207512**2, rel=1e-13)
    assert s.labels == ((0, 1), (1, 1), (-1, 1))


def test_disk_matches_brute_force_sort():
    # brute force over m <= 8, j <= 8 with the library zeros as oracle
    vals = []
    for m in range(9):
        for j, z in enumerate(special.jn_zeros(m, 8), start=1):
            vals += [(z * z, m, j)] + ([(z * z, -m, j)] if m else [])
    vals.sort(key=lambda v: (v[0], abs(v[1]), v[2], v[1] < 0))
    s = disk_spectrum(30)
    np.testing.assert_allclose(s.mu, [v[0] for v in vals[:30]], rtol=1e-12)
    assert s.labels == tuple((v[1], v[2]) for v in vals[:30])


def test_disk_even_multiplicity_and_window_stability():
    big = disk_spectrum(200)
    small = disk_spectrum(77)
    assert small.labels == big.labels[:77]
    np.testing.assert_array_equal(small.mu, big.mu[:77])
    lab = dict(zip(big.labels, big.mu))
    for (m, j), mu in lab.items():
        if m and (-m, j) in lab:
            assert lab[(-m, j)] == mu
    assert np.all(np.diff(big.mu) >= 0)


# ---------------------------------------------------------------- Weyl model and Fourier grid


def test_weyl_constant_special_cases():
    assert weyl_constant(2, math.pi) == pytest.approx(4.0, rel=1e-15)
    assert weyl_constant(1, 1.0) == pytest.approx(PI2, rel=1e-15)
    assert weyl_model_spectrum(2, math.pi, 1).mu[0] == pytest.approx(4.0, rel=1e-15)


@pytest.mark.parametrize("n, ratio", [(1, 2.0), (2, math.sqrt(2.0))])
def test_weyl_model_gamma_ratio_limits(n, ratio):
    g = basis_gamma(DomainSpec.weyl(n, 1.0), 4096).gamma
    k = 2000
    assert g[2 * k - 1] / g[k - 1] == pytest.approx(ratio, rel=2e-3)
    assert g[k // 2 - 1] / g[k - 1] == pytest.approx(1 / ratio, rel=2e-3)


def test_fourier_grid_examples():
    s = fourier_grid_spectrum(DomainSpec.fourier([-1, 0, 1]))
    np.testing.assert_array_equal(s.mu, [0.0, 1.0, 1.0])
    assert s.labels[0] == (0,)
    g = gamma_sequence(s)
    assert g.a_eigenvalues[0] == 1.0
    s2 = fourier_grid_spectrum(fourier_lattice(2, 1))
    i = s2.labels.index((1, 1))
    assert s2.mu[i] == 2.0
    assert gamma_sequence(s2).a_eigenvalues[i] == pytest.approx(1 / 3, rel=1e-15)


def test_fourier_requires_symmetric_set_and_enough_modes():
    with pytest.raises(ValueError):
        DomainSpec.fourier([0, 1, 2, -1])
    with pytest.raises(ValueError):
        laplace_spectrum(DomainSpec.fourier([-1, 0, 1]), 4)


def test_gamma_sequence_invariants():
    with pytest.raises(ValueError):
        GammaSequence(np.array([0.5, 1.0]))
    with pytest.raises(ValueError):
        GammaSequence(np.array([2.0, 1.5]))
    with pytest.raises(EmptyDomainError):
        GammaSequence(np.array([]))


# ---------------------------------------------------------------- Weyl count and CSV


def test_weyl_count_interval_and_model():
    _, ratios, dev = weyl_count_check(interval_spectrum(100), 1, 1.0)
    assert dev < 1e-14
    _, ratios, dev = weyl_count_check(weyl_model_spectrum(3, 2.0, 64), 3, 2.0)
    np.testing.assert_allclose(ratios, 1.0, rtol=1e-14)


def test_weyl_count_rejects_short_spectrum():
    with pytest.raises(ValueError):
        weyl_count_check(interval_spectrum(49), 1, 1.0)


def test_spectrum_csv_round_trip():
    s = disk_spectrum(12)
    text = spectrum_to_csv(s)
    rows = list(csv.DictReader(io.StringIO(text)))
    assert list(rows[0]) == ["index", "label", "mu", "gamma"]
    assert rows[1]["label"] == "(1,1)"
    np.testing.assert_array_equal([float(r["mu"]) for r in rows], s.mu)
    buf = io.StringIO()
    spectrum_to_csv(s, buf)
    assert buf.getvalue() == text


@settings(max_examples=25, deadline=None)
@given(st.sampled_from(["interval", "disk", "weyl", "fourier"]), st.integers(1, 60))
def test_all_spectra_nondecreasing_with_gamma_at_least_one(kind, N):
    dom = {
        "interval": DomainSpec.interval(),
        "disk": DomainSpec.disk(),
        "weyl": DomainSpec.weyl(3, 0.7),
        "fourier": fourier_lattice(2, 4),
    }[kind]
    s = laplace_spectrum(dom, N)
    g = gamma_sequence(s)
    assert np.all(np.diff(s.mu) >= 0)
    assert np.all(g.gamma >= 1.0)
    np.testing.assert_allclose(g.mu, s.mu, rtol=1e-14, atol=1e-14)
