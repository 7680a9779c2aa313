import numpy as np
import pytest

from macrofacet import (
    ParameterDomainError,
    build_frame,
    direction_to_spherical,
    erf,
    erfc,
    gauss_cdf,
    gauss_pdf,
    normalize,
    spherical_to_direction,
)

from refmath import ref_erf, ref_erfc


def test01_erf_reference_accuracy():
    xs = np.concatenate([np.linspace(-6, 6, 801), [0.5, 1.0, 2.5, 4.0]])
    for x in xs:
        ref = float(ref_erf(x))
        got = float(erf(float(x)))
        if ref != 0.0:
            assert abs(got - ref) <= 1e-14 * abs(ref), f"erf({x})"
        else:
            assert got == 0.0


def test02_erf_trivia():
    assert erf(0.0) == 0.0
    assert abs(erf(np.finfo(float).max) - 1.0) <= 1e-15
    assert abs(erf(1.0) - 0.8427007929497149) < 1e-15


def test03_erf_odd_exact():
    xs = np.linspace(0.0, 8.0, 5000)
    assert np.all(erf(-xs) == -erf(xs))


def test04_erfc_tail_relative_accuracy():
    for x in np.concatenate([np.linspace(3.0, 26.0, 400), [5.0, 8.0, 8.0001, 12.0]]):
        ref = float(ref_erfc(x))
        got = float(erfc(float(x)))
        assert abs(got - ref) <= 1e-13 * ref, f"erfc({x}) rel error too large"


def test05_erfc_values():
    assert erfc(0.0) == 1.0
    assert abs(erfc(-1.0) - 1.8427007929497149) < 1e-15
    assert abs(erfc(5.0) - 1.5374597944280349e-12) < 1e-13 * 1.54e-12


def test06_erf_erfc_identity():
    xs = np.linspace(-6.0, 6.0, 12001)
    assert np.max(np.abs(erf(xs) + erfc(xs) - 1.0)) <= 1e-14


def test07_gauss_pdf():
    assert abs(gauss_pdf(0.0, 0.0, 1.0) - 0.3989422804014327) < 1e-16
    for mu, var in [(2.0, 3.0), (-1.0, 0.25)]:
        assert abs(gauss_pdf(mu, mu, var) - 1.0 / np.sqrt(2 * np.pi * var)) < 1e-15
    assert abs(gauss_pdf(3.0, 0.0, 1.0) - 0.004431848411938008) < 1e-17
    with pytest.raises(ParameterDomainError):
        gauss_pdf(0.0, 0.0, 0.0)


def test08_gauss_cdf():
    assert gauss_cdf(0.0, 0.0, 1.0) == 0.5
    assert gauss_cdf(7.0, 7.0, 2.5) == 0.5
    assert abs(gauss_cdf(-3.0, 0.0, 1.0) - 0.0013498980316300945) < 2e-17
    assert abs(gauss_cdf(3.0, 0.0, 1.0) - 0.9986501019683699) < 1e-15
    xs = np.linspace(-5, 5, 101)
    assert np.all(np.diff(gauss_cdf(xs, 0.0, 1.0)) >= 0.0)
    with pytest.raises(ParameterDomainError):
        gauss_cdf(0.0, 0.0, -1.0)


def test09_gauss_cdf_matches_midpoint_integral():
    # composite midpoint rule of the density from mu - 8 sigma up to x
    mu, var = 0.3, 1.7
    sigma = np.sqrt(var)
    lo = mu - 8.0 * sigma
    for x in (-1.0, 0.3, 1.9):
        n = 14_000_000
        total = 0.0
        h = (x - lo) / n
        for start in range(0, n, 2_000_000):
            stop = min(start + 2_000_000, n)
            mid = lo + (np.arange(start, stop) + 0.5) * h
            total += float(np.sum(gauss_pdf(mid, mu, var)))
        approx = total * h
        assert abs(approx - gauss_cdf(x, mu, var)) <= 1e-13


def test10_spherical_round_trip():
    rs = np.random.default_rng(11)
    w = normalize(rs.normal(size=(500, 3)))
    th, ph = direction_to_spherical(w)
    back = spherical_to_direction(th, ph)
    assert np.max(np.abs(back - w)) < 1e-12
    # poles canonicalize phi to 0
    th, ph = direction_to_spherical(np.array([0.0, 0.0, 1.0]))
    assert ph == 0.0
    th, ph = direction_to_spherical(np.array([0.0, 0.0, -1.0]))
    assert ph == 0.0 and abs(th - np.pi) < 1e-15


def test11_build_frame_poles():
    for n in ([0.0, 0.0, 1.0], [0.0, 0.0, -1.0], [1.0, 0.0, 0.0]):
        fr = build_frame(np.array(n))
        assert np.allclose(fr.normal, n)
        assert abs(np.dot(fr.tangent, fr.bitangent)) < 1e-10
        assert abs(np.dot(fr.tangent, fr.normal)) < 1e-10
        assert abs(np.dot(fr.bitangent, fr.normal)) < 1e-10
        assert np.allclose(np.cross(fr.tangent, fr.bitangent), fr.normal, atol=1e-10)


def test12_build_frame_random_orthonormal():
    rs = np.random.default_rng(3)
    n = normalize(rs.normal(size=(2000, 3)))
    fr = build_frame(n)
    assert np.max(np.abs(np.sum(fr.tangent * fr.bitangent, axis=-1))) < 1e-10
    assert np.max(np.abs(np.sum(fr.tangent * fr.normal, axis=-1))) < 1e-10
    assert np.max(np.abs(np.linalg.norm(fr.tangent, axis=-1) - 1.0)) < 1e-10
    assert np.max(np.abs(np.cross(fr.tangent, fr.bitangent) - n)) < 1e-10


def test13_frame_local_world_round_trip():
    rs = np.random.default_rng(4)
    n = normalize(rs.normal(size=(100, 3)))
    fr = build_frame(n)
    v = normalize(rs.normal(size=(100, 3)))
    assert np.max(np.abs(fr.to_world(fr.to_local(v)) - v)) < 1e-12
