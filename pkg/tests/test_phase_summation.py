import math
from fractions import Fraction

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ergweights import phase as ph
from ergweights.summation import BLOCK, compensated_sum, partial_sums


def test_golden_matches_multiprecision():
    mpmath.mp.prec = 300
    exact = (mpmath.sqrt(5) - 1) / 2
    a = ph.golden_fixed()
    err = abs(mpmath.mpf(a) / mpmath.mpf(ph.ONE) - exact)
    assert err < mpmath.mpf(2) ** -127


def test_to_fixed_variants():
    assert ph.to_fixed(0.5) == ph.ONE // 2
    assert ph.to_fixed(Fraction(1, 4)) == ph.ONE // 4
    assert ph.to_fixed("1/4") == ph.ONE // 4
    assert ph.to_fixed(-0.25) == 3 * ph.ONE // 4
    assert ph.to_fixed(3) == 0
    assert (ph.to_fixed("golden") + ph.to_fixed("-golden")) % ph.ONE == 0


@given(st.integers(min_value=-(2 ** 62), max_value=2 ** 62))
@settings(max_examples=300, deadline=None)
def test_frac_mul_against_exact(m):
    a = ph.golden_fixed()
    got = float(ph.frac_mul(a, np.array([m]))[0])
    want = float(ph.frac_mul_exact(a, m))
    d = abs(got - want)
    assert min(d, 1 - d) < 4e-15


def test_frac_mul_vectorized_random_phases():
    rng = np.random.default_rng(3)
    for _ in range(20):
        a = int(rng.integers(0, 2 ** 62)) << 66 | int(rng.integers(0, 2 ** 62))
        ms = rng.integers(-(2 ** 40), 2 ** 40, size=50)
        got = ph.frac_mul(a, ms)
        want = np.array([float(ph.frac_mul_exact(a, int(m))) for m in ms])
        d = np.abs(got - want)
        assert np.all(np.minimum(d, 1 - d) < 4e-15)


def test_angle_to_fixed_roundtrip():
    for t in (0.0, 0.1, 0.3, 0.75, 0.999):
        z = complex(ph.unit(t))
        back = ph.from_fixed(ph.angle_to_fixed(z))
        assert min(abs(back - t), 1 - abs(back - t)) < 1e-15


def test_compensated_sum_matches_fsum():
    rng = np.random.default_rng(0)
    x = rng.normal(size=100_000) * 10.0 ** rng.integers(-8, 8, size=100_000)
    assert compensated_sum(x) == pytest.approx(math.fsum(x), rel=0, abs=1e-9 * np.abs(x).max())
    z = x + 1j * x[::-1]
    s = compensated_sum(z)
    assert abs(s.real - math.fsum(x)) < 1e-6 and abs(s.imag - math.fsum(x[::-1])) < 1e-6


def test_partial_sums_against_cumsum():
    rng = np.random.default_rng(1)
    vals = rng.normal(size=20_000) + 1j * rng.normal(size=20_000)
    fn = lambda n: vals[n - 1]  # noqa: E731
    hs = [1, 5, BLOCK, BLOCK + 1, 3 * BLOCK - 7, 20_000]
    got = partial_sums(fn, hs)[:, 0]
    for h, g in zip(hs, got):
        assert abs(g - (math.fsum(vals[:h].real) + 1j * math.fsum(vals[:h].imag))) < 1e-11


@pytest.mark.parametrize("threads", [2, 3, 8])
def test_partial_sums_thread_invariance(threads):
    f = lambda n: np.exp(1j * np.sqrt(n.astype(float))) / np.log1p(n)  # noqa: E731
    hs = [100, 4096, 100_000, 1_000_003]
    serial = partial_sums(f, hs, 1)
    par = partial_sums(f, hs, threads)
    assert np.array_equal(serial, par)          # bit-identical, not just 1e-12


def test_partial_sums_multichannel():
    f = lambda n: np.stack([n.astype(float), np.ones(n.size)])  # noqa: E731
    out = partial_sums(f, [10, 3000])
    assert out.shape == (2, 2)
    assert out[1, 0] == 3000 * 3001 / 2 and out[1, 1] == 3000
