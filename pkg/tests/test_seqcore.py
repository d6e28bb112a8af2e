import cmath
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ergweights import seqcore as sc
from ergweights.errors import InputError


def lam_of(t):
    return cmath.exp(2j * math.pi * t)


# --- cesaro_trace ---------------------------------------------------------

def test_constant_sequence_converges_to_one():
    tr = sc.cesaro_trace(sc.constant(1.0), [10, 100])
    assert tr.values == [1, 1]
    assert tr.verdict.kind == "converged"
    assert tr.verdict.limit == 1 and tr.verdict.radius == 0


def test_alternating_sequence():
    alt = sc.WeightSequence(lambda n: np.where(n % 2 == 0, 1.0, -1.0).astype(complex), 1.0)
    hs = [2 ** k for k in range(1, 16)]
    tr = sc.cesaro_trace(alt, hs)
    for N, v in zip(hs, tr.values):
        assert abs(v) <= 1 / N
    assert tr.verdict.kind == "converged" and abs(tr.verdict.limit) <= 1e-3


def test_geometric_average_bound():
    lam = lam_of(0.3)
    hs = list(range(1, 2000, 37))
    tr = sc.cesaro_trace(sc.character(0.3), hs)
    for N, v in zip(hs, tr.values):
        assert abs(v) <= 2 / (N * abs(1 - lam)) + 1e-15


@given(st.floats(0.001, 0.999), st.integers(1, 50_000))
@settings(max_examples=60, deadline=None)
def test_geometric_bound_property(t, N):
    lam = lam_of(t)
    v = sc.cesaro_trace(sc.character(t), [N]).values[0]
    assert abs(v) <= 2 / (N * abs(1 - lam)) + 1e-12


@given(st.complex_numbers(max_magnitude=3, allow_nan=False, allow_infinity=False),
       st.floats(0.0, 1.0), st.floats(-0.95, 0.95))
@settings(max_examples=40, deadline=None)
def test_cesaro_trace_is_affine(alpha, t, r):
    a, b = sc.character(t), sc.geometric(r)
    hs = [7, 100, 5000]
    lhs = sc.cesaro_trace(a.scale(alpha) + b, hs).values
    ta, tb = sc.cesaro_trace(a, hs).values, sc.cesaro_trace(b, hs).values
    for x, y, z in zip(lhs, ta, tb):
        assert abs(x - (alpha * y + z)) <= 1e-12 * max(1.0, abs(alpha))


def test_absolute_flag():
    tr = sc.cesaro_trace(sc.character(0.3), [100], absolute=True)
    assert tr.values[0] == pytest.approx(1.0, abs=1e-14)


@pytest.mark.parametrize("hs", [[], [0, 5], [5, 5], [10, 3], [2 ** 33]])
def test_horizon_validation(hs):
    with pytest.raises(InputError):
        sc.cesaro_trace(sc.constant(1.0), hs)


def test_trace_invariants():
    with pytest.raises(InputError):
        sc.AverageTrace([1, 2], [1.0], sc.Verdict("undecided"))
    with pytest.raises(InputError):
        sc.AverageTrace([2, 1], [1.0, 1.0], sc.Verdict("undecided"))


def test_converged_verdict_radius_covers_tail():
    tr = sc.cesaro_trace(sc.geometric(0.9), sc.dyadic_horizons(2 ** 16))
    v = tr.verdict
    assert v.kind == "converged"
    for N, a in zip(tr.checkpoints, tr.values):
        if N >= v.anchor:
            assert abs(a - v.limit) <= v.radius


def test_verdict_diverged_and_undecided():
    cps = [2 ** k for k in range(4, 12)]
    osc = [(-1) ** k * 0.3 for k in range(len(cps))]
    assert sc.assign_verdict(cps, osc).kind == "diverged"
    slow = [1e-3 * 3 / k for k in range(1, len(cps) + 1)]     # drifts by ~1e-3
    assert sc.assign_verdict(cps, slow, tol=1e-4).kind in ("undecided", "diverged")
    near = [0.5 + 2e-3 * (-1) ** k for k in range(len(cps))]
    assert sc.assign_verdict(cps, near).kind == "undecided"


def test_verdict_few_checkpoints():
    assert sc.assign_verdict([10, 100], [1.0, 1.0]).kind == "converged"


# --- cesaro_null_check ----------------------------------------------------

def test_cesaro_null_examples():
    assert sc.cesaro_null_check(sc.constant(0.0), 1000, 1e-6) == (True, 0.0)
    ok, res = sc.cesaro_null_check(sc.constant(1.0), 1000, 0.5)
    assert not ok and res == 1.0
    tol = 1e-3
    for N in (9001, 10_000, 123_456):            # N >= 9/tol
        ok, res = sc.cesaro_null_check(sc.geometric(0.9), N, tol)
        assert ok and res <= 0.9 / (N * 0.1) * (1 + 1e-12)   # closed form 9(1 - 0.9**N)/N
    with pytest.raises(InputError):
        sc.cesaro_null_check(sc.constant(1.0), 0, 1.0)


# --- kvn_extract ----------------------------------------------------------

def test_kvn_zero_sequence():
    J = sc.kvn_extract(sc.constant(0.0), 1000, [0.5, 0.1])
    assert J.count(1000) == 1000 and J.observed_density(1000) == 1.0
    assert J.status == "certified"


def test_kvn_squares():
    N = 10 ** 6
    J = sc.kvn_extract(sc.square_indicator(), N, [0.5, 0.25, 0.125, 0.0625])
    assert J.status == "certified"
    squares = {k * k for k in range(1, 1001)}
    n1 = J.cutoffs[0]
    # members: everything up to N_1, and beyond it exactly the non-squares
    brute = sum(1 for n in range(1, N + 1) if n <= n1 or n not in squares)
    assert J.count(N) == brute
    assert J.observed_density(N) == brute / N >= 0.998
    assert J.membership(4) and not J.membership(1000 ** 2)


def test_kvn_level_property_exact():
    seq = sc.geometric(0.99)
    J = sc.kvn_extract(seq, 50_000, [0.5, 0.2, 0.05, 0.01])
    mags = np.abs(seq.values(1, 50_001))
    for n in range(1, 50_001):
        k = J.level_of(n)
        if J.membership(n) and k is not None and n > J.cutoffs[k]:
            assert mags[n - 1] <= J.levels[k]
    assert J.observed_density(50_000) > 0.99


def test_kvn_undecided_when_level_missing():
    J = sc.kvn_extract(sc.constant(0.5), 1000, [0.9, 0.1])
    assert J.status == "undecided" and J.certified_levels == 1


def test_kvn_density_is_exact_ratio():
    J = sc.kvn_extract(sc.square_indicator(), 5000, [0.5, 0.25])
    for N in (1, 17, 999, 5000):
        assert J.observed_density(N) == int(np.count_nonzero(J.mask[:N])) / N


def test_kvn_rejects_bad_levels():
    with pytest.raises(InputError):
        sc.kvn_extract(sc.constant(0.0), 10, [0.1, 0.5])


# --- trig polynomials -----------------------------------------------------

def test_trigpoly_examples():
    assert sc.trigpoly_eval(sc.TrigPolynomial.from_terms([(1, 1)]), 12345) == pytest.approx(1)
    p = sc.TrigPolynomial.from_terms([(2, 1j)])
    assert abs(sc.trigpoly_eval(p, 2) - (-2)) < 1e-15
    w = lam_of(1 / 3)
    q = sc.TrigPolynomial.from_terms([(1, w), (1, w.conjugate())])
    assert abs(sc.trigpoly_eval(q, 3) - 2) < 1e-14


def test_trigpoly_invariants():
    with pytest.raises(InputError):
        sc.TrigPolynomial.from_terms([(1, 1.01)])
    with pytest.raises(InputError):
        sc.TrigPolynomial.from_terms([(1, 1j), (2, 1j)])


def test_trigpoly_large_n_no_drift():
    p = sc.TrigPolynomial.from_turns([(1, "golden")])
    n = 10 ** 12
    assert abs(abs(p(n)) - 1) < 1e-15


# --- bohr / ap distance ---------------------------------------------------

def test_bohr_examples():
    lam0 = lam_of(0.2)
    seq = sc.character(0.2)
    for N in (1, 10, 1000):
        assert abs(sc.bohr_coefficient(seq, lam0, N) - 1) < 1e-13
    lam = lam_of(0.45)
    N = 777
    assert abs(sc.bohr_coefficient(seq, lam, N)) <= 2 / (N * abs(1 - lam0 * lam.conjugate())) + 1e-15
    mu0 = lam_of(0.5)
    seq2 = sc.TrigPolynomial.from_terms([(2, lam0), (1, mu0)]).as_sequence()
    assert abs(sc.bohr_coefficient(seq2, lam0, 10 ** 5) - 2) <= 1e-4 * 200
    with pytest.raises(InputError):
        sc.bohr_coefficient(seq, 1.5, 10)


@given(st.lists(st.tuples(st.floats(-2, 2), st.floats(0.01, 0.99)), min_size=2, max_size=4,
                unique_by=lambda t: round(t[1], 2)),
       st.integers(10, 3000))
@settings(max_examples=30, deadline=None)
def test_bohr_error_bound(terms, N):
    turns = [t for _, t in terms]
    if min(abs(a - b) for i, a in enumerate(turns) for b in turns[:i]) < 0.005:
        return
    p = sc.TrigPolynomial.from_turns(terms)
    lams = [lam_of(t) for t in turns]
    k = 0
    got = sc.bohr_coefficient(p.as_sequence(), lams[k], N)
    bound = sum(abs(c) * 2 / (N * abs(1 - lj * lams[k].conjugate()))
                for j, ((c, _), lj) in enumerate(zip(terms, lams)) if j != k)
    assert abs(got - terms[k][0]) <= bound + 1e-12


def test_ap_distance_examples():
    p = sc.TrigPolynomial.from_turns([(1.0, 0.1), (0.5, 0.37)])
    seq = p.as_sequence()
    assert sc.ap_distance(p, seq, range(1, 500)) < 1e-15
    zero = sc.TrigPolynomial((), ())
    assert sc.ap_distance(zero, sc.character(0.3), range(1, 100)) == pytest.approx(1.0)
    d = sc.ap_distance(p.drop(1), seq, range(1, 1000))
    assert abs(d - 0.5) < 1e-12
    with pytest.raises(InputError):
        sc.ap_distance(p, seq, [])


def test_weight_sequence_bounds_sampled():
    rng = np.random.default_rng(5)
    idx = rng.integers(1, 10 ** 9, size=2000)
    for s in (sc.character("golden"), sc.geometric(0.7j), sc.square_indicator(),
              sc.character(0.1) * sc.geometric(-0.5), sc.constant(2) - sc.character(0.2)):
        assert np.all(np.abs(s.take(idx)) <= s.sup_bound + 1e-12)
        assert np.array_equal(s.take(idx), s.take(idx))          # purity


def test_square_indicator_exact():
    n = np.arange(1, 200_001)
    got = sc.square_indicator().take(n).real
    want = np.zeros(n.size)
    want[np.arange(1, 448) ** 2 - 1] = 1
    assert np.array_equal(got, want)
    big = np.array([(2 ** 31 - 1) ** 2, (2 ** 31 - 1) ** 2 + 1], dtype=np.int64)
    assert list(sc.square_indicator().take(big).real) == [1.0, 0.0]
