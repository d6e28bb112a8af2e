"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -v`` or ``python3 tests/test_acceptance.py``.
"""

import cmath
import math
import sys
import time
from fractions import Fraction
from importlib import resources

import numpy as np
import pytest

from ergweights import averages as av
from ergweights import cli
from ergweights import dynsys as ds
from ergweights import linops as lo
from ergweights import phase as ph
from ergweights import seqcore as sc
from ergweights import shiftcex as sx


@pytest.fixture
def report(capsys):
    def emit(n, title, ok, detail):
        with capsys.disabled():
            print(f"\ncriterion {n} [{title}]: {'PASS' if ok else 'FAIL'} ({detail})")
        assert ok, detail
    return emit


def e(t):
    return cmath.exp(2j * math.pi * t)


# ---------------------------------------------------------------------------
# 1. structure theorem
# ---------------------------------------------------------------------------

def direct_sequence(T, x, xp, nmax):
    out, v = np.empty(nmax, dtype=complex), np.asarray(x, dtype=complex)
    for i in range(nmax):
        v = T @ v
        out[i] = np.vdot(xp, v)
    return out


def test_criterion_1_structure(report):
    rng = np.random.default_rng(20240101)
    t0 = time.perf_counter()
    worst_rec, worst_oracle, bad_mean = 0.0, 0.0, 0
    n = np.arange(1, 1001)
    for _ in range(200):
        T = lo.random_spectral_operator(rng, stable_radius=float(rng.uniform(0.1, 0.9)))
        assert T.dim <= 8 and len(T.eigenvalues) <= 4 and T.r <= 0.9
        x = rng.normal(size=T.dim) + 1j * rng.normal(size=T.dim)
        xp = rng.normal(size=T.dim) + 1j * rng.normal(size=T.dim)
        v = lo.VectorPair(x, xp)
        a = lo.linear_sequence(T, v).take(n)
        trig, res = lo.structure_split(T, v)
        b = trig(n) if len(trig) else np.zeros(n.size)
        worst_rec = max(worst_rec, float(np.max(np.abs(a - b - res.take(n)))))
        worst_oracle = max(worst_oracle, float(np.max(np.abs(a - direct_sequence(T.dense(), x, xp, 1000)))))
        N = 10_000
        mean = float(np.sum(np.abs(res.values(1, N + 1)))) / N
        bound = T.C * np.linalg.norm(x) * np.linalg.norm(xp) / (N * (1 - T.r))
        bad_mean += mean > bound
    elapsed = time.perf_counter() - t0
    ok = worst_rec <= 1e-9 and bad_mean == 0 and elapsed <= 30 and worst_oracle <= 1e-8
    report(1, "structure theorem", ok,
           f"max |a-b-c| = {worst_rec:.2e}, max |a - iteration| = {worst_oracle:.2e}, "
           f"mean-bound failures = {bad_mean}/200, {elapsed:.1f}s")


# ---------------------------------------------------------------------------
# 2. good-weight estimate for Cesaro-null weights
# ---------------------------------------------------------------------------

def random_null_weight(rng):
    kind = rng.integers(0, 4)
    if kind == 0:
        T = lo.random_spectral_operator(rng, dim=int(rng.integers(2, 7)),
                                        n_unimodular=int(rng.integers(0, 3)))
        v = lo.VectorPair(rng.normal(size=T.dim), rng.normal(size=T.dim) + 1j * rng.normal(size=T.dim))
        return lo.structure_split(T, v)[1]
    if kind == 1:
        return sc.geometric(complex(rng.uniform(0.5, 0.99) * e(rng.uniform())))
    if kind == 2:
        return sc.square_indicator()
    return sc.square_indicator() * sc.character(float(rng.uniform()))


def random_factor(rng):
    kind = rng.integers(0, 4)
    coef = lambda: complex(rng.normal(), rng.normal())  # noqa: E731
    if kind == 0:
        S = ds.circle_rotation(float(rng.uniform()))
        g = ds.fourier([(int(k), coef()) for k in rng.choice(np.arange(-4, 5), 2, replace=False)])
        return av.Factor(S, g, [float(rng.uniform())])
    if kind == 1:
        S = ds.torus_rotation([float(rng.uniform()), "golden"])
        g = ds.fourier([((1, 0), coef()), ((int(rng.integers(-2, 3)), 1), coef())], 2)
        return av.Factor(S, g, list(rng.uniform(size=2)))
    if kind == 2:
        S = ds.skew_product(float(rng.uniform()))
        g = ds.fourier([((0, 1), coef()), ((1, -1), coef())], 2)
        return av.Factor(S, g, list(rng.uniform(size=2)))
    m = int(rng.integers(2, 9))
    S = ds.cyclic_permutation(m, step=int(rng.integers(1, m + 1)) % m or 1)
    return av.Factor(S, ds.table([coef() for _ in range(m)]), int(rng.integers(0, m)))


def grid_sup(g, m1=1 << 14, m2=256):
    """max |g| over a fine grid: a lower estimate of the sup norm, so the test is strict."""
    if g.table is not None:
        return float(np.max(np.abs(g.table)))
    pts = ds.grid_points(g.dim, m1 if g.dim == 1 else m2)
    return float(np.max(np.abs(g(pts if g.dim > 1 else pts[:, 0]))))


def test_criterion_2_good_weight_estimate(report):
    rng = np.random.default_rng(7)
    hs = sc.dyadic_horizons(1 << 15)
    violations, checks, thread_mismatch = 0, 0, 0
    for i in range(50):
        k = 1 + i % 3
        w = random_null_weight(rng)
        towers = [random_factor(rng) for _ in range(k)]
        cfg = av.RttConfig(w, towers, hs)
        tr = av.multiple_rtt_average(cfg)
        thread_mismatch += tr.values != av.multiple_rtt_average(cfg, threads=8).values
        mean_abs = np.cumsum(np.abs(w.values(1, hs[-1] + 1))) / np.arange(1, hs[-1] + 1)
        sup = float(np.prod([grid_sup(f.observable) for f in towers]))
        for N, val in zip(tr.checkpoints, tr.values):
            checks += 1
            violations += abs(val) > sup * mean_abs[N - 1] * (1 + 1e-12)
    ok = violations == 0 and thread_mismatch == 0
    report(2, "good-weight estimate", ok,
           f"{violations} violations in {checks} checkpoints over 50 configurations, "
           f"thread mismatches = {thread_mismatch}")


# ---------------------------------------------------------------------------
# 3. resonance exactness
# ---------------------------------------------------------------------------

def test_criterion_3_resonance(report):
    N = 1 << 20
    worst = 0.0
    for y in (0.0, 0.3, 0.71828):
        tr = av.weighted_average(sc.character("-golden"), ds.circle_rotation("golden"),
                                 ds.exp_character(), [y], [N])
        worst = max(worst, abs(tr.values[-1] - e(y)))
    report(3, "resonance exactness", worst <= 1e-10, f"max |A_N - e(y)| = {worst:.2e} at N = 2^20")


# ---------------------------------------------------------------------------
# 4. Weyl / L2 suite
# ---------------------------------------------------------------------------

def weyl_oracle(a_fixed, N):
    """|(1/N) sum e(alpha n^2)| with exact integer phases and fsum."""
    shift = ph.FIXED_BITS - 53
    re, im = [], []
    for n in range(1, N + 1):
        t = ((a_fixed * n * n) % ph.ONE >> shift) / 2.0 ** 53
        re.append(math.cos(2 * math.pi * t))
        im.append(math.sin(2 * math.pi * t))
    return abs(complex(math.fsum(re), math.fsum(im))) / N


def test_criterion_4_weyl_l2(report):
    t0 = time.perf_counter()
    N = 10 ** 6
    S = ds.circle_rotation("golden")
    res = av.weighted_poly_average_l2(av.PolyAvgConfig(
        sc.constant(1.0), S, [(ds.exp_character(), ds.monomial(2))], [10 ** 4, 10 ** 5, N]))
    norm = res.trace.l2norms[-1]
    oracle = weyl_oracle(ph.golden_fixed(), N)
    mean_ok, worst_ratio = True, 0.0
    for alpha in ("golden", 0.3, Fraction(1, 7), 0.4142135623730951):
        lam = e(ph.from_fixed(ph.to_fixed(alpha)))
        hs = sc.dyadic_horizons(1 << 20)
        r = av.weighted_poly_average_l2(av.PolyAvgConfig(
            sc.constant(1.0), ds.circle_rotation(alpha), [(ds.exp_character(), ds.linear())], hs))
        for M, nrm in zip(hs, r.trace.l2norms):
            bound = 2 / (M * abs(1 - lam))
            worst_ratio = max(worst_ratio, nrm / bound)
            mean_ok &= nrm <= bound * (1 + 1e-9)
    elapsed = time.perf_counter() - t0
    ok = norm <= 0.01 and abs(norm - oracle) <= 1e-9 and mean_ok and elapsed <= 60
    report(4, "Weyl/L2", ok,
           f"||F_N|| = {norm:.3e} (oracle {oracle:.3e}) at N = 10^6, "
           f"mean-ergodic max norm/bound = {worst_ratio:.3f}, {elapsed:.1f}s")


# ---------------------------------------------------------------------------
# 5. shift counterexample
# ---------------------------------------------------------------------------

def random_functional(rng):
    kind = rng.integers(0, 3)
    base = sx.block_sign_sequence(float(rng.uniform(1e-3, 2)), growth=int(rng.integers(2, 5)),
                                  alternating=bool(rng.integers(0, 2)))
    if kind == 0:
        return base
    if kind == 1:
        return sx.constant_functional(complex(rng.normal(), rng.normal()))
    return sx.rotated_functional(base, Fraction(int(rng.integers(0, 97)), 97))


def random_lambda(rng):
    kind = rng.integers(0, 3)
    if kind == 0:
        return Fraction(int(rng.integers(0, 1000)), 1000)
    if kind == 1:
        return "golden"
    return e(float(rng.uniform()))


def test_criterion_5_counterexample(report):
    rng = np.random.default_rng(5)
    fails = 0
    for _ in range(1000):
        J = int(rng.integers(1, 17))
        x = sx.L1Vector(rng.normal(size=J) + 1j * rng.normal(size=J))
        fails += not sx.cex_bound_check(x, random_functional(rng), random_lambda(rng),
                                        int(rng.integers(1, 1 << 14))).holds
    ok_a = fails == 0

    e1 = sx.L1Vector.unit(1)
    g1 = sx.divergence_witness(e1, sx.block_sign_sequence(1.0), 1 << 20).gap
    g2 = sx.divergence_witness(e1, sx.block_sign_sequence(1e-3), 1 << 20).gap
    ok_b = g1 >= 0.5 and g2 >= 5e-4

    hs = sc.dyadic_horizons(1 << 20)
    shift = sx.shift_sequence(e1, sx.block_sign_sequence(1.0))
    resonant = [av.Factor(ds.circle_rotation("golden"), ds.const_observable(1.0), [0.0])]
    other = [av.Factor(ds.circle_rotation("golden"), ds.exp_character(), [0.25])]
    rep = av.universal_family_report([sc.constant(1.0), shift], [resonant, other], hs)
    rep8 = av.universal_family_report([sc.constant(1.0), shift], [resonant, other], hs, threads=8)
    ok_c1 = 0 in rep.flipped_towers and rep.summary() == rep8.summary()

    split_flips = 0
    for _ in range(3):
        T = lo.random_spectral_operator(rng, dim=5, n_unimodular=2)
        v = lo.VectorPair(rng.normal(size=5), rng.normal(size=5))
        trig, res = lo.structure_split(T, v)
        towers = [resonant, other]
        for a in trig.phases:                       # a tower resonant with each frequency
            towers.append([av.Factor(ds.circle_rotation(Fraction(ph.ONE - a, ph.ONE)),
                                     ds.exp_character(), [0.1])])
        r = av.universal_family_report([sc.constant(1.0), trig.as_sequence(), res], towers, hs)
        split_flips += r.flip_count
    ok_c2 = split_flips == 0
    ok = ok_a and ok_b and ok_c1 and ok_c2
    report(5, "shift counterexample", ok,
           f"(a) {fails}/1000 bound failures; (b) gap {g1:.4f} at delta=1, {g2:.3e} at delta=1e-3; "
           f"(c) shift flips towers {rep.flipped_towers}, structure-split flips = {split_flips}")


# ---------------------------------------------------------------------------
# 6. Koopman-von Neumann extraction
# ---------------------------------------------------------------------------

def test_criterion_6_kvn(report):
    N = 10 ** 6
    levels = [0.5, 0.25, 0.125, 0.0625]
    J = sc.kvn_extract(sc.square_indicator(), N, levels)
    n = np.arange(1, N + 1, dtype=np.int64)
    r = np.array([math.isqrt(int(k)) for k in n])
    c = (r * r == n).astype(float)                 # independent square test
    violations = 0
    bounds = list(J.cutoffs) + [N]
    for k in range(J.certified_levels):
        seg = slice(bounds[k], bounds[k + 1])
        violations += int(np.count_nonzero(J.mask[seg] & (c[seg] > levels[k])))
    density = J.observed_density(N)
    ok = density >= 0.998 and violations == 0 and J.certified_levels >= 1
    report(6, "KvN extraction", ok,
           f"density {density:.6f}, {J.certified_levels} certified levels, {violations} violations")


# ---------------------------------------------------------------------------
# 7. determinism across thread counts (CLI)
# ---------------------------------------------------------------------------

def test_criterion_7_determinism(report, tmp_path):
    import io
    diffs, compared, codes = [], 0, {}
    for name in cli.example_configs():
        path = str(resources.files("ergweights") / "configs" / name)
        outs = []
        for threads in (1, 8):
            out = tmp_path / f"{name}-{threads}"
            err = io.StringIO()
            code = cli.run(path, out, threads=threads, stderr=err)
            files = {p.name: p.read_bytes() for p in sorted(out.glob("*"))} if out.exists() else {}
            outs.append((code, err.getvalue(), files))
        codes[name] = outs[0][0]
        if outs[0] != outs[1]:
            diffs.append(name)
        compared += len(outs[0][2])
    ok = not diffs and all(c in (0, 3) for c in codes.values())
    report(7, "determinism", ok,
           f"{len(codes)} example configs, {compared} output files compared, "
           f"differing: {diffs or 'none'}, exit codes {sorted(set(codes.values()))}")


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-v", "-p", "no:cacheprovider"]))
