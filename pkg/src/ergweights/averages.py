"""Weighted ergodic averages and their finite-horizon convergence analysis.

* :func:`weighted_average`: (1/N) sum a_n g(S^n y)
* :func:`multiple_rtt_average`: (1/N) sum a_n g_1(S_1^n y_1) ... g_k(S_k^n y_k)
* :func:`weighted_poly_average_l2`: F_N = (1/N) sum a_n prod_j g_j o S^{p_j(n)},
  held exactly in Fourier coefficients with L2 norms by Parseval.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import phase as ph
from .dynsys import DynamicalSystem, IntPolynomial, Observable, _check_compatible
from .errors import InputError
from .seqcore import (DEFAULT_TOL, AverageTrace, WeightSequence, assign_verdict,
                      average_trace, check_horizons, dyadic_horizons)
from .summation import partial_sums

MAX_TOWER = 6
MAX_COEFFICIENTS = 100_000
POINTWISE_HORIZON = 1 << 20
L2_HORIZON = 1 << 16


@dataclass(frozen=True)
class Factor:
    """One (system, observable, point) factor g(S^n y) of a return-time product."""

    system: DynamicalSystem
    observable: Observable
    point: object

    def __post_init__(self):
        _check_compatible(self.system, self.observable)
        if self.system.is_torus:
            y = np.atleast_1d(np.asarray(self.point, dtype=np.float64))
            if y.shape != (self.system.dim,) or np.any((y < 0) | (y >= 1)):
                raise InputError("point must lie in [0, 1)^d")
        elif not 0 <= int(self.point) < self.system.m:
            raise InputError("point must lie in Z/m")

    def stream(self, n: np.ndarray) -> np.ndarray:
        return self.observable(self.system.orbit(self.point, n))


@dataclass
class RttConfig:
    """Weights plus a tower of k factors (k <= 6) and the horizons to report."""

    weights: WeightSequence
    towers: list
    horizons: list = field(default_factory=lambda: dyadic_horizons(POINTWISE_HORIZON))

    def __post_init__(self):
        if not 1 <= len(self.towers) <= MAX_TOWER:
            raise InputError(f"tower size must be 1..{MAX_TOWER}")
        self.towers = [f if isinstance(f, Factor) else Factor(*f) for f in self.towers]
        self.horizons = check_horizons(self.horizons)


@dataclass
class PolyAvgConfig:
    """Weights, one invertible rotation system and (observable, polynomial) pairs."""

    weights: WeightSequence
    system: DynamicalSystem
    pairs: list
    horizons: list = field(default_factory=lambda: dyadic_horizons(L2_HORIZON))

    def __post_init__(self):
        if not self.pairs:
            raise InputError("need at least one (observable, polynomial) pair")
        for g, p in self.pairs:
            if not isinstance(p, IntPolynomial):
                raise InputError("polynomials must be IntPolynomial")
            _check_compatible(self.system, g)
        self.horizons = check_horizons(self.horizons)


def weighted_average(weights: WeightSequence, S: DynamicalSystem, g: Observable, y,
                     horizons=None, *, tol: float = DEFAULT_TOL, threads: int = 1) -> AverageTrace:
    """(1/N) sum a_n g(S^n y) with the bound ||g|| (1/N) sum |a_n| per checkpoint."""
    cfg = RttConfig(weights, [Factor(S, g, y)],
                    horizons if horizons is not None else dyadic_horizons(POINTWISE_HORIZON))
    return multiple_rtt_average(cfg, tol=tol, threads=threads)


def multiple_rtt_average(cfg: RttConfig, *, tol: float = DEFAULT_TOL, threads: int = 1,
                         order=None) -> AverageTrace:
    """(1/N) sum a_n prod_j g_j(S_j^n y_j).

    ``bounds`` holds prod_j ||g_j|| * (1/N) sum |a_n|, the estimate that
    controls Cesaro-null weights.  ``order`` permutes the sequence in which
    factor streams are generated; products are always formed in tower order,
    so the result does not depend on it.
    """
    towers = cfg.towers
    order = list(range(len(towers))) if order is None else list(order)
    if sorted(order) != list(range(len(towers))):
        raise InputError("order must be a permutation of the tower indices")
    gen = cfg.weights.generator
    norm = float(np.prod([f.observable.sup_bound for f in towers]))

    def summand(n):
        streams = [None] * len(towers)
        for j in order:
            streams[j] = towers[j].stream(n)
        out = np.asarray(gen(n), dtype=np.complex128)
        for s in streams:
            out = out * s
        return out

    return average_trace(summand, cfg.horizons, tol=tol, threads=threads,
                         bound_summand=lambda n: np.abs(gen(n)), bound_scale=norm,
                         label=cfg.weights.label)


# ---------------------------------------------------------------------------
# L2 averages of polynomial iterates
# ---------------------------------------------------------------------------

@dataclass
class PolyAverageResult:
    """L2 trace of F_N plus the Fourier coefficients at the last checkpoint.

    ``trace.values`` holds the mean coefficient (integral of F_N),
    ``trace.l2norms`` holds ||F_N||_2; ``cauchy[i]`` is
    ||F_{N_i} - F_{N_{i-1}}||_2 (0 for the first checkpoint).
    """

    trace: AverageTrace
    frequencies: np.ndarray
    coefficients: np.ndarray         # (checkpoints, K)
    cauchy: list

    @property
    def limit(self) -> dict:
        return {tuple(int(v) for v in k): complex(c)
                for k, c in zip(self.frequencies, self.coefficients[-1])}


def _fourier_data(S: DynamicalSystem, g: Observable):
    if S.kind == "cyclic_permutation":
        ks, cs = g.fourier_on_cyclic()
        keep = np.abs(cs) > 1e-15
        return ks[keep], cs[keep]
    return g.freqs, g.coefs


def weighted_poly_average_l2(cfg: PolyAvgConfig, *, tol: float = DEFAULT_TOL,
                             threads: int = 1) -> PolyAverageResult:
    """F_N = (1/N) sum a_n prod_j g_j o S^{p_j(n)} in exact Fourier form.

    Rotations act diagonally: the coefficient of exp(2 pi i k.y) in g o S^m
    is c_k exp(2 pi i m k.alpha).  The product over j expands into tuples of
    frequencies; each tuple contributes one weighted exponential sum.
    """
    S = cfg.system
    if S.kind == "skew_product":
        raise InputError("L2 averages need a rotation or cyclic system (frequencies must "
                         "be preserved by the map)")
    data = [_fourier_data(S, g) for g, _ in cfg.pairs]
    polys = [p for _, p in cfg.pairs]
    total = int(np.prod([len(c) for _, c in data]))
    if total > MAX_COEFFICIENTS:
        raise InputError(f"frequency support {total} exceeds the cap {MAX_COEFFICIENTS}")

    tuples = []                       # (output frequency, coefficient, [phase per factor])
    for tup in itertools.product(*[range(len(c)) for _, c in data]):
        ks = [data[j][0][i] for j, i in enumerate(tup)]
        coef = complex(np.prod([data[j][1][i] for j, i in enumerate(tup)]))
        if S.kind == "cyclic_permutation":
            phases = [ph.to_fixed(Fraction(int(k[0]) * S.step % S.m, S.m)) for k in ks]
            out_k = tuple([int(sum(int(k[0]) for k in ks)) % S.m])
        else:
            phases = [S.shift_phases(np.asarray(k)[None, :])[0] for k in ks]
            out_k = tuple(int(v) for v in np.sum(ks, axis=0))
        tuples.append((out_k, coef, phases))

    gen = cfg.weights.generator
    T = len(tuples)

    def summand(n):
        a = np.asarray(gen(n), dtype=np.complex128)
        pv = [p.values(n) for p in polys]
        out = np.empty((T, n.size), dtype=np.complex128)
        for t, (_, _, phases) in enumerate(tuples):
            turns = np.zeros(n.size)
            for b, m in zip(phases, pv):
                turns += ph.frac_mul(b, m)
            out[t] = a * ph.unit(turns - np.floor(turns))
        return out

    hs = cfg.horizons
    sums = partial_sums(summand, hs, threads)          # (checkpoints, T)
    freq_index: dict = {}
    for out_k, _, _ in tuples:
        freq_index.setdefault(out_k, len(freq_index))
    K = len(freq_index)
    coefs = np.zeros((len(hs), K), dtype=np.complex128)
    for t, (out_k, c, _) in enumerate(tuples):
        coefs[:, freq_index[out_k]] += c * sums[:, t] / np.asarray(hs, dtype=np.float64)
    freqs = np.array(list(freq_index), dtype=np.int64).reshape(K, -1)

    norms = [float(np.sqrt(np.sum(np.abs(row) ** 2))) for row in coefs]
    for row, nrm in zip(coefs, norms):
        # Parseval bookkeeping: norm and coefficient energy must agree
        assert abs(nrm ** 2 - float(np.sum(row.real ** 2 + row.imag ** 2))) <= 1e-12 * max(1.0, nrm ** 2)
    cauchy = [0.0] + [float(np.linalg.norm(coefs[i] - coefs[i - 1])) for i in range(1, len(hs))]
    zero = freq_index.get(tuple([0] * freqs.shape[1]))
    means = [complex(coefs[i, zero]) if zero is not None else 0j for i in range(len(hs))]
    verdict = assign_verdict(hs, coefs, tol)
    trace = AverageTrace(hs, means, verdict, None, norms, cfg.weights.label)
    return PolyAverageResult(trace, freqs, coefs, cauchy)


# ---------------------------------------------------------------------------
# Sampled universality report
# ---------------------------------------------------------------------------

@dataclass
class UniversalReport:
    """Verdict matrix ``verdicts[w][t]`` for weights w and towers t.

    A tower flips when its verdict kind is not the same for every weight.
    """

    weight_labels: list
    verdicts: list
    traces: list
    flipped_towers: list

    @property
    def flip_count(self) -> int:
        return len(self.flipped_towers)

    def summary(self) -> dict:
        return {
            "weights": self.weight_labels,
            "towers": len(self.verdicts[0]) if self.verdicts else 0,
            "kinds": [[v.kind for v in row] for row in self.verdicts],
            "flipped_towers": self.flipped_towers,
            "flip_count": self.flip_count,
        }


def universal_family_report(weights, towers, horizons=None, *, tol: float = DEFAULT_TOL,
                            threads: int = 1) -> UniversalReport:
    """Run every weight against every tower (a list of factors) of a fixed sample."""
    weights, towers = list(weights), list(towers)
    if len(weights) < 2 or len(towers) < 2:
        raise InputError("need at least two weights and two towers")
    if len(towers) > 10:
        raise InputError("the sampled tower family is capped at 10")
    hs = horizons if horizons is not None else dyadic_horizons(POINTWISE_HORIZON)
    verdicts, traces = [], []
    for w in weights:
        row, trow = [], []
        for tower in towers:
            tr = multiple_rtt_average(RttConfig(w, list(tower), hs), tol=tol, threads=threads)
            row.append(tr.verdict)
            trow.append(tr)
        verdicts.append(row)
        traces.append(trow)
    flipped = [t for t in range(len(towers))
               if len({verdicts[w][t].kind for w in range(len(weights))}) > 1]
    return UniversalReport([w.label for w in weights], verdicts, traces, flipped)
