"""Weight sequences, Cesaro machinery and almost-periodic sequences.

Sequences are indexed from ``n = 1``.  A :class:`WeightSequence` wraps a
vectorized generator (int64 index array -> complex array) together with a
declared bound on ``|a_n|``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from . import phase as ph
from .errors import InputError
from .summation import compensated_sum, partial_sums

MAX_HORIZON = 1 << 32
DEFAULT_TOL = 1e-3


# ---------------------------------------------------------------------------
# Sequences
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class WeightSequence:
    """A bounded complex sequence ``(a_n)_{n>=1}``.

    ``generator`` must be pure: evaluating the same index twice gives the
    same value.
    """

    generator: Callable[[np.ndarray], np.ndarray]
    sup_bound: float
    label: str = ""

    def take(self, indices) -> np.ndarray:
        idx = np.asarray(indices, dtype=np.int64)
        out = np.asarray(self.generator(idx.ravel()), dtype=np.complex128)
        return out.reshape(idx.shape)

    def values(self, start: int, stop: int) -> np.ndarray:
        """Values for ``start <= n < stop``."""
        return self.take(np.arange(start, stop, dtype=np.int64))

    def __call__(self, n: int) -> complex:
        return complex(self.take(np.array([n]))[0])

    def __add__(self, other: "WeightSequence") -> "WeightSequence":
        f, g = self.generator, other.generator
        return WeightSequence(lambda n: f(n) + g(n), self.sup_bound + other.sup_bound,
                              f"({self.label} + {other.label})")

    def __sub__(self, other: "WeightSequence") -> "WeightSequence":
        return self + other.scale(-1.0)

    def __mul__(self, other: "WeightSequence") -> "WeightSequence":
        f, g = self.generator, other.generator
        return WeightSequence(lambda n: f(n) * g(n), self.sup_bound * other.sup_bound,
                              f"({self.label} * {other.label})")

    def scale(self, c: complex) -> "WeightSequence":
        f = self.generator
        return WeightSequence(lambda n: c * f(n), abs(c) * self.sup_bound,
                              f"{c}*{self.label}")

    def conj(self) -> "WeightSequence":
        f = self.generator
        return WeightSequence(lambda n: np.conj(f(n)), self.sup_bound, f"conj({self.label})")

    def modulus(self) -> "WeightSequence":
        f = self.generator
        return WeightSequence(lambda n: np.abs(f(n)).astype(np.complex128),
                              self.sup_bound, f"|{self.label}|")


def constant(value: complex = 1.0) -> WeightSequence:
    return WeightSequence(lambda n: np.full(n.shape, value, dtype=np.complex128),
                          abs(value), f"const({value})")


def geometric(ratio: complex) -> WeightSequence:
    """a_n = ratio**n for |ratio| <= 1."""
    if abs(ratio) > 1:
        raise InputError("geometric ratio must satisfy |ratio| <= 1")
    return WeightSequence(lambda n: np.power(complex(ratio), n.astype(np.float64)),
                          abs(ratio), f"geometric({ratio})")


def square_indicator() -> WeightSequence:
    """1 at perfect squares, 0 elsewhere."""
    def gen(n):
        r = np.floor(np.sqrt(n.astype(np.float64))).astype(np.int64)
        r = np.where(r * r > n, r - 1, r)
        r = np.where((r + 1) * (r + 1) <= n, r + 1, r)
        return (r * r == n).astype(np.complex128)
    return WeightSequence(gen, 1.0, "squares")


# ---------------------------------------------------------------------------
# Trigonometric polynomials (the almost-periodic part)
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TrigPolynomial:
    """n -> sum_k c_k lambda_k**n with |lambda_k| = 1.

    Frequencies are held as fixed-point phases (turns); ``lambda_k**n`` is
    evaluated as exp(2 pi i frac(n * phase_k)).
    """

    coefficients: tuple
    phases: tuple

    def __post_init__(self):
        if len(self.coefficients) != len(self.phases):
            raise InputError("coefficient/frequency count mismatch")
        f = [ph.from_fixed(a) for a in self.phases]
        for i in range(len(f)):
            for j in range(i):
                d = abs(f[i] - f[j])
                if min(d, 1.0 - d) * 2 * np.pi <= 1e-12:
                    raise InputError("frequencies must be pairwise distinct")

    @classmethod
    def from_terms(cls, terms) -> "TrigPolynomial":
        """Build from (coefficient, frequency) pairs with unimodular frequencies."""
        coefs, phases = [], []
        for c, lam in terms:
            lam = complex(lam)
            if abs(abs(lam) - 1.0) > 1e-12:
                raise InputError(f"frequency {lam} is not unimodular")
            coefs.append(complex(c))
            phases.append(ph.angle_to_fixed(lam))
        return cls(tuple(coefs), tuple(phases))

    @classmethod
    def from_turns(cls, terms) -> "TrigPolynomial":
        """Build from (coefficient, phase in turns) pairs; turns may be "golden"."""
        return cls(tuple(complex(c) for c, _ in terms),
                   tuple(ph.to_fixed(t) for _, t in terms))

    @property
    def frequencies(self) -> list[complex]:
        return [complex(ph.unit(ph.from_fixed(a))) for a in self.phases]

    @property
    def turns(self) -> list[float]:
        return [ph.from_fixed(a) for a in self.phases]

    def __len__(self):
        return len(self.coefficients)

    def __call__(self, n) -> np.ndarray | complex:
        scalar = np.ndim(n) == 0
        idx = np.atleast_1d(np.asarray(n, dtype=np.int64))
        out = np.zeros(idx.shape, dtype=np.complex128)
        for c, a in zip(self.coefficients, self.phases):
            out += c * ph.unit(ph.frac_mul(a, idx))
        return complex(out[0]) if scalar else out

    def sup_bound(self) -> float:
        return float(sum(abs(c) for c in self.coefficients))

    def as_sequence(self, label: str = "trigpoly") -> WeightSequence:
        return WeightSequence(self.__call__, self.sup_bound(), label)

    def drop(self, k: int) -> "TrigPolynomial":
        keep = [i for i in range(len(self)) if i != k]
        return TrigPolynomial(tuple(self.coefficients[i] for i in keep),
                              tuple(self.phases[i] for i in keep))


def character(turns) -> WeightSequence:
    """a_n = exp(2 pi i n beta); ``turns`` is beta (float, Fraction, "golden")."""
    return TrigPolynomial.from_turns([(1.0, turns)]).as_sequence(f"char({turns})")


def trigpoly_eval(p: TrigPolynomial, n: int) -> complex:
    return p(n)


# ---------------------------------------------------------------------------
# Traces and verdicts
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Verdict:
    """Finite-horizon convergence verdict.

    ``kind`` is ``"converged"`` (``limit``, ``radius``), ``"diverged"``
    (``gap`` = diameter of the tail averages) or ``"undecided"``.
    ``anchor`` is the first checkpoint covered by the converged radius.
    """

    kind: str
    limit: complex | None = None
    radius: float | None = None
    gap: float | None = None
    anchor: int | None = None

    def as_dict(self) -> dict:
        d = {"kind": self.kind, "radius": self.radius, "gap": self.gap, "anchor": self.anchor}
        if self.limit is not None:
            d["limit"] = {"re": self.limit.real, "im": self.limit.imag}
        else:
            d["limit"] = None
        return d


def _is_dyadic(n: int) -> bool:
    return n > 0 and n & (n - 1) == 0


def assign_verdict(checkpoints: Sequence[int], values, tol: float = DEFAULT_TOL) -> Verdict:
    """Dyadic Cauchy rule.

    Converged when every value at checkpoints from the third-to-last dyadic
    checkpoint onward lies within ``tol`` of the value at the last dyadic
    checkpoint.  Diverged when the diameter of the tail values (last half of
    the dyadic checkpoints) exceeds ``10 * tol``.  Values may be scalars or
    vectors (Euclidean distance).  Without three dyadic checkpoints the last
    three checkpoints are used instead.
    """
    cps = list(checkpoints)
    vals = np.asarray(values, dtype=np.complex128)
    if vals.ndim == 1:
        vals = vals[:, None]
    dyadic = [i for i, n in enumerate(cps) if _is_dyadic(n)]
    pool = dyadic if len(dyadic) >= 3 else list(range(len(cps)))
    anchor_i = pool[max(0, len(pool) - 3)]
    last_i = pool[-1]
    limit_vec = vals[last_i]
    dev = np.linalg.norm(vals[anchor_i:] - limit_vec, axis=1)
    radius = float(dev.max())
    scalar_limit = complex(limit_vec[0]) if vals.shape[1] == 1 else None
    if radius <= tol:
        return Verdict("converged", scalar_limit, radius, None, cps[anchor_i])
    tail = pool[len(pool) // 2:] if len(pool) >= 4 else pool
    tv = vals[tail]
    gap = float(np.max(np.linalg.norm(tv[:, None, :] - tv[None, :, :], axis=2)))
    if gap > 10 * tol:
        return Verdict("diverged", None, None, gap, None)
    return Verdict("undecided", None, radius, gap, None)


@dataclass
class AverageTrace:
    """Checkpointed partial averages A_N with a convergence verdict.

    ``bounds`` and ``l2norms`` are optional per-checkpoint columns.
    """

    checkpoints: list
    values: list
    verdict: Verdict
    bounds: list | None = None
    l2norms: list | None = None
    label: str = ""

    def __post_init__(self):
        if len(self.checkpoints) != len(self.values):
            raise InputError("checkpoints and values differ in length")
        if any(b <= a for a, b in zip(self.checkpoints, self.checkpoints[1:])):
            raise InputError("checkpoints must be strictly increasing")

    def value_at(self, n: int) -> complex:
        return self.values[self.checkpoints.index(n)]

    def rows(self):
        """(N, re, im, l2norm or None, bound or None) tuples."""
        for i, n in enumerate(self.checkpoints):
            v = self.values[i]
            yield (n, v.real, v.imag,
                   None if self.l2norms is None else self.l2norms[i],
                   None if self.bounds is None else self.bounds[i])


def check_horizons(horizons) -> list[int]:
    hs = [int(h) for h in horizons]
    if not hs:
        raise InputError("horizons must be nonempty")
    if hs[0] < 1:
        raise InputError("horizons must be positive")
    if any(b <= a for a, b in zip(hs, hs[1:])):
        raise InputError("horizons must be strictly increasing")
    if hs[-1] > MAX_HORIZON:
        raise InputError(f"horizon {hs[-1]} exceeds the cap 2**32")
    return hs


def dyadic_horizons(top: int, first: int = 4) -> list[int]:
    """[2**first, ..., 2**m] with 2**m <= top, plus ``top`` itself if not dyadic."""
    hs = [1 << m for m in range(first, top.bit_length()) if (1 << m) <= top]
    if not hs or hs[-1] != top:
        hs.append(top)
    return hs


def average_trace(summand, horizons, *, tol: float = DEFAULT_TOL, threads: int = 1,
                  bound_summand=None, bound_scale: float = 1.0, label: str = "") -> AverageTrace:
    """Trace of (1/N) sum_{n<=N} summand(n).

    With ``bound_summand`` the trace also carries ``bound_scale * (1/N) sum
    bound_summand(n)`` per checkpoint, computed in the same pass.
    """
    hs = check_horizons(horizons)
    if bound_summand is None:
        sums = partial_sums(summand, hs, threads)[:, 0]
        bounds = None
    else:
        def both(n):
            return np.stack([np.asarray(summand(n), dtype=np.complex128),
                             np.asarray(bound_summand(n), dtype=np.complex128)])
        s = partial_sums(both, hs, threads)
        sums = s[:, 0]
        bounds = [bound_scale * float(s[i, 1].real) / h for i, h in enumerate(hs)]
    values = [complex(sums[i]) / h for i, h in enumerate(hs)]
    return AverageTrace(hs, values, assign_verdict(hs, values, tol), bounds, None, label)


def cesaro_trace(seq: WeightSequence, horizons, *, absolute: bool = False,
                 tol: float = DEFAULT_TOL, threads: int = 1) -> AverageTrace:
    """Cesaro averages of ``a_n`` (or ``|a_n|`` with ``absolute=True``)."""
    gen = seq.generator
    if absolute:
        summand = lambda n: np.abs(gen(n))  # noqa: E731
    else:
        summand = lambda n: np.asarray(gen(n), dtype=np.complex128)  # noqa: E731
    return average_trace(summand, horizons, tol=tol, threads=threads, label=seq.label)


def cesaro_null_check(seq: WeightSequence, horizon: int, tol: float) -> tuple[bool, float]:
    """Return (mean |c_n| over n <= horizon is <= tol, that mean)."""
    if horizon < 1:
        raise InputError("horizon must be >= 1")
    gen = seq.generator
    s = partial_sums(lambda n: np.abs(gen(n)), [horizon])[0, 0]
    residual = float(s) / horizon
    return residual <= tol, residual


# ---------------------------------------------------------------------------
# Koopman-von Neumann extraction
# ---------------------------------------------------------------------------

@dataclass
class DensityOneSet:
    """Finite-horizon density-one index set J in {1, ..., horizon}.

    ``cutoffs[k]`` is N_k for certified level k; ``certified_levels`` counts
    the levels whose cutoff exists below the horizon.  ``status`` is
    ``"certified"`` when every requested level was found, else
    ``"undecided"``.
    """

    mask: np.ndarray
    levels: list
    cutoffs: list
    certified_levels: int
    status: str

    @property
    def horizon(self) -> int:
        return len(self.mask)

    def membership(self, n: int) -> bool:
        if not 1 <= n <= self.horizon:
            raise InputError(f"index {n} outside 1..{self.horizon}")
        return bool(self.mask[n - 1])

    def count(self, N: int) -> int:
        return int(np.count_nonzero(self.mask[:N]))

    def observed_density(self, N: int) -> float:
        if not 1 <= N <= self.horizon:
            raise InputError(f"N={N} outside 1..{self.horizon}")
        return self.count(N) / N

    def level_of(self, n: int) -> int | None:
        """Certified level k governing index n (n in (N_k, N_{k+1}]), or None."""
        k = int(np.searchsorted(self.cutoffs, n, side="left")) - 1
        return k if k >= 0 else None


def kvn_extract(seq: WeightSequence, horizon: int, levels: Sequence[float]) -> DensityOneSet:
    """Density-one subsequence along which ``c_n`` tends to zero.

    Level k uses threshold eps_k and cutoff N_k, the first index (after
    N_{k-1}) where the running mean of |c_n| is <= eps_k**2.  J holds every
    n <= N_1 and, for n in (N_k, N_{k+1}], those with |c_n| <= eps_k.
    """
    eps = [float(e) for e in levels]
    if not eps or any(e <= 0 for e in eps) or any(b >= a for a, b in zip(eps, eps[1:])):
        raise InputError("levels must be positive and strictly decreasing")
    if horizon < 1:
        raise InputError("horizon must be >= 1")
    mags = np.abs(seq.values(1, horizon + 1))
    means = np.cumsum(mags) / np.arange(1, horizon + 1)
    cutoffs = []
    prev = 0
    for e in eps:
        hits = np.nonzero(means[prev:] <= e * e)[0]
        if len(hits) == 0:
            break
        nk = prev + int(hits[0]) + 1
        if cutoffs and nk <= cutoffs[-1]:
            nk = cutoffs[-1] + 1
            if nk > horizon:
                break
        cutoffs.append(nk)
        prev = nk
    mask = np.ones(horizon, dtype=bool)
    for k, nk in enumerate(cutoffs):
        end = cutoffs[k + 1] if k + 1 < len(cutoffs) else horizon
        seg = slice(nk, end)                 # indices nk+1 .. end
        mask[seg] = mags[seg] <= eps[k]
    status = "certified" if len(cutoffs) == len(eps) else "undecided"
    return DensityOneSet(mask, eps, cutoffs, len(cutoffs), status)


# ---------------------------------------------------------------------------
# Bohr coefficients and sup-distance
# ---------------------------------------------------------------------------

def bohr_coefficient(seq: WeightSequence, lam, horizon: int) -> complex:
    """(1/N) sum_{n<=N} a_n conj(lam)**n.

    ``lam`` is a unimodular complex number or a phase in turns given as a
    Fraction / "golden" string.
    """
    if isinstance(lam, (complex, float, int)) and not isinstance(lam, bool):
        z = complex(lam)
        if abs(abs(z) - 1.0) > 1e-9:
            raise InputError(f"{z} is not unimodular")
        a = ph.angle_to_fixed(z)
    else:
        a = ph.to_fixed(lam)
    gen = seq.generator
    s = partial_sums(lambda n: gen(n) * ph.unit(-ph.frac_mul(a, n)), [horizon])[0, 0]
    return complex(s) / horizon


def ap_distance(p: TrigPolynomial, seq: WeightSequence, window) -> float:
    """max over n in ``window`` of |p(n) - a_n|."""
    idx = np.asarray(list(window) if not isinstance(window, np.ndarray) else window,
                     dtype=np.int64)
    if idx.size == 0:
        raise InputError("window must be nonempty")
    return float(np.max(np.abs(p(idx) - seq.take(idx))))


__all__ = [
    "WeightSequence", "TrigPolynomial", "AverageTrace", "DensityOneSet", "Verdict",
    "constant", "geometric", "square_indicator", "character",
    "trigpoly_eval", "assign_verdict", "average_trace", "cesaro_trace",
    "cesaro_null_check", "kvn_extract", "bohr_coefficient", "ap_distance",
    "check_horizons", "dyadic_horizons", "compensated_sum",
]
