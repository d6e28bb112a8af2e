"""The right shift on l^1 and why it does not give good weights.

For ``x = (t_j)`` with finite support and a bounded functional ``x' = (s_j)``,
``<T^n x, x'> = sum_j t_j s_{n+j}``.  Up to an error of at most
``2 J ||x||_1 ||x'||_inf / N`` its lambda-twisted Cesaro averages equal those
of ``(lambda^n s_n)`` times ``sum_j conj(lambda)^j t_j``, so any Cesaro
divergent ``x'`` (even of tiny sup norm) yields a divergent weight.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable

import numpy as np

from . import phase as ph
from .errors import HypothesisError, InputError
from .seqcore import WeightSequence
from .summation import compensated_sum, partial_sums

MAX_SUPPORT = 1 << 16
RADIAL_GRID = 1 << 10
RADIAL_R = 1.0 - 2.0 ** -10


@dataclass(frozen=True)
class L1Vector:
    """Finitely supported x = (t_1, ..., t_J) in l^1."""

    entries: np.ndarray
    one_norm: float = field(init=False)

    def __post_init__(self):
        t = np.asarray(self.entries, dtype=np.complex128).ravel()
        if not 1 <= t.size <= MAX_SUPPORT:
            raise InputError(f"support length must be 1..{MAX_SUPPORT}")
        object.__setattr__(self, "entries", t)
        object.__setattr__(self, "one_norm", float(compensated_sum(np.abs(t))))

    @property
    def support(self) -> int:
        return self.entries.size

    def total(self) -> complex:
        return complex(compensated_sum(self.entries))

    @classmethod
    def unit(cls, j: int = 1, length: int | None = None) -> "L1Vector":
        t = np.zeros(length or j, dtype=np.complex128)
        t[j - 1] = 1.0
        return cls(t)


@dataclass(frozen=True)
class BoundedFunctional:
    """x' = (s_j)_{j>=1} in l^inf given by a vectorized generator.

    Piecewise-constant functionals also carry ``block_edges`` and
    ``block_values`` so shift sequences can be evaluated in O(N + J).
    """

    generator: Callable[[np.ndarray], np.ndarray]
    sup_norm: float
    label: str = ""
    block_edges: tuple | None = None      # block k covers [edges[k], edges[k+1])
    block_values: Callable[[int], complex] | None = None

    def take(self, j) -> np.ndarray:
        return np.asarray(self.generator(np.asarray(j, dtype=np.int64)), dtype=np.complex128)

    def __call__(self, j: int) -> complex:
        return complex(self.take(np.array([j]))[0])

    def scale(self, c: complex) -> "BoundedFunctional":
        f = self.generator
        bv = self.block_values
        return BoundedFunctional(lambda j: c * f(j), abs(c) * self.sup_norm, f"{c}*{self.label}",
                                 self.block_edges,
                                 None if bv is None else (lambda k: c * bv(k)))


def constant_functional(value: complex = 1.0) -> BoundedFunctional:
    return BoundedFunctional(lambda j: np.full(j.shape, value, dtype=np.complex128),
                             abs(value), f"const({value})")


def block_sign_sequence(delta: float, growth: int = 2, alternating: bool = True,
                        max_index: int = 1 << 40) -> BoundedFunctional:
    """s_j = delta * (-1)**k for j in block k = [growth**k, growth**(k+1)).

    With ``alternating=False`` every block carries +delta (a convergent
    control).  Cesaro averages of the alternating version oscillate between
    about +-delta (growth-1)/(growth+1) at block ends.
    """
    if delta <= 0:
        raise InputError("amplitude must be positive")
    if growth < 2:
        raise InputError("block growth factor must be >= 2")
    edges = [1]
    while edges[-1] <= max_index:
        edges.append(edges[-1] * growth)
    edges_arr = np.array(edges, dtype=np.int64)

    def sign(k):
        return -1.0 if (alternating and k % 2) else 1.0

    def gen(j):
        k = np.searchsorted(edges_arr, j, side="right") - 1
        s = np.where((k % 2 == 1) & alternating, -delta, delta)
        return s.astype(np.complex128)

    return BoundedFunctional(gen, float(delta),
                             f"block_sign(delta={delta}, growth={growth}"
                             f"{'' if alternating else ', constant'})",
                             tuple(edges), lambda k: delta * sign(k))


def rotated_functional(xp: BoundedFunctional, lam) -> BoundedFunctional:
    """j -> lam**j s_j (an invertible isometry of l^inf)."""
    a = _phase_of(lam)
    f = xp.generator
    return BoundedFunctional(lambda j: ph.unit(ph.frac_mul(a, j)) * f(j), xp.sup_norm,
                             f"rot({xp.label})")


def _phase_of(lam) -> int:
    if isinstance(lam, (complex, float, int)) and not isinstance(lam, bool):
        z = complex(lam)
        if abs(abs(z) - 1.0) > 1e-9:
            raise InputError(f"{z} is not unimodular")
        return ph.angle_to_fixed(z)
    return ph.to_fixed(lam)


def _window(xp: BoundedFunctional, lo: int, hi: int) -> np.ndarray:
    return xp.take(np.arange(lo, hi + 1, dtype=np.int64))


def _shift_block(x: L1Vector, xp: BoundedFunctional, n: np.ndarray) -> np.ndarray:
    """sum_j t_j s_{n+j} on a contiguous index range, piecewise-constant x'."""
    t = x.entries
    J = t.size
    prefix = np.concatenate([[0], np.cumsum(t)])           # prefix[m] = t_1 + .. + t_m
    n0, n1 = int(n[0]), int(n[-1])
    out = xp.take(n + 1) * prefix[J]
    edges = xp.block_edges
    # each block edge c in (n+1, n+J] changes s from block k-1 to block k
    for k in range(1, len(edges)):
        c = edges[k]
        if c > n1 + J:
            break
        if c < n0 + 2:
            continue
        jump = xp.block_values(k) - xp.block_values(k - 1)
        lo, hi = max(n0, c - J), min(n1, c - 2)
        sel = slice(lo - n0, hi - n0 + 1)
        m = c - n[sel] - 1                                   # t_j with j >= m + 1 see the jump
        out[sel] += jump * (prefix[J] - prefix[m])
    return out


def shift_sequence(x: L1Vector, xp: BoundedFunctional) -> WeightSequence:
    """a_n = <T^n x, x'> = sum_{j=1..J} t_j s_{n+j}."""
    t = x.entries
    J = t.size

    def gen(n):
        n = np.asarray(n, dtype=np.int64)
        if n.size == 0:
            return np.zeros(0, dtype=np.complex128)
        contiguous = n.size > 1 and np.all(np.diff(n) == 1)
        if contiguous and xp.block_edges is not None:
            return _shift_block(x, xp, n)
        if contiguous:
            s = _window(xp, int(n[0]) + 1, int(n[-1]) + J)
            return np.convolve(s, t[::-1], mode="valid")
        out = np.zeros(n.size, dtype=np.complex128)
        for j in range(J):
            out += t[j] * xp.take(n + j + 1)
        return out

    return WeightSequence(gen, x.one_norm * xp.sup_norm, f"shift({xp.label})")


@dataclass(frozen=True)
class BoundCheck:
    lhs: float
    rhs: float
    holds: bool


def cex_bound_trace(x: L1Vector, xp: BoundedFunctional, lam, horizons,
                    tail_eps: float = 0.0, threads: int = 1) -> list[BoundCheck]:
    """Compare the twisted averages of <T^n x, x'> with those of s_n times
    sum_j conj(lam)^j t_j against 2 J ||x||_1 ||x'||/N + 2 ||x'|| eps,
    at every N in ``horizons`` (one summation pass)."""
    hs = [int(h) for h in horizons]
    if not hs or hs[0] < 1 or any(b <= a for a, b in zip(hs, hs[1:])):
        raise InputError("horizons must be positive and strictly increasing")
    a = _phase_of(lam)
    seq = shift_sequence(x, xp).generator
    J = x.support
    twist = lambda n: ph.unit(ph.frac_mul(a, n))  # noqa: E731
    js = np.arange(1, J + 1, dtype=np.int64)
    hat = complex(compensated_sum(np.conj(twist(js)) * x.entries))
    sums = partial_sums(lambda n: np.stack([twist(n) * seq(n), twist(n) * xp.take(n)]),
                        hs, threads)
    out = []
    for N, (s_a, s_s) in zip(hs, sums):
        lhs = float(abs(s_a / N - s_s / N * hat))
        rhs = 2 * J * x.one_norm * xp.sup_norm / N + 2 * xp.sup_norm * tail_eps
        out.append(BoundCheck(lhs, rhs, bool(lhs <= rhs + 1e-10)))
    return out


def cex_bound_check(x: L1Vector, xp: BoundedFunctional, lam, N: int,
                    tail_eps: float = 0.0) -> BoundCheck:
    """Single-horizon form of :func:`cex_bound_trace`."""
    if N < 1:
        raise InputError("N must be >= 1")
    return cex_bound_trace(x, xp, lam, [N], tail_eps)[0]


@dataclass(frozen=True)
class DivergenceWitness:
    liminf_est: float
    limsup_est: float
    gap: float
    checkpoints: list
    averages: list


def block_boundaries(xp: BoundedFunctional, horizon: int) -> list[int]:
    """Ends of the blocks of x' (N = edge - 1) up to ``horizon``."""
    if xp.block_edges is None:
        raise InputError("functional has no block structure")
    return [e - 1 for e in xp.block_edges[1:] if e - 1 <= horizon]


def divergence_witness(x: L1Vector, xp: BoundedFunctional, horizon: int,
                       tail_blocks: int = 6, threads: int = 1) -> DivergenceWitness:
    """Cesaro averages of <T^n x, x'> at block ends; min/max over the last blocks.

    Averages are projected on the direction of sum_j t_j, which carries the
    oscillation of x'.
    """
    if horizon < 1 << 16 or horizon & (horizon - 1):
        raise InputError("horizon must be a power of two >= 2**16")
    total = x.total()
    if abs(total) <= 1e-12:
        raise HypothesisError("sum of t_j vanishes: the divergence argument needs "
                              "sum t_j != 0", "nonzero total mass")
    cps = block_boundaries(xp, horizon)
    cps = [c for c in cps if c >= 1]
    if horizon not in cps:
        cps.append(horizon)
    gen = shift_sequence(x, xp).generator
    sums = partial_sums(gen, cps, threads)[:, 0]
    avgs = [complex(s) / n for s, n in zip(sums, cps)]
    direction = np.conj(total) / abs(total)
    proj = [float((v * direction).real) for v in avgs]
    tail = proj[-tail_blocks:]
    lo, hi = min(tail), max(tail)
    return DivergenceWitness(lo, hi, hi - lo, cps, avgs)


def radial_eval(x: L1Vector, r: float, lam) -> complex:
    """f(r conj(lam)) for f(z) = sum_j t_j z**j."""
    if not 0.0 <= r <= 1.0:
        raise InputError("r must lie in [0, 1]")
    a = _phase_of(lam)
    js = np.arange(1, x.support + 1, dtype=np.int64)
    terms = x.entries * r ** js.astype(np.float64) * ph.unit(-ph.frac_mul(a, js))
    return complex(compensated_sum(terms))


def radial_scan(x: L1Vector, grid: int = RADIAL_GRID, r: float = RADIAL_R,
                floor: float = 1e-3) -> list[tuple[int, complex]]:
    """Roots of unity lam = exp(2 pi i m / grid) with |f(r conj(lam))| > floor * ||x||_1."""
    out = []
    for m in range(grid):
        v = radial_eval(x, r, Fraction(m, grid))
        if abs(v) > floor * x.one_norm:
            out.append((m, v))
    return out
