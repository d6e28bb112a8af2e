"""Measure-preserving systems on tori and cyclic groups, observables,
integer polynomials, polynomial-phase weights and correlation sequences.

Rotation numbers are fixed-point phases (see :mod:`ergweights.phase`), so
``S**n y`` is reduced mod 1 exactly for any int64 ``n``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from . import phase as ph
from .errors import InputError
from .seqcore import WeightSequence

KINDS = ("circle_rotation", "torus_rotation", "skew_product", "cyclic_permutation")
MAX_POLY_DEGREE = 8
MAX_PHASE_DEGREE = 4
ACC_BITS = 128                     # signed accumulator width for IntPolynomial
MAX_TUPLES = 100_000


# ---------------------------------------------------------------------------
# Systems
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DynamicalSystem:
    """An invertible measure-preserving map.

    * ``circle_rotation``: y -> y + alpha on T^1
    * ``torus_rotation``: y -> y + alpha (vector, d <= 3) on T^d
    * ``skew_product``: (x, y) -> (x + alpha, y + x) on T^2
    * ``cyclic_permutation``: j -> j + step on Z/m

    ``alphas`` are fixed-point phases.  The invariant measure is Lebesgue on
    the torus, uniform on Z/m.
    """

    kind: str
    alphas: tuple = ()
    m: int = 0
    step: int = 1

    def __post_init__(self):
        if self.kind not in KINDS:
            raise InputError(f"unknown system kind {self.kind!r}")
        if self.kind == "cyclic_permutation":
            if self.m < 1:
                raise InputError("cyclic_permutation needs m >= 1")
        elif not 1 <= len(self.alphas) <= 3:
            raise InputError("torus systems need 1..3 rotation numbers")
        if self.kind == "skew_product" and len(self.alphas) != 1:
            raise InputError("skew_product takes one rotation number")

    @property
    def dim(self) -> int:
        if self.kind == "cyclic_permutation":
            return 0
        if self.kind == "skew_product":
            return 2
        return len(self.alphas)

    @property
    def is_torus(self) -> bool:
        return self.kind != "cyclic_permutation"

    @property
    def alpha_turns(self) -> list[float]:
        return [ph.from_fixed(a) for a in self.alphas]

    def orbit(self, y, ns) -> np.ndarray:
        """S**n y for every n in ``ns``: shape (len(ns), d) on tori, (len(ns),) on Z/m."""
        ns = np.asarray(ns, dtype=np.int64)
        if self.kind == "cyclic_permutation":
            y = int(y)
            return (y + (ns % self.m) * (self.step % self.m)) % self.m
        y = np.atleast_1d(np.asarray(y, dtype=np.float64))
        if y.shape != (self.dim,):
            raise InputError(f"point must have {self.dim} coordinates")
        if self.kind == "skew_product":
            a = self.alphas[0]
            x0, y0 = y
            xs = _add_mod1(x0, ph.frac_mul(a, ns))
            # n(n-1)/2 with the halving done first so |n| up to 2**32 stays in int64
            tri = np.where(ns % 2 == 0, (ns // 2) * (ns - 1), ns * ((ns - 1) // 2))
            ys = _add_mod1(_add_mod1(y0, ph.frac_mul(ph.to_fixed(x0), ns)), ph.frac_mul(a, tri))
            return np.stack([xs, ys], axis=1)
        cols = [_add_mod1(y[i], ph.frac_mul(a, ns)) for i, a in enumerate(self.alphas)]
        return np.stack(cols, axis=1)

    def map_points(self, pts, n: int) -> np.ndarray:
        """S**n applied to many points at once: (P, d) array on tori, (P,) on Z/m."""
        n = int(n)
        if self.kind == "cyclic_permutation":
            return (np.asarray(pts, dtype=np.int64) + n * self.step) % self.m
        pts = np.asarray(pts, dtype=np.float64).reshape(-1, self.dim)
        if self.kind == "skew_product":
            a = self.alphas[0]
            tri = n * (n - 1) // 2
            # frac(n x) exactly from the binary value of each x
            nx = np.array([ph.from_fixed(ph.to_fixed(float(x)) * n) for x in pts[:, 0]])
            xs = _add_mod1(pts[:, 0], ph.from_fixed(a * n))
            ys = _add_mod1(_add_mod1(pts[:, 1], nx), ph.from_fixed(a * tri))
            return np.stack([xs, ys], axis=1)
        cols = [_add_mod1(pts[:, i], ph.from_fixed(a * n)) for i, a in enumerate(self.alphas)]
        return np.stack(cols, axis=1)

    def shift_phases(self, ks: np.ndarray) -> list[int]:
        """Fixed-point phase k . alpha for each frequency row (rotations only)."""
        if self.kind not in ("circle_rotation", "torus_rotation"):
            raise InputError("frequency phases are defined for rotations only")
        out = []
        for k in np.atleast_2d(ks):
            out.append(sum(int(ki) * a for ki, a in zip(k, self.alphas)) % ph.ONE)
        return out


def _add_mod1(a, b):
    s = np.asarray(a, dtype=np.float64) + b
    s = s - np.floor(s)
    return np.where(s >= 1.0, 0.0, s)


def circle_rotation(alpha="golden") -> DynamicalSystem:
    return DynamicalSystem("circle_rotation", (ph.to_fixed(alpha),))


def torus_rotation(alphas) -> DynamicalSystem:
    return DynamicalSystem("torus_rotation", tuple(ph.to_fixed(a) for a in alphas))


def skew_product(alpha="golden") -> DynamicalSystem:
    return DynamicalSystem("skew_product", (ph.to_fixed(alpha),))


def cyclic_permutation(m: int, step: int = 1) -> DynamicalSystem:
    return DynamicalSystem("cyclic_permutation", (), int(m), int(step))


def iterate(S: DynamicalSystem, y, n: int):
    """S**n y for a single signed integer n."""
    pt = S.orbit(y, np.array([n], dtype=np.int64))[0]
    return int(pt) if S.kind == "cyclic_permutation" else pt


# ---------------------------------------------------------------------------
# Observables
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Observable:
    """Bounded observable: finite Fourier sum on T^d or a table on Z/m.

    Fourier form: ``freqs`` is an (K, d) int array and ``coefs`` the matching
    complex coefficients of exp(2 pi i k.y).  Table form: ``table`` of length m.
    """

    freqs: np.ndarray | None = None
    coefs: np.ndarray | None = None
    table: np.ndarray | None = None
    sup_bound: float = field(default=0.0)

    def __post_init__(self):
        if (self.table is None) == (self.freqs is None):
            raise InputError("observable needs exactly one of fourier data or a table")
        if self.table is not None:
            t = np.asarray(self.table, dtype=np.complex128).ravel()
            object.__setattr__(self, "table", t)
            bound = float(np.max(np.abs(t))) if t.size else 0.0
        else:
            f = np.atleast_2d(np.asarray(self.freqs, dtype=np.int64))
            c = np.asarray(self.coefs, dtype=np.complex128).ravel()
            if f.shape[0] != c.shape[0]:
                raise InputError("frequency/coefficient count mismatch")
            keep = np.abs(c) > 0
            f, c = f[keep], c[keep]
            # merge duplicate frequencies
            merged: dict = {}
            for k, v in zip(map(tuple, f), c):
                merged[k] = merged.get(k, 0) + v
            keys = sorted(merged)
            d = np.atleast_2d(np.asarray(self.freqs)).shape[1]
            f = np.array(keys, dtype=np.int64).reshape(len(keys), d)
            c = np.array([merged[k] for k in keys], dtype=np.complex128)
            object.__setattr__(self, "freqs", f)
            object.__setattr__(self, "coefs", c)
            bound = float(np.sum(np.abs(c)))
        if not self.sup_bound:
            object.__setattr__(self, "sup_bound", bound)

    @property
    def is_fourier(self) -> bool:
        return self.freqs is not None

    @property
    def dim(self) -> int:
        return self.freqs.shape[1] if self.is_fourier else 0

    def mean(self) -> complex:
        if self.is_fourier:
            zero = np.all(self.freqs == 0, axis=1)
            return complex(self.coefs[zero].sum())
        return complex(self.table.mean())

    def __call__(self, points) -> np.ndarray:
        if not self.is_fourier:
            return self.table[np.asarray(points, dtype=np.int64) % len(self.table)]
        pts = np.asarray(points, dtype=np.float64)
        if pts.ndim == 1:
            pts = pts[:, None] if self.dim == 1 else pts[None, :]
        out = np.zeros(pts.shape[0], dtype=np.complex128)
        for k, c in zip(self.freqs, self.coefs):
            t = pts @ k.astype(np.float64)
            out += c * ph.unit(t - np.floor(t))
        return out

    def fourier_on_cyclic(self) -> tuple[np.ndarray, np.ndarray]:
        """DFT of a table: g(j) = sum_k c_k exp(2 pi i k j / m)."""
        m = len(self.table)
        c = np.fft.fft(self.table) / m
        return np.arange(m, dtype=np.int64)[:, None], c


def fourier(terms, dim: int = 1, sup_bound: float = 0.0) -> Observable:
    """Observable from (k, coefficient) pairs; k an int or a d-tuple."""
    ks = [np.atleast_1d(np.asarray(k, dtype=np.int64)) for k, _ in terms]
    if any(k.shape != (dim,) for k in ks):
        raise InputError(f"frequencies must have {dim} components")
    return Observable(np.array(ks, dtype=np.int64).reshape(len(ks), dim),
                      np.array([c for _, c in terms], dtype=np.complex128),
                      sup_bound=sup_bound)


def exp_character(k=1, dim: int = 1) -> Observable:
    """exp(2 pi i k.y)."""
    return fourier([(k, 1.0)], dim)


def const_observable(c: complex = 1.0, dim: int = 1) -> Observable:
    return fourier([((0,) * dim, c)], dim)


def table(values) -> Observable:
    return Observable(table=np.asarray(values, dtype=np.complex128))


def observe_orbit(S: DynamicalSystem, g: Observable, y, indices) -> np.ndarray:
    """g(S**n y) for each requested n."""
    _check_compatible(S, g)
    return g(S.orbit(y, indices))


def _check_compatible(S: DynamicalSystem, g: Observable):
    if S.is_torus != g.is_fourier:
        raise InputError("Fourier observables live on tori, tables on Z/m")
    if S.is_torus and g.dim != S.dim:
        raise InputError(f"observable dimension {g.dim} != system dimension {S.dim}")
    if not S.is_torus and len(g.table) != S.m:
        raise InputError("table length must equal m")


# ---------------------------------------------------------------------------
# Integer polynomials
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class IntPolynomial:
    """p(n) = sum_d coefficients[d] n**d with integer coefficients, degree <= 8."""

    coefficients: tuple

    def __post_init__(self):
        cs = tuple(int(c) for c in self.coefficients)
        if any(c != f for c, f in zip(cs, self.coefficients)):
            raise InputError("coefficients must be integers")
        while len(cs) > 1 and cs[-1] == 0:
            cs = cs[:-1]
        if len(cs) - 1 > MAX_POLY_DEGREE:
            raise InputError(f"degree exceeds {MAX_POLY_DEGREE}")
        object.__setattr__(self, "coefficients", cs or (0,))

    @property
    def degree(self) -> int:
        return len(self.coefficients) - 1

    def __call__(self, n: int) -> int:
        return poly_eval(self, n)

    def values(self, ns) -> np.ndarray:
        """p(n) over an int64 array; OverflowError if any value leaves int64."""
        ns = np.asarray(ns, dtype=np.int64)
        if ns.size == 0:
            return ns.copy()
        top = int(np.max(np.abs(ns)))
        if sum(abs(c) * top ** d for d, c in enumerate(self.coefficients)) >= 1 << 63:
            obj = np.array([poly_eval(self, int(n)) for n in ns], dtype=object)
            raise OverflowError(f"p(n) leaves int64 range (max |n| = {top}); "
                                f"largest value {max(abs(v) for v in obj)}")
        out = np.zeros(ns.shape, dtype=np.int64)
        for c in reversed(self.coefficients):
            out = out * ns + c
        return out


def poly_eval(p: IntPolynomial, n: int) -> int:
    """Exact Horner evaluation in a signed 128-bit accumulator."""
    acc = 0
    limit = 1 << (ACC_BITS - 1)
    for c in reversed(p.coefficients):
        acc = acc * int(n) + c
        if not -limit <= acc < limit:
            raise OverflowError(f"p({n}) overflows the {ACC_BITS}-bit accumulator")
    return acc


def linear() -> IntPolynomial:
    return IntPolynomial((0, 1))


def monomial(d: int, c: int = 1) -> IntPolynomial:
    return IntPolynomial((0,) * d + (c,))


# ---------------------------------------------------------------------------
# Polynomial phases
# ---------------------------------------------------------------------------

def _exact_fixed_poly(fixed_coefs, n: int) -> int:
    acc = 0
    for c in reversed(fixed_coefs):
        acc = acc * n + c
    return acc % ph.ONE


def _fixed_to_turns(vals) -> np.ndarray:
    """Object array of fixed-point phases -> float turns in [0, 1)."""
    top = (np.asarray(vals, dtype=object) >> (ph.FIXED_BITS - 53)).astype(np.float64)
    return top * 2.0 ** -53


class _PolyPhase:
    """n -> exp(2 pi i p(n)) by exact finite differences in fixed point."""

    def __init__(self, coefs):
        self.fixed = [ph.to_fixed(c) for c in coefs]
        self.degree = len(self.fixed) - 1

    def _state(self, n0: int) -> list[int]:
        vals = [_exact_fixed_poly(self.fixed, n0 + i) for i in range(self.degree + 1)]
        diffs = []
        for _ in range(self.degree + 1):
            diffs.append(vals[0])
            vals = [(b - a) % ph.ONE for a, b in zip(vals, vals[1:])]
        return diffs                    # p(n0), Dp(n0), ..., D^deg p(n0)

    def turns_range(self, n0: int, length: int) -> np.ndarray:
        """frac(p(n)) for n0 <= n < n0 + length via running accumulators."""
        state = self._state(n0)
        seq = np.full(length, state[self.degree], dtype=object)
        for level in range(self.degree - 1, -1, -1):
            inc = np.cumsum(seq[:-1]) if length > 1 else np.zeros(0, dtype=object)
            nxt = np.empty(length, dtype=object)
            nxt[0] = state[level]
            nxt[1:] = (inc + state[level]) % ph.ONE
            seq = nxt
        return _fixed_to_turns(seq)

    def turns_at(self, ns) -> np.ndarray:
        return _fixed_to_turns([_exact_fixed_poly(self.fixed, int(n)) for n in ns])

    def __call__(self, n) -> np.ndarray:
        n = np.asarray(n, dtype=np.int64)
        if n.size == 0:
            return np.zeros(0, dtype=np.complex128)
        if n.size > 1 and np.all(np.diff(n) == 1):
            t = self.turns_range(int(n[0]), n.size)
        else:
            t = self.turns_at(n)
        return ph.unit(t)


def polyphase_weight(coefs) -> WeightSequence:
    """a_n = exp(2 pi i p(n)) for a real polynomial p (ascending coefficients).

    Coefficients may be floats, Fractions or "golden"; degree <= 4.
    """
    coefs = list(coefs) or [0]
    if len(coefs) - 1 > MAX_PHASE_DEGREE:
        raise InputError(f"polynomial phase degree exceeds {MAX_PHASE_DEGREE}")
    return WeightSequence(_PolyPhase(coefs), 1.0, f"polyphase({coefs})")


# ---------------------------------------------------------------------------
# Correlation sequences
# ---------------------------------------------------------------------------

def zero_sum_tuples(supports, cap: int = MAX_TUPLES):
    """Index tuples into each observable's support, with their size product checked."""
    total = 1
    for s in supports:
        total *= max(1, s)
    if total > cap:
        raise InputError(f"Fourier support product {total} exceeds cap {cap}")
    return itertools.product(*[range(s) for s in supports])


def correlation_sequence(S: DynamicalSystem, gs, ps) -> WeightSequence:
    """a_n = integral of prod_j g_j(S**p_j(n) y) dmu(y), integrated exactly."""
    gs, ps = list(gs), list(ps)
    if not gs or len(gs) != len(ps):
        raise InputError("need matching nonempty lists of observables and polynomials")
    for g in gs:
        try:
            _check_compatible(S, g)
        except InputError as exc:
            raise InputError(f"non-integrable representation: {exc}") from exc
    bound = float(np.prod([g.sup_bound for g in gs]))
    label = f"corr({S.kind}, k={len(gs)})"

    if S.kind == "cyclic_permutation":
        tables = [g.table for g in gs]
        m = S.m

        def gen(n):
            out = np.zeros(n.shape, dtype=np.complex128)
            base = np.arange(m, dtype=np.int64)
            shifts = [(p.values(n) % m) * (S.step % m) % m for p in ps]
            for i in range(n.size):
                prod = np.ones(m, dtype=np.complex128)
                for t, sh in zip(tables, shifts):
                    prod = prod * t[(base + sh[i]) % m]
                out[i] = prod.mean()
            return out
        return WeightSequence(gen, bound, label)

    supports = [len(g.coefs) for g in gs]
    terms = []
    for tup in zero_sum_tuples(supports):
        ks = [gs[j].freqs[i] for j, i in enumerate(tup)]
        coef = complex(np.prod([gs[j].coefs[i] for j, i in enumerate(tup)]))
        terms.append((ks, coef))

    if S.kind == "skew_product":
        a = S.alphas[0]
        live = [(ks, c) for ks, c in terms if sum(int(k[1]) for k in ks) == 0]

        def gen(n):
            pv = [p.values(n) for p in ps]
            out = np.zeros(n.shape, dtype=np.complex128)
            for ks, c in live:
                # g o S^m has frequency (a + b m, b) and phase (a m + b m(m-1)/2) alpha
                first = np.zeros(n.shape, dtype=np.int64)
                turns = np.zeros(n.shape)
                for k, m in zip(ks, pv):
                    first += int(k[0]) + int(k[1]) * m
                    turns += ph.frac_mul(a, int(k[0]) * m + int(k[1]) * ((m * (m - 1)) // 2))
                out += np.where(first == 0, c * ph.unit(turns - np.floor(turns)), 0.0)
            return out
        return WeightSequence(gen, bound, label)

    live = [(ks, c) for ks, c in terms if not np.any(np.sum(ks, axis=0))]
    shifts = [[S.shift_phases(k[None, :])[0] for k in ks] for ks, _ in live]

    def gen(n):
        pv = [p.values(n) for p in ps]
        out = np.zeros(n.shape, dtype=np.complex128)
        for (ks, c), betas in zip(live, shifts):
            turns = np.zeros(n.shape)
            for b, m in zip(betas, pv):
                turns += ph.frac_mul(b, m)
            out += c * ph.unit(turns - np.floor(turns))
        return out
    return WeightSequence(gen, bound, label)


# ---------------------------------------------------------------------------
# Quadrature (diagnostics)
# ---------------------------------------------------------------------------

def grid_points(d: int, m: int) -> np.ndarray:
    axes = [np.arange(m) / m] * d
    return np.stack([g.ravel() for g in np.meshgrid(*axes, indexing="ij")], axis=1)


def quadrature(g: Observable, S: DynamicalSystem | None = None, n: int = 0, m: int = 64) -> complex:
    """Uniform-grid (or full Z/m) average of g o S**n; exact for trig polynomials
    whose frequencies stay below m/2 in every coordinate."""
    if not g.is_fourier:
        pts = np.arange(len(g.table))
        if S is not None:
            pts = S.map_points(pts, n)
        return complex(g(pts).mean())
    pts = grid_points(g.dim, m)
    if S is not None and n:
        pts = S.map_points(pts, n)
    return complex(g(pts).mean())
