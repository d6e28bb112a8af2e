"""Finite-dimensional operators with relatively weakly compact orbits.

In finite dimension an operator has relatively weakly compact orbits exactly
when it is power bounded, i.e. its spectral radius is at most 1 and every
unimodular eigenvalue is semisimple.  Such an operator splits as

    T = sum_k lambda_k P_k + S,     |lambda_k| = 1,  S = T P_s,

with spectral projections P_k and a stable part S whose powers decay like
C r**n.  :class:`SpectralOperator` stores exactly this normal form.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass, field

import numpy as np

from . import phase as ph
from .errors import HypothesisError, InputError
from .seqcore import TrigPolynomial, WeightSequence

MAX_DIM = 64
DEFAULT_TOL = 1e-9
GROWTH_THRESHOLD = 100.0
COEF_DROP = 1e-14


def _norm2(a) -> float:
    return float(np.linalg.norm(a, 2))


def decay_constants(stable: np.ndarray, max_power: int = 4096) -> tuple[float, float]:
    """Certified (C, r) with ||stable**n|| <= C r**n for all n >= 1.

    Finds r above the spectral radius and the first m with
    ||stable**m|| <= r**m; then C = max(1, max_{s<m} ||stable**s|| / r**s)
    bounds every power by submultiplicativity.
    """
    stable = np.asarray(stable, dtype=np.complex128)
    if not np.any(stable):
        return 0.0, 0.0
    rho = float(np.max(np.abs(np.linalg.eigvals(stable))))
    if rho >= 1.0:
        raise HypothesisError(f"stable part has spectral radius {rho} >= 1",
                              "power-boundedness")
    candidates = [(rho * (1 + 1e-9), 64), (rho + (1 - rho) / 4, max_power),
                  ((1 + rho) / 2, max_power)]
    for r, budget in candidates:
        if r <= 0:
            continue
        best = 1.0
        power = np.eye(stable.shape[0], dtype=np.complex128)
        for s in range(1, budget + 1):
            power = power @ stable
            nrm = _norm2(power)
            if nrm == 0.0:
                return best, r
            excess = np.log(nrm) - s * np.log(r)       # log(||S^s|| / r^s)
            if excess <= 1e-12:
                return best, r
            if excess > 700:
                break
            best = max(best, float(np.exp(excess)))
    raise HypothesisError("could not certify decay of the stable part", "power-boundedness")


@dataclass(frozen=True)
class SpectralOperator:
    """Power-bounded operator in spectral normal form.

    ``eigenvalues[k]`` (unimodular) pairs with projection ``projections[k]``;
    ``stable`` is T restricted to the complementary invariant subspace and
    satisfies ||stable**n|| <= C r**n.  ``basis_check`` is the largest
    residual among the normal-form identities.
    """

    dim: int
    eigenvalues: tuple
    projections: tuple
    stable: np.ndarray
    C: float
    r: float
    basis_check: float = 0.0
    phases: tuple = field(default=(), repr=False)

    @classmethod
    def from_parts(cls, eigenpairs, stable, C=None, r=None, tol: float = 1e-10):
        """Assemble and check a normal form from (lambda, P) pairs and a stable matrix."""
        stable = np.asarray(stable, dtype=np.complex128)
        dim = stable.shape[0]
        if stable.shape != (dim, dim) or dim > MAX_DIM or dim < 1:
            raise InputError("stable part must be square with 1 <= dim <= 64")
        lams, projs, phases = [], [], []
        for lam, P in eigenpairs:
            lam = complex(lam)
            if abs(abs(lam) - 1.0) > 1e-9:
                raise HypothesisError(f"eigenvalue {lam} is not unimodular", "unimodularity")
            a = ph.angle_to_fixed(lam)
            phases.append(a)
            lams.append(complex(ph.unit(ph.from_fixed(a))))
            P = np.asarray(P, dtype=np.complex128)
            if P.shape != (dim, dim):
                raise InputError("projection shape mismatch")
            projs.append(P)
        if C is None or r is None:
            C, r = decay_constants(stable)
        op = cls(dim, tuple(lams), tuple(projs), stable, float(C), float(r), 0.0, tuple(phases))
        check = op.residuals()
        worst = max(check.values()) if check else 0.0
        if worst > tol:
            raise HypothesisError(f"normal form identities fail (residual {worst:.3e})",
                                  "spectral decomposition", check)
        for n in (1, 8, 64):
            if _norm2(np.linalg.matrix_power(stable, n)) > op.C * op.r ** n * (1 + 1e-8) + 1e-12:
                raise HypothesisError(f"declared decay (C={C}, r={r}) violated at n={n}",
                                      "stable decay", n)
        return cls(dim, op.eigenvalues, op.projections, stable, op.C, op.r, worst, op.phases)

    @property
    def stable_projection(self) -> np.ndarray:
        return np.eye(self.dim, dtype=np.complex128) - sum(
            self.projections, np.zeros((self.dim, self.dim), dtype=np.complex128))

    @property
    def power_bound(self) -> float:
        """Bound on sup_n ||T**n||."""
        return float(sum(_norm2(P) for P in self.projections) + self.C * max(self.r, 0.0))

    def dense(self) -> np.ndarray:
        T = self.stable.copy()
        for lam, P in zip(self.eigenvalues, self.projections):
            T = T + lam * P
        return T

    def residuals(self) -> dict:
        I = np.eye(self.dim, dtype=np.complex128)
        out = {}
        Ps = self.stable_projection
        all_p = list(self.projections) + [Ps]
        for i, P in enumerate(all_p):
            out[f"idempotent[{i}]"] = _norm2(P @ P - P)
            for j, Q in enumerate(all_p):
                if j != i:
                    out[f"annihilate[{i},{j}]"] = _norm2(P @ Q)
        out["completeness"] = _norm2(sum(all_p, np.zeros_like(I)) - I)
        T = self.dense()
        for i, (lam, P) in enumerate(zip(self.eigenvalues, self.projections)):
            out[f"eigen[{i}]"] = _norm2(T @ P - lam * P)
        out["stable_invariant"] = _norm2(self.stable - self.stable @ Ps)
        return out


def _null_space(A: np.ndarray, rank_tol: float) -> np.ndarray:
    _, s, vh = np.linalg.svd(A)
    rank = int(np.sum(s > rank_tol))
    return vh[rank:].conj().T


def _growth_witness(T: np.ndarray, threshold: float = GROWTH_THRESHOLD):
    n, power = 1, T.copy()
    for _ in range(40):
        nrm = _norm2(power)
        if nrm > threshold or not np.isfinite(nrm):
            return n, nrm
        power = power @ power
        n *= 2
    return None


def validate_rwc(T, tol: float = DEFAULT_TOL, cluster_radius: float = 1e-6) -> SpectralOperator:
    """Certify power-boundedness of a dense matrix and return its normal form.

    Raises :class:`HypothesisError` (hypothesis ``"power-boundedness"``) with
    a growth witness ``(n, ||T**n||)`` if an eigenvalue lies outside the
    closed unit disc or a unimodular eigenvalue carries a Jordan block.
    """
    T = np.asarray(T, dtype=np.complex128)
    if T.ndim != 2 or T.shape[0] != T.shape[1]:
        raise InputError("operator must be a square matrix")
    dim = T.shape[0]
    if not 1 <= dim <= MAX_DIM:
        raise InputError(f"dimension {dim} outside 1..{MAX_DIM}")
    w = np.linalg.eigvals(T)

    # single-linkage clusters of numerically repeated eigenvalues
    clusters: list[list[int]] = []
    for i in np.argsort(-np.abs(w), kind="stable"):
        for cl in clusters:
            if min(abs(w[i] - w[j]) for j in cl) <= cluster_radius:
                cl.append(int(i))
                break
        else:
            clusters.append([int(i)])

    scale = max(1.0, _norm2(T))
    rank_tol = 10 * tol * scale
    I = np.eye(dim, dtype=np.complex128)
    eigenpairs = []
    for cl in clusters:
        mu = complex(np.mean(w[cl]))
        if abs(mu) > 1 + tol:
            raise HypothesisError(
                f"eigenvalue {mu:.6g} has modulus {abs(mu):.6g} > 1: operator is not "
                "power bounded", "power-boundedness", _growth_witness(T))
        if abs(abs(mu) - 1) > tol:
            continue
        lam = mu / abs(mu)
        right = _null_space(T - lam * I, rank_tol)
        if right.shape[1] < len(cl):
            raise HypothesisError(
                f"unimodular eigenvalue {lam:.6g} is not semisimple (algebraic multiplicity "
                f"{len(cl)}, geometric {right.shape[1]}): powers grow, operator is not power "
                "bounded", "power-boundedness", _growth_witness(T))
        left = _null_space((T - lam * I).conj().T, rank_tol)
        P = right @ np.linalg.solve(left.conj().T @ right, left.conj().T)
        eigenpairs.append((lam, P))

    unimodular_count = sum(len(cl) for cl in clusters
                           if abs(abs(complex(np.mean(w[cl]))) - 1) <= tol)
    if unimodular_count == dim:
        stable = np.zeros_like(I)              # no stable subspace; drop rounding debris
    else:
        stable = T @ (I - sum((P for _, P in eigenpairs), np.zeros_like(I)))
    try:
        return SpectralOperator.from_parts(eigenpairs, stable, tol=1e-10 * scale)
    except HypothesisError as exc:
        raise HypothesisError(f"{exc} (operator is not power bounded)", "power-boundedness",
                              _growth_witness(T)) from exc


def random_spectral_operator(rng: np.random.Generator, dim: int | None = None,
                             n_unimodular: int | None = None, stable_radius: float = 0.9,
                             jordan: bool = True) -> SpectralOperator:
    """Random normal form: well-conditioned non-normal basis, distinct unimodular
    eigenvalues, and a stable block (optionally with a Jordan pair) of radius
    at most ``stable_radius``."""
    dim = int(rng.integers(1, 9)) if dim is None else dim
    if n_unimodular is None:
        n_unimodular = int(rng.integers(0, min(4, dim) + 1))
    n_unimodular = min(n_unimodular, dim, 4)
    Q, _ = np.linalg.qr(rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim)))
    V = Q @ (np.eye(dim) + 0.3 * np.triu(rng.normal(size=(dim, dim)), 1))
    Vinv = np.linalg.inv(V)
    turns = []
    while len(turns) < n_unimodular:
        t = float(rng.random())
        if all(min(abs(t - u), 1 - abs(t - u)) > 1e-3 for u in turns):
            turns.append(t)
    D = np.zeros((dim, dim), dtype=np.complex128)
    pairs = []
    for k, t in enumerate(turns):
        lam = complex(ph.unit(t))
        e = np.zeros((dim, dim))
        e[k, k] = 1.0
        pairs.append((lam, V @ e @ Vinv))
    m = dim - n_unimodular
    for k in range(n_unimodular, dim):
        D[k, k] = stable_radius * rng.random() * np.exp(2j * np.pi * rng.random())
    if jordan and m >= 2 and rng.random() < 0.5:
        k = n_unimodular
        D[k + 1, k + 1] = D[k, k]
        D[k, k + 1] = 0.5 * (1 - abs(D[k, k]))
    stable = V @ D @ Vinv
    return SpectralOperator.from_parts(pairs, stable, tol=1e-9)


@dataclass(frozen=True)
class VectorPair:
    """Vector x and functional x' acting by <u, x'> = sum u_i conj(x'_i)."""

    x: np.ndarray
    xprime: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "x", np.asarray(self.x, dtype=np.complex128).ravel())
        object.__setattr__(self, "xprime", np.asarray(self.xprime, dtype=np.complex128).ravel())
        if self.x.shape != self.xprime.shape:
            raise InputError("x and x' dimensions differ")


def pairing(u, xprime) -> complex:
    return complex(np.vdot(xprime, u))


class _StableOrbit:
    """Lazily extended cache of c_n = <S**n x_s, x'> (vector iteration only)."""

    def __init__(self, stable, xs, xprime):
        self._S = stable
        self._xp = xprime
        self._vec = xs.copy()          # S**0 x_s
        self._vals = np.zeros(0, dtype=np.complex128)   # c_1 .. c_len
        self._zero_from = None          # iterate became exactly zero
        self._lock = threading.Lock()

    def _extend(self, top: int):
        with self._lock:
            have = len(self._vals)
            if top <= have or self._zero_from is not None:
                return
            new = np.empty(top - have, dtype=np.complex128)
            v = self._vec
            for i in range(top - have):
                v = self._S @ v
                new[i] = np.vdot(self._xp, v)
                if not np.any(v):
                    self._zero_from = have + i + 1
                    new[i + 1:] = 0.0
                    break
            self._vec = v
            self._vals = np.concatenate([self._vals, new[: (self._zero_from or top) - have]])

    def __call__(self, n: np.ndarray) -> np.ndarray:
        n = np.asarray(n, dtype=np.int64)
        out = np.zeros(n.shape, dtype=np.complex128)
        if n.size == 0:
            return out
        if np.any(n < 1):
            raise InputError("linear sequences are indexed from n = 1")
        self._extend(int(n.max()))
        vals = self._vals
        inside = n <= len(vals)
        out[inside] = vals[n[inside] - 1]
        return out


def _check_pair(T: SpectralOperator, v: VectorPair):
    if v.x.shape[0] != T.dim:
        raise InputError(f"vector dimension {v.x.shape[0]} != operator dimension {T.dim}")


def structure_split(T: SpectralOperator, v: VectorPair) -> tuple[TrigPolynomial, WeightSequence]:
    """Almost-periodic part (trig polynomial) and Cesaro-null residual of <T**n x, x'>."""
    _check_pair(T, v)
    coefs, phases = [], []
    for a, P in zip(T.phases, T.projections):
        c = pairing(P @ v.x, v.xprime)
        if abs(c) > COEF_DROP:
            coefs.append(c)
            phases.append(a)
    trig = TrigPolynomial(tuple(coefs), tuple(phases))
    xs = T.stable_projection @ v.x
    bound = T.C * max(T.r, 0.0) * float(np.linalg.norm(v.x) * np.linalg.norm(v.xprime))
    resid = WeightSequence(_StableOrbit(T.stable, xs, v.xprime), bound, "residual")
    return trig, resid


def linear_sequence(T: SpectralOperator, v: VectorPair) -> WeightSequence:
    """a_n = <T**n x, x'> for n >= 1."""
    trig, resid = structure_split(T, v)
    bound = T.power_bound * float(np.linalg.norm(v.x) * np.linalg.norm(v.xprime))
    f, g = trig.__call__, resid.generator
    return WeightSequence(lambda n: f(n) + g(n), bound, "linear")


def residual_mean_bound(T: SpectralOperator, v: VectorPair, N: int) -> float:
    """Certified C ||x|| ||x'|| / (N (1 - r)) for (1/N) sum |c_n|."""
    return T.C * float(np.linalg.norm(v.x) * np.linalg.norm(v.xprime)) / (N * (1 - T.r))


def orbit_norms(T: SpectralOperator, x, ns) -> list[float]:
    """||T**n x|| at the requested indices (n >= 0)."""
    x = np.asarray(x, dtype=np.complex128)
    ns = [int(n) for n in ns]
    if any(n < 0 for n in ns):
        raise InputError("indices must be nonnegative")
    parts = [(a, P @ x) for a, P in zip(T.phases, T.projections)]
    xs = T.stable_projection @ x
    out = {}
    v, k = xs.copy(), 0
    for n in sorted(set(ns)):
        while k < n:
            v = T.stable @ v
            k += 1
        total = v.copy()
        for a, px in parts:
            total = total + complex(ph.unit(ph.frac_mul(a, n))) * px
        out[n] = float(np.linalg.norm(total))
    return [out[n] for n in ns]


# ---------------------------------------------------------------------------
# JSON exchange
# ---------------------------------------------------------------------------

def _cx(z) -> dict:
    return {"re": float(np.real(z)), "im": float(np.imag(z))}


def _from_cx(d) -> complex:
    if isinstance(d, dict):
        return complex(d.get("re", 0.0), d.get("im", 0.0))
    return complex(d)


def _mat(m) -> list:
    return [[_cx(z) for z in row] for row in np.asarray(m)]


def _from_mat(rows) -> np.ndarray:
    return np.array([[_from_cx(z) for z in row] for row in rows], dtype=np.complex128)


def operator_to_json(T: SpectralOperator) -> dict:
    return {
        "dim": T.dim,
        "eigenpairs": [dict(_cx(lam), projection=_mat(P))
                       for lam, P in zip(T.eigenvalues, T.projections)],
        "stable": _mat(T.stable),
        "C": T.C,
        "r": T.r,
    }


def operator_from_json(doc: dict) -> SpectralOperator:
    """Load an operator: spectral normal form, or ``{"matrix": ...}`` via validate_rwc."""
    if "matrix" in doc:
        return validate_rwc(_from_mat(doc["matrix"]), doc.get("tol", DEFAULT_TOL))
    pairs = [(_from_cx(e), _from_mat(e["projection"])) for e in doc.get("eigenpairs", [])]
    stable = _from_mat(doc["stable"])
    if stable.shape[0] != doc["dim"]:
        raise InputError("dim does not match the stable block")
    return SpectralOperator.from_parts(pairs, stable, doc.get("C"), doc.get("r"))


def vector_from_json(v) -> np.ndarray:
    return np.array([_from_cx(z) for z in v], dtype=np.complex128)
