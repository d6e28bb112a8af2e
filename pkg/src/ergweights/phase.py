"""Fixed-point phases on the circle R/Z.

A phase is stored as an integer ``a`` in ``[0, 2**FIXED_BITS)`` standing for
``a / 2**FIXED_BITS`` turns.  The workhorse is :func:`frac_mul`, which returns
``frac(m * a / 2**FIXED_BITS)`` for whole int64 arrays ``m`` without ever
forming ``m * phase`` in floating point, so the phase of ``lambda**n`` or of
``y + n*alpha`` stays accurate to ~1e-15 turns for any ``|n| < 2**63``.
"""

from __future__ import annotations

from fractions import Fraction
from math import isqrt

import numpy as np

FIXED_BITS = 128
ONE = 1 << FIXED_BITS
_MASK = ONE - 1

_CHUNK = 21                      # multiplier split: 3 chunks of 21 bits
_LIMB = 20                       # phase split: 4 limbs of 20 bits (top 80 bits)
_M20 = (1 << 20) - 1
_M40 = (1 << 40) - 1


def golden_fixed() -> int:
    """(sqrt(5) - 1) / 2 rounded down to 2**-FIXED_BITS."""
    s = isqrt(5 << (2 * FIXED_BITS))        # floor(sqrt(5) * 2**FIXED_BITS)
    return (s - ONE) >> 1


def to_fixed(value) -> int:
    """Convert a phase in turns (float, int, Fraction, "golden" or "-golden")
    to fixed point.

    The value is reduced mod 1; binary floats convert exactly up to rounding
    at 2**-FIXED_BITS.
    """
    if isinstance(value, str):
        text = value.strip().lower()
        if text.lstrip("-") == "golden":
            return golden_fixed() if text == "golden" else (-golden_fixed()) & _MASK
        value = Fraction(text)
    if isinstance(value, (int, np.integer)):
        return 0
    q = Fraction(value) if not isinstance(value, Fraction) else value
    return round(q * ONE) & _MASK


def from_fixed(a: int) -> float:
    """Nearest float to the phase ``a`` in [0, 1)."""
    return float(Fraction(a & _MASK, ONE)) % 1.0


def angle_to_fixed(z: complex) -> int:
    """Phase (in turns) of a nonzero complex number."""
    return to_fixed(float(np.angle(z)) / (2.0 * np.pi))


def _limbs(a: int):
    t = (a & _MASK) >> (FIXED_BITS - 4 * _LIMB)
    return (t >> 60, (t >> 40) & _M20, (t >> 20) & _M20, t & _M20)


def frac_mul(a: int, m) -> np.ndarray:
    """frac(m * a / 2**FIXED_BITS) for an int64 array (or scalar) ``m``.

    Error is below 1e-15 turns for every ``|m| < 2**63``.
    """
    m = np.asarray(m, dtype=np.int64)
    neg = m < 0
    mag = np.where(neg, -m, m)
    acc = np.zeros(m.shape, dtype=np.float64)
    chunk_mask = (1 << _CHUNK) - 1
    for j in range(3):
        mj = (mag >> (_CHUNK * j)) & chunk_mask
        c1, c2, c3, c4 = _limbs(a << (_CHUNK * j))
        acc += ((mj * c1) & _M20) * 2.0 ** -20
        acc += ((mj * c2) & _M40) * 2.0 ** -40
        acc += (mj * c3) * 2.0 ** -60
        acc += (mj * c4) * 2.0 ** -80
    acc = acc - np.floor(acc)
    acc = np.where(neg, -acc, acc)
    acc = acc - np.floor(acc)
    # floor can return exactly 1.0 after rounding
    acc = np.where(acc >= 1.0, 0.0, acc)
    return acc


def frac_mul_exact(a: int, m: int) -> Fraction:
    """Exact reference for a single multiplier (used for scalars and checks)."""
    return Fraction((a * int(m)) & _MASK, ONE)


def unit(turns) -> np.ndarray:
    """exp(2*pi*i*turns), elementwise."""
    t = 2.0 * np.pi * np.asarray(turns, dtype=np.float64)
    return np.cos(t) + 1j * np.sin(t)
