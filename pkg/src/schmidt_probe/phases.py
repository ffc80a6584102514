"""Exact phase arithmetic modulo a prime dimension.

Roots of unity are handled through their integer exponents (mod p, or mod 4
for the p = 2 quarter-turn convention) and exponentiated once, so long sums
never accumulate rounding from repeated complex multiplication.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidDimension, InvalidResidue

# (-i)**t for t = 0..3; p = 2 phase exponents live mod 4.
_NEG_I_POWERS = (1.0 + 0.0j, -1.0j, -1.0 + 0.0j, 1.0j)

# Exact values at quarter turns of the unit circle.
_QUARTER_TURNS = {0: 1.0 + 0.0j, 1: 1.0j, 2: -1.0 + 0.0j, 3: -1.0j}


def is_prime(n: int) -> bool:
    """Trial-division primality test; adequate for the small dimensions used here."""
    if n < 2:
        return False
    if n < 4:
        return True
    if n % 2 == 0:
        return False
    d = 3
    while d * d <= n:
        if n % d == 0:
            return False
        d += 2
    return True


@dataclass(frozen=True)
class PrimeDim:
    """A prime dimension (the Schmidt rank). Construction validates primality."""

    p: int

    def __post_init__(self) -> None:
        if not isinstance(self.p, int) or self.p < 2 or not is_prime(self.p):
            raise InvalidDimension(f"dimension must be a prime >= 2, got {self.p!r}")


def as_dim(p: PrimeDim | int) -> int:
    """Return the validated integer dimension behind ``p``."""
    if isinstance(p, PrimeDim):
        return p.p
    return PrimeDim(int(p)).p


def mod_inverse(a: int, p: PrimeDim | int) -> int:
    """Multiplicative inverse of ``a`` modulo the prime ``p``, in {1, ..., p-1}."""
    q = as_dim(p)
    a = a % q
    if a == 0:
        raise InvalidResidue(f"0 has no inverse mod {q}")
    return pow(a, q - 2, q)


def omega_pow(p: PrimeDim | int, n: int) -> complex:
    """``exp(2*pi*i*n/p)`` with the exponent reduced mod p first.

    Quarter-turn values (1, i, -1, -i) are returned exactly.
    """
    q = as_dim(p)
    r = n % q
    if (4 * r) % q == 0:
        return _QUARTER_TURNS[(4 * r) // q]
    return complex(np.exp(2j * np.pi * (r / q)))


def quadratic_phase(p: PrimeDim | int, s: int, l: int) -> complex:
    """The diagonal phase ``(e^{-i*phi})^{s*l^2}`` of the transform family.

    For p > 2 this equals ``omega^{-2^{-1} s l^2 mod p}``.  For p = 2 the
    quarter phase -i is raised to the plain integer ``s*l^2`` (tracked mod 4,
    since -i is a fourth root of unity), which makes D = diag(1, -i).
    """
    q = as_dim(p)
    if not (0 <= s < q and 0 <= l < q):
        raise InvalidResidue(f"residues must lie in [0, {q}), got s={s}, l={l}")
    if q == 2:
        return _NEG_I_POWERS[(s * l * l) % 4]
    e = (-mod_inverse(2, q) * s * l * l) % q
    return omega_pow(q, e)


def gauss_sum(p: PrimeDim | int, s: int, k: int) -> complex:
    """Quadratic Gauss sum ``sum_l omega^{s l^2 + k l}`` by direct summation.

    Meaningful for odd primes, where |G| = sqrt(p) whenever s != 0 mod p.
    """
    q = as_dim(p)
    return sum(omega_pow(q, (s * l * l + k * l) % q) for l in range(q))
