"""Exact arithmetic in the 8-dimensional real algebra Cl(0,3).

Generators f1, f2, f3 anticommute and square to -1.  The fixed ordered
basis is

    (1, f1, f2, f3, f1f2, f1f3, f2f3, f1f2f3)

and the full 8x8 multiplication table (docs/multiplication-table.md) is
generated from the anticommutation rules, so every product of basis
blades is exactly +/- another basis blade.  The top-grade element
f1f2f3 squares to +1, which is what makes the algebra fail to be a
division algebra: (f1f2f3 - 1) and (f1f2f3 + 1) are nonzero elements
whose product is exactly zero.

Coefficient arithmetic is whatever the coefficients support: with int or
Fraction coefficients all products, sums and squared norms are exact;
float coefficients are used for randomized checks only.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence, Union

import numpy as np

Coeff = Union[int, Fraction, float]

DIMENSION = 8
BASIS_NAMES = ("1", "f1", "f2", "f3", "f1f2", "f1f3", "f2f3", "f1f2f3")
# Bitmask per basis slot: bit k set means generator f(k+1) is a factor.
_BASIS_MASKS = (0b000, 0b001, 0b010, 0b100, 0b011, 0b101, 0b110, 0b111)
_INDEX_OF_MASK = {m: i for i, m in enumerate(_BASIS_MASKS)}


def _blade_product(mask_a: int, mask_b: int) -> tuple[int, int]:
    """Product of two basis blades as (sign, result mask).

    Each generator of b is moved left past the higher generators of a
    (one sign flip per transposition); each generator occurring in both
    contributes f_i^2 = -1.
    """
    swaps = 0
    for g in range(3):
        if mask_b & (1 << g):
            higher = mask_a >> (g + 1)
            swaps += bin(higher).count("1")
    sign = -1 if swaps % 2 else 1
    common = mask_a & mask_b
    if bin(common).count("1") % 2:
        sign = -sign
    return sign, mask_a ^ mask_b


@dataclass(frozen=True)
class BasisTable:
    """8x8 table of (sign, index): product of basis slots i and j."""

    entries: tuple[tuple[tuple[int, int], ...], ...]

    @classmethod
    def build(cls) -> "BasisTable":
        rows = []
        for ma in _BASIS_MASKS:
            row = []
            for mb in _BASIS_MASKS:
                sign, mask = _blade_product(ma, mb)
                row.append((sign, _INDEX_OF_MASK[mask]))
            rows.append(tuple(row))
        return cls(entries=tuple(rows))

    def as_rows(self) -> list[list[str]]:
        """Human-readable table, entries like '-f1f3'."""
        out = []
        for row in self.entries:
            out.append([("" if s > 0 else "-") + BASIS_NAMES[i] for s, i in row])
        return out


TABLE = BasisTable.build()
_ENTRIES = TABLE.entries


@dataclass(frozen=True)
class Multivector:
    """Element of Cl(0,3) as coefficients over the fixed ordered basis."""

    coeffs: tuple[Coeff, ...]

    def __post_init__(self) -> None:
        if len(self.coeffs) != DIMENSION:
            raise ValueError(f"need {DIMENSION} coefficients, got {len(self.coeffs)}")

    @classmethod
    def zero(cls) -> "Multivector":
        return cls((0,) * DIMENSION)

    @classmethod
    def scalar(cls, value: Coeff) -> "Multivector":
        return cls((value,) + (0,) * (DIMENSION - 1))

    @classmethod
    def basis(cls, index: int) -> "Multivector":
        c = [0] * DIMENSION
        c[index] = 1
        return cls(tuple(c))

    @classmethod
    def from_vector(cls, xyz: Sequence[float]) -> "Multivector":
        """Grade-1 element x*f1 + y*f2 + z*f3."""
        x, y, z = xyz
        return cls((0, x, y, z, 0, 0, 0, 0))

    def __add__(self, other: "Multivector") -> "Multivector":
        return Multivector(tuple(a + b for a, b in zip(self.coeffs, other.coeffs)))

    def __sub__(self, other: "Multivector") -> "Multivector":
        return Multivector(tuple(a - b for a, b in zip(self.coeffs, other.coeffs)))

    def __neg__(self) -> "Multivector":
        return Multivector(tuple(-a for a in self.coeffs))

    def scale(self, factor: Coeff) -> "Multivector":
        return Multivector(tuple(factor * a for a in self.coeffs))

    def __mul__(self, other: "Multivector") -> "Multivector":
        out: list[Coeff] = [0] * DIMENSION
        for i, a in enumerate(self.coeffs):
            if a == 0:
                continue
            row = _ENTRIES[i]
            for j, b in enumerate(other.coeffs):
                if b == 0:
                    continue
                sign, k = row[j]
                out[k] += sign * a * b
        return Multivector(tuple(out))

    @property
    def scalar_part(self) -> Coeff:
        return self.coeffs[0]

    def norm_squared(self) -> Coeff:
        """Sum of squared coefficients; exact for int/Fraction inputs."""
        return sum(a * a for a in self.coeffs)

    def norm(self) -> float:
        return math.sqrt(self.norm_squared())

    def is_zero(self) -> bool:
        return all(a == 0 for a in self.coeffs)


def mv_product(a: Multivector, b: Multivector) -> Multivector:
    """Geometric product, bilinear and associative."""
    return a * b


def mv_norm(a: Multivector) -> float:
    """Euclidean norm of the coefficient vector; zero iff a is zero."""
    return a.norm()


def pseudoscalar() -> Multivector:
    """Top-grade element f1f2f3; squares to the scalar +1."""
    return Multivector.basis(7)


def zero_divisor_witness() -> tuple[Multivector, Multivector]:
    """The pair (f1f2f3 - 1, f1f2f3 + 1).

    Both factors have norm sqrt(2), yet their product is exactly zero,
    so the algebra has zero divisors and cannot be a division algebra.
    """
    m = pseudoscalar()
    one = Multivector.scalar(1)
    return m - one, m + one


def norm_multiplicativity_residual(a: Multivector, b: Multivector) -> float:
    """||a*b|| - ||a||*||b||, via squared norms so exact cases stay exact.

    Any nonzero value certifies the norm is not multiplicative.  The
    witness pair returns exactly -2.0.
    """
    return math.sqrt((a * b).norm_squared()) - math.sqrt(a.norm_squared() * b.norm_squared())


@dataclass(frozen=True)
class AssociativityReport:
    """Residuals from the exhaustive basis sweep and random sampling."""

    basis_max_residual: float  # over all 8^3 = 512 basis triples; must be exactly 0
    random_max_relative_residual: float  # ||(ab)c - a(bc)|| / (||a|| ||b|| ||c||)
    samples: int
    seed: int


def associativity_check(samples: int, seed: int) -> AssociativityReport:
    """Exhaustive basis-triple sweep plus random float-coefficient triples.

    The sweep uses exact integer arithmetic, so its residual is 0 by
    construction if and only if the table is associative.
    """
    if samples < 1:
        raise ValueError("samples must be >= 1")
    basis = [Multivector.basis(i) for i in range(DIMENSION)]
    basis_max = 0.0
    for a in basis:
        for b in basis:
            ab = a * b
            for c in basis:
                residual = (ab * c - a * (b * c)).norm()
                basis_max = max(basis_max, residual)

    rng = np.random.default_rng(np.random.SeedSequence([seed]))
    random_max = 0.0
    for _ in range(samples):
        triple = [Multivector(tuple(rng.standard_normal(DIMENSION).tolist())) for _ in range(3)]
        a, b, c = triple
        scale = a.norm() * b.norm() * c.norm()
        residual = ((a * b) * c - a * (b * c)).norm()
        random_max = max(random_max, residual / scale)
    return AssociativityReport(
        basis_max_residual=basis_max,
        random_max_relative_residual=random_max,
        samples=samples,
        seed=seed,
    )
