"""Prime-field and prime-order-subgroup arithmetic.

Everything is plain arbitrary-precision int wrapped in small value types:
FieldElement / Polynomial over Z_p, and GroupElement in the order-q
subgroup of Z_p* for a safe prime p = 2q + 1.

Randomness is simulation-grade: callers pass a seeded random.Random (or a
seed) so that every derived object is reproducible byte for byte. Nothing
here is hardened for production use (no constant-time code, PRNG only).
"""

import hashlib
import random
from dataclasses import dataclass

import sympy

from .errors import (
    DegenerateShareSet,
    InversionOfZero,
    ModulusMismatch,
    SubgroupViolation,
)

_SMALL_PRIMES = tuple(sympy.primerange(3, 1000))


# ---------------------------------------------------------------------------
# deterministic seed / rng derivation


def derive_seed(master, *labels) -> int:
    """Stable 64-bit child seed for a label path under a master seed.

    Uses sha256 rather than hash() so results do not depend on the
    interpreter's hash randomization.
    """
    text = "groupauth:%s:%s" % (master, "/".join(str(x) for x in labels))
    return int.from_bytes(hashlib.sha256(text.encode()).digest()[:8], "big")


def derive_rng(master, *labels) -> random.Random:
    """Seeded PRNG dedicated to one component of a simulation."""
    return random.Random(derive_seed(master, *labels))


# ---------------------------------------------------------------------------
# prime field


@dataclass(frozen=True)
class FieldElement:
    """Canonical residue modulo an odd prime.

    The constructor reduces, so negative intermediate values (Lagrange
    numerators and denominators in particular) are always stored as
    0 <= value < modulus.
    """

    value: int
    modulus: int

    def __post_init__(self):
        if self.modulus < 2:
            raise ValueError("modulus must be at least 2")
        object.__setattr__(self, "value", self.value % self.modulus)

    def _match(self, other: "FieldElement") -> None:
        if not isinstance(other, FieldElement):
            raise TypeError("expected a FieldElement, got %r" % (other,))
        if other.modulus != self.modulus:
            raise ModulusMismatch(
                "cannot combine residues mod %d and mod %d"
                % (self.modulus, other.modulus)
            )

    def __add__(self, other: "FieldElement") -> "FieldElement":
        self._match(other)
        return FieldElement(self.value + other.value, self.modulus)

    def __sub__(self, other: "FieldElement") -> "FieldElement":
        self._match(other)
        return FieldElement(self.value - other.value, self.modulus)

    def __mul__(self, other: "FieldElement") -> "FieldElement":
        self._match(other)
        return FieldElement(self.value * other.value, self.modulus)

    def __neg__(self) -> "FieldElement":
        return FieldElement(-self.value, self.modulus)

    def inverse(self) -> "FieldElement":
        return field_inverse(self)

    def is_zero(self) -> bool:
        return self.value == 0


def field_inverse(a: FieldElement) -> "FieldElement":
    """Multiplicative inverse in Z_p; inverting zero is an error."""
    if a.value == 0:
        raise InversionOfZero("zero has no multiplicative inverse")
    return FieldElement(pow(a.value, -1, a.modulus), a.modulus)


@dataclass(frozen=True)
class Polynomial:
    """Dense polynomial over one prime field, constant term first.

    The tuple length is degree + 1; high coefficients may be zero, so the
    represented degree is an upper bound.
    """

    coefficients: tuple

    def __post_init__(self):
        if not self.coefficients:
            raise ValueError("a polynomial needs at least a constant term")
        moduli = {c.modulus for c in self.coefficients}
        if len(moduli) != 1:
            raise ModulusMismatch("polynomial coefficients mix moduli")

    @property
    def modulus(self) -> int:
        return self.coefficients[0].modulus

    @property
    def degree_bound(self) -> int:
        return len(self.coefficients) - 1

    @classmethod
    def random(cls, degree: int, modulus: int, rng: random.Random,
               constant: FieldElement | None = None) -> "Polynomial":
        """Sample degree + 1 uniform coefficients, optionally pinning a_0."""
        if degree < 0:
            raise ValueError("degree must be non-negative")
        coeffs = []
        if constant is not None:
            if constant.modulus != modulus:
                raise ModulusMismatch("constant term has the wrong modulus")
            coeffs.append(constant)
        else:
            coeffs.append(FieldElement(rng.randrange(modulus), modulus))
        for _ in range(degree):
            coeffs.append(FieldElement(rng.randrange(modulus), modulus))
        return cls(tuple(coeffs))


def poly_eval(f: Polynomial, x: FieldElement) -> FieldElement:
    """Horner evaluation of f at x."""
    if x.modulus != f.modulus:
        raise ModulusMismatch("evaluation point has the wrong modulus")
    acc = FieldElement(0, f.modulus)
    for coeff in reversed(f.coefficients):
        acc = acc * x + coeff
    return acc


def lagrange_coefficient(target: FieldElement, own: FieldElement,
                         others) -> FieldElement:
    """Lagrange basis value  prod_r (target - x_r) / (own - x_r).

    `others` lists every evaluation position except `own`. Multiplying a
    share f(own) by this value contributes to the interpolation of
    f(target) from the full point set. Duplicate positions (within
    `others`, or `own` appearing in `others`) make the denominator vanish
    and are rejected.
    """
    others = tuple(others)
    num = FieldElement(1, own.modulus)
    den = FieldElement(1, own.modulus)
    seen = set()
    for x in others:
        own._match(x)
        target._match(x)
        if x.value == own.value or x.value in seen:
            raise DegenerateShareSet(
                "duplicate evaluation position %d" % x.value
            )
        seen.add(x.value)
        num = num * (target - x)
        den = den * (own - x)
    return num * field_inverse(den)


# ---------------------------------------------------------------------------
# prime generation


def _sieved(n: int) -> bool:
    """Cheap small-prime filter before a full primality test."""
    for r in _SMALL_PRIMES:
        if n % r == 0:
            return n == r
    return True


def random_prime(bits: int, rng: random.Random) -> int:
    """Uniform-ish odd prime with exactly `bits` bits."""
    if bits < 8:
        raise ValueError("prime size below 8 bits is not supported")
    while True:
        candidate = rng.getrandbits(bits) | (1 << (bits - 1)) | 1
        if _sieved(candidate) and sympy.isprime(candidate):
            return candidate


def random_safe_prime(bits: int, rng: random.Random) -> tuple:
    """Safe prime p = 2q + 1 with exactly `bits` bits; returns (p, q)."""
    if bits < 16:
        raise ValueError("safe prime search below 16 bits is not supported")
    while True:
        q = rng.getrandbits(bits - 1) | (1 << (bits - 2)) | 1
        p = 2 * q + 1
        if not (_sieved(q) and _sieved(p)):
            continue
        if sympy.isprime(q) and sympy.isprime(p):
            return p, q


# ---------------------------------------------------------------------------
# prime-order subgroup of Z_p* for safe prime p


@dataclass(frozen=True)
class CyclicGroupSpec:
    """Order-q subgroup of Z_p* for a safe prime p = 2q + 1."""

    p: int
    q: int

    def __post_init__(self):
        if self.p != 2 * self.q + 1:
            raise ValueError("group requires p = 2q + 1")
        if self.q < 2:
            raise ValueError("subgroup order too small")

    def identity(self) -> "GroupElement":
        return GroupElement(1, self)

    def element(self, value: int) -> "GroupElement":
        """Wrap an int, enforcing subgroup membership."""
        return GroupElement(value, self)


@dataclass(frozen=True)
class GroupElement:
    """Member of the order-q subgroup; membership is checked on creation."""

    value: int
    group: CyclicGroupSpec

    def __post_init__(self):
        p, q = self.group.p, self.group.q
        if not 1 <= self.value < p:
            raise SubgroupViolation("value %d outside Z_p*" % self.value)
        if pow(self.value, q, p) != 1:
            raise SubgroupViolation(
                "value %d is not in the order-%d subgroup" % (self.value, q)
            )

    def _match(self, other: "GroupElement") -> None:
        if not isinstance(other, GroupElement):
            raise TypeError("expected a GroupElement, got %r" % (other,))
        if other.group != self.group:
            raise ModulusMismatch("cannot combine elements of two groups")

    def __mul__(self, other: "GroupElement") -> "GroupElement":
        self._match(other)
        return GroupElement(self.value * other.value % self.group.p, self.group)

    def inverse(self) -> "GroupElement":
        return GroupElement(pow(self.value, -1, self.group.p), self.group)


def group_exp(g: GroupElement, e) -> GroupElement:
    """g raised to an exponent living in Z_q.

    Accepts an int (reduced mod q, so negative exponents become q - |e|
    residues) or a FieldElement whose modulus must equal q.
    """
    q = g.group.q
    if isinstance(e, FieldElement):
        if e.modulus != q:
            raise ModulusMismatch("exponent must live mod the group order")
        e = e.value
    return GroupElement(pow(g.value, e % q, g.group.p), g.group)


def group_setup(bit_length: int, generator_count: int,
                rng_seed: int) -> tuple:
    """Deterministically build a safe-prime group plus distinct generators.

    Generators are sampled as squares r^2 mod p, which land in the order-q
    subgroup; 1 and repeats are rejected, so each result generates the
    whole subgroup (q is prime). Returns (CyclicGroupSpec, [GroupElement]).
    """
    if bit_length < 16:
        raise ValueError("bit_length must be at least 16")
    if generator_count < 1:
        raise ValueError("at least one generator is required")
    rng = random.Random(rng_seed)
    p, q = random_safe_prime(bit_length, rng)
    spec = CyclicGroupSpec(p, q)
    generators = []
    seen = set()
    while len(generators) < generator_count:
        r = rng.randrange(2, p - 1)
        g = r * r % p
        if g == 1 or g in seen:
            continue
        seen.add(g)
        generators.append(GroupElement(g, spec))
    return spec, generators


# ---------------------------------------------------------------------------
# hashing of canonical residues


def residue_digest(value: int, modulus: int, hash_id: str = "sha256") -> bytes:
    """Digest of the fixed-width big-endian encoding of a canonical residue.

    The width is the byte length of the modulus, so equal residues hash
    equal regardless of how they were computed.
    """
    if not 0 <= value < modulus:
        raise ValueError("value is not a canonical residue")
    width = (modulus.bit_length() + 7) // 8
    return hashlib.new(hash_id, value.to_bytes(width, "big")).digest()
