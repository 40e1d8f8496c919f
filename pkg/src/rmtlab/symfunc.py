"""Exact symmetric-function calculus over rational coefficients.

Polynomials live in the monomial basis: a ``SymmetricPolynomial`` maps each
partition ``mu`` (exponent multiset) to the rational coefficient of the
monomial symmetric polynomial ``m_mu`` in ``num_vars`` variables.

The module provides power sums, Schur polynomials (cancellation-free tableau
counting), one-parameter Jack polynomials built by Gram-Schmidt in dominance
order from the deformed power-sum inner product
``<p_lam, p_mu> = delta z_lam theta^{-len(lam)}``, expansion of arbitrary
symmetric polynomials in the Jack basis, and exact evaluation.  All arithmetic
is ``fractions.Fraction``; floats never enter.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
import json

from .partitions import (
    as_partition,
    dominates,
    is_horizontal_strip,
    monomial_count,
    multiplicities,
    partitions_of_size,
    z_factor,
)

#: Largest homogeneous degree the Jack machinery will touch.  Everything the
#: oracle needs lives in degree <= 10; beyond that the dense Gram-Schmidt
#: tables stop being cheap, so we refuse loudly instead of crawling.
DEGREE_CAP = 10


def as_theta(theta) -> Fraction:
    """Validate and normalize the Jack parameter to a positive Fraction."""
    th = Fraction(theta)
    if th <= 0:
        raise ValueError(f"theta must be positive, got {theta!r}")
    return th


@dataclass(frozen=True)
class SymmetricPolynomial:
    """A symmetric polynomial in ``num_vars`` variables, monomial basis.

    ``coeffs`` maps partitions (with length <= num_vars) to nonzero Fractions.
    """

    num_vars: int
    coeffs: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.num_vars < 0:
            raise ValueError("num_vars must be >= 0")
        clean = {}
        for key, val in self.coeffs.items():
            lam = as_partition(key)
            if len(lam) > self.num_vars:
                raise ValueError(
                    f"monomial key {lam} has more parts than num_vars={self.num_vars}"
                )
            frac = Fraction(val)
            if frac != 0:
                clean[lam] = frac
        object.__setattr__(self, "coeffs", clean)

    def __add__(self, other: "SymmetricPolynomial") -> "SymmetricPolynomial":
        if self.num_vars != other.num_vars:
            raise ValueError("cannot add polynomials with different num_vars")
        out = dict(self.coeffs)
        for key, val in other.coeffs.items():
            out[key] = out.get(key, Fraction(0)) + val
        return SymmetricPolynomial(self.num_vars, out)

    def scale(self, c) -> "SymmetricPolynomial":
        c = Fraction(c)
        return SymmetricPolynomial(self.num_vars, {k: c * v for k, v in self.coeffs.items()})

    def degrees(self) -> set:
        return {sum(k) for k in self.coeffs}

    def is_zero(self) -> bool:
        return not self.coeffs


# ---------------------------------------------------------------------------
# monomial-basis arithmetic
# ---------------------------------------------------------------------------

def _insert_sorted(mu: tuple, old: int, new: int) -> tuple:
    """Partition obtained from mu by replacing one part `old` with `new` (old may be 0)."""
    parts = list(mu)
    if old:
        parts.remove(old)
    parts.append(new)
    parts.sort(reverse=True)
    return tuple(parts)


def _power_sum_times_monomial_dict(coeffs: dict, k: int) -> dict:
    """Multiply an m-basis coefficient dict by the power sum p_k (universal rule).

    p_k * m_mu = sum over distinct part values v of mu (including v = 0) of
    mult_{v+k}(nu) * m_nu where nu = mu with one v replaced by v + k.
    """
    if k < 1:
        raise ValueError("power sum index must be >= 1")
    out: dict = {}
    for mu, c in coeffs.items():
        values = set(mu) | {0}
        for v in values:
            nu = _insert_sorted(mu, v, v + k)
            mult = nu.count(v + k)
            out[nu] = out.get(nu, Fraction(0)) + c * mult
    return {key: val for key, val in out.items() if val != 0}


def multiply_power_sum(poly: SymmetricPolynomial, k: int) -> SymmetricPolynomial:
    """Product ``p_k * poly`` in ``poly.num_vars`` variables.

    Monomial keys longer than ``num_vars`` vanish under restriction and are
    dropped, which is exactly the image of the universal product in Lambda_N.
    """
    raw = _power_sum_times_monomial_dict(poly.coeffs, k)
    kept = {mu: c for mu, c in raw.items() if len(mu) <= poly.num_vars}
    return SymmetricPolynomial(poly.num_vars, kept)


@lru_cache(maxsize=None)
def _power_sum_in_monomials(lam: tuple) -> tuple:
    """p_lam in the monomial basis (universal); returns a hashable item tuple."""
    coeffs = {(): Fraction(1)}
    for part in lam:
        coeffs = _power_sum_times_monomial_dict(coeffs, part)
    return tuple(sorted(coeffs.items()))


def power_sum_poly(k: int, num_vars: int) -> SymmetricPolynomial:
    """The power sum p_k as a SymmetricPolynomial in num_vars variables."""
    if num_vars < 1:
        raise ValueError("num_vars must be >= 1")
    return SymmetricPolynomial(num_vars, {(k,): Fraction(1)})


# ---------------------------------------------------------------------------
# Schur polynomials: cancellation-free tableau counting
# ---------------------------------------------------------------------------

@lru_cache(maxsize=None)
def _kostka(lam: tuple, content: tuple) -> int:
    """Number of semistandard tableaux of shape lam and content `content`.

    Recursive peel: the cells holding the largest entry form a horizontal
    strip lam/nu; recurse on nu with the last content entry removed.
    """
    if not content:
        return 1 if not lam else 0
    last = content[-1]
    if sum(lam) != sum(content):
        return 0
    total = 0
    for nu in partitions_of_size(sum(lam) - last, max_part=lam[0] if lam else 0):
        if is_horizontal_strip(lam, nu):
            total += _kostka(nu, content[:-1])
    return total


def schur_poly(lam, num_vars: int) -> SymmetricPolynomial:
    """Schur polynomial s_lam in num_vars variables, monomial basis.

    Coefficients are Kostka numbers counted directly from semistandard
    tableaux — no determinants, no cancellation.
    """
    lam = as_partition(lam)
    if len(lam) > num_vars:
        raise ValueError(f"shape {lam} needs more than {num_vars} variables")
    coeffs = {}
    for mu in partitions_of_size(sum(lam), max_length=num_vars):
        if not dominates(lam, mu):
            continue
        k = _kostka(lam, mu)
        if k:
            coeffs[mu] = Fraction(k)
    return SymmetricPolynomial(num_vars, coeffs)


def skew_schur_one_var(lam, mu, b):
    """Single-variable skew Schur s_{lam/mu}(b): b^{|lam|-|mu|} on horizontal strips, else 0."""
    lam = as_partition(lam)
    mu = as_partition(mu)
    if not is_horizontal_strip(lam, mu):
        return Fraction(0) if isinstance(b, (int, Fraction)) else 0.0
    return b ** (sum(lam) - sum(mu))


# ---------------------------------------------------------------------------
# the deformed inner product and Jack polynomials
# ---------------------------------------------------------------------------

def _invert_fraction_matrix(mat: list) -> list:
    """Invert a square matrix of Fractions by Gauss-Jordan elimination."""
    n = len(mat)
    aug = [row[:] + [Fraction(1) if i == j else Fraction(0) for j in range(n)]
           for i, row in enumerate(mat)]
    for col in range(n):
        pivot = next(r for r in range(col, n) if aug[r][col] != 0)
        aug[col], aug[pivot] = aug[pivot], aug[col]
        inv = Fraction(1) / aug[col][col]
        aug[col] = [x * inv for x in aug[col]]
        for r in range(n):
            if r != col and aug[r][col] != 0:
                factor = aug[r][col]
                aug[r] = [a - factor * b for a, b in zip(aug[r], aug[col])]
    return [row[n:] for row in aug]


@lru_cache(maxsize=None)
def _monomial_gram(theta: Fraction, degree: int):
    """Gram matrix <m_alpha, m_beta> of monomials in homogeneous degree `degree`.

    Computed by writing m in the power-sum basis (inverting the integer
    matrix of p-to-m expansions) and using
    <p_lam, p_mu> = delta_{lam mu} z_lam theta^{-len(lam)}.
    Returns (parts, gram) with parts in reverse-lex order.
    """
    parts = list(partitions_of_size(degree))
    index = {p: i for i, p in enumerate(parts)}
    n = len(parts)
    p_to_m = [[Fraction(0)] * n for _ in range(n)]
    for i, lam in enumerate(parts):
        for mu, c in _power_sum_in_monomials(lam):
            p_to_m[i][index[mu]] = Fraction(c)
    m_to_p = _invert_fraction_matrix(p_to_m)
    # <m_a, m_b> = sum_lam  M2P[a][lam] M2P[b][lam] z_lam theta^{-len}
    weights = [z_factor(lam) * theta ** (-len(lam)) for lam in parts]
    gram = [[sum(m_to_p[a][l] * m_to_p[b][l] * weights[l] for l in range(n))
             for b in range(n)] for a in range(n)]
    return parts, gram


@lru_cache(maxsize=None)
def _jack_tables(theta: Fraction, degree: int):
    """Jack polynomials of the given degree in the monomial basis (universal).

    Gram-Schmidt over partitions in increasing lexicographic order (a linear
    extension of dominance order) with leading coefficient 1 on m_lam.
    Returns (jack, norms): dicts keyed by partition; jack[lam] is an item
    tuple of (mu, coeff), norms[lam] = <P_lam, P_lam>.
    """
    parts, gram = _monomial_gram(theta, degree)
    index = {p: i for i, p in enumerate(parts)}

    def pairing(vec_a: dict, vec_b: dict) -> Fraction:
        total = Fraction(0)
        for mu_a, ca in vec_a.items():
            row = gram[index[mu_a]]
            for mu_b, cb in vec_b.items():
                total += ca * cb * row[index[mu_b]]
        return total

    jack: dict = {}
    norms: dict = {}
    for lam in sorted(parts):  # ascending lex extends dominance
        vec = {lam: Fraction(1)}
        for mu in jack:
            prev = dict(jack[mu])
            coeff = pairing({lam: Fraction(1)}, prev) / norms[mu]
            if coeff:
                for key, val in prev.items():
                    vec[key] = vec.get(key, Fraction(0)) - coeff * val
        vec = {k: v for k, v in vec.items() if v != 0}
        # unitriangularity in dominance order is a theorem; enforce it here so
        # any future regression in the ordering is caught immediately
        for mu in vec:
            if mu != lam and not dominates(lam, mu):
                raise AssertionError(f"Jack triangularity violated: {mu} not below {lam}")
        jack[lam] = tuple(sorted(vec.items()))
        norms[lam] = pairing(vec, vec)
    return jack, norms


def jack_in_monomials(lam, theta) -> dict:
    """Universal Jack polynomial P_lam(theta) as a dict {mu: Fraction}."""
    lam = as_partition(lam)
    if sum(lam) > DEGREE_CAP:
        raise ValueError(f"degree {sum(lam)} exceeds cap {DEGREE_CAP}")
    theta = as_theta(theta)
    jack, _ = _jack_tables(theta, sum(lam))
    return dict(jack[lam])


def jack_poly(lam, num_vars: int, theta) -> SymmetricPolynomial:
    """Jack polynomial P_lam(x_1..x_N; theta) with monomial normalization.

    Restriction to N variables drops monomial keys longer than N; requires
    len(lam) <= N so the leading term survives.
    """
    lam = as_partition(lam)
    if len(lam) > num_vars:
        raise ValueError(f"len(lam)={len(lam)} exceeds num_vars={num_vars}")
    uni = jack_in_monomials(lam, theta)
    kept = {mu: c for mu, c in uni.items() if len(mu) <= num_vars}
    return SymmetricPolynomial(num_vars, kept)


def jack_principal_value(lam, num_vars: int, theta) -> Fraction:
    """P_lam(1, 1, ..., 1; theta) with num_vars ones (exact)."""
    poly = jack_poly(lam, num_vars, theta)
    return sum((c * monomial_count(mu, num_vars) for mu, c in poly.coeffs.items()),
               Fraction(0))


def jack_normalized_eval(lam, xs, theta):
    """The normalized Jack J^hat_lam(xs) = P_lam(xs) / P_lam(1^N)."""
    xs = list(xs)
    poly = jack_poly(lam, len(xs), theta)
    denom = jack_principal_value(lam, len(xs), theta)
    return eval_poly(poly, xs) / denom


def expand_in_jack_basis(poly: SymmetricPolynomial, theta) -> dict:
    """Write ``poly`` as sum_lam c_lam P_lam(theta); returns {lam: Fraction}.

    Works degree by degree via back-substitution against the unitriangular
    Jack-to-monomial expansion (largest lex key first).  Exact: raises if the
    residual fails to clear, which cannot happen for valid input.
    """
    theta = as_theta(theta)
    out: dict = {}
    for degree in sorted(poly.degrees()):
        if degree > DEGREE_CAP:
            raise ValueError(f"degree {degree} exceeds cap {DEGREE_CAP}")
        residual = {mu: c for mu, c in poly.coeffs.items() if sum(mu) == degree}
        while residual:
            lam = max(residual)  # largest lex = not dominated by anything left
            c = residual.pop(lam)
            if c == 0:
                continue
            if len(lam) > poly.num_vars:
                raise AssertionError("residual key exceeds variable count")
            for mu, v in jack_in_monomials(lam, theta).items():
                if mu == lam or len(mu) > poly.num_vars:
                    continue
                residual[mu] = residual.get(mu, Fraction(0)) - c * v
                if residual[mu] == 0:
                    del residual[mu]
            out[lam] = out.get(lam, Fraction(0)) + c
    return {k: v for k, v in out.items() if v != 0}


# ---------------------------------------------------------------------------
# evaluation
# ---------------------------------------------------------------------------

def _orbit_sum(mu: tuple, xs: list):
    """m_mu(xs) by summing over injective assignments of parts to variables.

    Ordered injective tuples overcount each monomial by prod(mult_v!), so we
    divide once at the end.
    """
    n = len(xs)
    ell = len(mu)
    if ell > n:
        return 0 * xs[0] if xs else 0
    used = [False] * n

    def rec(i):
        if i == ell:
            return 1
        total = 0
        for j in range(n):
            if used[j]:
                continue
            used[j] = True
            total += xs[j] ** mu[i] * rec(i + 1)
            used[j] = False
        return total

    total = rec(0)
    denom = 1
    for mult in multiplicities(mu).values():
        for t in range(1, mult + 1):
            denom *= t
    return total / denom if not isinstance(total, int) else Fraction(total, denom)


def eval_poly(poly: SymmetricPolynomial, xs):
    """Evaluate at the point ``xs`` (Fractions stay exact; floats/complex work)."""
    xs = list(xs)
    if len(xs) != poly.num_vars:
        raise ValueError(f"expected {poly.num_vars} values, got {len(xs)}")
    exact = all(isinstance(x, (int, Fraction)) for x in xs)
    if exact:
        xs = [Fraction(x) for x in xs]
    total = Fraction(0) if exact else 0.0
    for mu, c in poly.coeffs.items():
        term = _orbit_sum(mu, xs)
        total = total + (c * term if exact else float(c) * term)
    return total


# ---------------------------------------------------------------------------
# JSON round trip
# ---------------------------------------------------------------------------

def poly_to_json(poly: SymmetricPolynomial) -> str:
    """Serialize with exact rational coefficients as "p/q" strings."""
    payload = {
        "num_vars": poly.num_vars,
        "terms": [
            {"partition": list(mu), "coeff": str(c)}
            for mu, c in sorted(poly.coeffs.items())
        ],
    }
    return json.dumps(payload, indent=None, sort_keys=True)


def poly_from_json(text: str) -> SymmetricPolynomial:
    payload = json.loads(text)
    coeffs = {tuple(t["partition"]): Fraction(t["coeff"]) for t in payload["terms"]}
    return SymmetricPolynomial(payload["num_vars"], coeffs)
