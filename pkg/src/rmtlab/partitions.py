"""Integer partitions: validation, enumeration, orders, and small combinatorial maps.

Partitions are plain tuples of weakly decreasing positive ints; ``()`` is the
empty partition.  Everything downstream (symmetric functions, the exact moment
oracle) treats these tuples as immutable dictionary keys.
"""

from __future__ import annotations

from fractions import Fraction
from math import factorial


def as_partition(parts) -> tuple[int, ...]:
    """Normalize *parts* to a partition tuple, dropping trailing zeros.

    Raises ValueError if entries are not weakly decreasing nonnegative ints.
    """
    t = tuple(int(p) for p in parts)
    if any(a != b for a, b in zip(t, parts)):
        raise ValueError(f"partition entries must be integers, got {parts!r}")
    while t and t[-1] == 0:
        t = t[:-1]
    if any(p <= 0 for p in t):
        raise ValueError(f"partition entries must be positive, got {parts!r}")
    if any(t[i] < t[i + 1] for i in range(len(t) - 1)):
        raise ValueError(f"partition entries must be weakly decreasing, got {parts!r}")
    return t


def is_partition(t) -> bool:
    try:
        as_partition(t)
    except (ValueError, TypeError):
        return False
    return True


def size(lam: tuple[int, ...]) -> int:
    return sum(lam)


def length(lam: tuple[int, ...]) -> int:
    return len(lam)


def conjugate(lam: tuple[int, ...]) -> tuple[int, ...]:
    """Transpose of the Young diagram."""
    if not lam:
        return ()
    cols = [0] * lam[0]
    for part in lam:
        for j in range(part):
            cols[j] += 1
    return tuple(cols)


def partitions_of_size(n: int, max_length: int | None = None, max_part: int | None = None) -> list:
    """All partitions of ``n`` in reverse-lexicographic order (largest first).

    ``partitions_of_size(4)`` is [(4,), (3,1), (2,2), (2,1,1), (1,1,1,1)].
    """
    if n < 0:
        raise ValueError("n must be >= 0")
    cap = n if max_part is None else min(max_part, n)
    ml = n if max_length is None else max_length

    def rec(remaining, largest, depth):
        if remaining == 0:
            yield ()
            return
        if depth == 0:
            return
        for first in range(min(largest, remaining), 0, -1):
            for rest in rec(remaining - first, first, depth - 1):
                yield (first,) + rest

    return list(rec(n, cap, ml))


def partitions_up_to_size(n: int, max_length: int | None = None) -> list:
    """Partitions of every size 0..n, grouped by increasing size."""
    out = []
    for d in range(n + 1):
        out.extend(partitions_of_size(d, max_length=max_length))
    return out


def dominates(lam: tuple[int, ...], mu: tuple[int, ...]) -> bool:
    """True if ``lam`` dominates ``mu`` (same size, partial sums of lam >= mu's)."""
    if sum(lam) != sum(mu):
        return False
    s_l = s_m = 0
    for i in range(max(len(lam), len(mu))):
        s_l += lam[i] if i < len(lam) else 0
        s_m += mu[i] if i < len(mu) else 0
        if s_l < s_m:
            return False
    return True


def multiplicities(lam: tuple[int, ...]) -> dict[int, int]:
    out: dict[int, int] = {}
    for p in lam:
        out[p] = out.get(p, 0) + 1
    return out


def z_factor(lam: tuple[int, ...]) -> int:
    """The centralizer size z_lambda = prod_i i^{m_i} m_i!."""
    z = 1
    for part, mult in multiplicities(lam).items():
        z *= part**mult * factorial(mult)
    return z


def monomial_count(mu: tuple[int, ...], n_vars: int) -> int:
    """Number of distinct monomials in the orbit of x^mu over ``n_vars`` variables.

    Equals the monomial symmetric polynomial m_mu evaluated at (1, ..., 1).
    """
    ell = len(mu)
    if ell > n_vars:
        return 0
    count = factorial(n_vars) // factorial(n_vars - ell)
    for mult in multiplicities(mu).values():
        count //= factorial(mult)
    return count


def is_horizontal_strip(lam: tuple[int, ...], mu: tuple[int, ...]) -> bool:
    """True if mu <= lam and lam/mu is a horizontal strip (lam_{i+1} <= mu_i <= lam_i)."""
    if len(mu) > len(lam):
        return False
    for i in range(len(lam)):
        m = mu[i] if i < len(mu) else 0
        if m > lam[i]:
            return False
        if i + 1 < len(lam) and lam[i + 1] > m:
            return False
    return True


def horizontal_strip_extensions(mu: tuple[int, ...], max_size: int, max_length: int | None = None):
    """All partitions lam >= mu with lam/mu a horizontal strip and |lam| <= max_size."""
    ell = len(mu)
    ml = ell + 1 if max_length is None else min(ell + 1, max_length)
    budget = max_size - sum(mu)
    if budget < 0:
        return

    # Row i of lam ranges over mu_i .. min(mu_{i-1}, mu_i + remaining budget);
    # an optional new row of size 1..mu_{ell-1} may be appended.
    def rec(i, prev, left, acc):
        if i == ell:
            yield tuple(acc)
            if ml > ell and left > 0:
                cap = min(prev, left)
                for extra in range(1, cap + 1):
                    yield tuple(acc) + (extra,)
            return
        lo = mu[i]
        hi = min(prev, mu[i] + left)
        for val in range(lo, hi + 1):
            acc.append(val)
            yield from rec(i + 1, mu[i], left - (val - mu[i]), acc)
            acc.pop()

    yield from rec(0, 10**9, budget, [])


def rising_factorial(x, k: int):
    """(x)_k = x (x+1) ... (x+k-1); exact when x is a Fraction."""
    if k < 0:
        raise ValueError("k must be >= 0")
    out = x * 0 + 1 if not isinstance(x, Fraction) else Fraction(1)
    for t in range(k):
        out = out * (x + t)
    return out


def set_partitions(items):
    """All set partitions of ``items`` (a sequence), as lists of tuples."""
    items = list(items)
    if not items:
        yield []
        return
    first, rest = items[0], items[1:]
    for sub in set_partitions(rest):
        # put `first` into an existing block, or into its own block
        for i in range(len(sub)):
            yield sub[:i] + [(first,) + sub[i]] + sub[i + 1:]
        yield [(first,)] + sub
