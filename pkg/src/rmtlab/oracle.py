"""Exact moment oracle for the multiplicative Jacobi chain.

Everything here is computed in exact rational arithmetic.  The central fact is
that the normalized Jack polynomials diagonalize one multiplicative step of
the chain: for a single step with parameters ``(alpha, M)`` on ``N``
particles,

    E[ J^hat_kappa(y) ]  =  h_ratio(kappa, N, M, alpha, theta),

a finite product of rising-factorial ratios, and for the product of a fixed
point configuration with a fresh step the expectation factorizes coefficient
by coefficient in the normalized-Jack basis.  Joint moments of power sums
observed at several times are therefore computed by walking the time axis
from the latest observation back to time zero, alternating between

  * absorbing a power-sum factor into the current Jack expansion, and
  * replacing each Jack coefficient by its one-step expected value,

until the (deterministic) initial configuration of all-ones is reached, where
every normalized Jack evaluates to 1 and the answer is the plain sum of
coefficients.

A small Schur-process brute-force evaluator lives here too: it computes joint
observable expectations by explicit dynamic programming over partition
chains, with a proven geometric bound on the truncation tail.  It serves as
the fully independent cross-check for the contour-integral route.
"""

from __future__ import annotations

import json
import math
from collections import defaultdict
from fractions import Fraction

from .partitions import (
    as_partition,
    horizontal_strip_extensions,
    rising_factorial,
)
from .process import ProcessSchedule
from .symfunc import (
    DEGREE_CAP,
    SymmetricPolynomial,
    as_theta,
    expand_in_jack_basis,
    jack_in_monomials,
    jack_principal_value,
    multiply_power_sum,
)

__all__ = [
    "h_ratio",
    "step_expectation",
    "exact_joint_moment",
    "schur_observable",
    "schur_process_bruteforce",
    "fixture_record",
    "load_fixture_value",
]


def h_ratio(kappa, num_particles: int, m_param: int, alpha, theta) -> Fraction:
    """Expected normalized Jack polynomial under one Jacobi step.

    Returns  prod_{i<=N, j<=M} (s_ij)_{kappa_i} / (theta + s_ij)_{kappa_i}
    with s_ij = theta * (N - i + M - j + alpha), where (x)_k is the rising
    factorial.  Rows of ``kappa`` beyond its length contribute factor 1, as
    do all rows when ``kappa`` is empty.
    """
    kappa = as_partition(kappa)
    theta = as_theta(theta)
    alpha = Fraction(alpha)
    if alpha <= 0:
        raise ValueError("alpha must be > 0")
    if not isinstance(m_param, int) or m_param < 1:
        raise ValueError("integer M >= 1 required")
    if num_particles < 1:
        raise ValueError("num_particles must be >= 1")
    if len(kappa) > num_particles:
        raise ValueError("partition has more rows than particles")

    out = Fraction(1)
    for i, k_i in enumerate(kappa, start=1):
        for j in range(1, m_param + 1):
            s = theta * (num_particles - i + m_param - j + alpha)
            if s <= 0:
                raise ValueError(f"nonpositive pole shift s[{i},{j}] = {s}")
            out *= rising_factorial(s, k_i) / rising_factorial(theta + s, k_i)
    return out


def step_expectation(state: dict, num_particles: int, m_param: int, alpha, theta) -> dict:
    """Push a normalized-Jack expansion through one multiplicative step.

    ``state`` maps partitions to coefficients of normalized Jacks; the result
    multiplies each coefficient by the matching ``h_ratio``.  Linear, and the
    empty partition's coefficient is preserved exactly.
    """
    return {
        kappa: coeff * h_ratio(kappa, num_particles, m_param, alpha, theta)
        for kappa, coeff in state.items()
    }


def _absorb_power_sum(state: dict, k: int, num_particles: int, theta) -> dict:
    """Multiply the configuration polynomial by p_k inside the Jack expansion.

    Converts the normalized-Jack expansion to the monomial basis, multiplies
    by the power sum, re-expands in Jack polynomials, and renormalizes.
    """
    coeffs: dict = defaultdict(Fraction)
    for kappa, c in state.items():
        scale = c / jack_principal_value(kappa, num_particles, theta)
        for mu, a in jack_in_monomials(kappa, theta).items():
            if len(mu) <= num_particles:
                coeffs[mu] += scale * a
    poly = SymmetricPolynomial(num_particles, dict(coeffs))
    poly = multiply_power_sum(poly, k)
    expanded = expand_in_jack_basis(poly, theta)
    return {
        lam: d * jack_principal_value(lam, num_particles, theta)
        for lam, d in expanded.items()
        if d != 0
    }


def exact_joint_moment(ks, ts, schedule: ProcessSchedule, theta) -> Fraction:
    """Exact joint power-sum moment  E[ prod_i p_{k_i}(y at time T_i) ].

    ``ks`` are positive integer power-sum orders with sum at most
    ``DEGREE_CAP``; ``ts`` the matching observation times (1-based, within the
    schedule).  Order of the (k, T) pairs is immaterial.
    """
    ks = [int(k) for k in ks]
    ts = [int(t) for t in ts]
    if len(ks) != len(ts):
        raise ValueError("ks and ts must have equal length")
    if not ks:
        return Fraction(1)
    if any(k < 1 for k in ks):
        raise ValueError("power-sum orders must be >= 1")
    if any(t < 1 for t in ts):
        raise ValueError("observation times must be >= 1")
    total = sum(ks)
    if total > DEGREE_CAP:
        raise ValueError(f"total degree {total} exceeds cap {DEGREE_CAP}")
    t_max = max(ts)
    if t_max > len(schedule):
        raise ValueError("schedule shorter than the latest observation time")
    theta = as_theta(theta)
    n = schedule.num_particles

    by_time: dict = defaultdict(list)
    for k, t in zip(ks, ts):
        by_time[t].append(k)

    state: dict = {(): Fraction(1)}
    for tau in range(t_max, 0, -1):
        for k in by_time.get(tau, ()):
            state = _absorb_power_sum(state, k, n, theta)
        alpha = Fraction(schedule.alpha_at(tau))
        m_param = schedule.m_at(tau)
        if not isinstance(m_param, int):
            raise ValueError("exact oracle requires integer M in every step")
        state = step_expectation(state, n, m_param, alpha, theta)
    return sum(state.values(), Fraction(0))


# ---------------------------------------------------------------------------
# Schur-process brute force
# ---------------------------------------------------------------------------


def schur_observable(lam, t):
    """The multiplicative observable  (1 - 1/t) * sum_i t^(lam_i - i + 1) + t^(-n).

    Independent of the padding length n as long as n >= len(lam); evaluated
    at n = len(lam).  Exact for rational ``t``.
    """
    lam = as_partition(lam)
    n = len(lam)
    if n == 0:
        return t**0
    one = t**0
    acc = sum((t ** (part - i) for i, part in enumerate(lam)), start=0 * one)
    return (one - one / t) * acc + one / t**n


def _schur_eval(lam, xs):
    """s_lam(x_1..x_n) by summing over horizontal-strip chains, one variable
    per level.  Exact when the inputs are exact."""
    lam = as_partition(lam)
    if len(lam) > len(xs):
        return 0 * (sum(xs) if xs else 0)
    target = sum(lam)
    state = {(): 1}
    for x in xs:
        nxt: dict = defaultdict(lambda: 0)
        for mu, val in state.items():
            for nu in horizontal_strip_extensions(mu, target):
                nxt[nu] = nxt[nu] + val * x ** (sum(nu) - sum(mu))
        state = dict(nxt)
    return state.get(lam, 0)


def schur_process_bruteforce(a, b, ts, ns, cutoff: int = 30):
    """Joint observable expectation under the ascending Schur process.

    The process weights a chain  empty = L0 -> L1 -> ... -> LM  of partitions
    (consecutive horizontal strips, at most ``len(a)`` rows at the top) by
    prod_j b_j^{|Lj| - |L(j-1)|} * s_{LM}(a), normalized by
    prod_{i,j} (1 - a_i b_j)^(-1).  Returns ``(value, tail_bound)`` where
    ``value`` sums all chains with |LM| <= cutoff of the expectation of
    prod_i observable(t_i, L at level n_i), and ``tail_bound`` is a proven
    upper bound on the absolute truncation error (geometric tail estimate).

    Requires max a_i b_j <= 1/2 so the tail is summable with room to spare.
    """
    a = list(a)
    b = list(b)
    ts = list(ts)
    ns = [int(n) for n in ns]
    if len(ts) != len(ns):
        raise ValueError("ts and ns must have equal length")
    n_vars = len(a)
    m_levels = len(b)
    if n_vars < 1 or m_levels < 1:
        raise ValueError("need at least one variable on each side")
    if any(x <= 0 for x in a) or any(x <= 0 for x in b):
        raise ValueError("a and b entries must be positive")
    if any(t <= 0 for t in ts):
        raise ValueError("observable parameters t must be positive")
    if any(not 1 <= n <= m_levels for n in ns):
        raise ValueError("observation levels must lie in 1..len(b)")
    r = max(x * y for x in a for y in b)
    if r > 0.5:
        raise ValueError("max a_i*b_j must be <= 1/2")
    cutoff = int(cutoff)
    if cutoff < n_vars:
        raise ValueError("cutoff must be at least len(a)")

    by_level: dict = defaultdict(list)
    for t, n in zip(ts, ns):
        by_level[n].append(t)

    # Forward DP over levels; prune states that can never reach a top
    # partition with at most n_vars rows (rows only grow along the chain).
    state = {(): 1}
    for j in range(1, m_levels + 1):
        b_j = b[j - 1]
        nxt: dict = defaultdict(lambda: 0)
        for mu, val in state.items():
            for nu in horizontal_strip_extensions(mu, cutoff, max_length=n_vars):
                nxt[nu] = nxt[nu] + val * b_j ** (sum(nu) - sum(mu))
        state = dict(nxt)
        for t in by_level.get(j, ()):
            state = {lam: val * schur_observable(lam, t) for lam, val in state.items()}

    norm = 1
    for x in a:
        for y in b:
            norm = norm * (1 - x * y)
    value = sum(val * _schur_eval(lam, a) for lam, val in state.items()) * norm

    # Tail bound: for |LM| = s > cutoff,
    #   Prob(|LM| = s) <= norm^+ * C(s + NM - 1, s) * r^s      (Cauchy kernel)
    #   |observable(t, L)| <= (|1 - 1/t| * N + 1) * rho^s,  rho = max(t, 1/t)
    # so the terms are bounded by a ratio-tested geometric series.
    rho_prod = 1.0
    const_prod = 1.0
    for t in ts:
        tf = float(t)
        rho_prod *= max(tf, 1.0 / tf)
        const_prod *= abs(1.0 - 1.0 / tf) * n_vars + 1.0
    rf = float(r)
    norm_plus = float(norm) if norm > 0 else 1.0
    s0 = cutoff + 1
    ratio = (s0 + n_vars * m_levels) / (s0 + 1.0) * rf * rho_prod
    if ratio >= 1.0:
        raise ValueError(
            f"tail ratio {ratio:.3f} >= 1 at cutoff {cutoff}; raise the cutoff "
            "or shrink the parameters"
        )
    log_term = (
        math.lgamma(s0 + n_vars * m_levels)
        - math.lgamma(s0 + 1)
        - math.lgamma(n_vars * m_levels)
        + s0 * math.log(rf * rho_prod)
    )
    tail = norm_plus * const_prod * math.exp(log_term) / (1.0 - ratio)
    return value, tail


# ---------------------------------------------------------------------------
# JSON fixtures
# ---------------------------------------------------------------------------


def fixture_record(name: str, params: dict, value) -> dict:
    """JSON-ready record freezing an exact value with its parameters."""
    if isinstance(value, Fraction):
        encoded = f"{value.numerator}/{value.denominator}"
    elif isinstance(value, int):
        encoded = f"{value}/1"
    else:
        raise TypeError("fixture values must be exact rationals")
    return {"name": name, "params": params, "value": encoded}


def load_fixture_value(record: dict) -> Fraction:
    """Inverse of :func:`fixture_record` for the value field."""
    num, den = record["value"].split("/")
    return Fraction(int(num), int(den))


def dump_fixtures(records, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(list(records), fh, indent=1)
        fh.write("\n")


def load_fixtures(path) -> list:
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)
