"""Matrix-model samplers for the classical beta = 1, 2, 4 cases.

This is the simulation route of the package: products of truncated Haar
matrices whose squared singular values realize the multiplicative Jacobi
chain (quadrature lives in :mod:`rmtlab.formulas`, the exact rational
route in :mod:`rmtlab.oracle`; the three never share code).

Quaternion matrices are represented as ``2L x 2L`` complex matrices in the
big-block form ``[[A, B], [-conj(B), conj(A)]]``; their singular values come
in exactly degenerate pairs which are deduplicated on output.

Long products are accumulated in the factored form ``U exp(diag(l)) W*``
with only ``U`` (orthonormal columns) and the log-scales ``l`` tracked; the
right factor never enters any spectral statistic.  Refactorization works in
grade windows so no exponential is ever formed across the full dynamic
range of the spectrum — log singular values stay finite and accurate even
when the spectrum spans thousands of e-folds.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction

import numpy as np
import scipy.linalg
from scipy import integrate

from .process import ProcessSchedule

__all__ = [
    "BetaClass",
    "SingularSpectrum",
    "StabilityError",
    "MatrixProductState",
    "sample_ginibre",
    "sample_haar",
    "sample_truncated_haar",
    "truncate",
    "product_squared_singular_values",
    "rectangular_product_squared_singular_values",
    "jacobi_density",
    "jacobi_normalization",
    "write_spectra_csv",
    "read_spectra_csv",
]


class StabilityError(RuntimeError):
    """Raised when a product accumulation cannot be certified accurate."""


class BetaClass(Enum):
    """Division algebra of matrix entries: real, complex, or quaternion."""

    REAL = 1
    COMPLEX = 2
    QUATERNION = 4

    @property
    def beta(self) -> int:
        return self.value

    @property
    def theta(self) -> Fraction:
        return Fraction(self.value, 2)

    @classmethod
    def coerce(cls, value) -> "BetaClass":
        if isinstance(value, cls):
            return value
        try:
            return cls(int(value))
        except (ValueError, TypeError):
            raise ValueError(f"beta must be one of 1, 2, 4; got {value!r}") from None


@dataclass(frozen=True)
class SingularSpectrum:
    """Log squared singular values of one product state, sorted decreasing."""

    log_values: np.ndarray
    time_index: int

    def __post_init__(self):
        vals = np.asarray(self.log_values, dtype=float)
        if vals.ndim != 1 or vals.size == 0:
            raise ValueError("log_values must be a nonempty 1-d vector")
        if np.any(np.diff(vals) > 1e-9):
            raise ValueError("log_values must be weakly decreasing")
        if self.time_index < 1:
            raise ValueError("time_index must be >= 1")
        vals.flags.writeable = False
        object.__setattr__(self, "log_values", vals)

    @property
    def values(self) -> np.ndarray:
        """Squared singular values (may underflow; prefer log_values)."""
        return np.exp(self.log_values)

    def power_sum(self, k, *, log_scale: float = 0.0) -> float:
        """sum_i (y_i / exp(log_scale))**k, evaluated stably in log space."""
        return float(np.sum(np.exp(k * (self.log_values - log_scale))))


def _complex_gaussian(rng, shape):
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / math.sqrt(2.0)


def sample_ginibre(beta, rows: int, cols: int, rng) -> np.ndarray:
    """Matrix of i.i.d. standard Gaussians over the requested algebra.

    Complex entries have E|g|^2 = 1; quaternion entries are built from two
    unit-variance complex components, returned as the 2*rows x 2*cols
    complex block representation.
    """
    beta = BetaClass.coerce(beta)
    if rows < 1 or cols < 1:
        raise ValueError("rows and cols must be >= 1")
    if beta is BetaClass.REAL:
        return rng.standard_normal((rows, cols))
    if beta is BetaClass.COMPLEX:
        return _complex_gaussian(rng, (rows, cols))
    a = _complex_gaussian(rng, (rows, cols))
    b = _complex_gaussian(rng, (rows, cols))
    return np.block([[a, b], [-b.conj(), a.conj()]])


def _positive_diagonal_fix(q, r):
    d = np.diagonal(r).copy()
    d[d == 0] = 1.0
    return q * (d / np.abs(d))


def _quaternion_partner(v, l: int):
    # antiunitary structure map: partner of column v is -J conj(v)
    return np.concatenate([-v[l:].conj(), v[:l].conj()])


def _structured_frame(x, l: int, cols: int) -> np.ndarray:
    """Orthonormalize quaternion columns of the 2l x 2l block matrix x.

    Modified Gram-Schmidt with one reorthogonalization pass; each accepted
    column is stored together with its structure partner so the output frame
    is exactly quaternionic.  Returns the 2l x 2*cols block frame.
    """
    out = np.zeros((2 * l, 2 * cols), dtype=complex)
    for j in range(cols):
        v = x[:, j].astype(complex, copy=True)
        # columns of ``out`` are laid out big-block style: partner of column
        # j lives at cols + j, so gather the filled ones explicitly
        filled = [out[:, i] for i in range(j)] + [out[:, cols + i] for i in range(j)]
        for _ in range(2):
            for q in filled:
                v -= q * (q.conj() @ v)
        nrm = np.linalg.norm(v)
        if nrm == 0.0:
            raise StabilityError("degenerate column in quaternion orthonormalization")
        v /= nrm
        out[:, j] = v
        out[:, cols + j] = _quaternion_partner(v, l)
    return out


def sample_haar(beta, l: int, rng) -> np.ndarray:
    """Haar-distributed orthogonal/unitary/quaternion-unitary matrix.

    QR of a Ginibre sample with the R-diagonal normalized positive; the
    quaternion case orthonormalizes in quaternion arithmetic so the block
    structure holds exactly.
    """
    beta = BetaClass.coerce(beta)
    if l < 1:
        raise ValueError("l must be >= 1")
    if beta is BetaClass.QUATERNION:
        return _structured_frame(sample_ginibre(beta, l, l, rng), l, l)
    g = sample_ginibre(beta, l, l, rng)
    q, r = np.linalg.qr(g)
    return _positive_diagonal_fix(q, r)


def truncate(u: np.ndarray, rows: int, cols: int, beta=BetaClass.COMPLEX) -> np.ndarray:
    """Top-left rows x cols block (blockwise for the quaternion representation)."""
    beta = BetaClass.coerce(beta)
    if beta is not BetaClass.QUATERNION:
        n, m = u.shape
        if rows > n or cols > m or rows < 1 or cols < 1:
            raise ValueError(f"cannot take {rows}x{cols} corner of {n}x{m} matrix")
        return u[:rows, :cols]
    l2 = u.shape[0]
    if l2 % 2 or u.shape[1] % 2:
        raise ValueError("quaternion representation must have even dimensions")
    l, lc = l2 // 2, u.shape[1] // 2
    if rows > l or cols > lc or rows < 1 or cols < 1:
        raise ValueError(f"cannot take {rows}x{cols} quaternion corner of {l}x{lc}")
    return np.block(
        [
            [u[:rows, :cols], u[:rows, lc : lc + cols]],
            [u[l : l + rows, :cols], u[l : l + rows, lc : lc + cols]],
        ]
    )


def sample_truncated_haar(beta, l: int, rows: int, cols: int, rng) -> np.ndarray:
    """rows x cols corner of a Haar matrix of size l, sampled efficiently.

    For beta = 1, 2 only the first ``cols`` columns are generated: with
    G an l x cols Ginibre block and G^H G = R^H R its Cholesky
    factorization, G R^{-1} is the positive-diagonal QR frame, so the
    corner is (first ``rows`` rows of G) R^{-1}.  This costs one rank-k
    update plus a triangular solve on the corner only, instead of a full
    QR with explicit Q.
    """
    beta = BetaClass.coerce(beta)
    if rows > l or cols > l:
        raise ValueError("corner exceeds matrix size")
    if beta is BetaClass.QUATERNION:
        return truncate(sample_haar(beta, l, rng), rows, cols, beta)
    g = sample_ginibre(beta, l, cols, rng)
    gram = g.conj().T @ g if beta is BetaClass.COMPLEX else g.T @ g
    low = np.linalg.cholesky(gram)
    # corner = g[:rows] @ inv(low^H)  <=>  low @ corner^H = g[:rows]^H
    corner_h = scipy.linalg.solve_triangular(
        low, g[:rows].conj().T, lower=True, check_finite=False
    )
    return corner_h.conj().T


# ---------------------------------------------------------------------------
# stabilized product accumulation


_WINDOW_SPAN = 20.0
_FREEZE_MARGIN = 16.0


def _graded_svd(b, logs):
    """Orthonormal factor and log singular values of b @ diag(exp(logs)).

    Columns are processed in descending-grade windows of span _WINDOW_SPAN,
    each window deflated against the already-frozen directions and SVD'd at
    its own local scale.  A direction is frozen once every unprocessed
    column sits _FREEZE_MARGIN below it (interaction with the remainder is
    then beyond double precision); otherwise it is carried into the next
    window.  The scaled exponent never exceeds the window span, so grades
    spanning thousands of e-folds neither overflow nor underflow.
    """
    rows, n = b.shape
    dtype = np.result_type(b.dtype, np.float64)
    order = np.argsort(-np.asarray(logs, dtype=float), kind="stable")
    cols = np.ascontiguousarray(b[:, order], dtype=dtype)
    grades = np.asarray(logs, dtype=float)[order]
    out_u = np.empty((rows, n), dtype=dtype)
    out_g = np.empty(n)
    n_out = 0
    carried_u = np.empty((rows, 0), dtype=dtype)
    carried_g = np.empty(0)
    ptr = 0
    while ptr < n or carried_g.size:
        g_top = carried_g[0] if carried_g.size else -np.inf
        if ptr < n:
            g_top = max(g_top, grades[ptr])
        # always take at least one fresh column (carried grades can sit in the
        # dead zone between the window span and the freeze margin)
        ptr2 = ptr
        while ptr2 < n and (ptr2 == ptr or grades[ptr2] >= g_top - _WINDOW_SPAN):
            ptr2 += 1
        block = np.concatenate([carried_u, cols[:, ptr:ptr2]], axis=1)
        block_g = np.concatenate([carried_g, grades[ptr:ptr2]])
        if n_out:
            qdone = out_u[:, :n_out]
            for _ in range(2):
                block = block - qdone @ (qdone.conj().T @ block)
        scaled = block * np.exp(block_g - g_top)[None, :]
        uw, sw, _ = np.linalg.svd(scaled, full_matrices=False)
        top = sw[0] if sw[0] > 0 else 1.0
        gw = g_top + np.log(np.maximum(sw, top * 1e-290))
        g_next = grades[ptr2] if ptr2 < n else -np.inf
        keep = int(np.sum(gw >= g_next + _FREEZE_MARGIN)) if ptr2 < n else gw.size
        out_u[:, n_out : n_out + keep] = uw[:, :keep]
        out_g[n_out : n_out + keep] = gw[:keep]
        n_out += keep
        carried_u = uw[:, keep:]
        carried_g = gw[keep:]
        ptr = ptr2
    srt = np.argsort(-out_g, kind="stable")
    return out_u[:, srt], out_g[srt]


class MatrixProductState:
    """Left-product accumulator keeping log singular values exactly finite.

    Maintains Y = U exp(diag(l)) W* for the running product, refactoring by
    a graded SVD after every ``refactor_every`` multiplications.  The core
    multiplied between refactorizations must stay numerically sane: its
    condition number is checked against ``cond_limit`` and a StabilityError
    asks the caller for a smaller interval when it is exceeded.
    """

    def __init__(self, num_cols: int, *, refactor_every: int = 1, cond_limit: float = 1e12):
        if num_cols < 1:
            raise ValueError("num_cols must be >= 1")
        if refactor_every < 1:
            raise ValueError("refactor_every must be >= 1")
        self.refactor_every = int(refactor_every)
        self.cond_limit = float(cond_limit)
        self.count = 0
        self._width = int(num_cols)
        self._u = None  # None means the identity frame (nothing absorbed yet)
        self._logs = np.zeros(num_cols)
        self._pending = None
        self._pending_count = 0

    def multiply(self, factor: np.ndarray, *, defer: bool = False) -> None:
        """Multiply the current product on the left by ``factor``.

        ``defer=True`` skips the automatic refactorization this once (useful
        right before a frameless spectrum peek); the factor still lands in
        the pending stack and is absorbed by the next refactorization.
        """
        factor = np.asarray(factor)
        if self._pending is not None:
            width = self._pending.shape[0]
        elif self._u is not None:
            width = self._u.shape[0]
        else:
            width = self._width
        if factor.ndim != 2 or factor.shape[1] != width:
            raise ValueError(f"factor must have {width} columns, got {factor.shape}")
        self._pending = factor if self._pending is None else factor @ self._pending
        self._pending_count += 1
        self.count += 1
        if self._pending_count >= self.refactor_every and not defer:
            self._refactor()

    def _core(self) -> np.ndarray:
        core = self._pending if self._u is None else self._pending @ self._u
        # A single factor carries no accumulated roundoff, so the guard only
        # gates multi-factor pending stacks (the failure mode is digits lost
        # while multiplying unfactored matrices, not a small singular value
        # of one legitimate factor).
        if self._pending_count > 1:
            # 1-norm condition estimate: cheaper than the SVD-based 2-norm
            # and it only ever overestimates, which is the safe direction
            # for a guard.  Rectangular cores fall back to the 2-norm.
            if core.shape[0] == core.shape[1]:
                cond = np.linalg.cond(core, 1)
            else:
                cond = np.linalg.cond(core)
            if not np.isfinite(cond) or cond > self.cond_limit:
                raise StabilityError(
                    f"core condition {cond:.3e} exceeds {self.cond_limit:.1e} after "
                    f"{self._pending_count} multiplications; reduce refactor_every"
                )
        return core

    def _refactor(self) -> None:
        if self._pending is None:
            return
        self._u, self._logs = _graded_svd(self._core(), self._logs)
        self._pending = None
        self._pending_count = 0

    def log_singular_values(self, *, keep_frame: bool = True) -> np.ndarray:
        """Log singular values of the accumulated product, sorted decreasing.

        With ``keep_frame=False`` the state is only peeked at: when every
        grade fits inside one refactorization window the values come from a
        single scaled values-only SVD and the pending factors stay pending
        (cheaper when the frame will never be consumed again, e.g. at the
        final observation time of a chain).  Otherwise this falls back to a
        full refactorization; results are identical either way.
        """
        if self._pending is None:
            return self._logs.copy()
        if not keep_frame and self._logs.max() - self._logs.min() <= _WINDOW_SPAN:
            core = self._core()
            g_top = self._logs.max()
            scaled = core * np.exp(self._logs - g_top)[None, :]
            vals = np.linalg.svd(scaled, compute_uv=False)
            top = vals[0] if vals[0] > 0 else 1.0
            return g_top + np.log(np.maximum(vals, top * 1e-290))
        self._refactor()
        return self._logs.copy()

    def log_squared_singular_values(self, *, keep_frame: bool = True) -> np.ndarray:
        return 2.0 * self.log_singular_values(keep_frame=keep_frame)


# ---------------------------------------------------------------------------
# product chains


def _dedupe_quaternion_pairs(log_vals):
    top, bot = log_vals[0::2], log_vals[1::2]
    gap = np.abs(top - bot)
    if np.any(gap > 1e-8 * (1.0 + np.abs(top))):
        raise StabilityError(
            f"quaternion singular values not paired (max gap {gap.max():.3e})"
        )
    return top


def rectangular_product_squared_singular_values(
    ls, ns, beta, rng, *, keep=None, refactor_every: int = 1
):
    """Spectra of X_T ... X_1 with X_t an ns[t] x ns[t-1] corner of Haar(ls[t-1]).

    ``ns`` has length T+1 and starts with the base particle count N = ns[0];
    ``ls`` has length T.  Requires N <= ns[t] and max(ns[t-1], ns[t]) <= ls[t-1]
    for every step.  Returns SingularSpectrum entries (length-N log squared
    singular values) for each time in ``keep`` (default: all of 1..T).
    """
    beta = BetaClass.coerce(beta)
    ls = [int(l) for l in ls]
    ns = [int(n) for n in ns]
    if len(ns) != len(ls) + 1:
        raise ValueError("ns must list the base size plus one size per step")
    n_base = ns[0]
    if n_base < 1:
        raise ValueError("base size must be >= 1")
    for t in range(1, len(ns)):
        if ns[t] < n_base:
            raise ValueError(f"step {t}: N_t = {ns[t]} below base size {n_base}")
        if max(ns[t - 1], ns[t]) > ls[t - 1]:
            raise ValueError(
                f"step {t}: corner {ns[t]}x{ns[t - 1]} exceeds Haar size {ls[t - 1]}"
            )
    t_max = len(ls)
    keep = set(range(1, t_max + 1)) if keep is None else {int(t) for t in keep}
    if keep and (min(keep) < 1 or max(keep) > t_max):
        raise ValueError("keep times outside the schedule")
    if not keep:
        return []
    last = max(keep)
    scale = 2 if beta is BetaClass.QUATERNION else 1
    state = MatrixProductState(scale * n_base, refactor_every=refactor_every)
    out = []
    for t in range(1, last + 1):
        x = sample_truncated_haar(beta, ls[t - 1], ns[t], ns[t - 1], rng)
        # the frame is dead weight after the last observation, so let the
        # final factor stay pending and peek at the spectrum instead
        state.multiply(x, defer=(t == last))
        if t in keep:
            logs = state.log_squared_singular_values(keep_frame=(t != last))
            if beta is BetaClass.QUATERNION:
                logs = _dedupe_quaternion_pairs(logs)
            out.append(SingularSpectrum(log_values=logs, time_index=t))
    return out


def _schedule_sizes(schedule: ProcessSchedule, t_max: int):
    n = schedule.num_particles
    ns = [n]
    ls = []
    for tau in range(1, t_max + 1):
        alpha, m = schedule.alpha_at(tau), schedule.m_at(tau)
        offset = int(alpha) - 1
        if offset != alpha - 1 or offset < 0:
            raise ValueError(
                f"step {tau}: matrix model needs integer alpha >= 1, got {alpha!r}"
            )
        if int(m) != m or m < 1:
            raise ValueError(f"step {tau}: matrix model needs integer M >= 1, got {m!r}")
        ns.append(n + offset)
        ls.append(int(m) + n + offset)
    return ls, ns


def product_squared_singular_values(
    schedule: ProcessSchedule, beta, t_max: int, rng, *, keep=None, refactor_every: int = 1
):
    """Simulate the multiplicative Jacobi chain for a classical beta.

    Step tau multiplies in an N_tau x N_{tau-1} corner of a Haar matrix of
    size M_tau + N_tau, where N_tau = N + alpha_tau - 1; this rectangular
    chain reproduces the (alpha_tau, M_tau) transition law exactly.  The
    implied sizes must form a valid chain (consecutive steps need
    alpha_prev <= alpha + M), otherwise the request is rejected.
    """
    if t_max < 1 or t_max > len(schedule):
        raise ValueError(f"t_max must be within the schedule length {len(schedule)}")
    ls, ns = _schedule_sizes(schedule, t_max)
    return rectangular_product_squared_singular_values(
        ls, ns, beta, rng, keep=keep, refactor_every=refactor_every
    )


# ---------------------------------------------------------------------------
# densities


def jacobi_density(x, alpha, m, num_particles: int, theta) -> float:
    """Unnormalized density of the static ensemble on min(M, N) particles.

    prod_{i<j} |x_i - x_j|^(2 theta) * prod_i x_i^(theta alpha - 1)
    (1 - x_i)^(theta (|M - N| + 1) - 1) on [0, 1]^n.
    """
    theta = float(theta)
    alpha = float(alpha)
    if theta <= 0 or alpha <= 0:
        raise ValueError("theta and alpha must be positive")
    n = min(int(m), int(num_particles))
    pts = np.asarray(x, dtype=float)
    if pts.shape != (n,):
        raise ValueError(f"expected {n} particles, got shape {pts.shape}")
    if np.any(pts < 0) or np.any(pts > 1):
        raise ValueError("particles must lie in [0, 1]")
    a_exp = theta * alpha - 1.0
    b_exp = theta * (abs(int(m) - int(num_particles)) + 1) - 1.0
    val = np.prod(pts**a_exp * (1.0 - pts) ** b_exp)
    if n > 1:
        diffs = np.abs(pts[:, None] - pts[None, :])[np.triu_indices(n, 1)]
        val *= np.prod(diffs ** (2.0 * theta))
    return float(val)


def jacobi_normalization(alpha, m, num_particles: int, theta) -> float:
    """Integral of jacobi_density over the cube [0, 1]^n, for n <= 3 only."""
    n = min(int(m), int(num_particles))
    if n > 3:
        raise ValueError("normalization provided for up to 3 particles only")
    if n == 1:
        f = lambda x: jacobi_density(np.array([x]), alpha, m, num_particles, theta)
        val, _ = integrate.quad(f, 0.0, 1.0, limit=200)
    elif n == 2:
        f = lambda y, x: jacobi_density(np.array([x, y]), alpha, m, num_particles, theta)
        val, _ = integrate.dblquad(f, 0.0, 1.0, 0.0, 1.0)
    else:
        f = lambda z, y, x: jacobi_density(
            np.array([x, y, z]), alpha, m, num_particles, theta
        )
        val, _ = integrate.tplquad(f, 0.0, 1.0, 0.0, 1.0, 0.0, 1.0)
    return float(val)


# ---------------------------------------------------------------------------
# persistence


def write_spectra_csv(path, spectra) -> None:
    """Write spectra as CSV rows ``time_index,i,log_sq_sv`` (i is 1-based)."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["time_index", "i", "log_sq_sv"])
        for spec in spectra:
            for i, val in enumerate(spec.log_values, start=1):
                writer.writerow([spec.time_index, i, repr(float(val))])


def read_spectra_csv(path):
    """Read spectra written by :func:`write_spectra_csv`."""
    rows = {}
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != ["time_index", "i", "log_sq_sv"]:
            raise ValueError(f"unexpected header {reader.fieldnames!r}")
        for rec in reader:
            t = int(rec["time_index"])
            rows.setdefault(t, []).append((int(rec["i"]), float(rec["log_sq_sv"])))
    out = []
    for t in sorted(rows):
        vals = [v for _, v in sorted(rows[t])]
        out.append(SingularSpectrum(log_values=np.array(vals), time_index=t))
    return out
