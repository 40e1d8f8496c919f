"""Parameter bookkeeping for the multiplicative Jacobi chain.

A :class:`ProcessSchedule` fixes the particle count ``N`` and, for each step
``tau = 1, 2, ...``, the Jacobi parameters ``(alpha_tau, M_tau)`` of the factor
multiplied in at that step.  The chain starts at step 1 (the first factor *is*
the state at time 1), so all time indices in this package are 1-based.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction


def _is_rational(x) -> bool:
    return isinstance(x, (int, Fraction))


@dataclass(frozen=True)
class ProcessSchedule:
    """Particle count plus per-step Jacobi parameters (alpha_tau, M_tau).

    ``alpha`` entries may be int, Fraction, or float (> 0); ``M`` entries are
    kept as given — integer for anything touching the samplers or the exact
    oracle, real M >= N tolerated by the contour evaluators.
    """

    num_particles: int
    steps: tuple

    def __post_init__(self):
        if self.num_particles < 1:
            raise ValueError("num_particles must be >= 1")
        steps = tuple((alpha, m) for alpha, m in self.steps)
        if not steps:
            raise ValueError("schedule needs at least one step")
        for tau, (alpha, m) in enumerate(steps, start=1):
            if not alpha > 0:
                raise ValueError(f"step {tau}: alpha must be > 0, got {alpha!r}")
            if not m > 0:
                raise ValueError(f"step {tau}: M must be > 0, got {m!r}")
        object.__setattr__(self, "steps", steps)

    @classmethod
    def constant(cls, num_particles: int, alpha, m, length: int) -> "ProcessSchedule":
        """Schedule repeating the same (alpha, M) for ``length`` steps."""
        return cls(num_particles, ((alpha, m),) * length)

    def __len__(self) -> int:
        return len(self.steps)

    def alpha_at(self, tau: int):
        """alpha of step tau (1-based)."""
        return self.steps[self._index(tau)][0]

    def m_at(self, tau: int):
        """M of step tau (1-based)."""
        return self.steps[self._index(tau)][1]

    def _index(self, tau: int) -> int:
        if not 1 <= tau <= len(self.steps):
            raise IndexError(f"step {tau} outside schedule of length {len(self.steps)}")
        return tau - 1

    def is_exact(self) -> bool:
        """True when every parameter is rational (int/Fraction) — oracle-safe."""
        return all(_is_rational(a) and isinstance(m, int) for a, m in self.steps)

    def require_integer_m(self) -> None:
        for tau, (_, m) in enumerate(self.steps, start=1):
            if not isinstance(m, int):
                raise ValueError(f"step {tau}: integer M required, got {m!r}")
