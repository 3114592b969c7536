"""Controllability and observability Gramians.

Infinite-horizon Gramians come from the Lyapunov equation

    A W + W A^T + B B^T = 0,

solved by Schur reduction (factor A once, back-substitute per right-hand
side).  Finite-horizon Gramians come from a single block matrix
exponential, composed over doubling sub-intervals when the horizon is
long enough to overflow the naive formula.
"""

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import get_lapack_funcs

from .exceptions import DimensionError, DomainError, NumericalError, StabilityError
from .numerics import (
    DEFAULT_STABILITY_MARGIN,
    as_matrix,
    as_square,
    matrix_exponential,
    real_schur,
    spectral_abscissa,
    symmetrize,
)

__all__ = [
    "Gramian",
    "LyapunovSolver",
    "solve_lyapunov",
    "lyapunov_residual",
    "controllability_gramian",
    "finite_horizon_gramian",
    "observability_gramian",
]

# Symmetry tolerance accepted for Lyapunov right-hand sides.
_RHS_SYMMETRY_RTOL = 1e-8

# The finite-horizon block exponential is split into 2**k sub-intervals
# so that t_sub * ||A||_1 stays below this bound.  The F12 block is only
# accurate to eps * ||expm(block)||, and the -A block grows like
# e^{t_sub ||A||}, so the bound must keep that amplification near 1 --
# not merely below overflow.
_BLOCK_NORM_BOUND = 4.0


@dataclass(frozen=True)
class Gramian:
    """A symmetric positive-semidefinite energy matrix.

    ``horizon`` is the integration horizon in time units, ``math.inf``
    for the steady-state (Lyapunov) Gramian.  ``source`` is a free-form
    label used in diagnostics (candidate id, "obs", ...).
    """

    matrix: np.ndarray
    horizon: float = math.inf
    source: str = field(default="", compare=False)

    def __post_init__(self):
        m = as_square(self.matrix, "gramian matrix")
        object.__setattr__(self, "matrix", symmetrize(m))
        h = float(self.horizon)
        if not (h > 0.0):  # also rejects NaN
            raise DomainError(f"horizon must be positive, got {self.horizon}")
        object.__setattr__(self, "horizon", h)

    @property
    def n(self):
        return self.matrix.shape[0]

    @property
    def is_infinite_horizon(self):
        return math.isinf(self.horizon)

    def trace(self):
        return float(np.trace(self.matrix))

    def min_eigenvalue(self):
        return float(np.linalg.eigvalsh(self.matrix)[0])


class LyapunovSolver:
    """Schur-reduction Lyapunov back end bound to one dynamics matrix.

    Factors ``a = U T U^T`` once; each :meth:`solve` then costs one
    quasi-triangular Sylvester solve (LAPACK ``*trsyl``) plus two basis
    transforms.  Ranking thousands of candidate columns against the same
    dynamics reuses the factorization.
    """

    def __init__(self, a, margin=DEFAULT_STABILITY_MARGIN):
        a = as_square(a, "a")
        alpha = spectral_abscissa(a)
        if not alpha < -margin:
            raise StabilityError(
                f"dynamics matrix is not Hurwitz within margin {margin:g}: "
                f"max Re(eigenvalue) = {alpha:.6e}",
                max_real_part=alpha,
            )
        self.a = a
        self.margin = float(margin)
        self._u, self._t = real_schur(a)
        self._trsyl = get_lapack_funcs("trsyl", (self._t, self._t))

    @property
    def n(self):
        return self.a.shape[0]

    def solve(self, q):
        """Solve a W + W a^T + q = 0 for symmetric q; returns symmetric W."""
        q = as_square(q, "q")
        n = self.n
        if q.shape[0] != n:
            raise DimensionError(f"q has shape {q.shape}, expected ({n}, {n})")
        if np.linalg.norm(q - q.T) > _RHS_SYMMETRY_RTOL * max(1.0, np.linalg.norm(q)):
            raise DomainError("right-hand side q must be symmetric")
        q = symmetrize(q)
        f = self._u.T @ (-q) @ self._u
        y, scale, info = self._trsyl(self._t, self._t, f, tranb="C")
        if info < 0:
            raise NumericalError(f"trsyl: illegal argument {-info}")
        if info == 1:
            warnings.warn(
                "trsyl perturbed nearly-common eigenvalues to solve; "
                "result may be inaccurate",
                RuntimeWarning,
                stacklevel=2,
            )
        if scale != 1.0:
            if scale == 0.0:
                raise NumericalError("trsyl returned zero scale (overflow)")
            y = y / scale
        return symmetrize(self._u @ y @ self._u.T)

    def gramian(self, b, source=""):
        """Infinite-horizon controllability Gramian of the pair (a, b)."""
        b = _input_matrix(b, self.n)
        return Gramian(self.solve(_outer(b)), horizon=math.inf, source=source)


def _input_matrix(b, n):
    b = np.asarray(b, dtype=float)
    if b.ndim == 1:
        b = b[:, None]
    b = as_matrix(b, "b")
    if b.shape[0] != n:
        raise DimensionError(f"b has {b.shape[0]} rows, expected {n}")
    return b


def _outer(b):
    return symmetrize(b @ b.T)


def solve_lyapunov(a, q, margin=DEFAULT_STABILITY_MARGIN):
    """One-shot solve of a W + W a^T + q = 0 (a Hurwitz, q symmetric)."""
    return LyapunovSolver(a, margin=margin).solve(q)


def lyapunov_residual(a, w, q):
    """Frobenius norm of a w + w a^T + q."""
    a = as_square(a, "a")
    return float(np.linalg.norm(a @ w + w @ a.T + q))


def controllability_gramian(a, b, margin=DEFAULT_STABILITY_MARGIN, source=""):
    """Infinite-horizon controllability Gramian of (a, b).

    Parameters
    ----------
    a : (n, n) array_like
        Hurwitz dynamics matrix.
    b : (n, m) or (n,) array_like
        Input matrix (a single column may be passed as a vector).

    Returns
    -------
    Gramian
        W solving ``a W + W a^T + b b^T = 0``.
    """
    return LyapunovSolver(a, margin=margin).gramian(b, source=source)


def observability_gramian(a, c, margin=DEFAULT_STABILITY_MARGIN, source="obs"):
    """Observability Gramian of (a, c): the controllability Gramian of
    the dual pair (a^T, c^T), computed through the identical code path."""
    a = as_square(a, "a")
    c = as_matrix(np.atleast_2d(np.asarray(c, dtype=float)), "c")
    if c.shape[1] != a.shape[0]:
        raise DimensionError(f"c has {c.shape[1]} columns, expected {a.shape[0]}")
    return controllability_gramian(a.T, c.T, margin=margin, source=source)


def finite_horizon_gramian(a, b, t, source=""):
    """Finite-horizon controllability Gramian W(t) = int_0^t e^{As} BB^T e^{A^T s} ds.

    Evaluates the block exponential

        expm(t * [[-A, BB^T], [0, A^T]]) = [[.., F12], [0, F22]],
        W(t) = F22^T F12,

    which requires no quadrature and no stability assumption on ``a``.
    Long horizons are split into 2**k equal sub-intervals composed by the
    exact doubling rule W(2t) = W(t) + e^{At} W(t) e^{A^T t}, keeping the
    inverse-propagator block e^{-At} representable.
    """
    a = as_square(a, "a")
    t = float(t)
    if not (t > 0.0 and math.isfinite(t)):
        raise DomainError(f"horizon t must be positive and finite, got {t}")
    n = a.shape[0]
    b = _input_matrix(b, n)
    qmat = _outer(b)

    norm_a = np.linalg.norm(a, 1)
    doublings = 0
    if norm_a > 0.0 and t * norm_a > _BLOCK_NORM_BOUND:
        doublings = int(math.ceil(math.log2(t * norm_a / _BLOCK_NORM_BOUND)))
    h = t / 2.0**doublings

    block = np.block([[-a, qmat], [np.zeros((n, n)), a.T]])
    f = matrix_exponential(block * h)
    f12 = f[:n, n:]
    f22 = f[n:, n:]
    w = symmetrize(f22.T @ f12)
    phi = f22.T  # e^{a h}
    for _ in range(doublings):
        w = symmetrize(w + phi @ w @ phi.T)
        phi = phi @ phi
    return Gramian(w, horizon=t, source=source)
