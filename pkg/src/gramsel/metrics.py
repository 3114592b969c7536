"""Energy metrics derived from a Gramian, and minimum-energy input synthesis.

The ranking metrics (trace, weighted trace, squared H2 norm) are all of
the form trace(C_bar W) for some constant weighting, which is what makes
subset scores additive.  The inverse-Gramian quantities (average energy,
minimum transfer energy, reachability ellipsoid) go through a symmetric
eigendecomposition so that near-singular directions are handled
explicitly instead of blowing up inside a generic solve.
"""

import math
import warnings
from dataclasses import dataclass

import numpy as np
import scipy.integrate

from .exceptions import (
    DegenerateGramianWarning,
    DimensionError,
    DomainError,
    SingularGramianError,
    UnreachableStateError,
)
from .gramian import Gramian, finite_horizon_gramian
from .numerics import as_matrix, as_square, as_vector, matrix_exponential, symmetrize

__all__ = [
    "METRIC_KINDS",
    "MetricSpec",
    "evaluate_metric",
    "average_energy_tr_inverse",
    "min_energy_to_reach",
    "reachability_ellipsoid",
    "EllipsoidAxes",
    "InputTrajectory",
    "synthesize_min_energy_input",
    "TransferResult",
    "simulate_transfer",
]

METRIC_KINDS = ("trace", "weighted_trace", "h2")

# Eigenvalues below SINGULAR_RTOL * lambda_max are treated as exact zeros
# when inverting a Gramian.
SINGULAR_RTOL = 1e-12

# Relative size of the out-of-range component of a target state above
# which the state is declared unreachable rather than merely degenerate.
_RANGE_RTOL = 1e-8


@dataclass(frozen=True)
class MetricSpec:
    """Declares how a Gramian is scored.

    kind
        ``"trace"``          -> trace(W)
        ``"weighted_trace"`` -> trace(weight @ W), weight symmetric PSD (n, n)
        ``"h2"``             -> trace(weight @ W @ weight.T), the *squared*
        H2 norm of the transfer function with output matrix ``weight``.
    """

    kind: str = "trace"
    weight: np.ndarray | None = None

    def __post_init__(self):
        if self.kind not in METRIC_KINDS:
            raise DomainError(
                f"unknown metric kind {self.kind!r}; expected one of {METRIC_KINDS}"
            )
        if self.kind == "trace":
            if self.weight is not None:
                raise DomainError("trace metric takes no weight matrix")
        else:
            if self.weight is None:
                raise DomainError(f"{self.kind} metric requires a weight matrix")
            object.__setattr__(self, "weight", as_matrix(self.weight, "weight"))
            if self.kind == "weighted_trace":
                w = self.weight
                if w.shape[0] != w.shape[1]:
                    raise DimensionError(
                        f"weighted_trace weight must be square, got {w.shape}"
                    )

    @classmethod
    def trace(cls):
        return cls("trace")

    @classmethod
    def weighted(cls, matrix):
        return cls("weighted_trace", matrix)

    @classmethod
    def h2(cls, output_matrix):
        return cls("h2", output_matrix)

    def validate_for(self, n):
        """Check the weight dimensions against a state dimension n."""
        if self.kind == "weighted_trace" and self.weight.shape != (n, n):
            raise DimensionError(
                f"weighted_trace weight has shape {self.weight.shape}, "
                f"expected ({n}, {n})"
            )
        if self.kind == "h2" and self.weight.shape[1] != n:
            raise DimensionError(
                f"h2 output matrix has {self.weight.shape[1]} columns, expected {n}"
            )

    def describe(self):
        if self.kind == "trace":
            return "trace"
        return f"{self.kind}({self.weight.shape[0]}x{self.weight.shape[1]})"


def _gram_matrix(w):
    if isinstance(w, Gramian):
        return w.matrix
    return symmetrize(as_square(w, "gramian"))


def evaluate_metric(spec, w):
    """Score a Gramian under a MetricSpec; linear in W for every kind."""
    m = _gram_matrix(w)
    spec.validate_for(m.shape[0])
    if spec.kind == "trace":
        return float(np.trace(m))
    if spec.kind == "weighted_trace":
        return float(np.trace(spec.weight @ m))
    c = spec.weight
    return float(np.trace(c @ m @ c.T))


def _psd_eig(w):
    """Ascending eigendecomposition of a symmetrized Gramian matrix."""
    m = _gram_matrix(w)
    vals, vecs = np.linalg.eigh(m)
    return m, vals, vecs


def average_energy_tr_inverse(w):
    """(1/n) trace(W^{-1}): average control energy over random unit targets.

    Requires W positive definite; an eigenvalue at or below
    SINGULAR_RTOL * lambda_max raises :class:`SingularGramianError`.
    """
    _, vals, _ = _psd_eig(w)
    lam_max = vals[-1]
    if not lam_max > 0.0 or vals[0] <= SINGULAR_RTOL * lam_max:
        raise SingularGramianError(
            f"gramian is singular to working precision "
            f"(min eigenvalue {vals[0]:.6e}, max {lam_max:.6e})",
            eigenvalue=float(vals[0]),
        )
    return float(np.mean(1.0 / vals))


def _range_solve(w, x, context="target state"):
    """Solve W y = x restricted to range(W).

    Returns ``(y, degenerate)``.  Raises UnreachableStateError when x has
    a component outside range(W) beyond _RANGE_RTOL * ||x||; warns with
    DegenerateGramianWarning when W is singular but x is consistent.
    """
    m, vals, vecs = _psd_eig(w)
    x = as_vector(x, m.shape[0], "x")
    if not np.any(x):
        return np.zeros_like(x), False
    lam_max = max(float(vals[-1]), 0.0)
    zero = vals <= SINGULAR_RTOL * lam_max
    coeff = vecs.T @ x
    leakage = np.linalg.norm(coeff[zero])
    if leakage > _RANGE_RTOL * np.linalg.norm(x):
        raise UnreachableStateError(
            f"{context} lies outside the range of the gramian "
            f"(out-of-range component {leakage:.3e} of norm "
            f"{np.linalg.norm(x):.3e})"
        )
    degenerate = bool(zero.any())
    if degenerate:
        warnings.warn(
            f"gramian is singular; {context} resolved via pseudo-inverse "
            f"on the reachable subspace",
            DegenerateGramianWarning,
            stacklevel=3,
        )
    y = np.zeros_like(coeff)
    keep = ~zero
    y[keep] = coeff[keep] / vals[keep]
    return vecs @ y, degenerate


def min_energy_to_reach(w, x_f):
    """Minimum input energy x_f^T W^{-1} x_f to reach x_f from the origin.

    A zero target costs zero regardless of W.  Unreachable targets raise;
    reachable targets of a singular W fall back to the pseudo-inverse with
    a :class:`DegenerateGramianWarning`.
    """
    m = _gram_matrix(w)
    x = as_vector(x_f, m.shape[0], "x_f")
    y, _ = _range_solve(m, x)
    return float(x @ y)


@dataclass(frozen=True)
class EllipsoidAxes:
    """Principal axes of the unit-energy reachable set {W^{1/2} u : |u|<=1}.

    ``directions`` holds orthonormal axis directions as columns, ordered
    by decreasing ``lengths`` (sqrt of the Gramian eigenvalues).
    """

    directions: np.ndarray
    lengths: np.ndarray


def reachability_ellipsoid(w):
    """Semi-axes of the reachability ellipsoid of a PSD Gramian."""
    _, vals, vecs = _psd_eig(w)
    order = np.argsort(vals)[::-1]
    lengths = np.sqrt(np.clip(vals[order], 0.0, None))
    return EllipsoidAxes(directions=vecs[:, order], lengths=lengths)


@dataclass(frozen=True)
class InputTrajectory:
    """Sampled open-loop input u(tau) on a uniform grid over [0, t]."""

    times: np.ndarray  # (samples,)
    inputs: np.ndarray  # (samples, m)
    energy: float  # analytic minimum energy x_f^T W(t)^{-1} x_f

    @property
    def samples(self):
        return self.times.shape[0]


def synthesize_min_energy_input(a, b, t, x_f, samples=201):
    """Minimum-energy open-loop input steering (a, b) from 0 to x_f in time t.

    Implements u*(tau) = B^T e^{A^T (t - tau)} W(t)^{-1} x_f sampled on a
    uniform grid of ``samples`` points.  The matrix exponentials are
    evaluated by backward stepping with a single per-step propagator, so
    the cost is one finite-horizon Gramian plus one expm.
    """
    a = as_square(a, "a")
    n = a.shape[0]
    b = np.asarray(b, dtype=float)
    if b.ndim == 1:
        b = b[:, None]
    b = as_matrix(b, "b")
    if b.shape[0] != n:
        raise DimensionError(f"b has {b.shape[0]} rows, expected {n}")
    samples = int(samples)
    if samples < 2:
        raise DomainError(f"samples must be >= 2, got {samples}")
    x = as_vector(x_f, n, "x_f")

    w = finite_horizon_gramian(a, b, t)
    eta, _ = _range_solve(w.matrix, x)  # W(t)^{-1} x_f

    times = np.linspace(0.0, w.horizon, samples)
    step = matrix_exponential(a.T * (w.horizon / (samples - 1)))
    z = np.empty((samples, n))
    z[-1] = eta
    for k in range(samples - 2, -1, -1):
        z[k] = step @ z[k + 1]
    inputs = z @ b  # row k: B^T z_k
    return InputTrajectory(times=times, inputs=inputs, energy=float(x @ eta))


@dataclass(frozen=True)
class TransferResult:
    """Outcome of simulating the synthesized input through the dynamics."""

    times: np.ndarray  # (samples,)
    states: np.ndarray  # (samples, n)
    inputs: np.ndarray  # (samples, m)
    terminal_error: float  # ||x(t) - x_f||
    input_energy: float  # int_0^t ||u||^2 d tau from the integrator
    min_energy: float  # analytic x_f^T W(t)^{-1} x_f


def simulate_transfer(a, b, t, x_f, samples=201, rtol=1e-9, atol=1e-12):
    """Drive x' = a x + b u with the minimum-energy input and integrate.

    The costate z(tau) = e^{A^T (t-tau)} W(t)^{-1} x_f obeys z' = -A^T z,
    so the state, costate, and running input energy are integrated jointly
    with an adaptive Runge-Kutta scheme; no sampled-and-held input
    approximation is involved.
    """
    a = as_square(a, "a")
    n = a.shape[0]
    b = np.asarray(b, dtype=float)
    if b.ndim == 1:
        b = b[:, None]
    b = as_matrix(b, "b")
    x = as_vector(x_f, n, "x_f")

    w = finite_horizon_gramian(a, b, t)
    eta, _ = _range_solve(w.matrix, x)
    z0 = matrix_exponential(a.T * w.horizon) @ eta
    bbt = b @ b.T

    def rhs(_tau, y):
        xs, zs = y[:n], y[n : 2 * n]
        u_sq = float(zs @ (bbt @ zs))  # ||B^T z||^2
        return np.concatenate([a @ xs + bbt @ zs, -(a.T @ zs), [u_sq]])

    y0 = np.concatenate([np.zeros(n), z0, [0.0]])
    grid = np.linspace(0.0, w.horizon, int(samples))
    sol = scipy.integrate.solve_ivp(
        rhs, (0.0, w.horizon), y0, t_eval=grid, rtol=rtol, atol=atol, method="RK45"
    )
    if not sol.success:  # pragma: no cover - solver failure is pathological
        raise DomainError(f"trajectory integration failed: {sol.message}")
    states = sol.y[:n].T
    costates = sol.y[n : 2 * n].T
    inputs = costates @ b
    return TransferResult(
        times=sol.t,
        states=states,
        inputs=inputs,
        terminal_error=float(np.linalg.norm(states[-1] - x)),
        input_energy=float(sol.y[2 * n, -1]),
        min_energy=float(x @ eta),
    )
