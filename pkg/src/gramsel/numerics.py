"""Dense linear-algebra primitives shared across the package.

Thin, validated wrappers over LAPACK-backed numpy/scipy routines:
eigenvalues, real Schur form, matrix exponential, and the Hurwitz test
that gates every infinite-horizon computation.
"""

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .exceptions import DimensionError, DomainError, NonFiniteError, NumericalError

__all__ = [
    "DEFAULT_STABILITY_MARGIN",
    "Spectrum",
    "as_matrix",
    "as_square",
    "as_vector",
    "eigenvalues",
    "spectral_abscissa",
    "is_hurwitz",
    "matrix_exponential",
    "real_schur",
    "is_symmetric",
    "symmetrize",
]

# Spectra with max Re(lambda) >= -margin are treated as unstable: the
# infinite-horizon Gramian integral diverges (or is numerically useless)
# when eigenvalues touch the imaginary axis.
DEFAULT_STABILITY_MARGIN = 1e-9

# Relative Frobenius tolerance under which a matrix counts as symmetric.
SYMMETRY_RTOL = 1e-12


def as_matrix(a, name="matrix"):
    """Coerce to a 2-D float array, rejecting non-finite entries."""
    try:
        a = np.asarray(a, dtype=float)
    except (TypeError, ValueError) as exc:
        raise DimensionError(f"{name} is not numeric: {exc}") from None
    if a.ndim != 2:
        raise DimensionError(f"{name} must be 2-D, got shape {a.shape}")
    if not np.isfinite(a).all():
        raise NonFiniteError(f"{name} contains non-finite entries")
    return a


def as_square(a, name="matrix"):
    a = as_matrix(a, name)
    if a.shape[0] != a.shape[1]:
        raise DimensionError(f"{name} must be square, got shape {a.shape}")
    return a


def as_vector(x, n=None, name="vector"):
    """Coerce to a finite 1-D float array, optionally of prescribed length."""
    try:
        x = np.asarray(x, dtype=float)
    except (TypeError, ValueError) as exc:
        raise DimensionError(f"{name} is not numeric: {exc}") from None
    if x.ndim != 1:
        raise DimensionError(f"{name} must be 1-D, got shape {x.shape}")
    if n is not None and x.shape[0] != n:
        raise DimensionError(f"{name} has length {x.shape[0]}, expected {n}")
    if not np.isfinite(x).all():
        raise NonFiniteError(f"{name} contains non-finite entries")
    return x


def is_symmetric(a, rtol=SYMMETRY_RTOL):
    a = as_square(a)
    return np.linalg.norm(a - a.T) <= rtol * max(1.0, np.linalg.norm(a))


def symmetrize(a):
    """Exact symmetric part (a + a.T) / 2 (bitwise symmetric)."""
    return (a + a.T) / 2.0


@dataclass(frozen=True)
class Spectrum:
    """Eigenvalues of a real square matrix.

    ``values`` holds all n eigenvalues (complex dtype; conjugate-paired for
    real input).  ``vectors`` carries the orthonormal eigenvector columns
    when the input was symmetric, else ``None``.
    """

    values: np.ndarray
    vectors: np.ndarray | None = None

    @property
    def max_real_part(self):
        return float(np.max(self.values.real))


def eigenvalues(m):
    """Full spectrum of a square matrix.

    Symmetric input (within :data:`SYMMETRY_RTOL`) is routed through the
    symmetric eigensolver, which also yields orthonormal eigenvectors.
    """
    m = as_square(m, "m")
    try:
        if is_symmetric(m):
            vals, vecs = np.linalg.eigh(symmetrize(m))
            return Spectrum(vals.astype(complex), vecs)
        return Spectrum(np.linalg.eigvals(m), None)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"eigenvalue iteration failed: {exc}") from None


def spectral_abscissa(m):
    """max Re(lambda) over the spectrum of m."""
    return eigenvalues(m).max_real_part


def is_hurwitz(m, margin=DEFAULT_STABILITY_MARGIN):
    """True iff every eigenvalue satisfies Re(lambda) < -margin."""
    if margin < 0:
        raise DomainError(f"stability margin must be >= 0, got {margin}")
    return bool(spectral_abscissa(m) < -margin)


def matrix_exponential(m):
    """expm(m) via scaling-and-squaring, with an explicit overflow check."""
    m = as_square(m, "m")
    with np.errstate(over="ignore", invalid="ignore"):
        e = scipy.linalg.expm(m)
    if not np.isfinite(e).all():
        raise NumericalError(
            "overflow in matrix exponential "
            f"(input 1-norm {np.linalg.norm(m, 1):.3e})"
        )
    return e


def real_schur(m):
    """Real Schur decomposition m = Q T Q^T.

    Returns ``(q, t)`` with orthogonal ``q`` and quasi-upper-triangular
    ``t`` (1x1 / 2x2 diagonal blocks). Already-triangular input passes
    through unchanged with ``q = I``.
    """
    m = as_square(m, "m")
    try:
        t, q = scipy.linalg.schur(m, output="real")
    except (scipy.linalg.LinAlgError, np.linalg.LinAlgError) as exc:
        raise NumericalError(f"Schur QR iteration failed to converge: {exc}") from None
    return q, t
