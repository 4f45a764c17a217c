"""Small dense linear-algebra helpers used throughout the package."""
import numpy as np

from .exceptions import DimensionError

#: eigenvalue slack when classifying a matrix as PSD
PSD_TOL = 1e-10


def symmetrize(A):
    """Return (A + A.T) / 2, removing floating-point asymmetry drift."""
    return 0.5 * (A + A.T)


def is_symmetric(A, tol=1e-10):
    A = np.asarray(A)
    return A.ndim == 2 and A.shape[0] == A.shape[1] and np.allclose(A, A.T, atol=tol)


def spectral_radius(A):
    """Largest eigenvalue magnitude of a square matrix."""
    return float(np.max(np.abs(np.linalg.eigvals(A))))


def sym_sqrt(A, name="matrix"):
    """Symmetric square root of a symmetric PSD matrix.

    Small negative eigenvalues within PSD_TOL are clipped to zero;
    anything more negative raises DimensionError-free ValueError since it
    indicates a genuinely indefinite input.
    """
    A = np.asarray(A, dtype=float)
    if not is_symmetric(A):
        raise ValueError(f"{name} must be symmetric")
    w, V = np.linalg.eigh(A)
    if np.min(w) < -PSD_TOL * max(1.0, np.max(np.abs(w))):
        raise ValueError(f"{name} is not positive semidefinite (min eig {np.min(w):g})")
    w = np.clip(w, 0.0, None)
    return (V * np.sqrt(w)) @ V.T


def check_vector(x, length, name="vector"):
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != length:
        raise DimensionError(f"{name} has trailing dimension {x.shape[-1]}, expected {length}")
    return x
