"""Small dense-matrix kernel used by synthesis and diagnostics.

All operations take and return plain ``numpy.ndarray`` objects (float64,
row-major). Matrices documented as symmetric are re-symmetrized with
(M + M^T)/2 before any eigenvalue or definiteness decision, since the
Riccati fixed-point iteration accumulates asymmetry at round-off scale.
Everything here is a pure function; there is no shared state.
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np

from .errors import ContractError, DimensionError, SynthesisError

#: Default tolerance for definiteness/eigenvalue decisions. Problem sizes
#: stay below 10x10, so double precision leaves ample headroom.
DEFAULT_TOL = 1e-9


class SymmetricEigenSummary(NamedTuple):
    """Extreme eigenvalues of a symmetric matrix."""

    lambda_min: float
    lambda_max: float


def as_matrix(value, name: str = "matrix") -> np.ndarray:
    """Coerce ``value`` to a finite 2-D float64 array.

    Raises
    ------
    DimensionError
        If the value is not two-dimensional.
    ContractError
        If any entry is NaN or infinite.
    """
    m = np.array(value, dtype=float, order="C")
    if m.ndim != 2:
        raise DimensionError(f"{name} must be 2-D, got ndim={m.ndim}")
    if not np.all(np.isfinite(m)):
        raise ContractError(f"{name} contains non-finite entries")
    return m


def as_vector(value, name: str = "vector") -> np.ndarray:
    m = np.array(value, dtype=float).reshape(-1)
    if not np.all(np.isfinite(m)):
        raise ContractError(f"{name} contains non-finite entries")
    return m


def require_square(m: np.ndarray, name: str = "matrix") -> None:
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DimensionError(f"{name} must be square, got shape {m.shape}")


def symmetrize(m: np.ndarray) -> np.ndarray:
    """(M + M^T)/2 — canonical symmetric part."""
    return (m + m.T) / 2.0


def _symmetry_defect(m: np.ndarray) -> float:
    scale = max(1.0, float(np.abs(m).max(initial=0.0)))
    return float(np.abs(m - m.T).max(initial=0.0)) / scale


def left_pseudo_inverse(b) -> np.ndarray:
    """Left pseudo-inverse B+ = (B^T B)^{-1} B^T of a full-column-rank B.

    Satisfies B+ B = I (cols x cols) to 1e-10.

    Raises
    ------
    SynthesisError
        If B is rank deficient (B^T B singular within tolerance).
    """
    b = as_matrix(b, "B")
    gram = b.T @ b
    try:
        cf = np.linalg.cholesky(gram)
        bt = b.T
        pinv = np.linalg.solve(cf.T, np.linalg.solve(cf, bt))
    except np.linalg.LinAlgError:
        raise SynthesisError(
            "input matrix B is rank deficient: B^T B is not invertible, "
            "synthesis needs full column rank"
        ) from None
    defect = np.abs(pinv @ b - np.eye(b.shape[1])).max()
    if defect > 1e-10:
        raise SynthesisError(
            f"input matrix B is numerically rank deficient: "
            f"max|B+ B - I| = {defect:.3e} exceeds 1e-10"
        )
    return pinv


def is_positive_definite(m, tol: float = DEFAULT_TOL) -> bool:
    """True iff all eigenvalues of the symmetric part of ``m`` exceed ``tol``."""
    m = as_matrix(m, "matrix")
    require_square(m, "matrix")
    eigs = np.linalg.eigvalsh(symmetrize(m))
    return bool(eigs.min() > tol)


def eig_extremes(m, sym_tol: float = 1e-8) -> SymmetricEigenSummary:
    """Smallest and largest eigenvalue of a symmetric matrix.

    Raises
    ------
    ContractError
        If ``m`` is asymmetric beyond ``sym_tol`` (relative to its scale).
    """
    m = as_matrix(m, "matrix")
    require_square(m, "matrix")
    if _symmetry_defect(m) > sym_tol:
        raise ContractError(
            f"matrix is not symmetric (relative defect {_symmetry_defect(m):.3e})"
        )
    eigs = np.linalg.eigvalsh(symmetrize(m))
    return SymmetricEigenSummary(float(eigs[0]), float(eigs[-1]))


def psd_dominates(x, y, tol: float = DEFAULT_TOL) -> bool:
    """True iff Y - X is positive semidefinite, i.e. lambda_min(Y - X) >= -tol."""
    x = as_matrix(x, "X")
    y = as_matrix(y, "Y")
    require_square(x, "X")
    require_square(y, "Y")
    if x.shape != y.shape:
        raise DimensionError(f"shape mismatch: X is {x.shape}, Y is {y.shape}")
    eigs = np.linalg.eigvalsh(symmetrize(y - x))
    return bool(eigs.min() >= -tol)


def spectral_norm(m) -> float:
    """Operator 2-norm, sqrt(lambda_max(M^T M))."""
    m = as_matrix(m, "matrix")
    return float(np.linalg.norm(m, 2))
