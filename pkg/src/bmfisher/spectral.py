"""FIM spectra, spectral entropy and the Schur-complement bound on the smallest eigenvalue."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .fisher import FimMatrix, Source, fim_blocks

PSD_TOL = 1e-9
SCHUR_FALLBACK_DAMPING = 1e-10


@dataclass(frozen=True)
class Spectrum:
    eigenvalues: np.ndarray
    clamped_negatives: int = 0
    raw_min: float = 0.0

    @property
    def lambda_max(self) -> float:
        return float(self.eigenvalues[0])

    @property
    def lambda_min(self) -> float:
        """Smallest eigenvalue before clamping."""
        return self.raw_min


def _symmetrized(M: np.ndarray) -> np.ndarray:
    M = np.asarray(M, dtype=np.float64)
    if not np.all(np.isfinite(M)):
        raise ValueError("FIM has non-finite entries")
    return 0.5 * (M + M.T)


def fim_spectrum(F: FimMatrix) -> Spectrum:
    """Descending eigenvalues of the symmetrized FIM.

    Exact-source matrices must be positive semidefinite up to ``PSD_TOL``;
    sampled ones have negative eigenvalues clamped to zero.
    """
    w = scipy.linalg.eigh(_symmetrized(F.M), eigvals_only=True)[::-1].copy()
    raw_min = float(w[-1])
    neg = w < 0
    if F.source is Source.EXACT:
        if raw_min < -PSD_TOL:
            raise ValueError(f"exact FIM is not PSD: lambda_min = {raw_min:.3e}")
        clamped = 0
    else:
        clamped = int(np.count_nonzero(w < -PSD_TOL))
    w[neg] = 0.0
    return Spectrum(w, clamped, raw_min)


def spectral_entropy(spec: Spectrum) -> float:
    """Shannon entropy (nats) of the eigenvalues normalized to sum one."""
    lam = np.clip(np.asarray(spec.eigenvalues, dtype=np.float64), 0.0, None)
    total = lam.sum()
    if not total > 0:
        raise ValueError("spectral entropy undefined for an all-zero spectrum")
    p = lam[lam > 0] / total
    return float(-np.sum(p * np.log(p)))


@dataclass(frozen=True)
class SchurBound:
    lhs: float
    rhs: float
    holds: bool
    damping: float
    fallback_used: bool = False

    def __iter__(self):
        return iter((self.lhs, self.rhs, self.holds))


def schur_bound(F: FimMatrix, damping: float = 0.0, allow_fallback: bool = True) -> SchurBound:
    """Compare ``lambda_min(F)`` with ``lambda_min`` of the Schur complement of ``F11``.

    The complement ``F22 - F21 (F11 + damping I)^-1 F12`` is formed with a
    Cholesky solve. If ``F11`` is singular and ``damping`` is zero the solve is
    retried with ``SCHUR_FALLBACK_DAMPING`` when ``allow_fallback`` is set;
    otherwise a ``LinAlgError`` is raised.
    """
    if damping < 0:
        raise ValueError("damping must be nonnegative")
    M = _symmetrized(F.M)
    F11, F12, F21, F22 = fim_blocks(FimMatrix(F.d, F.encoding, M, F.source))
    lhs = float(scipy.linalg.eigh(M, eigvals_only=True)[0])
    eye = np.eye(F11.shape[0])
    fallback = False
    try:
        factor = scipy.linalg.cho_factor(F11 + damping * eye)
    except np.linalg.LinAlgError:
        if damping > 0 or not allow_fallback:
            raise np.linalg.LinAlgError(
                "F11 is singular; pass a positive damping or allow_fallback=True"
            ) from None
        damping = SCHUR_FALLBACK_DAMPING
        fallback = True
        factor = scipy.linalg.cho_factor(F11 + damping * eye)
    S = F22 - F21 @ scipy.linalg.cho_solve(factor, F12)
    rhs = float(scipy.linalg.eigh(0.5 * (S + S.T), eigvals_only=True)[0])
    return SchurBound(lhs, rhs, lhs <= rhs + PSD_TOL, damping, fallback)
