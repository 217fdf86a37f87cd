"""Turn raw element-wise estimates into density operators, and score them.

Two projection strategies:

* ``"paper_faithful"`` -- general eigendecomposition of the raw matrix,
  imaginary parts of the eigenvalues set to zero, negative real parts set to
  zero, reconstruction ``V diag(lam) V^-1``, division by the sum of the
  diagonal of the reconstruction. A non-Hermitian raw matrix can leave a
  slightly non-Hermitian result.
* ``"hermitize"`` (default) -- symmetrize first, then the same clipping on an
  orthonormal eigenbasis; the output is always a valid state.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .linalg import as_matrix, eig_general, eig_hermitian, ket
from .qmodel import DensityOperator

__all__ = ["STRATEGIES", "ProjectionReport", "project_physical", "fidelity"]

STRATEGIES = ("hermitize", "paper_faithful")

# eigenvalue changes below this are rounding noise, not clipping
_CLIP_REPORT_TOL = 1e-12


@dataclass(frozen=True)
class ProjectionReport:
    input: np.ndarray
    output: np.ndarray
    clipped_eigenvalues: list  # (original complex, clipped real)
    normalization: float
    strategy: str

    @property
    def density(self) -> DensityOperator:
        """The output as a validated :class:`DensityOperator`."""
        return DensityOperator(self.output)


def project_physical(raw, strategy="hermitize") -> ProjectionReport:
    raw = as_matrix(raw, square=True)
    if strategy == "hermitize":
        eig = eig_hermitian(0.5 * (raw + raw.conj().T))
    elif strategy == "paper_faithful":
        eig = eig_general(raw)
    else:
        raise ValueError(f"strategy must be one of {STRATEGIES}, got {strategy!r}")

    lam = np.asarray(eig.eigenvalues, dtype=np.complex128)
    clipped = np.maximum(lam.real, 0.0)
    report = [(complex(orig), float(new)) for orig, new in zip(lam, clipped)
              if abs(orig - new) > _CLIP_REPORT_TOL]
    if not np.any(clipped > 0.0):
        raise ValueError("unrecoverable estimate: every eigenvalue was clipped to zero")

    v = eig.eigenvectors
    if strategy == "hermitize":
        rebuilt = (v * clipped) @ v.conj().T
    else:
        rebuilt = (v * clipped) @ np.linalg.inv(v)
    a = float(np.trace(rebuilt).real)
    if not a > 0.0:
        raise ValueError("unrecoverable estimate: non-positive trace after clipping")
    out = rebuilt / a
    if strategy == "hermitize":
        out = 0.5 * (out + out.conj().T)
    return ProjectionReport(raw, out, report, a, strategy)


def fidelity(rho, psi) -> float:
    """``sqrt(<psi|rho|psi>)`` for a state estimate and an ideal pure state."""
    m = np.asarray(getattr(rho, "matrix", rho), dtype=np.complex128)
    v = ket(psi)
    if m.shape != (v.size, v.size):
        raise ValueError(f"state of shape {m.shape} does not match ket of length {v.size}")
    overlap = float(np.real(v.conj() @ m @ v))
    return float(np.sqrt(max(overlap, 0.0)))
