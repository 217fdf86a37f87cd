"""Direct measurement of density-matrix, POVM and process-tensor elements.

Every element is read out by its own generalized Hadamard test. Two gate
choices are supported:

``"shift"``
    unitary basis shift on the probe-|0> branch, identity on the other;
    the probe readout equals the matrix element (coefficient 1).
``"mub"``
    basis projectors on both branches with the uniform superposition state
    or measurement; the readout is the element divided by ``d`` (``d**2``
    for processes) and is rescaled before being returned.

In sampled mode each element gets ``shots`` probe shots, split evenly
between the real (b=0) and imaginary (b=1) readouts. Elements that are
real by construction in the shift variant (diagonals) use only the b=0
readout with half the shots. The RNG stream for element number ``e`` and
readout ``b`` is ``make_rng(seed, e, b)``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .hadamard import (
    HadamardTestSpec,
    ProcessTestSpec,
    expectation,
    expectation_process,
)
from .qmodel import (
    ChiMatrix,
    DensityOperator,
    KrausChannel,
    PovmElement,
    basis_projector,
    flatten_chi,
    mub_state,
    u_shift,
)
from .sampler import make_rng, sample_z

__all__ = [
    "VARIANTS",
    "DmEstimate",
    "state_spec",
    "povm_spec",
    "process_spec",
    "dm_state_element",
    "dm_state_full",
    "dm_povm_element",
    "dm_povm_full",
    "dm_process_element",
    "dm_process_full",
]

VARIANTS = ("shift", "mub")

CHI_FLATTENING = "row = i + d*l, column = j + d*k for chi[i, j, k, l]"


@dataclass(frozen=True)
class DmEstimate:
    """Unconstrained matrix estimate with per-element standard errors.

    ``stderr_re`` and ``stderr_im`` are the standard errors of the real and
    imaginary parts (all zero in exact mode, ``shots_per_element == 0``).
    Process estimates are stored flattened (see ``CHI_FLATTENING``).
    """

    dim: int
    matrix: np.ndarray
    stderr_re: np.ndarray
    stderr_im: np.ndarray
    variant: str
    shots_per_element: int = 0
    kind: str = "state"

    @property
    def stderr(self) -> np.ndarray:
        return np.hypot(self.stderr_re, self.stderr_im)

    @property
    def exact(self) -> bool:
        return self.shots_per_element == 0

    def as_chi(self) -> ChiMatrix:
        if self.kind != "process":
            raise ValueError("only process estimates carry a chi tensor")
        return ChiMatrix.unflatten(self.matrix)


def _check_variant(variant):
    if variant not in VARIANTS:
        raise ValueError(f"variant must be one of {VARIANTS}, got {variant!r}")


def _check_index(d, *idx):
    for i in idx:
        if not 0 <= i < d:
            raise IndexError(f"index {i} out of range for dimension {d}")


def _mub_projector(d):
    m = mub_state(d)
    return np.outer(m, m.conj())


def state_spec(rho, i, j, variant="shift", b=0) -> HadamardTestSpec:
    """Hadamard-test configuration whose readout is ``rho[i, j]`` (shift)
    or ``rho[i, j] / d`` (mub)."""
    rho = np.asarray(getattr(rho, "matrix", rho))
    d = rho.shape[0]
    _check_variant(variant)
    _check_index(d, i, j)
    if variant == "shift":
        return HadamardTestSpec(u_shift(d, j - i), np.eye(d), rho, basis_projector(d, j), b)
    return HadamardTestSpec(basis_projector(d, i), basis_projector(d, j), rho, _mub_projector(d), b)


def povm_spec(E, i, j, variant="shift", b=0) -> HadamardTestSpec:
    """Configuration whose readout is ``E[i, j]`` (shift) or ``E[i, j] / d`` (mub)."""
    e = np.asarray(getattr(E, "matrix", E))
    d = e.shape[0]
    _check_variant(variant)
    _check_index(d, i, j)
    if variant == "shift":
        return HadamardTestSpec(u_shift(d, j - i), np.eye(d), basis_projector(d, i), e, b)
    return HadamardTestSpec(basis_projector(d, j), basis_projector(d, i), _mub_projector(d), e, b)


def process_spec(ch: KrausChannel, i, j, k, l, variant="shift", b=0) -> ProcessTestSpec:
    """Configuration whose readout is ``chi[i,j,k,l]`` (shift) or ``/ d**2`` (mub)."""
    d = ch.dim
    _check_variant(variant)
    _check_index(d, i, j, k, l)
    eye = np.eye(d)
    if variant == "shift":
        return ProcessTestSpec(
            A=u_shift(d, i - j), B=eye, C=u_shift(d, k - l), D=eye,
            rho=basis_projector(d, j), E=basis_projector(d, k), channel=ch, b=b)
    mub = _mub_projector(d)
    return ProcessTestSpec(
        A=basis_projector(d, i), B=basis_projector(d, j),
        C=basis_projector(d, l), D=basis_projector(d, k),
        rho=mub, E=mub, channel=ch, b=b)


def _readout(make_spec, evaluate, scale, real_only, shots, seed, element):
    """Return (value, stderr_re, stderr_im) for one element."""
    bits = (0,) if real_only else (0, 1)
    parts = [0.0, 0.0]
    errors = [0.0, 0.0]
    for b in bits:
        z = evaluate(make_spec(b))
        if shots:
            zbar, var_mean = sample_z(z, max(1, shots // 2), make_rng(seed, element, b))
            parts[b] = scale * zbar
            errors[b] = scale * np.sqrt(var_mean)
        else:
            parts[b] = scale * z
    return complex(parts[0], parts[1]), errors[0], errors[1]


def _shots(plan):
    return (0, 0) if plan is None else (plan.n, plan.seed)


def _state_readout(rho, i, j, variant, plan, element):
    d = rho.shape[0]
    shots, seed = _shots(plan)
    scale = 1.0 if variant == "shift" else float(d)
    return _readout(lambda b: state_spec(rho, i, j, variant, b), expectation,
                    scale, variant == "shift" and i == j, shots, seed, element)


def _povm_readout(e, i, j, variant, plan, element):
    d = e.shape[0]
    shots, seed = _shots(plan)
    scale = 1.0 if variant == "shift" else float(d)
    return _readout(lambda b: povm_spec(e, i, j, variant, b), expectation,
                    scale, variant == "shift" and i == j, shots, seed, element)


def _process_readout(ch, i, j, k, l, variant, plan, element):
    d = ch.dim
    shots, seed = _shots(plan)
    scale = 1.0 if variant == "shift" else float(d * d)
    return _readout(lambda b: process_spec(ch, i, j, k, l, variant, b), expectation_process,
                    scale, variant == "shift" and i == j and k == l, shots, seed, element)


def _as_array(x):
    return np.asarray(getattr(x, "matrix", x), dtype=np.complex128)


def dm_state_element(rho, i, j, variant="shift", plan=None) -> complex:
    """Directly measure ``rho[i, j]``; exact unless a :class:`ShotPlan` is given."""
    _check_variant(variant)
    m = _as_array(rho)
    _check_index(m.shape[0], i, j)
    return _state_readout(m, i, j, variant, plan, i * m.shape[0] + j)[0]


def dm_povm_element(E, i, j, variant="shift", plan=None) -> complex:
    _check_variant(variant)
    m = _as_array(E)
    _check_index(m.shape[0], i, j)
    return _povm_readout(m, i, j, variant, plan, i * m.shape[0] + j)[0]


def dm_process_element(ch: KrausChannel, i, j, k, l, variant="shift", plan=None) -> complex:
    _check_variant(variant)
    d = ch.dim
    _check_index(d, i, j, k, l)
    return _process_readout(ch, i, j, k, l, variant, plan, ((i * d + j) * d + k) * d + l)[0]


def _full(readout, d, variant, plan, kind):
    _check_variant(variant)
    mat = np.zeros((d, d), dtype=np.complex128)
    se_re = np.zeros((d, d))
    se_im = np.zeros((d, d))
    for i in range(d):
        for j in range(d):
            mat[i, j], se_re[i, j], se_im[i, j] = readout(i, j, i * d + j)
    return DmEstimate(d, mat, se_re, se_im, variant, 0 if plan is None else plan.n, kind)


def dm_state_full(rho, variant="shift", plan=None) -> DmEstimate:
    """Measure all ``d**2`` density-matrix elements independently."""
    m = _as_array(rho if not isinstance(rho, DensityOperator) else rho.matrix)
    return _full(lambda i, j, e: _state_readout(m, i, j, variant, plan, e),
                 m.shape[0], variant, plan, "state")


def dm_povm_full(E, variant="shift", plan=None) -> DmEstimate:
    m = _as_array(E if not isinstance(E, PovmElement) else E.matrix)
    return _full(lambda i, j, e: _povm_readout(m, i, j, variant, plan, e),
                 m.shape[0], variant, plan, "povm")


def dm_process_full(ch: KrausChannel, variant="shift", plan=None) -> DmEstimate:
    """Measure every chi element; result flattened per ``CHI_FLATTENING``."""
    _check_variant(variant)
    d = ch.dim
    chi = np.zeros((d, d, d, d), dtype=np.complex128)
    se_re = np.zeros_like(chi, dtype=float)
    se_im = np.zeros_like(chi, dtype=float)
    for i in range(d):
        for j in range(d):
            for k in range(d):
                for l in range(d):
                    e = ((i * d + j) * d + k) * d + l
                    chi[i, j, k, l], se_re[i, j, k, l], se_im[i, j, k, l] = _process_readout(
                        ch, i, j, k, l, variant, plan, e)

    return DmEstimate(d, flatten_chi(chi), flatten_chi(se_re), flatten_chi(se_im), variant,
                      0 if plan is None else plan.n, "process")
