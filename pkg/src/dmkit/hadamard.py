"""Generalized Hadamard test.

A qubit probe in |0> and a system in ``rho`` pass through H, a |0>-controlled
``A``, a |1>-controlled ``B``, the phase gate ``S**b`` and a second H; the
probe-Z (x) ``E`` expectation is then Re (b=0) or Im (b=1) of
``tr(A rho B^dagger E)``. For the process variant the channel sits between
the (A, B) and (C, D) control pairs and the value is
``tr[M(A rho B^dagger) D^dagger E C]``.

Two evaluation routes are provided: the closed form, valid for arbitrary
(also non-unitary) operators, and an explicit 2d x 2d circuit simulation
for unitary gates that serves as a cross-check.
"""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .linalg import as_matrix
from .qmodel import KrausChannel, channel_apply

__all__ = [
    "HadamardTestSpec",
    "ProcessTestSpec",
    "HADAMARD",
    "PHASE_GATE",
    "PAULI_Z",
    "expectation",
    "expectation_complex",
    "expectation_process",
    "expectation_process_complex",
    "circuit_cross_check",
    "circuit_cross_check_process",
]

HADAMARD = np.array([[1, 1], [1, -1]], dtype=np.complex128) / np.sqrt(2)
# diag(1, i) makes the b=1 readout +Im tr(A rho B^dagger E) for this gate order
PHASE_GATE = np.diag([1.0, 1.0j]).astype(np.complex128)
PAULI_Z = np.diag([1.0, -1.0]).astype(np.complex128)
P0 = np.diag([1.0, 0.0]).astype(np.complex128)
P1 = np.diag([0.0, 1.0]).astype(np.complex128)


def _check_bit(b):
    if b not in (0, 1):
        raise ValueError(f"phase bit must be 0 or 1, got {b!r}")


@dataclass(frozen=True)
class HadamardTestSpec:
    A: np.ndarray
    B: np.ndarray
    rho: np.ndarray
    E: np.ndarray
    b: int = 0

    def __post_init__(self):
        for name in ("A", "B", "rho", "E"):
            object.__setattr__(self, name, as_matrix(getattr(self, name), square=True))
        _check_bit(self.b)
        shapes = {getattr(self, n).shape for n in ("A", "B", "rho", "E")}
        if len(shapes) != 1:
            raise ValueError(f"operators must share one dimension, got shapes {sorted(shapes)}")

    @property
    def dim(self) -> int:
        return self.rho.shape[0]

    def with_bit(self, b) -> "HadamardTestSpec":
        return replace(self, b=b)


@dataclass(frozen=True)
class ProcessTestSpec:
    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    D: np.ndarray
    rho: np.ndarray
    E: np.ndarray
    channel: KrausChannel
    b: int = 0

    def __post_init__(self):
        names = ("A", "B", "C", "D", "rho", "E")
        for name in names:
            object.__setattr__(self, name, as_matrix(getattr(self, name), square=True))
        _check_bit(self.b)
        d = self.channel.dim
        bad = [n for n in names if getattr(self, n).shape != (d, d)]
        if bad:
            raise ValueError(f"operators {bad} do not match channel dimension {d}")

    @property
    def dim(self) -> int:
        return self.channel.dim

    def with_bit(self, b) -> "ProcessTestSpec":
        return replace(self, b=b)


def _trace_value(spec: HadamardTestSpec) -> complex:
    return complex(np.trace(spec.A @ spec.rho @ spec.B.conj().T @ spec.E))


def _process_value(spec: ProcessTestSpec) -> complex:
    evolved = channel_apply(spec.channel, spec.A @ spec.rho @ spec.B.conj().T)
    return complex(np.trace(evolved @ spec.D.conj().T @ spec.E @ spec.C))


def _quadrature(z: complex, b: int) -> float:
    return z.real if b == 0 else z.imag


def expectation(spec: HadamardTestSpec) -> float:
    """Probe-Z (x) E expectation: Re or Im of ``tr(A rho B^dagger E)``."""
    return _quadrature(_trace_value(spec), spec.b)


def expectation_complex(spec0, spec1=None) -> complex:
    """Combine the b=0 and b=1 readouts into ``tr(A rho B^dagger E)``.

    ``spec1`` defaults to ``spec0`` with the bit flipped. Works for both
    state/POVM specs and process specs.
    """
    if spec1 is None:
        spec0, spec1 = spec0.with_bit(0), spec0.with_bit(1)
    if type(spec0) is not type(spec1):
        raise ValueError("the two readouts must be the same kind of spec")
    if {spec0.b, spec1.b} != {0, 1}:
        raise ValueError("need one b=0 and one b=1 spec")
    if spec0.b == 1:
        spec0, spec1 = spec1, spec0
    if not _same_but_bit(spec0, spec1):
        raise ValueError("specs differ in more than the phase bit")
    if isinstance(spec0, ProcessTestSpec):
        return complex(expectation_process(spec0), expectation_process(spec1))
    return complex(expectation(spec0), expectation(spec1))


def _same_but_bit(s0, s1) -> bool:
    names = ["A", "B", "rho", "E"]
    if isinstance(s0, ProcessTestSpec):
        names += ["C", "D"]
        if s0.channel is not s1.channel and not _same_channel(s0.channel, s1.channel):
            return False
    return all(np.array_equal(getattr(s0, n), getattr(s1, n)) for n in names)


def _same_channel(c0, c1) -> bool:
    return len(c0.kraus_ops) == len(c1.kraus_ops) and all(
        np.array_equal(a, b) for a, b in zip(c0.kraus_ops, c1.kraus_ops))


def expectation_process(spec: ProcessTestSpec) -> float:
    """Re or Im of ``tr[M(A rho B^dagger) D^dagger E C]``."""
    return _quadrature(_process_value(spec), spec.b)


def expectation_process_complex(spec: ProcessTestSpec) -> complex:
    return expectation_complex(spec)


def _is_unitary(u) -> bool:
    return np.max(np.abs(u.conj().T @ u - np.eye(u.shape[0]))) < 1e-10


def _probe_gate(g, d):
    return np.kron(g, np.eye(d))


def _controlled(a, b):
    return np.kron(P0, a) + np.kron(P1, b)


def _evolve(sigma, u):
    return u @ sigma @ u.conj().T


def circuit_cross_check(spec: HadamardTestSpec) -> float:
    """Simulate the probe (x) system circuit explicitly and read out Z (x) E.

    Only defined for unitary ``A`` and ``B``; projector-valued configurations
    must use :func:`expectation`.
    """
    if not (_is_unitary(spec.A) and _is_unitary(spec.B)):
        raise ValueError("circuit path needs unitary A and B; use expectation() "
                         "for non-unitary (e.g. projector) configurations")
    d = spec.dim
    h = _probe_gate(HADAMARD, d)
    s = _probe_gate(np.linalg.matrix_power(PHASE_GATE, spec.b), d)
    sigma = np.kron(P0, spec.rho)
    for u in (h, _controlled(spec.A, spec.B), s, h):
        sigma = _evolve(sigma, u)
    return float(np.trace(np.kron(PAULI_Z, spec.E) @ sigma).real)


def circuit_cross_check_process(spec: ProcessTestSpec) -> float:
    """Circuit route for the process sandwich: the channel acts on the system
    half of the joint state between the two controlled-gate pairs."""
    if not all(_is_unitary(u) for u in (spec.A, spec.B, spec.C, spec.D)):
        raise ValueError("circuit path needs unitary A, B, C and D; use expectation_process()")
    d = spec.dim
    h = _probe_gate(HADAMARD, d)
    s = _probe_gate(np.linalg.matrix_power(PHASE_GATE, spec.b), d)
    sigma = np.kron(P0, spec.rho)
    sigma = _evolve(sigma, h)
    sigma = _evolve(sigma, _controlled(spec.A, spec.B))
    sigma = sum(_evolve(sigma, np.kron(np.eye(2), k)) for k in spec.channel.kraus_ops)
    sigma = _evolve(sigma, _controlled(spec.C, spec.D))
    sigma = _evolve(sigma, s)
    sigma = _evolve(sigma, h)
    return float(np.trace(np.kron(PAULI_Z, spec.E) @ sigma).real)
