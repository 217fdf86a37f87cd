"""Quantum states, POVM elements and channels, plus the operators the
direct-measurement protocols are assembled from."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .linalg import as_matrix, ket

__all__ = [
    "TOL",
    "DensityOperator",
    "PovmElement",
    "KrausChannel",
    "ChiMatrix",
    "flatten_chi",
    "u_shift",
    "mub_state",
    "basis_ket",
    "basis_projector",
    "dyad",
    "channel_apply",
    "chi_from_kraus",
    "identity_channel",
    "dephasing_channel",
    "depolarizing_channel",
    "unitary_channel",
    "haar_unitary",
    "random_state",
    "random_pure_state",
    "random_povm_element",
    "random_channel",
    "matrix_to_json",
    "matrix_from_json",
    "channel_to_json",
    "channel_from_json",
]

# validation tolerances, one table for the whole package
TOL = {
    "hermitian": 1e-10,
    "eigenvalue": 1e-10,
    "trace": 1e-10,
    "completeness": 1e-10,
}


def _hermiticity_error(m):
    return float(np.max(np.abs(m - m.conj().T)))


@dataclass(frozen=True)
class DensityOperator:
    matrix: np.ndarray

    def __post_init__(self):
        m = as_matrix(self.matrix, square=True)
        object.__setattr__(self, "matrix", m)
        if _hermiticity_error(m) > TOL["hermitian"]:
            raise ValueError("density operator is not Hermitian")
        if abs(np.trace(m) - 1.0) > TOL["trace"]:
            raise ValueError(f"density operator trace is {np.trace(m):.12g}, expected 1")
        if np.min(np.linalg.eigvalsh(0.5 * (m + m.conj().T))) < -TOL["eigenvalue"]:
            raise ValueError("density operator has a negative eigenvalue")

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @classmethod
    def from_ket(cls, psi) -> "DensityOperator":
        v = ket(psi)
        return cls(np.outer(v, v.conj()))


@dataclass(frozen=True)
class PovmElement:
    matrix: np.ndarray

    def __post_init__(self):
        m = as_matrix(self.matrix, square=True)
        object.__setattr__(self, "matrix", m)
        if _hermiticity_error(m) > TOL["hermitian"]:
            raise ValueError("POVM element is not Hermitian")
        w = np.linalg.eigvalsh(0.5 * (m + m.conj().T))
        if w[0] < -TOL["eigenvalue"] or w[-1] > 1.0 + TOL["eigenvalue"]:
            raise ValueError("POVM element eigenvalues must lie in [0, 1]")

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]


@dataclass(frozen=True)
class KrausChannel:
    kraus_ops: tuple

    def __post_init__(self):
        ops = tuple(as_matrix(k, square=True) for k in self.kraus_ops)
        if not ops:
            raise ValueError("a channel needs at least one Kraus operator")
        d = ops[0].shape[0]
        if any(k.shape != (d, d) for k in ops):
            raise ValueError("Kraus operators must share one dimension")
        completeness = sum(k.conj().T @ k for k in ops)
        if np.max(np.abs(completeness - np.eye(d))) > TOL["completeness"]:
            raise ValueError("Kraus operators are not trace preserving")
        object.__setattr__(self, "kraus_ops", ops)

    @property
    def dim(self) -> int:
        return self.kraus_ops[0].shape[0]


@dataclass(frozen=True)
class ChiMatrix:
    """Process tensor with ``chi[i, j, k, l] = tr[M(|i><j|) |k><l|]``.

    The channel acts as ``M(rho) = sum chi[i,j,k,l] |l><i| rho |j><k|``.
    """

    entries: np.ndarray = field(repr=False)

    def __post_init__(self):
        e = np.array(self.entries, dtype=np.complex128)
        if e.ndim != 4 or len(set(e.shape)) != 1:
            raise ValueError(f"chi tensor must have shape (d, d, d, d), got {e.shape}")
        e.flags.writeable = False
        object.__setattr__(self, "entries", e)

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    def apply(self, rho) -> np.ndarray:
        rho = np.asarray(rho, dtype=np.complex128)
        # out[l, k] = sum_ij chi[i, j, k, l] rho[i, j]
        return np.einsum("ijkl,ij->lk", self.entries, rho)

    def flatten(self) -> np.ndarray:
        """d^2 x d^2 matrix, row ``i + d*l``, column ``j + d*k``."""
        return flatten_chi(self.entries)

    @classmethod
    def unflatten(cls, flat) -> "ChiMatrix":
        flat = np.asarray(flat, dtype=np.complex128)
        d = int(round(np.sqrt(flat.shape[0])))
        if flat.shape != (d * d, d * d):
            raise ValueError(f"flattened chi must be square with side d^2, got {flat.shape}")
        return cls(flat.reshape(d, d, d, d).transpose(1, 3, 2, 0))


def flatten_chi(t) -> np.ndarray:
    """Flatten a (d, d, d, d) array indexed [i, j, k, l] to row ``i + d*l``,
    column ``j + d*k``."""
    t = np.asarray(t)
    d = t.shape[0]
    # axes reordered to (l, i, k, j): C-order reshape puts i and j fastest
    return t.transpose(3, 0, 2, 1).reshape(d * d, d * d)


def basis_ket(d, i) -> np.ndarray:
    if not 0 <= i < d:
        raise IndexError(f"basis index {i} out of range for dimension {d}")
    v = np.zeros(d, dtype=np.complex128)
    v[i] = 1.0
    return v


def dyad(d, i, j) -> np.ndarray:
    """|i><j| in dimension d."""
    m = np.zeros((d, d), dtype=np.complex128)
    if not (0 <= i < d and 0 <= j < d):
        raise IndexError(f"indices ({i}, {j}) out of range for dimension {d}")
    m[i, j] = 1.0
    return m


def basis_projector(d, i) -> np.ndarray:
    return dyad(d, i, i)


def u_shift(d, n) -> np.ndarray:
    """Cyclic basis shift ``sum_k |k+n mod d><k|``."""
    if d < 1:
        raise ValueError("dimension must be positive")
    k = np.arange(d)
    u = np.zeros((d, d), dtype=np.complex128)
    u[(k + n) % d, k] = 1.0
    return u


def mub_state(d) -> np.ndarray:
    """Uniform superposition: overlap 1/sqrt(d) with every basis vector."""
    if d < 1:
        raise ValueError("dimension must be positive")
    return ket(np.full(d, 1.0 / np.sqrt(d)), normalize=True)


def channel_apply(ch: KrausChannel, rho) -> np.ndarray:
    """``sum_m K_m rho K_m^dagger``; ``rho`` need not be a physical state."""
    rho = np.asarray(rho, dtype=np.complex128)
    if rho.shape != (ch.dim, ch.dim):
        raise ValueError(f"operator shape {rho.shape} does not match channel dimension {ch.dim}")
    return sum(k @ rho @ k.conj().T for k in ch.kraus_ops)


def chi_from_kraus(ch: KrausChannel) -> ChiMatrix:
    """Brute-force chi tensor: push every dyad |i><j| through the channel."""
    d = ch.dim
    chi = np.zeros((d, d, d, d), dtype=np.complex128)
    for i in range(d):
        for j in range(d):
            out = channel_apply(ch, dyad(d, i, j))
            # tr[out |k><l|] = out[l, k]
            chi[i, j] = out.T
    return ChiMatrix(chi)


def identity_channel(d) -> KrausChannel:
    return KrausChannel((np.eye(d),))


def unitary_channel(u) -> KrausChannel:
    return KrausChannel((u,))


def dephasing_channel(d) -> KrausChannel:
    return KrausChannel(tuple(basis_projector(d, m) for m in range(d)))


def depolarizing_channel(d, p) -> KrausChannel:
    """``(1-p) rho + p tr(rho) I/d`` via the generalized Pauli (Weyl) basis."""
    if not 0.0 <= p <= 1.0:
        raise ValueError("depolarizing probability must lie in [0, 1]")
    omega = np.exp(2j * np.pi / d)
    clock = np.diag(omega ** np.arange(d))
    weyl = [np.linalg.matrix_power(u_shift(d, 1), a) @ np.linalg.matrix_power(clock, b)
            for a in range(d) for b in range(d)]
    weights = [1.0 - p + p / d**2] + [p / d**2] * (d * d - 1)
    return KrausChannel(tuple(np.sqrt(w) * w_op for w, w_op in zip(weights, weyl)))


def haar_unitary(d, rng) -> np.ndarray:
    z = (rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    ph = np.diag(r) / np.abs(np.diag(r))
    return q * ph


def random_pure_state(d, rng) -> np.ndarray:
    v = rng.normal(size=d) + 1j * rng.normal(size=d)
    return ket(v, normalize=True)


def random_state(d, rng, rank=None) -> DensityOperator:
    """Ginibre-distributed mixed state of the given rank (full rank by default)."""
    rank = d if rank is None else rank
    g = rng.normal(size=(d, rank)) + 1j * rng.normal(size=(d, rank))
    rho = g @ g.conj().T
    rho /= np.trace(rho).real
    return DensityOperator(0.5 * (rho + rho.conj().T))


def random_povm_element(d, rng) -> PovmElement:
    """Random Hermitian operator with spectrum drawn uniformly from [0, 1]."""
    u = haar_unitary(d, rng)
    e = u @ np.diag(rng.uniform(0.0, 1.0, size=d)) @ u.conj().T
    return PovmElement(0.5 * (e + e.conj().T))


def random_channel(d, rng, env_dim=None) -> KrausChannel:
    """Stinespring construction: Haar unitary on system (x) environment,
    environment starting in |0>, environment traced out."""
    env_dim = d if env_dim is None else env_dim
    u = haar_unitary(d * env_dim, rng).reshape(d, env_dim, d, env_dim)
    return KrausChannel(tuple(u[:, m, :, 0] for m in range(env_dim)))


def matrix_to_json(m) -> dict:
    m = np.asarray(m, dtype=np.complex128)
    return {"dim": int(m.shape[0]), "re": m.real.tolist(), "im": m.imag.tolist()}


def matrix_from_json(obj) -> np.ndarray:
    try:
        re = np.asarray(obj["re"], dtype=float)
        im = np.asarray(obj.get("im", np.zeros_like(re)), dtype=float)
    except (KeyError, TypeError) as exc:
        raise ValueError(f"matrix JSON needs 're' and 'im' arrays: {exc}") from None
    if re.shape != im.shape:
        raise ValueError("matrix JSON 're' and 'im' shapes differ")
    m = as_matrix(re + 1j * im, square=True)
    if "dim" in obj and int(obj["dim"]) != m.shape[0]:
        raise ValueError(f"matrix JSON declares dim {obj['dim']} but has shape {m.shape}")
    return m


def channel_to_json(ch: KrausChannel) -> dict:
    return {"dim": ch.dim, "kraus": [matrix_to_json(k) for k in ch.kraus_ops]}


def channel_from_json(obj) -> KrausChannel:
    if "kraus" not in obj:
        raise ValueError("channel JSON needs a 'kraus' list")
    ch = KrausChannel(tuple(matrix_from_json(k) for k in obj["kraus"]))
    if "dim" in obj and int(obj["dim"]) != ch.dim:
        raise ValueError(f"channel JSON declares dim {obj['dim']} but operators are {ch.dim}x{ch.dim}")
    return ch
