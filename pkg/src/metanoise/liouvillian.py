"""GKLS generators, their biorthogonal spectra, and Pauli channels.

Vectorisation is column-stacking throughout: ``vec(A X B) = (B.T ⊗ A) vec(X)``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .errors import (
    DimensionError,
    DomainError,
    ExceptionalPointError,
    PreconditionError,
    ResourceLimitError,
    ShapeError,
)
from .pauli import (
    PauliString,
    PauliVector,
    _codes_to_xz,
    _qubits_of,
    from_pauli_coefficients,
    pauli_codes,
    pauli_coefficients,
)

__all__ = [
    "Liouvillian",
    "SpectralDecomposition",
    "MetastableManifold",
    "PauliChannel",
    "vec",
    "unvec",
    "build_superoperator",
    "spectral_decomposition",
    "evolve_spectral",
    "stationary_state",
    "metastable_manifold",
    "channel_eigenvalue",
    "apply_channel",
    "channel_superoperator",
    "channel_generator",
]

#: Dense superoperators are 4^n x 4^n; refuse beyond this many qubits.
SUPEROPERATOR_QUBIT_LIMIT = 5
#: Pauli channels act diagonally on 4^n coefficients; refuse beyond this.
PAULI_CHANNEL_QUBIT_LIMIT = 12
ZERO_EIGENVALUE_TOL = 1e-8
BIORTHOGONALITY_TOL = 1e-8
CLUSTER_TOL = 1e-9
CONDITION_LIMIT = 1e12


def vec(a: np.ndarray) -> np.ndarray:
    return np.asarray(a).reshape(-1, order="F")


def unvec(v: np.ndarray, dim: int | None = None) -> np.ndarray:
    v = np.asarray(v)
    dim = dim or int(round(np.sqrt(v.shape[0])))
    return v.reshape(dim, dim, order="F")


@dataclass(frozen=True, eq=False)
class Liouvillian:
    """``L[rho] = -i[H, rho] + sum_i g_i (L_i rho L_i^dag - {L_i^dag L_i, rho}/2)``."""

    hamiltonian: np.ndarray
    jumps: tuple[tuple[np.ndarray, float], ...] = ()

    def __post_init__(self):
        h = np.asarray(self.hamiltonian, dtype=complex)
        if h.ndim != 2 or h.shape[0] != h.shape[1]:
            raise ShapeError(f"Hamiltonian must be square, got {h.shape}")
        _qubits_of(h.shape[0])
        if not np.allclose(h, h.conj().T, atol=1e-10, rtol=0):
            raise PreconditionError("Hamiltonian is not Hermitian")
        jumps = []
        for op, rate in self.jumps:
            op = np.asarray(op, dtype=complex)
            if op.shape != h.shape:
                raise DimensionError(f"jump operator shape {op.shape} != {h.shape}")
            if rate < 0:
                raise DomainError(f"negative rate {rate}")
            jumps.append((op, float(rate)))
        object.__setattr__(self, "hamiltonian", h)
        object.__setattr__(self, "jumps", tuple(jumps))

    @property
    def dim(self) -> int:
        return self.hamiltonian.shape[0]

    @property
    def n(self) -> int:
        return _qubits_of(self.dim)

    @classmethod
    def from_paulis(cls, n, hamiltonian=None, jumps=()) -> "Liouvillian":
        """Build from ``{label: coefficient}`` and ``[(label, rate), ...]``."""
        from .pauli import operator_from_paulis

        h = operator_from_paulis(hamiltonian or {}, n)
        ops = [(PauliString.from_label(lbl).to_matrix(), rate) for lbl, rate in jumps]
        return cls(h, tuple(ops))

    def apply(self, rho: np.ndarray) -> np.ndarray:
        h = self.hamiltonian
        out = -1j * (h @ rho - rho @ h)
        for op, rate in self.jumps:
            opd = op.conj().T
            ldl = opd @ op
            out += rate * (op @ rho @ opd - 0.5 * (ldl @ rho + rho @ ldl))
        return out


def build_superoperator(gen: Liouvillian, max_qubits: int = SUPEROPERATOR_QUBIT_LIMIT) -> np.ndarray:
    """Dense ``4^n x 4^n`` matrix of ``gen`` acting on ``vec(rho)``."""
    if gen.n > max_qubits:
        raise ResourceLimitError(f"dense superoperator limited to {max_qubits} qubits, got {gen.n}")
    d = gen.dim
    eye = np.eye(d)
    h = gen.hamiltonian
    s = -1j * (np.kron(eye, h) - np.kron(h.T, eye))
    for op, rate in gen.jumps:
        ldl = op.conj().T @ op
        s += rate * (np.kron(op.conj(), op) - 0.5 * np.kron(eye, ldl) - 0.5 * np.kron(ldl.T, eye))
    return s


@dataclass(frozen=True, eq=False)
class SpectralDecomposition:
    """Eigenvalues with biorthonormal right/left eigenmatrices.

    ``right[j]`` and ``left[j]`` are ``d x d`` matrices with
    ``Tr(left[j]^dag right[k]) = delta_jk``.
    """

    eigenvalues: np.ndarray
    right: np.ndarray
    left: np.ndarray

    @property
    def dim(self) -> int:
        return self.right.shape[-1]

    def overlaps(self) -> np.ndarray:
        """Matrix of ``Tr(left[j]^dag right[k])``."""
        k = len(self.eigenvalues)
        lv = self.left.reshape(k, -1)
        rv = self.right.reshape(k, -1)
        return lv.conj() @ rv.T

    def stationary_indices(self, tol: float = ZERO_EIGENVALUE_TOL) -> np.ndarray:
        return np.flatnonzero(np.abs(self.eigenvalues) <= tol)


def spectral_decomposition(
    s: np.ndarray,
    cluster_tol: float = CLUSTER_TOL,
    condition_limit: float = CONDITION_LIMIT,
) -> SpectralDecomposition:
    """Diagonalise a superoperator in a biorthonormal basis.

    Eigenvalues are sorted by descending real part. Within clusters of
    (numerically) degenerate eigenvalues the right vectors are re-mixed so that
    the left/right overlap block is the identity.
    """
    s = np.asarray(s, dtype=complex)
    if s.ndim != 2 or s.shape[0] != s.shape[1]:
        raise ShapeError(f"superoperator must be square, got {s.shape}")
    dim = int(round(np.sqrt(s.shape[0])))
    if dim * dim != s.shape[0]:
        raise ShapeError(f"superoperator size {s.shape[0]} is not a square")

    evals, vl, vr = scipy.linalg.eig(s, left=True, right=True)
    cond = np.linalg.cond(vr)
    if not np.isfinite(cond) or cond > condition_limit:
        raise ExceptionalPointError(f"eigenvector matrix condition number {cond:.3g}")

    order = np.lexsort((evals.imag, -np.round(evals.real, 12)))
    evals, vl, vr = evals[order], vl[:, order], vr[:, order]

    # group near-degenerate eigenvalues and biorthonormalise blockwise
    size = len(evals)
    visited = np.zeros(size, dtype=bool)
    for i in range(size):
        if visited[i]:
            continue
        block = np.flatnonzero((np.abs(evals - evals[i]) < cluster_tol) & ~visited)
        visited[block] = True
        gram = vl[:, block].conj().T @ vr[:, block]
        try:
            vr[:, block] = vr[:, block] @ np.linalg.inv(gram)
        except np.linalg.LinAlgError:
            raise ExceptionalPointError("singular left/right overlap block") from None

    right = np.stack([unvec(vr[:, j], dim) for j in range(size)])
    left = np.stack([unvec(vl[:, j], dim) for j in range(size)])
    return SpectralDecomposition(evals, right, left)


def evolve_spectral(spec: SpectralDecomposition, rho0: np.ndarray, t: float) -> np.ndarray:
    """``rho(t) = sum_j exp(lambda_j t) Tr(left_j^dag rho0) right_j``.

    The stationary contribution is the ``lambda = 0`` term of the same sum.
    """
    if t < 0:
        raise DomainError(f"time must be nonnegative, got {t}")
    rho0 = np.asarray(rho0, dtype=complex)
    k = len(spec.eigenvalues)
    amps = spec.left.reshape(k, -1).conj() @ rho0.reshape(-1)
    weights = np.exp(spec.eigenvalues * t) * amps
    return np.tensordot(weights, spec.right, axes=1)


def stationary_state(spec: SpectralDecomposition, tol: float = ZERO_EIGENVALUE_TOL) -> np.ndarray:
    """The unique zero mode, normalised to unit trace."""
    idx = spec.stationary_indices(tol)
    if len(idx) != 1:
        raise PreconditionError(f"expected a unique stationary state, found {len(idx)} zero modes")
    r = spec.right[idx[0]]
    return r / np.trace(r)


@dataclass(frozen=True)
class MetastableManifold:
    indices: tuple[int, ...]
    #: tau_1 / tau_2: lifetime of the slowest excluded mode over that of the
    #: fastest included one (small means well separated). ``nan`` when either
    #: side is empty.
    gap_ratio: float


def metastable_manifold(spec: SpectralDecomposition, tau2: float) -> MetastableManifold:
    """Modes with ``|Re lambda| <= 1/tau2``; the gap ratio is reported, not judged."""
    if tau2 <= 0:
        raise DomainError(f"tau2 must be positive, got {tau2}")
    rates = np.abs(spec.eigenvalues.real)
    inside = rates <= 1.0 / tau2
    indices = tuple(int(i) for i in np.flatnonzero(inside))
    if inside.all() or not inside.any():
        return MetastableManifold(indices, float("nan"))
    fastest_in = rates[inside].max()
    slowest_out = rates[~inside].min()
    # tau = 1/rate; a zero rate means infinite lifetime
    ratio = fastest_in / slowest_out
    return MetastableManifold(indices, float(ratio))


# ---------------------------------------------------------------------------
# Pauli channels


@dataclass(frozen=True, eq=False)
class PauliChannel:
    """A unital channel diagonal in the Pauli basis.

    Either ``per_qubit`` holds one ``(q_x, q_y, q_z)`` triple per qubit (each
    ``sigma^a -> q_a sigma^a``), or ``weighted`` holds ``(P_i, p_i)`` pairs for
    ``rho -> (1 - sum p) rho + sum_i p_i P_i rho P_i``.
    """

    n: int
    per_qubit: tuple[tuple[float, float, float], ...] | None = None
    weighted: tuple[tuple[PauliString, float], ...] | None = None
    _eigs: np.ndarray | None = field(default=None, init=False, repr=False)

    def __post_init__(self):
        if (self.per_qubit is None) == (self.weighted is None):
            raise ValueError("give exactly one of per_qubit or weighted")
        if self.per_qubit is not None:
            triples = tuple(tuple(float(q) for q in t) for t in self.per_qubit)
            if len(triples) != self.n or any(len(t) != 3 for t in triples):
                raise ShapeError(f"need {self.n} (q_x, q_y, q_z) triples")
            for t in triples:
                if any(not -1 < q < 1 for q in t):
                    raise DomainError(f"q values must lie strictly in (-1, 1): {t}")
            object.__setattr__(self, "per_qubit", triples)
        else:
            terms = []
            for p, w in self.weighted:
                p = PauliString.from_label(p) if isinstance(p, str) else p
                if p.n != self.n:
                    raise DimensionError(f"noise string {p} does not act on {self.n} qubits")
                if not 0 < w <= 1:
                    raise DomainError(f"weight {w} outside (0, 1]")
                terms.append((p.canonical(), float(w)))
            if sum(w for _, w in terms) > 1 + 1e-12:
                raise DomainError("weights sum to more than one")
            object.__setattr__(self, "weighted", tuple(terms))

    @classmethod
    def local(cls, n: int, qx: float, qy: float, qz: float) -> "PauliChannel":
        """The same single-qubit channel on every qubit."""
        return cls(n, per_qubit=((qx, qy, qz),) * n)

    @classmethod
    def from_weights(cls, n: int, terms) -> "PauliChannel":
        return cls(n, weighted=tuple(terms))

    @classmethod
    def noiseless(cls, n: int) -> "PauliChannel":
        return cls(n, weighted=())

    @property
    def total_weight(self) -> float:
        if self.weighted is None:
            raise ValueError("total_weight is defined for the weighted form only")
        return sum(w for _, w in self.weighted)

    def eigenvalues(self) -> np.ndarray:
        """Channel eigenvalue of every basis string, length 4^n (cached)."""
        if self._eigs is not None:
            return self._eigs
        if self.n > PAULI_CHANNEL_QUBIT_LIMIT:
            raise ResourceLimitError(
                f"Pauli channel tables limited to {PAULI_CHANNEL_QUBIT_LIMIT} qubits"
            )
        codes = pauli_codes(self.n)
        if self.per_qubit is not None:
            eigs = np.ones(4**self.n)
            for j, (qx, qy, qz) in enumerate(self.per_qubit):
                eigs *= np.array([1.0, qx, qy, qz])[codes[:, j]]
        else:
            x, z = _codes_to_xz(codes)
            eigs = np.ones(4**self.n)
            for p, w in self.weighted:
                px = np.array(p.x, dtype=np.int64)
                pz = np.array(p.z, dtype=np.int64)
                anti = ((x @ pz + z @ px) % 2).astype(bool)
                eigs[anti] -= 2 * w
        eigs.setflags(write=False)
        object.__setattr__(self, "_eigs", eigs)
        return eigs

    def __repr__(self) -> str:
        if self.per_qubit is not None:
            return f"PauliChannel(n={self.n}, per_qubit={self.per_qubit})"
        terms = ", ".join(f"{p}:{w:g}" for p, w in self.weighted)
        return f"PauliChannel(n={self.n}, weighted=[{terms}])"


def channel_eigenvalue(ch: PauliChannel, p: PauliString) -> float:
    """Factor by which ``ch`` scales the Pauli string ``p``."""
    if p.n != ch.n:
        raise DimensionError(f"qubit counts differ: {ch.n} != {p.n}")
    if ch.per_qubit is not None:
        out = 1.0
        for code, q in zip(p.codes, ch.per_qubit):
            if code:
                out *= q[code - 1]
        return out
    from .pauli import commutes

    total = sum(w for _, w in ch.weighted)
    return (1.0 - total) + sum(w if commutes(q, p) else -w for q, w in ch.weighted)


def apply_channel(ch: PauliChannel, rho):
    """Apply ``ch`` to a dense density matrix or a :class:`PauliVector`."""
    if isinstance(rho, PauliVector):
        if rho.n != ch.n:
            raise DimensionError(f"qubit counts differ: {ch.n} != {rho.n}")
        return PauliVector(rho.n, rho.coeffs * ch.eigenvalues())
    rho = np.asarray(rho)
    n = _qubits_of(rho.shape[0])
    if n != ch.n:
        raise DimensionError(f"qubit counts differ: {ch.n} != {n}")
    coeffs = pauli_coefficients(rho) * ch.eigenvalues()
    return from_pauli_coefficients(coeffs)


def _pauli_basis_matrix(n: int) -> np.ndarray:
    """Columns are ``vec(P)`` for every basis string, in index order."""
    return np.stack([vec(PauliString.from_index(i, n).to_matrix()) for i in range(4**n)], axis=1)


def channel_superoperator(ch: PauliChannel, max_qubits: int = SUPEROPERATOR_QUBIT_LIMIT) -> np.ndarray:
    """Dense ``4^n x 4^n`` matrix of the channel itself."""
    if ch.n > max_qubits:
        raise ResourceLimitError(f"dense superoperator limited to {max_qubits} qubits")
    basis = _pauli_basis_matrix(ch.n)
    # basis^{-1} = basis^dag / 2^n
    return basis @ np.diag(ch.eigenvalues()) @ basis.conj().T / 2**ch.n


def channel_generator(ch: PauliChannel, max_qubits: int = SUPEROPERATOR_QUBIT_LIMIT) -> np.ndarray:
    """Generator ``L`` with ``exp(L) == ch``; requires every eigenvalue > 0."""
    eigs = ch.eigenvalues()
    if np.any(eigs <= 0):
        raise DomainError("channel has a nonpositive eigenvalue; no real generator exists")
    if ch.n > max_qubits:
        raise ResourceLimitError(f"dense superoperator limited to {max_qubits} qubits")
    basis = _pauli_basis_matrix(ch.n)
    return basis @ np.diag(np.log(eigs)) @ basis.conj().T / 2**ch.n
