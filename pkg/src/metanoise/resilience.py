"""Noise-resilience index, its Clifford-tracking upper bound, and related counts.

Extended reals are plain floats: ``-inf`` stands for a path whose channel
eigenvalue vanishes (``log 0``), and it absorbs any finite addend.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

import numpy as np
import scipy.integrate
import scipy.sparse as sp

from .circuit import CZ, Circuit, CliffordGate, Layer, Rotation, _clifford_run_tableau
from .errors import (
    DimensionError,
    DomainError,
    PreconditionError,
    ResourceLimitError,
    UnsupportedBasisError,
)
from .liouvillian import PauliChannel, spectral_decomposition
from .pauli import (
    CliffordTableau,
    PauliString,
    PauliVector,
    _qubits_of,
    clifford_index_map,
    commutes,
    conjugate,
    decompose,
    pauli_mul,
)

__all__ = [
    "ResilienceReport",
    "SupportTrace",
    "StabilizerState",
    "StabilizerGroup",
    "lambda_m_exact",
    "lambda_m_general",
    "layer_transfer_matrix",
    "algorithm1_bound",
    "algorithm1_trace",
    "circuit_bound",
    "match_up_to_phase",
    "sm_recurrence",
    "hea_min_multiplicity",
    "analog_bound",
]

PATH_TOL = 1e-12
EXACT_QUBIT_LIMIT = 5
_MIN_ATOL = 1e-9


def safe_log(x: float) -> float:
    """``log x`` with ``log(<=0) = -inf``."""
    return math.log(x) if x > 0 else -math.inf


@dataclass(frozen=True)
class ResilienceReport:
    lambda_m: float
    multiplicity: int
    lambda_m_tilde: float | None = None
    per_layer_minima: tuple[float, ...] = ()


# ---------------------------------------------------------------------------
# exact index by dynamic programming over Pauli eigenindices


def _rotation_ptm(axis: str, angle: float) -> np.ndarray:
    from .circuit import _ROTATED_PAIR

    b, c = _ROTATED_PAIR[axis]
    m = np.eye(4)
    cos, sin = math.cos(angle), math.sin(angle)
    m[b, b] = m[c, c] = cos
    m[b, c] = -sin
    m[c, b] = sin
    return m


def layer_transfer_matrix(layer: Layer, n: int) -> sp.csr_matrix:
    """Pauli transfer matrix ``R`` of the layer's unitary: ``U P_i U^dag = sum_j R[j, i] P_j``."""
    size = 4**n
    total = sp.identity(size, format="csr")
    run: list = []

    def flush(total):
        if not run:
            return total
        target, sign = clifford_index_map(_clifford_run_tableau(tuple(run), n))
        perm = sp.csr_matrix((sign, (target, np.arange(size))), shape=(size, size))
        run.clear()
        return perm @ total

    for g in layer.gates:
        if isinstance(g, Rotation):
            total = flush(total)
            r = sp.kron(
                sp.kron(sp.identity(4**g.qubit), sp.csr_matrix(_rotation_ptm(g.axis, g.angle))),
                sp.identity(4 ** (n - g.qubit - 1)),
                format="csr",
            )
            total = r @ total
        else:
            run.append(g)
    return flush(total).tocsr()


def _log_eigs(noise) -> np.ndarray:
    if not isinstance(noise, PauliChannel):
        raise UnsupportedBasisError(
            "exact index needs Pauli channels; use lambda_m_general for dense generators"
        )
    with np.errstate(divide="ignore"):
        return np.log(np.abs(noise.eigenvalues()))


def _state_coeffs(rho_in, n: int) -> np.ndarray:
    if isinstance(rho_in, PauliVector):
        if rho_in.n != n:
            raise DimensionError(f"state has {rho_in.n} qubits, circuit {n}")
        return rho_in.coeffs
    return PauliVector.from_dense(rho_in).coeffs


def _min_and_count(values: np.ndarray) -> tuple[float, int]:
    reached = values[~np.isnan(values)]
    if reached.size == 0:
        raise PreconditionError("no Pauli path survives pruning")
    lo = reached.min()
    if lo == -math.inf:
        return -math.inf, int(np.sum(reached == -math.inf))
    return float(lo), int(np.sum(np.isclose(reached, lo, rtol=0, atol=_MIN_ATOL)))


def lambda_m_exact(
    c: Circuit,
    rho_in,
    tol: float = PATH_TOL,
    max_qubits: int = EXACT_QUBIT_LIMIT,
) -> ResilienceReport:
    """Minimum accumulated log-eigenvalue over all nonvanishing expansion paths.

    ``alpha^1`` is the Pauli expansion of ``U_1 rho_in U_1^dag``; later
    coefficients are transfer-matrix entries of ``U_k``. A path survives while
    every coefficient along it exceeds ``tol`` in magnitude. Unreached
    eigenindices are tracked as NaN.
    """
    n = c.n
    if n > max_qubits:
        raise ResourceLimitError(f"exact index limited to {max_qubits} qubits, got {n}")
    logs = [_log_eigs(layer.noise) for layer in c.layers]
    coeffs = _state_coeffs(rho_in, n)

    minima = []
    first = layer_transfer_matrix(c.layers[0], n) @ coeffs
    values = np.where(np.abs(first) > tol, logs[0], np.nan)
    minima.append(_min_and_count(values)[0])
    for layer, lam in zip(c.layers[1:], logs[1:]):
        r = layer_transfer_matrix(layer, n).tocoo()
        keep = np.abs(r.data) > tol
        rows, cols = r.row[keep], r.col[keep]
        src = values[cols]
        live = ~np.isnan(src)
        rows, src = rows[live], src[live]
        best = np.full(4**n, np.inf)
        np.minimum.at(best, rows, src)
        with np.errstate(invalid="ignore"):
            values = np.where(best == np.inf, np.nan, best + lam)
        minima.append(_min_and_count(values)[0])
    lam_m, mult = _min_and_count(values)
    return ResilienceReport(lam_m, mult, None, tuple(minima))


def lambda_m_general(
    unitaries: Sequence[np.ndarray],
    generators: Sequence[np.ndarray],
    rho_in: np.ndarray,
    tol: float = PATH_TOL,
    max_qubits: int = 2,
) -> ResilienceReport:
    """Index for arbitrary diagonalisable generators via their dense eigenbases.

    ``generators[k]`` is the superoperator ``L_k`` (column-stacking) whose
    exponential acts after ``unitaries[k]``.
    """
    rho_in = np.asarray(rho_in, dtype=complex)
    n = _qubits_of(rho_in.shape[0])
    if n > max_qubits:
        raise ResourceLimitError(f"dense-eigenbasis index limited to {max_qubits} qubits")
    if len(unitaries) != len(generators) or not unitaries:
        raise ValueError("need one generator per unitary layer")
    specs = [spectral_decomposition(g) for g in generators]

    def expand(spec, m):
        k = len(spec.eigenvalues)
        return spec.left.reshape(k, -1).conj() @ m.reshape(-1)

    u = unitaries[0]
    alpha = expand(specs[0], u @ rho_in @ u.conj().T)
    values = np.where(np.abs(alpha) > tol, specs[0].eigenvalues.real, np.nan)
    minima = [_min_and_count(values)[0]]
    for u, spec, prev in zip(unitaries[1:], specs[1:], specs[:-1]):
        new = np.full(len(spec.eigenvalues), np.nan)
        for i, r in enumerate(prev.right):
            if np.isnan(values[i]):
                continue
            alpha = expand(spec, u @ r @ u.conj().T)
            cand = np.where(np.abs(alpha) > tol, values[i] + spec.eigenvalues.real, np.nan)
            new = np.fmin(new, cand)
        values = new
        minima.append(_min_and_count(values)[0])
    lam_m, mult = _min_and_count(values)
    return ResilienceReport(lam_m, mult, None, tuple(minima))


# ---------------------------------------------------------------------------
# stabilizer inputs and support tracking


@dataclass(frozen=True)
class StabilizerGroup:
    """Abelian group generated by independent Hermitian Pauli strings (signs kept)."""

    generators: tuple[PauliString, ...]

    def __post_init__(self):
        gens = tuple(self.generators)
        if not gens:
            raise PreconditionError("need at least one generator")
        n = gens[0].n
        for g in gens:
            if g.n != n:
                raise DimensionError("generators act on different qubit counts")
            if not g.is_hermitian:
                raise PreconditionError(f"generator {g} is not Hermitian")
        for a, b in itertools.combinations(gens, 2):
            if not commutes(a, b):
                raise PreconditionError(f"generators {a} and {b} anticommute")
        if _gf2_rank([g.x + g.z for g in gens]) != len(gens):
            raise PreconditionError("generators are not independent")
        object.__setattr__(self, "generators", gens)

    @property
    def n(self) -> int:
        return self.generators[0].n

    def conjugated(self, tableau: CliffordTableau) -> "StabilizerGroup":
        return StabilizerGroup(tuple(conjugate(tableau, g) for g in self.generators))

    def elements(self) -> list[PauliString]:
        out = []
        for bits in itertools.product((0, 1), repeat=len(self.generators)):
            p = PauliString.identity(self.n)
            for b, g in zip(bits, self.generators):
                if b:
                    p = pauli_mul(p, g)
            out.append(p)
        return out

    def contains(self, p: PauliString) -> bool:
        """Phase-insensitive membership by GF(2) rank."""
        rows = [g.x + g.z for g in self.generators]
        return _gf2_rank(rows + [p.x + p.z]) == len(rows)

    @property
    def size(self) -> int:
        return 2 ** len(self.generators)


def _gf2_rank(rows: Sequence[Sequence[int]]) -> int:
    m = np.array(rows, dtype=np.uint8) % 2
    rank = 0
    ncols = m.shape[1] if m.ndim == 2 else 0
    for col in range(ncols):
        pivot = next((r for r in range(rank, m.shape[0]) if m[r, col]), None)
        if pivot is None:
            continue
        m[[rank, pivot]] = m[[pivot, rank]]
        for r in range(m.shape[0]):
            if r != rank and m[r, col]:
                m[r] ^= m[rank]
        rank += 1
    return rank


@dataclass(frozen=True)
class StabilizerState:
    """Pure stabilizer state given by ``n`` independent commuting generators."""

    group: StabilizerGroup

    def __post_init__(self):
        if len(self.group.generators) != self.group.n:
            raise PreconditionError("a pure stabilizer state needs exactly n generators")
        if any(g.is_identity for g in self.group.elements() if g.phase == 2):
            raise PreconditionError("generators contain -I")

    @classmethod
    def from_generators(cls, labels: Iterable[str | PauliString]) -> "StabilizerState":
        gens = tuple(PauliString.from_label(g) if isinstance(g, str) else g for g in labels)
        return cls(StabilizerGroup(gens))

    @classmethod
    def from_bitstring(cls, bits: str) -> "StabilizerState":
        n = len(bits)
        gens = []
        for j, b in enumerate(bits):
            if b not in "01":
                raise ValueError(f"bitstring must contain only 0/1: {bits!r}")
            z = PauliString.single(n, j, "Z")
            gens.append(-z if b == "1" else z)
        return cls(StabilizerGroup(tuple(gens)))

    @classmethod
    def from_dense(cls, rho: np.ndarray, tol: float = 1e-9) -> "StabilizerState":
        """Recover generators from a density matrix, or raise if it is not a stabilizer state."""
        rho = np.asarray(rho)
        n = _qubits_of(rho.shape[0])
        d = decompose(rho, tol=tol)
        terms = d.terms
        if len(terms) != 2**n or any(abs(abs(c) - 1) > tol for c in terms.values()):
            raise PreconditionError("state is not a stabilizer state")
        elems = [p if np.real(c) > 0 else -p for p, c in terms.items()]
        gens: list[PauliString] = []
        for p in elems:
            if p.is_identity:
                continue
            if _gf2_rank([g.x + g.z for g in gens] + [p.x + p.z]) > len(gens):
                gens.append(p)
        try:
            return cls(StabilizerGroup(tuple(gens)))
        except PreconditionError:
            raise PreconditionError("state is not a stabilizer state") from None

    @property
    def n(self) -> int:
        return self.group.n

    def support(self) -> frozenset[PauliString]:
        return frozenset(p.canonical() for p in self.group.elements())

    def to_dense(self) -> np.ndarray:
        d = 2**self.n
        rho = np.zeros((d, d), dtype=complex)
        for p in self.group.elements():
            rho += p.to_matrix()
        return rho / d


@dataclass(frozen=True)
class SupportTrace:
    """Per-layer Pauli support, layer 0 being the input state."""

    layers: tuple[frozenset[PauliString], ...]
    minima: tuple[float, ...] = ()


def match_up_to_phase(s: PauliString, noise: PauliChannel) -> float:
    """Weight of the noise strings equal to ``s`` up to phase (0 if none)."""
    key = s.canonical()
    return sum(w for p, w in noise.weighted if p == key)


def _as_weighted(noise: PauliChannel) -> PauliChannel:
    if noise.weighted is not None:
        return noise
    return per_qubit_to_weighted(noise)


def per_qubit_to_weighted(ch: PauliChannel, max_qubits: int = 8) -> PauliChannel:
    """Rewrite a product of single-qubit Pauli channels as a weighted Pauli mixture."""
    if ch.per_qubit is None:
        return ch
    if ch.n > max_qubits:
        raise ResourceLimitError(f"weighted expansion limited to {max_qubits} qubits")
    site_probs = []
    for qx, qy, qz in ch.per_qubit:
        probs = np.array(
            [1 + qx + qy + qz, 1 + qx - qy - qz, 1 - qx + qy - qz, 1 - qx - qy + qz]
        ) / 4
        if np.any(probs < -1e-12):
            raise DomainError(f"q triple {(qx, qy, qz)} is not a Pauli mixture")
        site_probs.append(np.clip(probs, 0, None))
    terms = []
    for codes in itertools.product(range(4), repeat=ch.n):
        if not any(codes):
            continue
        w = float(np.prod([site_probs[j][c] for j, c in enumerate(codes)]))
        if w > 0:
            terms.append((PauliString.from_codes(codes), w))
    return PauliChannel(ch.n, weighted=tuple(terms))


def _layer_term(
    strings: Iterable[PauliString],
    noise: PauliChannel,
    matcher: Callable[[PauliString, PauliChannel], float],
) -> float:
    total = noise.total_weight
    worst = 0.0
    seen = False
    for s in strings:
        if s.is_identity:
            continue
        seen = True
        worst = min(worst, safe_log(1.0 - total + matcher(s, noise)))
        if worst == -math.inf:
            break
    return worst if seen else 0.0


def algorithm1_trace(
    rho_in: StabilizerState,
    cliffords: Sequence[CliffordTableau],
    noise: Sequence[PauliChannel],
    matcher: Callable[[PauliString, PauliChannel], float] = match_up_to_phase,
    mode: str = "explicit",
) -> SupportTrace:
    """Run the Clifford-tracking bound and keep the per-layer supports and minima.

    Layer ``k`` conjugates the current support by ``cliffords[k]`` and adds
    ``min_s log(1 - sum_j p_kj + p_k(s))`` over the non-identity support
    strings ``s``, where ``p_k(s)`` is the weight ``matcher`` assigns to ``s``.
    ``mode="group"`` keeps only stabilizer generators and is polynomial; it
    requires the default matcher.
    """
    if not isinstance(rho_in, StabilizerState):
        raise PreconditionError("Algorithm input must be a StabilizerState")
    if len(cliffords) != len(noise):
        raise ValueError("need one noise channel per Clifford layer")
    n = rho_in.n
    for tab, ch in zip(cliffords, noise):
        if tab.n != n or ch.n != n:
            raise DimensionError("layer qubit count does not match the input state")
        if ch.weighted is None:
            raise PreconditionError("noise must be given in weighted Pauli form")
    if mode == "explicit":
        current = rho_in.support()
        layers = [current]
        minima = []
        for tab, ch in zip(cliffords, noise):
            current = frozenset(conjugate(tab, s).canonical() for s in current)
            layers.append(current)
            minima.append(_layer_term(current, ch, matcher))
        return SupportTrace(tuple(layers), tuple(minima))
    if mode == "group":
        if matcher is not match_up_to_phase:
            raise ValueError("group mode supports only the up-to-phase matcher")
        group = rho_in.group
        minima = []
        for tab, ch in zip(cliffords, noise):
            group = group.conjugated(tab)
            minima.append(_group_layer_term(group, ch))
        return SupportTrace((), tuple(minima))
    raise ValueError(f"unknown mode {mode!r}")


def _group_layer_term(group: StabilizerGroup, noise: PauliChannel) -> float:
    total = noise.total_weight
    matched: dict[PauliString, float] = {}
    for p, w in noise.weighted:
        if not p.is_identity and group.contains(p):
            matched[p] = matched.get(p, 0.0) + w
    candidates = [safe_log(1.0 - total + w) for w in matched.values()]
    if len(matched) < group.size - 1:
        candidates.append(safe_log(1.0 - total))
    return min(candidates) if candidates else 0.0


def algorithm1_bound(
    rho_in: StabilizerState,
    cliffords: Sequence[CliffordTableau],
    noise: Sequence[PauliChannel],
    matcher: Callable[[PauliString, PauliChannel], float] = match_up_to_phase,
    mode: str = "explicit",
) -> float:
    """Efficiently computable bound on the resilience index (``-inf`` allowed)."""
    total = 0.0
    for term in algorithm1_trace(rho_in, cliffords, noise, matcher, mode).minima:
        total += term
        if total == -math.inf:
            break
    return total


def circuit_bound(c: Circuit, rho_in: StabilizerState, **kwargs) -> float:
    """Bound for a layered circuit, reading only its Clifford gates and noise.

    Rotations are skipped: they are assumed to preserve the support.
    """
    cliffords = []
    for layer in c.layers:
        gates = tuple(g for g in layer.gates if isinstance(g, (CZ, CliffordGate)))
        cliffords.append(_clifford_run_tableau(gates, c.n))
    noise = [_as_weighted(layer.noise) for layer in c.layers]
    return algorithm1_bound(rho_in, cliffords, noise, **kwargs)


# ---------------------------------------------------------------------------
# hardware-efficient ansatz combinatorics


def sm_recurrence(n: int) -> int:
    """Strings of length ``n`` over {I, X, Z} with no two adjacent X."""
    if n <= 0:
        raise DomainError(f"n must be positive, got {n}")
    a_prev, a = 3, 8
    if n == 1:
        return a_prev
    for _ in range(n - 2):
        a_prev, a = a, 2 * a + 2 * a_prev
    return a


def hea_min_multiplicity(n: int, axis: str) -> int:
    """Number of final eigenvectors attaining the minimum index for the CZ-chain ansatz."""
    if n < 2:
        raise DomainError(f"n must be at least 2, got {n}")
    if axis == "y":
        return 3**n - sm_recurrence(n)
    if axis == "x":
        return sm_recurrence(n)
    raise ValueError(f"axis must be 'x' or 'y', got {axis!r}")


# ---------------------------------------------------------------------------
# analog bound


def analog_bound(
    g: Callable[[np.ndarray], np.ndarray] | Sequence[Callable],
    p: Callable[[np.ndarray], np.ndarray] | Sequence[Callable],
    T: float,
    dt: float,
    sign: float = 1.0,
) -> float:
    """Composite-Simpson value of ``int_0^T max_i(g_i(t) * sign * p_i(t)) dt``.

    ``g`` and ``p`` are either sequences of scalar functions of time or single
    callables mapping a time grid of shape ``(m,)`` to arrays of shape ``(k, m)``.
    The grid uses an even number of intervals no wider than ``dt``.
    """
    if T <= 0:
        raise DomainError(f"T must be positive, got {T}")
    if dt <= 0 or dt > T:
        raise DomainError(f"need 0 < dt <= T, got dt={dt}")
    intervals = 2 * math.ceil(T / (2 * dt))
    t = np.linspace(0.0, T, intervals + 1)
    gv = _sample(g, t)
    pv = _sample(p, t)
    if gv.shape != pv.shape:
        raise DimensionError(f"g and p disagree in shape: {gv.shape} vs {pv.shape}")
    integrand = np.max(gv * (sign * pv), axis=0)
    return float(scipy.integrate.simpson(integrand, x=t))


def _sample(f, t: np.ndarray) -> np.ndarray:
    if callable(f):
        out = np.asarray(f(t), dtype=float)
    else:
        out = np.array([np.broadcast_to(np.asarray(fi(t), dtype=float), t.shape) for fi in f])
    if out.ndim == 1:
        out = out[None, :]
    return out
