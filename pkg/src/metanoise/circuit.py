"""Layered noisy circuits, the hardware-efficient ansatz, costs and gradients.

Two state representations are supported by :func:`run_ideal` and
:func:`run_noisy`:

* :class:`~metanoise.pauli.PauliVector` (the default engine): rotations mix
  two Pauli coefficients per qubit, Clifford gates permute coefficients with
  signs and Pauli channels rescale them.
* dense ``2^n x 2^n`` arrays, intended for cross-checks on small ``n``.

Rotations are ``R^a(theta) = exp(-i theta sigma^a / 2)``. Layer and parameter
indices are 0-based: ``theta[0][0]`` is the first angle of the first layer.
"""
from __future__ import annotations

import functools
from dataclasses import dataclass, replace
from typing import Mapping, Sequence, Union

import numpy as np

from .errors import DimensionError, DomainError, ShapeError
from .liouvillian import PauliChannel, apply_channel
from .pauli import (
    PAULI_MATRICES,
    CliffordTableau,
    PauliString,
    PauliVector,
    _qubits_of,
    clifford_index_map,
    from_pauli_coefficients,
    pauli_coefficients,
)

__all__ = [
    "Rotation",
    "CZ",
    "CliffordGate",
    "Layer",
    "Circuit",
    "Observable",
    "build_hea",
    "run_ideal",
    "run_noisy",
    "cost",
    "gradient",
    "mixed_distance",
    "apply_rotation",
    "clifford_gather",
]

DENSE_QUBIT_LIMIT = 10
_AXES = {"x": 1, "y": 2, "z": 3}
# for axis a, the pair (b, c) with R^a: sigma^b -> cos sigma^b + sin sigma^c
_ROTATED_PAIR = {"x": (2, 3), "y": (3, 1), "z": (1, 2)}


@dataclass(frozen=True)
class Rotation:
    axis: str
    qubit: int
    angle: float

    def __post_init__(self):
        if self.axis not in _AXES:
            raise ValueError(f"rotation axis must be x, y or z, got {self.axis!r}")
        if not np.isfinite(self.angle):
            raise DomainError(f"non-finite rotation angle {self.angle}")

    def matrix(self) -> np.ndarray:
        c, s = np.cos(self.angle / 2), np.sin(self.angle / 2)
        return c * PAULI_MATRICES[0] - 1j * s * PAULI_MATRICES[_AXES[self.axis]]


@dataclass(frozen=True)
class CZ:
    i: int
    j: int

    def tableau(self, n: int) -> CliffordTableau:
        return CliffordTableau.cz(self.i, self.j, n)


@dataclass(frozen=True)
class CliffordGate:
    tableau: CliffordTableau


Gate = Union[Rotation, CZ, CliffordGate]


@dataclass(frozen=True)
class Layer:
    """Unitary gates (applied in order) followed by a noise channel."""

    gates: tuple[Gate, ...]
    noise: PauliChannel

    @property
    def rotations(self) -> tuple[Rotation, ...]:
        return tuple(g for g in self.gates if isinstance(g, Rotation))


@dataclass(frozen=True)
class Circuit:
    n: int
    layers: tuple[Layer, ...]

    def __post_init__(self):
        layers = tuple(self.layers)
        if not layers:
            raise ValueError("a circuit needs at least one layer")
        for k, layer in enumerate(layers):
            if layer.noise.n != self.n:
                raise DimensionError(f"layer {k} noise acts on {layer.noise.n} qubits, not {self.n}")
            for g in layer.gates:
                _check_gate(g, self.n)
        object.__setattr__(self, "layers", layers)

    @property
    def depth(self) -> int:
        return len(self.layers)

    def angles(self) -> list[list[float]]:
        return [[g.angle for g in layer.rotations] for layer in self.layers]

    def shifted(self, k: int, l: int, delta: float) -> "Circuit":
        """Copy with the ``l``-th rotation of layer ``k`` shifted by ``delta``."""
        if not 0 <= k < len(self.layers):
            raise IndexError(f"layer {k} out of range")
        layer = self.layers[k]
        positions = [i for i, g in enumerate(layer.gates) if isinstance(g, Rotation)]
        if not 0 <= l < len(positions):
            raise IndexError(f"rotation {l} out of range in layer {k}")
        gates = list(layer.gates)
        pos = positions[l]
        gates[pos] = replace(gates[pos], angle=gates[pos].angle + delta)
        layers = list(self.layers)
        layers[k] = replace(layer, gates=tuple(gates))
        return replace(self, layers=tuple(layers))

    def without_noise(self) -> "Circuit":
        quiet = PauliChannel.noiseless(self.n)
        return replace(self, layers=tuple(replace(l, noise=quiet) for l in self.layers))


def _check_gate(g: Gate, n: int) -> None:
    if isinstance(g, Rotation):
        qubits = (g.qubit,)
    elif isinstance(g, CZ):
        qubits = (g.i, g.j)
        if g.i == g.j:
            raise ValueError("CZ needs two distinct qubits")
    elif isinstance(g, CliffordGate):
        if g.tableau.n != n:
            raise DimensionError(f"Clifford acts on {g.tableau.n} qubits, not {n}")
        return
    else:
        raise TypeError(f"unknown gate {g!r}")
    for q in qubits:
        if not 0 <= q < n:
            raise DimensionError(f"qubit {q} out of range for n={n}")


def build_hea(
    n: int, layers: int, axis: str, thetas, noise: PauliChannel
) -> Circuit:
    """Hardware-efficient ansatz: ``R^a`` on every qubit, then the CZ chain, then noise."""
    if axis not in ("x", "y"):
        raise ValueError("only axis 'x' or 'y' gives a non-trivial ansatz from |0...0>")
    thetas = np.asarray(thetas, dtype=float)
    if thetas.shape != (layers, n):
        raise ShapeError(f"thetas must have shape ({layers}, {n}), got {thetas.shape}")
    if noise.n != n:
        raise DimensionError(f"noise acts on {noise.n} qubits, not {n}")
    chain = tuple(CZ(i, i + 1) for i in range(n - 1))
    out = []
    for k in range(layers):
        rots = tuple(Rotation(axis, i, float(thetas[k, i])) for i in range(n))
        out.append(Layer(rots + chain, noise))
    return Circuit(n, tuple(out))


@dataclass(frozen=True, eq=False)
class Observable:
    """Hermitian ``O = sum_P w_P P`` with real weights."""

    n: int
    terms: Mapping[PauliString, float]

    def __post_init__(self):
        terms = {}
        for p, w in dict(self.terms).items():
            p = PauliString.from_label(p) if isinstance(p, str) else p
            if p.n != self.n:
                raise DimensionError(f"{p} does not act on {self.n} qubits")
            if np.iscomplexobj(w) and abs(np.imag(w)) > 0:
                raise DomainError("observable weights must be real")
            sign = {0: 1.0, 2: -1.0}.get(p.phase)
            if sign is None:
                raise DomainError(f"{p} is not Hermitian")
            key = p.canonical()
            terms[key] = terms.get(key, 0.0) + sign * float(np.real(w))
        object.__setattr__(self, "terms", terms)

    @classmethod
    def zz(cls, n: int, i: int = 0, j: int = 1) -> "Observable":
        letters = ["I"] * n
        letters[i] = letters[j] = "Z"
        return cls(n, {"".join(letters): 1.0})

    def vector(self) -> np.ndarray:
        out = np.zeros(4**self.n)
        for p, w in self.terms.items():
            out[p.index] += w
        return out

    def to_matrix(self) -> np.ndarray:
        d = 2**self.n
        out = np.zeros((d, d), dtype=complex)
        for p, w in self.terms.items():
            out += w * p.to_matrix()
        return out

    @property
    def mixed_value(self) -> float:
        """``Tr(O) / 2^n``, the cost on the maximally mixed state."""
        return float(self.terms.get(PauliString.identity(self.n), 0.0))


# ---------------------------------------------------------------------------
# Pauli-coefficient engine


def apply_rotation(coeffs: np.ndarray, n: int, qubit: int, axis: str, angle) -> None:
    """In-place rotation of a ``(..., 4^n)`` coefficient array.

    ``angle`` may be a scalar or hold one angle per leading batch row.
    """
    b, c = _ROTATED_PAIR[axis]
    lead = coeffs.shape[:-1]
    w = coeffs.reshape(lead + (4**qubit, 4, 4 ** (n - qubit - 1)))
    angle = np.asarray(angle, dtype=float)
    cos = np.cos(angle).reshape(angle.shape + (1, 1))
    sin = np.sin(angle).reshape(angle.shape + (1, 1))
    vb = w[..., b, :]
    vc = w[..., c, :]
    old_b = vb.copy()
    vb *= cos
    vb -= sin * vc
    vc *= cos
    vc += sin * old_b


@functools.lru_cache(maxsize=64)
def _gather_for(tableau: CliffordTableau) -> tuple[np.ndarray, np.ndarray]:
    target, sign = clifford_index_map(tableau)
    src = np.empty_like(target)
    src[target] = np.arange(len(target))
    return src, sign[src]


def clifford_gather(tableau: CliffordTableau) -> tuple[np.ndarray, np.ndarray]:
    """``(src, sign)`` such that the conjugated coefficients are ``sign * c[..., src]``."""
    return _gather_for(tableau)


def _clifford_run_tableau(gates: Sequence[Gate], n: int) -> CliffordTableau:
    tab = CliffordTableau.identity(n)
    for g in gates:
        tab = tab.then(g.tableau(n) if isinstance(g, CZ) else g.tableau)
    return tab


@functools.lru_cache(maxsize=256)
def _merged_clifford(gates: tuple, n: int) -> tuple[np.ndarray, np.ndarray]:
    return _gather_for(_clifford_run_tableau(gates, n))


def _layer_segments(layer: Layer):
    """Split gates into rotations and maximal runs of Clifford gates."""
    run: list[Gate] = []
    for g in layer.gates:
        if isinstance(g, Rotation):
            if run:
                yield tuple(run)
                run = []
            yield g
        else:
            run.append(g)
    if run:
        yield tuple(run)


def apply_unitary_layer(coeffs: np.ndarray, n: int, layer: Layer) -> np.ndarray:
    """Apply the unitary part of ``layer`` to a ``(..., 4^n)`` array; may return a new array."""
    for seg in _layer_segments(layer):
        if isinstance(seg, Rotation):
            apply_rotation(coeffs, n, seg.qubit, seg.axis, seg.angle)
        else:
            src, sign = _merged_clifford(seg, n)
            coeffs = coeffs[..., src] * sign
    return coeffs


def _gate_unitary(g: Gate, n: int) -> np.ndarray:
    if isinstance(g, Rotation):
        mats = [np.eye(2)] * n
        mats = list(mats)
        mats[g.qubit] = g.matrix()
        return functools.reduce(np.kron, mats)
    if isinstance(g, CZ):
        d = 2**n
        idx = np.arange(d)
        bi = (idx >> (n - 1 - g.i)) & 1
        bj = (idx >> (n - 1 - g.j)) & 1
        return np.diag(np.where(bi & bj, -1.0, 1.0)).astype(complex)
    raise TypeError("tableau-only Clifford gates have no stored unitary")


def layer_unitary(layer: Layer, n: int) -> np.ndarray:
    """Dense unitary of a layer built from rotations and CZ gates."""
    u = np.eye(2**n, dtype=complex)
    for g in layer.gates:
        u = _gate_unitary(g, n) @ u
    return u


def _apply_dense_layer(rho: np.ndarray, n: int, layer: Layer) -> np.ndarray:
    for g in layer.gates:
        if isinstance(g, CliffordGate):
            # tableau-only gates act through the Pauli coefficients
            src, sign = clifford_gather(g.tableau)
            rho = from_pauli_coefficients(sign * pauli_coefficients(rho)[src])
        else:
            u = _gate_unitary(g, n)
            rho = u @ rho @ u.conj().T
    return rho


def _run(c: Circuit, rho_in, noisy: bool):
    if isinstance(rho_in, PauliVector):
        if rho_in.n != c.n:
            raise DimensionError(f"state has {rho_in.n} qubits, circuit {c.n}")
        coeffs = rho_in.coeffs.copy()
        for layer in c.layers:
            coeffs = apply_unitary_layer(coeffs, c.n, layer)
            if noisy:
                coeffs = coeffs * layer.noise.eigenvalues()
        return PauliVector(c.n, coeffs)
    rho = np.asarray(rho_in, dtype=complex)
    if _qubits_of(rho.shape[0]) != c.n:
        raise DimensionError(f"state has {_qubits_of(rho.shape[0])} qubits, circuit {c.n}")
    if c.n > DENSE_QUBIT_LIMIT:
        raise DimensionError(f"dense simulation limited to {DENSE_QUBIT_LIMIT} qubits")
    for layer in c.layers:
        rho = _apply_dense_layer(rho, c.n, layer)
        if noisy:
            rho = apply_channel(layer.noise, rho)
    return rho


def run_ideal(c: Circuit, rho_in):
    """Apply only the unitary parts of every layer."""
    return _run(c, rho_in, noisy=False)


def run_noisy(c: Circuit, rho_in):
    """Alternate each layer's unitary with its noise channel."""
    return _run(c, rho_in, noisy=True)


def cost(rho, obs: Observable) -> float:
    """``Tr(O rho)``."""
    if isinstance(rho, PauliVector):
        if rho.n != obs.n:
            raise DimensionError(f"state has {rho.n} qubits, observable {obs.n}")
        return float(obs.vector() @ rho.coeffs)
    rho = np.asarray(rho)
    value = np.trace(obs.to_matrix() @ rho)
    if abs(value.imag) > 1e-10:
        raise DomainError(f"Tr(O rho) has imaginary part {value.imag:.3g}")
    return float(value.real)


def gradient(c: Circuit, rho_in, obs: Observable, k: int, l: int) -> float:
    """``dC/dtheta_{k,l}`` by the two-point parameter-shift rule."""
    plus = cost(run_noisy(c.shifted(k, l, np.pi / 2), rho_in), obs)
    minus = cost(run_noisy(c.shifted(k, l, -np.pi / 2), rho_in), obs)
    return 0.5 * (plus - minus)


def mixed_distance(rho, obs: Observable) -> float:
    """``|Tr(O rho) - Tr(O)/2^n|``."""
    return abs(cost(rho, obs) - obs.mixed_value)
