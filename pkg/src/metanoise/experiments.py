"""Monte-Carlo sweep over random hardware-efficient ansatz parameters.

For each sample one ``L_max``-layer parameter draw is propagated once, and the
cost after layer ``L`` is read off for every requested depth, so depths share
their parameter prefix. The parameter-shift difference for ``theta[0][0]`` is
linear in the state after the first rotation, so it is propagated as one
extra coefficient vector instead of two shifted runs.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .circuit import CZ, Observable, _ROTATED_PAIR, _merged_clifford, apply_rotation
from .errors import DimensionError, DomainError, ResourceLimitError
from .liouvillian import PauliChannel
from .pauli import PAULI_MATRICES, PauliVector

__all__ = ["NibpRow", "nibp_samples", "nibp_sweep", "NIBP_QUBIT_LIMIT"]

NIBP_QUBIT_LIMIT = 10
_AXES = {"x": 1, "y": 2}


@dataclass(frozen=True)
class NibpRow:
    axis: str
    layers: int
    mean_grad: float
    sem_grad: float
    mean_distance: float
    sem_distance: float
    mean_ideal_distance: float
    sem_ideal_distance: float

    FIELDS = (
        "axis", "layers", "mean_grad", "sem_grad", "mean_distance",
        "sem_distance", "mean_ideal_distance", "sem_ideal_distance",
    )

    def values(self) -> tuple:
        return tuple(getattr(self, f) for f in self.FIELDS)


def _draw(seed: int, axis: str, batch: int, size: int, depth: int, n: int) -> np.ndarray:
    ss = np.random.SeedSequence([seed, _AXES[axis], batch])
    return np.random.default_rng(ss).uniform(0.0, 2 * math.pi, (size, depth, n))


def _statevector_costs(thetas: np.ndarray, axis: str, zz: np.ndarray) -> np.ndarray:
    """Noiseless ``<O>`` after each layer for a batch, ``O`` diagonal with entries ``zz``."""
    size, depth, n = thetas.shape
    d = 2**n
    bits = (np.arange(d)[:, None] >> (n - 1 - np.arange(n))) & 1
    cz_phase = (-1.0) ** np.sum(bits[:, :-1] & bits[:, 1:], axis=1)
    psi = np.zeros((size, d), dtype=complex)
    psi[:, 0] = 1.0
    out = np.empty((size, depth))
    sig = PAULI_MATRICES[_AXES[axis]]
    for k in range(depth):
        for j in range(n):
            half = thetas[:, k, j] / 2
            u = (np.cos(half)[:, None, None] * PAULI_MATRICES[0]
                 - 1j * np.sin(half)[:, None, None] * sig)
            w = psi.reshape(size, 2**j, 2, 2 ** (n - j - 1))
            psi = np.einsum("bac,bxcr->bxar", u, w).reshape(size, d)
        psi *= cz_phase
        out[:, k] = np.abs(psi) ** 2 @ zz
    return out


def nibp_samples(
    n: int,
    axis: str,
    thetas: np.ndarray,
    noise: PauliChannel,
    obs: Observable,
    with_ideal: bool = True,
) -> tuple[np.ndarray, np.ndarray, np.ndarray | None]:
    """Per-sample gradient, noisy cost distance and ideal cost distance after every layer.

    ``thetas`` has shape ``(batch, depth, n)``. Returns three ``(batch, depth)``
    arrays; the last is ``None`` when ``with_ideal`` is false.
    """
    if axis not in _AXES:
        raise ValueError(f"axis must be 'x' or 'y', got {axis!r}")
    size, depth, nq = thetas.shape
    if nq != n:
        raise DimensionError(f"thetas carry {nq} angles per layer, expected {n}")
    if n > NIBP_QUBIT_LIMIT:
        raise ResourceLimitError(f"NIBP sweep limited to {NIBP_QUBIT_LIMIT} qubits")
    src, sign = _merged_clifford(tuple(CZ(i, i + 1) for i in range(n - 1)), n)
    factor = sign * noise.eigenvalues()
    ovec = obs.vector()
    live = np.flatnonzero(ovec)
    ow = ovec[live]
    mixed = obs.mixed_value

    # rows [0, size) carry the state, rows [size, 2 size) the shift difference
    v = np.zeros((2 * size, 4**n))
    v[:] = PauliVector.zero_state(n).coeffs
    b, c = _ROTATED_PAIR[axis]
    w = v.reshape(2 * size, 1, 4, 4 ** (n - 1))
    t0 = thetas[:, 0, 0]
    cb, cc = w[size:, :, b, :].copy(), w[size:, :, c, :].copy()
    # [R(t + pi/2) - R(t - pi/2)] / 2 on the (b, c) pair of qubit 0
    cos, sin = np.cos(t0)[:, None, None], np.sin(t0)[:, None, None]
    w[size:, :, 0, :] = 0.0
    w[size:, :, 1:, :] = 0.0
    w[size:, :, b, :] = -sin * cb - cos * cc
    w[size:, :, c, :] = cos * cb - sin * cc
    apply_rotation(v[:size], n, 0, axis, t0)
    both = np.concatenate([thetas, thetas])
    for j in range(1, n):
        apply_rotation(v, n, j, axis, both[:, 0, j])

    grads = np.empty((size, depth))
    dists = np.empty((size, depth))
    buf = np.empty_like(v)
    for k in range(depth):
        if k:
            for j in range(n):
                apply_rotation(v, n, j, axis, both[:, k, j])
        np.take(v, src, axis=1, out=buf)
        np.multiply(buf, factor, out=v)
        vals = v[:, live] @ ow
        dists[:, k] = np.abs(vals[:size] - mixed)
        grads[:, k] = vals[size:]
    ideal = None
    if with_ideal:
        zz = np.real(np.diag(obs.to_matrix()))
        ideal = np.abs(_statevector_costs(thetas, axis, zz) - mixed)
    return grads, dists, ideal


def _sem(x: np.ndarray) -> float:
    return float(np.std(x, ddof=1) / math.sqrt(len(x))) if len(x) > 1 else float("nan")


def nibp_sweep(
    n: int,
    layers: Sequence[int],
    axes: Sequence[str],
    q: tuple[float, float, float],
    samples: int,
    seed: int,
    batch: int = 50,
    threads: int = 1,
    obs: Observable | None = None,
) -> list[NibpRow]:
    """Mean ``|dC/dtheta_{1,1}|`` and cost distances versus depth for each axis.

    Batches draw parameters from independent seed streams keyed by
    ``(seed, axis, batch index)``, so results do not depend on ``threads``.
    """
    layers = sorted(set(int(L) for L in layers))
    if not layers or layers[0] < 1:
        raise DomainError("layer counts must be positive")
    if samples < 2:
        raise DomainError("need at least two samples")
    if n < 2:
        raise DomainError("need at least two qubits")
    if n > NIBP_QUBIT_LIMIT:
        raise ResourceLimitError(f"NIBP sweep limited to {NIBP_QUBIT_LIMIT} qubits")
    obs = obs or Observable.zz(n)
    noise = PauliChannel.local(n, *q)
    depth = layers[-1]
    idx = np.array(layers) - 1
    sizes = [min(batch, samples - s) for s in range(0, samples, batch)]

    rows = []
    for axis in axes:
        def job(i):
            th = _draw(seed, axis, i, sizes[i], depth, n)
            g, d, ideal = nibp_samples(n, axis, th, noise, obs)
            return np.abs(g[:, idx]), d[:, idx], ideal[:, idx]

        if threads > 1:
            with ThreadPoolExecutor(threads) as pool:
                parts = list(pool.map(job, range(len(sizes))))
        else:
            parts = [job(i) for i in range(len(sizes))]
        g, d, ideal = (np.concatenate(p) for p in zip(*parts))
        for col, L in enumerate(layers):
            rows.append(NibpRow(
                axis, L,
                float(g[:, col].mean()), _sem(g[:, col]),
                float(d[:, col].mean()), _sem(d[:, col]),
                float(ideal[:, col].mean()), _sem(ideal[:, col]),
            ))
    return rows
