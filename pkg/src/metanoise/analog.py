"""Time-dependent Lindblad integration and analog experiments.

The generator is ``d rho/dt = -i[H(t), rho] + sum_a gamma_a sum_i (s_i rho s_i - rho)``
with ``s_i`` the Pauli ``sigma^a`` on qubit ``i``, so transverse Bloch
components decay at ``2 gamma_a``. ``H(t) = A(s(t)) H0 + B(s(t)) Hf`` with a
piecewise-linear control ``s(t)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import reduce
from typing import Callable, Sequence

import numpy as np

from .errors import DimensionError, DomainError, StepSizeError
from .pauli import PAULI_MATRICES, PauliString, _qubits_of, pauli_coefficients, pauli_codes

__all__ = [
    "Schedule",
    "AnalogProblem",
    "Trajectory",
    "integrate",
    "fidelity",
    "single_qubit_flip",
    "flip_closed_form",
    "w_state",
    "asp_problem",
    "asp_w_state",
    "anneal_problem",
    "anneal",
    "relative_error",
    "commuting_weight_fraction",
]

TRACE_ASSERT_TOL = 1e-8
TRACE_FAIL_TOL = 1e-6
DEFAULT_STEPS = 10_000
MAX_SAMPLES = 1001
_AXES = {"x": 1, "y": 2, "z": 3}


def _site(op: np.ndarray, i: int, n: int) -> np.ndarray:
    return reduce(np.kron, [op if k == i else PAULI_MATRICES[0] for k in range(n)])


@dataclass(frozen=True)
class Schedule:
    """Piecewise-linear ``s(t)`` from ``(t, s)`` knots plus interpolation functions."""

    T: float
    knots: tuple[tuple[float, float], ...]
    A: Callable[[float], float] = field(default=lambda s: 1.0 - s, compare=False)
    B: Callable[[float], float] = field(default=lambda s: s, compare=False)

    def __post_init__(self):
        if not self.T > 0:
            raise DomainError(f"T must be positive, got {self.T}")
        knots = tuple((float(t), float(s)) for t, s in self.knots)
        if len(knots) < 2:
            raise ValueError("a schedule needs at least two knots")
        ts = [t for t, _ in knots]
        if any(b < a for a, b in zip(ts, ts[1:])):
            raise ValueError("schedule knots must be time-sorted")
        if ts[0] != 0.0 or abs(ts[-1] - self.T) > 1e-12 * self.T:
            raise ValueError("knots must span [0, T]")
        if any(not 0.0 <= s <= 1.0 for _, s in knots):
            raise DomainError("schedule values must lie in [0, 1]")
        object.__setattr__(self, "knots", knots)

    def s(self, t: float) -> float:
        ts, ss = zip(*self.knots)
        return float(np.interp(t, ts, ss))

    def coefficients(self, t: float) -> tuple[float, float]:
        s = self.s(t)
        return self.A(s), self.B(s)

    @classmethod
    def linear(cls, T: float) -> "Schedule":
        return cls(T, ((0.0, 0.0), (T, 1.0)))

    @classmethod
    def constant(cls, T: float, s: float = 0.0) -> "Schedule":
        return cls(T, ((0.0, s), (T, s)))

    @classmethod
    def forward(cls, T: float, hold: float = 0.02, ramp: float = 0.1) -> "Schedule":
        """Quick rise to ``hold``, long hold, final ramp to 1."""
        return cls(T, ((0.0, 0.0), (ramp * T, hold), ((1 - ramp) * T, hold), (T, 1.0)))

    @classmethod
    def reverse(cls, T: float, dip: float = 0.98, ramp: float = 0.1) -> "Schedule":
        """Start at 1, ramp down to ``dip``, hold, return to 1."""
        return cls(T, ((0.0, 1.0), (ramp * T, dip), ((1 - ramp) * T, dip), (T, 1.0)))


@dataclass(frozen=True, eq=False)
class AnalogProblem:
    """Hamiltonians, initial pure state and Pauli dissipation rates ``(gx, gy, gz)``.

    ``scope`` lists the qubits that carry jump operators (default: all).
    """

    H0: np.ndarray
    Hf: np.ndarray
    psi0: np.ndarray
    gammas: tuple[float, float, float] = (0.0, 0.0, 0.0)
    scope: tuple[int, ...] | None = None

    def __post_init__(self):
        H0 = np.asarray(self.H0, dtype=complex)
        Hf = np.asarray(self.Hf, dtype=complex)
        psi = np.asarray(self.psi0, dtype=complex).reshape(-1)
        n = _qubits_of(psi.shape[0])
        for name, h in (("H0", H0), ("Hf", Hf)):
            if h.shape != (2**n, 2**n):
                raise DimensionError(f"{name} has shape {h.shape}, expected {(2**n, 2**n)}")
            if not np.allclose(h, h.conj().T, atol=1e-12):
                raise DomainError(f"{name} is not Hermitian")
        if abs(np.linalg.norm(psi) - 1) > 1e-9:
            raise DomainError("psi0 must be normalized")
        gammas = tuple(float(g) for g in self.gammas)
        if len(gammas) != 3 or any(g < 0 for g in gammas):
            raise DomainError(f"gammas must be three nonnegative rates, got {self.gammas}")
        scope = tuple(range(n)) if self.scope is None else tuple(self.scope)
        if any(not 0 <= q < n for q in scope):
            raise DimensionError(f"scope {scope} out of range for n={n}")
        object.__setattr__(self, "H0", H0)
        object.__setattr__(self, "Hf", Hf)
        object.__setattr__(self, "psi0", psi)
        object.__setattr__(self, "gammas", gammas)
        object.__setattr__(self, "scope", scope)

    @property
    def n(self) -> int:
        return _qubits_of(self.psi0.shape[0])

    @property
    def rho0(self) -> np.ndarray:
        return np.outer(self.psi0, self.psi0.conj())

    def noiseless(self) -> "AnalogProblem":
        return AnalogProblem(self.H0, self.Hf, self.psi0, (0.0, 0.0, 0.0), self.scope)


def _dissipator(problem: AnalogProblem) -> Callable[[np.ndarray], np.ndarray]:
    """Return ``rho -> sum gamma (L rho L - rho)``; diagonal jumps collapse into one mask."""
    n = problem.n
    d = 2**n
    mask = np.zeros((d, d))
    dense: list[tuple[float, np.ndarray]] = []
    total = 0.0
    for a, g in zip("xyz", problem.gammas):
        if g == 0:
            continue
        for q in problem.scope:
            total += g
            if a == "z":
                diag = np.real(np.diag(_site(PAULI_MATRICES[3], q, n)))
                mask += g * np.outer(diag, diag)
            else:
                dense.append((g, _site(PAULI_MATRICES[_AXES[a]], q, n)))
    if total == 0:
        return lambda rho: np.zeros_like(rho)

    def apply(rho):
        out = mask * rho - total * rho
        for g, L in dense:
            out += g * (L @ rho @ L)
        return out

    return apply


@dataclass(frozen=True, eq=False)
class Trajectory:
    times: np.ndarray
    states: np.ndarray

    def fidelity(self, target: np.ndarray) -> np.ndarray:
        psi = np.asarray(target, dtype=complex).reshape(-1)
        return np.real(np.einsum("i,tij,j->t", psi.conj(), self.states, psi))

    def energy(self, H: np.ndarray) -> np.ndarray:
        return np.real(np.einsum("ij,tji->t", np.asarray(H), self.states))

    @property
    def trace_error(self) -> np.ndarray:
        return np.abs(np.trace(self.states, axis1=1, axis2=2) - 1.0)

    @property
    def hermiticity_error(self) -> np.ndarray:
        return np.max(np.abs(self.states - np.conj(np.swapaxes(self.states, 1, 2))), axis=(1, 2))

    @property
    def final(self) -> np.ndarray:
        return self.states[-1]

    def commuting_fraction(self, axis: str = "z") -> np.ndarray:
        return np.array([commuting_weight_fraction(r, axis) for r in self.states])


def integrate(
    problem: AnalogProblem,
    schedule: Schedule,
    dt: float | None = None,
    samples: int | None = None,
) -> Trajectory:
    """Fixed-step RK4 on the density matrix.

    The trace is never renormalized. Drift above ``1e-6``, a matrix entry
    above ``1 + 1e-6`` or a non-finite state raises :class:`StepSizeError`. ``samples`` caps how many evenly
    spaced states are stored (the first and last are always kept).
    """
    T = schedule.T
    if dt is None:
        dt = T / DEFAULT_STEPS
    if not dt > 0:
        raise DomainError(f"dt must be positive, got {dt}")
    if dt > T / 100 * (1 + 1e-12):
        raise DomainError(f"dt must not exceed T/100 = {T / 100}")
    steps = int(math.ceil(T / dt - 1e-9))
    h = T / steps
    samples = min(samples or MAX_SAMPLES, steps + 1)
    keep = np.unique(np.round(np.linspace(0, steps, samples)).astype(int))

    H0, Hf = problem.H0, problem.Hf
    diss = _dissipator(problem)

    def rhs(t, rho):
        a, b = schedule.coefficients(t)
        H = a * H0 + b * Hf
        return -1j * (H @ rho - rho @ H) + diss(rho)

    rho = problem.rho0
    times = [0.0]
    states = [rho.copy()]
    k = 1
    for step in range(1, steps + 1):
        t = (step - 1) * h
        k1 = rhs(t, rho)
        k2 = rhs(t + h / 2, rho + (h / 2) * k1)
        k3 = rhs(t + h / 2, rho + (h / 2) * k2)
        k4 = rhs(t + h, rho + h * k3)
        rho = rho + (h / 6) * (k1 + 2 * k2 + 2 * k3 + k4)
        drift = abs(np.trace(rho) - 1.0)
        # traceless dissipators can blow up coherences while the trace stays put
        growth = np.abs(rho).max() - 1.0
        if not drift <= TRACE_FAIL_TOL or not growth <= TRACE_FAIL_TOL:
            raise StepSizeError(
                f"unstable step at t={step * h:.4g} (trace drift {drift:.3g}); reduce dt"
            )
        if k < len(keep) and step == keep[k]:
            times.append(step * h)
            states.append(rho.copy())
            k += 1
    return Trajectory(np.array(times), np.array(states))


def fidelity(rho: np.ndarray, target: np.ndarray) -> float:
    """``<psi|rho|psi>`` for a normalized pure target."""
    psi = np.asarray(target, dtype=complex).reshape(-1)
    if abs(np.linalg.norm(psi) - 1) > 1e-9:
        raise DomainError("target state must be normalized")
    return float(np.real(psi.conj() @ np.asarray(rho) @ psi))


def commuting_weight_fraction(rho: np.ndarray, axis: str = "z") -> float:
    """Share of non-identity Pauli weight ``sum c_P^2`` on strings built from I and ``sigma^axis``."""
    c = np.asarray(pauli_coefficients(rho))
    n = _qubits_of(np.asarray(rho).shape[0])
    codes = pauli_codes(n)
    inside = np.all((codes == 0) | (codes == _AXES[axis]), axis=1)
    w = np.abs(c) ** 2
    w[0] = 0.0
    total = w.sum()
    return float(w[inside].sum() / total) if total > 0 else 1.0


# ---------------------------------------------------------------------------
# single-qubit flip


def flip_closed_form(axis: str, gamma_x: float, eps: float, T: float = math.pi) -> np.ndarray:
    """Normalized closed-form final states quoted for the anisotropic flip."""
    if axis == "x":
        decay = math.exp(-(gamma_x + eps) * T)
    elif axis == "y":
        decay = math.exp(-2 * eps * T)
    else:
        raise ValueError(f"axis must be 'x' or 'y', got {axis!r}")
    return 0.5 * (PAULI_MATRICES[0] - decay * PAULI_MATRICES[3])


def single_qubit_flip(
    axis: str, gamma_x: float, eps: float, T: float = math.pi, dt: float | None = None
) -> tuple[np.ndarray, np.ndarray]:
    """Integrate ``H = sigma^a / 2`` for time ``pi`` under ``gamma_x D_x + eps (D_y + D_z)``.

    Returns ``(integrated, closed_form)``.
    """
    if axis not in ("x", "y"):
        raise ValueError(f"axis must be 'x' or 'y', got {axis!r}")
    if gamma_x < 0 or eps < 0:
        raise DomainError("rates must be nonnegative")
    H = PAULI_MATRICES[_AXES[axis]] * (math.pi / (2 * T))
    problem = AnalogProblem(H, np.zeros((2, 2)), np.array([1, 0]), (gamma_x, eps, eps))
    traj = integrate(problem, Schedule.constant(T), dt=dt, samples=2)
    return traj.final, flip_closed_form(axis, gamma_x, eps, T)


# ---------------------------------------------------------------------------
# adiabatic W-state preparation


def _basis_e(n: int) -> list[np.ndarray]:
    out = []
    for i in range(n):
        v = np.zeros(2**n, dtype=complex)
        v[1 << (n - 1 - i)] = 1.0
        out.append(v)
    return out


def w_state(n: int) -> np.ndarray:
    if n < 2:
        raise DomainError(f"n must be at least 2, got {n}")
    return sum(_basis_e(n)) / math.sqrt(n)


def asp_problem(n: int, init: str, gamma: float = 0.0) -> AnalogProblem:
    """W-state preparation from the ``z`` or ``x`` initialization, ``sigma^z`` noise on every qubit."""
    if n < 2:
        raise DomainError(f"n must be at least 2, got {n}")
    if init not in ("z", "x"):
        raise ValueError(f"init must be 'z' or 'x', got {init!r}")
    e = _basis_e(n)
    E = np.array(e)
    Hf = -(np.outer(E.sum(0), E.sum(0)) - E.T @ E)
    P = PAULI_MATRICES[_AXES[init]]
    H0 = _site(P, 0, n) - sum(_site(P, i, n) for i in range(1, n))
    psi = e[0]
    if init == "x":
        ry = np.cos(math.pi / 4) * PAULI_MATRICES[0] - 1j * np.sin(math.pi / 4) * PAULI_MATRICES[2]
        psi = reduce(np.kron, [ry] * n) @ psi
    return AnalogProblem(H0, Hf, psi, (0.0, 0.0, gamma))


def asp_w_state(
    n: int,
    init: str,
    T: float = 100.0,
    dt: float | None = None,
    gamma: float | None = None,
    noisy: bool = True,
    samples: int | None = None,
) -> Trajectory:
    """Linear-schedule W-state preparation; ``gamma`` defaults to ``sqrt(1/T)`` when noisy."""
    if gamma is None:
        gamma = math.sqrt(1.0 / T) if noisy else 0.0
    return integrate(asp_problem(n, init, gamma), Schedule.linear(T), dt=dt, samples=samples)


# ---------------------------------------------------------------------------
# two-qubit annealing


def anneal_problem(reverse: bool = False, gammas=(0.0, 0.0, 0.0)) -> AnalogProblem:
    """``Hf = -0.1(Z1 + Z2) - Z1 Z2`` with the ``-(X1 + X2)`` driver.

    Forward starts in ``|++>``; reverse starts in the ground state ``|00>`` of ``Hf``.
    """
    z1, z2 = (PauliString.from_label(s).to_matrix() for s in ("ZI", "IZ"))
    x1, x2 = (PauliString.from_label(s).to_matrix() for s in ("XI", "IX"))
    Hf = -0.1 * (z1 + z2) - z1 @ z2
    H0 = -(x1 + x2)
    psi = np.array([1, 0, 0, 0]) if reverse else np.full(4, 0.5)
    return AnalogProblem(H0, Hf, psi, tuple(gammas))


def anneal(
    schedule: Schedule,
    gammas: Sequence[float] | None = None,
    dt: float | None = None,
    samples: int | None = None,
) -> tuple[float, Trajectory]:
    """Final energy ``Tr(Hf rho(T))`` and trajectory; reverse mode when ``s(0) = 1``."""
    reverse = schedule.s(0.0) == 1.0
    problem = anneal_problem(reverse, gammas or (0.0, 0.0, 0.0))
    traj = integrate(problem, schedule, dt=dt, samples=samples)
    return float(np.real(np.trace(problem.Hf @ traj.final))), traj


def relative_error(E_exp: float, E_bar: float) -> float:
    """``100 (E_exp - E_bar) / E_bar`` in percent."""
    if E_bar == 0:
        raise DomainError("reference energy must be nonzero")
    return 100.0 * (E_exp - E_bar) / E_bar
