"""Pauli strings, Clifford tableaus and Pauli-basis decompositions.

Pauli strings are stored in symplectic form: one x bit and one z bit per qubit
plus a global phase ``i**phase``. The pair ``(x, z) = (1, 1)`` denotes the
Hermitian ``Y`` (not ``XZ``), so a string with ``phase == 0`` is always a
Hermitian, tensor-product Pauli operator.

Qubit 0 is the leftmost tensor factor, i.e. the most significant bit of a
computational-basis index, and the leftmost character of a label.

Coefficient convention for decompositions: ``c_P = Tr(P rho)`` and
``rho = 2**-n * sum_P c_P P``.
"""
from __future__ import annotations

import functools
import itertools
import re
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import DimensionError, PreconditionError, ResourceLimitError, ShapeError

__all__ = [
    "PAULI_MATRICES",
    "PauliString",
    "CliffordTableau",
    "PauliDecomposition",
    "pauli_mul",
    "commutes",
    "conjugate",
    "decompose",
    "support",
    "pauli_coefficients",
    "from_pauli_coefficients",
    "pauli_codes",
    "clifford_index_map",
    "operator_from_paulis",
    "PauliVector",
]

#: Dense single-qubit Paulis in code order I, X, Y, Z.
PAULI_MATRICES = np.array(
    [
        [[1, 0], [0, 1]],
        [[0, 1], [1, 0]],
        [[0, -1j], [1j, 0]],
        [[1, 0], [0, -1]],
    ],
    dtype=complex,
)

_LETTERS = "IXYZ"
_PHASE_PREFIX = {0: "+", 1: "+i", 2: "-", 3: "-i"}
_LABEL_RE = re.compile(r"^\s*([+-]?)(i?)([IXYZ]+)\s*$")

#: Zero threshold for dropping decomposition coefficients.
ZERO_TOL = 1e-12
#: Largest qubit count accepted by dense decompositions.
DENSE_QUBIT_LIMIT = 10


def _code(x: int, z: int) -> int:
    # I=0, X=1, Y=2, Z=3
    return (x ^ z) * (1 + 2 * z) + (x & z) * 2


def _phase_exponent(x1, z1, x2, z2):
    """Exponent of ``i`` picked up by ``sigma(x1, z1) @ sigma(x2, z2)``.

    Works elementwise on integer arrays. Result lies in {-1, 0, 1}.
    """
    x1 = np.asarray(x1, dtype=np.int64)
    z1 = np.asarray(z1, dtype=np.int64)
    x2 = np.asarray(x2, dtype=np.int64)
    z2 = np.asarray(z2, dtype=np.int64)
    is_y = x1 & z1
    is_x = x1 & (1 - z1)
    is_z = (1 - x1) & z1
    return is_y * (z2 - x2) + is_x * z2 * (2 * x2 - 1) + is_z * x2 * (1 - 2 * z2)


@dataclass(frozen=True)
class PauliString:
    """An n-qubit Pauli operator ``i**phase * sigma(x_0, z_0) ⊗ ... ``.

    >>> PauliString.from_label("-XIZ")
    PauliString('-XIZ')
    """

    x: tuple[int, ...]
    z: tuple[int, ...]
    phase: int = 0

    def __post_init__(self):
        x = tuple(int(b) & 1 for b in self.x)
        z = tuple(int(b) & 1 for b in self.z)
        if len(x) != len(z):
            raise ShapeError(f"x and z bits differ in length: {len(x)} != {len(z)}")
        if len(x) == 0:
            raise ShapeError("a Pauli string needs at least one qubit")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "z", z)
        object.__setattr__(self, "phase", int(self.phase) % 4)

    # construction -------------------------------------------------------

    @classmethod
    def from_label(cls, label: str) -> "PauliString":
        """Parse labels such as ``"XZ"``, ``"+XIZY"``, ``"-iYY"``."""
        m = _LABEL_RE.match(label)
        if m is None:
            raise ValueError(f"not a Pauli label: {label!r}")
        sign, imag, letters = m.groups()
        phase = (2 if sign == "-" else 0) + (1 if imag else 0)
        x = [1 if c in "XY" else 0 for c in letters]
        z = [1 if c in "YZ" else 0 for c in letters]
        return cls(tuple(x), tuple(z), phase)

    @classmethod
    def identity(cls, n: int) -> "PauliString":
        return cls((0,) * n, (0,) * n)

    @classmethod
    def single(cls, n: int, qubit: int, letter: str) -> "PauliString":
        """``letter`` on ``qubit`` and identity elsewhere."""
        if not 0 <= qubit < n:
            raise DimensionError(f"qubit {qubit} out of range for n={n}")
        letters = ["I"] * n
        letters[qubit] = letter
        return cls.from_label("".join(letters))

    @classmethod
    def from_codes(cls, codes: Sequence[int], phase: int = 0) -> "PauliString":
        x = tuple(1 if c in (1, 2) else 0 for c in codes)
        z = tuple(1 if c in (2, 3) else 0 for c in codes)
        return cls(x, z, phase)

    @classmethod
    def from_index(cls, index: int, n: int) -> "PauliString":
        """Inverse of :attr:`index` (base-4 digits, qubit 0 most significant)."""
        codes = []
        for _ in range(n):
            codes.append(index % 4)
            index //= 4
        return cls.from_codes(codes[::-1])

    # views ----------------------------------------------------------------

    @property
    def n(self) -> int:
        return len(self.x)

    @property
    def codes(self) -> tuple[int, ...]:
        return tuple(_code(a, b) for a, b in zip(self.x, self.z))

    @property
    def letters(self) -> str:
        return "".join(_LETTERS[c] for c in self.codes)

    @property
    def index(self) -> int:
        """Position of the phase-free string in the 4^n Pauli basis."""
        idx = 0
        for c in self.codes:
            idx = 4 * idx + c
        return idx

    @property
    def coefficient(self) -> complex:
        return 1j**self.phase

    @property
    def weight(self) -> int:
        return sum(1 for a, b in zip(self.x, self.z) if a or b)

    @property
    def is_identity(self) -> bool:
        return not any(self.x) and not any(self.z)

    @property
    def is_hermitian(self) -> bool:
        return self.phase % 2 == 0

    def canonical(self) -> "PauliString":
        """The phase-+1 representative."""
        return PauliString(self.x, self.z, 0)

    def to_matrix(self) -> np.ndarray:
        mats = [PAULI_MATRICES[c] for c in self.codes]
        return self.coefficient * functools.reduce(np.kron, mats)

    def __str__(self) -> str:
        return _PHASE_PREFIX[self.phase] + self.letters

    def __repr__(self) -> str:
        return f"PauliString({str(self)!r})"

    def __mul__(self, other: "PauliString") -> "PauliString":
        return pauli_mul(self, other)

    def __neg__(self) -> "PauliString":
        return PauliString(self.x, self.z, self.phase + 2)


def _check_same_n(p: PauliString, q: PauliString) -> None:
    if p.n != q.n:
        raise DimensionError(f"qubit counts differ: {p.n} != {q.n}")


def pauli_mul(p: PauliString, q: PauliString) -> PauliString:
    """Operator product ``p @ q`` with exact phase tracking."""
    _check_same_n(p, q)
    g = int(np.sum(_phase_exponent(p.x, p.z, q.x, q.z)))
    x = tuple(a ^ b for a, b in zip(p.x, q.x))
    z = tuple(a ^ b for a, b in zip(p.z, q.z))
    return PauliString(x, z, p.phase + q.phase + g)


def commutes(p: PauliString, q: PauliString) -> bool:
    """True iff ``p`` and ``q`` commute (symplectic product is even)."""
    _check_same_n(p, q)
    s = sum(a * d + b * c for a, b, c, d in zip(p.x, p.z, q.x, q.z))
    return s % 2 == 0


# ---------------------------------------------------------------------------
# Clifford tableaus


@dataclass(frozen=True)
class CliffordTableau:
    """Conjugation action of a Clifford unitary on the Pauli generators.

    ``images`` lists ``U X_j U^dag`` for j = 0..n-1 followed by ``U Z_j U^dag``.
    Construction validates hermiticity and the symplectic commutation relations.
    """

    images: tuple[PauliString, ...]
    name: str = field(default="", compare=False)

    def __post_init__(self):
        images = tuple(self.images)
        object.__setattr__(self, "images", images)
        if len(images) % 2 or not images:
            raise ShapeError("a tableau needs 2n generator images")
        n = len(images) // 2
        for img in images:
            if img.n != n:
                raise DimensionError(f"image {img} does not act on {n} qubits")
            if not img.is_hermitian:
                raise PreconditionError(f"image {img} is not Hermitian (phase must be ±1)")
        for a, b in itertools.combinations(range(2 * n), 2):
            should_anticommute = abs(a - b) == n
            if commutes(images[a], images[b]) == should_anticommute:
                raise PreconditionError(
                    "generator images do not preserve the symplectic form "
                    f"({_generator_name(a, n)}, {_generator_name(b, n)})"
                )

    @property
    def n(self) -> int:
        return len(self.images) // 2

    def x_image(self, j: int) -> PauliString:
        return self.images[j]

    def z_image(self, j: int) -> PauliString:
        return self.images[self.n + j]

    def then(self, other: "CliffordTableau") -> "CliffordTableau":
        """Tableau of applying ``self`` first and ``other`` second."""
        if other.n != self.n:
            raise DimensionError(f"qubit counts differ: {self.n} != {other.n}")
        return CliffordTableau(tuple(conjugate(other, img) for img in self.images))

    # builders -------------------------------------------------------------

    @classmethod
    def identity(cls, n: int) -> "CliffordTableau":
        xs = [PauliString.single(n, j, "X") for j in range(n)]
        zs = [PauliString.single(n, j, "Z") for j in range(n)]
        return cls(tuple(xs + zs), name="I")

    @classmethod
    def from_unitary(cls, u: np.ndarray) -> "CliffordTableau":
        """Read off generator images from a dense Clifford unitary (small n)."""
        u = np.asarray(u, dtype=complex)
        n = _qubits_of(u.shape[0])
        gens = [PauliString.single(n, j, "X") for j in range(n)]
        gens += [PauliString.single(n, j, "Z") for j in range(n)]
        images = []
        for g in gens:
            m = u @ g.to_matrix() @ u.conj().T
            d = decompose(m)
            if len(d.terms) != 1:
                raise PreconditionError("unitary is not Clifford")
            (p, c), = d.terms.items()
            if abs(abs(c) - 2**n) > 1e-8 or abs(np.imag(c)) > 1e-8:
                raise PreconditionError("unitary is not Clifford")
            images.append(p if np.real(c) > 0 else -p)
        return cls(tuple(images))

    @classmethod
    def from_lines(cls, lines: Iterable[str]) -> "CliffordTableau":
        """Parse ``"X0 -> +XZ"`` style lines (one per generator, any order)."""
        found: dict[tuple[str, int], PauliString] = {}
        for raw in lines:
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            try:
                lhs, rhs = (s.strip() for s in line.split("->"))
                kind, idx = lhs[0].upper(), int(lhs[1:])
            except (ValueError, IndexError):
                raise ValueError(f"bad tableau line: {raw!r}") from None
            if kind not in "XZ":
                raise ValueError(f"bad tableau generator: {lhs!r}")
            found[(kind, idx)] = PauliString.from_label(rhs)
        n = len(found) // 2
        try:
            images = [found[("X", j)] for j in range(n)] + [found[("Z", j)] for j in range(n)]
        except KeyError as exc:
            raise ValueError(f"tableau is missing generator {exc.args[0]}") from None
        return cls(tuple(images))

    def to_lines(self) -> list[str]:
        return [
            f"{_generator_name(a, self.n)} -> {img}" for a, img in enumerate(self.images)
        ]

    @classmethod
    def cz(cls, i: int, j: int, n: int) -> "CliffordTableau":
        _check_qubits(n, i, j)
        xs = []
        for k in range(n):
            letters = ["I"] * n
            letters[k] = "X"
            if k == i:
                letters[j] = "Z"
            elif k == j:
                letters[i] = "Z"
            xs.append(PauliString.from_label("".join(letters)))
        zs = [PauliString.single(n, k, "Z") for k in range(n)]
        return cls(tuple(xs + zs), name=f"CZ({i},{j})")

    @classmethod
    def cnot(cls, control: int, target: int, n: int) -> "CliffordTableau":
        _check_qubits(n, control, target)
        xs, zs = [], []
        for k in range(n):
            letters = ["I"] * n
            letters[k] = "X"
            if k == control:
                letters[target] = "X"
            xs.append(PauliString.from_label("".join(letters)))
            letters = ["I"] * n
            letters[k] = "Z"
            if k == target:
                letters[control] = "Z"
            zs.append(PauliString.from_label("".join(letters)))
        return cls(tuple(xs + zs), name=f"CNOT({control},{target})")

    @classmethod
    def h(cls, j: int, n: int) -> "CliffordTableau":
        return cls._single(j, n, "+Z", "+X", f"H({j})")

    @classmethod
    def s(cls, j: int, n: int) -> "CliffordTableau":
        return cls._single(j, n, "+Y", "+Z", f"S({j})")

    @classmethod
    def pauli_x(cls, j: int, n: int) -> "CliffordTableau":
        return cls._single(j, n, "+X", "-Z", f"X({j})")

    @classmethod
    def pauli_y(cls, j: int, n: int) -> "CliffordTableau":
        return cls._single(j, n, "-X", "-Z", f"Y({j})")

    @classmethod
    def pauli_z(cls, j: int, n: int) -> "CliffordTableau":
        return cls._single(j, n, "-X", "+Z", f"Z({j})")

    @classmethod
    def cz_chain(cls, n: int) -> "CliffordTableau":
        """Product of CZ(i, i+1) over the open chain; all factors commute."""
        tab = cls.identity(n)
        for i in range(n - 1):
            tab = tab.then(cls.cz(i, i + 1, n))
        return CliffordTableau(tab.images, name="CZ-chain")

    @classmethod
    def _single(cls, j, n, x_img, z_img, name):
        _check_qubits(n, j)
        xs = [PauliString.single(n, k, "X") for k in range(n)]
        zs = [PauliString.single(n, k, "Z") for k in range(n)]
        xp, zp = PauliString.from_label(x_img), PauliString.from_label(z_img)
        xs[j] = _embed(xp, j, n)
        zs[j] = _embed(zp, j, n)
        return cls(tuple(xs + zs), name=name)


def _embed(p: PauliString, j: int, n: int) -> PauliString:
    x = [0] * n
    z = [0] * n
    x[j], z[j] = p.x[0], p.z[0]
    return PauliString(tuple(x), tuple(z), p.phase)


def _generator_name(a: int, n: int) -> str:
    return f"X{a}" if a < n else f"Z{a - n}"


def _check_qubits(n: int, *qubits: int) -> None:
    for q in qubits:
        if not 0 <= q < n:
            raise DimensionError(f"qubit {q} out of range for n={n}")
    if len(set(qubits)) != len(qubits):
        raise ValueError(f"repeated qubit in {qubits}")


def conjugate(tableau: CliffordTableau, p: PauliString) -> PauliString:
    """``U p U^dag`` for the Clifford ``U`` described by ``tableau``."""
    if tableau.n != p.n:
        raise DimensionError(f"qubit counts differ: {tableau.n} != {p.n}")
    n = p.n
    # Y = i X Z, so p = i**(phase + #Y) * prod_j X_j^x_j Z_j^z_j
    n_y = sum(a & b for a, b in zip(p.x, p.z))
    out = PauliString.identity(n)
    for j in range(n):
        if p.x[j]:
            out = pauli_mul(out, tableau.x_image(j))
        if p.z[j]:
            out = pauli_mul(out, tableau.z_image(j))
    return PauliString(out.x, out.z, out.phase + p.phase + n_y)


# ---------------------------------------------------------------------------
# Vectorised helpers on the full 4^n basis


@functools.lru_cache(maxsize=16)
def pauli_codes(n: int) -> np.ndarray:
    """``(4**n, n)`` array of per-qubit codes (0=I, 1=X, 2=Y, 3=Z) for every index."""
    idx = np.arange(4**n)
    codes = np.empty((4**n, n), dtype=np.int8)
    for j in range(n):
        codes[:, j] = (idx >> (2 * (n - 1 - j))) & 3
    codes.setflags(write=False)
    return codes


def _codes_to_xz(codes: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    codes = np.asarray(codes)
    return ((codes == 1) | (codes == 2)).astype(np.int64), (codes >= 2).astype(np.int64)


def _xz_to_index(x: np.ndarray, z: np.ndarray) -> np.ndarray:
    codes = (x ^ z) * (1 + 2 * z) + (x & z) * 2
    n = codes.shape[1]
    weights = 4 ** np.arange(n - 1, -1, -1, dtype=np.int64)
    return codes @ weights


def clifford_index_map(tableau: CliffordTableau) -> tuple[np.ndarray, np.ndarray]:
    """Signed permutation of the Pauli basis induced by a Clifford.

    Returns ``(target, sign)`` with ``U P_s U^dag = sign[s] * P_{target[s]}`` for
    every basis index ``s``.
    """
    n = tableau.n
    x, z = _codes_to_xz(pauli_codes(n))
    size = x.shape[0]
    acc_x = np.zeros((size, n), dtype=np.int64)
    acc_z = np.zeros((size, n), dtype=np.int64)
    phase = (x & z).sum(axis=1)
    for col, bits in enumerate(list(x.T) + list(z.T)):
        j = col % n
        img = tableau.x_image(j) if col < n else tableau.z_image(j)
        ix = np.array(img.x, dtype=np.int64)
        iz = np.array(img.z, dtype=np.int64)
        mask = bits.astype(bool)
        g = _phase_exponent(acc_x[mask], acc_z[mask], ix, iz).sum(axis=1)
        phase[mask] += g + img.phase
        acc_x[mask] ^= ix
        acc_z[mask] ^= iz
    phase %= 4
    if np.any(phase % 2):
        raise PreconditionError("Clifford image is not Hermitian")
    sign = np.where(phase == 0, 1.0, -1.0)
    return _xz_to_index(acc_x, acc_z), sign


# ---------------------------------------------------------------------------
# Decompositions


def _qubits_of(dim: int) -> int:
    n = int(dim).bit_length() - 1
    if dim < 2 or 2**n != dim:
        raise ShapeError(f"dimension {dim} is not a positive power of two")
    return n


def pauli_coefficients(rho: np.ndarray) -> np.ndarray:
    """All ``Tr(P rho)`` as a length-4^n array in basis-index order."""
    rho = np.asarray(rho)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise ShapeError(f"expected a square matrix, got shape {rho.shape}")
    n = _qubits_of(rho.shape[0])
    # t[p, b, a] = sigma_p[b, a]  so that sum_ab t[p,b,a] rho[a,b] = Tr(sigma_p rho)
    t = PAULI_MATRICES
    arr = rho.reshape(1, rho.shape[0], rho.shape[1])
    for j in range(n):
        k, r, _ = arr.shape
        half = r // 2
        arr = arr.reshape(k, 2, half, 2, half)
        arr = np.einsum("pba,kaibj->kpij", t, arr).reshape(4 * k, half, half)
    out = arr.reshape(-1)
    if np.isrealobj(rho) or np.max(np.abs(out.imag), initial=0.0) < ZERO_TOL:
        return np.ascontiguousarray(out.real)
    return out


def from_pauli_coefficients(coeffs: np.ndarray) -> np.ndarray:
    """Dense ``2**-n * sum_P c_P P`` from a length-4^n coefficient array."""
    coeffs = np.asarray(coeffs)
    size = coeffs.shape[0]
    n = _qubits_of(int(round(np.sqrt(size))))
    if 4**n != size:
        raise ShapeError(f"length {size} is not a power of four")
    arr = coeffs.astype(complex).reshape(size, 1, 1)
    for _ in range(n):
        k, r, c = arr.shape
        arr = arr.reshape(k // 4, 4, r, c)
        arr = np.einsum("kprc,pab->karbc", arr, PAULI_MATRICES).reshape(k // 4, 2 * r, 2 * c)
    return arr[0] / 2**n


@dataclass(frozen=True)
class PauliDecomposition:
    """Sparse Pauli expansion ``{P: Tr(P M)}`` with phase-+1 keys."""

    n: int
    terms: Mapping[PauliString, complex]

    def __getitem__(self, p: PauliString) -> complex:
        return self.terms.get(p.canonical(), 0.0)

    def __len__(self) -> int:
        return len(self.terms)

    def to_array(self) -> np.ndarray:
        dtype = complex if any(isinstance(c, complex) for c in self.terms.values()) else float
        out = np.zeros(4**self.n, dtype=dtype)
        for p, c in self.terms.items():
            out[p.index] = c
        return out

    def reconstruct(self) -> np.ndarray:
        return from_pauli_coefficients(self.to_array())

    @classmethod
    def from_array(cls, coeffs: np.ndarray, tol: float = ZERO_TOL) -> "PauliDecomposition":
        coeffs = np.asarray(coeffs)
        n = _qubits_of(int(round(np.sqrt(coeffs.shape[0]))))
        real = not np.iscomplexobj(coeffs)
        terms = {}
        for idx in np.flatnonzero(np.abs(coeffs) >= tol):
            c = coeffs[idx]
            terms[PauliString.from_index(int(idx), n)] = float(c) if real else complex(c)
        return cls(n, terms)


def decompose(
    m: np.ndarray, tol: float = ZERO_TOL, max_qubits: int = DENSE_QUBIT_LIMIT
) -> PauliDecomposition:
    """Pauli expansion of a dense matrix, dropping ``|c| < tol``.

    >>> decompose(np.diag([1.0, 0.0])).terms
    {PauliString('+I'): 1.0, PauliString('+Z'): 1.0}
    """
    m = np.asarray(m)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ShapeError(f"expected a square matrix, got shape {m.shape}")
    n = _qubits_of(m.shape[0])
    if n > max_qubits:
        raise ResourceLimitError(f"dense decomposition limited to {max_qubits} qubits, got {n}")
    return PauliDecomposition.from_array(pauli_coefficients(m), tol)


def support(d: PauliDecomposition) -> frozenset[PauliString]:
    """Phase-+1 strings carrying a nonzero coefficient."""
    return frozenset(p.canonical() for p, c in d.terms.items() if c != 0)


def operator_from_paulis(terms: Mapping[str | PauliString, complex], n: int | None = None) -> np.ndarray:
    """Dense ``sum_P w_P P`` from ``{label or PauliString: weight}``."""
    out = None
    for key, w in terms.items():
        p = PauliString.from_label(key) if isinstance(key, str) else key
        if n is not None and p.n != n:
            raise DimensionError(f"{p} does not act on {n} qubits")
        term = w * p.to_matrix()
        out = term if out is None else out + term
    if out is None:
        if n is None:
            raise ValueError("cannot infer qubit count of an empty operator")
        return np.zeros((2**n, 2**n), dtype=complex)
    return out


@dataclass(frozen=True, eq=False)
class PauliVector:
    """A state or observable stored as its 4^n real Pauli coefficients.

    For a density matrix ``coeffs[0] == Tr(rho) == 1``.
    """

    n: int
    coeffs: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=float)
        if c.shape != (4**self.n,):
            raise ShapeError(f"expected {4**self.n} coefficients, got shape {c.shape}")
        object.__setattr__(self, "coeffs", c)

    @classmethod
    def from_dense(cls, rho: np.ndarray) -> "PauliVector":
        c = pauli_coefficients(rho)
        if np.iscomplexobj(c):
            raise PreconditionError("matrix is not Hermitian")
        return cls(_qubits_of(np.asarray(rho).shape[0]), c)

    @classmethod
    def zero_state(cls, n: int) -> "PauliVector":
        """``|0...0><0...0|``: coefficient 1 on every string in {I, Z}^n."""
        c = np.zeros(4**n)
        codes = pauli_codes(n)
        c[np.all((codes == 0) | (codes == 3), axis=1)] = 1.0
        return cls(n, c)

    @classmethod
    def maximally_mixed(cls, n: int) -> "PauliVector":
        c = np.zeros(4**n)
        c[0] = 1.0
        return cls(n, c)

    def to_dense(self) -> np.ndarray:
        return from_pauli_coefficients(self.coeffs)

    @property
    def trace(self) -> float:
        return float(self.coeffs[0])

    @property
    def purity(self) -> float:
        return float(self.coeffs @ self.coeffs) / 2**self.n
