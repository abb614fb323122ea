"""Dense linear algebra for small registers of three- or five-level atoms.

Basis layout is row-major with atom 0 as the most significant digit, so for
two three-level atoms the index of ``|a b>`` is ``3 * a + b``. Within one atom
the levels are ordered ``g0 < g1 < ryd (< p_int < g1prime)``.

All value types wrap read-only numpy arrays and never mutate their inputs.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import IntEnum
from typing import Iterable, Sequence, Union

import numpy as np

HERMITIAN_ATOL = 1e-9
TRACE_ATOL = 1e-6
EIGENVALUE_FLOOR = -1e-8
NORM_ATOL = 1e-9

ALLOWED_LEVELS = (3, 5)


class DimensionError(ValueError):
    """Operands have incompatible register shapes."""


class InvariantError(ValueError):
    """A state or operator violates one of its physical invariants."""


class LevelLabel(IntEnum):
    """Single-atom levels; the integer value is the basis index."""

    G0 = 0
    G1 = 1
    RYD = 2
    P_INT = 3
    G1PRIME = 4

    @classmethod
    def parse(cls, label: Union[str, int, "LevelLabel"]) -> "LevelLabel":
        if isinstance(label, LevelLabel):
            return label
        if isinstance(label, (int, np.integer)):
            return cls(int(label))
        aliases = {"0": cls.G0, "g0": cls.G0, "1": cls.G1, "g1": cls.G1,
                   "r": cls.RYD, "ryd": cls.RYD, "p": cls.P_INT, "p_int": cls.P_INT,
                   "1'": cls.G1PRIME, "g1prime": cls.G1PRIME}
        try:
            return aliases[str(label).lower()]
        except KeyError:
            raise ValueError(f"unknown level label {label!r}") from None


G0, G1, RYD = LevelLabel.G0, LevelLabel.G1, LevelLabel.RYD


def _check_levels(levels: int) -> None:
    if levels not in ALLOWED_LEVELS:
        raise DimensionError(f"levels_per_atom must be one of {ALLOWED_LEVELS}, got {levels}")


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=complex, copy=True)
    a.setflags(write=False)
    return a


def _register_size(dim: int, levels: int) -> int:
    n = int(round(np.log(dim) / np.log(levels))) if dim > 1 else 0
    if levels**n != dim:
        raise DimensionError(f"dimension {dim} is not a power of {levels}")
    return n


@dataclass(frozen=True)
class PureState:
    """State vector of ``n_atoms`` atoms with ``levels`` levels each."""

    amplitudes: np.ndarray
    n_atoms: int
    levels: int = 3

    def __post_init__(self):
        _check_levels(self.levels)
        object.__setattr__(self, "amplitudes", _frozen(np.ravel(self.amplitudes)))
        if self.amplitudes.size != self.levels**self.n_atoms:
            raise DimensionError(
                f"expected {self.levels}**{self.n_atoms} amplitudes, got {self.amplitudes.size}")

    @classmethod
    def from_vector(cls, amplitudes, levels: int = 3, normalize: bool = True) -> "PureState":
        v = np.asarray(amplitudes, dtype=complex).ravel()
        if normalize:
            norm = np.linalg.norm(v)
            if norm == 0:
                raise InvariantError("cannot normalize the zero vector")
            v = v / norm
        return cls(v, _register_size(v.size, levels), levels)

    @property
    def dim(self) -> int:
        return self.amplitudes.size

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def check(self) -> "PureState":
        if abs(self.norm() ** 2 - 1) > NORM_ATOL:
            raise InvariantError(f"squared norm {self.norm() ** 2:.3e} differs from 1")
        return self

    def to_density(self) -> "DensityOperator":
        v = self.amplitudes
        return DensityOperator(np.outer(v, v.conj()), self.n_atoms, self.levels)

    def overlap(self, other: "PureState") -> complex:
        _same_shape(self, other)
        return complex(np.vdot(self.amplitudes, other.amplitudes))


@dataclass(frozen=True)
class LinearOperator:
    """Square operator on a register; ``hermitian`` enables the Hermiticity check."""

    matrix: np.ndarray
    n_atoms: int
    levels: int = 3
    hermitian: bool = False

    def __post_init__(self):
        _check_levels(self.levels)
        m = _frozen(self.matrix)
        d = self.levels**self.n_atoms
        if m.shape != (d, d):
            raise DimensionError(f"expected a {d}x{d} matrix, got {m.shape}")
        object.__setattr__(self, "matrix", m)
        if self.hermitian:
            dev = np.max(np.abs(m - m.conj().T)) if m.size else 0.0
            if dev > HERMITIAN_ATOL:
                raise InvariantError(f"operator flagged Hermitian deviates by {dev:.3e}")

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def dagger(self) -> "LinearOperator":
        return LinearOperator(self.matrix.conj().T, self.n_atoms, self.levels, self.hermitian)

    def __add__(self, other: "LinearOperator") -> "LinearOperator":
        _same_shape(self, other)
        return LinearOperator(self.matrix + other.matrix, self.n_atoms, self.levels,
                              self.hermitian and other.hermitian)

    def __mul__(self, scalar) -> "LinearOperator":
        scalar = complex(scalar)
        herm = self.hermitian and scalar.imag == 0
        return LinearOperator(self.matrix * scalar, self.n_atoms, self.levels, herm)

    __rmul__ = __mul__

    def __matmul__(self, other):
        if isinstance(other, PureState):
            _same_shape(self, other)
            return PureState(self.matrix @ other.amplitudes, self.n_atoms, self.levels)
        _same_shape(self, other)
        return LinearOperator(self.matrix @ other.matrix, self.n_atoms, self.levels)

    def element(self, bra: Sequence, ket: Sequence) -> complex:
        """Matrix element between product basis states given as level labels."""
        return complex(self.matrix[basis_index(bra, self.levels), basis_index(ket, self.levels)])


@dataclass(frozen=True)
class DensityOperator:
    """Hermitian, positive semidefinite, unit-trace matrix on a register.

    Construction validates the invariants unless ``check=False``; the
    integrator uses the unchecked form internally and checks explicitly.
    """

    matrix: np.ndarray
    n_atoms: int
    levels: int = 3
    check: bool = field(default=True, repr=False, compare=False)

    def __post_init__(self):
        _check_levels(self.levels)
        m = _frozen(self.matrix)
        d = self.levels**self.n_atoms
        if m.shape != (d, d):
            raise DimensionError(f"expected a {d}x{d} matrix, got {m.shape}")
        object.__setattr__(self, "matrix", m)
        if self.check:
            self.validate()

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def validate(self, hermitian_atol: float = HERMITIAN_ATOL, trace_atol: float = TRACE_ATOL,
                 eig_floor: float = EIGENVALUE_FLOOR) -> "DensityOperator":
        m = self.matrix
        dev = float(np.max(np.abs(m - m.conj().T)))
        if dev > hermitian_atol:
            raise InvariantError(f"density operator not Hermitian (deviation {dev:.3e})")
        tr = np.trace(m)
        if abs(tr - 1) > trace_atol:
            raise InvariantError(f"density operator trace {tr.real:.9f} differs from 1")
        lowest = float(np.linalg.eigvalsh(0.5 * (m + m.conj().T))[0])
        if lowest < eig_floor:
            raise InvariantError(f"density operator has eigenvalue {lowest:.3e} below {eig_floor}")
        return self

    def trace(self) -> float:
        return float(np.trace(self.matrix).real)

    def purity(self) -> float:
        return float(np.real(np.vdot(self.matrix, self.matrix)))

    def population(self, labels: Sequence) -> float:
        i = basis_index(labels, self.levels)
        return float(self.matrix[i, i].real)

    def expectation(self, op: Union[LinearOperator, np.ndarray]) -> complex:
        m = op.matrix if isinstance(op, LinearOperator) else np.asarray(op)
        return complex(np.trace(m @ self.matrix))


State = Union[PureState, DensityOperator]


def _same_shape(a, b) -> None:
    if a.levels != b.levels or a.n_atoms != b.n_atoms:
        raise DimensionError(
            f"register mismatch: {a.n_atoms} atoms x {a.levels} levels vs "
            f"{b.n_atoms} atoms x {b.levels} levels")


def as_density(state: State) -> DensityOperator:
    return state.to_density() if isinstance(state, PureState) else state


def basis_index(labels: Sequence, levels: int = 3) -> int:
    idx = 0
    for lab in labels:
        lev = LevelLabel.parse(lab)
        if lev >= levels:
            raise DimensionError(f"level {lev.name} not present in a {levels}-level atom")
        idx = idx * levels + int(lev)
    return idx


def basis_state(labels: Sequence, levels: int = 3) -> PureState:
    """Product basis state, e.g. ``basis_state(["g0", "ryd"])`` for ``|0 r>``."""
    v = np.zeros(levels ** len(labels), dtype=complex)
    v[basis_index(labels, levels)] = 1.0
    return PureState(v, len(labels), levels)


def single_atom_state(coeffs: dict, levels: int = 3) -> PureState:
    """Normalized single-atom superposition from ``{label: amplitude}``."""
    v = np.zeros(levels, dtype=complex)
    for lab, c in coeffs.items():
        v[basis_index([lab], levels)] += c
    return PureState.from_vector(v, levels)


def transition(to, frm, levels: int = 3) -> LinearOperator:
    """Single-atom ``|to><frm|``."""
    m = np.zeros((levels, levels), dtype=complex)
    m[basis_index([to], levels), basis_index([frm], levels)] = 1.0
    return LinearOperator(m, 1, levels)


def projector(level, levels: int = 3) -> LinearOperator:
    p = transition(level, level, levels)
    return LinearOperator(p.matrix, 1, levels, hermitian=True)


def identity(n_atoms: int, levels: int = 3) -> LinearOperator:
    return LinearOperator(np.eye(levels**n_atoms), n_atoms, levels, hermitian=True)


def zero_operator(n_atoms: int, levels: int = 3) -> LinearOperator:
    d = levels**n_atoms
    return LinearOperator(np.zeros((d, d)), n_atoms, levels, hermitian=True)


def tensor(a, b):
    """Kronecker product with ``a`` occupying the leading (more significant) atoms."""
    if a.levels != b.levels:
        raise DimensionError(f"cannot tensor {a.levels}-level with {b.levels}-level atoms")
    n = a.n_atoms + b.n_atoms
    if isinstance(a, PureState) and isinstance(b, PureState):
        return PureState(np.kron(a.amplitudes, b.amplitudes), n, a.levels)
    if isinstance(a, DensityOperator) and isinstance(b, DensityOperator):
        return DensityOperator(np.kron(a.matrix, b.matrix), n, a.levels, check=a.check and b.check)
    if isinstance(a, LinearOperator) and isinstance(b, LinearOperator):
        return LinearOperator(np.kron(a.matrix, b.matrix), n, a.levels, a.hermitian and b.hermitian)
    raise TypeError(f"cannot tensor {type(a).__name__} with {type(b).__name__}")


def tensor_all(items: Iterable):
    items = list(items)
    out = items[0]
    for it in items[1:]:
        out = tensor(out, it)
    return out


def embed_single_atom(op: LinearOperator, atom_index: int, n_atoms: int) -> LinearOperator:
    """Lift a one-atom operator to ``n_atoms`` atoms, identity elsewhere."""
    if op.n_atoms != 1:
        raise DimensionError(f"expected a single-atom operator, got {op.n_atoms} atoms")
    return embed(op, [atom_index], n_atoms)


def embed(op: LinearOperator, atoms: Sequence[int], n_atoms: int) -> LinearOperator:
    """Place a k-atom operator on the listed atoms of an ``n_atoms`` register.

    ``atoms[i]`` is the register position of the operator's i-th atom.
    """
    atoms = [int(a) for a in atoms]
    k, L = op.n_atoms, op.levels
    if len(atoms) != k:
        raise DimensionError(f"operator acts on {k} atoms but {len(atoms)} positions given")
    if len(set(atoms)) != k:
        raise ValueError(f"repeated atom index in {atoms}")
    for a in atoms:
        if not 0 <= a < n_atoms:
            raise IndexError(f"atom index {a} out of range for {n_atoms} atoms")
    rest = [a for a in range(n_atoms) if a not in atoms]
    full = np.kron(op.matrix, np.eye(L ** len(rest)))
    # full acts on atoms in the order atoms + rest; permute to 0..n-1
    order = atoms + rest
    perm = np.argsort(order)
    t = full.reshape([L] * (2 * n_atoms))
    t = t.transpose(list(perm) + [n_atoms + p for p in perm])
    d = L**n_atoms
    return LinearOperator(t.reshape(d, d), n_atoms, L, op.hermitian)


def partial_trace(rho: DensityOperator, keep: Iterable[int]) -> DensityOperator:
    """Reduced state on the ``keep`` atoms, in increasing atom order."""
    keep = sorted(set(int(k) for k in keep))
    n, L = rho.n_atoms, rho.levels
    if not keep:
        raise ValueError("keep must name at least one atom")
    if keep[0] < 0 or keep[-1] >= n:
        raise IndexError(f"keep {keep} out of range for {n} atoms")
    if len(keep) == n:
        return rho
    traced = [a for a in range(n) if a not in keep]
    t = np.asarray(rho.matrix).reshape([L] * (2 * n))
    # move kept bra/ket axes first, traced bra/ket axes last, then contract
    t = t.transpose(keep + [n + k for k in keep] + traced + [n + a for a in traced])
    dk, dt = L ** len(keep), L ** len(traced)
    t = t.reshape(dk, dk, dt, dt)
    red = np.trace(t, axis1=2, axis2=3)
    return DensityOperator(red, len(keep), L, check=rho.check)


def fidelity(ideal: State, actual: State) -> float:
    """Overlap ``Tr(rho_ideal rho_actual)``; equals the usual fidelity for a pure ideal."""
    a, b = as_density(ideal), as_density(actual)
    _same_shape(a, b)
    val = np.vdot(a.matrix.conj().T, b.matrix)  # Tr(A B) without forming the product
    if abs(val.imag) >= 1e-9:
        raise InvariantError(f"fidelity has imaginary part {val.imag:.3e}")
    return float(val.real)


def state_overlap_fidelity(a: PureState, b: PureState) -> float:
    """``|<a|b>|^2`` for pure states."""
    return abs(a.overlap(b)) ** 2


# Pauli matrices on the {g0, ryd} two-level subspace of a three-level atom.
def pauli_on_subspace(name: str, lower=G0, upper=RYD, levels: int = 3) -> LinearOperator:
    lo, up = LevelLabel.parse(lower), LevelLabel.parse(upper)
    m = np.eye(levels, dtype=complex)
    blocks = {
        "identity": np.eye(2),
        "sigma_x": np.array([[0, 1], [1, 0]]),
        "sigma_y": np.array([[0, -1j], [1j, 0]]),
        "sigma_z": np.array([[1, 0], [0, -1]]),
    }
    if name not in blocks:
        raise ValueError(f"unknown Pauli {name!r}; expected one of {tuple(blocks)}")
    block = blocks[name]
    idx = [int(lo), int(up)]
    m[np.ix_(idx, idx)] = block
    return LinearOperator(m, 1, levels, hermitian=True)
