"""Dense complex linear algebra and validated quantum-state types.

Everything downstream works with three operator types built on numpy
arrays: ``DensityMatrix`` (Hermitian, unit trace, positive semidefinite),
``Hamiltonian`` (Hermitian with a cached spectral decomposition, energy
units with hbar = 1) and ``Observable`` (Hermitian). Validation happens at
construction: no instance can exist that violates its invariants beyond
the stated tolerances.

Tensor index convention, shared by every module: in a bipartite product
the slow subsystem S is the LEFT (row-major outer) factor and the clock C
is the RIGHT factor, i.e. ``kron(S_op, C_op)``.
"""

from __future__ import annotations

import numpy as np

from .errors import (
    DimensionMismatchError,
    DimensionOverflowError,
    EigensolverError,
    NotHermitianError,
    NotPositiveError,
    QuantumStateError,
    TraceNotOneError,
)

__all__ = [
    "HERMITICITY_TOL",
    "TRACE_TOL",
    "PSD_TOL",
    "DIMENSION_CAP",
    "DensityMatrix",
    "Hamiltonian",
    "Observable",
    "make_density",
    "spectral_decompose",
    "tensor",
    "partial_trace",
    "expectation",
    "purity",
]

# Default numerical budgets. The mathematics is exact; these absorb the
# roundoff of float64 arithmetic. All constructors accept overrides.
HERMITICITY_TOL = 1e-10
TRACE_TOL = 1e-10
PSD_TOL = 1e-9

# Largest composite dimension tensor() will produce.
DIMENSION_CAP = 4096

_EIGENBASIS_TOL = 1e-9  # unitarity and reconstruction budget


def _as_matrix(m) -> np.ndarray:
    """Coerce input to a finite, square, complex 2-d array."""
    if isinstance(m, (DensityMatrix, Hamiltonian, Observable)):
        return m.matrix
    arr = np.asarray(m, dtype=np.complex128)
    if arr.ndim != 2:
        raise QuantumStateError(f"expected a 2-d matrix, got ndim={arr.ndim}")
    if not np.all(np.isfinite(arr.real)) or not np.all(np.isfinite(arr.imag)):
        raise QuantumStateError("matrix has non-finite entries")
    return arr


def _require_square(arr: np.ndarray) -> int:
    if arr.shape[0] != arr.shape[1]:
        raise DimensionMismatchError(f"matrix is not square: shape {arr.shape}")
    return arr.shape[0]


def _hermiticity_defect(arr: np.ndarray) -> float:
    return float(np.max(np.abs(arr - arr.conj().T), initial=0.0))


def _frozen(arr: np.ndarray) -> np.ndarray:
    out = np.array(arr, dtype=np.complex128, copy=True)
    out.setflags(write=False)
    return out


class DensityMatrix:
    """Validated quantum state: Hermitian, unit trace, positive semidefinite.

    Instances are immutable; the underlying array is read-only and safe to
    share across threads.
    """

    __slots__ = ("dim", "matrix")

    def __init__(
        self,
        matrix,
        *,
        herm_tol: float = HERMITICITY_TOL,
        trace_tol: float = TRACE_TOL,
        psd_tol: float = PSD_TOL,
    ):
        arr = _as_matrix(matrix)
        dim = _require_square(arr)
        defect = _hermiticity_defect(arr)
        if defect > herm_tol:
            raise NotHermitianError(defect, what="density matrix")
        tr = complex(np.trace(arr))
        if abs(tr - 1.0) > trace_tol:
            raise TraceNotOneError(tr)
        smallest = float(np.linalg.eigvalsh(arr)[0])
        if smallest < -psd_tol:
            raise NotPositiveError(smallest)
        object.__setattr__(self, "dim", dim)
        object.__setattr__(self, "matrix", _frozen(arr))

    def __setattr__(self, name, value):
        raise AttributeError("DensityMatrix is immutable")

    def __repr__(self) -> str:
        return f"DensityMatrix(dim={self.dim})"


class Hamiltonian:
    """Hermitian operator with a cached spectral decomposition.

    ``spectrum`` holds the eigenvalues sorted ascending (degeneracies
    allowed) and ``eigenbasis`` the matching unitary whose columns are
    eigenvectors, so ``eigenbasis @ diag(spectrum) @ eigenbasis^dag``
    reconstructs ``matrix``. Within a degenerate subspace the basis choice
    is arbitrary; downstream operations must not depend on it.
    """

    __slots__ = ("dim", "matrix", "spectrum", "eigenbasis")

    def __init__(self, matrix, *, herm_tol: float = HERMITICITY_TOL):
        arr = _as_matrix(matrix)
        dim = _require_square(arr)
        defect = _hermiticity_defect(arr)
        if defect > herm_tol:
            raise NotHermitianError(defect, what="Hamiltonian")
        try:
            energies, basis = np.linalg.eigh(arr)
        except np.linalg.LinAlgError as exc:
            raise EigensolverError(f"eigensolver did not converge: {exc}") from exc
        self._finish_init(dim, arr, energies, basis)

    @classmethod
    def from_eigensystem(cls, eigenvalues, eigenbasis) -> "Hamiltonian":
        """Build from explicit spectral data (eigenvalues must be ascending).

        Used where the operator is defined by its spectrum, e.g. clock
        generators, and for checking invariance under degenerate-subspace
        basis choices.
        """
        energies = np.asarray(eigenvalues, dtype=float)
        basis = np.asarray(eigenbasis, dtype=np.complex128)
        if energies.ndim != 1 or basis.shape != (energies.size, energies.size):
            raise DimensionMismatchError(
                f"eigensystem shapes {energies.shape} / {basis.shape} do not match"
            )
        if np.any(np.diff(energies) < 0):
            raise QuantumStateError("eigenvalues must be sorted ascending")
        arr = (basis * energies) @ basis.conj().T
        arr = 0.5 * (arr + arr.conj().T)  # exact symmetrization of roundoff
        self = cls.__new__(cls)
        self._finish_init(energies.size, arr, energies, basis)
        return self

    def _finish_init(self, dim, arr, energies, basis):
        unitarity = float(
            np.max(np.abs(basis.conj().T @ basis - np.eye(dim)), initial=0.0)
        )
        if unitarity > _EIGENBASIS_TOL:
            raise EigensolverError(
                f"eigenbasis is not unitary: max |U^dag U - I| = {unitarity:.3e}"
            )
        rebuilt = (basis * energies) @ basis.conj().T
        recon = float(np.max(np.abs(rebuilt - arr), initial=0.0))
        if recon > _EIGENBASIS_TOL:
            raise EigensolverError(
                f"spectral reconstruction error {recon:.3e} exceeds budget"
            )
        object.__setattr__(self, "dim", dim)
        object.__setattr__(self, "matrix", _frozen(arr))
        energies = np.array(energies, dtype=float, copy=True)
        energies.setflags(write=False)
        object.__setattr__(self, "spectrum", energies)
        object.__setattr__(self, "eigenbasis", _frozen(basis))

    def __setattr__(self, name, value):
        raise AttributeError("Hamiltonian is immutable")

    def __repr__(self) -> str:
        lo, hi = self.spectrum[0], self.spectrum[-1]
        return f"Hamiltonian(dim={self.dim}, spectrum=[{lo:g}..{hi:g}])"


class Observable:
    """Hermitian operator measured against a state via ``expectation``."""

    __slots__ = ("dim", "matrix")

    def __init__(self, matrix, *, herm_tol: float = HERMITICITY_TOL):
        arr = _as_matrix(matrix)
        dim = _require_square(arr)
        defect = _hermiticity_defect(arr)
        if defect > herm_tol:
            raise NotHermitianError(defect, what="observable")
        object.__setattr__(self, "dim", dim)
        object.__setattr__(self, "matrix", _frozen(arr))

    def __setattr__(self, name, value):
        raise AttributeError("Observable is immutable")

    def __repr__(self) -> str:
        return f"Observable(dim={self.dim})"


def make_density(matrix, **tolerances) -> DensityMatrix:
    """Validate a matrix as a density matrix (see ``DensityMatrix``)."""
    return DensityMatrix(matrix, **tolerances)


def spectral_decompose(matrix, *, herm_tol: float = HERMITICITY_TOL) -> Hamiltonian:
    """Diagonalize a Hermitian matrix into a ``Hamiltonian``."""
    return Hamiltonian(matrix, herm_tol=herm_tol)


def tensor(a, b, *, cap: int = DIMENSION_CAP) -> np.ndarray:
    """Kronecker product with the S-left / C-right index convention."""
    am = _as_matrix(a)
    bm = _as_matrix(b)
    product_dim = am.shape[0] * bm.shape[0]
    if product_dim > cap:
        raise DimensionOverflowError(
            f"tensor product dimension {product_dim} exceeds cap {cap}"
        )
    return np.kron(am, bm)


def partial_trace(
    rho: DensityMatrix, dims: tuple[int, int], keep: str
) -> DensityMatrix:
    """Trace out one factor of a bipartite state.

    ``dims = (d_S, d_C)`` are the factor dimensions in the fixed S-left /
    C-right convention; ``keep`` selects the surviving subsystem, ``"S"``
    or ``"C"``.
    """
    d_s, d_c = int(dims[0]), int(dims[1])
    if d_s < 1 or d_c < 1 or rho.dim != d_s * d_c:
        raise DimensionMismatchError(
            f"state dim {rho.dim} is not the product of factor dims {d_s}x{d_c}"
        )
    blocks = rho.matrix.reshape(d_s, d_c, d_s, d_c)
    tag = keep.upper() if isinstance(keep, str) else keep
    if tag == "S":
        reduced = np.einsum("ajbj->ab", blocks)
    elif tag == "C":
        reduced = np.einsum("iaib->ab", blocks)
    else:
        raise DimensionMismatchError(f"keep must be 'S' or 'C', got {keep!r}")
    return DensityMatrix(reduced)


def expectation(observable: Observable, rho: DensityMatrix) -> float:
    """Expectation value Re Tr(N rho).

    Both operands are Hermitian so the trace is real analytically; a
    residual imaginary part above 1e-9 signals corrupted inputs and raises.
    """
    if observable.dim != rho.dim:
        raise DimensionMismatchError(
            f"observable dim {observable.dim} != state dim {rho.dim}"
        )
    value = complex(np.trace(observable.matrix @ rho.matrix))
    if abs(value.imag) > 1e-9:
        raise QuantumStateError(
            f"expectation has imaginary part {value.imag:.3e}; inputs are "
            "not Hermitian enough"
        )
    return float(value.real)


def purity(rho: DensityMatrix) -> float:
    """Tr(rho^2), in [1/dim, 1] up to the PSD tolerance."""
    return float(np.trace(rho.matrix @ rho.matrix).real)
