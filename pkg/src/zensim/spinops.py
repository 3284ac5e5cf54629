"""Dense spin-operator kernel: operators, tensor products, propagators.

All matrices are dense complex numpy arrays.  Hamiltonians are Hermitian
matrices in rad/us; times are in us, so ``propagator(H, t)`` is
``expm(-1j H t)`` computed by eigendecomposition (exactly unitary for
Hermitian input).
"""

from __future__ import annotations

import numpy as np

HERMITICITY_TOL = 1e-9
UNITARITY_TOL = 1e-10

_AXIS_SIGN = {"x": ("x", 1.0), "y": ("y", 1.0), "-x": ("x", -1.0), "-y": ("y", -1.0)}


class SpinOperators:
    """Angular-momentum matrices for spin quantum number J.

    Basis ordered |J>, |J-1>, ..., |-J>.  Attributes ``ix, iy, iz`` are the
    Cartesian operators, ``raising``/``lowering`` the ladder operators.
    """

    def __init__(self, j: float):
        jj = float(j)
        if jj <= 0 or round(2 * jj) != 2 * jj:
            raise ValueError(f"spin must be a positive half-integer, got {j}")
        dim = int(round(2 * jj + 1))
        m = jj - np.arange(dim)  # J, J-1, ..., -J
        ladder = np.sqrt(jj * (jj + 1) - m[1:] * (m[1:] + 1))
        raising = np.zeros((dim, dim), dtype=complex)
        raising[np.arange(dim - 1), np.arange(1, dim)] = ladder
        self.spin = jj
        self.dim = dim
        self.projections = m
        self.raising = raising
        self.lowering = raising.conj().T
        self.ix = 0.5 * (raising + self.lowering)
        self.iy = -0.5j * (raising - self.lowering)
        self.iz = np.diag(m).astype(complex)
        self.identity = np.eye(dim, dtype=complex)


def spin_operators(j: float) -> SpinOperators:
    """Standard angular-momentum matrices for half-integer ``j``."""
    return SpinOperators(j)


def kron(ops: list[np.ndarray] | tuple[np.ndarray, ...]) -> np.ndarray:
    """Tensor product of square matrices in list order."""
    if len(ops) == 0:
        raise ValueError("kron requires a non-empty list of matrices")
    out = None
    for op in ops:
        a = np.asarray(op, dtype=complex)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ValueError(f"kron requires square matrices, got shape {a.shape}")
        out = a if out is None else np.kron(out, a)
    return out


def embed(op: np.ndarray, site: int, dims: list[int] | tuple[int, ...]) -> np.ndarray:
    """Embed a single-site operator into the product space ``dims``."""
    factors = [np.eye(d, dtype=complex) for d in dims]
    if op.shape[0] != dims[site]:
        raise ValueError(f"operator dim {op.shape[0]} != site dim {dims[site]}")
    factors[site] = op
    return kron(factors)


def is_hermitian(mat: np.ndarray, tol: float = HERMITICITY_TOL) -> bool:
    return bool(np.max(np.abs(mat - mat.conj().T)) <= tol)


def is_unitary(mat: np.ndarray, tol: float = UNITARITY_TOL) -> bool:
    dev = mat @ mat.conj().T - np.eye(mat.shape[0])
    return bool(np.max(np.abs(dev)) <= tol)


def propagator(h: np.ndarray, t: float) -> np.ndarray:
    """Unitary ``expm(-1j h t)`` for Hermitian ``h`` via eigendecomposition."""
    if t < 0:
        raise ValueError(f"propagation time must be non-negative, got {t}")
    if not is_hermitian(h):
        dev = float(np.max(np.abs(h - h.conj().T)))
        raise ValueError(f"propagator requires a Hermitian matrix (deviation {dev:.2e})")
    evals, evecs = np.linalg.eigh(h)
    phases = np.exp(-1j * evals * t)
    return (evecs * phases) @ evecs.conj().T


def eig_propagator_factory(h: np.ndarray):
    """Diagonalize once, return ``U(t)`` closure (cheap repeated times)."""
    if not is_hermitian(h):
        raise ValueError("eig_propagator_factory requires a Hermitian matrix")
    evals, evecs = np.linalg.eigh(h)
    evecs_h = evecs.conj().T

    def u_of_t(t: float) -> np.ndarray:
        return (evecs * np.exp(-1j * evals * t)) @ evecs_h

    return u_of_t


def rotation_pulse(axis: str, angle: float) -> np.ndarray:
    """Qubit rotation ``expm(-1j angle S_axis)``, axis in {x, y, -x, -y}.

    Basis order is (|0>, |1>) with S_z = diag(-1/2, +1/2), so a (y, pi/2)
    pulse conjugates S_z into -S_x.
    """
    if axis not in _AXIS_SIGN:
        raise ValueError(f"axis must be one of x, y, -x, -y; got {axis!r}")
    name, sign = _AXIS_SIGN[axis]
    half = sign * angle / 2.0
    c, s = np.cos(half), np.sin(half)
    if name == "x":
        return np.array([[c, -1j * s], [-1j * s, c]], dtype=complex)
    return np.array([[c, s], [-s, c]], dtype=complex)


def conjugate(op: np.ndarray, u: np.ndarray) -> np.ndarray:
    """Heisenberg conjugation  U^dag op U."""
    return u.conj().T @ op @ u


class QubitOperators:
    """Spin-1/2 operators in the lowest-first ordering (|0>, |1>).

    S_z = diag(-1/2, +1/2); ``raising`` is |1><0|.
    """

    def __init__(self):
        self.sz = np.diag([-0.5, 0.5]).astype(complex)
        self.sx = np.array([[0, 0.5], [0.5, 0]], dtype=complex)
        self.sy = np.array([[0, 0.5j], [-0.5j, 0]], dtype=complex)
        self.raising = np.array([[0, 0], [1, 0]], dtype=complex)
        self.lowering = self.raising.conj().T
        self.identity = np.eye(2, dtype=complex)
        self.p0 = np.diag([1.0, 0.0]).astype(complex)
        self.p1 = np.diag([0.0, 1.0]).astype(complex)


def qubit_operators() -> QubitOperators:
    return QubitOperators()
